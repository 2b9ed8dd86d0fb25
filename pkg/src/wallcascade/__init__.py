"""Near-wall momentum budgets for flow around a smooth body.

Modules
-------
geometry   surfaces, signed distance, projections and quadratures
fields     analytic, manufactured and sampled flow fields
filtering  mollifier and wall window
sections   wall test sections and their interior extensions
budgets    wall pairings, weak identities and windowed budgets
sweeps     scale and viscosity sweeps, rate fits, near-wall norms
cli        JSON-configured command line
"""

__version__ = "0.1.0"
