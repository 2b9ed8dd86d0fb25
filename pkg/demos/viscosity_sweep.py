"""Wall shear pairing along two boundary-layer families.

With ``delta = sqrt(nu)`` the shear pairing falls like ``nu^(1/2)``; with
``delta = nu`` it settles on a nonzero limit, and the forcing pairing shows
which of the two families keeps a body force at the wall.
"""

from wallcascade.fields import BoundaryLayerFamily
from wallcascade.geometry import Sphere
from wallcascade.sections import tangential_section
from wallcascade.sweeps import SweepPlan, fit_rate, run_viscosity_sweep


def main():
    psi = tangential_section(Sphere(), b=(1, 0, 0))
    plan = SweepPlan(eps=0.45)
    for label, exponent in (("delta = sqrt(nu)", 0.5), ("delta = nu", 1.0)):
        res = run_viscosity_sweep(lambda nu: BoundaryLayerFamily(nu, exponent), plan, psi, with_forcing=True)
        print(label)
        for nu, tau, g in zip(res.nu, res.shear, res.forcing):
            print(f"  nu = {nu:.3e}   shear pairing {tau: .6e}   forcing pairing {g: .6e}")
        print(f"  shear exponent {res.fit.exponent:.3f}, forcing exponent {fit_rate(res.nu, res.forcing).exponent:.3f}")


if __name__ == "__main__":
    main()
