"""Normal momentum-flux pairing approaching the wall pressure as h -> 0.

For Stokes flow the pressure is harmonic, so filtering leaves it unchanged
and the whole gap comes from the distance between the window and the wall.
It therefore shrinks like ``h``.
"""

from wallcascade.fields import StokesSphere
from wallcascade.sections import normal_section
from wallcascade.sweeps import SweepPlan, dyadic, run_scale_sweep


def main():
    field = StokesSphere(nu=1.0)
    sec = normal_section(field.body, m=(1, 0, 0))
    res = run_scale_sweep(field, sec, SweepPlan(eps=0.45, h_grid=dyadic(0.45, 2, 8)))
    print(f"target <p_w n, psi> = {res.target:.10f}")
    for h, val, gap in zip(res.h, res.pairings, res.relative_gaps):
        print(f"h = {h:.6f}   pairing {val.value:.10f}   relative gap {gap:.3e}")
    print(f"fitted exponent {res.fit.exponent:.3f} +- {res.fit.stderr:.3f}")


if __name__ == "__main__":
    main()
