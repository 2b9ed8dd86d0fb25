"""Skin and form drag on a sphere for potential flow and Stokes flow.

Run with ``python3 demos/drag_decomposition.py``.  The drag-aligned sections
are weighted in time by the bump ``beta``, so every pairing carries a factor
``int beta dt``.
"""

import numpy as np

from wallcascade.budgets import drag_decomposition
from wallcascade.fields import PotentialSphere, StokesSphere
from wallcascade.profiles import TimeBump


def main():
    t, w = TimeBump(1.0).gauss_rule(64)
    beta = float(w @ TimeBump(1.0).value(t))
    pot = drag_decomposition(PotentialSphere())
    print(f"potential flow   form {pot['form']: .3e}   skin {pot['skin']: .3e}   (no drag)")
    print("Stokes drag in units of pi nu U a int(beta):")
    for nu in (0.1, 0.5, 1.0):
        d = drag_decomposition(StokesSphere(nu=nu))
        scale = np.pi * nu * beta
        print(
            f"Stokes nu={nu:<4}  form {d['form'] / scale:8.5f}   "
            f"skin {d['skin'] / scale:8.5f}   total {d['total'] / scale:8.5f}"
        )


if __name__ == "__main__":
    main()
