"""Plug a new energy into the schemes.

A problem only needs ``energy`` and ``gradient``; the generic Newton-Krylov
prox solver handles each stage. Here the energy is a nonconvex quartic well
per component. The flow moves each component toward the well at -1 or +1,
and the energy decreases at every step even when the step is large.
"""

import numpy as np

from minmove import FlowProblem, builtin, integrate


class QuarticWells(FlowProblem):
    """E(u) = sum (u^2 - 1)^2 / 4."""

    def energy(self, u):
        return 0.25 * float(np.sum((u * u - 1.0) ** 2))

    def gradient(self, u):
        return u ** 3 - u

    def hess_vec(self, u, v):
        return (3.0 * u * u - 1.0) * v


def main():
    p = QuarticWells()
    u0 = np.array([-1.8, -0.2, 0.05, 0.7, 2.5])
    for k in (0.1, 10.0):
        tr = integrate(p, builtin("third_order"), u0, k, 20)
        print(f"k = {k}: final state {np.round(tr.final, 6)}, monotone: {tr.monotone}")
        print("  energies:", np.array2string(tr.energies[:6], precision=5), "...")


if __name__ == "__main__":
    main()
