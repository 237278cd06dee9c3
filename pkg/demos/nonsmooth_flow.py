"""A flow driven by a piecewise-linear energy.

The prox of this energy is computed in closed form. Because the solution has
kinks in time, no scheme beats first order on average, but the energy still
never increases.
"""

import numpy as np

from minmove import builtin, integrate
from minmove.problems import get_problem


def main():
    p = get_problem("ode_nonsmooth")
    levels = [2 ** j for j in range(3, 13)]
    for name in ("second_order_a", "third_order"):
        errors = []
        for n in levels:
            tr = integrate(p, builtin(name), p.initial_state(), p.T / n, n, keep_states=False)
            errors.append(p.error(tr.final, p.exact(p.T)))
        slope = -np.polyfit(np.log2(levels), np.log2(errors), 1)[0]
        print(f"{name}: least-squares order {slope:.2f}")
        for n, e in zip(levels, errors):
            print(f"  {n:5d} steps  error {e:.3e}")

    tr = integrate(p, builtin("third_order"), p.initial_state(), p.T / 16, 16)
    print("third order, 16 steps, energies:")
    print(np.array2string(tr.energies, precision=6))


if __name__ == "__main__":
    main()
