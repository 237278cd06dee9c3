"""Second-order semi-implicit BDF reference solver for periodic phase-field flows.

For ``u_t = -A u - B N(u)`` with Fourier symbols ``A``, ``B``::

    (3/2 + k A) u^{n+1} = 2 u^n - u^{n-1}/2 - k B [2 N(u^n) - N(u^{n-1})]

Only used to manufacture reference solutions when no exact one exists.
"""

from __future__ import annotations

import numpy as np

from ..coefficients import builtin
from ..flow import Trajectory, integrate

__all__ = ["reference_semi_implicit"]


def reference_semi_implicit(problem, k: float, n_steps: int, u0=None, bootstrap_substeps: int = 100,
                            record_energy: bool = False) -> Trajectory:
    """Run the BDF2 semi-implicit scheme for ``n_steps`` steps of size ``k``.

    ``u^1`` comes from ``bootstrap_substeps`` steps of the second-order
    multi-stage scheme with step ``k / bootstrap_substeps``.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    grid = problem.grid
    A, B, N = problem.semi_implicit_split()
    u_prev = problem.initial_state() if u0 is None else np.asarray(u0, dtype=float)
    energies = [problem.energy(u_prev)] if record_energy else []
    boot = integrate(problem, builtin("second_order_a"), u_prev, k / bootstrap_substeps,
                     bootstrap_substeps, keep_states=False, strict=False)
    u = boot.final
    if record_energy:
        energies.append(problem.energy(u))

    lhs = 1.5 + k * A
    uh_prev, uh = grid.fft(u_prev), grid.fft(u)
    N_prev, N_cur = grid.fft(N(u_prev)), grid.fft(N(u))
    for _ in range(n_steps - 1):
        uh_new = (2.0 * uh - 0.5 * uh_prev - k * B * (2.0 * N_cur - N_prev)) / lhs
        u = grid.ifft(uh_new)
        uh_prev, uh = uh, uh_new
        N_prev, N_cur = N_cur, grid.fft(N(u))
        if record_energy:
            energies.append(problem.energy(u))
    u0_arr = problem.initial_state() if u0 is None else np.asarray(u0, dtype=float)
    return Trajectory(
        times=k * np.arange(n_steps + 1),
        energies=np.array(energies),
        states=[u0_arr, u],
        max_residuals=np.zeros(0),
        prox_iterations=np.zeros(0, dtype=int),
        violations=[],
    )
