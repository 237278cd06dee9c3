"""Convergence study and energy trace for the scalar flow u' = -sinh(u).

Errors against the closed-form solution are measured at t = 2. Halving the
step should divide the error by 4 for the second-order scheme and by 8 for
the third-order one. The energy cosh(u) decreases at every step.
"""

from minmove.harness import RunConfig, run_convergence, run_energy_trace


def main():
    for scheme in ("builtin:second_order_a", "builtin:third_order"):
        report = run_convergence(RunConfig("ode_cosh", scheme, levels=[16, 32, 64, 128, 256]))
        print(scheme)
        print(report.to_csv())

    trace = run_energy_trace(RunConfig("ode_cosh", "builtin:third_order", levels=[16]))
    print("energy trace, third order, 16 steps (monotone: %s)" % trace.monotone)
    print(trace.to_csv())


if __name__ == "__main__":
    main()
