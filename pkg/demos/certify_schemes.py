"""Certify the built-in schemes in exact rational arithmetic.

For each scheme this prints the stability diagonal (every entry must be
strictly positive) and the final beta values, then the order the scheme
reaches. Nothing here touches floating point.
"""

from minmove import builtin, certify
from minmove.coefficients import BUILTIN_NAMES


def main():
    for name in BUILTIN_NAMES:
        gamma = builtin(name)
        cert = certify(gamma, 1)
        # exact fractions grow long; the sign test itself is exact
        diag = ", ".join(f"{float(d):.6g}" for d in cert.certificate.diagonal)
        betas = ", ".join(str(b) for b in cert.report.final)
        print(f"{name} ({gamma.stages} stages)")
        print(f"  stability diagonal (rounded): {diag}")
        print(f"  betas: {betas}")
        print(f"  achieved order: {cert.report.achieved_order}, stable: {cert.certificate.stable}")


if __name__ == "__main__":
    main()
