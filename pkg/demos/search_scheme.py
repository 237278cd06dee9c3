"""Search for a three-stage second-order scheme and certify it exactly.

The optimizer works in floating point with a barrier that keeps the
stability diagonal away from zero. The result is then rationalized so the
order conditions hold exactly, and re-certified. Two stages cannot reach
second order, which the second search confirms.
"""

from minmove import certify
from minmove.search import SearchConfig, describe, find_scheme


def main():
    res = find_scheme(SearchConfig(stages=3, target_order=2, seed=0))
    print(describe(res))
    if res.certified:
        cert = certify(res.gamma_rational, 2)
        print("exact verdict:", cert.verdict)
        print("diagonal:", [str(d) for d in cert.certificate.diagonal])

    two = find_scheme(SearchConfig(stages=2, target_order=2, seed=0, n_starts=4))
    print(f"two stages: certified={two.certified}, best objective={two.objective:.3e}")


if __name__ == "__main__":
    main()
