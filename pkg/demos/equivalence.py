"""Normal-cone test against empirical strong invariance on three scenarios.

On the linear contraction and expansion both tests agree. On the
sign-switching inclusion, which lacks the regularity the converse needs,
the normal-cone test fails while every trajectory
stays in S, and the suite labels this an expected divergence.
"""

from stronginv.invariance import equivalence_suite
from stronginv.scenarios import get_scenario


def main():
    for name in ("contraction", "expansion", "intro"):
        sc = get_scenario(name)
        rep = equivalence_suite(sc.F, sc.S, sc.provider(), sc.starts, sc.horizon, usharp=sc.usharp)
        print("%-12s normal-cone=%-4s empirical=%-4s label=%s"
              % (name, rep.normal_cone.verdict, rep.empirical.verdict, rep.label))


if __name__ == "__main__":
    main()
