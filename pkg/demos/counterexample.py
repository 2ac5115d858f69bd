"""Why the Hamiltonian test must hold on a neighbourhood, not only on the boundary.

F = {1} with Psi = x**2 and S = {0}: the inequality H(x, grad Psi) <= 0 holds
at the single boundary point but fails at every x > 0 nearby, and indeed
trajectories leave S immediately.
"""

from stronginv.invariance import GridRegion, PointsRegion, certify_hamiltonian
from stronginv.scenarios import get_scenario


def main():
    sc = get_scenario("counterexample31")
    for label, region in (("boundary {0}", PointsRegion([[0.0]])),
                          ("grid on (-0.1, 0.1)", GridRegion((-0.1,), (0.1,), 21))):
        cert = certify_hamiltonian(sc.F, sc.psi, region)
        print("%-22s verdict=%-4s max margin=%.3g" % (label, cert.verdict, cert.max_margin))


if __name__ == "__main__":
    main()
