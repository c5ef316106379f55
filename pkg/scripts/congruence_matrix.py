"""Pairwise congruence verdicts for the unitary family at several moduli and phases."""

import numpy as np

from isoball.solver import UnitarySolvedMap, u_zeta
from isoball.verify import congruence_test

SHORT = {"congruent": "C", "incongruent": ".", "inconclusive": "?"}


def main():
    params = [r * np.exp(1j * t) for r in (0.1, 0.2, 0.25, 0.3) for t in (0.0, 1.3, 2.9)]
    maps = [UnitarySolvedMap(u_zeta(z)) for z in params]
    labels = [f"{abs(z):.2f}@{np.angle(z):+.1f}" for z in params]
    print(" " * 11 + " ".join(f"{i:>2d}" for i in range(len(maps))))
    for i, f in enumerate(maps):
        row = [SHORT[congruence_test(f, g).verdict] for g in maps]
        print(f"{i:2d} {labels[i]:>8s} " + " ".join(f"{c:>2s}" for c in row))
    print("C congruent, . incongruent, ? inconclusive")


if __name__ == "__main__":
    main()
