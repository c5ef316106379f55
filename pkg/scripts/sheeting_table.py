"""Sheeting data (n, s_j) and the identity flags for catalog forms with p <= 4."""

import time

from isoball.maps import catalog_construct, catalog_forms
from isoball.monodromy import sheeting_report

PARAMS = {"pth-root": [3], "diagonal": [3], "sqrt-chain": [4], "equal-branching": [1, 2, 1]}


def main():
    print(f"{'form':16s} {'p':>2s} {'k':>4s} {'n':>3s}  {'s':16s} identities  seconds")
    for form in sorted(catalog_forms()):
        if form.startswith("bidisk") and form != "bidisk-4":
            continue
        f = catalog_construct(form, PARAMS.get(form, []))
        t = time.perf_counter()
        rep = sheeting_report(f)
        flags = "ok" if all(rep.identities.values()) else str(rep.identities)
        print(f"{form:16s} {rep.p:2d} {rep.k:4.1f} {str(rep.n):>3s}  {str(rep.s):16s} {flags:10s}  "
              f"{time.perf_counter() - t:.1f}")


if __name__ == "__main__":
    main()
