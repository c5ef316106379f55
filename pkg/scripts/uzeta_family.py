"""Solve the explicit 3x3 unitary family over a range of |zeta| and tabulate residuals and R data."""

import argparse

import numpy as np

from isoball.solver import UnitarySolvedMap, blaschke_factorize, inverse_identity_residual, solve_isometry, u_zeta
from isoball.verify import check_properness, check_series_solution, critical_configuration


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--order", type=int, default=64)
    parser.add_argument("--steps", type=int, default=7)
    args = parser.parse_args()
    print("|zeta|  deg_R  pointwise  R(f1)=w   alpha0   moduli             crit.dist  1-m(0.999)")
    for r in np.linspace(0.0, 0.3, args.steps):
        U = u_zeta(r)
        sol = solve_isometry(U, args.order)
        point = check_series_solution(sol).max_residual
        if sol.degenerate:
            print(f"{r:6.3f}  degenerate (f1 = 0)  pointwise {point:.1e}")
            continue
        form = blaschke_factorize(sol.R)
        conf = critical_configuration(sol.R)
        dist = conf["point_distances"][0][2] if conf["point_distances"] else float("nan")
        m = UnitarySolvedMap(U)
        prop = check_properness(lambda w: m(w)[..., 1:])
        moduli = ", ".join(f"{x:.4f}" for x in form.moduli())
        print(f"{r:6.3f}  {sol.R.degree:5d}  {point:9.1e}  {inverse_identity_residual(sol.R, sol.f1):8.1e}"
              f"  {abs(form.alpha0):7.4f}  [{moduli:16s}]  {dist:9.4f}  {prop.final_gap:.1e}")


if __name__ == "__main__":
    main()
