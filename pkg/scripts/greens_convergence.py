"""Retarded Green's function of the 1+1 wave operator under grid refinement.

Compares a lattice point source against -1/2 on the future cone and a smooth
bump source against its quadrature solution, printing sup errors and orders.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from peierls_lab import lagrangian as lg
from peierls_lab.fields import bump_array
from peierls_lab.suites import square_grid

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from oracles import retarded_bump_solution  # noqa: E402


def point_error(n, cfl):
    st = square_grid(n, cfl)
    op = lg.linearize(lg.free_field(st), np.zeros(st.shape))
    i0, j0 = n // 8, n // 2
    v = np.zeros(st.shape)
    v[i0, j0] = 1.0 / st.cell_area
    u = op.delta_ret(v)
    t, x = st.coords()
    s, d = t - t[i0, 0], np.abs(x - x[0, j0])
    interior = (s > 0.1) & (np.abs(d - s) > 0.1) & (s < 0.45)
    return float(np.abs(u + 0.5 * ((s > 0) & (d <= s)))[interior].max())


def bump_error(n, cfl, centre=(0.2, 0.5), radius=(0.1, 0.1)):
    st = square_grid(n, cfl)
    op = lg.linearize(lg.free_field(st), np.zeros(st.shape))
    b = bump_array(st, centre, radius)
    u = op.delta_ret(b / (b.sum() * st.cell_area))
    # coarse-grid nodes shared by every refinement
    r = n // 32
    t, x = st.coords()
    got, exact = [], []
    for j in range(8, st.nt // r - 2, 4):
        for i in range(0, 32, 3):
            got.append(u[j * r, i * r])
            exact.append(retarded_bump_solution(t[j * r, 0], x[0, i * r], centre, radius))
    return float(np.abs(np.array(got) - np.array(exact)).max())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cfl", type=float, default=0.5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    args = ap.parse_args(argv)
    for name, fn in (("point", point_error), ("bump", bump_error)):
        errs = np.array([fn(n, args.cfl) for n in args.sizes])
        orders = np.log2(errs[:-1] / errs[1:])
        print(f"{name:6s} errors {np.array2string(errs, precision=3)}  orders {np.array2string(orders, precision=2)}")


if __name__ == "__main__":
    main()
