"""Linear second-order operators on the grid and their propagators.

An operator is stored as ``Hd``: the sparse matrix mapping a field to a
density (for a linearized Euler-Lagrange operator, the action Hessian
divided by the cell area).  The field-valued operator is ``P = Hd / mu``
with ``mu = sqrt|det g|``.  Every stencil couples slice ``i`` only to slices
``i - 1``, ``i``, ``i + 1``; row ``i`` is written

    C_i phi_{i-1} + A_i phi_i + B_i phi_{i+1} = v_i

and solved slice by slice for the newest level.  All propagators take
density sources and return fields.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import values_of
from .geometry import (
    GridSpacetime,
    MetricField,
    characteristic_speeds,
    metric_order_leq,
    metric_order_violations,
)

CFL_TOL = 1e-12


class NotHyperbolic(ValueError):
    """The operator fails normal hyperbolicity or the CFL bound."""


@dataclass(frozen=True)
class CauchyData:
    """Restriction and normal derivative on the slice ``index``."""

    index: int
    phi0: np.ndarray
    phi1: np.ndarray


class _Block:
    """Solver for one slice block; elementwise when the block is diagonal."""

    def __init__(self, M: np.ndarray):
        off = M - np.diag(np.diag(M))
        self.diagonal = not np.any(off)
        if self.diagonal:
            self.d = np.diag(M).copy()
            if np.any(self.d == 0):
                raise NotHyperbolic("singular diagonal time block")
        else:
            self.lu = sla.lu_factor(M)
        self.M = M

    def solve(self, rhs):
        if self.diagonal:
            return rhs / self.d
        return sla.lu_solve(self.lu, rhs)

    def solve_t(self, rhs):
        if self.diagonal:
            return rhs / self.d
        return sla.lu_solve(self.lu, rhs, trans=1)


@dataclass(eq=False)
class LinearHypOp:
    """Second-order stencil operator ``Hd`` with slice-block solvers.

    ``reference`` is the metric whose cones must contain the symbol cones
    (the background metric unless a caller supplies another one).
    """

    grid: GridSpacetime
    Hd: sp.csr_matrix
    reference: Optional[MetricField] = None
    variational: bool = True
    name: str = "operator"
    _blocks: dict = field(default_factory=dict, repr=False)
    _sym: Optional[tuple] = field(default=None, repr=False)
    _hyp: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        N = self.grid.size
        self.Hd = sp.csr_matrix(self.Hd)
        if self.Hd.shape != (N, N):
            raise ValueError("operator shape does not match grid")
        if self.reference is None:
            self.reference = self.grid.metric
        nt, nx = self.grid.shape
        dense = [[None] * 3 for _ in range(nt)]
        # slice blocks: [C_i, A_i, B_i]
        for i in range(nt):
            rows = self.Hd[i * nx:(i + 1) * nx]
            for k, j in enumerate((i - 1, i, i + 1)):
                if 0 <= j < nt:
                    dense[i][k] = rows[:, j * nx:(j + 1) * nx].toarray()
            for j in range(nt):
                if abs(j - i) > 1 and rows[:, j * nx:(j + 1) * nx].nnz:
                    if np.any(rows[:, j * nx:(j + 1) * nx].data):
                        raise ValueError("stencil reaches beyond neighbouring slices")
        self._dense = dense

    # basic structure -----------------------------------------------------------
    @property
    def mu(self) -> np.ndarray:
        return self.grid.metric.sqrt_abs_det

    def C(self, i):
        return self._dense[i][0]

    def A(self, i):
        return self._dense[i][1]

    def B(self, i):
        return self._dense[i][2]

    def _solver(self, kind: str, i: int) -> _Block:
        key = (kind, i)
        blk = self._blocks.get(key)
        if blk is None:
            if kind == "B":
                blk = _Block(self.B(i))
            elif kind == "C":
                blk = _Block(self.C(i))
            elif kind == "BC":
                blk = _Block(self.B(i) + self.C(i))
            else:
                raise KeyError(kind)
            self._blocks[key] = blk
        return blk

    def explicit(self) -> bool:
        """True when every forward block is diagonal (exact finite propagation)."""
        return all(self._solver("B", i).diagonal for i in range(1, self.grid.nt - 1))

    def apply_density(self, phi) -> np.ndarray:
        return (self.Hd @ np.asarray(values_of(phi), float).ravel()).reshape(self.grid.shape)

    def apply(self, phi) -> np.ndarray:
        """P phi as a field: Hd phi / mu."""
        return self.apply_density(phi) / self.mu

    def residual_rows(self, phi, source) -> np.ndarray:
        """Hd phi - source on the interior slices 1..nt-2."""
        r = self.apply_density(phi) - np.asarray(values_of(source), float)
        return r[1:-1]

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        D = self.Hd - self.Hd.T
        if D.nnz == 0:
            return True
        return bool(abs(D).max() <= tol * abs(self.Hd).max())

    # symbol ------------------------------------------------------------------------
    def symbol(self):
        """(ghat_inv, A, B): stencil moments of P at every node.

        ghat_inv is a MetricField of contravariant components; A is the
        first-moment vector field (t, x) and B the zeroth moment.  Nodes on
        the first and last slices copy their neighbours.
        """
        if self._sym is not None:
            return self._sym
        st = self.grid
        nt, nx = st.shape
        H = self.Hd.tocoo()
        r_t, r_x = np.divmod(H.row, nx)
        c_t, c_x = np.divmod(H.col, nx)
        d_t = (c_t - r_t) * st.dt
        dxi = c_x - r_x
        dxi = np.where(dxi > nx // 2, dxi - nx, np.where(dxi < -(nx // 2), dxi + nx, dxi))
        d_x = dxi * st.dx
        w = H.data / self.mu.ravel()[H.row]

        def acc(vals):
            return np.bincount(H.row, weights=vals, minlength=st.size).reshape(st.shape)

        tt = 0.5 * acc(w * d_t * d_t)
        tx = 0.5 * acc(w * d_t * d_x)
        xx = 0.5 * acc(w * d_x * d_x)
        At, Ax = acc(w * d_t), acc(w * d_x)
        B0 = acc(w)
        for arr in (tt, tx, xx, At, Ax, B0):
            arr[0] = arr[1]
            arr[-1] = arr[-2]
        self._sym = (MetricField(tt, tx, xx), (At, Ax), B0)
        return self._sym

    def symbol_metric(self) -> MetricField:
        """ghat on vectors (inverse of the extracted contravariant symbol)."""
        ginv = self.symbol()[0]
        if not ginv.is_lorentzian():
            bad = np.argwhere(ginv.det >= 0)[0]
            raise NotHyperbolic(f"symbol not Lorentzian at node ({bad[0]}, {bad[1]})")
        return ginv.inverse()

    def hyperbolicity(self) -> dict:
        """Normal hyperbolicity diagnostics: Lorentzian symbol, time orientation,
        cone containment in the reference metric, and the CFL number."""
        ginv = self.symbol()[0]
        out = {"lorentzian": bool(ginv.is_lorentzian()), "time_function": bool(np.all(ginv.tt < 0))}
        bad = None
        if not out["lorentzian"]:
            bad = tuple(int(v) for v in np.argwhere(ginv.det >= 0)[0])
        elif not out["time_function"]:
            bad = tuple(int(v) for v in np.argwhere(ginv.tt >= 0)[0])
        if bad is None:
            ghat = ginv.inverse()
            out["inside_reference"] = metric_order_leq(self.grid, ghat, self.reference)
            if ghat.xx.min() > 0:
                lo, hi = characteristic_speeds(ghat)
                out["cfl"] = float(max(np.abs(lo).max(), np.abs(hi).max()) * self.grid.dt / self.grid.dx)
            else:
                out["cfl"] = float("inf")
            if not out["inside_reference"]:
                bad = _first_cone_violation(self.grid, ghat, self.reference)
        else:
            out["inside_reference"] = False
            out["cfl"] = float("inf")
        out["first_bad_node"] = bad
        out["ok"] = bool(out["lorentzian"] and out["time_function"] and out["inside_reference"]
                         and out["cfl"] <= 1 + CFL_TOL)
        return out

    def require_hyperbolic(self):
        if self._hyp is None:
            self._hyp = self.hyperbolicity()
        h = self._hyp
        if not h["ok"]:
            if h["first_bad_node"] is not None:
                raise NotHyperbolic(f"normal hyperbolicity fails at node {h['first_bad_node']}")
            raise NotHyperbolic(f"CFL number {h['cfl']:.6g} exceeds 1")
        return h

    # marching -------------------------------------------------------------------------
    def _src(self, source) -> np.ndarray:
        v = np.asarray(values_of(source), float)
        if v.shape != self.grid.shape:
            raise ValueError("source shape does not match grid")
        return v

    def march_forward(self, phi: np.ndarray, v: np.ndarray, start_row: int):
        """Fill slices start_row+1 .. nt-1 from rows start_row .. nt-2 in place."""
        for i in range(start_row, self.grid.nt - 1):
            rhs = v[i] - self.A(i) @ phi[i]
            if i > 0:
                rhs = rhs - self.C(i) @ phi[i - 1]
            phi[i + 1] = self._solver("B", i).solve(rhs)
        return phi

    def march_backward(self, phi: np.ndarray, v: np.ndarray, start_row: int, stop_row: int = 1):
        """Fill slices start_row-1 .. stop_row-1 from rows start_row .. stop_row in place."""
        nt = self.grid.nt
        for i in range(start_row, stop_row - 1, -1):
            rhs = v[i] - self.A(i) @ phi[i]
            if i + 1 < nt:
                rhs = rhs - self.B(i) @ phi[i + 1]
            phi[i - 1] = self._solver("C", i).solve(rhs)
        return phi

    def delta_ret(self, source) -> np.ndarray:
        """Retarded solution of Hd phi = v on rows 1..nt-2 with phi = 0 on slices 0, 1."""
        self.require_hyperbolic()
        v = self._src(source)
        phi = np.zeros(self.grid.shape)
        return self.march_forward(phi, v, 1)

    def delta_adv(self, source) -> np.ndarray:
        """Transpose of delta_ret under the pairing.

        Solves the transposed block system backward: rows nt-1..2 determine
        slices nt-2..1; slices 0 and nt-1 stay zero.
        """
        self.require_hyperbolic()
        v = self._src(source)
        nt = self.grid.nt
        phi = np.zeros(self.grid.shape)
        # row i of the transposed system reads B_{i-1}^T y_{i-1} + A_i^T y_i + C_{i+1}^T y_{i+1}
        for i in range(nt - 1, 1, -1):
            rhs = v[i] - self.A(i).T @ phi[i]
            if i + 1 < nt:
                rhs = rhs - self.C(i + 1).T @ phi[i + 1]
            phi[i - 1] = self._solver("B", i - 1).solve_t(rhs)
        return phi

    def backward_solve(self, source) -> np.ndarray:
        """Independent advanced solve: Hd phi = v on rows 1..nt-2 with phi = 0 on the last two slices."""
        self.require_hyperbolic()
        v = self._src(source)
        phi = np.zeros(self.grid.shape)
        return self.march_backward(phi, v, self.grid.nt - 2, 1)

    def causal(self, source) -> np.ndarray:
        return self.delta_ret(source) - self.delta_adv(source)

    # Cauchy problems ---------------------------------------------------------------------
    def normal(self, s: int):
        """Future unit normal components (n^t, n^x) along slice s."""
        gi = self.grid.metric.inverse()
        ntt = np.sqrt(-gi.tt[s])
        return ntt, -gi.tx[s] / ntt

    def solve_cauchy(self, data: CauchyData, source=None) -> np.ndarray:
        """Solve Hd phi = v on rows 1..nt-2 with phi_s = phi0 and discrete normal derivative phi1.

        The normal derivative is n^t (phi_{s+1} - phi_{s-1}) / (2 dt) + n^x D_x phi_s.
        """
        st = self.grid
        s = data.index
        if not 1 <= s <= st.nt - 2:
            raise ValueError(f"Cauchy slice must lie in 1..{st.nt - 2}, got {s}")
        self.require_hyperbolic()
        v = np.zeros(st.shape) if source is None else self._src(source)
        a = np.asarray(data.phi0, float)
        b = np.asarray(data.phi1, float)
        n_t, n_x = self.normal(s)
        dxa = (np.roll(a, -1) - np.roll(a, 1)) / (2 * st.dx)
        q = (b - n_x * dxa) / n_t
        phi = np.zeros(st.shape)
        phi[s] = a
        rhs = v[s] - self.A(s) @ a + 2 * st.dt * (self.C(s) @ q)
        phi[s + 1] = self._solver("BC", s).solve(rhs)
        phi[s - 1] = phi[s + 1] - 2 * st.dt * q
        self.march_forward(phi, v, s + 1)
        self.march_backward(phi, v, s - 1, 1)
        return phi

    def cauchy_data(self, phi, s: int) -> CauchyData:
        """Restriction operators applied to a field."""
        st = self.grid
        phi = np.asarray(values_of(phi), float)
        n_t, n_x = self.normal(s)
        dxa = (np.roll(phi[s], -1) - np.roll(phi[s], 1)) / (2 * st.dx)
        return CauchyData(s, phi[s].copy(), n_t * (phi[s + 1] - phi[s - 1]) / (2 * st.dt) + n_x * dxa)

    def k_propagator(self, j: int, s: int, datum) -> np.ndarray:
        z = np.zeros(self.grid.nx)
        if j == 0:
            return self.solve_cauchy(CauchyData(s, np.asarray(datum, float), z))
        if j == 1:
            return self.solve_cauchy(CauchyData(s, z, np.asarray(datum, float)))
        raise ValueError("j must be 0 or 1")

    def delta_sigma(self, s: int, source) -> np.ndarray:
        z = np.zeros(self.grid.nx)
        return self.solve_cauchy(CauchyData(s, z, z), source)

    # matrices ----------------------------------------------------------------------------
    def propagator_matrix(self, which: str = "ret") -> np.ndarray:
        """Dense nodal matrix of a propagator (columns are responses to unit densities)."""
        st = self.grid
        if st.size > 64 * 64:
            raise ValueError("dense export limited to grids of at most 64 x 64 nodes")
        fn = {"ret": self.delta_ret, "adv": self.delta_adv, "causal": self.causal}[which]
        out = np.zeros((st.size, st.size))
        e = np.zeros(st.size)
        for k in range(st.size):
            e[k] = 1.0
            out[:, k] = fn(e.reshape(st.shape)).ravel()
            e[k] = 0.0
        return out

    def sparse_adv_solve(self, source) -> np.ndarray:
        """Advanced solve through a sparse direct factorization of the full system."""
        st = self.grid
        nt, nx = st.shape
        v = self._src(source)
        rows = np.arange(nx, (nt - 1) * nx)
        cols = np.arange(0, (nt - 2) * nx)
        M = self.Hd[rows][:, cols].tocsc()
        sol = spla.spsolve(M, v[1:-1].ravel())
        phi = np.zeros(st.shape)
        phi[: nt - 2] = sol.reshape(nt - 2, nx)
        return phi


def _first_cone_violation(st, g1, g2):
    bad = np.argwhere(metric_order_violations(st, g1, g2))
    return tuple(int(v) for v in bad[0]) if bad.size else None


def from_stencil_field(st: GridSpacetime, Hd, reference=None, name="operator") -> LinearHypOp:
    return LinearHypOp(st, sp.csr_matrix(Hd), reference=reference, name=name)


def pair_matrix(op: LinearHypOp, which: str = "ret") -> np.ndarray:
    """Matrix of the bilinear form (f, h) -> pair(f, propagator h) on unit densities."""
    return op.propagator_matrix(which) * op.grid.cell_area


def reconstruct_solution(op: LinearHypOp, u, s: int, width: int = 2):
    """Density v with delta(v) = u for a solution u of the homogeneous equation.

    Uses the cutoff chi1 = 1 on slices >= s (a sharp step, so the collar is
    the stencil width around s): v = Hd(chi1 u) - chi1 Hd(u).
    """
    st = op.grid
    u = np.asarray(values_of(u), float)
    chi1 = np.zeros(st.shape)
    chi1[s:] = 1.0
    v = op.apply_density(chi1 * u) - chi1 * op.apply_density(u)
    collar = np.zeros(st.shape, bool)
    collar[max(s - width, 0):min(s + width, st.nt)] = True
    v[~collar] = 0.0
    return v


def resolvent_check(family: Callable[[float], LinearHypOp], source, which: str = "ret", lam0: float = 0.0,
                    step: float = 1e-3, s: Optional[int] = None):
    """Finite-difference derivative in lambda of a propagator against the resolvent formula.

    Returns (fd, formula, relative residual) with the finite difference
    Richardson-extrapolated from steps ``step`` and ``step / 2``.
    """
    v = np.asarray(values_of(source), float)
    P0 = family(lam0)
    st = P0.grid
    if s is None:
        s = st.nt // 2

    def solve(op):
        if which == "ret":
            return op.delta_ret(v)
        if which == "adv":
            return op.delta_adv(v)
        if which == "sigma":
            return op.delta_sigma(s, v)
        if which == "K0":
            return op.k_propagator(0, s, v[s])
        if which == "K1":
            return op.k_propagator(1, s, v[s])
        raise ValueError(which)

    def central(h):
        return (solve(family(lam0 + h)) - solve(family(lam0 - h))) / (2 * h)

    fd = (4 * central(step / 2) - central(step)) / 3
    Pdot = _hd_derivative(family, lam0, step)
    base = solve(P0)
    inner = (Pdot @ base.ravel()).reshape(st.shape)
    if which == "ret":
        formula = -P0.delta_ret(inner)
    elif which == "adv":
        formula = -P0.delta_adv(inner)
    else:
        formula = -P0.delta_sigma(s, inner)
    scale = max(np.abs(fd).max(), np.abs(formula).max(), 1e-300)
    return fd, formula, float(np.abs(fd - formula).max() / scale)


def _hd_derivative(family, lam0, step):
    """d Hd / d lambda by Richardson-extrapolated central differences of the stencil."""

    def central(h):
        return (family(lam0 + h).Hd - family(lam0 - h).Hd) / (2 * h)

    return ((4 * central(step / 2) - central(step)) / 3).tocsr()
