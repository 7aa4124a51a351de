"""Discrete 1+1 globally hyperbolic spacetimes.

The lattice is ``nt`` time slices by ``nx`` periodic space nodes.  Future is
increasing time index.  Metrics are stored per node as the three independent
components ``(g_tt, g_tx, g_xx)`` of the metric acting on vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

NULL_TOL = 1e-12
ORDER_TOL = 1e-12

COVECTOR_CLASSES = (
    "future-timelike",
    "past-timelike",
    "future-null",
    "past-null",
    "spacelike",
)


class GeometryError(ValueError):
    """Invalid grid, metric or cone query."""


@dataclass(frozen=True)
class MetricField:
    """Per-node symmetric 2x2 metric on vectors, components (tt, tx, xx)."""

    tt: np.ndarray
    tx: np.ndarray
    xx: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.tt), np.shape(self.tx), np.shape(self.xx)}
        if len(shapes) != 1:
            raise GeometryError(f"metric component shapes differ: {shapes}")
        for name in ("tt", "tx", "xx"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return self.tt.shape

    @property
    def det(self) -> np.ndarray:
        return self.tt * self.xx - self.tx**2

    @property
    def sqrt_abs_det(self) -> np.ndarray:
        return np.sqrt(np.abs(self.det))

    def inverse(self) -> "MetricField":
        d = self.det
        return MetricField(self.xx / d, -self.tx / d, self.tt / d)

    def scaled(self, factor) -> "MetricField":
        return MetricField(factor * self.tt, factor * self.tx, factor * self.xx)

    def is_lorentzian(self) -> bool:
        return bool(np.all(self.det < 0))

    def at(self, it: int, ix: int) -> np.ndarray:
        return np.array(
            [[self.tt[it, ix], self.tx[it, ix]], [self.tx[it, ix], self.xx[it, ix]]]
        )

    @classmethod
    def constant(cls, tt, tx, xx, shape) -> "MetricField":
        return cls(np.full(shape, tt, float), np.full(shape, tx, float), np.full(shape, xx, float))


@dataclass(frozen=True)
class GridSpacetime:
    """Time window x periodic circle, with a Lorentzian metric at every node."""

    nt: int
    nx: int
    dt: float
    dx: float
    metric: MetricField = field(repr=False)

    def __post_init__(self):
        if self.nt < 3 or self.nx < 3:
            raise GeometryError(f"need nt, nx >= 3, got {self.nt}x{self.nx}")
        if not (self.dt > 0 and self.dx > 0):
            raise GeometryError("spacings must be positive")
        if self.metric.shape != (self.nt, self.nx):
            raise GeometryError(
                f"metric shape {self.metric.shape} does not match grid {(self.nt, self.nx)}"
            )
        det = self.metric.det
        if not np.all(np.isfinite(det)):
            raise GeometryError("metric has non-finite entries")
        bad = np.argwhere(det >= 0)
        if bad.size:
            it, ix = bad[0]
            raise GeometryError(f"metric not Lorentzian at node ({it}, {ix})")
        bad = np.argwhere(self.metric.xx <= 0)
        if bad.size:
            it, ix = bad[0]
            raise GeometryError(f"constant-t slice not spacelike at node ({it}, {ix})")

    # constructors ---------------------------------------------------------
    @classmethod
    def minkowski(cls, nt, nx, dt=None, dx=None, speed: float = 1.0) -> "GridSpacetime":
        """Flat metric -dt^2 + dx^2/speed^2 on a grid of unit spatial period by default."""
        dx = 1.0 / nx if dx is None else dx
        dt = dx if dt is None else dt
        return cls(nt, nx, dt, dx, MetricField.constant(-1.0, 0.0, 1.0 / speed**2, (nt, nx)))

    @classmethod
    def conformal(cls, nt, nx, dt, dx, omega2: Union[np.ndarray, Callable]) -> "GridSpacetime":
        """Metric omega2 * diag(-1, 1); omega2 is an array or a function of (t, x)."""
        shape = (nt, nx)
        if callable(omega2):
            t, x = coordinates(nt, nx, dt, dx)
            omega2 = omega2(t, x)
        omega2 = np.broadcast_to(np.asarray(omega2, float), shape)
        return cls(nt, nx, dt, dx, MetricField(-omega2, np.zeros(shape), omega2.copy()))

    @classmethod
    def from_components(cls, nt, nx, dt, dx, tt, tx, xx) -> "GridSpacetime":
        shape = (nt, nx)
        comps = [np.broadcast_to(np.asarray(c, float), shape).copy() for c in (tt, tx, xx)]
        return cls(nt, nx, dt, dx, MetricField(*comps))

    # helpers ----------------------------------------------------------------
    @property
    def shape(self):
        return (self.nt, self.nx)

    @property
    def size(self) -> int:
        return self.nt * self.nx

    @property
    def cell_area(self) -> float:
        return self.dt * self.dx

    @property
    def period(self) -> float:
        return self.nx * self.dx

    def coords(self):
        return coordinates(self.nt, self.nx, self.dt, self.dx)

    def with_metric(self, metric: MetricField) -> "GridSpacetime":
        return GridSpacetime(self.nt, self.nx, self.dt, self.dx, metric)

    def time_reversed(self) -> "GridSpacetime":
        m = self.metric
        return self.with_metric(MetricField(m.tt[::-1], -m.tx[::-1], m.xx[::-1]))

    def check_node(self, it: int, ix: int):
        if not (0 <= it < self.nt and 0 <= ix < self.nx):
            raise GeometryError(f"node ({it}, {ix}) outside {self.nt}x{self.nx} grid")

    def same_as(self, other: "GridSpacetime") -> bool:
        if self is other:
            return True
        return (
            (self.nt, self.nx, self.dt, self.dx) == (other.nt, other.nx, other.dt, other.dx)
            and np.array_equal(self.metric.tt, other.metric.tt)
            and np.array_equal(self.metric.tx, other.metric.tx)
            and np.array_equal(self.metric.xx, other.metric.xx)
        )


def coordinates(nt, nx, dt, dx):
    t = np.arange(nt)[:, None] * dt * np.ones((1, nx))
    x = np.ones((nt, 1)) * np.arange(nx)[None, :] * dx
    return t, x


# covectors ------------------------------------------------------------------
def inverse_quadratic(metric: MetricField, it, ix, xi_t, xi_x):
    """g^{-1}(xi, xi) and g^{-1}(xi, dt) at the given node(s)."""
    det = metric.det[it, ix]
    itt = metric.xx[it, ix] / det
    itx = -metric.tx[it, ix] / det
    ixx = metric.tt[it, ix] / det
    q = itt * xi_t * xi_t + 2 * itx * xi_t * xi_x + ixx * xi_x * xi_x
    orient = itt * xi_t + itx * xi_x
    return q, orient


def classify_covector(st: GridSpacetime, node, xi) -> str:
    """Causal character and time orientation of a covector at a node.

    Null means ``|g^{-1}(xi, xi)| <= 1e-12 |xi|^2``; future means
    ``g^{-1}(xi, dt) < 0``.
    """
    it, ix = node
    st.check_node(it, ix)
    xi_t, xi_x = float(xi[0]), float(xi[1])
    norm2 = xi_t * xi_t + xi_x * xi_x
    if norm2 == 0.0:
        raise GeometryError("zero covector has no causal character")
    q, orient = inverse_quadratic(st.metric, it, ix, xi_t, xi_x)
    if abs(q) <= NULL_TOL * norm2:
        return "future-null" if orient < 0 else "past-null"
    if q > 0:
        return "spacelike"
    return "future-timelike" if orient < 0 else "past-timelike"


# characteristic speeds and the cone sweep -------------------------------------
def characteristic_speeds(metric: MetricField):
    """Slopes dx/dt of the two null directions; requires xx > 0 everywhere."""
    if np.any(metric.xx <= 0):
        raise GeometryError("constant-t slices must be spacelike for a cone sweep")
    disc = np.sqrt(np.maximum(metric.tx**2 - metric.tt * metric.xx, 0.0))
    lo = (-metric.tx - disc) / metric.xx
    hi = (-metric.tx + disc) / metric.xx
    return lo, hi


def _step_reach(st: GridSpacetime, metric: MetricField):
    lo, hi = characteristic_speeds(metric)
    ratio = st.dt / st.dx
    # outward rounding of the characteristic interval to whole cells
    left = np.floor(lo * ratio + 1e-9).astype(int)
    right = np.ceil(hi * ratio - 1e-9).astype(int)
    return left, right


def _resolve_metric(st: GridSpacetime, metric) -> MetricField:
    if metric is None:
        return st.metric
    if isinstance(metric, GridSpacetime):
        return metric.metric
    if isinstance(metric, MetricField):
        if metric.shape != st.shape:
            raise GeometryError("metric selector shape does not match grid")
        if not metric.is_lorentzian():
            raise GeometryError("metric selector is not Lorentzian")
        return metric
    raise GeometryError(f"unknown metric selector {metric!r}")


def as_mask(st: GridSpacetime, nodes) -> np.ndarray:
    """Boolean (nt, nx) mask from a mask or an iterable of (it, ix) pairs."""
    if isinstance(nodes, np.ndarray) and nodes.dtype == bool:
        if nodes.shape != st.shape:
            raise GeometryError("node mask shape does not match grid")
        return nodes.copy()
    mask = np.zeros(st.shape, bool)
    for it, ix in nodes:
        st.check_node(it, ix)
        mask[it, ix] = True
    return mask


def dilate_space(mask: np.ndarray, cells: int) -> np.ndarray:
    out = mask.copy()
    for d in range(1, cells + 1):
        out |= np.roll(mask, d, axis=1) | np.roll(mask, -d, axis=1)
    return out


def dilate(mask: np.ndarray, cells: int = 1) -> np.ndarray:
    """Chebyshev dilation: periodic in x, clipped in t."""
    out = dilate_space(mask, cells)
    base = out.copy()
    for d in range(1, cells + 1):
        out[d:] |= base[:-d]
        out[:-d] |= base[d:]
    return out


def _sweep(st: GridSpacetime, metric: MetricField, seed: np.ndarray) -> np.ndarray:
    left, right = _step_reach(st, metric)
    reached = seed.copy()
    dmin, dmax = int(left.min()), int(right.max())
    for it in range(st.nt - 1):
        row = reached[it]
        if not row.any():
            continue
        nxt = np.zeros(st.nx, bool)
        for d in range(dmin, dmax + 1):
            src = row & (left[it] <= d) & (d <= right[it])
            if src.any():
                nxt |= np.roll(src, d)
        reached[it + 1] |= nxt
    return reached


def causal_future(st: GridSpacetime, seed, metric=None, dilation: int = 1) -> np.ndarray:
    """Nodes reachable from ``seed`` by future-directed discrete causal steps.

    Each step moves one slice forward and reaches the cells covered by the
    outward-rounded characteristic interval of ``metric`` (the grid metric by
    default).  The swept set is then widened by ``dilation`` cells in space so
    that it contains the continuum cone.  With ``dilation=0`` the map is a
    closure operator (monotone and idempotent).
    """
    mask = as_mask(st, seed)
    if not mask.any():
        raise GeometryError("seed must be nonempty")
    reached = _sweep(st, _resolve_metric(st, metric), mask)
    return dilate_space(reached, dilation) if dilation else reached


def causal_past(st: GridSpacetime, seed, metric=None, dilation: int = 1) -> np.ndarray:
    """Time reflection of :func:`causal_future`."""
    mask = as_mask(st, seed)
    if not mask.any():
        raise GeometryError("seed must be nonempty")
    m = _resolve_metric(st, metric)
    rev = st.time_reversed()
    m_rev = MetricField(m.tt[::-1], -m.tx[::-1], m.xx[::-1])
    return causal_future(rev, mask[::-1], m_rev, dilation)[::-1]


# partial orders between Lorentzian metrics -----------------------------------
def _timelike_arcs(metric: MetricField):
    """Centre angle (mod pi) and half width of the open timelike cone per node."""
    a, b, c = metric.tt, metric.tx, metric.xx
    mean = 0.5 * (a + c)
    rad = np.sqrt(0.25 * (a - c) ** 2 + b**2)
    lam_neg = mean - rad
    lam_pos = mean + rad
    # eigenvector of the negative eigenvalue
    vx = np.where(np.abs(b) > 0, lam_neg - a, np.where(a <= c, 0.0, 1.0))
    vt = np.where(np.abs(b) > 0, b, np.where(a <= c, 1.0, 0.0))
    centre = np.mod(np.arctan2(vx, vt), np.pi)
    half = np.arctan(np.sqrt(-lam_neg / lam_pos))
    return centre, half


def metric_order_violations(st: GridSpacetime, g1, g2) -> np.ndarray:
    """Mask of nodes where some g1-timelike vector fails to be g2-causal."""
    c1, h1 = _timelike_arcs(_as_metric(st, g1))
    c2, h2 = _timelike_arcs(_as_metric(st, g2))
    d = np.abs(c1 - c2) % np.pi
    d = np.minimum(d, np.pi - d)
    return d + h1 > h2 + ORDER_TOL


def metric_order_leq(st: GridSpacetime, g1, g2) -> bool:
    """True iff every g1-timelike vector is g2-causal at every node."""
    return not bool(np.any(metric_order_violations(st, g1, g2)))


def metric_order_lt(st: GridSpacetime, g1, g2) -> bool:
    """Strict order: closed g1 cone inside the open g2 cone at every node."""
    c1, h1 = _timelike_arcs(_as_metric(st, g1))
    c2, h2 = _timelike_arcs(_as_metric(st, g2))
    d = np.abs(c1 - c2) % np.pi
    d = np.minimum(d, np.pi - d)
    return bool(np.all(d + h1 < h2 - ORDER_TOL))


def _as_metric(st: GridSpacetime, g) -> MetricField:
    if isinstance(g, GridSpacetime):
        g = g.metric
    if isinstance(g, MetricField):
        m = g
    else:
        tt, tx, xx = g
        m = MetricField(*(np.broadcast_to(np.asarray(c, float), st.shape) for c in (tt, tx, xx)))
    if m.shape != st.shape:
        raise GeometryError("metric shape does not match grid")
    if not m.is_lorentzian():
        bad = np.argwhere(m.det >= 0)[0]
        raise GeometryError(f"metric not Lorentzian at node ({bad[0]}, {bad[1]})")
    return m


def nodes_of(mask: np.ndarray) -> list:
    return [tuple(int(v) for v in p) for p in np.argwhere(mask)]


def lattice_metric(st: GridSpacetime) -> MetricField:
    """Flat metric whose light cone is the lattice cone of one cell per step."""
    c = st.dx / st.dt
    return MetricField.constant(-1.0, 0.0, 1.0 / c**2, st.shape)


def iter_nodes(st: GridSpacetime) -> Iterable:
    for it in range(st.nt):
        for ix in range(st.nx):
            yield it, ix


__all__ = [
    "COVECTOR_CLASSES",
    "GeometryError",
    "GridSpacetime",
    "MetricField",
    "as_mask",
    "causal_future",
    "causal_past",
    "characteristic_speeds",
    "classify_covector",
    "coordinates",
    "dilate",
    "dilate_space",
    "inverse_quadratic",
    "lattice_metric",
    "metric_order_leq",
    "metric_order_lt",
    "metric_order_violations",
    "nodes_of",
]
