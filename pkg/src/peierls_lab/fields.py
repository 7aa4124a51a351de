"""Field configurations, densities, pairings and seminorms on a grid spacetime.

Densities store coefficients of the coordinate volume element ``dt dx``.
Finite differences are centred, periodic in x and one sided at the two ends
of the time window.  The auxiliary Riemannian metric is the coordinate one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import GridSpacetime, as_mask, coordinates


class FieldError(ValueError):
    """Shape, grid or domain problems with field-like values."""


def _checked(values, st: GridSpacetime, what: str, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.shape != st.shape:
        raise FieldError(f"{what} shape {arr.shape} does not match grid {st.shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FieldConfig:
    values: np.ndarray
    grid: GridSpacetime

    def __post_init__(self):
        object.__setattr__(self, "values", _checked(self.values, self.grid, "field"))

    @classmethod
    def zeros(cls, st: GridSpacetime) -> "FieldConfig":
        return cls(np.zeros(st.shape), st)

    @classmethod
    def from_function(cls, st: GridSpacetime, fn) -> "FieldConfig":
        t, x = st.coords()
        return cls(np.broadcast_to(fn(t, x), st.shape), st)

    def __add__(self, other):
        return FieldConfig(self.values + values_of(other), self.grid)

    def __sub__(self, other):
        return FieldConfig(self.values - values_of(other), self.grid)

    def __mul__(self, c):
        return FieldConfig(self.values * c, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldConfig(-self.values, self.grid)

    def weighted(self) -> "Density":
        """The density phi * dmu_g."""
        return Density(self.values * self.grid.metric.sqrt_abs_det, self.grid)

    def slice(self, it: int) -> np.ndarray:
        return self.values[it]


@dataclass(frozen=True)
class Density:
    coeffs: np.ndarray
    grid: GridSpacetime

    def __post_init__(self):
        dtype = complex if np.iscomplexobj(self.coeffs) else float
        object.__setattr__(self, "coeffs", _checked(self.coeffs, self.grid, "density", dtype))

    @classmethod
    def zeros(cls, st: GridSpacetime) -> "Density":
        return cls(np.zeros(st.shape), st)

    @classmethod
    def point(cls, st: GridSpacetime, it: int, ix: int, mass: float = 1.0) -> "Density":
        """Grid delta: pairs with phi to mass * phi(node)."""
        st.check_node(it, ix)
        c = np.zeros(st.shape)
        c[it, ix] = mass / st.cell_area
        return cls(c, st)

    def __add__(self, other):
        return Density(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other):
        return Density(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, c):
        return Density(self.coeffs * c, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return Density(-self.coeffs, self.grid)

    def conj(self) -> "Density":
        return Density(np.conj(self.coeffs), self.grid)

    @property
    def total(self) -> float:
        return float(np.sum(self.coeffs) * self.grid.cell_area)


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported weight on the grid; support is where it is nonzero."""

    __test__ = False  # keep pytest from collecting it

    values: np.ndarray
    grid: GridSpacetime

    def __post_init__(self):
        object.__setattr__(self, "values", _checked(self.values, self.grid, "test function"))

    @property
    def support(self) -> np.ndarray:
        return self.values != 0

    @classmethod
    def ones(cls, st: GridSpacetime) -> "TestFunction":
        return cls(np.ones(st.shape), st)

    @classmethod
    def indicator(cls, st: GridSpacetime, nodes) -> "TestFunction":
        return cls(as_mask(st, nodes).astype(float), st)

    @classmethod
    def raised_cosine(cls, st: GridSpacetime, centre, radius, ramp) -> "TestFunction":
        """Plateau of half widths ``radius`` (t, x) with cosine ramps of widths ``ramp``.

        Distances in x are periodic.  Values are 1 on the plateau, strictly
        between 0 and 1 on the ramp, and 0 beyond it.
        """
        t, x = st.coords()
        prof = np.ones(st.shape)
        for axis, coord in ((0, t), (1, x)):
            d = np.abs(coord - centre[axis])
            if axis == 1:
                d = np.minimum(d, st.period - d)
            r, w = np.broadcast_to(radius, 2)[axis], np.broadcast_to(ramp, 2)[axis]
            s = np.clip((d - r) / w, 0.0, 1.0)
            prof = prof * np.where(d <= r, 1.0, np.where(d >= r + w, 0.0, 0.5 * (1 + np.cos(np.pi * s))))
        return cls(prof, st)

    def __mul__(self, c):
        return TestFunction(self.values * c, self.grid)

    __rmul__ = __mul__

    def __add__(self, other):
        return TestFunction(self.values + other.values, self.grid)

    def __sub__(self, other):
        return TestFunction(self.values - other.values, self.grid)


def values_of(x) -> np.ndarray:
    if isinstance(x, FieldConfig):
        return x.values
    if isinstance(x, Density):
        return x.coeffs
    if isinstance(x, TestFunction):
        return x.values
    return np.asarray(x)


def _same_grid(a: GridSpacetime, b: GridSpacetime):
    if not a.same_as(b):
        raise FieldError("arguments live on different grids")


def pair(u: Density, phi: FieldConfig):
    """Dual pairing sum(u * phi) dt dx."""
    _same_grid(u.grid, phi.grid)
    return np.sum(u.coeffs * phi.values) * u.grid.cell_area


def hodge_star(st: GridSpacetime, u: Density) -> FieldConfig:
    """Coefficient with respect to dmu_g; inverse of FieldConfig.weighted."""
    _same_grid(st, u.grid)
    return FieldConfig(u.coeffs / st.metric.sqrt_abs_det, st)


# finite differences -------------------------------------------------------------
def diff_t(a: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(a, dtype=float)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * dt)
    out[0] = (a[1] - a[0]) / dt
    out[-1] = (a[-1] - a[-2]) / dt
    return out


def diff_x(a: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2 * dx)


def derivative_stack(phi: np.ndarray, st: GridSpacetime, order: int):
    """Per-order lists of difference arrays; |grad^j phi|^2 sums their squares.

    The second-order list carries the mixed term twice to match the
    Euclidean norm of the symmetric Hessian.
    """
    if order not in (0, 1, 2):
        raise FieldError(f"derivative order must be 0, 1 or 2, got {order}")
    stack = [[phi]]
    if order >= 1:
        pt, px = diff_t(phi, st.dt), diff_x(phi, st.dx)
        stack.append([pt, px])
    if order >= 2:
        ptt, ptx = diff_t(pt, st.dt), diff_x(pt, st.dx)
        pxx = diff_x(px, st.dx)
        stack.append([ptt, ptx, ptx, pxx])
    return stack


def _pointwise_sq(phi: np.ndarray, st: GridSpacetime, order: int) -> np.ndarray:
    total = np.zeros(st.shape)
    for level in derivative_stack(phi, st, order):
        for arr in level:
            total = total + arr * arr
    return total


def sup_seminorm(phi: FieldConfig, k: int, nodes) -> float:
    """max over ``nodes`` of sqrt(sum_{j<=k} |grad^j phi|^2)."""
    st = phi.grid
    mask = as_mask(st, nodes)
    if not mask.any():
        raise FieldError("seminorm needs a nonempty node set")
    return float(np.sqrt(np.max(_pointwise_sq(phi.values, st, k)[mask])))


def weighted_sup_seminorm(phi: FieldConfig, k: int, f: TestFunction) -> float:
    """max over the grid of sqrt(sum_{j<=k} |f grad^j phi|^2)."""
    st = phi.grid
    return float(np.sqrt(np.max(f.values**2 * _pointwise_sq(phi.values, st, k))))


def sobolev_sq(phi: FieldConfig, k: int, f: TestFunction) -> float:
    """sum_{j<=k} integral |f grad^j phi|^2 in the coordinate measure."""
    st = phi.grid
    _same_grid(st, f.grid)
    return float(np.sum(f.values**2 * _pointwise_sq(phi.values, st, k)) * st.cell_area)


def random_field(st: GridSpacetime, rng: np.random.Generator, modes: int = 3, amplitude: float = 1.0) -> np.ndarray:
    """Smooth random field built from a few low Fourier modes in x and t."""
    t, x = st.coords()
    T = st.dt * (st.nt - 1)
    out = np.zeros(st.shape)
    for _ in range(modes):
        kx = rng.integers(0, 3) * 2 * np.pi / st.period
        kt = rng.uniform(0, 2) * np.pi / max(T, st.dt)
        a, ph = rng.normal(), rng.uniform(0, 2 * np.pi)
        out += a * np.cos(kx * x + kt * t + ph)
    return amplitude * out / modes


def bump_array(st: GridSpacetime, centre, radius) -> np.ndarray:
    """Smooth compactly supported bump, product of cos^2 profiles in t and x."""
    t, x = coordinates(st.nt, st.nx, st.dt, st.dx)
    dt_ = np.abs(t - centre[0])
    dx_ = np.abs(x - centre[1])
    dx_ = np.minimum(dx_, st.period - dx_)
    rt, rx = np.broadcast_to(radius, 2)
    prof = np.where(dt_ < rt, np.cos(0.5 * np.pi * dt_ / rt) ** 2, 0.0)
    prof = prof * np.where(dx_ < rx, np.cos(0.5 * np.pi * dx_ / rx) ** 2, 0.0)
    return prof


def grid_of(*objs) -> Optional[GridSpacetime]:
    for o in objs:
        g = getattr(o, "grid", None)
        if g is not None:
            return g
    return None


def nodes_mask(st: GridSpacetime, nodes: Sequence) -> np.ndarray:
    return as_mask(st, nodes)
