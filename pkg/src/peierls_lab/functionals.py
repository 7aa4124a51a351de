"""Functionals on field space as immutable expression trees.

Each node provides its value and exact nodal derivatives: the gradient
(partial derivatives with respect to the field value at every node), the
Hessian-vector product and the third derivative contracted with two
directions.  Derivatives of compound nodes follow the Leibniz and Faa di
Bruno rules.  A gradient divided by the cell area is the density that
represents the first derivative under ``pair``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import densities as dens
from . import outer as outer_maps
from .fields import Density, FieldConfig, TestFunction, values_of
from .geometry import GridSpacetime, dilate
from .jets import JetIntegral, rule_by_name

MAX_DERIVATIVE = 3
SUPPORT_RTOL = 1e-12


class DomainError(ValueError):
    """Field configuration outside the functional's declared domain."""


class UnsupportedOrder(ValueError):
    """Requested derivative order is not available for this functional."""


def _arr(phi):
    return np.asarray(values_of(phi), dtype=float)


class Functional:
    """Base node.  Subclasses implement the underscored methods on ndarrays."""

    grid: GridSpacetime
    max_order: int = MAX_DERIVATIVE

    # interface --------------------------------------------------------------
    def _value(self, phi):
        raise NotImplementedError

    def _grad(self, phi):
        raise NotImplementedError

    def _hvp(self, phi, u):
        raise NotImplementedError

    def _third(self, phi, u, v):
        raise NotImplementedError

    def check_domain(self, phi):
        return None

    def declared_support(self) -> Optional[np.ndarray]:
        return None

    def children(self) -> Sequence["Functional"]:
        return ()

    # public -----------------------------------------------------------------
    def __call__(self, phi):
        phi = _arr(phi)
        self.check_domain(phi)
        return self._value(phi)

    def grad(self, phi):
        phi = _arr(phi)
        self.check_domain(phi)
        return self._grad(phi)

    def hvp(self, phi, u):
        if self.max_order < 2:
            raise UnsupportedOrder(f"{type(self).__name__} has derivatives only up to order {self.max_order}")
        phi = _arr(phi)
        self.check_domain(phi)
        return self._hvp(phi, _arr(u))

    def third(self, phi, u, v):
        if self.max_order < 3:
            raise UnsupportedOrder(f"{type(self).__name__} has derivatives only up to order {self.max_order}")
        phi = _arr(phi)
        self.check_domain(phi)
        return self._third(phi, _arr(u), _arr(v))

    def conj(self) -> "Functional":
        return self

    # algebra ----------------------------------------------------------------
    def __add__(self, other):
        other = as_functional(other, self.grid)
        return Sum((self, other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * as_functional(other, self.grid)

    def __rsub__(self, other):
        return as_functional(other, self.grid) + (-1.0) * self

    def __mul__(self, other):
        if np.isscalar(other):
            return ScalarMul(other, self)
        return Product(self, as_functional(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarMul(-1.0, self)


def as_functional(x, st: GridSpacetime) -> Functional:
    if isinstance(x, Functional):
        return x
    if np.isscalar(x):
        return Constant(st, x)
    raise TypeError(f"cannot treat {type(x).__name__} as a functional")


def _zeros(st):
    return np.zeros(st.shape)


@dataclass(frozen=True, eq=False)
class Constant(Functional):
    grid: GridSpacetime
    c: complex = 0.0

    def _value(self, phi):
        return self.c

    def _grad(self, phi):
        return _zeros(self.grid)

    def _hvp(self, phi, u):
        return _zeros(self.grid)

    def _third(self, phi, u, v):
        return _zeros(self.grid)

    def declared_support(self):
        return np.zeros(self.grid.shape, bool)

    def conj(self):
        return Constant(self.grid, np.conj(self.c))


@dataclass(frozen=True, eq=False)
class LocalTerm(Functional):
    """sum over jet samples of f * mu * density(phi - shift).

    ``measure`` is ``"metric"`` (mu = sqrt|det g|) or ``"coordinate"`` (mu = 1).
    """

    grid: GridSpacetime
    f: np.ndarray
    density: dens.GradientDensity
    rule: str = "one_sided"
    measure: str = "metric"
    shift: Optional[np.ndarray] = None
    _jet: JetIntegral = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        f = np.array(values_of(self.f), float)
        if f.shape != self.grid.shape:
            raise ValueError("test function shape does not match grid")
        object.__setattr__(self, "f", f)
        if self.measure == "metric":
            mu = self.grid.metric.sqrt_abs_det
        elif self.measure == "coordinate":
            mu = np.ones(self.grid.shape)
        else:
            raise ValueError(f"unknown measure {self.measure!r}")
        rule = rule_by_name(self.grid, self.rule)
        object.__setattr__(self, "_jet", JetIntegral(self.grid, rule, self.density, f * mu))

    def _x(self, phi):
        return phi if self.shift is None else phi - self.shift

    def _value(self, phi):
        return self._jet.value(self._x(phi))

    def _grad(self, phi):
        return self._jet.gradient(self._x(phi))

    def _hvp(self, phi, u):
        return self._jet.hvp(self._x(phi), u)

    def _third(self, phi, u, v):
        return self._jet.third(self._x(phi), u, v)

    def hessian(self, phi) -> sp.csr_matrix:
        return self._jet.hessian(self._x(_arr(phi)))

    def declared_support(self):
        return self._jet.sample_support()

    def with_f(self, f) -> "LocalTerm":
        return LocalTerm(self.grid, values_of(f), self.density, self.rule, self.measure, self.shift)


def integral(st: GridSpacetime, f, measure: str = "metric") -> LocalTerm:
    """phi -> integral of f * phi."""
    return LocalTerm(st, values_of(f), dens.linear(), rule="point", measure=measure)


def quadratic(st: GridSpacetime, f, measure: str = "metric") -> LocalTerm:
    """phi -> 1/2 integral of f * phi^2."""
    return LocalTerm(st, values_of(f), dens.half_square(), rule="point", measure=measure)


def sobolev_functional(st: GridSpacetime, f, k: int = 1, shift=None) -> LocalTerm:
    """Squared local Sobolev seminorm of order k <= 1 as a local functional."""
    fv = values_of(f)
    density = {0: dens.sobolev_order0(), 1: dens.sobolev_order1()}[k]
    return LocalTerm(st, fv * fv, density, rule="centred" if k else "point", measure="coordinate",
                     shift=None if shift is None else _arr(shift))


@dataclass(frozen=True, eq=False)
class RegularKernel(Functional):
    """<omega, phi> + 1/2 sum_k c_k <kappa_k, phi>^2 with smooth densities omega, kappa_k."""

    grid: GridSpacetime
    omega: np.ndarray
    kappas: tuple = ()
    coefs: tuple = ()

    def _lin(self, vec, phi):
        return float(np.sum(vec * phi) * self.grid.cell_area)

    def _value(self, phi):
        v = self._lin(self.omega, phi)
        for c, k in zip(self.coefs, self.kappas):
            v += 0.5 * c * self._lin(k, phi) ** 2
        return v

    def _grad(self, phi):
        a = self.grid.cell_area
        g = self.omega * a
        for c, k in zip(self.coefs, self.kappas):
            g = g + c * self._lin(k, phi) * k * a
        return g

    def _hvp(self, phi, u):
        a = self.grid.cell_area
        out = _zeros(self.grid)
        for c, k in zip(self.coefs, self.kappas):
            out = out + c * self._lin(k, u) * k * a
        return out

    def _third(self, phi, u, v):
        return _zeros(self.grid)

    def declared_support(self):
        m = self.omega != 0
        for k in self.kappas:
            m = m | (k != 0)
        return m


@dataclass(frozen=True, eq=False)
class Sum(Functional):
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty sum")
        object.__setattr__(self, "grid", self.terms[0].grid)
        object.__setattr__(self, "max_order", min(t.max_order for t in self.terms))

    def children(self):
        return self.terms

    def check_domain(self, phi):
        for t in self.terms:
            t.check_domain(phi)

    def _value(self, phi):
        return sum(t._value(phi) for t in self.terms)

    def _grad(self, phi):
        return sum(t._grad(phi) for t in self.terms)

    def _hvp(self, phi, u):
        return sum(t._hvp(phi, u) for t in self.terms)

    def _third(self, phi, u, v):
        return sum(t._third(phi, u, v) for t in self.terms)

    def declared_support(self):
        return _union([t.declared_support() for t in self.terms])

    def conj(self):
        return Sum(tuple(t.conj() for t in self.terms))


@dataclass(frozen=True, eq=False)
class ScalarMul(Functional):
    c: complex
    inner: Functional

    def __post_init__(self):
        object.__setattr__(self, "grid", self.inner.grid)
        object.__setattr__(self, "max_order", self.inner.max_order)

    def children(self):
        return (self.inner,)

    def check_domain(self, phi):
        self.inner.check_domain(phi)

    def _value(self, phi):
        return self.c * self.inner._value(phi)

    def _grad(self, phi):
        return self.c * self.inner._grad(phi)

    def _hvp(self, phi, u):
        return self.c * self.inner._hvp(phi, u)

    def _third(self, phi, u, v):
        return self.c * self.inner._third(phi, u, v)

    def declared_support(self):
        if self.c == 0:
            return np.zeros(self.grid.shape, bool)
        return self.inner.declared_support()

    def conj(self):
        return ScalarMul(np.conj(self.c), self.inner.conj())


def _d2(F, phi, u, v):
    return float(np.sum(F._hvp(phi, u) * v))


@dataclass(frozen=True, eq=False)
class Product(Functional):
    left: Functional
    right: Functional

    def __post_init__(self):
        object.__setattr__(self, "grid", self.left.grid)
        object.__setattr__(self, "max_order", min(self.left.max_order, self.right.max_order))

    def children(self):
        return (self.left, self.right)

    def check_domain(self, phi):
        self.left.check_domain(phi)
        self.right.check_domain(phi)

    def _value(self, phi):
        return self.left._value(phi) * self.right._value(phi)

    def _grad(self, phi):
        F, G = self.left, self.right
        return F._grad(phi) * G._value(phi) + F._value(phi) * G._grad(phi)

    def _hvp(self, phi, u):
        F, G = self.left, self.right
        gF, gG = F._grad(phi), G._grad(phi)
        return (
            F._hvp(phi, u) * G._value(phi)
            + gF * np.sum(gG * u)
            + gG * np.sum(gF * u)
            + F._value(phi) * G._hvp(phi, u)
        )

    def _third(self, phi, u, v):
        F, G = self.left, self.right
        gF, gG = F._grad(phi), G._grad(phi)
        return (
            F._third(phi, u, v) * G._value(phi)
            + F._hvp(phi, u) * np.sum(gG * v)
            + F._hvp(phi, v) * np.sum(gG * u)
            + gF * _d2(G, phi, u, v)
            + gG * _d2(F, phi, u, v)
            + G._hvp(phi, u) * np.sum(gF * v)
            + G._hvp(phi, v) * np.sum(gF * u)
            + F._value(phi) * G._third(phi, u, v)
        )

    def declared_support(self):
        return _union([self.left.declared_support(), self.right.declared_support()])

    def conj(self):
        return Product(self.left.conj(), self.right.conj())


@dataclass(frozen=True, eq=False)
class SmoothCompose(Functional):
    """psi(F_1, ..., F_n) with derivatives by Faa di Bruno's formula."""

    psi: outer_maps.OuterMap
    inner: tuple

    def __post_init__(self):
        if len(self.inner) != self.psi.arity:
            raise ValueError(f"{self.psi.name} needs {self.psi.arity} inner functionals")
        object.__setattr__(self, "grid", self.inner[0].grid)
        object.__setattr__(self, "max_order", min(F.max_order for F in self.inner))

    def children(self):
        return self.inner

    def check_domain(self, phi):
        for F in self.inner:
            F.check_domain(phi)

    def _p(self, phi):
        return self.psi.partials([F._value(phi) for F in self.inner])

    @staticmethod
    def _k(*idx):
        return tuple(sorted(idx))

    def _value(self, phi):
        return self._p(phi)[()]

    def _grad(self, phi):
        p = self._p(phi)
        return sum(p[(i,)] * F._grad(phi) for i, F in enumerate(self.inner))

    def _hvp(self, phi, u):
        p = self._p(phi)
        g = [F._grad(phi) for F in self.inner]
        gu = [np.sum(gi * u) for gi in g]
        n = len(self.inner)
        out = sum(p[(i,)] * F._hvp(phi, u) for i, F in enumerate(self.inner))
        for i in range(n):
            for j in range(n):
                out = out + p[self._k(i, j)] * gu[j] * g[i]
        return out

    def _third(self, phi, u, v):
        p = self._p(phi)
        Fs = self.inner
        n = len(Fs)
        g = [F._grad(phi) for F in Fs]
        gu = [np.sum(gi * u) for gi in g]
        gv = [np.sum(gi * v) for gi in g]
        hu = [F._hvp(phi, u) for F in Fs]
        hv = [F._hvp(phi, v) for F in Fs]
        huv = [np.sum(h * v) for h in hu]
        out = sum(p[(i,)] * F._third(phi, u, v) for i, F in enumerate(Fs))
        for i in range(n):
            for j in range(n):
                pij = p[self._k(i, j)]
                out = out + pij * (huv[j] * g[i] + gu[j] * hv[i] + gv[j] * hu[i])
                for k in range(n):
                    out = out + p[self._k(i, j, k)] * gu[j] * gv[k] * g[i]
        return out

    def declared_support(self):
        return _union([F.declared_support() for F in self.inner])


def smooth_compose(psi: outer_maps.OuterMap, Fs: Sequence[Functional]) -> SmoothCompose:
    return SmoothCompose(psi, tuple(Fs))


@dataclass(frozen=True, eq=False)
class Restricted(Functional):
    """``inner`` on the domain where ``predicate(phi)`` holds."""

    inner: Functional
    predicate: Callable = field(repr=False)
    description: str = "restricted domain"

    def __post_init__(self):
        object.__setattr__(self, "grid", self.inner.grid)
        object.__setattr__(self, "max_order", self.inner.max_order)

    def children(self):
        return (self.inner,)

    def check_domain(self, phi):
        if not self.predicate(phi):
            raise DomainError(f"configuration outside {self.description}")
        self.inner.check_domain(phi)

    def _value(self, phi):
        return self.inner._value(phi)

    def _grad(self, phi):
        return self.inner._grad(phi)

    def _hvp(self, phi, u):
        return self.inner._hvp(phi, u)

    def _third(self, phi, u, v):
        return self.inner._third(phi, u, v)

    def declared_support(self):
        return self.inner.declared_support()


def sup_ball(st: GridSpacetime, nodes_mask: np.ndarray, radius: float):
    """Predicate for ``sup over nodes_mask |phi| < radius``."""
    mask = np.asarray(nodes_mask, bool)
    return lambda phi: bool(np.max(np.abs(phi[mask])) < radius)


@dataclass(frozen=True, eq=False)
class Precomposed(Functional):
    """phi -> inner(chi * phi)."""

    inner: Functional
    chi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", self.inner.grid)
        object.__setattr__(self, "max_order", self.inner.max_order)

    def check_domain(self, phi):
        self.inner.check_domain(phi * self.chi)

    def _value(self, phi):
        return self.inner._value(phi * self.chi)

    def _grad(self, phi):
        return self.chi * self.inner._grad(phi * self.chi)

    def _hvp(self, phi, u):
        return self.chi * self.inner._hvp(phi * self.chi, u * self.chi)

    def _third(self, phi, u, v):
        return self.chi * self.inner._third(phi * self.chi, u * self.chi, v * self.chi)

    def declared_support(self):
        return self.chi != 0


@dataclass(frozen=True, eq=False)
class SupNorm(Functional):
    """max over a node set of |phi|; differentiable only almost everywhere."""

    grid: GridSpacetime
    nodes: np.ndarray
    max_order: int = 1

    def _value(self, phi):
        return float(np.max(np.abs(phi[self.nodes])))

    def _grad(self, phi):
        masked = np.where(self.nodes, np.abs(phi), -np.inf)
        idx = np.unravel_index(np.argmax(masked), phi.shape)
        g = _zeros(self.grid)
        g[idx] = np.sign(phi[idx])
        return g

    def declared_support(self):
        return np.asarray(self.nodes, bool)


_RULE_REACH = {"point": 0, "one_sided": 1, "forward": 1, "centred": 2}


def stencil_reach(F: Functional) -> int:
    """Largest node distance coupled by a second derivative of any local piece of F."""
    own = _RULE_REACH.get(F.rule, 2) if isinstance(F, LocalTerm) else 0
    return max([own] + [stencil_reach(c) for c in F.children()])


def _union(masks):
    out = None
    for m in masks:
        if m is None:
            return None
        out = m.copy() if out is None else (out | m)
    return out


# public operations ------------------------------------------------------------
def evaluate(F: Functional, phi):
    return F(phi)


def derivative(F: Functional, phi, dirs: Sequence):
    """k-th derivative of F at phi applied to ``dirs`` (k = 1, 2 or 3)."""
    k = len(dirs)
    if k == 0:
        return F(phi)
    if k > MAX_DERIVATIVE:
        raise UnsupportedOrder(f"derivatives are available up to order {MAX_DERIVATIVE}, got {k}")
    d = [_arr(x) for x in dirs]
    if k == 1:
        return np.sum(F.grad(phi) * d[0])
    if k == 2:
        return np.sum(F.hvp(phi, d[0]) * d[1])
    return np.sum(F.third(phi, d[0], d[1]) * d[2])


def gradient_density(F: Functional, phi) -> Density:
    st = F.grid
    return Density(F.grad(phi) / st.cell_area, st)


def support_of_gradient(g: np.ndarray, rtol: float = SUPPORT_RTOL) -> np.ndarray:
    a = np.abs(g)
    top = a.max() if a.size else 0.0
    if top == 0:
        return np.zeros(g.shape, bool)
    return a > rtol * top


@dataclass
class SupportReport:
    support: np.ndarray
    probes_used: int
    probes_rejected: int

    def __array__(self, dtype=None):
        return self.support if dtype is None else self.support.astype(dtype)


def spacetime_support(F: Functional, probes: Sequence, rtol: float = SUPPORT_RTOL) -> SupportReport:
    """Union over probes of the nodes where the gradient density is non-negligible.

    Probes outside F's domain are skipped and counted.  When F declares a
    support the estimate is asserted to lie inside it.
    """
    st = F.grid
    mask = np.zeros(st.shape, bool)
    used = rejected = 0
    for phi in probes:
        try:
            g = F.grad(phi)
        except DomainError:
            rejected += 1
            continue
        used += 1
        mask |= support_of_gradient(g, rtol)
    declared = F.declared_support()
    if declared is not None and np.any(mask & ~declared):
        raise AssertionError("estimated support leaves the declared support")
    return SupportReport(mask, used, rejected)


def probe_plan(st: GridSpacetime, seed: int = 0, n_random: int = 6, constants: Sequence[float] = (0.0, 1.0),
               amplitude: float = 1.0) -> List[np.ndarray]:
    """Seeded smooth random fields, a few localized bumps and constant fields."""
    from .fields import bump_array, random_field

    rng = np.random.default_rng(seed)
    probes = [np.full(st.shape, float(c)) for c in constants]
    T = st.dt * (st.nt - 1)
    for _ in range(n_random):
        probes.append(random_field(st, rng, amplitude=amplitude))
    for _ in range(2):
        centre = (rng.uniform(0, T), rng.uniform(0, st.period))
        probes.append(amplitude * bump_array(st, centre, (T / 4, st.period / 4)))
    return probes


@dataclass
class ClassifierReport:
    passed: bool
    worst_residual: float
    trials: int
    seed: int
    detail: str = ""

    def __bool__(self):
        return bool(self.passed)


def _separated_bumps(st, rng, support, sep=2, radius=1):
    """Two small random bumps inside ``support`` at Chebyshev distance >= sep + 2*radius."""
    pts = np.argwhere(support) if support is not None and support.any() else np.argwhere(np.ones(st.shape, bool))
    for _ in range(200):
        a, b = pts[rng.integers(len(pts))], pts[rng.integers(len(pts))]
        dt_ = abs(int(a[0]) - int(b[0]))
        dx_ = abs(int(a[1]) - int(b[1]))
        dx_ = min(dx_, st.nx - dx_)
        if max(dt_, dx_) >= sep + 2 * radius + 1:
            return _node_bump(st, a, radius, rng), _node_bump(st, b, radius, rng)
    return None


def _node_bump(st, node, radius, rng):
    out = _zeros(st)
    for dt_ in range(-radius, radius + 1):
        for dx_ in range(-radius, radius + 1):
            it = node[0] + dt_
            if 0 <= it < st.nt:
                out[it, (node[1] + dx_) % st.nx] = rng.uniform(0.5, 1.5)
    return out


def check_additivity(F: Functional, trials: int = 10, seed: int = 0, rtol: float = 1e-10,
                     amplitude: float = 0.5) -> ClassifierReport:
    """Randomized test of F(a+b+c) = F(a+b) - F(b) + F(b+c) for separated a, c."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    from .fields import random_field

    st = F.grid
    rng = np.random.default_rng(seed)
    support = F.declared_support()
    worst = 0.0
    done = 0
    for _ in range(trials):
        pair_ = _separated_bumps(st, rng, support, sep=2, radius=1)
        if pair_ is None:
            continue
        a, c = (amplitude * p for p in pair_)
        b = random_field(st, rng, amplitude=amplitude)
        terms = [F(a + b + c), F(a + b), F(b), F(b + c)]
        resid = abs(terms[0] - (terms[1] - terms[2] + terms[3]))
        scale = max(max(abs(t) for t in terms), 1e-300)
        worst = max(worst, resid / scale)
        done += 1
    if done == 0:
        return ClassifierReport(True, 0.0, 0, seed, "support too small for separated probes; vacuous")
    return ClassifierReport(worst <= rtol, worst, done, seed)


def check_locality(F: Functional, trials: int = 40, seed: int = 0, probes: Optional[Sequence] = None,
                   rtol: float = 1e-13) -> ClassifierReport:
    """Second derivative must vanish on pairs of directions with separated supports.

    Directions are unit vectors at node pairs drawn from the estimated
    support of F, further apart than the stencil reach of its local pieces.
    """
    st = F.grid
    rng = np.random.default_rng(seed)
    if probes is None:
        probes = probe_plan(st, seed, n_random=2, constants=(0.3,), amplitude=0.5)
    support = spacetime_support(F, probes).support
    pts = np.argwhere(support)
    if len(pts) < 2:
        return ClassifierReport(True, 0.0, 0, seed, "support has fewer than two nodes; vacuous")
    sep = max(stencil_reach(F), 1) + 1
    worst = 0.0
    done = 0
    for k in range(trials):
        phi = probes[k % len(probes)]
        a, b = pts[rng.integers(len(pts))], pts[rng.integers(len(pts))]
        dxx = abs(int(a[1]) - int(b[1]))
        if max(abs(int(a[0]) - int(b[0])), min(dxx, st.nx - dxx)) < sep:
            continue
        u = _zeros(st)
        v = _zeros(st)
        u[tuple(a)] = 1.0
        v[tuple(b)] = 1.0
        try:
            huv = abs(derivative(F, phi, [u, v]))
            scale = abs(derivative(F, phi, [u, u])) + abs(derivative(F, phi, [v, v]))
            scale += abs(derivative(F, phi, [u]) * derivative(F, phi, [v]))
        except DomainError:
            continue
        worst = max(worst, huv / max(scale, 1e-300))
        done += 1
    return ClassifierReport(worst <= rtol, worst, done, seed)


# decomposition into small supports --------------------------------------------------
@dataclass
class SignedTerm:
    sign: int
    indices: frozenset
    functional: Functional


def _maximal_cliques(adj: np.ndarray) -> List[frozenset]:
    n = adj.shape[0]
    cliques = []

    def expand(R, P, X):
        if not P and not X:
            cliques.append(frozenset(R))
            return
        for v in list(P):
            nb = {u for u in range(n) if adj[v, u] and u != v}
            expand(R | {v}, P & nb, X & nb)
            P = P - {v}
            X = X | {v}

    expand(set(), set(range(n)), set())
    return cliques


def decompose_small_support(F: Functional, cover: Sequence, probes: Optional[Sequence] = None,
                            seed: int = 0, reach: int = 1, atol: float = 1e-12) -> List[SignedTerm]:
    """Write an additive F as a signed sum of F(phi * sum_{i in I} chi_i).

    ``cover`` is a partition of unity on the support of F (arrays or test
    functions).  Index sets are intersections of maximal cliques of the
    overlap graph of the cutoffs, with overlap measured after widening each
    support by ``reach`` cells (the stencil radius).  Signs come from
    inclusion-exclusion; terms equal to the constant F(0) = 0 are dropped.
    """
    st = F.grid
    rep = check_additivity(F, trials=6, seed=seed)
    if not rep.passed:
        raise ValueError(f"input is not additive (residual {rep.worst_residual:.3e})")
    chis = [np.asarray(values_of(c), float) for c in cover]
    n = len(chis)
    sup = [c != 0 for c in chis]
    wide = [dilate(s, reach) for s in sup]
    adj = np.array([[bool(np.any(wide[i] & sup[j])) for j in range(n)] for i in range(n)])
    cliques = _maximal_cliques(adj)
    signs: dict = {}
    for r in range(1, len(cliques) + 1):
        for combo in itertools.combinations(cliques, r):
            idx = frozenset.intersection(*combo)
            signs[idx] = signs.get(idx, 0) + (-1) ** (r + 1)
    f0 = F(np.zeros(st.shape))
    terms = []
    for idx, s in sorted(signs.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        if s == 0:
            continue
        if not idx:
            if f0 != 0:
                terms.append(SignedTerm(s, idx, Constant(st, f0)))
            continue
        chi = sum(chis[i] for i in idx)
        terms.append(SignedTerm(s, idx, Precomposed(F, chi)))
    if probes is None:
        probes = probe_plan(st, seed, n_random=6, amplitude=0.5)
    for phi in probes:
        total = sum(t.sign * t.functional(phi) for t in terms)
        ref = F(phi)
        if abs(total - ref) > atol * max(1.0, abs(ref)):
            raise AssertionError(f"decomposition does not reproduce F: {total} vs {ref}")
    return terms


def ball_partition(st: GridSpacetime, centres: Sequence, radius, ramp) -> List[np.ndarray]:
    """Cutoffs b_i / sum_j b_j from raised-cosine balls; a partition of unity on their union."""
    bumps = [TestFunction.raised_cosine(st, c, radius, ramp).values for c in centres]
    total = sum(bumps)
    safe = np.where(total > 0, total, 1.0)
    return [np.where(total > 0, b / safe, 0.0) for b in bumps]


# catalogue of functional types ----------------------------------------------
def normalized_weight(st: GridSpacetime, f) -> np.ndarray:
    """Rescale f so that its integral against dmu_g is one."""
    fv = np.asarray(values_of(f), float)
    total = np.sum(fv * st.metric.sqrt_abs_det) * st.cell_area
    return fv / total


def exp_functional(st: GridSpacetime, omega) -> SmoothCompose:
    """phi -> exp(integral phi * omega), omega a density."""
    return smooth_compose(outer_maps.exp(), [integral(st, np.asarray(values_of(omega)) / st.metric.sqrt_abs_det)])


def gr_functional(st: GridSpacetime, f, R: float) -> SmoothCompose:
    """phi -> exp(1 - chi_R(G(phi))) with G the normalized average against f."""
    G = integral(st, normalized_weight(st, f))
    return smooth_compose(outer_maps.gr_outer(R), [G])


def bump_functional(st: GridSpacetime, f, phi0, R: float, k: int = 1) -> SmoothCompose:
    """chi(R^-2 ||phi - phi0||^2_{2,k,f}) with chi = 1 near 0 and 0 for arguments >= 1."""
    S = sobolev_functional(st, f, k, shift=phi0)
    chi = outer_maps.scaled(outer_maps.plateau(0.5, 1.0), R * R)
    return smooth_compose(chi, [S])


def partition_of_unity(Fs: Sequence[Functional]) -> List[Functional]:
    """F_i / sum_j F_j, defined where the sum is positive."""
    n = len(Fs)
    total = Sum(tuple(Fs))
    out = []
    for i in range(n):
        P = smooth_compose(outer_maps.ratio(i, n), Fs)
        out.append(Restricted(P, lambda phi, T=total: T._value(phi) > 0, "positive-sum domain"))
    return out
