"""Generalized Lagrangians, Euler-Lagrange data and principal symbols.

A Lagrangian maps a test function f to the local functional
``sum over jets of f * mu * density``.  The discrete action is the value at
f = 1; the Euler-Lagrange density is its exact gradient and the linearized
operator its exact Hessian (discretize first, then vary).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import densities as dens
from .fields import Density, TestFunction, diff_t, diff_x, values_of
from .functionals import (
    DomainError,
    Functional,
    LocalTerm,
    Sum,
    derivative,
    spacetime_support,
    probe_plan,
)
from .geometry import GridSpacetime, MetricField, dilate, lattice_metric
from .hyperbolic import LinearHypOp


@dataclass(frozen=True)
class Term:
    density: object
    rule: str = "one_sided"
    measure: str = "metric"


@dataclass(frozen=True, eq=False)
class GeneralizedLagrangian:
    """f -> sum of local terms weighted by f.

    ``symbol`` names the closed-form principal symbol: ``("free",)``,
    ``("epsilon", eps)`` or ``None`` when no closed form is known.
    """

    name: str
    grid: GridSpacetime
    terms: tuple
    symbol: Optional[tuple] = ("free",)
    _action: dict = field(default_factory=dict, repr=False)

    def __call__(self, f) -> Functional:
        fv = np.asarray(values_of(f), float)
        parts = tuple(LocalTerm(self.grid, fv, t.density, t.rule, t.measure) for t in self.terms)
        return parts[0] if len(parts) == 1 else Sum(parts)

    def action(self) -> Functional:
        """The discrete action L(1) over the whole window (cached)."""
        if "S" not in self._action:
            self._action["S"] = self(np.ones(self.grid.shape))
        return self._action["S"]

    def __add__(self, other: "GeneralizedLagrangian") -> "GeneralizedLagrangian":
        sym = self.symbol if other.symbol in (None, ("trivial",)) else None
        if self.symbol == ("trivial",):
            sym = other.symbol
        return GeneralizedLagrangian(f"{self.name}+{other.name}", self.grid, self.terms + other.terms, sym)


# catalogue ------------------------------------------------------------------------
def free_field(st: GridSpacetime, mass: float = 0.0) -> GeneralizedLagrangian:
    return GeneralizedLagrangian("free", st, (Term(dens.free_field(mass)),), ("free",))


def epsilon_model(st: GridSpacetime, eps: float, mass: float = 0.0) -> GeneralizedLagrangian:
    """-1/2 [g^-1(dphi, dphi) + (eps/2)(1 + phi^2) g^-1(dphi, dphi)^2]."""
    return GeneralizedLagrangian(f"epsilon({eps})", st, (Term(dens.epsilon_model(eps, mass)),), ("epsilon", eps))


def mass_shifted(st: GridSpacetime, shift: float) -> GeneralizedLagrangian:
    """Free field plus shift * phi^2 / 2, whose linearization is box + shift."""
    terms = (Term(dens.free_field()), Term(dens.polynomial(0.0, 0.0, 0.5 * shift)))
    return GeneralizedLagrangian(f"free+{shift}", st, terms, ("free",))


def sobolev(st: GridSpacetime) -> GeneralizedLagrangian:
    return GeneralizedLagrangian("sobolev", st, (Term(dens.sobolev_order1(), "centred", "coordinate"),), None)


def divergence(st: GridSpacetime) -> GeneralizedLagrangian:
    """f -> sum f * div J(phi): a trivial Lagrangian (no Euler-Lagrange content)."""
    return GeneralizedLagrangian(
        "divergence", st, (Term(dens.DivergenceDensity(st.dt, st.dx), "forward", "coordinate"),), ("trivial",)
    )


CATALOGUE = {
    "free": free_field,
    "epsilon": epsilon_model,
    "mass": mass_shifted,
    "sobolev": sobolev,
    "divergence": divergence,
}


def by_name(st: GridSpacetime, name: str, **params) -> GeneralizedLagrangian:
    try:
        return CATALOGUE[name](st, **params)
    except KeyError:
        raise KeyError(f"unknown Lagrangian {name!r}; known: {sorted(CATALOGUE)}") from None


# Euler-Lagrange data ---------------------------------------------------------------------
def _touches_boundary(mask: np.ndarray) -> bool:
    return bool(mask[0].any() or mask[-1].any())


def cutoff_near(st: GridSpacetime, mask: np.ndarray, pad: int = 1, ramp: int = 2) -> np.ndarray:
    """Test function equal to 1 on ``mask`` widened by ``pad`` cells, ramping to 0 over ``ramp`` rings."""
    f = dilate(mask, pad).astype(float)
    ring = f > 0
    for k in range(1, ramp + 1):
        nxt = dilate(ring, 1)
        f[nxt & ~ring] = 1.0 - k / (ramp + 1)
        ring = nxt
    return f


def el_derivative(L: GeneralizedLagrangian, phi, dirs: Sequence, pad: int = 1, ramp: int = 2):
    """D^k L(1)[phi](dirs) computed with a cutoff f = 1 near the most compact direction."""
    st = L.grid
    arrs = [np.asarray(values_of(d), float) for d in dirs]
    if not 1 <= len(arrs) <= 3:
        raise ValueError("between one and three directions are supported")
    masks = [a != 0 for a in arrs]
    interior = [m for m in masks if m.any() and not _touches_boundary(dilate(m, pad + ramp + 1))]
    if not interior:
        if not any(m.any() for m in masks):
            return 0.0
        raise DomainError("every direction reaches the time boundary; the cutoff cannot close")
    anchor = min(interior, key=lambda m: m.sum())
    f = cutoff_near(st, anchor, pad, ramp)
    return derivative(L(f), phi, arrs)


def el_operator(L: GeneralizedLagrangian, phi) -> Density:
    """Euler-Lagrange density: the gradient of the discrete action over the cell area."""
    st = L.grid
    return Density(L.action().grad(phi) / st.cell_area, st)


def third_variation(L: GeneralizedLagrangian, phi, u, v) -> np.ndarray:
    """Nodal vector D^3 S[phi](u, v, .) of the discrete action."""
    return L.action().third(phi, u, v)


def action_hessian(L: GeneralizedLagrangian, phi):
    S = L.action()
    parts = S.terms if isinstance(S, Sum) else (S,)
    H = None
    for p in parts:
        h = p.hessian(phi)
        H = h if H is None else H + h
    return H.tocsr()


def linearize(L: GeneralizedLagrangian, phi0, reference: Optional[MetricField] = None) -> LinearHypOp:
    """Linearized Euler-Lagrange operator as a stencil on densities."""
    st = L.grid
    Hd = action_hessian(L, np.asarray(values_of(phi0), float)) / st.cell_area
    return LinearHypOp(st, Hd, reference=reference, variational=True, name=f"E'({L.name})")


# principal symbols ----------------------------------------------------------------------
def _gradient(st: GridSpacetime, phi0):
    phi0 = np.asarray(values_of(phi0), float)
    return phi0, diff_t(phi0, st.dt), diff_x(phi0, st.dx)


def principal_symbol(L: GeneralizedLagrangian, phi0) -> MetricField:
    """Closed-form contravariant principal symbol of P = E'/mu at every node.

    For the epsilon model with w = g^-1(dphi0, dphi0) and c = 1 + phi0^2:
    ghat^-1 = (1 + eps c w) g^-1 + 2 eps c (g^-1 dphi0) (x) (g^-1 dphi0).
    """
    st = L.grid
    gi = st.metric.inverse()
    kind = L.symbol
    if kind is None:
        raise ValueError(f"no closed-form symbol for {L.name}")
    if kind[0] == "free":
        return gi
    if kind[0] == "epsilon":
        eps = kind[1]
        phi, pt, px = _gradient(st, phi0)
        c = 1 + phi * phi
        w = gi.tt * pt * pt + 2 * gi.tx * pt * px + gi.xx * px * px
        vt = gi.tt * pt + gi.tx * px
        vx = gi.tx * pt + gi.xx * px
        a = 1 + eps * c * w
        b = 2 * eps * c
        return MetricField(a * gi.tt + b * vt * vt, a * gi.tx + b * vt * vx, a * gi.xx + b * vx * vx)
    raise ValueError(f"no closed-form symbol for {L.name}")


@dataclass
class SymbolReport:
    inverse: MetricField
    metric: Optional[MetricField]
    degenerate: np.ndarray


def principal_metric(L: GeneralizedLagrangian, phi0, rtol: float = 1e-12) -> SymbolReport:
    """ghat on vectors, with nodes of degenerate symbol reported rather than raised."""
    ginv = principal_symbol(L, phi0)
    scale = ginv.tt**2 + ginv.xx**2 + 2 * ginv.tx**2
    degenerate = np.abs(ginv.det) <= rtol * scale
    if degenerate.any():
        return SymbolReport(ginv, None, degenerate)
    return SymbolReport(ginv, ginv.inverse(), degenerate)


def symbol_limit_probe(L: GeneralizedLagrangian, phi0, node, covector, scale: float = 1e4) -> float:
    """lambda^-2 e^{-lambda f} P(e^{lambda f}) at ``node`` for f linear with df = covector.

    The linearized operator is assembled pointwise from the density's partial
    derivatives (coefficient derivatives by centred differences), evaluated
    at lambda, 2 lambda and 4 lambda, and extrapolated in 1/lambda.
    """
    st = L.grid
    phi, pt, px = _gradient(st, phi0)
    gi = st.metric.inverse()
    ginv = (gi.tt, gi.tx, gi.xx)
    mu = st.metric.sqrt_abs_det
    P = {}
    for term in L.terms:
        weight = mu if term.measure == "metric" else np.ones(st.shape)
        part = term.density.partials(phi, pt, px, ginv, 2)
        for key, val in part.items():
            P[key] = P.get(key, 0.0) + weight * val
    k = np.asarray(covector, float)
    it, ix = node

    def d(arr, axis):
        return (diff_t(arr, st.dt) if axis == 0 else diff_x(arr, st.dx))[it, ix]

    at = lambda arr: np.broadcast_to(arr, st.shape)[it, ix]
    # E' psi / psi for psi = exp(lam k.x); the P0m lam k_m terms cancel.
    get = lambda key: np.broadcast_to(P.get(key, 0.0), st.shape)
    zero_order = at(get((0, 0))) - sum(d(get((0, m)), m - 1) for m in (1, 2))
    first = -sum(d(get(tuple(sorted((m, n)))), m - 1) * k[n - 1] for m in (1, 2) for n in (1, 2))
    second = -sum(at(get(tuple(sorted((m, n))))) * k[m - 1] * k[n - 1] for m in (1, 2) for n in (1, 2))
    m0 = mu[it, ix]

    def q(lam):
        return (zero_order + first * lam + second * lam * lam) / (m0 * lam * lam)

    # remove the 1/lam and 1/lam^2 remainders
    return float((q(scale) - 6 * q(2 * scale) + 8 * q(4 * scale)) / 3)


# hyperbolicity domains ---------------------------------------------------------------------
CLASSES = ("subluminal-hyperbolic", "degenerate", "reversed")


@dataclass
class DomainReport:
    classes: np.ndarray        # per-node index into CLASSES
    indicator: np.ndarray      # w + 1/(2 eps c)
    nh_holds: bool

    def labels(self) -> np.ndarray:
        return np.array(CLASSES, dtype=object)[self.classes]

    def count(self, label: str) -> int:
        return int(np.sum(self.classes == CLASSES.index(label)))


def hyperbolicity_indicator(L: GeneralizedLagrangian, phi0) -> np.ndarray:
    """g^-1(dphi0, dphi0) + 1/(2 eps (1 + phi0^2)); +inf for the free field."""
    st = L.grid
    if L.symbol is None or L.symbol[0] not in ("free", "epsilon"):
        raise ValueError(f"no hyperbolicity rule for {L.name}")
    if L.symbol[0] == "free" or L.symbol[1] == 0:
        return np.full(st.shape, np.inf)
    eps = L.symbol[1]
    phi, pt, px = _gradient(st, phi0)
    gi = st.metric.inverse()
    w = gi.tt * pt * pt + 2 * gi.tx * pt * px + gi.xx * px * px
    return w + 1.0 / (2 * eps * (1 + phi * phi))


def hyperbolicity_domain(L: GeneralizedLagrangian, phi0, rtol: float = 1e-12) -> DomainReport:
    """Per-node sign classification of the hyperbolicity indicator."""
    st = L.grid
    s = hyperbolicity_indicator(L, phi0)
    if np.all(np.isinf(s)):
        return DomainReport(np.zeros(st.shape, int), s, True)
    eps = L.symbol[1]
    phi, pt, px = _gradient(st, phi0)
    gi = st.metric.inverse()
    w = gi.tt * pt * pt + 2 * gi.tx * pt * px + gi.xx * px * px
    tol = rtol * (np.abs(w) + 1.0 / (2 * eps * (1 + phi * phi)))
    cls = np.where(s > tol, 0, np.where(s < -tol, 2, 1))
    return DomainReport(cls, s, bool(np.all(cls == 0)))


def symbol_cone_class(L: GeneralizedLagrangian, phi0, rtol: float = 1e-12) -> np.ndarray:
    """Signature of the closed-form symbol per node: lorentzian, elliptic, reversed or degenerate."""
    ginv = principal_symbol(L, phi0)
    scale = ginv.tt**2 + ginv.xx**2 + 2 * ginv.tx**2
    det = ginv.det
    out = np.where(det > rtol * scale, "elliptic", np.where(ginv.tt < 0, "lorentzian", "reversed"))
    out = np.where(np.abs(det) <= rtol * scale, "degenerate", out)
    return out.astype(object)


# triviality and Lagrangian axioms -------------------------------------------------------------
def random_test_function(st: GridSpacetime, rng: np.random.Generator, margin: int = 3) -> np.ndarray:
    T = st.dt * (st.nt - 1)
    lo, hi = (margin + 2) * st.dt, T - (margin + 2) * st.dt
    centre = (rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo)), rng.uniform(0, st.period))
    radius = (rng.uniform(0.12, 0.2) * T, rng.uniform(0.12, 0.2) * st.period)
    ramp = (rng.uniform(0.06, 0.1) * T, rng.uniform(0.06, 0.1) * st.period)
    return TestFunction.raised_cosine(st, centre, radius, ramp).values


def differential_support(f: np.ndarray) -> np.ndarray:
    """Nodes where f differs from some neighbour (the discrete support of df)."""
    out = np.zeros(f.shape, bool)
    for dt_ in (-1, 0, 1):
        for dx_ in (-1, 0, 1):
            g = np.roll(f, dx_, axis=1)
            if dt_ == 1:
                out[1:] |= f[1:] != g[:-1]
            elif dt_ == -1:
                out[:-1] |= f[:-1] != g[1:]
            else:
                out |= f != g
    return out


@dataclass
class TrivialityReport:
    trivial: bool
    worst_leak: int
    trials: int
    seed: int

    def __bool__(self):
        return bool(self.trivial)


def is_trivial(L: GeneralizedLagrangian, trials: int = 4, seed: int = 0, reach: int = 1) -> TrivialityReport:
    """supp L(f) inside supp(df) widened by the stencil reach, over random f."""
    st = L.grid
    rng = np.random.default_rng(seed)
    probes = probe_plan(st, seed, n_random=3, constants=(0.5,), amplitude=0.5)
    worst = 0
    for _ in range(trials):
        f = random_test_function(st, rng)
        supp = spacetime_support(L(f), probes).support
        allowed = dilate(differential_support(f), reach)
        worst = max(worst, int(np.sum(supp & ~allowed)))
    return TrivialityReport(worst == 0, worst, trials, seed)


def equivalent(L1: GeneralizedLagrangian, L2: GeneralizedLagrangian, trials: int = 4, seed: int = 0) -> bool:
    """Two Lagrangians are equivalent when their difference is trivial."""
    diff = GeneralizedLagrangian(
        f"{L1.name}-{L2.name}",
        L1.grid,
        L1.terms + tuple(Term(_Negated(t.density), t.rule, t.measure) for t in L2.terms),
        None,
    )
    return is_trivial(diff, trials, seed).trivial


@dataclass(frozen=True)
class _Negated:
    inner: object

    @property
    def uses_gradient(self):
        return self.inner.uses_gradient

    def value(self, *args):
        return -self.inner.value(*args)

    def partials(self, *args, **kw):
        return {k: -v for k, v in self.inner.partials(*args, **kw).items()}


@dataclass
class AxiomReport:
    support_ok: bool
    additive_ok: bool
    worst_additivity: float


def check_lagrangian_axioms(L: GeneralizedLagrangian, trials: int = 3, seed: int = 0, reach: int = 1,
                            rtol: float = 1e-10) -> AxiomReport:
    """Support in supp f (up to the stencil reach) and additivity in f."""
    st = L.grid
    rng = np.random.default_rng(seed)
    probes = probe_plan(st, seed, n_random=3, amplitude=0.5)
    support_ok = True
    worst = 0.0
    for _ in range(trials):
        fs = []
        while len(fs) < 3:
            f = random_test_function(st, rng)
            fs.append(f)
        f1, f2, f3 = fs
        if np.any(dilate(f1 != 0, 2) & (f3 != 0)):
            f3 = np.roll(f1, st.nx // 2, axis=1)
            if np.any(dilate(f1 != 0, 2) & (f3 != 0)):
                continue
        supp = spacetime_support(L(f1), probes).support
        support_ok &= not np.any(supp & ~dilate(f1 != 0, reach))
        for phi in probes[:3]:
            vals = [L(f1 + f2 + f3)(phi), L(f1 + f2)(phi), L(f2)(phi), L(f2 + f3)(phi)]
            resid = abs(vals[0] - (vals[1] - vals[2] + vals[3]))
            worst = max(worst, resid / max(max(abs(v) for v in vals), 1e-300))
    return AxiomReport(bool(support_ok), worst <= rtol, worst)


def reference_for(L: GeneralizedLagrangian) -> MetricField:
    """Background cone for normal hyperbolicity: g for the free field, the lattice cone otherwise."""
    if L.symbol == ("free",):
        return L.grid.metric
    return lattice_metric(L.grid)
