"""Retarded and advanced products, the Peierls bracket and its identities.

Everything is nodal: ``F.grad`` is the vector of partial derivatives with
respect to the field values, ``F.grad / cell_area`` the density that the
propagators act on.  With ``M`` the retarded solve (density -> field),

    R(F, G) = grad F . M (grad G / a),     A(F, G) = R(G, F),
    {F, G}  = R(F, G) - R(G, F).

The advanced propagator is the transpose of ``M``, which makes the bracket
antisymmetric bit for bit.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import values_of
from .functionals import (
    DomainError,
    Functional,
    SUPPORT_RTOL,
    spacetime_support,
    support_of_gradient,
)
from .geometry import MetricField, causal_future, causal_past, dilate
from .hyperbolic import LinearHypOp
from .lagrangian import GeneralizedLagrangian, linearize, reference_for

DEFAULT_MARGIN = 3


def _arr(phi) -> np.ndarray:
    return np.asarray(values_of(phi), float)


def _key(phi: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(phi).tobytes()).hexdigest()


@dataclass(eq=False)
class BracketContext:
    """A Lagrangian, the cone its propagators must respect and a propagator cache.

    ``reference`` defaults to the background metric for the free field and
    to the lattice cone otherwise.  Every field configuration used must give
    a normally hyperbolic linearization inside that cone.
    """

    lagrangian: GeneralizedLagrangian
    margin: int = DEFAULT_MARGIN
    reference: Optional[MetricField] = None
    cache_size: int = 16
    _ops: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.reference is None:
            self.reference = reference_for(self.lagrangian)
        if 2 * self.margin + 2 > self.grid.nt:
            raise ValueError("margin leaves no interior slices")

    @property
    def grid(self):
        return self.lagrangian.grid

    @property
    def area(self) -> float:
        return self.grid.cell_area

    @property
    def action(self) -> Functional:
        return self.lagrangian.action()

    def op(self, phi) -> LinearHypOp:
        phi = _arr(phi)
        key = _key(phi)
        op = self._ops.get(key)
        if op is None:
            op = linearize(self.lagrangian, phi, self.reference)
            h = op.hyperbolicity()
            if not h["ok"]:
                where = h["first_bad_node"]
                if where is None:
                    raise DomainError(f"linearization violates the CFL bound (cfl = {h['cfl']:.6g})")
                raise DomainError(f"linearization is not normally hyperbolic at node {where}")
            if len(self._ops) >= self.cache_size:
                self._ops.pop(next(iter(self._ops)))
            self._ops[key] = op
        return op

    def check_margin(self, grad: np.ndarray, what: str = "functional"):
        b = self.margin
        if np.any(grad[:b]) or np.any(grad[self.grid.nt - b:]):
            raise DomainError(f"{what} has support within {b} slices of the time boundary")

    # propagators on nodal gradients --------------------------------------------------------
    def ret(self, phi, grad: np.ndarray) -> np.ndarray:
        self.check_margin(grad)
        return self.op(phi).delta_ret(grad / self.area)

    def adv(self, phi, grad: np.ndarray) -> np.ndarray:
        self.check_margin(grad)
        return self.op(phi).delta_adv(grad / self.area)


# scalar products -------------------------------------------------------------------------------
def retarded_product(ctx: BracketContext, F: Functional, G: Functional, phi) -> float:
    """<F', Delta_ret G'> at phi."""
    phi = _arr(phi)
    gF = F.grad(phi)
    gG = G.grad(phi)
    ctx.check_margin(gF)
    if not np.any(gG):
        return 0.0
    return float(np.sum(gF * ctx.ret(phi, gG)))


def advanced_product(ctx: BracketContext, F: Functional, G: Functional, phi) -> float:
    return retarded_product(ctx, G, F, phi)


def peierls_bracket(ctx: BracketContext, F: Functional, G: Functional, phi) -> float:
    return retarded_product(ctx, F, G, phi) - retarded_product(ctx, G, F, phi)


def _retarded_gradient(ctx: BracketContext, F: Functional, G: Functional, phi) -> np.ndarray:
    """Nodal gradient of R(F, G): F''(psi) + G''(chi) - S'''(chi, psi),
    with psi = Delta_ret G' and chi = Delta_adv F'."""
    gF = F.grad(phi)
    gG = G.grad(phi)
    if not np.any(gF) or not np.any(gG):
        ctx.check_margin(gF)
        ctx.check_margin(gG)
        return np.zeros(ctx.grid.shape)
    psi = ctx.ret(phi, gG)
    chi = ctx.adv(phi, gF)
    return F.hvp(phi, psi) + G.hvp(phi, chi) - ctx.action.third(phi, chi, psi)


@dataclass(frozen=True, eq=False)
class RetardedProduct(Functional):
    """phi -> R(F, G)(phi) with its exact first derivative."""

    context: BracketContext
    first: Functional
    second: Functional
    max_order: int = 1

    @property
    def grid(self):
        return self.context.grid

    def children(self):
        return (self.first, self.second)

    def check_domain(self, phi):
        self.first.check_domain(phi)
        self.second.check_domain(phi)

    def _value(self, phi):
        return retarded_product(self.context, self.first, self.second, phi)

    def _grad(self, phi):
        return _retarded_gradient(self.context, self.first, self.second, phi)


def advanced(ctx: BracketContext, F: Functional, G: Functional) -> RetardedProduct:
    """A(F, G) as a functional: the retarded product with the slots exchanged."""
    return RetardedProduct(ctx, G, F)


@dataclass(frozen=True, eq=False)
class Bracket(Functional):
    """phi -> {F, G}(phi) with its exact first derivative."""

    context: BracketContext
    left: Functional
    right: Functional
    max_order: int = 1

    @property
    def grid(self):
        return self.context.grid

    def children(self):
        return (self.left, self.right)

    def check_domain(self, phi):
        self.left.check_domain(phi)
        self.right.check_domain(phi)

    def _value(self, phi):
        return peierls_bracket(self.context, self.left, self.right, phi)

    def _grad(self, phi):
        ctx, F, G = self.context, self.left, self.right
        return _retarded_gradient(ctx, F, G, phi) - _retarded_gradient(ctx, G, F, phi)


# identities ------------------------------------------------------------------------------------
def _relative(residual: float, terms) -> float:
    scale = max((abs(t) for t in terms), default=0.0)
    if scale == 0.0:
        return abs(residual)
    return abs(residual) / scale


@dataclass
class MasterIdentityReport:
    lhs_adv: float
    lhs_ret: float
    rhs: float
    terms: dict
    residual_adv: float
    residual_ret: float
    residual_between: float

    @property
    def worst(self) -> float:
        return max(self.residual_adv, self.residual_ret, self.residual_between)


def master_identity_residual(ctx: BracketContext, F: Functional, G: Functional, H: Functional, phi
                             ) -> MasterIdentityReport:
    """Both left-hand sides of the master identity and the right-hand side
    H''(Delta_adv F', Delta_ret G') - H''(Delta_ret F', Delta_adv G')."""
    for X in (F, G, H):
        if X.max_order < 2:
            raise DomainError(f"{type(X).__name__} lacks a second derivative")
    phi = _arr(phi)
    FG = Bracket(ctx, F, G)
    terms = {}
    terms["adv_1"] = peierls_bracket(ctx, advanced(ctx, H, F), G, phi)
    terms["adv_2"] = peierls_bracket(ctx, F, advanced(ctx, H, G), phi)
    terms["adv_3"] = -advanced_product(ctx, H, FG, phi)
    terms["ret_1"] = peierls_bracket(ctx, RetardedProduct(ctx, H, F), G, phi)
    terms["ret_2"] = peierls_bracket(ctx, F, RetardedProduct(ctx, H, G), phi)
    terms["ret_3"] = -retarded_product(ctx, H, FG, phi)
    gF, gG = F.grad(phi), G.grad(phi)
    adv_F, ret_F = ctx.adv(phi, gF), ctx.ret(phi, gF)
    adv_G, ret_G = ctx.adv(phi, gG), ctx.ret(phi, gG)
    terms["rhs_1"] = float(np.sum(adv_F * H.hvp(phi, ret_G)))
    terms["rhs_2"] = -float(np.sum(ret_F * H.hvp(phi, adv_G)))
    lhs_adv = terms["adv_1"] + terms["adv_2"] + terms["adv_3"]
    lhs_ret = terms["ret_1"] + terms["ret_2"] + terms["ret_3"]
    rhs = terms["rhs_1"] + terms["rhs_2"]
    vals = list(terms.values())
    return MasterIdentityReport(
        lhs_adv, lhs_ret, rhs, terms,
        _relative(lhs_adv - rhs, vals),
        _relative(lhs_ret - rhs, vals),
        _relative(lhs_adv - lhs_ret, vals),
    )


@dataclass
class JacobiReport:
    terms: tuple
    residual: float
    relative: float


def jacobi_residual(ctx: BracketContext, F: Functional, G: Functional, H: Functional, phi) -> JacobiReport:
    """{F,{G,H}} + {G,{H,F}} + {H,{F,G}} with inner brackets as functionals."""
    phi = _arr(phi)
    t = (
        peierls_bracket(ctx, F, Bracket(ctx, G, H), phi),
        peierls_bracket(ctx, G, Bracket(ctx, H, F), phi),
        peierls_bracket(ctx, H, Bracket(ctx, F, G), phi),
    )
    total = t[0] + t[1] + t[2]
    return JacobiReport(t, abs(total), _relative(total, t))


@dataclass
class LeibnizReport:
    lhs: float
    rhs: float
    relative: float


def leibniz_check(ctx: BracketContext, F: Functional, G: Functional, H: Functional, phi) -> LeibnizReport:
    """{F, GH} against {F, G} H + G {F, H}."""
    phi = _arr(phi)
    lhs = peierls_bracket(ctx, F, G * H, phi)
    a = peierls_bracket(ctx, F, G, phi) * H(phi)
    b = G(phi) * peierls_bracket(ctx, F, H, phi)
    return LeibnizReport(lhs, a + b, _relative(lhs - a - b, (lhs, a, b)))


def derivation_check(ctx: BracketContext, composite: Functional, inner: Functional, slope: float,
                     G: Functional, phi) -> LeibnizReport:
    """{psi(F), G} against psi'(F) {F, G}; ``slope`` is psi'(F(phi))."""
    lhs = peierls_bracket(ctx, composite, G, phi)
    rhs = slope * peierls_bracket(ctx, inner, G, phi)
    return LeibnizReport(lhs, rhs, _relative(lhs - rhs, (lhs, rhs)))


# supports --------------------------------------------------------------------------------------
@dataclass
class BracketSupportReport:
    retarded: np.ndarray
    advanced: np.ndarray
    bracket: np.ndarray
    retarded_ok: bool
    advanced_ok: bool
    bracket_ok: bool

    @property
    def ok(self) -> bool:
        return self.retarded_ok and self.advanced_ok and self.bracket_ok


def _support(ctx, F, probes) -> np.ndarray:
    out = np.zeros(ctx.grid.shape, bool)
    for phi in probes:
        out |= support_of_gradient(F.grad(phi), SUPPORT_RTOL)
    return out


def bracket_support_check(ctx: BracketContext, F: Functional, G: Functional, probes, reach: int = 1
                          ) -> BracketSupportReport:
    """Estimated supports of R(F,G), A(F,G), {F,G} against the cone laws.

    R(F,G) may only depend on the field in J-(supp F) and J+(supp G), A(F,G)
    in J+(supp F) and J-(supp G); cones are those of the context's reference
    metric and everything is widened by the stencil ``reach``.
    """
    st = ctx.grid
    sF, sG = _support(ctx, F, probes), _support(ctx, G, probes)
    empty = np.zeros(st.shape, bool)
    fut = lambda m: causal_future(st, m, ctx.reference) if m.any() else empty
    past = lambda m: causal_past(st, m, ctx.reference) if m.any() else empty
    allow_R = dilate(past(sF) & fut(sG), reach)
    allow_A = dilate(fut(sF) & past(sG), reach)
    allow_B = dilate((fut(sF) | past(sF)) & (fut(sG) | past(sG)), reach)
    R = spacetime_support(RetardedProduct(ctx, F, G), probes).support
    A = spacetime_support(advanced(ctx, F, G), probes).support
    B = spacetime_support(Bracket(ctx, F, G), probes).support
    return BracketSupportReport(
        R, A, B,
        not np.any(R & ~allow_R),
        not np.any(A & ~allow_A),
        not np.any(B & ~allow_B),
    )


# equation-of-motion functionals ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class EquationOfMotion(Functional):
    """phi -> pair(E(phi), chi): the Euler-Lagrange density tested against a fixed field."""

    lagrangian: GeneralizedLagrangian
    chi: np.ndarray
    max_order: int = 2

    @property
    def grid(self):
        return self.lagrangian.grid

    def _value(self, phi):
        return float(np.sum(self.lagrangian.action().grad(phi) * self.chi))

    def _grad(self, phi):
        return self.lagrangian.action().hvp(phi, self.chi)

    def _hvp(self, phi, u):
        return self.lagrangian.action().third(phi, self.chi, u)
