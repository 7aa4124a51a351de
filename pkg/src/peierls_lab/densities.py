"""Pointwise Lagrangian-type densities lambda(phi, p_t, p_x) with partials to order 3.

Every catalogue density has the form ``Lam(phi, w)`` where ``w`` is a
quadratic form in the first differences ``p = (p_t, p_x)``: either the
inverse metric ``g^{-1}(p, p)`` or the Euclidean ``p_t^2 + p_x^2``.
Partials with respect to the jet variables (0: phi, 1: p_t, 2: p_x) follow
from the chain rule; since ``w`` is quadratic only blocks of one or two
p-indices appear.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Dict, Tuple

import numpy as np

MAX_ORDER = 3
JET_KEYS = [k for n in range(MAX_ORDER + 1) for k in combinations_with_replacement(range(3), n)]

# Lam partials are returned as {(a, b): d^a/dphi^a d^b/dw^b Lam}
LamFn = Callable[[np.ndarray, np.ndarray], Dict[Tuple[int, int], np.ndarray]]


def _pairings(idx: Tuple[int, ...]):
    """Partitions of a tuple of p-indices into blocks of size one or two."""
    if not idx:
        yield []
        return
    first, rest = idx[0], idx[1:]
    for tail in _pairings(rest):
        yield [(first,)] + tail
    for j in range(len(rest)):
        others = rest[:j] + rest[j + 1:]
        for tail in _pairings(others):
            yield [(first, rest[j])] + tail


@dataclass(frozen=True)
class GradientDensity:
    """lambda = Lam(phi, w(p)); ``form`` selects the quadratic form for w."""

    name: str
    lam: LamFn = field(repr=False)
    form: str = "metric"
    uses_gradient: bool = True
    params: tuple = ()

    def quad(self, ginv):
        if self.form == "metric":
            return ginv
        if self.form == "euclidean":
            one = np.ones_like(ginv[0])
            return (one, 0.0 * one, one)
        raise ValueError(f"unknown quadratic form {self.form!r}")

    def value(self, phi, pt, px, ginv):
        a, b, c = self.quad(ginv)
        w = a * pt * pt + 2 * b * pt * px + c * px * px
        return self.lam(phi, w)[(0, 0)]

    def partials(self, phi, pt, px, ginv, order: int = MAX_ORDER):
        """Dict keyed by sorted jet-index tuples up to ``order``."""
        a, b, c = self.quad(ginv)
        w = a * pt * pt + 2 * b * pt * px + c * px * px
        L = self.lam(phi, w)
        # dw/dp_i and d2w/dp_i dp_j
        w1 = {1: 2 * (a * pt + b * px), 2: 2 * (b * pt + c * px)}
        w2 = {(1, 1): 2 * a, (1, 2): 2 * b, (2, 1): 2 * b, (2, 2): 2 * c}
        zero = np.zeros_like(phi)
        out = {}
        for key in JET_KEYS:
            if len(key) > order:
                continue
            nphi = key.count(0)
            pidx = tuple(k for k in key if k)
            if pidx and not self.uses_gradient:
                out[key] = zero
                continue
            total = zero
            for blocks in _pairings(pidx):
                coef = L.get((nphi, len(blocks)))
                if coef is None:
                    continue
                term = coef
                for blk in blocks:
                    term = term * (w1[blk[0]] if len(blk) == 1 else w2[blk])
                total = total + term
            out[key] = total
        return out


# Lam catalogue -------------------------------------------------------------------
def _zero_like(phi):
    return np.zeros_like(phi)


def free_lam(mass: float = 0.0) -> LamFn:
    """-1/2 w - 1/2 m^2 phi^2."""
    m2 = mass * mass

    def lam(phi, w):
        z = _zero_like(phi)
        return {
            (0, 0): -0.5 * w - 0.5 * m2 * phi * phi,
            (1, 0): -m2 * phi,
            (2, 0): -m2 + z,
            (0, 1): -0.5 + z,
        }

    return lam


def epsilon_lam(eps: float, mass: float = 0.0) -> LamFn:
    """-1/2 [w + (eps/2)(1 + phi^2) w^2] - 1/2 m^2 phi^2."""
    m2 = mass * mass

    def lam(phi, w):
        z = _zero_like(phi)
        c = 1 + phi * phi
        q = 0.25 * eps
        return {
            (0, 0): -0.5 * w - q * c * w * w - 0.5 * m2 * phi * phi,
            (1, 0): -2 * q * phi * w * w - m2 * phi,
            (2, 0): -2 * q * w * w - m2 + z,
            (3, 0): z,
            (0, 1): -0.5 - 2 * q * c * w,
            (0, 2): -2 * q * c,
            (0, 3): z,
            (1, 1): -4 * q * phi * w,
            (2, 1): -4 * q * w,
            (1, 2): -4 * q * phi,
        }

    return lam


def polynomial_lam(coeffs) -> LamFn:
    """Sum_n coeffs[n] phi^n, no gradient dependence."""
    coeffs = tuple(float(c) for c in coeffs)

    def lam(phi, w):
        out = {}
        for a in range(MAX_ORDER + 1):
            total = np.zeros_like(phi)
            for n, c in enumerate(coeffs):
                if n < a or c == 0.0:
                    continue
                fall = np.prod(np.arange(n - a + 1, n + 1)) if a else 1
                total = total + c * fall * phi ** (n - a)
            out[(a, 0)] = total
        return out

    return lam


def sobolev_lam() -> LamFn:
    """phi^2 + w (with the Euclidean form this is |phi|^2 + |grad phi|^2)."""

    def lam(phi, w):
        z = _zero_like(phi)
        return {(0, 0): phi * phi + w, (1, 0): 2 * phi, (2, 0): 2 + z, (0, 1): 1 + z}

    return lam


def free_field(mass: float = 0.0) -> GradientDensity:
    return GradientDensity("free", free_lam(mass), params=(("mass", mass),))


def epsilon_model(eps: float, mass: float = 0.0) -> GradientDensity:
    return GradientDensity("epsilon", epsilon_lam(eps, mass), params=(("eps", eps), ("mass", mass)))


def polynomial(*coeffs) -> GradientDensity:
    return GradientDensity("polynomial", polynomial_lam(coeffs), uses_gradient=False, params=(("coeffs", coeffs),))


def linear() -> GradientDensity:
    return polynomial(0.0, 1.0)


def half_square() -> GradientDensity:
    return polynomial(0.0, 0.0, 0.5)


def sobolev_order1() -> GradientDensity:
    return GradientDensity("sobolev1", sobolev_lam(), form="euclidean")


def sobolev_order0() -> GradientDensity:
    return polynomial(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class DivergenceDensity:
    """Forward-difference divergence of the current (phi^2/2, phi^2/2).

    On a forward jet, (J(phi + dt p_t) - J(phi)) / dt + (J(phi + dx p_x) - J(phi)) / dx
    equals phi (p_t + p_x) + (dt p_t^2 + dx p_x^2) / 2.
    """

    dt: float
    dx: float
    name: str = "divergence"
    uses_gradient: bool = True

    def value(self, phi, pt, px, ginv):
        return phi * (pt + px) + 0.5 * (self.dt * pt * pt + self.dx * px * px)

    def partials(self, phi, pt, px, ginv, order: int = MAX_ORDER):
        z = np.zeros_like(phi)
        out = {k: z for k in JET_KEYS if len(k) <= order}
        out[()] = self.value(phi, pt, px, ginv)
        if order >= 1:
            out[(0,)] = pt + px
            out[(1,)] = phi + self.dt * pt
            out[(2,)] = phi + self.dx * px
        if order >= 2:
            out[(0, 1)] = 1 + z
            out[(0, 2)] = 1 + z
            out[(1, 1)] = self.dt + z
            out[(2, 2)] = self.dx + z
        return out


CATALOGUE = {
    "linear": linear,
    "half_square": half_square,
    "cubic": lambda: polynomial(0.0, 0.0, 0.0, 1.0 / 6.0),
    "quartic": lambda: polynomial(0.0, 0.0, 0.0, 0.0, 0.25),
    "free": free_field,
    "epsilon": epsilon_model,
    "sobolev0": sobolev_order0,
    "sobolev1": sobolev_order1,
}


def by_name(name: str, **params) -> GradientDensity:
    try:
        factory = CATALOGUE[name]
    except KeyError:
        raise KeyError(f"unknown density {name!r}; known: {sorted(CATALOGUE)}") from None
    return factory(**params)
