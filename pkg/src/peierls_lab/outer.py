"""Smooth outer maps R^n -> R with closed-form partials up to order 3.

``partials(x)`` returns a dict keyed by sorted index tuples of length 0..3.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb
from typing import Callable, Sequence

import numpy as np


def _keys(n: int):
    return [k for order in range(4) for k in combinations_with_replacement(range(n), order)]


@dataclass(frozen=True)
class OuterMap:
    name: str
    arity: int
    fn: Callable = field(repr=False)

    def partials(self, x: Sequence[float]) -> dict:
        if len(x) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} arguments, got {len(x)}")
        return self.fn(tuple(x))

    def __call__(self, *x):
        return self.partials(x)[()]


def scalar_map(name: str, derivs: Callable[[float], Sequence[float]]) -> OuterMap:
    """One-argument map from a function returning (f, f', f'', f''')."""

    def fn(x):
        d = derivs(x[0])
        return {(): d[0], (0,): d[1], (0, 0): d[2], (0, 0, 0): d[3]}

    return OuterMap(name, 1, fn)


def identity() -> OuterMap:
    return scalar_map("identity", lambda u: (u, 1.0, 0.0, 0.0))


def exp() -> OuterMap:
    def d(u):
        e = np.exp(u)
        return (e, e, e, e)

    return scalar_map("exp", d)


def tanh() -> OuterMap:
    def d(u):
        t = np.tanh(u)
        s = 1 - t * t
        return (t, s, -2 * t * s, s * (6 * t * t - 2))

    return scalar_map("tanh", d)


def polynomial(*coeffs) -> OuterMap:
    c = np.array(coeffs, float)

    def d(u):
        p = np.polynomial.Polynomial(c)
        return (p(u), p.deriv(1)(u), p.deriv(2)(u), p.deriv(3)(u))

    return scalar_map("polynomial", d)


# smooth step ---------------------------------------------------------------------
def _h(u: float):
    """exp(-1/u) for u > 0 and its first three derivatives."""
    if u <= 0:
        return (0.0, 0.0, 0.0, 0.0)
    e = np.exp(-1.0 / u)
    return (
        e,
        e / u**2,
        e * (1 / u**4 - 2 / u**3),
        e * (1 / u**6 - 6 / u**5 + 6 / u**4),
    )


def smooth_step(u: float):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1; returns value and 3 derivatives."""
    if u <= 0:
        return (0.0, 0.0, 0.0, 0.0)
    if u >= 1:
        return (1.0, 0.0, 0.0, 0.0)
    A = _h(u)
    hb = _h(1 - u)
    B = (hb[0], -hb[1], hb[2], -hb[3])
    D = [A[k] + B[k] for k in range(4)]
    s = [A[0] / D[0]]
    for k in range(1, 4):
        acc = A[k] - sum(comb(k, j) * s[j] * D[k - j] for j in range(k))
        s.append(acc / D[0])
    return tuple(s)


def plateau(inner: float, outer: float) -> OuterMap:
    """Even cutoff: 1 for |u| <= inner, 0 for |u| >= outer, smooth in between."""
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    width = outer - inner

    def d(u):
        sgn = 1.0 if u >= 0 else -1.0
        s = smooth_step((abs(u) - inner) / width)
        g = sgn / width
        return (1 - s[0], -s[1] * g, -s[2] * g * g, -s[3] * g**3)

    return scalar_map(f"plateau({inner},{outer})", d)


def scaled(m: OuterMap, scale: float) -> OuterMap:
    """u -> m(u / scale) for a one-argument map."""

    def d(u):
        p = m.partials((u / scale,))
        return (p[()], p[(0,)] / scale, p[(0, 0)] / scale**2, p[(0, 0, 0)] / scale**3)

    return scalar_map(f"{m.name}/{scale}", d)


def compose1(outer: OuterMap, inner: OuterMap) -> OuterMap:
    """outer(inner(u)) for one-argument maps, by the chain rule to order 3."""

    def d(u):
        i = inner.partials((u,))
        o = outer.partials((i[()],))
        a1, a2, a3 = i[(0,)], i[(0, 0)], i[(0, 0, 0)]
        b1, b2, b3 = o[(0,)], o[(0, 0)], o[(0, 0, 0)]
        return (o[()], b1 * a1, b2 * a1**2 + b1 * a2, b3 * a1**3 + 3 * b2 * a1 * a2 + b1 * a3)

    return scalar_map(f"{outer.name}({inner.name})", d)


def ratio(index: int, n: int) -> OuterMap:
    """x_index / sum(x); smooth where the sum is positive."""

    def fn(x):
        s = float(sum(x))
        xi = x[index]
        out = {}
        for key in _keys(n):
            k = len(key)
            hits = sum(1 for j in key if j == index)
            if k == 0:
                out[key] = xi / s
            elif k == 1:
                out[key] = hits / s - xi / s**2
            elif k == 2:
                out[key] = -hits / s**2 + 2 * xi / s**3
            else:
                out[key] = 2 * hits / s**3 - 6 * xi / s**4
        return out

    return OuterMap(f"ratio[{index}/{n}]", n, fn)


def product2() -> OuterMap:
    def fn(x):
        a, b = x
        out = {k: 0.0 for k in _keys(2)}
        out.update({(): a * b, (0,): b, (1,): a, (0, 1): 1.0})
        return out

    return OuterMap("product", 2, fn)


def gr_outer(R: float) -> OuterMap:
    """u -> exp(1 - chi(u / R)) with the plateau cutoff chi (1 on [-1,1], 0 beyond 2)."""
    chi = scaled(plateau(1.0, 2.0), R)
    one_minus = compose1(polynomial(1.0, -1.0), chi)
    return compose1(exp(), one_minus)


CATALOGUE = {
    "identity": identity,
    "exp": exp,
    "tanh": tanh,
    "polynomial": polynomial,
    "bump": lambda: plateau(0.5, 1.0),
    "plateau": plateau,
}


def by_name(name: str, *args) -> OuterMap:
    try:
        return CATALOGUE[name](*args)
    except KeyError:
        raise KeyError(f"unknown outer map {name!r}; known: {sorted(CATALOGUE)}") from None
