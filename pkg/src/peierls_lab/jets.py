"""Jet rules: how a pointwise density sees a grid field.

A rule is a list of jet samples.  Sample ``s`` sits at node ``c_s`` with
quadrature weight ``w_s`` and reads ``phi(c_s)`` and two first differences
``p_t = Jt phi``, ``p_x = Jx phi``.  The discrete integral of a density is

    sum_s w_s * f(c_s) * mu(c_s) * lambda(phi_s, p_t,s, p_x,s)

and its derivatives are exact sparse compositions of the jet maps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import GridSpacetime


@dataclass(frozen=True, eq=False)
class JetRule:
    name: str
    node: np.ndarray        # flat node index per sample
    weight: np.ndarray      # quadrature weight per sample (includes dt dx)
    J: tuple                # (J0, Jt, Jx) sparse, shape (samples, nodes)
    shape: tuple

    @property
    def nsamples(self) -> int:
        return self.node.size

    def jets(self, phi_flat: np.ndarray):
        return tuple(M @ phi_flat for M in self.J)


def _flat(st: GridSpacetime, it, ix):
    return it * st.nx + np.mod(ix, st.nx)


def _build_vectorised(st, name, node, weight, t_cols, t_vals, x_cols, x_vals):
    n = node.size
    N = st.size
    rows = np.arange(n)
    J0 = sp.csr_matrix((np.ones(n), (rows, node)), shape=(n, N))
    Jt = sp.csr_matrix(
        (np.concatenate(t_vals), (np.tile(rows, len(t_cols)), np.concatenate(t_cols))), shape=(n, N)
    )
    Jx = sp.csr_matrix(
        (np.concatenate(x_vals), (np.tile(rows, len(x_cols)), np.concatenate(x_cols))), shape=(n, N)
    )
    return JetRule(name, node, weight, (J0, Jt, Jx), st.shape)


def one_sided_average(st: GridSpacetime) -> JetRule:
    """Average over the four one-sided difference jets at each node.

    Nodes on the first and last slice only have the two jets pointing into
    the window, which gives them the trapezoid weight 1/2 in time.  For a
    diagonal metric the resulting Hessian is the five-point stencil.
    """
    return _cached(st, "one_sided")


def centred(st: GridSpacetime) -> JetRule:
    """One jet per node with centred differences (one sided at the time ends)."""
    return _cached(st, "centred")


def forward(st: GridSpacetime) -> JetRule:
    """One jet per node with forward differences; the last slice carries no weight."""
    return _cached(st, "forward")


def pointwise(st: GridSpacetime) -> JetRule:
    """Jets with zero differences: for densities that only read phi."""
    return _cached(st, "point")


RULES = {"one_sided": one_sided_average, "centred": centred, "forward": forward, "point": pointwise}

_CACHE: dict = {}


def _key(st):
    return (st.nt, st.nx, st.dt, st.dx)


def _cached(st, kind):
    key = (_key(st), kind)
    rule = _CACHE.get(key)
    if rule is None:
        rule = _make(st, kind)
        if len(_CACHE) > 64:
            _CACHE.clear()
        _CACHE[key] = rule
    return rule


def _make(st: GridSpacetime, kind: str) -> JetRule:
    nt, nx, dt, dx = st.nt, st.nx, st.dt, st.dx
    it, ix = np.meshgrid(np.arange(nt), np.arange(nx), indexing="ij")
    it, ix = it.ravel(), ix.ravel()
    c = _flat(st, it, ix)
    area = dt * dx
    if kind == "one_sided":
        nodes, weights, tc, tv, xc, xv = [], [], [], [], [], []
        for st_sign in (1, -1):
            ok = (it + st_sign >= 0) & (it + st_sign < nt)
            for sx in (1, -1):
                cc = c[ok]
                nb_t = _flat(st, it[ok] + st_sign, ix[ok])
                nb_x = _flat(st, it[ok], ix[ok] + sx)
                nodes.append(cc)
                weights.append(np.full(cc.size, 0.25 * area))
                tc.append((nb_t, cc))
                tv.append((np.full(cc.size, st_sign / dt), np.full(cc.size, -st_sign / dt)))
                xc.append((nb_x, cc))
                xv.append((np.full(cc.size, sx / dx), np.full(cc.size, -sx / dx)))
        node = np.concatenate(nodes)
        weight = np.concatenate(weights)
        t_cols = [np.concatenate([a for a, _ in tc]), np.concatenate([b for _, b in tc])]
        t_vals = [np.concatenate([a for a, _ in tv]), np.concatenate([b for _, b in tv])]
        x_cols = [np.concatenate([a for a, _ in xc]), np.concatenate([b for _, b in xc])]
        x_vals = [np.concatenate([a for a, _ in xv]), np.concatenate([b for _, b in xv])]
        return _build_vectorised(st, "one_sided", node, weight, t_cols, t_vals, x_cols, x_vals)
    weight = np.full(c.size, area)
    x_cols = [_flat(st, it, ix + 1), _flat(st, it, ix - 1)]
    x_vals = [np.full(c.size, 0.5 / dx), np.full(c.size, -0.5 / dx)]
    if kind == "centred":
        up = np.minimum(it + 1, nt - 1)
        dn = np.maximum(it - 1, 0)
        span = (up - dn) * dt
        t_cols = [_flat(st, up, ix), _flat(st, dn, ix)]
        t_vals = [1.0 / span, -1.0 / span]
        return _build_vectorised(st, "centred", c, weight, t_cols, t_vals, x_cols, x_vals)
    if kind == "forward":
        up = np.minimum(it + 1, nt - 1)
        weight = np.where(it < nt - 1, area, 0.0)
        t_cols = [_flat(st, up, ix), c]
        t_vals = [np.full(c.size, 1 / dt), np.full(c.size, -1 / dt)]
        x_cols = [_flat(st, it, ix + 1), c]
        x_vals = [np.full(c.size, 1 / dx), np.full(c.size, -1 / dx)]
        return _build_vectorised(st, "forward", c, weight, t_cols, t_vals, x_cols, x_vals)
    if kind == "point":
        z = np.zeros(c.size)
        return _build_vectorised(st, "point", c, weight, [c], [z], [c], [z])
    raise ValueError(f"unknown jet rule {kind!r}")


def rule_by_name(st: GridSpacetime, name: str) -> JetRule:
    try:
        return RULES[name](st)
    except KeyError:
        raise ValueError(f"unknown jet rule {name!r}; known: {sorted(RULES)}") from None


class JetIntegral:
    """Discrete integral of a density under a rule, with exact derivatives.

    ``coef`` is the per-node prefactor (test function times measure).  All
    derivative outputs are nodal, i.e. partial derivatives with respect to
    the flat field vector.
    """

    def __init__(self, st: GridSpacetime, rule: JetRule, density, coef: np.ndarray):
        self.st = st
        self.rule = rule
        self.density = density
        gi = st.metric.inverse()
        n = rule.node
        self._ginv = (gi.tt.ravel()[n], gi.tx.ravel()[n], gi.xx.ravel()[n])
        self._w = rule.weight * np.asarray(coef, float).ravel()[n]
        self._active = self._w != 0

    def _partials(self, phi: np.ndarray, order: int):
        j = self.rule.jets(phi.ravel())
        return self.density.partials(j[0], j[1], j[2], self._ginv, order)

    def value(self, phi):
        j = self.rule.jets(phi.ravel())
        lam = self.density.value(j[0], j[1], j[2], self._ginv)
        return float(np.dot(self._w, lam))

    def gradient(self, phi) -> np.ndarray:
        P = self._partials(phi, 1)
        out = np.zeros(self.st.size)
        for a in range(3):
            out += self.rule.J[a].T @ (self._w * P[(a,)])
        return out.reshape(self.st.shape)

    def hessian(self, phi) -> sp.csr_matrix:
        P = self._partials(phi, 2)
        J = self.rule.J
        H = None
        for a in range(3):
            for b in range(a, 3):
                d = self._w * P[(a, b)]
                if not np.any(d):
                    continue
                blk = J[a].T @ sp.diags(d) @ J[b]
                if a != b:
                    blk = blk + blk.T
                H = blk if H is None else H + blk
        if H is None:
            return sp.csr_matrix((self.st.size, self.st.size))
        return H.tocsr()

    def hvp(self, phi, u) -> np.ndarray:
        P = self._partials(phi, 2)
        J = self.rule.J
        ju = [M @ u.ravel() for M in J]
        out = np.zeros(self.st.size)
        for a in range(3):
            acc = np.zeros(self.rule.nsamples)
            for b in range(3):
                acc += P[tuple(sorted((a, b)))] * ju[b]
            out += J[a].T @ (self._w * acc)
        return out.reshape(self.st.shape)

    def third(self, phi, u, v) -> np.ndarray:
        """Nodal vector of D^3(u, v, .)."""
        P = self._partials(phi, 3)
        J = self.rule.J
        ju = [M @ u.ravel() for M in J]
        jv = [M @ v.ravel() for M in J]
        out = np.zeros(self.st.size)
        for a in range(3):
            acc = np.zeros(self.rule.nsamples)
            for b in range(3):
                for c in range(3):
                    acc += P[tuple(sorted((a, b, c)))] * ju[b] * jv[c]
            out += J[a].T @ (self._w * acc)
        return out.reshape(self.st.shape)

    def sample_support(self) -> np.ndarray:
        """Nodes touched by any sample with nonzero weight."""
        mask = np.zeros(self.st.size, bool)
        rows = np.flatnonzero(self._active)
        for M in self.rule.J:
            sub = M[rows]
            mask[sub.indices[sub.data != 0]] = True
        mask[self.rule.node[rows]] = True
        return mask.reshape(self.st.shape)
