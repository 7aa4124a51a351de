"""Cone algebra for microcausal wave-front bounds.

Wave-front sets are never estimated numerically.  A k-point kernel is
described by a set of label tuples, one label per slot, from the alphabet
future / past / spacelike / zero (null covectors count as causal).  A tuple
of covectors is admissible when it is neither entirely in the closed future
cone nor entirely in the closed past cone, zero slots belonging to both.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import FrozenSet, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .functionals import (
    Constant,
    Functional,
    LocalTerm,
    Precomposed,
    Product,
    RegularKernel,
    Restricted,
    ScalarMul,
    SmoothCompose,
    Sum,
)
from .geometry import NULL_TOL, GridSpacetime, classify_covector

FUTURE, PAST, SPACELIKE, ZERO = "future", "past", "spacelike", "zero"
LABELS = (FUTURE, PAST, SPACELIKE, ZERO)
M_MAX = 64

Labelling = Tuple[str, ...]


@dataclass(frozen=True)
class CovectorTuple:
    nodes: tuple
    covectors: np.ndarray

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.covectors, float))
        if xi.ndim != 2 or xi.shape[1] != 2:
            raise ValueError("covectors must have shape (k, 2)")
        if len(self.nodes) != xi.shape[0] or xi.shape[0] < 1:
            raise ValueError("need one node per covector and k >= 1")
        if not np.any(xi):
            raise ValueError("the all-zero tuple lies in the zero section")
        object.__setattr__(self, "covectors", xi)
        object.__setattr__(self, "nodes", tuple(tuple(int(v) for v in n) for n in self.nodes))

    @property
    def k(self) -> int:
        return len(self.nodes)

    def rescaled(self, factors) -> "CovectorTuple":
        f = np.asarray(factors, float)
        if np.any(f <= 0):
            raise ValueError("rescaling factors must be positive")
        return CovectorTuple(self.nodes, self.covectors * f[:, None])


def label(st: GridSpacetime, node, xi) -> str:
    if xi[0] == 0 and xi[1] == 0:
        return ZERO
    kind = classify_covector(st, node, xi)
    if kind == SPACELIKE:
        return SPACELIKE
    return FUTURE if kind.startswith("future") else PAST


def labels_of(st: GridSpacetime, tup: CovectorTuple) -> Labelling:
    return tuple(label(st, n, xi) for n, xi in zip(tup.nodes, tup.covectors))


def admissible(labels: Sequence[str]) -> bool:
    """The label form of the complement of the all-future and all-past cones."""
    if all(l == ZERO for l in labels):
        raise ValueError("the all-zero labelling lies in the zero section")
    return not all(l in (FUTURE, ZERO) for l in labels) and not all(l in (PAST, ZERO) for l in labels)


def in_upsilon(st: GridSpacetime, tup: CovectorTuple) -> bool:
    return admissible(labels_of(st, tup))


# exhaustion by closed cones ---------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ConeFamily:
    """Widened covector cones of g^-1 - eps_m U (x) U with eps_m = eps0 2^-m.

    U is the g-unit timelike vector dual to dt.  Subtracting eps U (x) U
    enlarges every covector light cone, so the closed outside of the widened
    cone exhausts the spacelike covectors as m grows.
    """

    grid: GridSpacetime
    eps0: float = 1.0
    steps: int = M_MAX

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.steps < 1:
            raise ValueError("need at least one step")
        object.__setattr__(self, "_inverse", self.grid.metric.inverse())

    def eps(self, m: int) -> float:
        if not 0 <= m <= self.steps:
            raise IndexError(f"cone index {m} outside 0..{self.steps}")
        return self.eps0 * 2.0 ** (-m)

    def unit_vector(self, node) -> np.ndarray:
        gi = self._inverse
        it, ix = node
        tt, tx = gi.tt[it, ix], gi.tx[it, ix]
        # U = g^-1(dt, .) / sqrt(-g^tt)
        return np.array([tt, tx]) / np.sqrt(-tt)

    def quadratic(self, node, xi, m: int) -> float:
        gi = self._inverse
        it, ix = node
        a, b = float(xi[0]), float(xi[1])
        q = gi.tt[it, ix] * a * a + 2 * gi.tx[it, ix] * a * b + gi.xx[it, ix] * b * b
        u = float(np.dot(self.unit_vector(node), (a, b)))
        return q - self.eps(m) * u * u

    def outside(self, node, xi, m: int) -> bool:
        """xi nonzero and not inside the open widened cone.

        The widened cone contains the closed light cone, so only covectors
        labelled spacelike qualify; this keeps the null tolerance band of the
        labels and the cone test consistent once eps_m drops below rounding.
        """
        if xi[0] == 0 and xi[1] == 0:
            return False
        return label(self.grid, node, xi) == SPACELIKE and self.quadratic(node, xi, m) >= 0

    def is_lorentzian(self, m: int) -> bool:
        gi = self._inverse
        U = np.stack([gi.tt, gi.tx]) / np.sqrt(-gi.tt)
        e = self.eps(m)
        tt = gi.tt - e * U[0] ** 2
        tx = gi.tx - e * U[0] * U[1]
        xx = gi.xx - e * U[1] ** 2
        return bool(np.all(tt * xx - tx * tx < 0))

    def nested_at(self, node, xi, m: int) -> bool:
        """Outside at m implies strictly outside at m + 1."""
        if not self.outside(node, xi, m):
            return True
        return self.quadratic(node, xi, m + 1) > 0


class GammaMembership(NamedTuple):
    member: bool
    omega_type: Optional[str]


def in_gamma(st: GridSpacetime, family: ConeFamily, tup: CovectorTuple, m: int) -> GammaMembership:
    """Membership in the m-th closed cone of the exhaustion and its Omega type."""
    family.eps(m)
    labs = labels_of(st, tup)
    admissible(labs)
    wide = [family.outside(n, xi, m) for n, xi in zip(tup.nodes, tup.covectors)]
    causal_or_zero = [l != SPACELIKE for l in labs]
    if any(wide) and all(w or c for w, c in zip(wide, causal_or_zero)):
        return GammaMembership(True, "a")
    if SPACELIKE not in labs and FUTURE in labs and PAST in labs:
        return GammaMembership(True, "c" if ZERO in labs else "b")
    return GammaMembership(False, None)


def first_gamma_index(st: GridSpacetime, family: ConeFamily, tup: CovectorTuple) -> Optional[int]:
    for m in range(family.steps + 1):
        if in_gamma(st, family, tup, m).member:
            return m
    return None


# Omega counting -----------------------------------------------------------------------------
# slot factors of the Omega products
WIDE, CAUSAL = "outside", "causal-or-zero"
_FACTORS = (WIDE, CAUSAL, FUTURE, PAST, ZERO)


class OmegaCounts(NamedTuple):
    type_a: int
    type_b: int
    type_c: int
    total: int


def omega_closed_form(k: int) -> OmegaCounts:
    return OmegaCounts(2**k - 1, 2**k - 2, 3**k - 3 * 2**k + 3, 3**k - 2**k)


def omega_type(pattern: Sequence[str]) -> Optional[str]:
    """Which family an Omega factor pattern belongs to, if any."""
    s = set(pattern)
    if s <= {WIDE, CAUSAL} and WIDE in s:
        return "a"
    if s <= {FUTURE, PAST} and s == {FUTURE, PAST}:
        return "b"
    if s <= {FUTURE, PAST, ZERO} and {FUTURE, PAST, ZERO} <= s:
        return "c"
    return None


def omega_patterns(k: int):
    for pattern in itertools.product(_FACTORS, repeat=k):
        t = omega_type(pattern)
        if t is not None:
            yield pattern, t


def enumerate_omegas(k: int) -> OmegaCounts:
    counts = {"a": 0, "b": 0, "c": 0}
    for _, t in omega_patterns(k):
        counts[t] += 1
    return OmegaCounts(counts["a"], counts["b"], counts["c"], sum(counts.values()))


def _factor_contains(factor: str, lab: str) -> bool:
    if factor == WIDE:
        return lab == SPACELIKE
    if factor == CAUSAL:
        return lab != SPACELIKE
    return factor == lab


def partition_defects(k: int) -> int:
    """Labellings covered by the wrong number of Omegas (admissible: one, others: none)."""
    patterns = [p for p, _ in omega_patterns(k)]
    bad = 0
    for labs in itertools.product(LABELS, repeat=k):
        if all(l == ZERO for l in labs):
            continue
        hits = sum(all(_factor_contains(f, l) for f, l in zip(p, labs)) for p in patterns)
        bad += hits != (1 if admissible(labs) else 0)
    return bad


def omega_counts(k: int) -> OmegaCounts:
    """Closed-form counts, checked against exhaustive enumeration."""
    if not 1 <= k <= 8:
        raise ValueError("k must lie in 1..8")
    closed = omega_closed_form(k)
    enumerated = enumerate_omegas(k)
    if closed != enumerated:
        raise ArithmeticError(f"closed form {closed} disagrees with enumeration {enumerated} at k={k}")
    return closed


# symbolic label sets -------------------------------------------------------------------------------
LabelSet = FrozenSet[Labelling]


def all_labellings(k: int) -> LabelSet:
    return frozenset(l for l in itertools.product(LABELS, repeat=k) if any(x != ZERO for x in l))


def local_labels(k: int) -> LabelSet:
    """Labels of the conormal bundle of the k-fold diagonal.

    Covectors summing to zero cannot all be future (or all past) causal, and
    every other nonzero pattern occurs, so these are the admissible labels.
    """
    if k < 2:
        return frozenset()
    return frozenset(l for l in all_labellings(k) if admissible(l))


def contained(labels: Iterable[Labelling]) -> bool:
    return all(admissible(l) for l in labels)


def product_wf_bound(wf_left: Iterable[Labelling], wf_right: Iterable[Labelling], k: int, l: int) -> LabelSet:
    """Label bound for a tensor product of a k-point and an l-point kernel:
    pairs of labels, plus each factor's labels against zeros in the other slots."""
    wf_left, wf_right = frozenset(wf_left), frozenset(wf_right)
    for x in wf_left:
        if len(x) != k:
            raise ValueError("left labels do not have k slots")
    for y in wf_right:
        if len(y) != l:
            raise ValueError("right labels do not have l slots")
    out = {x + y for x in wf_left for y in wf_right}
    out |= {x + (ZERO,) * l for x in wf_left}
    out |= {(ZERO,) * k + y for y in wf_right}
    return frozenset(out)


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _permute(labels: LabelSet, order: Sequence[int]) -> LabelSet:
    """Move the label at block position i to slot order[i]."""
    inv = np.argsort(order)
    return frozenset(tuple(l[j] for j in inv) for l in labels)


def functional_labels(F: Functional, k: int) -> LabelSet:
    """Symbolic wave-front labels of the k-th derivative kernel of F."""
    if k < 1:
        raise ValueError("k >= 1")
    if isinstance(F, (Constant, RegularKernel)):
        return frozenset()
    if isinstance(F, LocalTerm):
        return local_labels(k)
    if isinstance(F, (ScalarMul, Restricted)):
        return functional_labels(F.inner, k)
    if isinstance(F, Precomposed):
        return functional_labels(F.inner, k)
    if isinstance(F, Sum):
        out = frozenset()
        for t in F.terms:
            out |= functional_labels(t, k)
        return out
    if isinstance(F, Product):
        return _leibniz_labels([F.left, F.right], k, blocks_per_factor=1)
    if isinstance(F, SmoothCompose):
        return _faa_di_bruno_labels(list(F.inner), k)
    raise TypeError(f"no wave-front labels for {type(F).__name__}")


def _leibniz_labels(factors, k, blocks_per_factor=1) -> LabelSet:
    left, right = factors
    out = frozenset()
    for r in range(k + 1):
        for chosen in itertools.combinations(range(k), r):
            rest = [j for j in range(k) if j not in chosen]
            a = functional_labels(left, r) if r else None
            b = functional_labels(right, k - r) if k - r else None
            if a is None:
                block = b
            elif b is None:
                block = a
            else:
                block = product_wf_bound(a, b, r, k - r)
            out |= _permute(block, list(chosen) + rest)
    return out


def _faa_di_bruno_labels(inner, k) -> LabelSet:
    out = frozenset()
    for part in _set_partitions(list(range(k))):
        for choice in itertools.product(range(len(inner)), repeat=len(part)):
            acc, width, order = None, 0, []
            for blk, idx in zip(part, choice):
                lab = functional_labels(inner[idx], len(blk))
                acc = lab if acc is None else product_wf_bound(acc, lab, width, len(blk))
                width += len(blk)
                order += blk
            out |= _permute(acc, order)
    return out


# conormal check for local functionals -------------------------------------------------------
@dataclass
class ConormalReport:
    kind: str               # "local", "regular" or "nonlocal"
    diagonal_ok: bool
    upsilon_ok: bool
    labels_ok: bool
    samples: int

    @property
    def ok(self) -> bool:
        return self.upsilon_ok and self.labels_ok and (self.kind != "local" or self.diagonal_ok)


def _chebyshev(st, a, b) -> int:
    dx = abs(a[1] - b[1])
    return max(abs(a[0] - b[0]), min(dx, st.nx - dx))


def check_conormal_local(F: Functional, phi, samples: int = 20, seed: int = 0, reach: int = 2) -> ConormalReport:
    """Second-derivative kernel on the diagonal and conormal pairs admissible.

    The kernel is probed with unit vectors at random nodes; a kernel whose
    responses all stay within ``reach`` cells of the probe is diagonal.
    Regular kernels pass by class, other nonlocal kernels through the label
    algebra.
    """
    st = F.grid
    rng = np.random.default_rng(seed)
    phi = np.asarray(phi, float)
    if isinstance(F, RegularKernel):
        return ConormalReport("regular", True, True, not functional_labels(F, 2), 0)
    diagonal = True
    for _ in range(samples):
        node = (int(rng.integers(0, st.nt)), int(rng.integers(0, st.nx)))
        e = np.zeros(st.shape)
        e[node] = 1.0
        resp = F.hvp(phi, e)
        scale = np.abs(resp).max()
        if scale == 0:
            continue
        for hit in np.argwhere(np.abs(resp) > 1e-12 * scale):
            if _chebyshev(st, node, tuple(hit)) > reach:
                diagonal = False
                break
    upsilon = True
    for _ in range(samples):
        node = (int(rng.integers(0, st.nt)), int(rng.integers(0, st.nx)))
        xi = rng.standard_normal(2)
        upsilon &= in_upsilon(st, CovectorTuple((node, node), np.stack([xi, -xi])))
    try:
        labels_ok = contained(functional_labels(F, 2))
    except TypeError:
        labels_ok = False
    return ConormalReport("local" if diagonal else "nonlocal", diagonal, bool(upsilon), labels_ok, samples)


# sampling -----------------------------------------------------------------------------------
def random_covector(st: GridSpacetime, node, kind: str, rng: np.random.Generator, inverse=None) -> np.ndarray:
    """Covector of a requested label: future, past, spacelike, null-future, null-past or zero."""
    if kind == ZERO:
        return np.zeros(2)
    gi = st.metric.inverse() if inverse is None else inverse
    it, ix = node
    tt, tx, xx = gi.tt[it, ix], gi.tx[it, ix], gi.xx[it, ix]
    for _ in range(1000):
        b = rng.standard_normal()
        # roots of tt a^2 + 2 tx a b + xx b^2 = 0 in a
        disc = np.sqrt(tx * tx * b * b - tt * xx * b * b)
        roots = sorted(((-tx * b - disc) / tt, (-tx * b + disc) / tt))
        if kind.startswith("null"):
            a = roots[0] if rng.random() < 0.5 else roots[1]
        elif kind == SPACELIKE:
            a = rng.uniform(roots[0], roots[1])
        else:
            span = roots[1] - roots[0] + 1.0
            a = rng.choice([roots[0] - rng.uniform(0.01, 2) * span, roots[1] + rng.uniform(0.01, 2) * span])
        xi = np.array([a, b])
        want = kind.split("-")[-1] if kind.startswith("null") else kind
        got = label(st, node, xi)
        if want == SPACELIKE and got == SPACELIKE:
            return xi
        if want in (FUTURE, PAST):
            if got == SPACELIKE:
                continue
            return xi if got == want else -xi
    raise RuntimeError(f"could not sample a {kind} covector")


def random_tuple(st: GridSpacetime, k: int, rng: np.random.Generator, admissible_only: bool = True) -> CovectorTuple:
    kinds = (FUTURE, PAST, SPACELIKE, ZERO, "null-future", "null-past")
    gi = st.metric.inverse()
    while True:
        nodes = [(int(rng.integers(0, st.nt)), int(rng.integers(0, st.nx))) for _ in range(k)]
        picks = rng.choice(len(kinds), size=k)
        xis = np.stack([random_covector(st, n, kinds[p], rng, gi) for n, p in zip(nodes, picks)])
        if not np.any(xis):
            continue
        tup = CovectorTuple(tuple(nodes), xis)
        if not admissible_only or in_upsilon(st, tup):
            return tup


__all__ = [
    "FUTURE", "PAST", "SPACELIKE", "ZERO", "LABELS", "M_MAX",
    "CovectorTuple", "label", "labels_of", "admissible", "in_upsilon",
    "ConeFamily", "GammaMembership", "in_gamma", "first_gamma_index",
    "OmegaCounts", "omega_closed_form", "omega_type", "omega_patterns", "enumerate_omegas",
    "partition_defects", "omega_counts",
    "all_labellings", "local_labels", "contained", "product_wf_bound", "functional_labels",
    "ConormalReport", "check_conormal_local", "random_covector", "random_tuple",
    "NULL_TOL",
]
