import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hs

from peierls_lab import functionals as fn
from peierls_lab import microcausal as mc
from peierls_lab import outer
from peierls_lab.fields import TestFunction
from peierls_lab.geometry import GridSpacetime

from oracles import FROZEN_OMEGA, brute_omega_counts


@pytest.fixture(scope="module")
def st():
    return GridSpacetime.minkowski(8, 8)


@pytest.fixture(scope="module")
def tilted():
    return GridSpacetime.from_components(8, 8, 1 / 16, 1 / 8, -1.0, 0.3, 1.0)


def tup(*xis, node=(2, 3)):
    return mc.CovectorTuple(tuple(node for _ in xis), np.array(xis, float))


# upsilon --------------------------------------------------------------------------------------------------
def test_single_covector(st):
    assert mc.in_upsilon(st, tup((0.0, 1.0)))
    assert not mc.in_upsilon(st, tup((1.0, 0.2)))
    assert not mc.in_upsilon(st, tup((-1.0, 0.2)))


def test_opposite_timelike_pair(st):
    assert mc.in_upsilon(st, tup((1.0, 0.3), (-1.0, -0.3)))


def test_two_future_null(st):
    assert not mc.in_upsilon(st, tup((1.0, 1.0), (2.0, -2.0)))


def test_zero_slots_belong_to_both_cones(st):
    assert not mc.in_upsilon(st, tup((1.0, 0.0), (0.0, 0.0)))
    assert mc.in_upsilon(st, tup((0.0, 1.0), (0.0, 0.0)))


def test_zero_section_rejected(st):
    with pytest.raises(ValueError):
        tup((0.0, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        mc.admissible(("zero", "zero"))


# cone family and Gamma ------------------------------------------------------------------------------------
def test_family_invariants(tilted):
    fam = mc.ConeFamily(tilted, eps0=0.5, steps=12)
    rng = np.random.default_rng(0)
    for m in range(12):
        assert fam.is_lorentzian(m)
        assert fam.eps(m + 1) < fam.eps(m)
        for _ in range(50):
            assert fam.nested_at((3, 4), rng.standard_normal(2), m)
    with pytest.raises(IndexError):
        fam.eps(13)


def test_k1_gamma_is_type_a(st):
    fam = mc.ConeFamily(st, eps0=0.5)
    wide = tup((0.1, 1.0))
    assert mc.in_gamma(st, fam, wide, 0) == (True, "a")
    almost_null = tup((0.999, 1.0))
    first = mc.first_gamma_index(st, fam, almost_null)
    assert first is not None and first > 0
    assert not mc.in_gamma(st, fam, almost_null, first - 1).member
    assert not mc.in_gamma(st, fam, tup((1.0, 0.0)), 0).member


def test_null_pair_is_type_b_for_all_indices(st):
    fam = mc.ConeFamily(st, eps0=0.5, steps=10)
    pair = tup((1.0, 1.0), (-1.0, 1.0))
    for m in range(11):
        assert mc.in_gamma(st, fam, pair, m) == (True, "b")


def test_type_c_needs_a_zero_slot(st):
    fam = mc.ConeFamily(st)
    assert mc.in_gamma(st, fam, tup((1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)), 0) == (True, "c")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gamma_monotone_inside_upsilon_and_exhausts(tilted, k):
    fam = mc.ConeFamily(tilted, eps0=1.0)
    rng = np.random.default_rng(k)
    for _ in range(1000):
        t = mc.random_tuple(tilted, k, rng, admissible_only=False)
        inside = mc.in_upsilon(tilted, t)
        members = [mc.in_gamma(tilted, fam, t, m).member for m in range(0, 24)]
        # once in, always in; never outside upsilon
        assert all(b or not a for a, b in zip(members, members[1:]))
        assert not any(members) or inside
        if inside:
            assert mc.first_gamma_index(tilted, fam, t) is not None


@settings(max_examples=100, deadline=None)
@given(hs.lists(hs.tuples(hs.floats(-3, 3), hs.floats(-3, 3)), min_size=1, max_size=3),
       hs.lists(hs.floats(0.01, 50), min_size=3, max_size=3))
def test_conic_invariance(xis, scales):
    st = GridSpacetime.minkowski(6, 6)
    xi = np.array(xis)
    if not np.any(np.abs(xi) > 1e-3):
        return
    # keep away from the null directions, where scaling can cross the tolerance band
    q = -xi[:, 0] ** 2 + xi[:, 1] ** 2
    if np.any((np.abs(q) < 1e-6) & np.any(xi != 0, axis=1)):
        return
    t = mc.CovectorTuple(tuple((1, 1) for _ in xis), xi)
    s = t.rescaled(scales[: len(xis)])
    assert mc.in_upsilon(st, t) == mc.in_upsilon(st, s)
    fam = mc.ConeFamily(st, eps0=0.7)
    for m in (0, 3, 9):
        if mc.labels_of(st, t).count("zero") == len(xis):
            continue
        if mc.in_upsilon(st, t):
            assert mc.in_gamma(st, fam, t, m) == mc.in_gamma(st, fam, s, m)


# Omega counts --------------------------------------------------------------------------------------------
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_omega_counts_against_brute_force(k):
    counts = mc.omega_counts(k)
    assert counts[:3] == brute_omega_counts(k) == FROZEN_OMEGA[k]
    assert counts.total == 3**k - 2**k


def test_omega_examples():
    assert tuple(mc.omega_counts(1)) == (1, 0, 0, 1)
    assert tuple(mc.omega_counts(2)) == (3, 2, 0, 5)
    assert tuple(mc.omega_counts(3)) == (7, 6, 6, 19)


@pytest.mark.parametrize("k", range(1, 9))
def test_omega_closed_form_matches_enumeration(k):
    assert mc.enumerate_omegas(k) == mc.omega_closed_form(k)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_omegas_partition_admissible_labellings(k):
    assert mc.partition_defects(k) == 0


def test_omega_counts_range():
    with pytest.raises(ValueError):
        mc.omega_counts(9)


# labels and product bounds --------------------------------------------------------------------------
def test_all_spacelike_product_is_contained():
    left = {("spacelike", "spacelike")}
    right = {("spacelike",)}
    out = mc.product_wf_bound(left, right, 2, 1)
    assert all(set(l) <= {"spacelike", "zero"} for l in out)
    assert mc.contained(out)


@pytest.mark.parametrize("k,l", [(2, 1), (2, 2), (3, 1), (1, 3)])
def test_local_times_regular_is_contained(k, l):
    loc = mc.local_labels(k) if k > 1 else frozenset()
    reg = frozenset()
    out = mc.product_wf_bound(loc, reg, k, l)
    assert mc.contained(out)
    # brute force: every output labelling is a local labelling padded with zeros
    for lab in out:
        assert lab[k:] == ("zero",) * l and mc.admissible(lab[:k])


def test_all_future_input_is_flagged():
    out = mc.product_wf_bound({("future",)}, {("future",)}, 1, 1)
    assert not mc.contained(out)


def test_local_labels_are_the_admissible_ones():
    for k in (2, 3):
        expected = {l for l in itertools.product(mc.LABELS, repeat=k) if any(x != "zero" for x in l) and mc.admissible(l)}
        assert mc.local_labels(k) == expected


def test_product_bound_rejects_wrong_arity():
    with pytest.raises(ValueError):
        mc.product_wf_bound({("future",)}, set(), 2, 1)


# conormal checks ------------------------------------------------------------------------------------
@pytest.fixture(scope="module")
def grid16():
    return GridSpacetime.minkowski(16, 16)


def _f(st, c):
    return TestFunction.raised_cosine(st, c, 0.1, 0.08).values


def test_local_functionals_are_conormal(grid16):
    st = grid16
    phi = np.random.default_rng(0).normal(size=st.shape) * 0.1
    for F in (fn.quadratic(st, _f(st, (0.4, 0.5))), fn.sobolev_functional(st, _f(st, (0.5, 0.3)))):
        rep = mc.check_conormal_local(F, phi)
        assert rep.kind == "local" and rep.ok


def test_regular_kernel_passes_by_class(grid16):
    st = grid16
    rng = np.random.default_rng(1)
    K = fn.RegularKernel(st, rng.standard_normal(st.shape), (rng.standard_normal(st.shape),), (1.0,))
    rep = mc.check_conormal_local(K, np.zeros(st.shape))
    assert rep.kind == "regular" and rep.ok


def test_product_of_locals_is_nonlocal_but_admissible(grid16):
    st = grid16
    F = fn.quadratic(st, _f(st, (0.3, 0.2)))
    G = fn.quadratic(st, _f(st, (0.6, 0.7)))
    rep = mc.check_conormal_local(F * G, np.full(st.shape, 0.5), samples=60)
    assert rep.kind == "nonlocal" and rep.ok
    # first derivatives of locals are smooth, so only the diagonal blocks contribute
    assert mc.functional_labels(F * G, 2) == mc.local_labels(2)


def test_composed_functional_labels_contained(grid16):
    st = grid16
    F = fn.quadratic(st, _f(st, (0.3, 0.2)))
    E = fn.smooth_compose(outer.exp(), [F])
    for k in (1, 2, 3):
        assert mc.contained(mc.functional_labels(E, k))


def test_deep_cone_index_never_leaves_upsilon():
    # at the last index eps_m is far below rounding, so near-null covectors sit on the edge
    st = GridSpacetime.from_components(16, 16, 1 / 32, 1 / 16, -1.0, 0.2, 1.0)
    fam = mc.ConeFamily(st)
    rng = np.random.default_rng(9)
    for _ in range(500):
        t = mc.random_tuple(st, 2, rng, admissible_only=False)
        if mc.in_gamma(st, fam, t, fam.steps).member:
            assert mc.in_upsilon(st, t)
