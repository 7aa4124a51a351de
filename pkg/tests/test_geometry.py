import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from peierls_lab.geometry import (
    GeometryError,
    GridSpacetime,
    MetricField,
    causal_future,
    causal_past,
    classify_covector,
    dilate,
    lattice_metric,
    metric_order_leq,
    metric_order_lt,
)

from oracles import cone_contains_by_sampling, lattice_light_cone


@pytest.fixture
def mink():
    return GridSpacetime.minkowski(20, 24)


def test_grid_rejects_bad_shapes():
    with pytest.raises(GeometryError):
        GridSpacetime.minkowski(2, 10)
    with pytest.raises(GeometryError):
        GridSpacetime.from_components(5, 5, 0.1, 0.1, 1.0, 0.0, 1.0)


def test_classify_minkowski_examples(mink):
    assert classify_covector(mink, (3, 4), (1.0, 0.0)) == "future-timelike"
    assert classify_covector(mink, (3, 4), (-1.0, 0.0)) == "past-timelike"
    assert classify_covector(mink, (3, 4), (0.0, 1.0)) == "spacelike"
    assert classify_covector(mink, (3, 4), (1.0, 1.0)) == "future-null"
    assert classify_covector(mink, (3, 4), (-1.0, 1.0)) == "past-null"


def test_classify_rejects_zero_and_bad_node(mink):
    with pytest.raises(GeometryError):
        classify_covector(mink, (0, 0), (0.0, 0.0))
    with pytest.raises(GeometryError):
        classify_covector(mink, (20, 0), (1.0, 0.0))


@settings(max_examples=200, deadline=None)
@given(st_.floats(-5, 5), st_.floats(-5, 5), st_.floats(0.01, 100))
def test_classify_homogeneous_and_flips(a, b, scale):
    st = GridSpacetime.minkowski(4, 4)
    if a * a + b * b < 1e-6:
        return
    c = classify_covector(st, (1, 1), (a, b))
    assert classify_covector(st, (1, 1), (scale * a, scale * b)) == c
    flipped = classify_covector(st, (1, 1), (-a, -b))
    swap = {"future": "past", "past": "future"}
    head, _, tail = c.partition("-")
    assert flipped == (c if c == "spacelike" else f"{swap[head]}-{tail}")


def test_future_cone_matches_light_cone_predicate(mink):
    for ix0 in (0, 7, 23):
        got = causal_future(mink, [(0, ix0)])
        assert np.array_equal(got, lattice_light_cone(20, 24, (0, ix0)))


def test_past_cone_matches_light_cone_predicate(mink):
    got = causal_past(mink, [(19, 5)])
    assert np.array_equal(got, lattice_light_cone(20, 24, (19, 5), future=False))


def test_whole_slice_seed_fills_window(mink):
    seed = np.zeros(mink.shape, bool)
    seed[0] = True
    assert causal_future(mink, seed).all()


def test_past_of_first_slice_stays_there(mink):
    got = causal_past(mink, [(0, 3), (0, 9)])
    assert not got[1:].any()
    assert got[0].any()


def test_conformal_factor_leaves_cones_unchanged(mink):
    conf = GridSpacetime.conformal(20, 24, mink.dt, mink.dx, lambda t, x: 1.5 + np.sin(2 * np.pi * x) * np.cos(t))
    seed = [(2, 3), (5, 17)]
    assert np.array_equal(causal_future(conf, seed), causal_future(mink, seed))
    assert np.array_equal(causal_past(conf, seed), causal_past(mink, seed))


def test_past_is_reflected_future_on_reversed_grid():
    st = GridSpacetime.from_components(16, 16, 1 / 32, 1 / 16, -1.0, 0.3, 1.0)
    seed = np.zeros(st.shape, bool)
    seed[10, 4] = seed[12, 11] = True
    rev = st.time_reversed()
    assert np.array_equal(causal_past(st, seed), causal_future(rev, seed[::-1])[::-1])


@settings(max_examples=30, deadline=None)
@given(st_.lists(st_.tuples(st_.integers(0, 15), st_.integers(0, 15)), min_size=1, max_size=4))
def test_sweep_is_monotone_and_idempotent(nodes):
    st = GridSpacetime.minkowski(16, 16)
    base = causal_future(st, nodes, dilation=0)
    assert np.array_equal(causal_future(st, base, dilation=0), base)
    bigger = causal_future(st, nodes + [(0, 0)], dilation=0)
    assert np.all(bigger >= base)


def test_narrower_symbol_cone_sits_inside():
    st = GridSpacetime.minkowski(24, 24, dt=1 / 48, dx=1 / 24)
    narrow = MetricField.constant(-1.0, 0.0, 4.0, st.shape)   # speed 1/2
    seed = [(3, 10)]
    assert np.all(causal_future(st, seed, narrow) <= causal_future(st, seed))


def test_dilate_is_chebyshev():
    m = np.zeros((7, 7), bool)
    m[3, 3] = True
    assert dilate(m, 1).sum() == 9
    assert dilate(m, 2).sum() == 25


def _constant(st, tt, tx, xx):
    return MetricField.constant(tt, tx, xx, st.shape)


def test_metric_order_examples():
    st = GridSpacetime.minkowski(4, 4)
    g1 = _constant(st, -1, 0, 1)
    g2 = _constant(st, -1, 0, 0.25)
    assert metric_order_leq(st, g1, g1)
    assert metric_order_leq(st, g1, g2)
    assert not metric_order_leq(st, g2, g1)
    assert metric_order_lt(st, g1, g2)
    assert not metric_order_lt(st, g1, g1)
    conf = g1.scaled(3.7)
    assert metric_order_leq(st, g1, conf) and metric_order_leq(st, conf, g1)


@settings(max_examples=60, deadline=None)
@given(st_.floats(0.2, 5), st_.floats(-0.9, 0.9), st_.floats(0.2, 5), st_.floats(-0.9, 0.9))
def test_metric_order_against_angular_sampling(s1, b1, s2, b2):
    st = GridSpacetime.minkowski(3, 3)
    g1 = np.array([[-1.0, b1 / s1], [b1 / s1, 1 / s1**2]])
    g2 = np.array([[-1.0, b2 / s2], [b2 / s2, 1 / s2**2]])
    if np.linalg.det(g1) >= -1e-3 or np.linalg.det(g2) >= -1e-3:
        return
    wider = g2 * np.array([[1.0, 1.0], [1.0, 1 - 1e-3]])
    narrower = g2 * np.array([[1.0, 1.0], [1.0, 1 + 1e-3]])
    loose, tight = cone_contains_by_sampling(g1, wider), cone_contains_by_sampling(g1, narrower)
    got = metric_order_leq(st, _constant(st, *g1.ravel()[[0, 1, 3]]), _constant(st, *g2.ravel()[[0, 1, 3]]))
    if loose == tight:  # skip near-ties the mesh cannot resolve
        assert got == loose


def test_metric_order_transitive():
    st = GridSpacetime.minkowski(3, 3)
    chain = [_constant(st, -1, 0, xx) for xx in (4.0, 1.0, 0.5, 0.2)]
    for i in range(4):
        for j in range(i, 4):
            assert metric_order_leq(st, chain[i], chain[j])


def test_metric_order_rejects_riemannian():
    st = GridSpacetime.minkowski(3, 3)
    with pytest.raises(GeometryError):
        metric_order_leq(st, _constant(st, 1, 0, 1), _constant(st, -1, 0, 1))


def test_lattice_metric_has_one_cell_per_step():
    st = GridSpacetime.minkowski(8, 8, dt=0.05, dx=0.1)
    g = lattice_metric(st)
    assert np.allclose(np.sqrt(-g.tt / g.xx), st.dx / st.dt)
