import itertools

import numpy as np
import pytest

from peierls_lab import lagrangian as lg
from peierls_lab.fields import FieldConfig, TestFunction, pair, random_field
from peierls_lab.functionals import DomainError
from peierls_lab.geometry import GridSpacetime, MetricField, metric_order_leq


@pytest.fixture(scope="module")
def st():
    return GridSpacetime.minkowski(24, 24, dt=1 / 48, dx=1 / 24)


def interior_direction(st, rng, centre=(0.25, 0.5), radius=0.03):
    return rng.normal(size=st.shape) * (TestFunction.raised_cosine(st, centre, radius, 0.03).values > 0)


def free_first_variation(st, phi, u):
    """Average over the four one-sided difference quadrants of phi_t u_t - phi_x u_x."""
    total = 0.0
    for s_t in (1, -1):
        for s_x in (1, -1):
            pt = s_t * (np.roll(phi, -s_t, 0) - phi) / st.dt
            ut = s_t * (np.roll(u, -s_t, 0) - u) / st.dt
            px = s_x * (np.roll(phi, -s_x, 1) - phi) / st.dx
            ux = s_x * (np.roll(u, -s_x, 1) - u) / st.dx
            keep = np.ones(st.shape, bool)
            keep[0 if s_t < 0 else -1] = False  # no wrap in time
            total += 0.25 * np.sum((pt * ut - px * ux)[keep])
    return total * st.cell_area


# Euler-Lagrange derivative --------------------------------------------------------------------------
def test_free_field_first_variation(st):
    rng = np.random.default_rng(0)
    L = lg.free_field(st)
    phi = random_field(st, rng)
    u = interior_direction(st, rng)
    assert lg.el_derivative(L, phi, [u]) == pytest.approx(free_first_variation(st, phi, u), rel=1e-12)


def test_free_field_constant_background(st):
    u = interior_direction(st, np.random.default_rng(1))
    assert lg.el_derivative(lg.free_field(st), np.full(st.shape, 2.0), [u]) == 0.0


@pytest.mark.parametrize("name", ["free", "epsilon", "sobolev"])
def test_el_derivative_cutoff_independent(st, name):
    rng = np.random.default_rng(2)
    L = lg.by_name(st, name, **({"eps": 0.1} if name == "epsilon" else {}))
    phi = random_field(st, rng, amplitude=0.1)
    u, v = interior_direction(st, rng), interior_direction(st, rng)
    for dirs in ([u], [u, v], [u, v, u]):
        a = lg.el_derivative(L, phi, dirs, pad=1, ramp=2)
        b = lg.el_derivative(L, phi, dirs, pad=2, ramp=3)
        assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


def test_el_derivative_rejects_boundary_directions(st):
    u = np.zeros(st.shape)
    u[0] = 1.0
    with pytest.raises(DomainError):
        lg.el_derivative(lg.free_field(st), np.zeros(st.shape), [u])


def test_el_operator_pairs_to_el_derivative(st):
    rng = np.random.default_rng(3)
    L = lg.epsilon_model(st, 0.1)
    for _ in range(20):
        phi = random_field(st, rng, amplitude=0.2)
        u = interior_direction(st, rng, centre=(rng.uniform(0.22, 0.28), rng.uniform(0, 1)))
        d = lg.el_derivative(L, phi, [u])
        assert pair(lg.el_operator(L, phi), FieldConfig(u, st)) == pytest.approx(d, rel=1e-12, abs=1e-15)


def test_free_solution_has_no_interior_residual(st):
    L = lg.free_field(st)
    op = lg.linearize(L, np.zeros(st.shape))
    t, x = st.coords()
    data = op.cauchy_data(np.sin(2 * np.pi * x) * np.cos(2 * np.pi * t), 1)
    phi = op.solve_cauchy(data)
    E = lg.el_operator(L, phi).coeffs
    assert np.abs(E[1:-1]).max() <= 1e-10 * np.abs(op.Hd).max() * np.abs(phi).max()


def test_epsilon_model_vanishes_at_zero(st):
    assert np.all(lg.el_operator(lg.epsilon_model(st, 0.1), np.zeros(st.shape)).coeffs == 0.0)


# linearization ----------------------------------------------------------------------------------------------
def test_free_linearization_symbol_is_metric(st):
    ghat = lg.linearize(lg.free_field(st), np.zeros(st.shape)).symbol_metric()
    g = st.metric
    for a, b in ((ghat.tt, g.tt), (ghat.tx, g.tx), (ghat.xx, g.xx)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_epsilon_symbol_at_constant_background_is_metric(st):
    ginv = lg.principal_symbol(lg.epsilon_model(st, 0.3), np.full(st.shape, 0.7))
    gi = st.metric.inverse()
    assert np.array_equal(ginv.tt, gi.tt) and np.array_equal(ginv.tx, gi.tx) and np.array_equal(ginv.xx, gi.xx)


@pytest.mark.parametrize("name", ["free", "epsilon", "sobolev", "mass"])
def test_hessian_symmetric_on_interior_pairs(st, name):
    params = {"epsilon": {"eps": 0.1}, "mass": {"shift": 2.0}}.get(name, {})
    L = lg.by_name(st, name, **params)
    rng = np.random.default_rng(4)
    phi = random_field(st, rng, amplitude=0.2)
    H = lg.action_hessian(L, phi)
    for _ in range(5):
        a, b = interior_direction(st, rng).ravel(), interior_direction(st, rng, centre=(0.3, 0.45)).ravel()
        ab, ba = a @ (H @ b), b @ (H @ a)
        assert abs(ab - ba) <= 1e-12 * max(abs(ab), 1e-300)


def test_linearization_is_derivative_of_el_operator(st):
    L = lg.epsilon_model(st, 0.1)
    rng = np.random.default_rng(5)
    phi, u = random_field(st, rng, amplitude=0.2), random_field(st, rng, amplitude=0.5)
    exact = lg.linearize(L, phi).apply_density(u)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (lg.el_operator(L, phi + h * u).coeffs - lg.el_operator(L, phi - h * u).coeffs) / (2 * h)
        errs.append(np.abs(fd - exact).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_third_variation_totally_symmetric(st):
    L = lg.epsilon_model(st, 0.1)
    rng = np.random.default_rng(6)
    phi = random_field(st, rng, amplitude=0.2)
    dirs = [interior_direction(st, rng, centre=(0.25, c)) for c in (0.45, 0.5, 0.55)]
    vals = [np.sum(lg.third_variation(L, phi, a, b) * c) for a, b, c in itertools.permutations(dirs)]
    assert max(vals) - min(vals) <= 1e-12 * max(abs(v) for v in vals)


# symbols and hyperbolicity domains ------------------------------------------------------------------------
def test_closed_form_symbol_matches_limit_probe(st):
    L = lg.epsilon_model(st, 0.1)
    rng = np.random.default_rng(7)
    phi0 = random_field(st, rng, amplitude=0.2)
    sym = lg.principal_symbol(L, phi0)
    for _ in range(8):
        node = (int(rng.integers(2, st.nt - 2)), int(rng.integers(st.nx)))
        for k in ((1.0, 0.0), (0.0, 1.0), (1.0, -2.0)):
            exact = sym.tt[node] * k[0] ** 2 + 2 * sym.tx[node] * k[0] * k[1] + sym.xx[node] * k[1] ** 2
            assert lg.symbol_limit_probe(L, phi0, node, k) == pytest.approx(exact, abs=1e-6)


def test_spacelike_gradient_widens_symbol_cone(st):
    # the correction adds a positive square to the inverse symbol, so covector
    # cones shrink and the vector cones of the symbol contain those of g
    L = lg.epsilon_model(st, 0.1)
    t, x = st.coords()
    phi0 = 0.2 * np.sin(2 * np.pi * x) + 0.05 * np.cos(2 * np.pi * x) * t
    rep = lg.principal_metric(L, phi0)
    assert rep.metric is not None and not rep.degenerate.any()
    assert metric_order_leq(st, st.metric, rep.metric)
    assert not metric_order_leq(st, rep.metric, st.metric)


def test_steep_time_function_reverses_symbol(st):
    eps = 0.5
    L = lg.epsilon_model(st, eps)
    t, _ = st.coords()
    phi0 = 2.0 * t   # g^-1(dphi, dphi) = -4 < -1/(2 eps (1 + phi^2))
    rep = lg.principal_metric(L, phi0)
    assert np.all(lg.symbol_cone_class(L, phi0) == "reversed")
    flipped = rep.metric.scaled(-1.0)
    assert metric_order_leq(st, flipped, st.metric)
    assert lg.hyperbolicity_domain(L, phi0).count("reversed") == st.size


def test_zero_background_is_hyperbolic(st):
    rep = lg.hyperbolicity_domain(lg.epsilon_model(st, 0.1), np.zeros(st.shape))
    assert rep.nh_holds and rep.count("subluminal-hyperbolic") == st.size


def test_coordinate_time_background_reversed_by_formula(st):
    eps = 2.0
    t, _ = st.coords()
    rep = lg.hyperbolicity_domain(lg.epsilon_model(st, eps), t)
    expected = -1 + 1 / (2 * eps * (1 + t * t)) < 0
    assert np.array_equal(rep.classes == 2, expected)
    assert expected.any()


def test_degenerate_witness(st):
    eps = 0.25
    t, _ = st.coords()
    t0 = t[12, 0]
    phi0 = (t - t0) / np.sqrt(2 * eps)
    rep = lg.hyperbolicity_domain(lg.epsilon_model(st, eps), phi0)
    assert np.all(rep.labels()[12] == "degenerate")
    assert rep.count("degenerate") == st.nx
    assert not rep.nh_holds


def test_free_field_always_hyperbolic(st):
    rep = lg.hyperbolicity_domain(lg.free_field(st), random_field(st, np.random.default_rng(0), amplitude=5.0))
    assert rep.nh_holds


# triviality, equivalence and Lagrangian axioms -------------------------------------------------------------
@pytest.fixture(scope="module")
def st32():
    return GridSpacetime.minkowski(32, 32)


def test_divergence_is_trivial(st32):
    assert lg.is_trivial(lg.divergence(st32))


def test_free_field_is_not_trivial(st32):
    assert not lg.is_trivial(lg.free_field(st32))


def test_adding_a_divergence_preserves_equivalence(st32):
    L = lg.free_field(st32)
    M = L + lg.divergence(st32)
    assert lg.equivalent(L, M)
    assert not lg.equivalent(L, lg.epsilon_model(st32, 0.1))
    rng = np.random.default_rng(8)
    phi = random_field(st32, rng)
    a, b = lg.el_operator(L, phi).coeffs, lg.el_operator(M, phi).coeffs
    assert np.abs(a - b)[1:-1].max() <= 1e-12 * np.abs(a).max()


def test_divergence_euler_lagrange_vanishes_inside(st32):
    phi = random_field(st32, np.random.default_rng(9))
    E = lg.el_operator(lg.divergence(st32), phi).coeffs
    assert np.abs(E[1:-1]).max() <= 1e-9


@pytest.mark.parametrize("name", ["free", "epsilon", "sobolev", "mass"])
def test_lagrangian_axioms(st32, name):
    params = {"epsilon": {"eps": 0.1}, "mass": {"shift": 1.0}}.get(name, {})
    rep = lg.check_lagrangian_axioms(lg.by_name(st32, name, **params), trials=3, seed=1)
    assert rep.support_ok and rep.additive_ok


def test_unknown_lagrangian(st):
    with pytest.raises(KeyError):
        lg.by_name(st, "nope")
