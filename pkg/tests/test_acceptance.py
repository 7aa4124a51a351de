"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict table is
printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from peierls_lab import functionals as fn
from peierls_lab import lagrangian as lg
from peierls_lab import microcausal as mc
from peierls_lab import outer
from peierls_lab import peierls as pb
from peierls_lab.fields import FieldConfig, TestFunction, bump_array, random_field, sobolev_sq
from peierls_lab.geometry import GridSpacetime, causal_future
from peierls_lab.hyperbolic import resolvent_check
from peierls_lab.suites import catalogue, random_local, square_grid

from oracles import retarded_bump_solution

pytestmark = pytest.mark.acceptance


def wave(st):
    return lg.linearize(lg.free_field(st), np.zeros(st.shape))


def orders(errs):
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


# 1 -------------------------------------------------------------------------------------------------------
def test_greens_function_of_a_point_source(acceptance):
    start = time.perf_counter()
    errs = []
    for n in (32, 64, 128):
        st = square_grid(n, 0.5)
        i0, j0 = n // 8, n // 2
        v = np.zeros(st.shape)
        v[i0, j0] = 1.0 / st.cell_area
        u = wave(st).delta_ret(v)
        t, x = st.coords()
        s, d = t - t[i0, 0], np.abs(x - x[0, j0])
        green = -0.5 * ((s > 0) & (d <= s))
        interior = (s > 0.1) & (np.abs(d - s) > 0.1) & (s < 0.45)
        errs.append(float(np.abs(u - green)[interior].max()))
    o = orders(errs)
    seconds = time.perf_counter() - start
    ok = bool(np.all(o >= 1.9) and seconds <= 120)
    # context only: a smooth source of the same operator converges at second order
    centre, radius = (0.2, 0.5), (0.1, 0.1)
    sample = [(j, i) for j in (16, 22, 28) for i in (6, 10, 14, 19, 28)]
    exact = np.array([retarded_bump_solution(j / 64, i / 32, centre, radius) for j, i in sample])
    bump_errs = []
    for n in (32, 64, 128):
        st = square_grid(n, 0.5)
        b = bump_array(st, centre, radius)
        u = wave(st).delta_ret(b / (b.sum() * st.cell_area))
        bump_errs.append(np.abs(np.array([u[j * n // 32, i * n // 32] for j, i in sample]) - exact).max())
    acceptance(1, "point-source Green's function, interior order >= 1.9", ok,
               f"sup errors {[f'{e:.3g}' for e in errs]}, orders {[f'{v:.2f}' for v in o]}, {seconds:.1f}s; "
               f"smooth-source orders {[f'{v:.2f}' for v in orders(bump_errs)]}")
    assert ok


# 2 -------------------------------------------------------------------------------------------------------
def test_exact_discrete_causality(acceptance):
    rng = np.random.default_rng(2)
    leaks = 0
    grids = [GridSpacetime.minkowski(64, 64),
             GridSpacetime.conformal(64, 64, 1 / 64, 1 / 64, lambda t, x: 1.2 + 0.3 * np.sin(2 * np.pi * x))]
    for st in grids:
        op = wave(st)
        assert op.explicit()
        cone_metric = op.symbol_metric()
        for _ in range(25):
            v = np.zeros(st.shape)
            for _ in range(rng.integers(1, 4)):
                v[rng.integers(1, st.nt - 1), rng.integers(st.nx)] = rng.standard_normal()
            u = op.delta_ret(v)
            leaks += int(np.count_nonzero(u[~causal_future(st, v != 0, cone_metric)]))
    ok = leaks == 0
    acceptance(2, "retarded solves bitwise zero outside the discrete cone (50 sources)", ok, f"nonzero nodes {leaks}")
    assert ok


# 3 -------------------------------------------------------------------------------------------------------
def test_adjointness(acceptance):
    rng = np.random.default_rng(3)
    consts, pairing = [], 0.0
    for n in (32, 64, 128):
        st = square_grid(n, 0.5)
        op = wave(st)
        f = bump_array(st, (0.3, 0.5), (0.08, 0.15))
        h = bump_array(st, (0.2, 0.3), (0.08, 0.15))
        adv, back = op.delta_adv(f), op.backward_solve(f)
        consts.append(float(np.abs(adv[1:] - back[1:]).max() / np.abs(back).max() / st.dx**2))
        for a, b in ((f, h), (rng.standard_normal(st.shape) * (np.arange(st.nt) % (st.nt - 3) > 2)[:, None], h)):
            lhs, rhs = np.sum(a * op.delta_ret(b)), np.sum(b * op.delta_adv(a))
            pairing = max(pairing, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    ok = max(consts) <= 1.0 and pairing <= 1e-14
    acceptance(3, "transpose vs backward solve <= C h^2, pairing symmetric to 1e-14", ok,
               f"C per grid {[f'{c:.2g}' for c in consts]}, pairing {pairing:.2g}")
    assert ok


# 4 -------------------------------------------------------------------------------------------------------
def test_resolvent_formulas(acceptance):
    worst = {}
    st = square_grid(32)
    src = bump_array(st, (0.4, 0.5), (0.15, 0.2))
    mass = lambda lam: lg.linearize(lg.mass_shifted(st, lam), np.zeros(st.shape))
    st2 = square_grid(32, 0.5)
    phi0 = random_field(st2, np.random.default_rng(4), amplitude=0.05)
    ref = lg.reference_for(lg.epsilon_model(st2, 0.1))
    eps = lambda lam: lg.linearize(lg.epsilon_model(st2, lam), phi0, ref)
    src2 = bump_array(st2, (0.2, 0.5), (0.08, 0.2))
    for which in ("ret", "adv", "sigma", "K0", "K1"):
        worst[f"mass_{which}"] = resolvent_check(mass, src, which, lam0=0.5)[2]
        worst[f"eps_{which}"] = resolvent_check(eps, src2, which, lam0=0.1)[2]
    ok = max(worst.values()) <= 1e-6
    acceptance(4, "resolvent formulas, mass and epsilon families <= 1e-6", ok, f"worst {max(worst.values()):.2g}")
    assert ok


# 5, 6 ----------------------------------------------------------------------------------------------------
@pytest.fixture(scope="module")
def contexts():
    return {
        "free": (pb.BracketContext(lg.free_field(square_grid(64))), 0.3),
        "epsilon": (pb.BracketContext(lg.epsilon_model(square_grid(64, 0.5), 0.1)), 0.05),
    }


def test_master_identity(acceptance, contexts):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    worst = {}
    for kind, (ctx, amp) in contexts.items():
        w = 0.0
        for _ in range(5):
            F, G, H = (random_local(ctx.grid, rng, ("half_square", "cubic", "quartic")) for _ in range(3))
            w = max(w, pb.master_identity_residual(ctx, F, G, H, random_field(ctx.grid, rng, amplitude=amp)).worst)
        worst[kind] = w
    seconds = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-9 and seconds <= 300
    acceptance(5, "master identity on 64x64, free and epsilon, <= 1e-9", ok,
               f"free {worst['free']:.2g}, epsilon {worst['epsilon']:.2g}, {seconds:.1f}s")
    assert ok


def test_jacobi_identity(acceptance, contexts):
    rng = np.random.default_rng(6)
    worst, repeated = {}, 0.0
    kinds = {"free": ("half_square", "cubic"), "epsilon": ("linear", "half_square", "cubic")}
    for kind, (ctx, amp) in contexts.items():
        w = 0.0
        for _ in range(5):
            F, G, H = (random_local(ctx.grid, rng, kinds[kind]) for _ in range(3))
            phi = random_field(ctx.grid, rng, amplitude=amp)
            w = max(w, pb.jacobi_residual(ctx, F, G, H, phi).relative)
            repeated = max(repeated, pb.jacobi_residual(ctx, F, G, G, phi).residual)
        worst[kind] = w
    ok = max(worst.values()) <= 1e-9 and repeated == 0.0
    acceptance(6, "Jacobi identity <= 1e-9, repeated argument exactly 0", ok,
               f"free {worst['free']:.2g}, epsilon {worst['epsilon']:.2g}, repeated {repeated}")
    assert ok


# 7 -------------------------------------------------------------------------------------------------------
def test_leibniz_and_derivation(acceptance):
    rng = np.random.default_rng(7)
    ctxs = [(pb.BracketContext(lg.free_field(square_grid(32))), 0.3),
            (pb.BracketContext(lg.epsilon_model(square_grid(32, 0.5), 0.1)), 0.05)]
    worst_l = worst_d = 0.0
    for i in range(20):
        ctx, amp = ctxs[i % 2]
        F, G, H = (random_local(ctx.grid, rng) for _ in range(3))
        phi = random_field(ctx.grid, rng, amplitude=amp)
        worst_l = max(worst_l, pb.leibniz_check(ctx, F, G, H, phi).relative)
        E = fn.smooth_compose(outer.exp(), [F])
        worst_d = max(worst_d, pb.derivation_check(ctx, E, F, np.exp(F(phi)), G, phi).relative)
    ok = max(worst_l, worst_d) <= 1e-12
    acceptance(7, "Leibniz and exp derivation <= 1e-12 on 20 triples", ok, f"leibniz {worst_l:.2g}, derivation {worst_d:.2g}")
    assert ok


# 8 -------------------------------------------------------------------------------------------------------
def test_locality_classifiers(acceptance):
    st = GridSpacetime.minkowski(48, 48)
    wrong = []
    for seed in range(2):
        for name, F, local in catalogue(st, np.random.default_rng(seed)):
            add = bool(fn.check_additivity(F, trials=8, seed=seed))
            loc = bool(fn.check_locality(F, trials=40, seed=seed))
            if (add and loc) != local if local else loc:
                wrong.append(name)
    ok = not wrong
    acceptance(8, "additivity/locality classifiers, zero misclassifications", ok, f"misclassified {wrong}")
    assert ok


# 9 -------------------------------------------------------------------------------------------------------
def test_cone_combinatorics(acceptance):
    counts_ok = all(mc.omega_closed_form(k) == mc.enumerate_omegas(k) for k in range(1, 9))
    st = GridSpacetime.from_components(16, 16, 1 / 32, 1 / 16, -1.0, 0.2, 1.0)
    fam = mc.ConeFamily(st)
    rng = np.random.default_rng(9)
    bad = {"uncovered": 0, "nonmonotone": 0, "outside": 0}
    for k in (1, 2, 3):
        for _ in range(10_000):
            tup = mc.random_tuple(st, k, rng)
            m = mc.first_gamma_index(st, fam, tup)
            if m is None:
                bad["uncovered"] += 1
                continue
            if not all(mc.in_gamma(st, fam, tup, j).member for j in (m + 1, (m + fam.steps) // 2, fam.steps)
                       if j <= fam.steps):
                bad["nonmonotone"] += 1
        for _ in range(10_000):
            tup = mc.random_tuple(st, k, rng, admissible_only=False)
            if not mc.in_upsilon(st, tup) and mc.in_gamma(st, fam, tup, fam.steps).member:
                bad["outside"] += 1
    ok = counts_ok and not any(bad.values())
    acceptance(9, "Omega counts k=1..8, exhaustion and monotonicity on 1e4 tuples per k", ok,
               f"counts {'match' if counts_ok else 'differ'}, {bad}")
    assert ok


# 10 ------------------------------------------------------------------------------------------------------
def test_hyperbolicity_domains(acceptance):
    eps = 0.1
    st = square_grid(32, 0.5)
    L = lg.epsilon_model(st, eps)
    t, _ = st.coords()
    wrong, seen = 0, set()
    for a in (0.0, np.sqrt(1 / (2 * eps)), np.sqrt(1 / (3 * eps)), 0.5, 3.0):
        phi0 = a * t
        s = -a * a + 1 / (2 * eps * (1 + phi0 * phi0))
        tol = 1e-12 * (a * a + 1 / (2 * eps * (1 + phi0 * phi0)))
        expected = np.where(s > tol, 0, np.where(s < -tol, 2, 1))
        got = lg.hyperbolicity_domain(L, phi0).classes
        wrong += int(np.count_nonzero(got != expected))
        seen |= set(np.unique(got).tolist())
    rng = np.random.default_rng(10)
    phi0 = random_field(st, rng, amplitude=0.1)
    sym = lg.principal_symbol(L, phi0)
    probe = 0.0
    for _ in range(8):
        node = (int(rng.integers(2, st.nt - 2)), int(rng.integers(st.nx)))
        for k in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, -1.0)):
            exact = sym.tt[node] * k[0] ** 2 + 2 * sym.tx[node] * k[0] * k[1] + sym.xx[node] * k[1] ** 2
            probe = max(probe, abs(lg.symbol_limit_probe(L, phi0, node, k) - exact))
    ok = wrong == 0 and seen == {0, 1, 2} and probe <= 1e-6
    acceptance(10, "hyperbolicity classes match the sign rule; symbol probe <= 1e-6", ok,
               f"misclassified nodes {wrong}, classes seen {sorted(seen)}, probe error {probe:.2g}")
    assert ok


# 11 ------------------------------------------------------------------------------------------------------
def test_bump_and_partition(acceptance):
    rng = np.random.default_rng(11)
    st = GridSpacetime.minkowski(48, 48)
    T = st.dt * (st.nt - 1)
    f = TestFunction.raised_cosine(st, (0.5 * T, 0.5), (0.2 * T, 0.2), (0.1 * T, 0.1))
    seminorm = lambda d: sobolev_sq(FieldConfig(d, st), 1, f)
    phi0 = random_field(st, rng, amplitude=0.3)
    R = 1.0
    B = fn.bump_functional(st, f, phi0, R)
    centre = abs(B(phi0) - 1.0)
    out_of_range = outside = 0
    for _ in range(100):
        d = random_field(st, rng, amplitude=1.0)
        d = d * rng.uniform(0.0, 2.0) * R / np.sqrt(seminorm(d))
        val = B(phi0 + d)
        out_of_range += not 0.0 <= val <= 1.0
        outside += seminorm(d) >= R * R and val != 0.0
    d1 = random_field(st, rng, amplitude=1.0)
    phi1 = phi0 + 0.8 * R * d1 / np.sqrt(seminorm(d1))
    B2 = fn.bump_functional(st, f, phi1, R)
    parts = fn.partition_of_unity([B, B2])
    worst, covered = 0.0, 0
    for _ in range(100):
        c = rng.uniform()
        d = random_field(st, rng, amplitude=1.0)
        phi = c * phi0 + (1 - c) * phi1 + 0.3 * R * d / np.sqrt(seminorm(d))
        if B(phi) + B2(phi) <= 0:
            continue
        covered += 1
        worst = max(worst, abs(parts[0](phi) + parts[1](phi) - 1.0))
    ok = centre == 0.0 and out_of_range == 0 and outside == 0 and covered > 0 and worst <= 1e-12
    acceptance(11, "bump functional on a seminorm ball; two-ball partition sums to 1", ok,
               f"F(phi0)-1 = {centre:.2g}, out of [0,1] {out_of_range}, nonzero outside {outside}, "
               f"partition error {worst:.2g} on {covered} probes")
    assert ok


# 12 ------------------------------------------------------------------------------------------------------
def test_support_algebra(acceptance):
    rng = np.random.default_rng(12)
    st = GridSpacetime.minkowski(32, 32)
    probes = fn.probe_plan(st, 12, n_random=3, amplitude=0.5)
    leaks = 0
    for _ in range(50):
        F, G = random_local(st, rng, t_band=(0.1, 0.9)), random_local(st, rng, t_band=(0.1, 0.9))
        sF = fn.spacetime_support(F, probes).support
        sG = fn.spacetime_support(G, probes).support
        for H in (F + G, F * G):
            leaks += int(np.count_nonzero(fn.spacetime_support(H, probes).support & ~(sF | sG)))
    T = st.dt * (st.nt - 1)
    f = TestFunction.raised_cosine(st, (0.5 * T, 0.5), (0.15 * T, 0.15), (0.1 * T, 0.1)).values
    R = 1.0
    split = []
    for ratio in (0.5, 1.0, 1.5):
        consts = [np.full(st.shape, c) for c in np.linspace(-ratio * R, ratio * R, 9)[1:-1]]
        est = fn.spacetime_support(fn.gr_functional(st, f, R), consts).support
        split.append(bool(np.array_equal(est, (f != 0) if ratio > 1 else np.zeros(st.shape, bool))))
    ok = leaks == 0 and all(split)
    acceptance(12, "supports of sums and products; G_R case split", ok, f"leaked nodes {leaks}, case split {split}")
    assert ok
