"""Named verification suites run by the command line tool.

Every suite takes the experiment config and a suite seed and returns a
:class:`SuiteResult`.  Suites build their own grids where a check needs a
specific resolution and otherwise use the configured grid.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import densities as dens
from . import functionals as fn
from . import lagrangian as lg
from . import microcausal as mc
from . import outer
from . import peierls as pb
from .config import ExperimentConfig
from .fields import FieldConfig, TestFunction, bump_array, random_field, sobolev_sq as _sobolev_sq
from .geometry import GridSpacetime, causal_future, dilate
from .hyperbolic import resolvent_check


@dataclass
class SuiteResult:
    status: str = "pass"
    residuals: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)

    def check(self, name: str, ok: bool):
        if not ok:
            self.failures.append(name)
            self.status = "fail"

    def record(self, name: str, value: float, limit: float = None, upper: bool = True):
        self.residuals[name] = float(value)
        if limit is not None:
            self.check(name, value <= limit if upper else value >= limit)


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    run: Callable[[ExperimentConfig, int], SuiteResult]


REGISTRY: Dict[str, Suite] = {}


def suite(name: str, description: str):
    def register(f):
        REGISTRY[name] = Suite(name, description, f)
        return f

    return register


def list_suites():
    return [(s.name, s.description) for s in REGISTRY.values()]


# shared builders -----------------------------------------------------------------------------
def square_grid(n: int, cfl: float = 1.0) -> GridSpacetime:
    return GridSpacetime.minkowski(n, n, dt=cfl / n, dx=1.0 / n)


def window(st: GridSpacetime):
    return st.dt * (st.nt - 1), st.period


def sobolev_sq(phi, k, f):
    return _sobolev_sq(FieldConfig(phi, f.grid), k, f)


def random_test_function(st: GridSpacetime, rng, t_band=(0.35, 0.65), size=(0.08, 0.14)) -> np.ndarray:
    """Raised-cosine bump; with the defaults its support stays 13% of the window from either end."""
    T, P = window(st)
    centre = (rng.uniform(*t_band) * T, rng.uniform(0, P))
    radius = (rng.uniform(*size) * T, rng.uniform(*size) * P)
    ramp = (0.08 * T, 0.08 * P)
    return TestFunction.raised_cosine(st, centre, radius, ramp).values


def random_local(st: GridSpacetime, rng, kinds=("linear", "half_square", "cubic", "quartic"), **kw):
    kind = kinds[rng.integers(len(kinds))]
    return fn.LocalTerm(st, random_test_function(st, rng, **kw), dens.CATALOGUE[kind]())


def context_for(kind: str, n: int = 64, eps: float = 0.1):
    """Bracket context on an n x n window: free field at CFL 1 or the epsilon model at CFL 1/2."""
    if kind == "free":
        st = square_grid(n)
        return pb.BracketContext(lg.free_field(st)), 0.3
    st = square_grid(n, 0.5)
    return pb.BracketContext(lg.epsilon_model(st, eps)), 0.05


def background(ctx: pb.BracketContext, rng, amplitude: float) -> np.ndarray:
    return random_field(ctx.grid, rng, amplitude=amplitude)


# d'Alembert oracle ----------------------------------------------------------------------------
def _cos2(s, r):
    return np.where(np.abs(s) < r, np.cos(0.5 * np.pi * s / r) ** 2, 0.0)


def _cos2_integral(s, r):
    s = np.clip(s, -r, r)
    return 0.5 * (s + r) + r / (2 * np.pi) * np.sin(np.pi * s / r)


def dalembert_bump(t, x, centre, radius, period=1.0, order=200):
    """Retarded solution of -u_tt + u_xx = b for the unit-mass cos^2 bump b.

    u(t, x) = -1/2 * integral of b over the past light cone, by Gauss-Legendre
    in time and the closed-form antiderivative in space (periodic images).
    """
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo = centre[0] - radius[0]
    hi = np.minimum(t, centre[0] + radius[0])
    out = np.zeros(t.shape)
    ok = hi > lo
    tt, xx, hh = t[ok], x[ok], hi[ok]
    tp = lo + (hh[:, None] - lo) * (nodes[None, :] + 1) / 2
    w = (hh[:, None] - lo) / 2 * weights[None, :]
    s = tt[:, None] - tp
    inner = 0.0
    for image in (-period, 0.0, period):
        d = xx[:, None] - centre[1] + image
        inner = inner + _cos2_integral(d + s, radius[1]) - _cos2_integral(d - s, radius[1])
    mass = radius[0] * radius[1]
    out[ok] = -0.5 * np.sum(w * _cos2(tp - centre[0], radius[0]) * inner, axis=1) / mass
    return out


# suites ------------------------------------------------------------------------------------------
@suite("greens-dalembert", "retarded solution of a localized source against d'Alembert, order under refinement")
def run_greens(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("greens-dalembert")
    sizes = p.get("grids", [32, 64, 128])
    cfl = p.get("cfl", 0.5)
    centre, radius = (0.2, 0.5), (0.1, 0.1)
    res = SuiteResult()
    errors = []
    for n in sizes:
        st = square_grid(n, cfl)
        b = bump_array(st, centre, radius)
        b = b / (b.sum() * st.cell_area)
        op = lg.linearize(lg.free_field(st), np.zeros(st.shape))
        u = op.delta_ret(b)
        t, x = st.coords()
        err = float(np.abs(u - dalembert_bump(t, x, centre, radius)).max())
        errors.append(err)
        res.record(f"sup_error_{n}", err)
        if n == sizes[-1]:
            res.arrays["retarded_solution"] = u
    orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
    for (a, b), o in zip(zip(sizes, sizes[1:]), orders):
        res.record(f"order_{a}_{b}", o, cfg.tolerance("greens_min_order", 1.9), upper=False)
    return res


@suite("support-cones", "retarded solves vanish bitwise outside the discrete causal future; bracket support laws")
def run_support_cones(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("support-cones")
    rng = np.random.default_rng(seed)
    st = cfg.build_grid()
    L = lg.free_field(st)
    op = lg.linearize(L, np.zeros(st.shape))
    res = SuiteResult()
    res.details["explicit"] = bool(op.explicit())
    cone_metric = op.symbol_metric()
    leaks = 0
    for _ in range(p.get("sources", 50)):
        v = np.zeros(st.shape)
        for _ in range(rng.integers(1, 4)):
            v[rng.integers(1, st.nt - 1), rng.integers(st.nx)] = rng.standard_normal()
        u = op.delta_ret(v)
        cone = causal_future(st, v != 0, cone_metric)
        leaks += int(np.count_nonzero(u[~cone]))
    res.record("nonzero_outside_cone", leaks, 0)
    ctx = pb.BracketContext(L)
    probes = fn.probe_plan(st, seed, n_random=2, constants=(0.0,), amplitude=0.3)
    T, P = window(st)
    f_a = TestFunction.raised_cosine(st, (0.5 * T, 0.25 * P), 0.05, 0.04).values
    f_b = TestFunction.raised_cosine(st, (0.5 * T, 0.75 * P), 0.05, 0.04).values
    far = pb.bracket_support_check(ctx, fn.quadratic(st, f_a), fn.quadratic(st, f_b), probes)
    res.record("spacelike_bracket_support", int(far.bracket.sum()), 0)
    f_c = TestFunction.raised_cosine(st, (0.3 * T, 0.5 * P), 0.05, 0.04).values
    f_d = TestFunction.raised_cosine(st, (0.7 * T, 0.5 * P), 0.05, 0.04).values
    near = pb.bracket_support_check(ctx, fn.quadratic(st, f_d), fn.quadratic(st, f_c), probes)
    res.check("timelike_retarded_support", near.retarded_ok)
    res.check("timelike_advanced_support", near.advanced_ok)
    res.check("timelike_bracket_support", near.bracket_ok)
    return res


@suite("adjointness", "transposed advanced propagator against an independent backward solve")
def run_adjointness(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("adjointness")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    consts = []
    for n in p.get("grids", [32, 64, 128]):
        st = square_grid(n, 0.5)
        op = lg.linearize(lg.free_field(st), np.zeros(st.shape))
        T, P = window(st)
        f = bump_array(st, (0.6 * T, 0.5 * P), (0.15 * T, 0.15))
        h = bump_array(st, (0.4 * T, 0.3 * P), (0.15 * T, 0.15))
        adv = op.delta_adv(f)
        back = op.backward_solve(f)
        rel = np.abs(adv[1:] - back[1:]).max() / np.abs(back).max()
        consts.append(rel / st.dx**2)
        res.record(f"transpose_vs_backward_{n}", rel)
        lhs = np.sum(f * op.delta_ret(h))
        rhs = np.sum(h * op.delta_adv(f))
        res.record(f"pairing_{n}", abs(lhs - rhs) / max(abs(lhs), abs(rhs)), cfg.tolerance("pairing", 1e-14))
        g = rng.standard_normal(st.shape)
        g[:2] = 0
        g[-2:] = 0
        res.details[f"random_pairing_{n}"] = float(abs(np.sum(g * op.delta_ret(h)) - np.sum(h * op.delta_adv(g))))
    res.record("h2_constant_max", max(consts))
    res.record("h2_constant_spread", max(consts) - min(consts), cfg.tolerance("h2_constant_spread", 1.0))
    return res


@suite("resolvent", "parameter derivatives of propagators against the resolvent formulas")
def run_resolvent(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("resolvent")
    n = p.get("n", 32)
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    tol = cfg.tolerance("resolvent", 1e-6)
    st = square_grid(n)
    T, P = window(st)
    src = bump_array(st, (0.4 * T, 0.5 * P), (0.15 * T, 0.2))
    mass = lambda lam: lg.linearize(lg.mass_shifted(st, lam), np.zeros(st.shape))
    for which in ("ret", "adv", "sigma", "K0", "K1"):
        _, _, rel = resolvent_check(mass, src, which, lam0=p.get("mass0", 0.5))
        res.record(f"mass_{which}", rel, tol)
    st2 = square_grid(n, 0.5)
    T2, _ = window(st2)
    phi0 = random_field(st2, rng, amplitude=0.05)
    src2 = bump_array(st2, (0.4 * T2, 0.5 * P), (0.15 * T2, 0.2))
    ref = lg.reference_for(lg.epsilon_model(st2, 0.1))
    family = lambda lam: lg.linearize(lg.epsilon_model(st2, lam), phi0, ref)
    for which in ("ret", "adv", "sigma", "K0", "K1"):
        _, _, rel = resolvent_check(family, src2, which, lam0=p.get("eps0", 0.1))
        res.record(f"epsilon_{which}", rel, tol)
    return res


def _triples(ctx, rng, count, kinds):
    st = ctx.grid
    for _ in range(count):
        yield tuple(random_local(st, rng, kinds) for _ in range(3))


@suite("master-identity", "both forms of the retarded/advanced master identity, free field and epsilon model")
def run_master(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("master-identity")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    tol = cfg.tolerance("master_identity", 1e-9)
    for kind in ("free", "epsilon"):
        ctx, amp = context_for(kind, p.get("n", 64), cfg.lagrangian.eps if kind == "epsilon" else 0.1)
        worst = 0.0
        for F, G, H in _triples(ctx, rng, p.get("triples", 5), ("half_square", "cubic", "quartic")):
            phi = background(ctx, rng, amp)
            worst = max(worst, pb.master_identity_residual(ctx, F, G, H, phi).worst)
        res.record(f"{kind}_worst_relative", worst, tol)
    return res


def _jacobi(cfg, seed, kind, kinds, tol_key, tol_default):
    p = cfg.params(f"jacobi-{'free-field' if kind == 'free' else 'epsilon'}")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    ctx, amp = context_for(kind, p.get("n", 64), cfg.lagrangian.eps if kind == "epsilon" else 0.1)
    worst = 0.0
    for F, G, H in _triples(ctx, rng, p.get("triples", 5), kinds):
        phi = background(ctx, rng, amp)
        worst = max(worst, pb.jacobi_residual(ctx, F, G, H, phi).relative)
        res.record("repeated_argument", pb.jacobi_residual(ctx, F, G, G, phi).residual, 0.0)
    res.record("worst_relative", worst, cfg.tolerance(tol_key, tol_default))
    return res


@suite("jacobi-free-field", "Jacobi identity of the Peierls bracket for the free field")
def run_jacobi_free(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    return _jacobi(cfg, seed, "free", ("half_square",), "jacobi_free", 1e-10)


@suite("jacobi-epsilon", "Jacobi identity of the Peierls bracket for the epsilon model")
def run_jacobi_eps(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    return _jacobi(cfg, seed, "epsilon", ("linear", "half_square", "cubic"), "jacobi_epsilon", 1e-9)


@suite("leibniz", "Leibniz rule and derivation property of the bracket")
def run_leibniz(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("leibniz")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    tol = cfg.tolerance("leibniz", 1e-12)
    n = p.get("n", 32)
    worst_l = worst_d = 0.0
    contexts = [context_for("free", n), context_for("epsilon", n)]
    for i in range(p.get("triples", 20)):
        ctx, amp = contexts[i % 2]
        F, G, H = (random_local(ctx.grid, rng) for _ in range(3))
        phi = background(ctx, rng, amp)
        worst_l = max(worst_l, pb.leibniz_check(ctx, F, G, H, phi).relative)
        E = fn.smooth_compose(outer.exp(), [F])
        worst_d = max(worst_d, pb.derivation_check(ctx, E, F, np.exp(F(phi)), G, phi).relative)
    res.record("leibniz_worst_relative", worst_l, tol)
    res.record("derivation_worst_relative", worst_d, tol)
    return res


def _density(name: str, eps: float):
    return dens.by_name(name, eps=eps) if name == "epsilon" else dens.by_name(name)


def configured_functionals(cfg: ExperimentConfig, st: GridSpacetime):
    T, P = window(st)
    out = []
    for spec in cfg.functionals:
        f = TestFunction.raised_cosine(st, (spec.centre[0] * T, spec.centre[1] * P),
                                       (spec.radius[0] * T, spec.radius[1] * P), (spec.ramp[0] * T, spec.ramp[1] * P))
        out.append((f"config:{spec.density}", fn.LocalTerm(st, f.values, _density(spec.density, cfg.lagrangian.eps))))
    return out


def catalogue(st: GridSpacetime, rng, eps: float = 0.1):
    """(name, functional, expected local) for the classifier check."""
    f = random_test_function(st, rng)
    g = random_test_function(st, rng)
    out = [(f"local:{k}", fn.LocalTerm(st, f, _density(k, eps)), True) for k in dens.CATALOGUE]
    out.append(("sobolev_sq:0", fn.sobolev_functional(st, f, 0), True))
    out.append(("sobolev_sq:1", fn.sobolev_functional(st, f, 1), True))
    out.append(("exp", fn.exp_functional(st, f), False))
    out.append(("product:quadratic*quadratic", fn.quadratic(st, f) * fn.quadratic(st, g), False))
    out.append(("product:linear*cubic", fn.integral(st, f) * fn.LocalTerm(st, g, dens.CATALOGUE["cubic"]()), False))
    return out


@suite("additivity-locality", "additivity and locality classifiers over the functional catalogue")
def run_additivity(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    st = cfg.build_grid()
    res = SuiteResult()
    wrong = 0
    entries = catalogue(st, rng, cfg.lagrangian.eps)
    entries += [(name, F, True) for name, F in configured_functionals(cfg, st)]
    for name, F, local in entries:
        add = fn.check_additivity(F, trials=8, seed=seed)
        loc = fn.check_locality(F, trials=40, seed=seed)
        res.details[name] = {"additive": bool(add), "local": bool(loc)}
        ok = (bool(add) and bool(loc)) if local else not bool(loc)
        if not ok:
            wrong += 1
            res.failures.append(f"misclassified:{name}")
    res.record("misclassified", wrong, 0)
    return res


@suite("cone-counts", "Omega counts against enumeration, exhaustion and monotonicity of the cone family")
def run_cone_counts(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("cone-counts")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    table = {}
    for k in range(1, 9):
        closed = mc.omega_closed_form(k)
        table[k] = list(closed)
        res.check(f"counts_k{k}", closed == mc.enumerate_omegas(k))
    res.details["counts"] = table
    res.record("partition_defects", sum(mc.partition_defects(k) for k in range(1, 5)), 0)
    st = cfg.build_grid()
    family = mc.ConeFamily(st)
    n = p.get("tuples", 10000)
    for k in (1, 2, 3):
        missing = nonmonotone = outside = 0
        for _ in range(n):
            tup = mc.random_tuple(st, k, rng)
            m = mc.first_gamma_index(st, family, tup)
            if m is None:
                missing += 1
                continue
            if m < family.steps and not mc.in_gamma(st, family, tup, m + 1).member:
                nonmonotone += 1
        for _ in range(max(1, n // 10)):
            tup = mc.random_tuple(st, k, rng, admissible_only=False)
            for m in (0, family.steps // 2, family.steps):
                if mc.in_gamma(st, family, tup, m).member and not mc.in_upsilon(st, tup):
                    outside += 1
        res.record(f"uncovered_k{k}", missing, 0)
        res.record(f"nonmonotone_k{k}", nonmonotone, 0)
        res.record(f"gamma_outside_upsilon_k{k}", outside, 0)
    return res


@suite("hyperbolicity-domains", "sign classification of the epsilon model and the symbol-limit probe")
def run_hyperbolicity(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    eps = cfg.lagrangian.eps
    res = SuiteResult()
    st = square_grid(cfg.params("hyperbolicity-domains").get("n", 32), 0.5)
    L = lg.epsilon_model(st, eps)
    t, x = st.coords()
    witnesses = {
        "zero": (np.zeros(st.shape), lambda: np.zeros(st.shape), lambda: np.zeros(st.shape)),
    }
    for name, a in (("critical", np.sqrt(1 / (2 * eps))), ("crossing", np.sqrt(1 / (3 * eps))),
                    ("gentle", 0.5)):
        witnesses[name] = (a * t, lambda a=a: a * t, lambda a=a: np.full(st.shape, a))
    wrong = 0
    for name, (phi0, value, slope) in witnesses.items():
        v = value()
        s = -slope() ** 2 + 1 / (2 * eps * (1 + v * v))
        tol = 1e-12 * (slope() ** 2 + 1 / (2 * eps * (1 + v * v)))
        expected = np.where(s > tol, 0, np.where(s < -tol, 2, 1))
        got = lg.hyperbolicity_domain(L, phi0).classes
        bad = int(np.count_nonzero(got != expected))
        res.details[name] = {c: int(np.sum(got == i)) for i, c in enumerate(lg.CLASSES)}
        wrong += bad
    res.record("misclassified_nodes", wrong, 0)
    phi0 = random_field(st, rng, amplitude=0.1)
    sym = lg.principal_symbol(L, phi0)
    worst = 0.0
    for _ in range(6):
        node = (int(rng.integers(2, st.nt - 2)), int(rng.integers(st.nx)))
        for k in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
            exact = sym.tt[node] * k[0] ** 2 + 2 * sym.tx[node] * k[0] * k[1] + sym.xx[node] * k[1] ** 2
            probe = lg.symbol_limit_probe(L, phi0, node, k)
            worst = max(worst, abs(probe - exact))
    res.record("symbol_probe_error", worst, cfg.tolerance("symbol_probe", 1e-6))
    return res


@suite("bump-partition", "bump functional on a seminorm ball and a two-ball partition of unity")
def run_bump(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    st = cfg.build_grid()
    res = SuiteResult()
    T, P = window(st)
    f = TestFunction.raised_cosine(st, (0.5 * T, 0.5 * P), (0.2 * T, 0.2 * P), (0.1 * T, 0.1 * P))
    phi0 = random_field(st, rng, amplitude=0.3)
    R = 1.0
    B = fn.bump_functional(st, f, phi0, R)
    res.record("value_at_centre_error", abs(B(phi0) - 1.0), 0.0)
    below = above = outside = 0
    for _ in range(100):
        d = random_field(st, rng, amplitude=1.0)
        dist2 = sobolev_sq(d, 1, f)
        scale = rng.uniform(0.0, 2.0) * R / np.sqrt(dist2)
        val = B(phi0 + scale * d)
        below += val < 0
        above += val > 1
        if sobolev_sq(scale * d, 1, f) >= R * R and val != 0.0:
            outside += 1
    res.record("below_zero", below, 0)
    res.record("above_one", above, 0)
    res.record("nonzero_outside_ball", outside, 0)
    phi1 = phi0 + 0.8 * R * random_field(st, rng, amplitude=1.0) / np.sqrt(sobolev_sq(random_field(st, rng), 1, f))
    B2 = fn.bump_functional(st, f, phi1, R)
    parts = fn.partition_of_unity([B, B2])
    worst = 0.0
    covered = 0
    for _ in range(100):
        c = rng.uniform()
        d = random_field(st, rng, amplitude=1.0)
        phi = c * phi0 + (1 - c) * phi1 + 0.3 * R * d / np.sqrt(sobolev_sq(d, 1, f))
        if B(phi) + B2(phi) <= 0:
            continue
        covered += 1
        worst = max(worst, abs(parts[0](phi) + parts[1](phi) - 1.0))
    res.details["partition_probes"] = covered
    res.check("partition_probes_nonempty", covered > 0)
    res.record("partition_sum_error", worst, cfg.tolerance("partition", 1e-12))
    return res


@suite("support-algebra", "supports of sums and products, and the exp(1 - chi_R) case split")
def run_support_algebra(cfg: ExperimentConfig, seed: int) -> SuiteResult:
    p = cfg.params("support-algebra")
    rng = np.random.default_rng(seed)
    st = cfg.build_grid()
    res = SuiteResult()
    probes = fn.probe_plan(st, seed, n_random=3, amplitude=0.5)
    configured = configured_functionals(cfg, st)
    leaks = 0
    for _ in range(p.get("pairs", 50)):
        F, G = random_local(st, rng, t_band=(0.1, 0.9)), random_local(st, rng, t_band=(0.1, 0.9))
        if configured:
            G = configured[rng.integers(len(configured))][1]
        sF = fn.spacetime_support(F, probes).support
        sG = fn.spacetime_support(G, probes).support
        for H in (F + G, F * G):
            leaks += int(np.count_nonzero(fn.spacetime_support(H, probes).support & ~(sF | sG)))
    res.record("support_leaks", leaks, 0)
    T, P = window(st)
    f = TestFunction.raised_cosine(st, (0.5 * T, 0.5 * P), (0.15 * T, 0.15 * P), (0.1 * T, 0.1 * P)).values
    supp_f = f != 0
    R = 1.0
    for ratio in (0.5, 1.0, 1.5):
        GR = fn.gr_functional(st, f, R)
        consts = [np.full(st.shape, c) for c in np.linspace(-ratio * R, ratio * R, 9)[1:-1]]
        est = fn.spacetime_support(GR, consts).support
        want = supp_f if ratio > 1 else np.zeros_like(supp_f)
        res.check(f"gr_case_split_{ratio}", bool(np.array_equal(est, want)))
    return res


def run_suite(name: str, cfg: ExperimentConfig, seed: int):
    start = time.perf_counter()
    try:
        result = REGISTRY[name].run(cfg, seed)
    except Exception as exc:  # a crashing suite is a failing suite
        result = SuiteResult(status="fail", failures=[f"exception:{type(exc).__name__}: {exc}"])
    return result, time.perf_counter() - start
