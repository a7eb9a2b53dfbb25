"""The experiment suites run by ``zygwave run``.

Every suite takes an :class:`ExperimentConfig` and a thread count and
returns a :class:`SuiteResult` holding its checks and CSV tables. Gated
checks decide the exit code; ungated ones are reported only.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..coefficients import (
    banded_weierstrass,
    mollification_report,
    weierstrass_holder,
    weierstrass_zygmund,
)
from ..energy import (
    energy_equivalence,
    fix_gamma,
    q_operator,
    single_factor_q,
    weighted_q_operator,
)
from ..function_spaces import NormSpec, log_sobolev_norm
from ..paraops import (
    SpectralOperator,
    adjoint_remainder,
    composition_remainder,
    garding_equivalence_check,
    operator_order_fit,
    positivity_gamma_search,
    quantized,
)
from ..parasymbols import build_alpha, build_alpha_tilde, build_cutoff, symbol_power
from ..solver import (
    CauchyProblem,
    classical_energy,
    remainder_B_operator,
    remainder_R_operator,
    rk4_convergence,
    sigma_shifted_trace,
    solve,
)
from ..spectral_core import (
    PeriodicGrid,
    ScalarField,
    band_field,
    bernstein_check,
    lp_block,
    n_blocks,
    random_field,
)


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    gated: bool = True


@dataclass
class SuiteResult:
    experiment: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # file name -> (schema id, rows)
    notes: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)  # file name -> (records, t0, dt)

    def check(self, name, value, bound, passed, gated=True):
        self.checks.append(Check(name, float(value), float(bound), bool(passed), gated))

    def at_most(self, name, value, bound, gated=True):
        self.check(name, value, bound, value <= bound, gated)

    def at_least(self, name, value, bound, gated=True):
        self.check(name, value, bound, value >= bound, gated)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.gated)


def _map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- lp-suite


def lp_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    g = PeriodicGrid(cfg.grid["n"])
    rng = cfg.rng("fields")
    rows, worst_rec, worst_orth = [], 0.0, 0.0
    modes = ("classical", 1.0, 8.0)
    for trial in range(cfg.suite["trials"]):
        u = random_field(g, rng)
        norm = u.l2_norm()
        for mode in modes:
            blocks = [lp_block(u, j, mode) for j in range(n_blocks(g, mode))]
            total = blocks[0]
            for b in blocks[1:]:
                total = total + b
            rec = (u - total).l2_norm() / norm
            orth = 0.0
            for j, bj in enumerate(blocks):
                for jj in range(j + 2, len(blocks)):
                    orth = max(orth, lp_block(bj, jj, mode).l2_norm() / norm)
            worst_rec, worst_orth = max(worst_rec, rec), max(worst_orth, orth)
            rows.append((trial, str(mode), rec, orth))
    tol = cfg.tol("lp_residual", 1e-12)
    res.at_most("reconstruction_residual", worst_rec, tol)
    res.at_most("orthogonality_residual", worst_orth, tol)
    top = int(math.log2(g.n_points // 2)) - 2
    rep = bernstein_check(top, trials=50, grid=g, seed=cfg.child_seed("bernstein"))
    res.check("bernstein_slope", rep.slope, cfg.tol("bernstein_slope", 0.1),
              abs(rep.slope - 1.0) <= cfg.tol("bernstein_slope", 0.1))
    res.at_most("bernstein_two_sided_C", rep.two_sided_constant, cfg.tol("bernstein_C", 4.0))
    brows = [
        (int(j), float(r.mean()), float(r.min()), float(r.max()))
        for j, r in zip(rep.js, rep.ratios / 2.0 ** rep.js[:, None])
    ]
    res.tables["lp_residuals.csv"] = ("lp_residuals", rows)
    res.tables["bernstein.csv"] = ("bernstein", brows)
    res.notes.append("bernstein ratios are divided by 2^j; slope is fitted on the raw ratios")
    return res


# ---------------------------------------------------------------- norms-suite


def _norm_probe(g, rng, i):
    if i % 2 == 0:
        return random_field(g, rng, g.lam(1.0) ** -0.5)
    return band_field(g, (i // 2) % n_blocks(g), rng)


def norms_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    g = PeriodicGrid(cfg.grid["n"])
    rng = cfg.rng("fields")
    probes = [_norm_probe(g, rng, i) for i in range(cfg.suite["trials"])]
    rows, C = [], 1.0
    for s in cfg.suite["s_values"]:
        for al in cfg.suite["alphas"]:
            for gam in cfg.suite["gammas"]:
                direct = NormSpec(s, al, gam, "direct")
                dyadic = NormSpec(s, al, gam, "dyadic")
                r = np.array([log_sobolev_norm(u, direct) / log_sobolev_norm(u, dyadic) for u in probes])
                rows.append((s, al, gam, float(r.min()), float(r.max())))
                C = max(C, float(r.max()), float(1.0 / r.min()))
    res.at_most("norm_equivalence_C", C, cfg.tol("norm_C", 4.0))
    res.tables["norm_ratios.csv"] = ("norm_ratios", rows)
    return res


# ---------------------------------------------------------------- mollify-suite


def mollify_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    g = PeriodicGrid(cfg.grid["n"])
    c, tm = cfg.coefficients, cfg.time
    ladder = [2.0**-k for k in cfg.suite["ladder"]]
    tol = cfg.tol("slope", 0.15)

    def one(seed):
        a = weierstrass_zygmund(
            c["depth"], seed, c["axis"], grid=g, T=tm["T"], dt=tm["dt"], lam0=c["lam0"], Lam0=c["Lam0"]
        )
        return seed, mollification_report(a, ladder)

    reports = _map(one, range(c["phase_seeds"]), threads)
    rows, fits = [], []
    for seed, r in reports:
        for e, d0, d1, d2 in zip(r.eps, r.sup_diff, r.sup_dt1, r.sup_dt2):
            rows.append((seed, float(e), float(d0), float(d1), float(d2)))
        fits.append((seed, r.diff_slope, r.dt2_slope, r.dt1_power, r.dt1_power_residual,
                     r.dt1_log_slope, r.dt1_log_residual, r.min_value, r.max_value))
        ok = r.checks(tol)
        res.check(f"seed{seed}_diff_slope", r.diff_slope, tol, ok["diff"])
        res.check(f"seed{seed}_dt2_slope", r.dt2_slope, tol, ok["dt2"])
        res.check(f"seed{seed}_dt1_power", r.dt1_power, tol, ok["dt1_power"])
        res.check(f"seed{seed}_dt1_log_fit", r.dt1_log_residual, r.dt1_power_residual, ok["dt1_log"])
        res.check(f"seed{seed}_bounds", r.min_value, c["lam0"], ok["bounds"])
    res.tables["mollification.csv"] = ("mollification", rows)
    res.tables["mollification_fits.csv"] = ("mollification_fits", fits)
    res.notes.append(
        "diff/dt2 bounds are distances of the slope from +1/-1; dt1_log_fit compares the "
        "affine-in-log(1/eps) residual (value) with the power-law residual (bound)"
    )
    return res


# ---------------------------------------------------------------- symbol calculus


def _zygmund_alpha(cfg, n=None, gamma=None):
    c = cfg.coefficients
    g = PeriodicGrid(n or cfg.grid["n"])
    a = weierstrass_zygmund(
        c["depth"], cfg.child_seed("phases"), c["axis"], grid=g, T=cfg.time["T"], dt=cfg.time["dt"],
        lam0=c["lam0"], Lam0=c["Lam0"],
    )
    gamma = cfg.suite.get("gamma", 1.0) if gamma is None else gamma
    return g, a, build_alpha(a, gamma, "banded", rows=[0])


def _fit(res, rows, name, P, g, cfg, reference, gamma=1.0):
    f = operator_order_fit(P, g, gamma, trials=cfg.suite["trials"], seed=cfg.child_seed(name))
    rows.append((name, f.m, f.delta, f.m_joint, f.residual, reference))
    return f


def symb_calc_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    g, a, alpha = _zygmund_alpha(cfg)
    gamma = alpha.gamma
    psi = build_cutoff(gamma, g)
    gap = cfg.tol("order_gap", 0.8)
    rows = []
    quarter, half = symbol_power(alpha, 0.25), symbol_power(alpha, 0.5)
    jobs = {
        "T_alpha": (lambda: quantized(alpha, psi), 2.0),
        "R_comp_quarter": (lambda: composition_remainder(quarter, quarter, psi), 1.0),
        "naive_comp_quarter": (
            lambda: quantized(quarter, psi) @ quantized(quarter, psi) - quantized(half, psi), 1.0
        ),
        "R_adjoint_half": (lambda: adjoint_remainder(half, psi), 1.0),
        "R_replacement": (
            lambda: remainder_R_operator(a.values[0], build_alpha_tilde(a, gamma), gamma, psi), 2.0
        ),
    }
    fits = {}
    for name, (make, ref) in jobs.items():
        fits[name] = _fit(res, rows, name, make(), g, cfg, ref, gamma)
    theta = cfg.tol("holder_theta", 0.6)
    b = weierstrass_holder(theta, phase_seed=cfg.child_seed("holder"), grid=g)
    fits["B_tilde"] = _fit(res, rows, "B_tilde", remainder_B_operator(g, b.samples, gamma, psi), g, cfg, 0.0, gamma)

    res.at_most("R_comp_order", fits["R_comp_quarter"].m, round(1.0 - gap, 12))
    res.at_most("R_adjoint_order", fits["R_adjoint_half"].m, round(1.0 - gap, 12))
    res.check("T_alpha_order", fits["T_alpha"].m, 2.0, abs(fits["T_alpha"].m - 2.0) <= 0.2, gated=False)
    res.at_most("R_replacement_order", fits["R_replacement"].m, 1.2, gated=False)
    res.at_most("B_tilde_order", fits["B_tilde"].m, round(0.2 - theta, 12), gated=False)
    res.tables["order_fits.csv"] = ("order_fits", rows)
    res.notes.append("reference = declared order of the base operator before the remainder is formed")
    return res


def q_cancel_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    g, a, alpha = _zygmund_alpha(cfg)
    psi = build_cutoff(alpha.gamma, g)
    rows = []
    q = _fit(res, rows, "Q", q_operator(alpha, psi), g, cfg, 1.0, alpha.gamma)
    sig = cfg.suite["weight_sigma"]
    w = _fit(res, rows, "Q_weighted", weighted_q_operator(alpha, sig, psi), g, cfg, 1.0 + 2 * sig, alpha.gamma)
    s = _fit(res, rows, "Q_single_factor", single_factor_q(alpha, psi), g, cfg, 1.0, alpha.gamma)
    res.at_most("Q_order", q.m, cfg.tol("q_max", 0.25))
    res.at_least("miscancelled_order", w.m, cfg.tol("miscancelled_min", 0.75))
    res.at_least("single_factor_order", s.m, 0.75, gated=False)
    res.tables["order_fits.csv"] = ("order_fits", rows)
    return res


# ---------------------------------------------------------------- positivity


def positivity_suite(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    c = cfg.coefficients
    g = PeriodicGrid(cfg.grid["n"])
    a = weierstrass_zygmund(
        c["depth"], cfg.child_seed("phases"), c["axis"], grid=g, T=cfg.time["T"], dt=cfg.time["dt"],
        lam0=c["lam0"], Lam0=c["Lam0"],
    )
    samples = cfg.suite["samples"]
    seed = cfg.child_seed("rayleigh")
    rows = []

    def record(family, eps, rep):
        for st in rep.trace:
            rows.append((family, eps, st.gamma, st.sampled_min, st.power_min,
                         float("nan") if st.eigen_min is None else st.eigen_min,
                         st.estimate >= rep.threshold))

    main = positivity_gamma_search(lambda gm: build_alpha(a, gm, rows=[0]), 2.0, c["lam0"],
                                   samples=samples, seed=seed)
    record("alpha_banded", 0.0, main)
    res.check("gamma_search_terminates", main.gamma_star or float("nan"), 2.0**10, main.found)
    if main.found:
        res.at_least("lambda1", main.lam1, c["lam0"] / 4.0)

    def ladder_step(k):
        eps = 2.0**-k
        rep = positivity_gamma_search(lambda gm: build_alpha(a, gm, "fixed", eps, rows=[0]), 2.0, c["lam0"],
                                      samples=samples, seed=seed, full_trace=False)
        return eps, rep

    stars = []
    for eps, rep in _map(ladder_step, cfg.suite["ladder"], threads):
        record("alpha_fixed", eps, rep)
        stars.append(rep.gamma_star if rep.found else float("inf"))
    spread = max(stars) / min(stars) if all(math.isfinite(s) for s in stars) else float("inf")
    res.at_most("gamma_star_spread", spread, 2.0)

    gstar, (plus, minus) = fix_gamma(lambda gm: build_alpha(a, gm, rows=[0]), c["lam0"], c["Lam0"], seed=seed)
    record("alpha_plus_quarter", 0.0, plus)
    record("alpha_minus_quarter", 0.0, minus)
    res.check("energy_gamma_found", gstar or float("nan"), 2.0**10, gstar is not None)

    gam = main.gamma_star or 1.0
    grows = []
    for name, sym, m in (("alpha", build_alpha(a, gam, rows=[0]), 2.0),
                         ("alpha_quarter", symbol_power(build_alpha(a, gam, rows=[0]), 0.25), 0.5)):
        rep = garding_equivalence_check(sym, m, gam, samples, seed)
        grows.append((name, m, gam, rep.c1, rep.c2, rep.ratio))
        res.at_most(f"garding_ratio_{name}", rep.ratio, cfg.tol("garding", 20.0))
    res.tables["positivity.csv"] = ("positivity", rows)
    res.tables["garding.csv"] = ("garding", grows)
    return res


# ---------------------------------------------------------------- solver runs


def random_data(grid, rng_state, kmax=32, profile="hhalf"):
    """Band-limited data ``(u0, u1)`` with the same Fourier coefficients on every grid.

    ``profile="hhalf"`` weights ``u0`` by ``Lambda^-1`` so that both data sit
    at comparable size in ``H^1/2 x H^-1/2``.
    """
    rng = np.random.default_rng(rng_state)
    k = np.arange(-kmax, kmax + 1)
    coef = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    w0 = np.sqrt(1.0 + k**2) ** -1.0 if profile == "hhalf" else np.ones(k.size)

    def embed(values):
        spec = np.zeros(grid.n_points, complex)
        spec[k % grid.n_points] = values
        return ScalarField.from_spectrum(grid, spec)

    return embed(coef * w0), embed(coef[::-1])


def _coefficient(cfg, depth, n):
    c, tm = cfg.coefficients, cfg.time
    g = PeriodicGrid(n)
    seed = cfg.child_seed("phases")
    if c["family"] == "banded":
        return banded_weierstrass(depth, seed, grid=g, T=tm["T"], dt=tm["dt"], lam0=c["lam0"], Lam0=c["Lam0"])
    return weierstrass_zygmund(depth, seed, c.get("axis", "tx"), grid=g, T=tm["T"], dt=tm["dt"],
                               lam0=c["lam0"], Lam0=c["Lam0"])


def _runs(cfg, threads):
    data_seed = cfg.seed_sequence("data")
    kmax, profile = cfg.data["kmax"], cfg.data["profile"]
    combos = [(n, J) for n in cfg.grid["ns"] for J in cfg.coefficients["depths"]]

    def run(combo):
        n, J = combo
        a = _coefficient(cfg, J, n)
        u0, u1 = random_data(a.grid, data_seed, kmax, profile)
        problem = CauchyProblem(a, u0, u1, cfg.time["T"])
        return combo, problem, solve(problem)

    return _map(run, combos, threads)


def _dump(res, cfg, runs):
    if not cfg.suite.get("dump_fields"):
        return
    for (n, J), _, tr in runs:
        res.fields[f"u_n{n}_J{J}.zwf"] = (tr.u, float(tr.times[0]), float(tr.times[1] - tr.times[0]))


def _spread(values):
    v = np.asarray(values, dtype=float)
    return float(v.max() / v.min())


def _traces(res, cfg, runs, sigmas, threads):
    """Energy traces for the runs on the coarsest grid, one per (depth, sigma)."""
    n0 = min(cfg.grid["ns"])
    jobs = [(combo, p, tr, s) for combo, p, tr in runs if combo[0] == n0 for s in sigmas]

    def one(job):
        (n, J), p, tr, s = job
        return n, J, s, sigma_shifted_trace(p, tr, s, samples=cfg.suite["trace_samples"])

    grows = []
    for n, J, s, trace in _map(one, jobs, threads):
        tag = f"n{n}_J{J}" + (f"_sigma{s:g}" if s else "")
        res.tables[f"energy_trace_{tag}.csv"] = ("energy_trace", list(trace.rows()))
        grows.append((n, J, s, trace.fit.C, trace.fit.lam, trace.fit.found))
        res.check(f"gronwall_found_{tag}", trace.fit.lam, 32.0, trace.fit.found, gated=False)
    res.tables["gronwall.csv"] = ("gronwall", grows)


def solver_sanity(res, cfg):
    """d'Alembert mode, RK4 order and classical energy conservation."""
    from ..coefficients import constant_field, field_from_function

    g = PeriodicGrid(256)
    p = CauchyProblem(constant_field(1.0, g), ScalarField(g, np.exp(1j * g.x)), ScalarField.zeros(g), 1.0, dt=1e-3)
    tr = solve(p)
    err = float(np.abs(tr.u[-1] - np.exp(1j * g.x) * math.cos(tr.times[-1])).max())
    order, dts, errs = rk4_convergence()
    g2 = PeriodicGrid(128)
    a = field_from_function(lambda t, x: 1.0 + 0.5 * np.cos(x) + 0.0 * t, g2, T=1.0, dt=2.0**-8)
    u0, u1 = random_data(g2, cfg.seed_sequence("sanity"), 8, "hhalf")
    p2 = CauchyProblem(a, u0, u1, 1.0)
    tr2 = solve(p2)
    e = [classical_energy(p2, *tr2.state(i)) for i in range(len(tr2))]
    drift = float(np.max(np.abs(np.asarray(e) - e[0])) / e[0])
    res.at_most("sanity_dalembert", err, cfg.tol("dalembert", 1e-6))
    res.check("sanity_rk4_order", order, 0.3, abs(order - 4.0) <= cfg.tol("rk4_order", 0.3))
    res.at_most("sanity_energy_drift", drift, cfg.tol("energy_drift", 1e-4))
    rows = [("dalembert_error", err, 1e-6), ("rk4_order", order, 4.0), ("energy_drift", drift, 1e-4)]
    rows += [(f"rk4_error_dt{dt:g}", e_, 0.0) for dt, e_ in zip(dts, errs)]
    res.tables["sanity.csv"] = ("sanity", rows)


def noloss_main(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    if cfg.suite.get("sanity", True):
        solver_sanity(res, cfg)
    runs = _runs(cfg, threads)
    _dump(res, cfg, runs)
    rows, table = [], {}
    for (n, J), _, tr in runs:
        for s in cfg.suite["s_values"]:
            r = tr.growth_ratio(s - 0.5)
            rows.append((n, J, s, r))
            table[(n, J, s)] = r
    ns, Js = cfg.grid["ns"], cfg.coefficients["depths"]
    for s in cfg.suite["s_values"]:
        gated = abs(s - 0.5) < 1e-12
        for n in ns:
            res.at_most(f"s{s:g}_depth_spread_n{n}", _spread([table[(n, J, s)] for J in Js]),
                        cfg.tol("depth_factor", 2.0), gated)
        if len(ns) > 1:
            for J in Js:
                vals = [table[(n, J, s)] for n in ns]
                res.at_most(f"s{s:g}_grid_change_J{J}", _spread(vals) - 1.0, cfg.tol("grid_rel", 0.10), gated)
    if cfg.suite.get("energy", False):
        _traces(res, cfg, runs, [0.0], threads)
    res.tables["noloss.csv"] = ("noloss", rows)
    res.notes.append("ratio = sup_t (|u|_{H^s} + |u_t|_{H^{s-1}}) / initial value; only s = 1/2 is gated")
    return res


def sigma_smooth(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    runs = _runs(cfg, threads)
    _dump(res, cfg, runs)
    rows, table = [], {}
    sigmas = cfg.suite["sigmas"]
    for (n, J), _, tr in runs:
        for s in sigmas:
            r = tr.growth_ratio(s)
            rows.append((n, J, s + 0.5, r))
            table[(n, J, s)] = r
    for n in cfg.grid["ns"]:
        for s in sigmas:
            res.at_most(f"sigma{s:g}_depth_spread_n{n}",
                        _spread([table[(n, J, s)] for J in cfg.coefficients["depths"]]),
                        cfg.tol("depth_factor", 2.0))
    if cfg.suite.get("energy", False):
        _traces(res, cfg, runs, sigmas, threads)
    res.tables["noloss.csv"] = ("noloss", rows)
    res.notes.append("column s holds sigma + 1/2, the Sobolev index of u")
    return res


def s_comparison(cfg, threads=1):
    res = SuiteResult(cfg.experiment)
    rows = []
    runs = _runs(cfg, threads)
    _dump(res, cfg, runs)
    for (n, J), _, tr in runs:
        for s in cfg.suite["s_values"]:
            rows.append((n, J, s, tr.growth_ratio(s - 0.5)))
    res.tables["noloss.csv"] = ("noloss", rows)
    res.notes.append("report only: no assertion is made away from s = 1/2")
    return res


SUITES = {
    "lp-suite": lp_suite,
    "norms-suite": norms_suite,
    "mollify-suite": mollify_suite,
    "symb-calc-suite": symb_calc_suite,
    "positivity-suite": positivity_suite,
    "q-cancel-suite": q_cancel_suite,
    "noloss-main": noloss_main,
    "sigma-smooth": sigma_smooth,
    "s-comparison": s_comparison,
}

DESCRIPTIONS = {
    "lp-suite": "dyadic block reconstruction, orthogonality and Bernstein slope",
    "norms-suite": "direct vs dyadic logarithmic Sobolev norms",
    "mollify-suite": "time-mollification rates on Weierstrass coefficients",
    "symb-calc-suite": "order fits of composition, adjoint and replacement remainders",
    "positivity-suite": "gamma search, stability along the eps ladder, Garding bands",
    "q-cancel-suite": "order of the energy cross term Q and a miscancelled comparison",
    "noloss-main": "no-loss growth ratio across roughness depth and grid size",
    "sigma-smooth": "sigma-shifted ratios for coefficients smooth in x",
    "s-comparison": "growth ratios across Sobolev levels (report only)",
}
