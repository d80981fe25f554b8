"""Acceptance suite: every shipped claim, runnable as one checklist.

Each criterion function returns a CriterionResult and prints one
PASS/FAIL line when run through :func:`run_all` (the CLI ``selftest``
subcommand and ``tests/test_acceptance.py`` both call into here).
Tolerances are fixed below; nothing is calibrated at run time.

Notes on two operationalizations:

* "converges within 10 outer iterations" is checked as reaching the
  plateau of its own converged trajectory - remaining gap at most 1% of
  the final objective - within 10 sweeps, on at least 9 of 10 seeds.
  The underlying claim is about convergence plots, whose resolution is
  that order.
* "within grid resolution" asserts the sweep objective is never worse
  than the brute-force grid value (up to 1e-9 slack) and agrees with it
  to 1e-3 relative, the coupling error a 4096-point cyclic grid leaves
  behind at desk scale.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import baselines, channel_sim, cm_solvers, derivatives, diag_solvers, linalg
from .cm_problems import make_problem
from .scenarios import (
    AmpIrsScenario,
    BlockDiagScenario,
    HybridScenario,
    MuSimoScenario,
    PassiveIrsScenario,
)

GRAD_TOL_LOOSE = 1e-4
GRAD_TOL_TIGHT = 1e-6
MUSIMO_REL_TOL = 1e-3
KKT_TOL = 1e-6
WMMSE_REL_TOL = 1e-2
BLOCKDIAG_EXACT_TOL = 1e-8
BLOCKDIAG_REL_TOL = 1e-2
PROP2_TOL = 1e-8
AO_BCD_REL_TOL = 1e-3
PLATEAU_REL = 1e-2
GRID_REL_TOL = 1e-3
RUNTIME_RATIO_LIMIT = 0.8

MASTER_SEED = 20240901


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _cn(rng, rows, cols, scale=1.0):
    return scale * np.sqrt(0.5) * (rng.standard_normal((rows, cols))
                                   + 1j * rng.standard_normal((rows, cols)))


def _psd(rng, n, scale=1.0):
    a = _cn(rng, n, n, scale)
    return a @ a.conj().T


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-12)


# ---------------------------------------------------------------------------
# Criterion 1: gradient correctness, Tables of diagonal and phase rules
# ---------------------------------------------------------------------------

def criterion_gradient_rules(trials: int = 100) -> CriterionResult:
    """8 derivative rules x random desk-scale instances vs central FD."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED)
    worst_loose = 0.0
    worst_tight = 0.0

    def record(err, wild):
        nonlocal worst_loose, worst_tight
        worst_loose = max(worst_loose, err)
        if not wild:
            worst_tight = max(worst_tight, err)

    for trial in range(trials):
        k = int(rng.integers(2, 9))
        wild = trial % 2 == 1
        scale = 10.0 ** rng.uniform(-1, 2) if wild else 1.0

        m = _cn(rng, k, k, scale)
        d0 = _cn(rng, 1, k)[0]
        at = np.concatenate([d0.real, d0.imag])

        def f_tl(x, m=m, k=k):
            d = x[:k] + 1j * x[k:]
            return float(2 * np.real(np.vdot(np.diagonal(m), d)))

        record(derivatives.fd_check(
            f_tl, at, derivatives.diag_grad_trace_linear(m).real_gradient()), wild)

        w = linalg.hermitize(_cn(rng, k, k, scale))
        w_diag = np.real(np.diagonal(w))

        def f_tq(x, w_diag=w_diag, k=k):
            # Tr(Lam^H W Lam) for diagonal Lam touches only diag(W).
            d = x[:k] + 1j * x[k:]
            return float(np.sum(np.abs(d) ** 2 * w_diag))

        g_tq = derivatives.diag_grad_trace_quadratic(w, d0)
        record(derivatives.fd_check(f_tq, at, g_tq.real_gradient()), wild)

        phi = _psd(rng, k, scale)
        lam_r = rng.uniform(0.05, 2.0, k)

        def f_ti(x, phi=phi, k=k):
            mm = np.eye(k) + phi * np.asarray(x)[None, :]
            return float(np.real(np.trace(np.linalg.inv(mm))))

        g_ti = derivatives.diag_grad_trace_inverse(phi, lam_r)
        record(derivatives.fd_check(
            f_ti, lam_r, np.real(g_ti.wrt_var + g_ti.wrt_conj)), wild)

        def f_ld(x, phi=phi, k=k):
            mm = np.eye(k) + phi * np.asarray(x)[None, :]
            return float(np.linalg.slogdet(mm)[1])

        g_ld = derivatives.diag_grad_logdet(phi, lam_r)
        record(derivatives.fd_check(
            f_ld, lam_r, np.real(g_ld.wrt_var + g_ld.wrt_conj)), wild)

        rows = int(rng.integers(2, 9))
        cols = int(rng.integers(2, 9))
        theta = rng.uniform(0, 2 * np.pi, (rows, cols))
        b = _cn(rng, rows, cols, scale)

        def f_ptl(x, b=b, rows=rows, cols=cols):
            xm = np.exp(1j * x.reshape(rows, cols))
            return float(2 * np.real(np.trace(b.conj().T @ xm)))

        record(derivatives.fd_check(
            f_ptl, theta.ravel(),
            derivatives.phase_grad_trace_linear(b, theta).ravel()), wild)

        phi_r = linalg.hermitize(_cn(rng, rows, rows, scale))
        pi_c = linalg.hermitize(_cn(rng, cols, cols, scale))

        def f_ptq(x, rows=rows, cols=cols, phi_r=phi_r, pi_c=pi_c):
            xm = np.exp(1j * x.reshape(rows, cols))
            return float(np.real(np.trace(xm @ pi_c @ xm.conj().T @ phi_r)))

        record(derivatives.fd_check(
            f_ptq, theta.ravel(),
            derivatives.phase_grad_trace_quadratic(phi_r, pi_c, theta).ravel()),
            wild)

        phi_in = _psd(rng, cols, scale) + 0.5 * scale * np.eye(cols)
        pi_in = _psd(rng, rows, scale)

        def f_pti(x, rows=rows, cols=cols, phi_in=phi_in, pi_in=pi_in):
            xm = np.exp(1j * x.reshape(rows, cols))
            return float(np.real(np.trace(np.linalg.inv(
                phi_in + xm.conj().T @ pi_in @ xm))))

        record(derivatives.fd_check(
            f_pti, theta.ravel(),
            derivatives.phase_grad_trace_inverse(phi_in, pi_in, theta).ravel()),
            wild)

        def f_pld(x, rows=rows, cols=cols, phi_in=phi_in, pi_in=pi_in):
            xm = np.exp(1j * x.reshape(rows, cols))
            return float(np.linalg.slogdet(
                phi_in + xm.conj().T @ pi_in @ xm)[1])

        record(derivatives.fd_check(
            f_pld, theta.ravel(),
            derivatives.phase_grad_logdet(phi_in, pi_in, theta).ravel()), wild)

    passed = worst_loose <= GRAD_TOL_LOOSE and worst_tight <= GRAD_TOL_TIGHT
    detail = (f"max rel err {worst_loose:.2e} (tol {GRAD_TOL_LOOSE}), "
              f"unit-scale subset {worst_tight:.2e} (tol {GRAD_TOL_TIGHT})")
    return CriterionResult("gradient-rules", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 2: MU-SIMO capacity/MSE optimality vs projected gradient
# ---------------------------------------------------------------------------

def criterion_musimo_optimality(trials: int = 20) -> CriterionResult:
    t0 = time.perf_counter()
    snr_grid = [-5.0, 0.0, 5.0, 10.0, 15.0]
    p_sum = channel_sim.dbm_to_watts(30.0)
    p_user = channel_sim.dbm_to_watts(25.0)
    ocfg = baselines.OracleConfig(restarts=3, max_iter=400)
    worst_rel = 0.0
    worst_kkt = 0.0
    worst_cs = 0.0
    for si, snr in enumerate(snr_grid):
        sigma2 = channel_sim.snr_to_noise_power(p_sum, snr)
        for trial in range(trials):
            rng = np.random.default_rng(
                np.random.SeedSequence((MASTER_SEED, si, trial)))
            h = np.sqrt(0.5) * (rng.standard_normal((6, 4))
                                + 1j * rng.standard_normal((6, 4)))
            scn = MuSimoScenario(h=h, sigma=sigma2 * np.eye(6),
                                 p_sum=p_sum, p_user=np.full(4, p_user))
            for kind, solve, family in (
                    ("capacity", diag_solvers.solve_musimo_capacity,
                     "musimo-capacity"),
                    ("mse", diag_solvers.solve_musimo_mse, "musimo-mse")):
                cf = solve(scn)
                pg = baselines.projected_gradient_oracle(
                    family, scn, ocfg, seed=trial)
                worst_rel = max(worst_rel, _rel(cf.objective, pg.objective))
                worst_kkt = max(worst_kkt, cf.kkt_residual or 0.0)
                worst_cs = max(worst_cs, cf.comp_slack or 0.0)
    passed = (worst_rel <= MUSIMO_REL_TOL and worst_kkt <= KKT_TOL
              and worst_cs <= KKT_TOL)
    detail = (f"max rel gap {worst_rel:.2e} (tol {MUSIMO_REL_TOL}), "
              f"KKT {worst_kkt:.2e}, comp-slack {worst_cs:.2e} (tol {KKT_TOL})")
    return CriterionResult("musimo-optimality", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 3: amplitude-IRS WMMSE vs projected gradient
# ---------------------------------------------------------------------------

def criterion_wmmse_irs(trials: int = 10) -> CriterionResult:
    t0 = time.perf_counter()
    snr_grid = [-5.0, 0.0, 5.0]
    p_sum = channel_sim.dbm_to_watts(30.0)
    ocfg = baselines.OracleConfig(restarts=3, max_iter=500)
    worst_rel = 0.0
    violations = 0
    k = 64
    for si, snr in enumerate(snr_grid):
        sigma2 = channel_sim.snr_to_noise_power(p_sum, snr)
        for trial in range(trials):
            rng = np.random.default_rng(
                np.random.SeedSequence((MASTER_SEED + 1, si, trial)))
            scn = AmpIrsScenario(
                h0=_cn(rng, 4, 6),
                h1=_cn(rng, 4, k, channel_sim.IRS_HOP_COEF / np.sqrt(k)),
                h2=_cn(rng, k, 6), sigma=sigma2 * np.eye(4))
            for solve, family in (
                    (diag_solvers.solve_amp_irs_capacity, "amp-irs-capacity"),
                    (diag_solvers.solve_amp_irs_mse, "amp-irs-mse")):
                ao = solve(scn, eps=1e-6, max_iter=2000)
                violations += sum("monotonicity" in f for f in ao.flags)
                pg = baselines.projected_gradient_oracle(
                    family, scn, ocfg, seed=trial)
                worst_rel = max(worst_rel, _rel(ao.objective, pg.objective))
    passed = worst_rel <= WMMSE_REL_TOL and violations == 0
    detail = (f"max rel gap {worst_rel:.2e} (tol {WMMSE_REL_TOL}), "
              f"monotonicity violations {violations}")
    return CriterionResult("wmmse-irs", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 4: block-diagonal reductions and oracle agreement
# ---------------------------------------------------------------------------

def criterion_blockdiag() -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED + 2)

    h1 = _cn(rng, 4, 2)
    scn1 = BlockDiagScenario(h_users=[h1], sigma=np.eye(4), p_user=[2.0])
    rep1 = diag_solvers.solve_blockdiag_capacity(scn1)
    _, sv, _ = np.linalg.svd(h1)
    p = diag_solvers.waterfill(sv ** 2, 2.0)
    textbook = float(np.sum(np.log1p(p * sv ** 2)))
    gap1 = abs(rep1.objective - textbook)

    h_a = np.zeros((4, 2), dtype=complex)
    h_a[:2, :] = _cn(rng, 2, 2)
    h_b = np.zeros((4, 2), dtype=complex)
    h_b[2:, :] = _cn(rng, 2, 2)
    joint = diag_solvers.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h_a, h_b], sigma=np.eye(4), p_user=[1.0, 2.0]))
    solo = (diag_solvers.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h_a], sigma=np.eye(4), p_user=[1.0])).objective
        + diag_solvers.solve_blockdiag_capacity(BlockDiagScenario(
            h_users=[h_b], sigma=np.eye(4), p_user=[2.0])).objective)
    gap2 = abs(joint.objective - solo)

    worst_rel = 0.0
    for trial in range(3):
        rng_t = np.random.default_rng(
            np.random.SeedSequence((MASTER_SEED + 2, trial)))
        scn = BlockDiagScenario(
            h_users=[_cn(rng_t, 4, 2), _cn(rng_t, 4, 2)],
            sigma=0.7 * np.eye(4), p_user=[1.0, 1.5])
        cf = diag_solvers.solve_blockdiag_capacity(scn)
        pg = baselines.projected_gradient_oracle(
            "blockdiag-capacity", scn,
            baselines.OracleConfig(restarts=3, max_iter=500), seed=trial)
        worst_rel = max(worst_rel, _rel(cf.objective, pg.objective))

    passed = (gap1 <= BLOCKDIAG_EXACT_TOL and gap2 <= BLOCKDIAG_EXACT_TOL
              and worst_rel <= BLOCKDIAG_REL_TOL)
    detail = (f"K=1 gap {gap1:.2e}, orthogonal gap {gap2:.2e} "
              f"(tol {BLOCKDIAG_EXACT_TOL}), oracle rel {worst_rel:.2e} "
              f"(tol {BLOCKDIAG_REL_TOL})")
    return CriterionResult("blockdiag", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 5: five-probe recovery round-trip
# ---------------------------------------------------------------------------

def criterion_prop2_roundtrip(draws: int = 1000) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED + 3)
    worst = 0.0
    worst_linear_tail = 0.0
    theta = np.array([0.0])
    for i in range(draws):
        a = rng.normal() + 1j * rng.normal()
        b = rng.normal() + 1j * rng.normal()
        re_c = rng.uniform(0.1, 3.0) * (1 if rng.random() < 0.5 else -1)
        linear = i % 4 == 0
        if linear:
            b = 0j
            c = complex(re_c)
        else:
            c = re_c + 1j * rng.normal()

        def g_fn(t, a=a, b=b, c=c):
            e = np.exp(1j * t)
            return a * e + b * np.conj(e) + c

        theta[0] = rng.uniform(0, 2 * np.pi)
        probe = cm_solvers.make_probe_set(theta, 0)
        values = [g_fn(p) for p in probe.probe_phases]
        w = cm_solvers.prop2_recover(probe, values, g_fn)
        expected = np.array([a.real, a.imag, b.real, b.imag, c.imag]) / c.real
        worst = max(worst, float(np.max(np.abs(w - expected))))
        if linear:
            worst_linear_tail = max(worst_linear_tail,
                                    float(np.max(np.abs(w[2:]))))
    passed = worst <= PROP2_TOL and worst_linear_tail <= PROP2_TOL
    detail = (f"max recovery err {worst:.2e}, linear tail "
              f"{worst_linear_tail:.2e} (tol {PROP2_TOL})")
    return CriterionResult("prop2-roundtrip", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 6: Algorithm-1 vs BCD agreement and convergence speed
# ---------------------------------------------------------------------------

def criterion_ao_vs_bcd(seeds: int = 10) -> CriterionResult:
    t0 = time.perf_counter()
    sigma2 = channel_sim.snr_to_noise_power(1.0, 5.0)
    worst_rel = 0.0
    fast = {"hybrid-capacity": 0, "hybrid-mse": 0}
    for tag in fast:
        for seed in range(seeds):
            rng = np.random.default_rng(
                np.random.SeedSequence((MASTER_SEED + 4, seed)))
            h = _cn(rng, 4, 6)
            pi_m = linalg.hermitize(h.conj().T @ h / sigma2)
            problem = make_problem(tag, HybridScenario(pi_m=pi_m, n_rf=4))
            init = problem.random_theta(seed)
            ao = cm_solvers.algorithm1_ao(problem, init=init, eps=1e-9,
                                          max_iter=300)
            bcd = baselines.bcd_elementwise(problem, init=init, eps=1e-9,
                                            max_iter=300)
            worst_rel = max(worst_rel, _rel(ao.objective, bcd.objective))
            traj = np.asarray(ao.trajectory)
            gap = np.abs(traj - traj[-1])
            plateau = int(np.argmax(gap <= PLATEAU_REL * max(1.0, abs(traj[-1]))))
            if plateau <= 10:
                fast[tag] += 1
    passed = worst_rel <= AO_BCD_REL_TOL and all(v >= 9 for v in fast.values())
    detail = (f"max AO/BCD rel gap {worst_rel:.2e} (tol {AO_BCD_REL_TOL}), "
              f"plateau<=10 sweeps on {fast['hybrid-capacity']}/{seeds} capacity "
              f"and {fast['hybrid-mse']}/{seeds} MSE seeds (need >= 9)")
    return CriterionResult("ao-vs-bcd", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 7: brute-force grid certification
# ---------------------------------------------------------------------------

def criterion_grid_certification(seeds: int = 10) -> CriterionResult:
    t0 = time.perf_counter()
    worst_rel = 0.0
    worst_under = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(
            np.random.SeedSequence((MASTER_SEED + 5, seed)))
        h = _cn(rng, 2, 2)
        pi_m = linalg.hermitize(h.conj().T @ h / 0.3)
        problem = make_problem("hybrid-capacity",
                               HybridScenario(pi_m=pi_m, n_rf=2))
        init = problem.random_theta(seed)
        ao = cm_solvers.algorithm1_ao(problem, init=init, eps=1e-9,
                                      max_iter=300)
        grid = baselines.grid_search_oracle(problem, init=init)
        worst_under = max(worst_under, grid.objective - ao.objective)
        worst_rel = max(worst_rel, _rel(ao.objective, grid.objective))

        scn = PassiveIrsScenario(h0=_cn(rng, 1, 1), h1=_cn(rng, 1, 1),
                                 h2=_cn(rng, 1, 1), sigma=np.eye(1))
        p_irs = make_problem("irs-capacity", scn)
        init1 = p_irs.random_theta(seed)
        ao1 = cm_solvers.algorithm1_ao(p_irs, init=init1)
        grid1 = baselines.grid_search_oracle(p_irs, init=init1)
        worst_under = max(worst_under, grid1.objective - ao1.objective)
        worst_rel = max(worst_rel, _rel(ao1.objective, grid1.objective))
    passed = worst_under <= 1e-9 and worst_rel <= GRID_REL_TOL
    detail = (f"grid never above AO by more than {worst_under:.2e} "
              f"(tol 1e-9), rel gap {worst_rel:.2e} (tol {GRID_REL_TOL})")
    return CriterionResult("grid-certification", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 8: runtime trend, AO vs conventional BCD
# ---------------------------------------------------------------------------

def criterion_runtime_trend() -> CriterionResult:
    t0 = time.perf_counter()
    cfg = channel_sim.ExperimentConfig(
        scenario="irs-capacity", n_t=8, n_r=8, irs_rows=8, irs_cols=8,
        snr_start_db=-5.0, snr_stop_db=-5.0, master_seed=MASTER_SEED,
        solvers=["ao", "bcd"])
    # More repetitions and a longer pinned run than the bench defaults:
    # the growth-factor comparison needs medians stable against
    # scheduler noise, not just the ratio.
    res = channel_sim.bench_runtime(cfg, n_t_list=[8, 30], snr_db=-5.0,
                                    repeats=9, sweeps=40)
    med = {row.solver: row.mean_seconds for row in res.rows
           if not row.solver.startswith("ratio")}
    ratio30 = med["ao-nt30"] / med["bcd-nt30"]
    growth_ao = med["ao-nt30"] / med["ao-nt8"]
    growth_bcd = med["bcd-nt30"] / med["bcd-nt8"]
    passed = ratio30 < RUNTIME_RATIO_LIMIT and growth_ao < growth_bcd
    detail = (f"AO/BCD ratio at n_t=30: {ratio30:.3f} (limit "
              f"{RUNTIME_RATIO_LIMIT}), growth factors AO {growth_ao:.3f} "
              f"vs BCD {growth_bcd:.3f}")
    return CriterionResult("runtime-trend", passed, detail,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criterion 9: byte-identical sweep determinism
# ---------------------------------------------------------------------------

def criterion_determinism() -> CriterionResult:
    t0 = time.perf_counter()
    cfg = channel_sim.ExperimentConfig(
        scenario="musimo-capacity", n_t=6, k=4, trials=2,
        snr_start_db=0.0, snr_stop_db=5.0, snr_step_db=5.0,
        master_seed=MASTER_SEED, solvers=["closed-form", "oracle"],
        oracle_restarts=2, oracle_max_iter=150)
    first = channel_sim.render_csv(channel_sim.run_sweep(cfg))
    second = channel_sim.render_csv(channel_sim.run_sweep(cfg))
    passed = first == second
    detail = "two sweep runs byte-identical" if passed else \
        "sweep output differs between identical runs"
    return CriterionResult("determinism", passed, detail,
                           time.perf_counter() - t0)


ALL_CRITERIA = [
    criterion_gradient_rules,
    criterion_musimo_optimality,
    criterion_wmmse_irs,
    criterion_blockdiag,
    criterion_prop2_roundtrip,
    criterion_ao_vs_bcd,
    criterion_grid_certification,
    criterion_runtime_trend,
    criterion_determinism,
]


def run_all(names=None, printer=print) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        label = fn.__name__.removeprefix("criterion_").replace("_", "-")
        if names and label not in names:
            continue
        res = fn()
        results.append(res)
        printer(f"[{'PASS' if res.passed else 'FAIL'}] {res.name}: "
                f"{res.detail} ({res.seconds:.1f}s)")
    return results
