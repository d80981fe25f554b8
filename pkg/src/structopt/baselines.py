"""Independent reference algorithms used for verification and benchmarks.

Nothing here reads analytic gradients from :mod:`structopt.derivatives`:
the projected-gradient oracle differentiates numerically on a flat real
parametrization, and the grid oracle evaluates objectives only.  The
element-wise BCD baseline shares the sweep structure of the probe-based
driver but goes through the direct coefficient extractions (per-site
matrix inversions) for its phase updates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cm_problems import CmProblem, CoefficientError, DegeneratePhase
from .cm_solvers import CURVATURE_MIN, _improved
from .derivatives import TWO_PI, wrap_phase
from .diag_solvers import (
    amp_irs_capacity_objective,
    amp_irs_mse_objective,
    blockdiag_objective,
    musimo_capacity_objective,
    musimo_mse_objective,
)
from .scenarios import (
    AmpIrsScenario,
    BlockDiagScenario,
    MuSimoScenario,
    SolverReport,
)

GRID_MAX_SITES = 8


@dataclass
class OracleConfig:
    """Projected-gradient oracle knobs (all positive; factors below 1)."""

    step: float = 1.0
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_iter: int = 600
    grad_step: float = 1e-6
    tol: float = 1e-10
    restarts: int = 5

    def __post_init__(self):
        if min(self.step, self.armijo_c, self.shrink, self.max_iter,
               self.grad_step, self.tol, self.restarts) <= 0:
            raise ValueError("all oracle parameters must be positive")
        if self.armijo_c >= 1 or self.shrink >= 1:
            raise ValueError("armijo_c and shrink must lie in (0, 1)")


# ---------------------------------------------------------------------------
# Element-wise BCD (coefficient-path baseline)
# ---------------------------------------------------------------------------

def _bcd_context(problem: CmProblem, theta):
    maker = getattr(problem, "bcd_context", None)
    return maker(theta) if maker is not None else _GenericBcdContext(problem, theta)


class _GenericBcdContext:
    def __init__(self, problem, theta):
        self.problem = problem
        self.theta = np.array(theta, dtype=np.float64)

    def current(self, site):
        return float(self.theta[site])

    def candidates(self, site):
        return self.problem.closed_phase(self.theta, site)

    def commit(self, site, phase):
        self.theta[site] = wrap_phase(phase)


def bcd_elementwise(problem: CmProblem, init: np.ndarray | None = None,
                    eps: float = 1e-6, max_iter: int = 100,
                    seed: int = 0) -> SolverReport:
    """Conventional element-wise sweep via direct coefficient extraction.

    Identical sweep order and termination rule as the probe-based
    driver; the per-site phases come from ``closed_phase`` (which pays
    the per-site inversions) and candidate selection uses the curvature
    sign carried by the extracted coefficients.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t0 = time.perf_counter()
    theta = problem.random_theta(seed) if init is None \
        else wrap_phase(np.asarray(init, dtype=np.float64))
    if theta.shape != problem.theta_shape:
        raise ValueError(f"init shape {theta.shape} != {problem.theta_shape}")

    ctx = _bcd_context(problem, theta)
    want_positive = problem.sense == "min"
    trajectory = [problem.objective(ctx.theta)]
    flags: list[str] = []
    skipped = 0
    converged = False
    outer = 0
    for outer in range(1, max_iter + 1):
        for site in problem.sites():
            try:
                cands = ctx.candidates(site)
            except (DegeneratePhase, CoefficientError):
                skipped += 1
                continue
            curv = [problem.grad_scale * cands.curvature(t) for t in cands]
            if max(abs(c) for c in curv) <= CURVATURE_MIN:
                skipped += 1
                continue
            scores = [c if want_positive else -c for c in curv]
            chosen = cands[0] if scores[0] >= scores[1] else cands[1]
            ctx.commit(site, chosen)
        obj = problem.objective(ctx.theta)
        if not _improved(problem.sense, obj, trajectory[-1]):
            flags.append(f"monotonicity violation at sweep {outer}")
        trajectory.append(obj)
        if abs(trajectory[-1] - trajectory[-2]) < eps:
            converged = True
            break
    if not converged:
        flags.append("max_iter reached")

    return SolverReport(
        solver=f"bcd-{problem.tag}",
        solution=ctx.theta.copy(),
        objective=trajectory[-1],
        trajectory=trajectory,
        iterations=outer,
        seconds=time.perf_counter() - t0,
        converged=converged,
        flags=flags,
        seed=seed if init is None else None,
        extras={"skipped_sites": skipped},
    )


# ---------------------------------------------------------------------------
# Projected-gradient oracle (CVX stand-in)
# ---------------------------------------------------------------------------

def _project_capped_simplex(x, caps, budget):
    """Euclidean projection onto {0 <= a <= caps, sum(a) <= budget}."""
    a = np.clip(x, 0.0, caps)
    if a.sum() <= budget:
        return a
    lo, hi = 0.0, float(np.max(x))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(x - mid, 0.0, caps).sum() > budget:
            lo = mid
        else:
            hi = mid
    return np.clip(x - hi, 0.0, caps)


class _MuSimoTask:
    def __init__(self, scenario: MuSimoScenario, kind: str):
        self.s = scenario
        self.kind = kind
        self.sense = "max" if kind == "capacity" else "min"
        self.dim = scenario.k
        self._objective = (musimo_capacity_objective if kind == "capacity"
                           else musimo_mse_objective)

    def init(self, rng):
        x = rng.uniform(0.0, 1.0, self.dim) * self.s.p_user
        return self.project(x)

    def project(self, x):
        return _project_capped_simplex(x, self.s.p_user, self.s.p_sum)

    def objective_batch(self, xs):
        return np.array([self._objective(self.s, x) for x in xs])

    def report_solution(self, x):
        return x


class _AmpIrsTask:
    def __init__(self, scenario: AmpIrsScenario, kind: str):
        self.s = scenario
        self.kind = kind
        self.sense = "max" if kind == "capacity" else "min"
        self.dim = 2 * scenario.k
        w, q = np.linalg.eigh(scenario.sigma)
        self._sis = q @ np.diag(1.0 / np.sqrt(w)) @ q.conj().T

    def _complex(self, x):
        k = self.s.k
        return x[..., :k] + 1j * x[..., k:]

    def init(self, rng):
        d = rng.normal(size=self.s.k) + 1j * rng.normal(size=self.s.k)
        d *= np.sqrt(self.s.k) / max(np.linalg.norm(d), 1e-12)
        return np.concatenate([d.real, d.imag])

    def project(self, x):
        d = self._complex(x)
        norm = np.linalg.norm(d)
        limit = np.sqrt(self.s.k)
        if norm > limit:
            d = d * (limit / norm)
        return np.concatenate([d.real, d.imag])

    def objective_batch(self, xs):
        d = self._complex(np.atleast_2d(xs))
        h = self.s.h0[None] + np.einsum("rk,bk,kt->brt", self.s.h1, d,
                                        self.s.h2, optimize=True)
        t = np.einsum("rs,bst->brt", self._sis, h, optimize=True)
        if self.kind == "capacity":
            gram = np.eye(self.s.n_r)[None] \
                + np.einsum("brt,bst->brs", t, np.conj(t), optimize=True)
            return np.real(np.linalg.slogdet(gram)[1])
        gram = np.eye(self.s.n_t)[None] \
            + np.einsum("brt,brs->bts", np.conj(t), t, optimize=True)
        return np.real(np.trace(np.linalg.inv(gram), axis1=-2, axis2=-1))

    def report_solution(self, x):
        return self._complex(x)


class _BlockDiagTask:
    def __init__(self, scenario: BlockDiagScenario):
        self.s = scenario
        self.sense = "max"
        self.n_r = [h.shape[1] for h in scenario.h_users]
        self.dim = int(2 * np.sum(np.square(self.n_r)))

    def _factors(self, x):
        out = []
        ofs = 0
        for n in self.n_r:
            sz = n * n
            re = x[ofs:ofs + sz].reshape(n, n)
            im = x[ofs + sz:ofs + 2 * sz].reshape(n, n)
            out.append(re + 1j * im)
            ofs += 2 * sz
        return out

    def covariances(self, x):
        qs = []
        for a_k, p_k in zip(self._factors(x), self.s.p_user):
            q = a_k @ a_k.conj().T
            tr = max(float(np.real(np.trace(q))), 1e-12)
            qs.append(q * (p_k / tr))
        return qs

    def init(self, rng):
        return rng.normal(size=self.dim)

    def project(self, x):
        return x  # trace normalization inside covariances()

    def objective_batch(self, xs):
        return np.array([blockdiag_objective(self.s, self.covariances(x))
                         for x in np.atleast_2d(xs)])

    def report_solution(self, x):
        return self.covariances(x)


_ORACLE_TASKS = {
    "musimo-capacity": lambda s: _MuSimoTask(s, "capacity"),
    "musimo-mse": lambda s: _MuSimoTask(s, "mse"),
    "amp-irs-capacity": lambda s: _AmpIrsTask(s, "capacity"),
    "amp-irs-mse": lambda s: _AmpIrsTask(s, "mse"),
    "blockdiag-capacity": _BlockDiagTask,
}


def _fd_grad(task, x, step):
    dim = x.shape[0]
    pts = np.repeat(x[None, :], 2 * dim, axis=0)
    idx = np.arange(dim)
    pts[2 * idx, idx] += step
    pts[2 * idx + 1, idx] -= step
    vals = task.objective_batch(pts)
    return (vals[0::2] - vals[1::2]) / (2.0 * step)


def _pg_single(task, cfg: OracleConfig, rng) -> tuple[np.ndarray, float]:
    sign = 1.0 if task.sense == "max" else -1.0
    x = task.project(task.init(rng))
    f = sign * float(task.objective_batch(x[None])[0])
    step = cfg.step
    stall = 0
    for _ in range(cfg.max_iter):
        g = sign * _fd_grad(task, x, cfg.grad_step)
        moved = False
        while step > 1e-14:
            x_new = task.project(x + step * g)
            f_new = sign * float(task.objective_batch(x_new[None])[0])
            gain = f_new - f
            if gain >= cfg.armijo_c * float(g @ (x_new - x)) and gain > -1e-15:
                rel = abs(gain) / max(1.0, abs(f))
                x, f = x_new, f_new
                moved = True
                step = min(step * 2.0, 1e6)
                stall = stall + 1 if rel < cfg.tol else 0
                break
            step *= cfg.shrink
        if not moved or stall >= 3:
            break
    return x, sign * f


def projected_gradient_oracle(family: str, scenario, cfg: OracleConfig | None = None,
                              seed: int = 0) -> SolverReport:
    """Multi-restart projected gradient with numerical central differences.

    ``family`` selects the parametrization: box+simplex for the MU-SIMO
    problems, Frobenius ball for the amplitude IRS ones, and a trace-
    normalized PSD factor per user for the block-diagonal capacity.
    """
    if family not in _ORACLE_TASKS:
        raise KeyError(f"unknown oracle family {family!r}")
    cfg = cfg or OracleConfig()
    task = _ORACLE_TASKS[family](scenario)
    t0 = time.perf_counter()

    best_x, best_f = None, None
    improved = False
    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        x0 = task.project(task.init(rng))
        f0 = float(task.objective_batch(x0[None])[0])
        x, f = _pg_single(task, cfg, rng)
        if _strictly_better(task.sense, f, f0):
            improved = True
        if best_f is None or _strictly_better(task.sense, f, best_f):
            best_x, best_f = x, f

    report = SolverReport(
        solver=f"pg-oracle-{family}",
        solution=task.report_solution(best_x),
        objective=best_f,
        iterations=cfg.restarts,
        seconds=time.perf_counter() - t0,
        converged=True,
        seed=seed,
    )
    if not improved:
        report.flag("no restart improved over its initial point")
    return report


def _strictly_better(sense: str, new: float, old: float) -> bool:
    return new > old if sense == "max" else new < old


# ---------------------------------------------------------------------------
# Brute-force grid certifier
# ---------------------------------------------------------------------------

def grid_search_oracle(problem: CmProblem, resolution: int = 4096,
                       sweeps: int = 5, init: np.ndarray | None = None,
                       seed: int = 0) -> SolverReport:
    """Cyclic exhaustive search over a uniform phase grid per site.

    Desk-scale only: refuses more than GRID_MAX_SITES sites.  The kept
    phase at each site is the grid argbest, so the objective can never
    degrade across sweeps.
    """
    if problem.n_sites() > GRID_MAX_SITES:
        raise ValueError(f"grid oracle is limited to {GRID_MAX_SITES} sites")
    if resolution < 8 or sweeps < 1:
        raise ValueError("resolution and sweeps out of range")
    t0 = time.perf_counter()
    theta = problem.random_theta(seed) if init is None \
        else wrap_phase(np.asarray(init, dtype=np.float64))
    values = TWO_PI * np.arange(resolution) / resolution
    pick = np.argmax if problem.sense == "max" else np.argmin

    trajectory = [problem.objective(theta)]
    for _ in range(sweeps):
        for site in problem.sites():
            objs = problem.objective_site_batch(theta, site, values)
            best = int(pick(objs))
            if _improved(problem.sense, objs[best], problem.objective(theta), 0.0):
                theta[site] = values[best]
        trajectory.append(problem.objective(theta))

    return SolverReport(
        solver=f"grid-{problem.tag}",
        solution=theta,
        objective=trajectory[-1],
        trajectory=trajectory,
        iterations=sweeps,
        seconds=time.perf_counter() - t0,
        converged=True,
        seed=seed if init is None else None,
    )
