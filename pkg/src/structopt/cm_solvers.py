"""Constant-modulus solvers: probe recovery and the alternating driver.

The driver sweeps sites row-major Gauss-Seidel style.  At each site it
evaluates the complex derivative quantity G at five probe phases that
share every other entry with the current iterate, recovers the
normalized coefficient vector w from the 5x5 homogeneous system built
on tan(angle(G)), computes both stationary candidates, and picks one by
the finite-difference sign of g (two extra G evaluations per
candidate).  The direct coefficient route (``closed_phase``) is what
the conventional element-wise sweep in :mod:`structopt.baselines` uses
instead.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cm_problems import (
    CmProblem,
    CoefficientError,
    DegeneratePhase,
    PhaseCandidates,
    make_problem,
    solve_sinusoid,
)
from .derivatives import TWO_PI, wrap_phase
from .scenarios import SolverReport

PROBE_COUNT = 5
PROBE_OFFSETS = TWO_PI * np.arange(PROBE_COUNT) / PROBE_COUNT
PROBE_OFFSETS_LIST = PROBE_OFFSETS.tolist()
PROBE_MIN_SEPARATION = 0.1          # rad, pairwise, mod 2*pi
PROBE_ROTATE_STEP = 0.05            # rad, applied when a probe is unusable
PROBE_MAX_ATTEMPTS = 5
RE_G_MIN = 1e-12                    # |Re G| floor for a usable tangent
R_COND_LIMIT = 1e10
RESIDUAL_TOL = 1e-8                 # linear-system residual contract
CURVATURE_MIN = 1e-10               # below this both candidates count as flat
SELECT_FD_STEP = 1e-4
STATIONARITY_TOL = 1e-6             # |g| bound enforced at write-back


class ProbeRecoveryError(RuntimeError):
    """Five-probe system stayed unusable after the allowed resampling."""


@dataclass
class ProbeSet:
    """Five probe phases for one site; all other entries stay shared."""

    base: np.ndarray
    site: object
    probe_phases: np.ndarray

    def __post_init__(self):
        self.probe_phases = wrap_phase(np.asarray(self.probe_phases,
                                                  dtype=np.float64))
        if self.probe_phases.shape != (PROBE_COUNT,):
            raise ValueError("exactly five probe phases are required")
        diff = np.abs(self.probe_phases[:, None] - self.probe_phases[None, :])
        diff = np.minimum(diff, TWO_PI - diff)
        off = diff[~np.eye(PROBE_COUNT, dtype=bool)]
        if np.any(off < PROBE_MIN_SEPARATION):
            raise ValueError("probe phases are not separated by >= 0.1 rad")


def make_probe_set(theta: np.ndarray, site, offset: float = 0.0) -> ProbeSet:
    """Equispaced probes theta_site + 2*pi*m/5 (+offset), m = 0..4."""
    theta = np.asarray(theta, dtype=np.float64)
    return ProbeSet(theta.copy(), site, theta[site] + offset + PROBE_OFFSETS)


def g_eval(problem: CmProblem, theta, site) -> float:
    """Element-wise phase-derivative factor g at one site.

    This is Im of ``g_eval_complex``; the objective's derivative w.r.t.
    the site phase equals ``problem.grad_scale * g``.
    """
    return problem.g(np.asarray(theta, dtype=np.float64), site)


def g_eval_complex(problem: CmProblem, theta, site) -> complex:
    """Complex quantity G with Im{G} = g; Re{G} feeds tan(angle(G))."""
    return problem.g_complex(np.asarray(theta, dtype=np.float64), site)


def _try_recover(phases, values, check_cond: bool = True):
    """One recovery attempt; None when the probes are unusable.

    ``phases`` and ``values`` are length-5 sequences.  The returned w
    solves the five homogeneous tangent equations with residual
    <= RESIDUAL_TOL relative to the tangent magnitudes.  Scalar work is
    plain Python on purpose: this sits inside the per-site sweep.
    """
    rows = []
    tans = []
    for phi, g_val in zip(phases, values):
        g_val = complex(g_val)
        re_g = g_val.real
        if not (math.isfinite(re_g) and math.isfinite(g_val.imag)) \
                or abs(re_g) <= RE_G_MIN:
            return None
        t = g_val.imag / re_g
        c = math.cos(phi)
        s = math.sin(phi)
        rows.append((s - t * c, c + t * s, -s - t * c, c - t * s, 1.0))
        tans.append(t)
    r_mat = np.array(rows)
    if check_cond:
        sv = np.linalg.svd(r_mat, compute_uv=False)
        if sv[-1] <= 0.0 or sv[0] / sv[-1] >= R_COND_LIMIT:
            return None
    try:
        w = np.linalg.solve(r_mat, np.asarray(tans))
    except np.linalg.LinAlgError:
        return None
    scale = max(1.0, max(abs(t) for t in tans))
    w_list = w.tolist()
    for row, t in zip(rows, tans):
        resid = abs(sum(r * wi for r, wi in zip(row, w_list)) - t)
        if resid > RESIDUAL_TOL * scale:
            return None
    return w


def prop2_recover(probe: ProbeSet, g_values: Sequence[complex],
                  g_fn: Callable[[float], complex] | None = None) -> np.ndarray:
    """Recover w = [Re A, Im A, Re B, Im B, Im C] / Re C from five probes.

    Probes whose |Re G| falls below RE_G_MIN, or an ill-conditioned 5x5
    system (condition number >= 1e10), trigger a rotation of all probe
    phases by +0.05 rad and a re-evaluation through ``g_fn`` (up to five
    attempts).  Raises ProbeRecoveryError when no evaluator is available
    or the attempts run out.
    """
    phases = probe.probe_phases.copy()
    values = np.asarray(g_values, dtype=np.complex128)
    if values.shape != (PROBE_COUNT,):
        raise ValueError("expected exactly five g values")
    for _ in range(PROBE_MAX_ATTEMPTS):
        w = _try_recover(phases, values, check_cond=True)
        if w is not None:
            probe.probe_phases = phases
            return w
        if g_fn is None:
            raise ProbeRecoveryError("unusable probes and no evaluator to resample")
        phases = phases + PROBE_ROTATE_STEP
        values = np.array([g_fn(p) for p in phases], dtype=np.complex128)
    raise ProbeRecoveryError("probe recovery stayed ill-conditioned after resampling")


def prop2_phase(w: np.ndarray) -> tuple[float, float]:
    """Both stationary phases from the recovered coefficient vector.

    Solves zhat1*sin(t) + zhat2*cos(t) + w5 = 0 with zhat1 = w1 - w3 and
    zhat2 = w2 + w4; outputs are wrapped to [0, 2*pi).
    """
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (PROBE_COUNT,):
        raise ValueError("w must have 5 entries")
    return solve_sinusoid(w[0] - w[2], w[1] + w[3], w[4])


@dataclass
class PhaseSelection:
    theta: float
    degenerate: bool
    curvatures: tuple


def prop1_select(problem: CmProblem, theta, site, theta1: float, theta2: float,
                 sense: str | None = None,
                 g_fn: Callable[[float], complex] | None = None) -> PhaseSelection:
    """Pick the candidate whose second derivative matches the sense.

    The sign is a central finite difference of g (two extra evaluations
    per candidate, step 1e-4), never the recovered-coefficient test,
    because w is known only up to the sign of Re C.  The objective's
    second derivative is grad_scale * dg/dtheta.
    """
    sense = sense or problem.sense
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    theta = np.asarray(theta, dtype=np.float64)

    if g_fn is None:
        work = theta.copy()

        def g_fn(psi):
            work[site] = psi
            return problem.g_complex(work, site)

    hi = complex(g_fn(theta1 + SELECT_FD_STEP)).imag
    lo = complex(g_fn(theta1 - SELECT_FD_STEP)).imag
    c1 = problem.grad_scale * (hi - lo) / (2.0 * SELECT_FD_STEP)
    chosen, degenerate = _pick_by_curvature(theta1, theta2, c1, sense)
    return PhaseSelection(chosen, degenerate, (c1, -c1))


def _pick_by_curvature(theta1, theta2, c1, sense):
    """Shared selection policy: curvature sign against the sense.

    The derivative slice has exactly two zeros per period, so their
    slopes alternate in sign: one probe at theta1 settles both
    candidates.  A vanishing slope means a (near-)double zero, i.e. a
    flat direction.
    """
    if abs(c1) <= CURVATURE_MIN:
        return theta1, True
    want_positive = sense == "min"
    return (theta1, False) if (c1 > 0) == want_positive else (theta2, False)


def closed_phase_hybrid_capacity(scenario, theta, site) -> PhaseCandidates:
    return make_problem("hybrid-capacity", scenario).closed_phase(theta, site)


def closed_phase_hybrid_mse(scenario, theta, site) -> PhaseCandidates:
    return make_problem("hybrid-mse", scenario).closed_phase(theta, site)


def closed_phase_wmmse(scenario, theta, site) -> PhaseCandidates:
    return make_problem("hybrid-wmmse", scenario).closed_phase(theta, site)


def closed_phase_irs_capacity(scenario, theta, site) -> PhaseCandidates:
    return make_problem("irs-capacity", scenario).closed_phase(theta, site)


def closed_phase_irs_mse(scenario, theta, site) -> PhaseCandidates:
    return make_problem("irs-mse", scenario).closed_phase(theta, site)


def closed_phase_irs_wmmse(scenario, theta, site) -> PhaseCandidates:
    return make_problem("irs-wmmse", scenario).closed_phase(theta, site)


def _improved(sense: str, new: float, old: float, slack: float = 1e-9) -> bool:
    return new >= old - slack if sense == "max" else new <= old + slack


class _BatchAdapter:
    """Point-wise fallback for contexts without a vectorized evaluator."""

    def __init__(self, ctx):
        self.ctx = ctx

    def __call__(self, site, psis):
        return np.array([self.ctx.g_complex_at(site, p) for p in psis],
                        dtype=np.complex128)


def _compiled_site_update():
    """The numba site kernel, imported lazily so compilation cost lands
    on first use; semantics are pinned to :func:`_site_update` by tests."""
    from .cm_kernel import site_update
    return site_update


def _site_update(ctx, g_batch, site, sense, grad_scale):
    """One Gauss-Seidel site step; returns None when the site is skipped.

    Implements the public-op pipeline (prop2_recover -> prop2_phase ->
    prop1_select) with batched G evaluations; conditioning failures
    surface through the residual test and the write-back stationarity
    guard, which trigger the same probe rotation.
    """
    cur = ctx.current(site)
    base = [cur + off for off in PROBE_OFFSETS_LIST]
    w = None
    for attempt in range(PROBE_MAX_ATTEMPTS):
        shift = attempt * PROBE_ROTATE_STEP
        phases = base if attempt == 0 else [p + shift for p in base]
        values = g_batch(site, phases)
        w = _try_recover(phases, values, check_cond=False)
        if w is not None:
            break
    if w is None:
        return None
    try:
        t1, t2 = solve_sinusoid(w[0] - w[2], w[1] + w[3], w[4])
    except (DegeneratePhase, CoefficientError):
        return None
    sel = g_batch(site, (t1 - SELECT_FD_STEP, t1 + SELECT_FD_STEP, t1, t2))
    sel = [complex(v) for v in sel]
    c1 = grad_scale * (sel[1].imag - sel[0].imag) / (2.0 * SELECT_FD_STEP)
    chosen, degenerate = _pick_by_curvature(t1, t2, c1, sense)
    if degenerate:
        return None
    g_sel = sel[2] if chosen == t1 else sel[3]
    if abs(g_sel.imag) > STATIONARITY_TOL * max(1.0, abs(g_sel)):
        return None  # recovered candidates missed stationarity
    return chosen


def algorithm1_ao_multiuser(problems: Sequence[CmProblem],
                            eps: float = 1e-6, max_iter: int = 100,
                            seed: int = 0) -> list[SolverReport]:
    """Per-user sweeps for the separable multi-user quadratic problem.

    The multi-user objective is a sum of per-user terms, each touching
    only its own phase matrix, so every user runs an independent sweep.
    """
    return [algorithm1_ao(p, eps=eps, max_iter=max_iter, seed=seed + u)
            for u, p in enumerate(problems)]


def algorithm1_ao(problem: CmProblem, init: np.ndarray | None = None,
                  eps: float = 1e-6, max_iter: int = 100,
                  seed: int = 0) -> SolverReport:
    """Probe-based alternating optimization over all sites.

    Per site: five shared-except-site probes, coefficient recovery,
    candidate phases, finite-difference selection, immediate write-back
    (Gauss-Seidel).  Stops when the objective moves by less than ``eps``
    between two consecutive sweeps.  Skipped degeneracies are counted in
    ``extras['skipped_sites']``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t0 = time.perf_counter()
    theta = problem.random_theta(seed) if init is None \
        else wrap_phase(np.asarray(init, dtype=np.float64))
    if theta.shape != problem.theta_shape:
        raise ValueError(f"init shape {theta.shape} != {problem.theta_shape}")

    ctx = problem.probe_context(theta)
    g_batch = getattr(ctx, "g_batch", None) or _BatchAdapter(ctx)
    sense, grad_scale = problem.sense, problem.grad_scale
    sites = list(problem.sites())
    scalars_of = getattr(ctx, "site_scalars", None)
    kernel = _compiled_site_update() if scalars_of is not None else None
    want_positive = sense == "min"

    def objective_now():
        fast = getattr(ctx, "objective", None)
        val = fast() if fast is not None else None
        return val if val is not None else problem.objective(ctx.theta)

    trajectory = [objective_now()]
    flags: list[str] = []
    skipped = 0
    converged = False
    outer = 0
    for outer in range(1, max_iter + 1):
        for site in sites:
            scalars = scalars_of(site) if kernel is not None else None
            if scalars is not None:
                chosen = kernel(*scalars, grad_scale, want_positive)
                if chosen != chosen:  # NaN marks a skipped site
                    chosen = None
            else:
                chosen = _site_update(ctx, g_batch, site, sense, grad_scale)
            if chosen is None:
                skipped += 1
                continue
            ctx.commit(site, chosen)
        obj = objective_now()
        if not _improved(sense, obj, trajectory[-1]):
            flags.append(f"monotonicity violation at sweep {outer}")
        trajectory.append(obj)
        if abs(trajectory[-1] - trajectory[-2]) < eps:
            converged = True
            break
    if not converged:
        flags.append("max_iter reached")

    return SolverReport(
        solver=f"ao-{problem.tag}",
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
