"""Closed-form KKT solvers for diagonal-structure problems.

Covers three families:

* uplink MU-SIMO capacity / MSE with a sum-power budget and per-user
  caps, solved by bisection on the sum-power multiplier ``mu`` with a
  cyclic per-coordinate fixed point inside;
* amplitude-adjustable IRS capacity / MSE via the WMMSE alternating
  loop (receiver, weight, regularized diagonal update);
* block-diagonal MU-MIMO capacity via per-user eigenspace alignment
  and water-filling.

The per-coordinate updates follow the rank-one reduction around
``J_k = I + S diag(lam with lam_k zeroed)`` where S = H^H Sigma^{-1} H:
the full resolvent is J_k plus the rank-one term lam_k * S[:, k] e_k^T,
so the stationarity condition collapses to scalar equations in lam_k.
"""

from __future__ import annotations

import time

import numpy as np

from . import linalg
from .scenarios import (
    AmpIrsScenario,
    BlockDiagScenario,
    MuSimoScenario,
    SolverReport,
)

INNER_TOL = 1e-9        # max-norm change that ends the cyclic fixed point
INNER_MAX_SWEEPS = 500
BISECT_MAX_STEPS = 200
GAIN_FLOOR = 1e-14      # effective gains below this get zero power


# ---------------------------------------------------------------------------
# Water-filling
# ---------------------------------------------------------------------------

def waterfill(gains, budget: float, caps=None) -> np.ndarray:
    """Capped water-filling: a_i = clip(1/mu - 1/g_i, 0, cap_i).

    The level mu is bisected so that sum(a) equals min(budget, sum(caps))
    to 1e-10; a final exact pass on the active set removes bisection
    drift.  ``caps=None`` means uncapped coordinates.
    """
    g = np.asarray(gains, dtype=np.float64).reshape(-1)
    if g.size == 0:
        raise ValueError("waterfill needs at least one gain")
    if np.any(g <= 0):
        raise ValueError("gains must be positive")
    if budget <= 0:
        raise ValueError("budget must be positive")
    caps_arr = (np.full_like(g, np.inf) if caps is None
                else np.asarray(caps, dtype=np.float64).reshape(-1))
    if caps_arr.shape != g.shape or np.any(caps_arr < 0):
        raise ValueError("caps must be nonnegative and match gains")

    cap_total = float(np.sum(caps_arr))
    if np.isfinite(cap_total) and cap_total <= budget:
        return caps_arr.copy()
    target = min(budget, cap_total)

    def alloc(mu):
        return np.clip(1.0 / mu - 1.0 / g, 0.0, caps_arr)

    lo, hi = 0.0, float(np.max(g))          # alloc(hi) == 0
    # With mu -> 0 the allocation grows to the caps (or infinity), so the
    # bracket always contains the target.
    for _ in range(BISECT_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        if np.sum(alloc(mid)) > target:
            lo = mid
        else:
            hi = mid
    a = alloc(hi)

    # Exact refinement on the active set: interior coordinates share the
    # water level, capped and dry coordinates are pinned.
    for _ in range(g.size):
        capped = a >= caps_arr - 1e-15
        dry = a <= 1e-15
        interior = ~capped & ~dry
        if not np.any(interior):
            break
        residual = target - float(np.sum(caps_arr[capped]))
        level = (residual + np.sum(1.0 / g[interior])) / np.count_nonzero(interior)
        if level <= 0:
            break
        a_new = np.clip(level - 1.0 / g, 0.0, caps_arr)
        if np.allclose(a_new, a, atol=1e-14):
            a = a_new
            break
        a = a_new
    return a


# ---------------------------------------------------------------------------
# MU-SIMO capacity and MSE (bisection on mu, cyclic coordinate updates)
# ---------------------------------------------------------------------------

def _gram(s: MuSimoScenario) -> np.ndarray:
    """S = H^H Sigma^{-1} H, the K x K effective channel Gram matrix."""
    return s.h.conj().T @ np.linalg.solve(s.sigma, s.h)


def _hermitian_form(s_mat: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """I + Lam^{1/2} S Lam^{1/2}; same spectrum as I + S Lam for lam >= 0."""
    r = np.sqrt(np.clip(lam, 0.0, None))
    return np.eye(len(lam)) + r[:, None] * s_mat * r[None, :]


def musimo_capacity_objective(s: MuSimoScenario, lam: np.ndarray) -> float:
    """log|I + Sigma^{-1} H Lam H^H| evaluated in the K x K Hermitian form."""
    return linalg.logdet_hpd(_hermitian_form(_gram(s), lam))


def musimo_mse_objective(s: MuSimoScenario, lam: np.ndarray) -> float:
    """Tr[(I_Nt + Sigma^{-1} H Lam H^H)^{-1}]; shares the K x K spectrum."""
    m = _hermitian_form(_gram(s), lam)
    return float(np.real(np.trace(np.linalg.inv(m)))) + (s.n_t - s.k)


def _coord_quantities(s_mat: np.ndarray, lam: np.ndarray, k: int, order: int):
    """Scalar pieces of the rank-one reduction at coordinate k.

    Returns t = [J_k^{-1} S]_kk and, for order 2, also w = [J_k^{-2} S]_kk.
    Both are real for Hermitian S and nonnegative lam.
    """
    lam_t = lam.copy()
    lam_t[k] = 0.0
    j_mat = np.eye(len(lam)) + s_mat * lam_t[None, :]
    z1 = np.linalg.solve(j_mat, s_mat[:, k])
    t = float(np.real(z1[k]))
    if order == 1:
        return t, None
    z2 = np.linalg.solve(j_mat, z1)
    return t, float(np.real(z2[k]))


def _capacity_coord(t: float, mu: float, cap: float) -> float:
    """Water-filling update lam_k = clip(y / (c - t y), 0, cap).

    With y = t - mu and c = t^2 this equals clip(1/mu - 1/t, 0, cap); the
    denominator carries a minus sign (c - t*y, not c + t*y), which the
    single-user closed form pins down.
    """
    if t <= GAIN_FLOOR:
        return 0.0
    y = t - mu
    denom = t * t - t * y
    if denom <= 0.0:  # only reachable through mu <= 0, handled by caller
        return cap
    return float(np.clip(max(y, 0.0) / denom, 0.0, cap))


def _mse_coord(t: float, w: float, mu: float, cap: float):
    """Per-coordinate MSE update via the quadratic in lam_k.

    The stationarity condition collapses to a*lam^2 + b*lam + x = 0 with
    a = t^2 (w - mu) + t^2 w - 2 t^2 w, b = 2 t (w - mu) - 2 t w and
    x = w - mu.  Both clipped roots are scored against the coordinate
    Lagrangian mu*lam - lam*w/(1 + lam*t) and the better one kept; a
    complex discriminant falls back to the interval endpoints.
    """
    if t <= GAIN_FLOOR:
        return 0.0, False
    x = w - mu
    a_q = t * t * x - t * t * w          # == -t^2 * mu
    b_q = 2.0 * t * x - 2.0 * t * w      # == -2 t mu
    candidates = [0.0, cap]
    fallback = False
    if abs(a_q) < 1e-300:
        if abs(b_q) > 1e-300:
            candidates.append(float(np.clip(-x / b_q, 0.0, cap)))
    else:
        disc = b_q * b_q - 4.0 * a_q * x
        if disc < 0.0:
            fallback = True
        else:
            rt = np.sqrt(disc)
            for root in ((-b_q + rt) / (2.0 * a_q), (-b_q - rt) / (2.0 * a_q)):
                candidates.append(float(np.clip(max(root, 0.0), 0.0, cap)))

    def lagrangian(v):
        return mu * v - v * w / (1.0 + v * t)

    best = min(candidates, key=lagrangian)
    return best, fallback


def _fixed_point(s_mat, mu, caps, kind):
    """Cyclic coordinate updates at fixed mu until the allocation settles."""
    k_dim = s_mat.shape[0]
    lam = np.zeros(k_dim)
    fallback_seen = False
    for _ in range(INNER_MAX_SWEEPS):
        delta = 0.0
        for k in range(k_dim):
            if kind == "capacity":
                t, _ = _coord_quantities(s_mat, lam, k, order=1)
                new = _capacity_coord(t, mu, caps[k])
            else:
                t, w = _coord_quantities(s_mat, lam, k, order=2)
                new, fb = _mse_coord(t, w, mu, caps[k])
                fallback_seen = fallback_seen or fb
            delta = max(delta, abs(new - lam[k]))
            lam[k] = new
        if delta < INNER_TOL:
            return lam, True, fallback_seen
    return lam, False, fallback_seen


def _gradient_diag(s_mat: np.ndarray, lam: np.ndarray, order: int) -> np.ndarray:
    """Diag{(I + S Lam)^{-order} S}, the stationarity left-hand side."""
    j_mat = np.eye(len(lam)) + s_mat * lam[None, :]
    m = np.linalg.solve(j_mat, s_mat)
    for _ in range(order - 1):
        m = np.linalg.solve(j_mat, m)
    return np.real(np.diagonal(m))


def _solve_musimo(s: MuSimoScenario, tol: float, kind: str) -> SolverReport:
    t0 = time.perf_counter()
    s_mat = _gram(s)
    caps = s.p_user
    flags = []

    def allocation(mu):
        lam, ok, fb = _fixed_point(s_mat, mu, caps, kind)
        if not ok:
            flags.append(f"inner fixed point not converged at mu={mu:.3e}")
        if fb:
            flags.append(f"quadratic fallback to boundary at mu={mu:.3e}")
        return lam

    # mu = 0: every coordinate runs to its cap; feasible iff caps fit P.
    if float(np.sum(caps)) <= s.p_sum + tol:
        lam, mu = caps.astype(float).copy(), 0.0
        iterations = 1
    else:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            if np.sum(allocation(hi)) < s.p_sum:
                break
            hi *= 2.0
        else:
            raise RuntimeError("mu bracket expansion failed")
        iterations = 0
        for _ in range(BISECT_MAX_STEPS):
            iterations += 1
            mid = 0.5 * (lo + hi)
            if np.sum(allocation(mid)) > s.p_sum:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        mu = hi
        lam = allocation(mu)

    order = 1 if kind == "capacity" else 2
    grad = _gradient_diag(s_mat, lam, order)
    interior = (lam > 1e-9) & (lam < caps - 1e-9)
    kkt = float(np.max(np.abs(grad[interior] - mu))) if np.any(interior) else 0.0
    psi = np.where(lam >= caps - 1e-9, np.maximum(grad - mu, 0.0), 0.0)
    comp = max(abs(mu * (float(np.sum(lam)) - s.p_sum)) if mu > 0 else 0.0,
               float(np.max(np.abs(psi * (lam - caps)))) if len(lam) else 0.0)

    objective = (musimo_capacity_objective(s, lam) if kind == "capacity"
                 else musimo_mse_objective(s, lam))
    return SolverReport(
        solver=f"musimo-{kind}",
        solution=lam,
        objective=objective,
        iterations=iterations,
        seconds=time.perf_counter() - t0,
        converged=not any("not converged" in f for f in flags),
        kkt_residual=kkt,
        comp_slack=comp,
        flags=sorted(set(flags)),
        extras={"mu": mu},
    )


def solve_musimo_capacity(s: MuSimoScenario, tol: float = 1e-8) -> SolverReport:
    """Capacity-optimal diagonal power allocation (water-filling form)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _solve_musimo(s, tol, "capacity")


def solve_musimo_mse(s: MuSimoScenario, tol: float = 1e-8) -> SolverReport:
    """MSE-optimal diagonal power allocation (per-coordinate quadratics)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _solve_musimo(s, tol, "mse")


# ---------------------------------------------------------------------------
# Amplitude-adjustable IRS via WMMSE
# ---------------------------------------------------------------------------

def _sigma_inv_sqrt(sigma: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh(sigma)
    return q @ np.diag(1.0 / np.sqrt(w)) @ q.conj().T


def amp_irs_capacity_objective(s: AmpIrsScenario, d: np.ndarray) -> float:
    t = _sigma_inv_sqrt(s.sigma) @ s.effective_channel(d)
    return linalg.logdet_hpd(np.eye(s.n_r) + t @ t.conj().T)


def amp_irs_mse_objective(s: AmpIrsScenario, d: np.ndarray) -> float:
    """Sum MSE Tr[(I_Nt + H^H Sigma^{-1} H)^{-1}] of the effective link."""
    t = _sigma_inv_sqrt(s.sigma) @ s.effective_channel(d)
    m = np.eye(s.n_t) + t.conj().T @ t
    return float(np.real(np.trace(np.linalg.inv(m))))


def wmmse_update_g(s: AmpIrsScenario, d: np.ndarray) -> np.ndarray:
    """MMSE receiver G = H^H (Sigma + H H^H)^{-1} for the effective channel."""
    h = s.effective_channel(d)
    return h.conj().T @ linalg.inv(s.sigma + h @ h.conj().T)


def wmmse_update_w(s: AmpIrsScenario, d: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Weight W = (I - G H)^{-1}; Hermitian PD when G is the MMSE receiver."""
    h = s.effective_channel(d)
    w = linalg.inv(np.eye(s.n_t) - g @ h)
    return linalg.hermitize(w)


def wmmse_update_lambda(s: AmpIrsScenario, g: np.ndarray, w: np.ndarray,
                        tol: float = 1e-10) -> np.ndarray:
    """Regularized diagonal update diag(Lam^H) = (mu I + Phi)^{-1} a.

    mu = 0 is kept whenever the unregularized solution already satisfies
    the Frobenius budget (complementary slackness); otherwise mu is
    bisected until |sum |d_i|^2 - K| <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    wg = w @ g
    m1 = s.h1.conj().T @ g.conj().T @ wg @ s.h1        # H1^H G^H W G H1
    phi = (s.h2 @ s.h2.conj().T) * m1.T                # Hadamard product, PSD
    a = np.diagonal(s.h2 @ wg @ s.h1
                    - s.h2 @ s.h0.conj().T @ g.conj().T @ wg @ s.h1).copy()
    k = s.k

    # One eigendecomposition turns every (mu I + Phi)^{-1} a into O(K)
    # work: d*(mu) = Q (w + mu)^{-1} Q^H a.
    eigval, q = np.linalg.eigh(linalg.hermitize(phi))
    eigval = np.clip(eigval, 0.0, None)
    c = q.conj().T @ a

    null_floor = 1e-14 * max(float(eigval[-1]), 1.0)
    null = eigval < null_floor

    def coeffs(mu):
        if mu == 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.where(null, 0.0, c / np.where(null, 1.0, eigval))
            return vals
        return c / (eigval + mu)

    def solution(mu):
        return np.conj(q @ coeffs(mu))

    def norm2(mu):
        if mu == 0.0 and np.any(np.abs(c[null]) >
                                1e-14 * max(np.linalg.norm(a), 1.0)):
            return np.inf  # unbounded along Phi's null space
        return float(np.sum(np.abs(coeffs(mu)) ** 2))

    if norm2(0.0) <= k + tol:
        return solution(0.0)

    lo, hi = 0.0, 1.0
    for _ in range(200):
        if norm2(hi) < k:
            break
        hi *= 4.0
    else:
        raise RuntimeError("bracket expansion failed in the lambda update")
    for _ in range(BISECT_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        if norm2(mid) > k:
            lo = mid
        else:
            hi = mid
        if abs(norm2(mid) - k) <= tol:
            return solution(mid)
    return solution(hi)


def _solve_amp_irs(s: AmpIrsScenario, eps: float, max_iter: int,
                   kind: str) -> SolverReport:
    t0 = time.perf_counter()
    d = np.ones(s.k, dtype=np.complex128)  # unit amplitudes, Tr(Lam Lam^H) = K
    objective = (amp_irs_capacity_objective if kind == "capacity"
                 else amp_irs_mse_objective)
    better = (lambda new, old: new >= old - 1e-9) if kind == "capacity" \
        else (lambda new, old: new <= old + 1e-9)

    trajectory = [objective(s, d)]
    flags = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        g = wmmse_update_g(s, d)
        w = wmmse_update_w(s, d, g) if kind == "capacity" \
            else np.eye(s.n_t, dtype=np.complex128)
        d = wmmse_update_lambda(s, g, w)
        obj = objective(s, d)
        if not better(obj, trajectory[-1]):
            flags.append(f"monotonicity violation at iteration {iterations}")
        trajectory.append(obj)
        if abs(obj - trajectory[-2]) < eps * max(1.0, abs(trajectory[-2])):
            converged = True
            break
    if not converged:
        flags.append("max_iter reached")

    return SolverReport(
        solver=f"amp-irs-{kind}",
        solution=d,
        objective=trajectory[-1],
        trajectory=trajectory,
        iterations=iterations,
        seconds=time.perf_counter() - t0,
        converged=converged,
        flags=flags,
    )


def solve_amp_irs_capacity(s: AmpIrsScenario, eps: float = 1e-6,
                           max_iter: int = 200) -> SolverReport:
    """WMMSE alternating optimization for the IRS capacity problem."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return _solve_amp_irs(s, eps, max_iter, "capacity")


def solve_amp_irs_mse(s: AmpIrsScenario, eps: float = 1e-6,
                      max_iter: int = 200) -> SolverReport:
    """Same alternating loop with the weight pinned to identity (MSE)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return _solve_amp_irs(s, eps, max_iter, "mse")


# ---------------------------------------------------------------------------
# Block-diagonal MU-MIMO capacity
# ---------------------------------------------------------------------------

def blockdiag_objective(s: BlockDiagScenario, q_users: list) -> float:
    sis = _sigma_inv_sqrt(s.sigma)
    n_t = s.h_users[0].shape[0]
    acc = np.eye(n_t, dtype=np.complex128)
    for h, q in zip(s.h_users, q_users):
        t = sis @ h
        acc = acc + t @ q @ t.conj().T
    return linalg.logdet_hpd(linalg.hermitize(acc))


def solve_blockdiag_capacity(s: BlockDiagScenario, eps: float = 1e-9,
                             tol: float = 1e-10) -> SolverReport:
    """Cyclic per-user eigenspace-alignment water-filling.

    Each pass whitens user k by the interference-plus-noise factor
    L_k^{-1/2}, takes the SVD of the whitened channel and water-fills its
    squared singular values against P_k.
    """
    if eps <= 0 or tol <= 0:
        raise ValueError("eps and tol must be positive")
    t0 = time.perf_counter()
    sis = _sigma_inv_sqrt(s.sigma)
    t_users = [sis @ h for h in s.h_users]
    n_t = t_users[0].shape[0]
    q_users = [np.zeros((h.shape[1], h.shape[1]), dtype=np.complex128)
               for h in s.h_users]

    trajectory = [blockdiag_objective(s, q_users)]
    converged = False
    sweeps = 0
    for sweeps in range(1, 200 + 1):
        for k in range(s.k):
            l_mat = np.eye(n_t, dtype=np.complex128)
            for j in range(s.k):
                if j != k:
                    l_mat = l_mat + t_users[j] @ q_users[j] @ t_users[j].conj().T
            l_inv_sqrt = linalg.inv(linalg.psd_sqrt(linalg.hermitize(l_mat)))
            _, sv, v = linalg.svd(l_inv_sqrt @ t_users[k])
            keep = sv > np.sqrt(GAIN_FLOOR)
            gains = sv[keep] ** 2
            q_new = np.zeros_like(q_users[k])
            if gains.size:
                p = waterfill(gains, s.p_user[k])
                vk = v[:, :len(sv)][:, keep]
                q_new = (vk * p[None, :]) @ vk.conj().T
            q_users[k] = linalg.hermitize(q_new)
        trajectory.append(blockdiag_objective(s, q_users))
        if abs(trajectory[-1] - trajectory[-2]) < eps * max(1.0, abs(trajectory[-2])):
            converged = True
            break

    return SolverReport(
        solver="blockdiag-capacity",
        solution=q_users,
        objective=trajectory[-1],
        trajectory=trajectory,
        iterations=sweeps,
        seconds=time.perf_counter() - t0,
        converged=converged,
        flags=[] if converged else ["max sweeps reached"],
    )
