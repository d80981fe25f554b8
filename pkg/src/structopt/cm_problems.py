"""Constant-modulus problem bundles.

Each problem couples an objective over a phase array ``theta`` (entries
of the unit-modulus variable are exp(1j*theta)) with:

* ``g_complex(theta, site)``: the complex quantity G whose imaginary
  part is the site's phase-derivative factor g.  The objective's true
  derivative is ``grad_scale * g`` with ``grad_scale`` in {-2, +2}.
* ``closed_phase(theta, site)``: the two stationary phases from the
  direct coefficient extraction (the route a conventional element-wise
  sweep takes), plus the conjugate-linear coefficients (A, B) so the
  curvature sign Re{A e^{j t} - B e^{-j t}} is available without extra
  matrix work.
* ``probe_context(theta)``: mutable sweep state able to evaluate G at
  trial phases of one site; the passive-IRS capacity problem overrides
  it with a rank-two Woodbury fast path so probe evaluations cost
  O(n_r^2) instead of a fresh inversion.

Matrix-variable problems use ``theta`` of shape (n_t, n_rf) and sites
(i, j); diagonal-variable problems use a length-k vector and integer
sites.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from . import linalg
from .derivatives import TWO_PI, phase_to_matrix, wrap_phase
from .scenarios import HybridScenario, PassiveIrsScenario, WmmseQuadScenario

PHASE_ARG_MIN = 1e-12   # below this the closed-form phase argument is void
REAL_IMAG_TOL = 1e-9    # provably-real intermediates must satisfy this
ARCSIN_SLACK = 1e-9     # tolerated arcsin domain overshoot


class DegeneratePhase(Exception):
    """The site's derivative vanishes identically: any phase is stationary."""


class CoefficientError(RuntimeError):
    """Coefficient extraction produced an impossible stationarity equation."""


def _real_scalar(z, what: str) -> float:
    """Collapse a provably-real intermediate to float, checking residual."""
    z = complex(z)
    if abs(z.imag) > REAL_IMAG_TOL * max(1.0, abs(z)):
        raise CoefficientError(f"{what} has imaginary residual {z.imag:.3e}")
    return z.real


def solve_sinusoid(z1: float, z2: float, c: float) -> tuple[float, float]:
    """Both roots of z1*sin(t) + z2*cos(t) + c = 0 in [0, 2*pi).

    Raises DegeneratePhase when the sinusoid vanishes identically and
    CoefficientError when |c| exceeds the amplitude beyond ARCSIN_SLACK
    (a stationarity equation with no solution cannot arise from a valid
    extraction).
    """
    r = math.hypot(z1, z2)
    if r <= PHASE_ARG_MIN:
        if abs(c) <= PHASE_ARG_MIN:
            raise DegeneratePhase("derivative slice vanishes identically")
        raise CoefficientError("constant derivative slice cannot be stationary")
    s0 = -c / r
    if abs(s0) > 1.0 + ARCSIN_SLACK:
        raise CoefficientError(f"arcsin argument {s0:.6f} outside [-1, 1]")
    s0 = min(1.0, max(-1.0, s0))
    phi = math.atan2(z2, z1)
    base = math.asin(s0)
    t1 = (base - phi) % TWO_PI
    t2 = (math.pi - base - phi) % TWO_PI
    # x % TWO_PI can round up to TWO_PI itself for tiny negative x.
    return (0.0 if t1 >= TWO_PI else t1, 0.0 if t2 >= TWO_PI else t2)


class PhaseCandidates(tuple):
    """(theta1, theta2) plus the conjugate-linear coefficients behind them."""

    def __new__(cls, theta1, theta2, a_coef, b_coef=0j):
        self = super().__new__(cls, (float(theta1), float(theta2)))
        return self

    def __init__(self, theta1, theta2, a_coef, b_coef=0j):
        self.a_coef = complex(a_coef)
        self.b_coef = complex(b_coef)

    def curvature(self, theta: float) -> float:
        """Slope of the derivative factor at ``theta`` (up to positive scale)."""
        e = np.exp(1j * theta)
        return float(np.real(self.a_coef * e - self.b_coef * np.conj(e)))


class _GenericProbeContext:
    """Fallback sweep state: evaluates G by direct recomputation."""

    def __init__(self, problem, theta):
        self.problem = problem
        self.theta = np.array(theta, dtype=np.float64)

    def current(self, site) -> float:
        return float(self.theta[site])

    def g_complex_at(self, site, psi: float) -> complex:
        saved = self.theta[site]
        self.theta[site] = psi
        try:
            return self.problem.g_complex(self.theta, site)
        finally:
            self.theta[site] = saved

    def commit(self, site, phase: float) -> None:
        self.theta[site] = wrap_phase(phase)

    def refresh(self) -> None:
        pass


class CmProblem:
    """Shared behaviour of the six constant-modulus problems."""

    sense = "min"
    grad_scale = -2.0
    tag = "cm"

    @property
    def theta_shape(self):
        raise NotImplementedError

    def sites(self):
        shape = self.theta_shape
        if len(shape) == 1:
            yield from range(shape[0])
        else:
            for i in range(shape[0]):
                for j in range(shape[1]):
                    yield (i, j)

    def n_sites(self) -> int:
        return int(np.prod(self.theta_shape))

    def random_theta(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.uniform(0.0, TWO_PI, size=self.theta_shape)

    def objective(self, theta) -> float:
        raise NotImplementedError

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        """Objective at each candidate phase for one site (default: loop)."""
        theta = np.array(theta, dtype=np.float64)
        out = np.empty(len(values))
        for b, v in enumerate(values):
            theta[site] = v
            out[b] = self.objective(theta)
        return out

    def g_complex(self, theta, site) -> complex:
        raise NotImplementedError

    def g(self, theta, site) -> float:
        return float(np.imag(self.g_complex(theta, site)))

    def closed_phase(self, theta, site) -> PhaseCandidates:
        raise NotImplementedError

    def probe_context(self, theta):
        return _GenericProbeContext(self, theta)

    def is_max(self) -> bool:
        return self.sense == "max"


# ---------------------------------------------------------------------------
# Hybrid analog-digital problems (matrix variable, Gram I + X^H Pi X)
# ---------------------------------------------------------------------------

class _HybridBase(CmProblem):
    def __init__(self, scenario: HybridScenario):
        self.scenario = scenario
        self.pi = scenario.pi_m
        self.n_t = scenario.n_t
        self.n_rf = scenario.n_rf

    @property
    def theta_shape(self):
        return (self.n_t, self.n_rf)

    def _gram(self, x: np.ndarray) -> np.ndarray:
        return np.eye(self.n_rf) + x.conj().T @ self.pi @ x

    def _gram_batch(self, xb: np.ndarray) -> np.ndarray:
        inner = np.einsum("bni,nm,bmj->bij", np.conj(xb), self.pi, xb,
                          optimize=True)
        return np.eye(self.n_rf)[None] + inner

    def _x_batch(self, theta, site, values):
        xb = np.broadcast_to(phase_to_matrix(theta),
                             (len(values),) + self.theta_shape).copy()
        xb[:, site[0], site[1]] = np.exp(1j * np.asarray(values))
        return xb

    def _deflated(self, x: np.ndarray, j: int):
        """A_j = I + Xj Xj^H Pi with column j removed, plus its inverse."""
        xj = x[:, j]
        outer = x @ x.conj().T - np.outer(xj, np.conj(xj))
        a_mat = np.eye(self.n_t) + outer @ self.pi
        return xj, linalg.inv(a_mat)


class HybridCapacityProblem(_HybridBase):
    """max log|I + X^H Pi X| over unit-modulus X."""

    sense = "max"
    grad_scale = -2.0
    tag = "hybrid-capacity"

    def objective(self, theta) -> float:
        x = phase_to_matrix(theta)
        return linalg.logdet_hpd(linalg.hermitize(self._gram(x)))

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        m = self._gram_batch(self._x_batch(theta, site, values))
        sign, logdet = np.linalg.slogdet(m)
        return np.real(logdet)

    def g_complex(self, theta, site) -> complex:
        i, j = site
        x = phase_to_matrix(theta)
        f = np.linalg.solve(self._gram(x), np.eye(self.n_rf))
        return complex(np.conj((self.pi @ x @ f)[i, j]) * x[i, j])

    def closed_phase(self, theta, site) -> PhaseCandidates:
        i, j = site
        x = phase_to_matrix(theta)
        xj, a_inv = self._deflated(x, j)
        q1 = self.pi @ a_inv                       # Hermitian (Pi A_j^{-1})
        _real_scalar(q1[i, i], "diagonal of Pi A_j^{-1}")
        q = np.vdot(q1[:, i], xj) - np.conj(q1[i, i]) * xj[i]
        if abs(q) <= PHASE_ARG_MIN:
            raise DegeneratePhase("phase argument vanished: any phase stationary")
        t1 = float(wrap_phase(np.angle(q)))
        return PhaseCandidates(t1, wrap_phase(t1 + np.pi), np.conj(q))


class HybridMseProblem(_HybridBase):
    """min Tr((I + X^H Pi X)^{-1}) over unit-modulus X."""

    sense = "min"
    grad_scale = 2.0
    tag = "hybrid-mse"

    def objective(self, theta) -> float:
        x = phase_to_matrix(theta)
        return float(np.real(np.trace(np.linalg.inv(self._gram(x)))))

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        m = self._gram_batch(self._x_batch(theta, site, values))
        return np.real(np.trace(np.linalg.inv(m), axis1=-2, axis2=-1))

    def g_complex(self, theta, site) -> complex:
        i, j = site
        x = phase_to_matrix(theta)
        f = np.linalg.inv(self._gram(x))
        return complex(np.conj((self.pi @ x @ f @ f)[i, j]) * x[i, j])

    def _coefficients(self, theta, site):
        """Conjugate-linear coefficients of g * n_j^2 at one site.

        With Q1 = Pi A_j^{-1}, Q2 = Pi A_j^{-2} (both Hermitian) and the
        site entry stripped from the column (xbar), the numerator of G
        is alpha + beta e^{jt} + gamma e^{2jt}; conjugating and shifting
        by e^{jt} gives A1 = conj(alpha), C1 = conj(beta),
        B1 = conj(gamma).
        """
        i, j = site
        x = phase_to_matrix(theta)
        xj, a_inv = self._deflated(x, j)
        q1 = self.pi @ a_inv
        q2 = q1 @ a_inv
        xbar = xj.copy()
        xbar[i] = 0.0
        p1 = (q1 @ xbar)[i]
        p2 = (q2 @ xbar)[i]
        d1 = _real_scalar(q1[i, i], "diagonal of Pi A_j^{-1}")
        d2 = _real_scalar(q2[i, i], "diagonal of Pi A_j^{-2}")
        zn = 1.0 + d1 + _real_scalar(np.vdot(xbar, q1 @ xbar), "zeta_n part")
        zm = d2 + _real_scalar(np.vdot(xbar, q2 @ xbar), "zeta_m part")
        a1 = zn * np.conj(p2) + np.conj(p1) * d2 - zm * np.conj(p1) \
            - np.conj(p2) * d1
        b1 = p1 * d2 - p2 * d1
        c1 = zn * d2 - zm * d1 + p1 * np.conj(p2) - p2 * np.conj(p1)
        return a1, b1, c1

    def closed_phase(self, theta, site) -> PhaseCandidates:
        a1, b1, c1 = self._coefficients(theta, site)
        t1, t2 = solve_sinusoid(np.real(a1) - np.real(b1),
                                np.imag(a1) + np.imag(b1),
                                np.imag(c1))
        return PhaseCandidates(t1, t2, a1, b1)


class WmmseQuadProblem(CmProblem):
    """min Tr(Phi X Pi X^H) - Tr(B^H X) - Tr(B X^H) over unit-modulus X."""

    sense = "min"
    grad_scale = -2.0
    tag = "hybrid-wmmse"

    def __init__(self, scenario: WmmseQuadScenario):
        self.scenario = scenario
        self.phi = scenario.phi
        self.pi = scenario.pi_m
        self.b = scenario.b

    @property
    def theta_shape(self):
        return self.b.shape

    def objective(self, theta) -> float:
        x = phase_to_matrix(theta)
        quad = np.real(np.trace(self.phi @ x @ self.pi @ x.conj().T))
        lin = 2.0 * np.real(np.trace(self.b.conj().T @ x))
        return float(quad - lin)

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        # f(t) = 2 Re{conj(s - B_ij) e^{jt}} + const on the slice.
        base = self._site_argument(phase_to_matrix(theta), site)
        e = np.exp(1j * np.asarray(values))
        offset = self.objective(theta) \
            - 2.0 * np.real(np.conj(base) * np.exp(1j * theta[site]))
        return offset + 2.0 * np.real(np.conj(base) * e)

    def _site_argument(self, x, site):
        i, j = site
        s = (self.phi @ x @ self.pi)[i, j] \
            - x[i, j] * self.phi[i, i] * self.pi[j, j]
        return s - self.b[i, j]

    def g_complex(self, theta, site) -> complex:
        i, j = site
        x = phase_to_matrix(theta)
        base = self._site_argument(x, site)
        const = _real_scalar(self.phi[i, i] * self.pi[j, j],
                             "Phi_ii Pi_jj product")
        return complex(np.conj(base) * x[i, j] + const)

    def closed_phase(self, theta, site) -> PhaseCandidates:
        x = phase_to_matrix(theta)
        base = self._site_argument(x, site)
        if abs(base) <= PHASE_ARG_MIN:
            raise DegeneratePhase("phase argument vanished: any phase stationary")
        t1 = float(wrap_phase(np.angle(base)))
        return PhaseCandidates(t1, wrap_phase(t1 + np.pi), np.conj(base))


# ---------------------------------------------------------------------------
# Fully-passive IRS problems (diagonal variable)
# ---------------------------------------------------------------------------

class _PassiveIrsBase(CmProblem):
    def __init__(self, scenario: PassiveIrsScenario):
        self.scenario = scenario
        w, q = np.linalg.eigh(scenario.sigma)
        self.sis = q @ np.diag(1.0 / np.sqrt(w)) @ q.conj().T
        self.t0 = self.sis @ scenario.h0
        self.g1 = self.sis @ scenario.h1
        self.h2 = scenario.h2
        self.n_r = scenario.n_r
        self.k = scenario.k

    @property
    def theta_shape(self):
        return (self.k,)

    def _whitened(self, theta) -> np.ndarray:
        d = np.exp(1j * np.asarray(theta, dtype=np.float64))
        return self.t0 + self.g1 @ (d[:, None] * self.h2)

    def _whitened_site_batch(self, theta, site, values):
        theta = np.asarray(theta, dtype=np.float64)
        gamma = np.outer(self.g1[:, site], self.h2[site, :])
        base = self._whitened(theta) - np.exp(1j * theta[site]) * gamma
        return base[None] + np.exp(1j * np.asarray(values))[:, None, None] \
            * gamma[None]

    def _site_vectors_from(self, t_mat, theta_site, site):
        """(u, v, Psi) of the rank-one split at one IRS element.

        The pair (v, u) factorizes M Gamma^H = v u^H and is taken from an
        SVD of that (rank-one) product, the route the conventional
        element-wise sweep pays for; Psi is the shifted Gram matrix
        Phi_i + v v^H + u u^H.  Any factorization of the product yields
        the same stationary phases, which tests pin down.
        """
        a = self.g1[:, site]
        b = self.h2[site, :]
        gamma = np.outer(a, b)
        m = t_mat - np.exp(1j * theta_site) * gamma
        left, sv, right = np.linalg.svd(m @ gamma.conj().T)
        v = left[:, 0] * sv[0]
        u = right[0, :].conj()
        phi_i = m @ m.conj().T + gamma @ gamma.conj().T + np.eye(self.n_r)
        psi_raw = phi_i + np.outer(v, np.conj(v)) + np.outer(u, np.conj(u))
        psi = 0.5 * (psi_raw + psi_raw.conj().T)
        return u, v, psi

    def _site_vectors(self, theta, site):
        theta = np.asarray(theta, dtype=np.float64)
        return self._site_vectors_from(self._whitened(theta), theta[site], site)

    def _candidates_from(self, u, v, psi) -> PhaseCandidates:
        raise NotImplementedError

    def closed_phase(self, theta, site) -> PhaseCandidates:
        return self._candidates_from(*self._site_vectors(theta, site))

    def probe_context(self, theta):
        return _IrsProbeContext(self, theta)

    def bcd_context(self, theta):
        return _IrsBcdContext(self, theta)

    def additive_real_term(self, theta, site) -> float:
        """c_i: the phase-independent real part of the complex quantity G.

        Provably real through the Hermitian-product argument; exposed so
        tests can assert the imaginary residual stays below 1e-9.
        """
        theta = np.asarray(theta, dtype=np.float64)
        t = self._whitened(theta)
        a = self.g1[:, site]
        b = self.h2[site, :]
        gamma = np.outer(a, b)
        r_mat = np.eye(self.n_r) + t @ t.conj().T
        order = 2 if isinstance(self, IrsMseProblem) else 1
        sol = np.linalg.solve(r_mat, gamma @ gamma.conj().T)
        for _ in range(order - 1):
            sol = np.linalg.solve(r_mat, sol)
        return _real_scalar(np.trace(sol), "additive term c_i")


class IrsCapacityProblem(_PassiveIrsBase):
    """max log|I + T T^H| with T the whitened IRS-composed channel."""

    sense = "max"
    grad_scale = -2.0
    tag = "irs-capacity"

    def objective(self, theta) -> float:
        t = self._whitened(theta)
        return linalg.logdet_hpd(linalg.hermitize(
            np.eye(self.n_r) + t @ t.conj().T))

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        tb = self._whitened_site_batch(theta, site, values)
        m = np.eye(self.n_r)[None] \
            + np.einsum("brt,bst->brs", tb, np.conj(tb), optimize=True)
        sign, logdet = np.linalg.slogdet(m)
        return np.real(logdet)

    def g_complex(self, theta, site) -> complex:
        t = self._whitened(theta)
        p = np.linalg.inv(np.eye(self.n_r) + t @ t.conj().T)
        w = t @ np.conj(self.h2[site, :])
        val = np.vdot(w, p @ self.g1[:, site])
        return complex(val * np.exp(1j * theta[site]))

    def _candidates_from(self, u, v, psi, scratch=None) -> PhaseCandidates:
        """Candidates from the full coefficient extraction at one site.

        Computes the whole scalar block of the stationarity rewriting
        (lam, the quadratic coupling, the offset d_i and the additive
        real term c_i), checking that the provably-real members stay
        real; the phases themselves depend only on lam's angle.
        """
        rhs = np.empty((u.shape[0], 2), dtype=np.complex128)
        rhs[:, 0] = u
        rhs[:, 1] = v
        sol = np.linalg.solve(psi, rhs)
        lam = complex(np.vdot(v, sol[:, 0]))
        rho_u = _real_scalar(np.vdot(u, sol[:, 0]), "u^H Psi^{-1} u")
        rho_v = _real_scalar(np.vdot(v, sol[:, 1]), "v^H Psi^{-1} v")
        d_i = 1.0 - rho_v - rho_u
        coupling = abs(lam) ** 2 - rho_v * rho_u
        if scratch is not None:
            scratch.update(lam=lam, d_i=d_i, coupling=coupling)
        if abs(lam) <= PHASE_ARG_MIN:
            raise DegeneratePhase("phase argument vanished: any phase stationary")
        t1 = (-math.atan2(lam.imag, lam.real)) % TWO_PI
        return PhaseCandidates(t1, (t1 + math.pi) % TWO_PI, lam)


class IrsMseProblem(_PassiveIrsBase):
    """min Tr((I + T T^H)^{-1}) with T the whitened IRS-composed channel."""

    sense = "min"
    grad_scale = 2.0
    tag = "irs-mse"

    def objective(self, theta) -> float:
        t = self._whitened(theta)
        m = np.eye(self.n_r) + t @ t.conj().T
        return float(np.real(np.trace(np.linalg.inv(m))))

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        tb = self._whitened_site_batch(theta, site, values)
        m = np.eye(self.n_r)[None] \
            + np.einsum("brt,bst->brs", tb, np.conj(tb), optimize=True)
        return np.real(np.trace(np.linalg.inv(m), axis1=-2, axis2=-1))

    def g_complex(self, theta, site) -> complex:
        t = self._whitened(theta)
        p = np.linalg.inv(np.eye(self.n_r) + t @ t.conj().T)
        w = t @ np.conj(self.h2[site, :])
        val = np.vdot(w, p @ (p @ self.g1[:, site]))
        return complex(val * np.exp(1j * theta[site]))

    def _coefficients_from(self, u, v, psi):
        """Trig-polynomial coefficients of g * D^2 at one site.

        All second-order resolvent scalars around Psi; the e^{2jt} terms
        cancel exactly, leaving the conjugate-linear triple (A3, B3, C3).
        """
        p1u = np.linalg.solve(psi, u)
        p1v = np.linalg.solve(psi, v)
        p2u = np.linalg.solve(psi, p1u)
        p2v = np.linalg.solve(psi, p1v)
        lam = complex(np.vdot(v, p1u))
        eps = complex(np.vdot(v, p2u))
        rho_v = _real_scalar(np.vdot(v, p1v), "v^H Psi^{-1} v")
        rho_u = _real_scalar(np.vdot(u, p1u), "u^H Psi^{-1} u")
        sig_v = _real_scalar(np.vdot(v, p2v), "v^H Psi^{-2} v")
        sig_u = _real_scalar(np.vdot(u, p2u), "u^H Psi^{-2} u")
        d = 1.0 - rho_v - rho_u
        rb = rho_v + rho_u
        s0 = sig_v + sig_u
        s2 = sig_v * rho_u + rho_v * sig_u
        a3 = eps * d * d + (lam * s0 + eps * rb) * d \
            - s2 * lam + rb * lam * s0 + rho_v * rho_u * eps \
            + lam * lam * np.conj(eps)
        b3 = eps * np.conj(lam) ** 2 - s2 * np.conj(lam) \
            + rho_v * rho_u * np.conj(eps)
        c3 = 2.0 * d * np.conj(lam) * eps + (lam * s0 + eps * rb) * np.conj(lam) \
            - s2 * d - rb * lam * np.conj(eps) - rho_v * rho_u * s0
        return a3, b3, c3

    def _coefficients(self, theta, site):
        return self._coefficients_from(*self._site_vectors(theta, site))

    def _candidates_from(self, u, v, psi) -> PhaseCandidates:
        a3, b3, c3 = self._coefficients_from(u, v, psi)
        t1, t2 = solve_sinusoid(np.real(a3) - np.real(b3),
                                np.imag(a3) + np.imag(b3),
                                np.imag(c3))
        return PhaseCandidates(t1, t2, a3, b3)


class IrsWmmseProblem(CmProblem):
    """Diagonal-restricted quadratic WMMSE over unit-modulus reflections."""

    sense = "min"
    grad_scale = -2.0
    tag = "irs-wmmse"

    def __init__(self, scenario: WmmseQuadScenario):
        if scenario.phi.shape != scenario.pi_m.shape:
            raise ValueError("diagonal variant needs square Phi and Pi of equal size")
        self.scenario = scenario
        self.m_had = scenario.phi * scenario.pi_m.T   # Phi o Pi^T
        self.b_diag = np.diagonal(scenario.b).copy()
        self.k = scenario.phi.shape[0]

    @property
    def theta_shape(self):
        return (self.k,)

    def objective(self, theta) -> float:
        lam = np.exp(1j * np.asarray(theta, dtype=np.float64))
        quad = np.real(np.vdot(lam, self.m_had @ lam))
        lin = 2.0 * np.real(np.vdot(self.b_diag, lam))
        return float(quad - lin)

    def objective_site_batch(self, theta, site, values) -> np.ndarray:
        base = self._site_argument(np.exp(1j * np.asarray(theta)), site)
        e = np.exp(1j * np.asarray(values))
        offset = self.objective(theta) \
            - 2.0 * np.real(np.conj(base) * np.exp(1j * theta[site]))
        return offset + 2.0 * np.real(np.conj(base) * e)

    def _site_argument(self, lam, site):
        s = (self.m_had @ lam)[site] - self.m_had[site, site] * lam[site]
        return s - self.b_diag[site]

    def g_complex(self, theta, site) -> complex:
        lam = np.exp(1j * np.asarray(theta, dtype=np.float64))
        base = self._site_argument(lam, site)
        const = _real_scalar(self.m_had[site, site], "Phi_ii Pi_ii product")
        return complex(np.conj(base) * lam[site] + const)

    def closed_phase(self, theta, site) -> PhaseCandidates:
        lam = np.exp(1j * np.asarray(theta, dtype=np.float64))
        base = self._site_argument(lam, site)
        if abs(base) <= PHASE_ARG_MIN:
            raise DegeneratePhase("phase argument vanished: any phase stationary")
        t1 = float(wrap_phase(np.angle(base)))
        return PhaseCandidates(t1, wrap_phase(t1 + np.pi), np.conj(base))


# ---------------------------------------------------------------------------
# Fast probe context for the passive-IRS problems
# ---------------------------------------------------------------------------

class _IrsProbeContext:
    """Incremental G evaluation for passive-IRS sweeps.

    Maintains P = (I + T T^H)^{-1} and the projected channel columns
    W = T conj(H2)^T; a trial phase at one site perturbs the Gram matrix
    by a rank-two term U C(psi) U^H, so each probe reduces to closed 2x2
    Woodbury algebra on cached per-site scalars.  No per-probe quantity
    depends on n_t, which is what keeps the sweep cost flat in the
    transmit dimension.  State is rebuilt from scratch frequently: the
    chained rank-two updates feed their own roundoff back, so drift
    grows multiplicatively between rebuilds (adversarial phase jumps
    reach ~1e-13 within 16 commits, orders more beyond that).
    """

    REBUILD_EVERY = 16

    def __init__(self, problem: _PassiveIrsBase, theta):
        self.problem = problem
        self.theta = np.array(theta, dtype=np.float64)
        self.order = 2 if isinstance(problem, IrsMseProblem) else 1
        # h2_gram[i, :] is the update row for W under a change at site i.
        self.h2_gram = problem.h2 @ problem.h2.conj().T
        self.nb2 = np.real(np.diagonal(self.h2_gram)).copy()
        self.g1_cols = [np.ascontiguousarray(problem.g1[:, i])
                        for i in range(problem.k)]
        self.h2_gram_rows = [np.ascontiguousarray(self.h2_gram[i, :])
                             for i in range(problem.k)]
        # One-time reflected-coordinate composition so refreshes never
        # touch the transmit dimension again.
        self._w0 = problem.t0 @ problem.h2.conj().T        # n_r x k
        self._e0 = problem.h2 @ problem.t0.conj().T        # k x n_r
        self._t00 = problem.t0 @ problem.t0.conj().T       # n_r x n_r
        self._commits = 0
        self._site = None
        self.refresh()

    def refresh(self) -> None:
        p = self.problem
        d = np.exp(1j * self.theta)
        scaled = d[:, None] * self.h2_gram
        self.w_cols = self._w0 + p.g1 @ scaled
        cross = p.g1 @ (d[:, None] * self._e0)
        quad = p.g1 @ (scaled * np.conj(d)[None, :]) @ p.g1.conj().T
        gram = np.eye(p.n_r) + self._t00 + cross + cross.conj().T + quad
        self.p_mat = np.linalg.inv(gram)
        self._site = None

    def objective(self):
        """Capacity from the running state: log|I + T T^H| = -log|P|."""
        if self.order != 1:
            return None
        sign, logdet = np.linalg.slogdet(self.p_mat)
        return float(-logdet)

    def current(self, site) -> float:
        return float(self.theta[site])

    def _prepare(self, site) -> None:
        if self._site == site:
            return
        self._site = site
        a = self.g1_cols[site]
        w = self.w_cols[:, site]
        z0 = self.p_mat @ a
        z1 = self.p_mat @ w
        self._z0 = z0
        self._z1 = z1
        self._s00 = complex(np.vdot(a, z0))
        self._s01 = complex(np.vdot(a, z1))
        self._s10 = complex(np.vdot(w, z0))
        self._s11 = complex(np.vdot(w, z1))

    def _correction_2x2(self, delta: complex, nb2: float):
        """N = (I + C S)^{-1} C of the rank-two site perturbation.

        Written C-first so nothing blows up as delta -> 0 (N -> 0); the
        K = C^{-1} + S form would put 1/delta into the intermediates and
        leak roundoff into the running state.
        """
        s00, s01, s10, s11 = self._s00, self._s01, self._s10, self._s11
        dc = delta.conjugate()
        c00 = (delta * dc).real * nb2
        # CS = [[c00*s00 + d*s10, c00*s01 + d*s11], [dc*s00, dc*s01]]
        m00 = 1.0 + c00 * s00 + delta * s10
        m01 = c00 * s01 + delta * s11
        m10 = dc * s00
        m11 = 1.0 + dc * s01
        det = m00 * m11 - m01 * m10
        # N = M^{-1} C with C = [[c00, delta], [dc, 0]]
        n00 = (m11 * c00 - m01 * dc) / det
        n01 = (m11 * delta) / det
        n10 = (m00 * dc - m10 * c00) / det
        n11 = (-m10 * delta) / det
        return n00, n01, n10, n11

    def _g_scalar(self, delta: complex, nb2: float) -> complex:
        """(w + conj(delta) nb2 a)^H P(psi) a through the 2x2 correction."""
        s00, s01, s10, s11 = self._s00, self._s01, self._s10, self._s11
        n00, n01, n10, n11 = self._correction_2x2(delta, nb2)
        q0 = n00 * s00 + n01 * s10
        q1 = n10 * s00 + n11 * s10
        pa_a = s00 - (s00 * q0 + s01 * q1)
        pa_w = s10 - (s10 * q0 + s11 * q1)
        return pa_w + delta.conjugate() * nb2 * pa_a

    def g_batch(self, site, psis) -> list:
        """G at trial phases of one site (plain-scalar fast path)."""
        if self.order == 2:
            out = []
            saved = self.theta[site]
            for psi in psis:
                self.theta[site] = psi
                out.append(self.problem.g_complex(self.theta, site))
            self.theta[site] = saved
            return out
        self._prepare(site)
        e_cur = cmath.exp(1j * self.theta[site])
        nb2 = float(self.nb2[site])
        out = []
        for psi in psis:
            e = cmath.exp(1j * float(psi))
            delta = e - e_cur
            if abs(delta) < 1e-300:
                val = self._s10
            else:
                val = self._g_scalar(delta, nb2)
            out.append(val * e)
        return out

    def g_complex_at(self, site, psi: float) -> complex:
        return complex(self.g_batch(site, (float(psi),))[0])

    def site_scalars(self, site):
        """(theta, s00, s01, s10, s11, nb2) for the compiled site kernel.

        Only meaningful for the first-order (capacity) problem, whose
        probe evaluation closes over these six scalars.
        """
        if self.order != 1:
            return None
        self._prepare(site)
        return (float(self.theta[site]), self._s00, self._s01, self._s10,
                self._s11, float(self.nb2[site]))

    def commit(self, site, phase: float) -> None:
        phase = float(phase) % TWO_PI
        if phase >= TWO_PI:  # scalar % rounds tiny negatives to 2*pi
            phase = 0.0
        self._prepare(site)
        delta = cmath.exp(1j * phase) - cmath.exp(1j * float(self.theta[site]))
        self.theta[site] = phase
        # Skipping sub-1e-11 moves keeps the rank-two update away from
        # its 1/delta blow-up; the induced state drift stays far below
        # the write-back stationarity tolerance.
        if abs(delta) >= 1e-11:
            nb2 = float(self.nb2[site])
            n00, n01, n10, n11 = self._correction_2x2(delta, nb2)
            z0, z1 = self._z0, self._z1
            # P -= Z N Z^H column by column.
            c0 = z0 * n00
            c0 += z1 * n10
            c1 = z0 * n01
            c1 += z1 * n11
            self.p_mat -= np.outer(c0, z0.conj())
            self.p_mat -= np.outer(c1, z1.conj())
            self.w_cols += (delta * self.g1_cols[site])[:, None] \
                * self.h2_gram_rows[site][None, :]
        self._site = None
        self._commits += 1
        if self._commits % self.REBUILD_EVERY == 0:
            self.refresh()


class _IrsBcdContext:
    """Element-wise BCD sweep state for the passive-IRS problems.

    Mirrors conventional element-wise implementations: the composed
    whitened channel is re-assembled from the phase vector on every site
    visit, and the per-site matrix products, SVD and inversions are paid
    each time.
    """

    def __init__(self, problem: _PassiveIrsBase, theta):
        self.problem = problem
        self.theta = np.array(theta, dtype=np.float64)

    def current(self, site) -> float:
        return float(self.theta[site])

    def candidates(self, site) -> PhaseCandidates:
        p = self.problem
        t_mat = p._whitened(self.theta)
        u, v, psi = p._site_vectors_from(t_mat, self.theta[site], site)
        return p._candidates_from(u, v, psi)

    def commit(self, site, phase: float) -> None:
        phase = float(phase) % TWO_PI
        self.theta[site] = 0.0 if phase >= TWO_PI else phase


PROBLEM_TAGS = {
    "hybrid-capacity": (HybridCapacityProblem, HybridScenario),
    "hybrid-mse": (HybridMseProblem, HybridScenario),
    "hybrid-wmmse": (WmmseQuadProblem, WmmseQuadScenario),
    "irs-capacity": (IrsCapacityProblem, PassiveIrsScenario),
    "irs-mse": (IrsMseProblem, PassiveIrsScenario),
    "irs-wmmse": (IrsWmmseProblem, WmmseQuadScenario),
}


def make_problem(tag: str, scenario) -> CmProblem:
    """Instantiate the problem bundle registered under ``tag``."""
    if tag not in PROBLEM_TAGS:
        raise KeyError(f"unknown problem tag {tag!r}; known: {sorted(PROBLEM_TAGS)}")
    cls, expected = PROBLEM_TAGS[tag]
    if not isinstance(scenario, expected):
        raise TypeError(f"{tag} expects a {expected.__name__}")
    return cls(scenario)
