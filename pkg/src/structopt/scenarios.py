"""Scenario containers and the common solver report.

Each scenario is a frozen snapshot of one system model: channels, noise
covariance and power budgets.  Validation happens at construction so the
solvers can assume consistent, positive-definite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from . import linalg


def _check_pd(sigma: np.ndarray, name: str = "sigma") -> np.ndarray:
    sigma = linalg.check_hermitian(sigma)
    w = np.linalg.eigvalsh(sigma)
    if w[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite (min eig {w[0]:.3e})")
    return sigma


@dataclass
class MuSimoScenario:
    """Uplink multi-user SIMO: columns of ``h`` are the per-user channels.

    Budgets are in watts: ``p_sum`` bounds the total transmit power and
    ``p_user[k]`` caps user k's own allocation.
    """

    h: np.ndarray          # N_t x K
    sigma: np.ndarray      # N_t x N_t noise covariance, HPD
    p_sum: float
    p_user: np.ndarray     # length K

    def __post_init__(self):
        self.h = linalg.as_cmatrix(self.h)
        self.sigma = _check_pd(np.asarray(self.sigma, dtype=np.complex128))
        self.p_user = np.asarray(self.p_user, dtype=np.float64).reshape(-1)
        if self.sigma.shape[0] != self.h.shape[0]:
            raise ValueError("sigma dimension does not match the channel")
        if self.p_user.shape[0] != self.h.shape[1]:
            raise ValueError("p_user length does not match the user count")
        if self.p_sum <= 0 or np.any(self.p_user <= 0):
            raise ValueError("power budgets must be positive")

    @property
    def n_t(self) -> int:
        return self.h.shape[0]

    @property
    def k(self) -> int:
        return self.h.shape[1]


@dataclass
class AmpIrsScenario:
    """Amplitude-adjustable IRS link: effective channel H0 + H1 diag(d) H2.

    The reflection vector d (length k) is constrained by sum |d_i|^2 <= k.
    """

    h0: np.ndarray         # N_r x N_t direct channel
    h1: np.ndarray         # N_r x K IRS-to-user
    h2: np.ndarray         # K x N_t BS-to-IRS
    sigma: np.ndarray      # N_r x N_r, HPD
    k: int = 0

    def __post_init__(self):
        self.h0 = linalg.as_cmatrix(self.h0)
        self.h1 = linalg.as_cmatrix(self.h1)
        self.h2 = linalg.as_cmatrix(self.h2)
        self.sigma = _check_pd(np.asarray(self.sigma, dtype=np.complex128))
        if self.k == 0:
            self.k = self.h1.shape[1]
        if self.h1.shape[1] != self.k or self.h2.shape[0] != self.k:
            raise ValueError("IRS element count is inconsistent")
        if self.h0.shape != (self.h1.shape[0], self.h2.shape[1]):
            raise ValueError("direct channel shape is inconsistent")
        if self.sigma.shape[0] != self.h0.shape[0]:
            raise ValueError("sigma dimension does not match the receiver")

    @property
    def n_r(self) -> int:
        return self.h0.shape[0]

    @property
    def n_t(self) -> int:
        return self.h0.shape[1]

    def effective_channel(self, d: np.ndarray) -> np.ndarray:
        return self.h0 + self.h1 @ (np.asarray(d).reshape(-1, 1) * self.h2)


@dataclass
class BlockDiagScenario:
    """Uplink MU-MIMO with per-user covariances Q_k and budgets Tr(Q_k) <= P_k."""

    h_users: list          # each N_t x N_r
    sigma: np.ndarray      # N_t x N_t, HPD
    p_user: np.ndarray

    def __post_init__(self):
        self.h_users = [linalg.as_cmatrix(h) for h in self.h_users]
        self.sigma = _check_pd(np.asarray(self.sigma, dtype=np.complex128))
        self.p_user = np.asarray(self.p_user, dtype=np.float64).reshape(-1)
        n_t = self.h_users[0].shape[0]
        if any(h.shape[0] != n_t for h in self.h_users):
            raise ValueError("all users must share the receive dimension")
        if self.sigma.shape[0] != n_t:
            raise ValueError("sigma dimension does not match the channels")
        if self.p_user.shape[0] != len(self.h_users) or np.any(self.p_user <= 0):
            raise ValueError("one positive budget per user is required")

    @property
    def k(self) -> int:
        return len(self.h_users)


@dataclass
class HybridScenario:
    """Hybrid analog-digital link reduced to the effective SNR matrix.

    ``pi_m`` is gamma^2 H^H Sigma^{-1} H (PSD); the analog beamformer X is
    N_t x n_rf with unit-modulus entries.  ``gamma`` records the digital
    power normalization assumed by the reduction; it is not re-checked.
    """

    pi_m: np.ndarray
    n_rf: int
    gamma: float = 1.0

    def __post_init__(self):
        self.pi_m = linalg.check_psd(np.asarray(self.pi_m, dtype=np.complex128))
        if not (1 <= self.n_rf <= self.pi_m.shape[0]):
            raise ValueError("need 1 <= n_rf <= N_t")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def n_t(self) -> int:
        return self.pi_m.shape[0]


@dataclass
class PassiveIrsScenario:
    """Fully-passive IRS link: H0 + H1 diag(exp(1j theta)) H2, unit moduli."""

    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.h0 = linalg.as_cmatrix(self.h0)
        self.h1 = linalg.as_cmatrix(self.h1)
        self.h2 = linalg.as_cmatrix(self.h2)
        self.sigma = _check_pd(np.asarray(self.sigma, dtype=np.complex128))
        if self.h1.shape[1] != self.h2.shape[0]:
            raise ValueError("IRS element count is inconsistent")
        if self.h0.shape != (self.h1.shape[0], self.h2.shape[1]):
            raise ValueError("direct channel shape is inconsistent")
        if self.sigma.shape[0] != self.h0.shape[0]:
            raise ValueError("sigma dimension does not match the receiver")

    @property
    def k(self) -> int:
        return self.h1.shape[1]

    @property
    def n_r(self) -> int:
        return self.h0.shape[0]

    @property
    def n_t(self) -> int:
        return self.h0.shape[1]


@dataclass
class WmmseQuadScenario:
    """Quadratic WMMSE data: Tr(Phi X Pi X^H) - Tr(B^H X) - Tr(B X^H).

    Covers both the full-matrix variable (analog beamformer, X of shape
    phi-rows x pi-rows) and the diagonal-restricted variant where only
    diag(X) is free and B's diagonal matters.
    """

    phi: np.ndarray
    pi_m: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.phi = linalg.check_psd(np.asarray(self.phi, dtype=np.complex128))
        self.pi_m = linalg.check_psd(np.asarray(self.pi_m, dtype=np.complex128))
        self.b = linalg.as_cmatrix(self.b)
        if self.b.shape != (self.phi.shape[0], self.pi_m.shape[0]):
            raise ValueError("B must be phi-rows x pi-rows")

    @property
    def shape(self) -> tuple[int, int]:
        return self.b.shape


@dataclass
class SolverReport:
    """Uniform result record for every solver and baseline."""

    solver: str
    solution: object
    objective: float
    trajectory: list = field(default_factory=list)
    iterations: int = 0
    seconds: float = 0.0
    converged: bool = True
    kkt_residual: float | None = None
    comp_slack: float | None = None
    flags: list = field(default_factory=list)
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    def flag(self, message: str) -> None:
        self.flags.append(message)
