"""Derivative rules for diagonal and constant-modulus matrix variables.

Two families live here:

* diagonal rules: gradients of the four canonical objectives
  (trace-linear, trace-quadratic, trace-inverse, log-determinant) with
  respect to a complex diagonal variable ``lam`` (stored as a length-k
  vector) and its conjugate;
* phase rules: element-wise derivatives of the same objective families
  with respect to the phase matrix ``theta`` backing a unit-modulus
  variable ``X`` with ``X[i, j] = exp(1j * theta[i, j])``.

``fd_check`` is the independent central-difference oracle every rule is
validated against; it never looks at the analytic formulas.

Wirtinger convention
--------------------
For a scalar function f of the diagonal vector ``lam``::

    df = sum_k  wrt_var[k] * d lam_k  +  wrt_conj[k] * d conj(lam_k)

so for real-valued f (where wrt_conj == conj(wrt_var)):

    df/d Re(lam_k) = 2 * Re(wrt_var[k])
    df/d Im(lam_k) = -2 * Im(wrt_var[k])

The trace-inverse and log-det objectives are holomorphic in ``lam``
(wrt_conj == 0), so the pairing above applies to them only where they
take real values, e.g. at real ``lam``.  The un-symmetrized resolvent
form ``(I + Phi @ Lam)^{-k} @ Phi`` is used for those two rules: the
Phi^(1/2)-sandwiched rewriting agrees with it only when Lam commutes
appropriately (real diagonals in particular), which tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg

FD_STEP = 1e-5  # central-difference step; tuned for O(1)-O(1e2) objectives

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DiagGrad:
    """Gradient pair (d/d lam, d/d conj(lam)) of a diagonal-variable objective."""

    wrt_var: np.ndarray
    wrt_conj: np.ndarray

    def __post_init__(self):
        if self.wrt_var.shape != self.wrt_conj.shape or self.wrt_var.ndim != 1:
            raise ValueError("gradient components must be 1-D and equal length")

    def real_gradient(self) -> np.ndarray:
        """[d/dRe; d/dIm] stacked, valid when the objective is real-valued."""
        g = self.wrt_var + self.wrt_conj
        h = 1j * (self.wrt_var - self.wrt_conj)
        return np.concatenate([np.real(g), np.real(h)])


def wrap_phase(theta: np.ndarray) -> np.ndarray:
    """Wrap phases into [0, 2*pi).

    np.mod rounds tiny negative inputs up to 2*pi itself, which would
    leak just outside the half-open interval; those land on 0 instead.
    """
    out = np.mod(np.asarray(theta, dtype=np.float64), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def phase_to_matrix(theta: np.ndarray) -> np.ndarray:
    """Unit-modulus matrix X with X[i, j] = exp(1j * theta[i, j])."""
    return np.exp(1j * np.asarray(theta, dtype=np.float64))


def _diag_of(m: np.ndarray) -> np.ndarray:
    return np.diagonal(m).copy()


# ---------------------------------------------------------------------------
# Diagonal-variable rules
# ---------------------------------------------------------------------------

def diag_grad_trace_linear(m) -> DiagGrad:
    """Gradient of Tr(Lam^H M) + Tr(Lam M^H):  (Diag{M^H}, Diag{M})."""
    m = linalg.check_square(m)
    return DiagGrad(_diag_of(m.conj().T), _diag_of(m))


def diag_grad_trace_quadratic(w, lam) -> DiagGrad:
    """Gradient of Tr(Lam^H W Lam):  (Diag{Lam^H W}, Diag{W Lam})."""
    w = linalg.check_hermitian(w)
    d = np.asarray(lam, dtype=np.complex128).reshape(-1)
    if d.shape[0] != w.shape[0]:
        raise ValueError("lam length does not match W")
    # Lam is diagonal, so Diag{Lam^H W} = conj(d) * diag(W) etc.
    return DiagGrad(np.conj(d) * _diag_of(w), _diag_of(w) * d)


def _resolvent(phi: np.ndarray, d: np.ndarray) -> np.ndarray:
    """(I + Phi @ Lam)^{-1} with Lam = diag(d)."""
    k = phi.shape[0]
    m = np.eye(k, dtype=np.complex128) + phi * d[np.newaxis, :]
    return linalg.inv(m)


def diag_grad_trace_inverse(phi, lam) -> DiagGrad:
    """Gradient of Tr((I + Phi Lam)^{-1}):  (-Diag{(I + Phi Lam)^{-2} Phi}, 0)."""
    phi = linalg.check_psd(phi)
    d = np.asarray(lam, dtype=np.complex128).reshape(-1)
    if d.shape[0] != phi.shape[0]:
        raise ValueError("lam length does not match Phi")
    r = _resolvent(phi, d)
    return DiagGrad(-_diag_of(r @ r @ phi), np.zeros_like(d))


def diag_grad_logdet(phi, lam) -> DiagGrad:
    """Gradient of log|I + Phi Lam|:  (Diag{(I + Phi Lam)^{-1} Phi}, 0)."""
    phi = linalg.check_psd(phi)
    d = np.asarray(lam, dtype=np.complex128).reshape(-1)
    if d.shape[0] != phi.shape[0]:
        raise ValueError("lam length does not match Phi")
    r = _resolvent(phi, d)
    return DiagGrad(_diag_of(r @ phi), np.zeros_like(d))


# ---------------------------------------------------------------------------
# Element-wise phase rules
# ---------------------------------------------------------------------------

def phase_grad_trace_linear(b, theta) -> np.ndarray:
    """d/d theta of Tr(B^H X) + Tr(B X^H):  -2 Im{conj(B) * X} element-wise."""
    b = np.asarray(b, dtype=np.complex128)
    theta = np.asarray(theta, dtype=np.float64)
    if b.shape != theta.shape:
        raise ValueError(f"shape mismatch: B {b.shape} vs theta {theta.shape}")
    x = phase_to_matrix(theta)
    return -2.0 * np.imag(np.conj(b) * x)


def phase_grad_trace_quadratic(phi, pi_m, theta) -> np.ndarray:
    """d/d theta of Tr(X Pi X^H Phi):  -2 Im{conj(Phi X Pi) * X}."""
    phi = linalg.check_hermitian(phi)
    pi_m = linalg.check_hermitian(pi_m)
    theta = np.asarray(theta, dtype=np.float64)
    if phi.shape[0] != theta.shape[0] or pi_m.shape[0] != theta.shape[1]:
        raise ValueError("Phi/Pi dimensions do not match theta")
    x = phase_to_matrix(theta)
    return -2.0 * np.imag(np.conj(phi @ x @ pi_m) * x)


def _inner_gram(phi: np.ndarray, pi_m: np.ndarray, x: np.ndarray) -> np.ndarray:
    return phi + x.conj().T @ pi_m @ x


def phase_grad_trace_inverse(phi, pi_m, theta) -> np.ndarray:
    """d/d theta of Tr((Phi + X^H Pi X)^{-1}):  +2 Im{conj(Pi X K^{-2}) * X}."""
    phi = linalg.check_hermitian(phi)
    pi_m = linalg.check_hermitian(pi_m)
    theta = np.asarray(theta, dtype=np.float64)
    x = phase_to_matrix(theta)
    k_inv = linalg.inv(_inner_gram(phi, pi_m, x))
    return 2.0 * np.imag(np.conj(pi_m @ x @ k_inv @ k_inv) * x)


def phase_grad_logdet(phi, pi_m, theta) -> np.ndarray:
    """d/d theta of log|Phi + X^H Pi X|:  -2 Im{conj(Pi X K^{-1}) * X}."""
    phi = linalg.check_hermitian(phi)
    pi_m = linalg.check_hermitian(pi_m)
    theta = np.asarray(theta, dtype=np.float64)
    x = phase_to_matrix(theta)
    gram = _inner_gram(phi, pi_m, x)
    # HPD check doubles as the domain check for the log-det.
    linalg.logdet_hpd(linalg.hermitize(gram))
    return -2.0 * np.imag(np.conj(pi_m @ x @ linalg.inv(gram)) * x)


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------

def fd_gradient(f: Callable[[np.ndarray], float], at: np.ndarray,
                step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar f over a flat real vector."""
    at = np.asarray(at, dtype=np.float64).reshape(-1)
    grad = np.empty_like(at)
    for i in range(at.shape[0]):
        hi = at.copy()
        lo = at.copy()
        hi[i] += step
        lo[i] -= step
        f_hi = float(f(hi))
        f_lo = float(f(lo))
        if not (np.isfinite(f_hi) and np.isfinite(f_lo)):
            raise ValueError(f"objective is non-finite near coordinate {i}")
        grad[i] = (f_hi - f_lo) / (2.0 * step)
    return grad


def fd_check(f: Callable[[np.ndarray], float], at: np.ndarray,
             analytic: np.ndarray, step: float = FD_STEP) -> float:
    """Max relative disagreement between f's FD gradient and ``analytic``.

    Returns max_i |fd_i - analytic_i| / max(1, |fd_i|).  Callers assert
    <= 1e-4 in general and <= 1e-6 on well-scaled instances.
    """
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    fd = fd_gradient(f, at, step=step)
    if fd.shape != analytic.shape:
        raise ValueError("analytic gradient has the wrong length")
    denom = np.maximum(1.0, np.abs(fd))
    return float(np.max(np.abs(fd - analytic) / denom))
