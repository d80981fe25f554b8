"""Dense complex linear-algebra kernel shared by every solver.

All numeric tolerances live here as module constants; solvers never pass
slack into this layer. Problem sizes stay small (dimensions <= 64), so
every operation is backed by a dense LAPACK factorization and O(n^3)
costs are acceptable.

Conventions
-----------
Matrices are plain ``numpy.ndarray`` of dtype complex128.  ``A^H`` is the
conjugate transpose.  "HPD" means Hermitian positive definite.
"""

from __future__ import annotations

import numpy as np

# Fixed numeric contract of this module.
HERMITIAN_RTOL = 1e-10   # ||A - A^H||_F <= tol * max(1, ||A||_F)
PSD_EIG_RTOL = 1e-10     # min eigenvalue >= -tol * max eigenvalue
COND_LIMIT = 1e12        # inversions refuse anything worse than this
SQRT_RTOL = 1e-9         # ||S @ S - P||_F <= tol * ||P||_F for psd_sqrt
SM_DENOM_MIN = 1e-12     # Sherman-Morrison denominator guard


class LinalgError(ValueError):
    """Base class for violated numeric contracts."""


class NotSquareError(LinalgError):
    pass


class NotHermitianError(LinalgError):
    pass


class NotPositiveDefiniteError(LinalgError):
    pass


class IllConditionedError(LinalgError):
    pass


class SingularUpdateError(LinalgError):
    """Rank-one update would make the matrix singular."""


def as_cmatrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array (no copy when possible)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise LinalgError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise LinalgError("matrix contains NaN or Inf entries")
    return m


def check_square(a: np.ndarray) -> np.ndarray:
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotSquareError(f"expected square matrix, got {a.shape}")
    return a


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = check_square(a)
    dev = np.linalg.norm(a - a.conj().T)
    return dev <= rtol * max(1.0, np.linalg.norm(a))


def check_hermitian(a: np.ndarray) -> np.ndarray:
    a = check_square(a)
    if not is_hermitian(a):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return a


def check_psd(a: np.ndarray) -> np.ndarray:
    """Validate Hermitian positive semi-definiteness (within PSD_EIG_RTOL)."""
    a = check_hermitian(a)
    w = np.linalg.eigvalsh(a)
    lam_max = max(w[-1], 0.0)
    if w[0] < -PSD_EIG_RTOL * max(lam_max, 1e-300):
        raise NotPositiveDefiniteError(
            f"matrix has eigenvalue {w[0]:.3e} below the PSD floor"
        )
    return a


def hermitize(a) -> np.ndarray:
    """Return (A + A^H) / 2 for a square matrix A."""
    a = check_square(a)
    return 0.5 * (a + a.conj().T)


def psd_sqrt(p) -> np.ndarray:
    """Hermitian PSD square root via eigen-decomposition.

    Eigenvalues within -PSD_EIG_RTOL * lambda_max of zero are clamped to
    zero; anything more negative raises NotPositiveDefiniteError.
    """
    p = check_hermitian(p)
    w, q = np.linalg.eigh(p)
    lam_max = max(w[-1], 0.0)
    if w[0] < -PSD_EIG_RTOL * max(lam_max, 1e-300):
        raise NotPositiveDefiniteError(
            f"psd_sqrt: eigenvalue {w[0]:.3e} below the PSD floor"
        )
    s = q @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T
    return hermitize(s)


def inv(a) -> np.ndarray:
    """Checked dense inverse; refuses condition numbers beyond COND_LIMIT."""
    a = check_square(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= 0.0 or s[0] / s[-1] >= COND_LIMIT:
        raise IllConditionedError(
            f"condition number {s[0] / max(s[-1], 1e-300):.3e} exceeds limit"
        )
    return np.linalg.inv(a)


def logdet_hpd(a) -> float:
    """log|A| for Hermitian positive definite A, via Cholesky.

    Computed from the Cholesky diagonal for stability; never from raw LU
    pivots of a general factorization.
    """
    a = check_hermitian(a)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("logdet_hpd: matrix is not HPD") from exc
    return float(2.0 * np.sum(np.log(np.real(np.diag(chol)))))


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD with A = U @ diag(s) @ V^H and s sorted descending.

    Returns (U, s, V); note V, not V^H, so that the reconstruction reads
    exactly as written above.
    """
    a = as_cmatrix(a)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return u, s, vh.conj().T


def sherman_morrison_inv(m_inv, u, v) -> np.ndarray:
    """(M + u v^H)^{-1} from M^{-1} by the Sherman-Morrison formula.

    ``u`` and ``v`` are column vectors; the update is refused when the
    denominator 1 + v^H M^{-1} u falls below SM_DENOM_MIN in magnitude.
    """
    m_inv = check_square(m_inv)
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if u.shape[0] != m_inv.shape[0] or v.shape[0] != m_inv.shape[0]:
        raise LinalgError("update vectors do not match the matrix dimension")
    mu = m_inv @ u
    vm = v.conj() @ m_inv
    denom = 1.0 + v.conj() @ mu
    if abs(denom) <= SM_DENOM_MIN:
        raise SingularUpdateError(f"singular rank-one update, denom={denom:.3e}")
    return m_inv - np.outer(mu, vm) / denom
