import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structopt import linalg


def cmat(rng, n, m=None):
    m = n if m is None else m
    return np.sqrt(0.5) * (rng.standard_normal((n, m))
                           + 1j * rng.standard_normal((n, m)))


def test_hermitize_identity():
    assert np.allclose(linalg.hermitize(np.eye(3)), np.eye(3))


def test_hermitize_forced_example():
    a = np.array([[0, 2j], [0, 0]])
    expected = np.array([[0, 1j], [-1j, 0]])
    assert np.allclose(linalg.hermitize(a), expected)


@given(st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_hermitize_random_is_hermitian(seed):
    rng = np.random.default_rng(seed)
    h = linalg.hermitize(cmat(rng, 4))
    assert np.linalg.norm(h - h.conj().T) == 0.0


def test_hermitize_rejects_nonsquare():
    with pytest.raises(linalg.NotSquareError):
        linalg.hermitize(np.ones((2, 3)))


def test_psd_sqrt_trivials():
    assert np.allclose(linalg.psd_sqrt(np.eye(4)), np.eye(4))
    assert np.allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])),
                       np.diag([2.0, 3.0]))


@given(st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_psd_sqrt_squares_back(seed):
    rng = np.random.default_rng(seed)
    a = cmat(rng, 5)
    p = a @ a.conj().T
    s = linalg.psd_sqrt(p)
    assert np.linalg.norm(s @ s - p) <= 1e-9 * np.linalg.norm(p)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(linalg.NotPositiveDefiniteError):
        linalg.psd_sqrt(np.diag([1.0, -0.5]))


def test_inv_trivials_and_residual():
    assert np.allclose(linalg.inv(np.eye(3)), np.eye(3))
    assert np.allclose(linalg.inv(np.diag([2.0, 4.0])),
                       np.diag([0.5, 0.25]))
    rng = np.random.default_rng(7)
    a = cmat(rng, 5) + 3 * np.eye(5)
    residual = np.linalg.norm(a @ linalg.inv(a) - np.eye(5))
    assert residual <= 1e-8 * 5


def test_inv_rejects_singular():
    with pytest.raises(linalg.IllConditionedError):
        linalg.inv(np.diag([1.0, 0.0]))


def test_logdet_trivials():
    assert linalg.logdet_hpd(np.eye(4)) == pytest.approx(0.0, abs=1e-12)
    assert linalg.logdet_hpd(np.diag([np.e, np.e ** 2])) == pytest.approx(3.0)


def test_logdet_rank_one_lemma():
    rng = np.random.default_rng(3)
    v = cmat(rng, 3, 1)[:, 0]
    v *= np.sqrt(3) / np.linalg.norm(v)
    got = linalg.logdet_hpd(np.eye(3) + np.outer(v, v.conj()))
    assert got == pytest.approx(np.log(4.0), abs=1e-10)


def test_logdet_rejects_non_pd():
    with pytest.raises(linalg.NotPositiveDefiniteError):
        linalg.logdet_hpd(np.diag([1.0, -1.0]))


@given(st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_logdet_inverse_cancels(seed):
    rng = np.random.default_rng(seed)
    a = cmat(rng, 4)
    hpd = a @ a.conj().T + 0.5 * np.eye(4)
    total = linalg.logdet_hpd(hpd) + linalg.logdet_hpd(linalg.inv(hpd))
    assert abs(total) <= 1e-8


def test_svd_trivials():
    _, s, _ = linalg.svd(np.diag([1.0, 3.0]))
    assert np.allclose(s, [3.0, 1.0])
    rng = np.random.default_rng(1)
    u = cmat(rng, 4, 1)[:, 0]
    u /= np.linalg.norm(u)
    v = cmat(rng, 3, 1)[:, 0]
    v /= np.linalg.norm(v)
    _, s, _ = linalg.svd(np.outer(u, v.conj()))
    assert s[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(s[1:] <= 1e-12)


@given(st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_svd_reconstructs(seed):
    rng = np.random.default_rng(seed)
    a = cmat(rng, 4, 3)
    u, s, v = linalg.svd(a)
    assert np.linalg.norm(u @ np.diag(s) @ v.conj().T - a) <= 1e-9
    assert np.all(np.diff(s) <= 1e-12)
    assert np.linalg.norm(u.conj().T @ u - np.eye(3)) <= 1e-9


def test_sherman_morrison_trivials():
    n = 4
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    out = linalg.sherman_morrison_inv(np.eye(n), e1, e1)
    assert np.allclose(out, np.diag([0.5, 1, 1, 1]))
    m_inv = np.diag([2.0, 3.0, 4.0, 5.0]).astype(complex)
    same = linalg.sherman_morrison_inv(m_inv, np.zeros(n), e1)
    assert np.allclose(same, m_inv)


def test_sherman_morrison_matches_direct_inverse():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = cmat(rng, 5) + 4 * np.eye(5)
        u = cmat(rng, 5, 1)[:, 0]
        v = cmat(rng, 5, 1)[:, 0]
        updated = m + np.outer(u, v.conj())
        got = linalg.sherman_morrison_inv(linalg.inv(m), u, v)
        want = np.linalg.inv(updated)
        rel = np.linalg.norm(got - want) / np.linalg.norm(want)
        assert rel <= 1e-9


def test_sherman_morrison_rejects_singular_update():
    e1 = np.array([1.0, 0.0], dtype=complex)
    with pytest.raises(linalg.SingularUpdateError):
        # 1 + v^H M^{-1} u == 0 for this pair
        linalg.sherman_morrison_inv(np.eye(2), -e1, e1)


def test_nan_rejected():
    bad = np.array([[np.nan, 0], [0, 1]])
    with pytest.raises(linalg.LinalgError):
        linalg.as_cmatrix(bad)
