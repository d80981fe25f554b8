import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structopt import derivatives as dv, linalg


def cmat(rng, n, m=None, scale=1.0):
    m = n if m is None else m
    return scale * np.sqrt(0.5) * (rng.standard_normal((n, m))
                                   + 1j * rng.standard_normal((n, m)))


def psd(rng, n, scale=1.0):
    a = cmat(rng, n, scale=scale)
    return a @ a.conj().T


# -- diagonal rules ---------------------------------------------------------

def test_diag_trace_linear_trivials():
    g = dv.diag_grad_trace_linear(np.eye(2))
    assert np.allclose(g.wrt_var, [1, 1]) and np.allclose(g.wrt_conj, [1, 1])
    g = dv.diag_grad_trace_linear(np.diag([1j, 2j]))
    assert np.allclose(g.wrt_var, [-1j, -2j])
    assert np.allclose(g.wrt_conj, [1j, 2j])


def test_diag_trace_quadratic_trivials():
    d = np.array([1 + 2j, -0.5j, 3.0])
    g = dv.diag_grad_trace_quadratic(np.eye(3), d)
    assert np.allclose(g.wrt_var, np.conj(d))
    assert np.allclose(g.wrt_conj, d)
    g0 = dv.diag_grad_trace_quadratic(np.eye(3), np.zeros(3))
    assert np.allclose(g0.wrt_var, 0) and np.allclose(g0.wrt_conj, 0)


def test_diag_trace_inverse_trivials():
    rng = np.random.default_rng(0)
    phi = psd(rng, 4)
    g = dv.diag_grad_trace_inverse(phi, np.zeros(4))
    assert np.allclose(g.wrt_var, -np.diagonal(phi))
    assert np.allclose(g.wrt_conj, 0)
    lam = rng.uniform(0.2, 2.0, 4)
    g2 = dv.diag_grad_trace_inverse(np.eye(4), lam)
    assert np.allclose(g2.wrt_var, -1.0 / (1.0 + lam) ** 2)


def test_diag_logdet_trivials():
    rng = np.random.default_rng(1)
    phi = psd(rng, 4)
    g = dv.diag_grad_logdet(phi, np.zeros(4))
    assert np.allclose(g.wrt_var, np.diagonal(phi))
    assert np.allclose(g.wrt_conj, 0)
    lam = rng.uniform(0.2, 2.0, 4)
    g2 = dv.diag_grad_logdet(np.eye(4), lam)
    assert np.allclose(g2.wrt_var, 1.0 / (1.0 + lam))


def test_resolvent_rules_match_symmetrized_form_for_real_lam():
    # (I + Phi Lam)^{-k} Phi agrees with the Phi^{1/2}-sandwiched form on
    # real diagonals, where the commutation argument holds.
    rng = np.random.default_rng(2)
    phi = psd(rng, 5)
    lam = rng.uniform(0.1, 1.5, 5)
    root = linalg.psd_sqrt(phi)
    inner = np.eye(5) + root @ np.diag(lam) @ root
    sym_ld = np.diagonal(root @ np.linalg.inv(inner) @ root)
    sym_ti = -np.diagonal(root @ np.linalg.matrix_power(
        np.linalg.inv(inner), 2) @ root)
    assert np.allclose(dv.diag_grad_logdet(phi, lam).wrt_var, sym_ld,
                       atol=1e-10)
    assert np.allclose(dv.diag_grad_trace_inverse(phi, lam).wrt_var, sym_ti,
                       atol=1e-10)


@given(st.integers(0, 500))
@settings(max_examples=20, deadline=None)
def test_diag_rules_match_fd(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 7))
    d0 = cmat(rng, 1, k)[0]
    at = np.concatenate([d0.real, d0.imag])

    m = cmat(rng, k)
    g = dv.diag_grad_trace_linear(m)

    def f_tl(x):
        d = x[:k] + 1j * x[k:]
        return float(2 * np.real(np.vdot(np.diagonal(m), d)))

    assert dv.fd_check(f_tl, at, g.real_gradient()) <= 1e-6

    w = linalg.hermitize(cmat(rng, k))
    w_diag = np.real(np.diagonal(w))
    g = dv.diag_grad_trace_quadratic(w, d0)

    def f_tq(x):
        d = x[:k] + 1j * x[k:]
        return float(np.sum(np.abs(d) ** 2 * w_diag))

    assert dv.fd_check(f_tq, at, g.real_gradient()) <= 1e-6

    phi = psd(rng, k)
    lam = rng.uniform(0.05, 2.0, k)

    def f_ti(x):
        mm = np.eye(k) + phi * np.asarray(x)[None, :]
        return float(np.real(np.trace(np.linalg.inv(mm))))

    g = dv.diag_grad_trace_inverse(phi, lam)
    assert dv.fd_check(f_ti, lam, np.real(g.wrt_var + g.wrt_conj)) <= 1e-6

    def f_ld(x):
        mm = np.eye(k) + phi * np.asarray(x)[None, :]
        return float(np.linalg.slogdet(mm)[1])

    g = dv.diag_grad_logdet(phi, lam)
    assert dv.fd_check(f_ld, lam, np.real(g.wrt_var + g.wrt_conj)) <= 1e-6


# -- phase rules ------------------------------------------------------------

def test_phase_trace_linear_trivials():
    theta = np.zeros((2, 2))
    b = np.ones((2, 2))
    assert np.allclose(dv.phase_grad_trace_linear(b, theta), 0.0)
    theta2 = np.full((1, 1), np.pi / 2)
    g = dv.phase_grad_trace_linear(np.ones((1, 1)), theta2)
    assert g[0, 0] == pytest.approx(-2.0)


def test_phase_trace_linear_antisymmetry():
    rng = np.random.default_rng(5)
    b = cmat(rng, 3, 4)
    theta = rng.uniform(0, 2 * np.pi, (3, 4))
    assert np.array_equal(dv.phase_grad_trace_linear(b, theta),
                          -dv.phase_grad_trace_linear(-b, theta))


def test_phase_trace_quadratic_identity_weights_vanish():
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, (3, 2))
    g = dv.phase_grad_trace_quadratic(np.eye(3), np.eye(2), theta)
    assert np.max(np.abs(g)) <= 1e-12


def test_one_by_one_rules_vanish():
    theta = np.array([[0.7]])
    assert abs(dv.phase_grad_trace_quadratic(
        np.array([[2.0]]), np.array([[3.0]]), theta)[0, 0]) <= 1e-12
    assert abs(dv.phase_grad_trace_inverse(
        np.array([[1.0]]), np.array([[0.7]]), theta)[0, 0]) <= 1e-12
    assert abs(dv.phase_grad_logdet(
        np.array([[1.0]]), np.array([[2.0]]), theta)[0, 0]) <= 1e-12
    assert abs(dv.phase_grad_trace_linear(
        np.array([[1.0 + 0j]]), theta)[0, 0] + 2 * np.sin(0.7)) <= 1e-12


@given(st.integers(0, 500))
@settings(max_examples=15, deadline=None)
def test_phase_rules_match_fd(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    theta = rng.uniform(0, 2 * np.pi, (n, m))

    b = cmat(rng, n, m)

    def f_tl(x):
        xm = np.exp(1j * x.reshape(n, m))
        return float(2 * np.real(np.trace(b.conj().T @ xm)))

    assert dv.fd_check(f_tl, theta.ravel(),
                       dv.phase_grad_trace_linear(b, theta).ravel()) <= 1e-6

    phi = linalg.hermitize(cmat(rng, n))
    pi_m = linalg.hermitize(cmat(rng, m))

    def f_tq(x):
        xm = np.exp(1j * x.reshape(n, m))
        return float(np.real(np.trace(xm @ pi_m @ xm.conj().T @ phi)))

    assert dv.fd_check(
        f_tq, theta.ravel(),
        dv.phase_grad_trace_quadratic(phi, pi_m, theta).ravel()) <= 1e-6

    phi_in = psd(rng, m) + 0.4 * np.eye(m)
    pi_in = psd(rng, n)

    def f_ti(x):
        xm = np.exp(1j * x.reshape(n, m))
        return float(np.real(np.trace(np.linalg.inv(
            phi_in + xm.conj().T @ pi_in @ xm))))

    assert dv.fd_check(
        f_ti, theta.ravel(),
        dv.phase_grad_trace_inverse(phi_in, pi_in, theta).ravel()) <= 1e-6

    def f_ld(x):
        xm = np.exp(1j * x.reshape(n, m))
        return float(np.linalg.slogdet(phi_in + xm.conj().T @ pi_in @ xm)[1])

    assert dv.fd_check(
        f_ld, theta.ravel(),
        dv.phase_grad_logdet(phi_in, pi_in, theta).ravel()) <= 1e-6


@given(st.integers(0, 500))
@settings(max_examples=15, deadline=None)
def test_phase_rules_periodic(seed):
    rng = np.random.default_rng(seed)
    b = cmat(rng, 2, 3)
    theta = rng.uniform(0, 2 * np.pi, (2, 3))
    g0 = dv.phase_grad_trace_linear(b, theta)
    g1 = dv.phase_grad_trace_linear(b, theta + 2 * np.pi)
    assert np.allclose(g0, g1, atol=1e-12)


# -- fd oracle itself -------------------------------------------------------

def test_fd_check_on_square():
    err = dv.fd_check(lambda x: float(x[0] ** 2), np.array([3.0]),
                      np.array([6.0]))
    assert err <= 1e-10


def test_fd_check_on_constant():
    err = dv.fd_check(lambda x: 5.0, np.array([1.0, 2.0]), np.zeros(2))
    assert err == 0.0


def test_fd_check_rejects_nonfinite():
    with pytest.raises(ValueError):
        dv.fd_check(lambda x: float("nan"), np.array([0.0]), np.zeros(1))


def test_wrap_phase():
    assert dv.wrap_phase(np.array([2 * np.pi + 0.25]))[0] == pytest.approx(0.25)
    assert dv.wrap_phase(np.array([-0.25]))[0] == pytest.approx(2 * np.pi - 0.25)
