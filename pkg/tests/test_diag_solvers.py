import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structopt import diag_solvers as ds, linalg
from structopt.scenarios import AmpIrsScenario, BlockDiagScenario, MuSimoScenario


def cn(rng, r, c, scale=1.0):
    return scale * np.sqrt(0.5) * (rng.standard_normal((r, c))
                                   + 1j * rng.standard_normal((r, c)))


# -- water-filling ----------------------------------------------------------

def test_waterfill_symmetric():
    assert np.allclose(ds.waterfill([1.0, 1.0], 2.0), [1.0, 1.0])


def test_waterfill_caps_bind():
    assert np.allclose(ds.waterfill([2.0, 1.0], 100.0, caps=[0.1, 0.1]),
                       [0.1, 0.1])


def test_waterfill_matches_grid_search():
    gains = np.array([3.0, 1.0, 0.5])
    budget = 1.0
    got = ds.waterfill(gains, budget)
    # brute force over the 1e-3 grid on the simplex
    grid = np.arange(0.0, budget + 1e-12, 1e-3)
    best, best_val = None, -np.inf
    for a, b in itertools.product(grid, grid):
        c = budget - a - b
        if c < 0:
            continue
        val = np.sum(np.log1p(gains * np.array([a, b, c])))
        if val > best_val:
            best, best_val = np.array([a, b, c]), val
    assert np.sum(got) == pytest.approx(budget, abs=1e-10)
    assert np.all(np.abs(got - best) <= 2e-3)
    assert np.sum(np.log1p(gains * got)) >= best_val - 1e-9


def test_waterfill_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ds.waterfill([], 1.0)
    with pytest.raises(ValueError):
        ds.waterfill([1.0], -1.0)
    with pytest.raises(ValueError):
        ds.waterfill([0.0], 1.0)


@given(st.integers(0, 500))
@settings(max_examples=30, deadline=None)
def test_waterfill_budget_and_caps_respected(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    gains = rng.uniform(0.1, 5.0, n)
    caps = rng.uniform(0.05, 1.0, n)
    budget = float(rng.uniform(0.1, 3.0))
    a = ds.waterfill(gains, budget, caps)
    assert np.all(a >= -1e-12) and np.all(a <= caps + 1e-12)
    assert np.sum(a) <= min(budget, np.sum(caps)) + 1e-9
    assert np.sum(a) == pytest.approx(min(budget, float(np.sum(caps))),
                                      abs=1e-8)


# -- MU-SIMO ----------------------------------------------------------------

def test_musimo_capacity_single_user_cap_binds():
    h = np.zeros((3, 1), dtype=complex)
    h[0, 0] = 1.0
    s = MuSimoScenario(h=h, sigma=np.eye(3), p_sum=2.0, p_user=[2.0])
    rep = ds.solve_musimo_capacity(s)
    assert rep.solution[0] == pytest.approx(2.0, abs=1e-9)
    assert rep.objective == pytest.approx(np.log(3.0), abs=1e-9)
    assert rep.kkt_residual <= 1e-6
    assert rep.comp_slack <= 1e-6


def test_musimo_capacity_equal_split_by_symmetry():
    h = np.eye(4)[:, :2].astype(complex)
    s = MuSimoScenario(h=h, sigma=np.eye(4), p_sum=1.0, p_user=[10.0, 10.0])
    rep = ds.solve_musimo_capacity(s)
    assert np.allclose(rep.solution, [0.5, 0.5], atol=1e-8)


def test_musimo_capacity_orthogonal_matches_textbook_waterfill():
    # orthogonal columns decouple the fixed point into plain water-filling
    rng = np.random.default_rng(8)
    gains = rng.uniform(0.5, 3.0, 3)
    h = np.diag(np.sqrt(gains)).astype(complex)
    s = MuSimoScenario(h=h, sigma=np.eye(3), p_sum=2.0,
                       p_user=np.full(3, 100.0))
    rep = ds.solve_musimo_capacity(s)
    assert np.allclose(rep.solution, ds.waterfill(gains, 2.0), atol=1e-7)


def test_musimo_mse_power_to_zero_gives_nt():
    rng = np.random.default_rng(1)
    h = cn(rng, 6, 4)
    s = MuSimoScenario(h=h, sigma=0.5 * np.eye(6), p_sum=1e-12,
                       p_user=np.full(4, 1e-12))
    assert ds.solve_musimo_mse(s).objective == pytest.approx(6.0, abs=1e-9)


def test_musimo_mse_scalar_monotone_caps():
    rng = np.random.default_rng(2)
    h = cn(rng, 3, 1)
    s = MuSimoScenario(h=h, sigma=np.eye(3), p_sum=0.7, p_user=[2.0])
    rep = ds.solve_musimo_mse(s)
    assert rep.solution[0] == pytest.approx(0.7, abs=1e-8)


@given(st.integers(0, 300))
@settings(max_examples=10, deadline=None)
def test_musimo_constraints_and_slackness(seed):
    rng = np.random.default_rng(seed)
    h = cn(rng, 5, 3)
    caps = rng.uniform(0.2, 0.6, 3)
    s = MuSimoScenario(h=h, sigma=0.7 * np.eye(5),
                       p_sum=float(rng.uniform(0.3, 1.2)), p_user=caps)
    for solve in (ds.solve_musimo_capacity, ds.solve_musimo_mse):
        rep = solve(s)
        lam = rep.solution
        assert np.all(lam >= -1e-12) and np.all(lam <= caps + 1e-8)
        assert np.sum(lam) <= s.p_sum + 1e-8
        assert rep.comp_slack <= 1e-6
        assert rep.kkt_residual <= 1e-6


# -- amplitude-adjustable IRS / WMMSE ----------------------------------------

@pytest.fixture
def amp_scn():
    rng = np.random.default_rng(5)
    return AmpIrsScenario(h0=cn(rng, 3, 4), h1=cn(rng, 3, 8, 1 / np.sqrt(8)),
                          h2=cn(rng, 8, 4), sigma=0.5 * np.eye(3))


def test_wmmse_g_trivials(amp_scn):
    zero = AmpIrsScenario(h0=np.zeros((3, 4)), h1=np.zeros((3, 8)),
                          h2=np.zeros((8, 4)), sigma=np.eye(3))
    assert np.allclose(ds.wmmse_update_g(zero, np.zeros(8)), 0.0)
    ident = AmpIrsScenario(h0=np.eye(3), h1=np.zeros((3, 8)),
                           h2=np.zeros((8, 3)), sigma=np.eye(3))
    g = ds.wmmse_update_g(ident, np.zeros(8))
    assert np.allclose(g, 0.5 * np.eye(3), atol=1e-12)


def test_wmmse_w_trivials():
    zero = AmpIrsScenario(h0=np.zeros((3, 3)), h1=np.zeros((3, 4)),
                          h2=np.zeros((4, 3)), sigma=np.eye(3))
    d = np.zeros(4)
    g = ds.wmmse_update_g(zero, d)
    assert np.allclose(ds.wmmse_update_w(zero, d, g), np.eye(3))
    ident = AmpIrsScenario(h0=np.eye(3), h1=np.zeros((3, 4)),
                           h2=np.zeros((4, 3)), sigma=np.eye(3))
    g = ds.wmmse_update_g(ident, d)
    assert np.allclose(ds.wmmse_update_w(ident, d, g), 2 * np.eye(3))


def test_wmmse_weight_equals_capacity(amp_scn):
    # log|W| at the MMSE receiver equals the capacity objective
    rng = np.random.default_rng(9)
    d = cn(rng, 1, 8)[0] * 0.4
    g = ds.wmmse_update_g(amp_scn, d)
    w = ds.wmmse_update_w(amp_scn, d, g)
    cap = ds.amp_irs_capacity_objective(amp_scn, d)
    assert linalg.logdet_hpd(w) == pytest.approx(cap, abs=1e-9)


def test_wmmse_lambda_trivials(amp_scn):
    zero_path = AmpIrsScenario(h0=amp_scn.h0, h1=np.zeros((3, 8)),
                               h2=amp_scn.h2, sigma=amp_scn.sigma)
    d0 = np.ones(8)
    g = ds.wmmse_update_g(zero_path, d0)
    w = ds.wmmse_update_w(zero_path, d0, g)
    assert np.allclose(ds.wmmse_update_lambda(zero_path, g, w), 0.0)


def test_wmmse_lambda_satisfies_stationarity(amp_scn):
    rng = np.random.default_rng(3)
    d = cn(rng, 1, 8)[0] * 0.3
    g = ds.wmmse_update_g(amp_scn, d)
    w = ds.wmmse_update_w(amp_scn, d, g)
    d_new = ds.wmmse_update_lambda(amp_scn, g, w)

    def prob5_objective(dv):
        h = amp_scn.effective_channel(dv)
        e = g @ h - np.eye(amp_scn.n_t)
        return float(np.real(np.trace(w @ e @ e.conj().T)))

    # numerical stationarity of the regularized update
    step = 1e-6
    norm2 = float(np.sum(np.abs(d_new) ** 2))
    grad = np.zeros(2 * 8)
    for i in range(8):
        for part, delta in ((0, step), (1, 1j * step)):
            dp, dm = d_new.copy(), d_new.copy()
            dp[i] += delta
            dm[i] -= delta
            grad[i + 8 * part] = (prob5_objective(dp) - prob5_objective(dm)) / (2 * step)
    gc = 0.5 * (grad[:8] + 1j * grad[8:])
    if norm2 < 8.0 - 1e-6:
        assert np.max(np.abs(gc)) <= 1e-6
    else:
        mu = np.real(-(gc / d_new)).mean()
        assert np.max(np.abs(gc + mu * d_new)) <= 1e-6


def test_amp_irs_no_irs_path_closed_form(amp_scn):
    s0 = AmpIrsScenario(h0=amp_scn.h0, h1=np.zeros((3, 8)), h2=amp_scn.h2,
                        sigma=amp_scn.sigma)
    rep = ds.solve_amp_irs_capacity(s0)
    sis = linalg.inv(linalg.psd_sqrt(s0.sigma))
    direct = linalg.logdet_hpd(
        np.eye(3) + sis @ s0.h0 @ s0.h0.conj().T @ sis)
    assert rep.objective == pytest.approx(direct, abs=1e-9)


def test_amp_irs_zero_channel_mse_is_nt():
    s0 = AmpIrsScenario(h0=np.zeros((3, 4)), h1=np.zeros((3, 8)),
                        h2=np.zeros((8, 4)), sigma=np.eye(3))
    assert ds.solve_amp_irs_mse(s0).objective == pytest.approx(4.0, abs=1e-12)


def test_amp_irs_monotone_and_feasible(amp_scn):
    for solve, sense in ((ds.solve_amp_irs_capacity, 1),
                         (ds.solve_amp_irs_mse, -1)):
        rep = solve(amp_scn, max_iter=150)
        traj = rep.trajectory
        for a, b in zip(traj, traj[1:]):
            assert sense * (b - a) >= -1e-9
        assert np.sum(np.abs(rep.solution) ** 2) <= amp_scn.k + 1e-8
        assert not any("monotonicity" in f for f in rep.flags)


def test_amp_irs_single_element_hits_amplitude_bound():
    # one aligned element: the optimal amplitude sits on the constraint
    rng = np.random.default_rng(12)
    h0 = cn(rng, 1, 1, 0.1)
    h1 = cn(rng, 1, 1)
    h2 = cn(rng, 1, 1)
    s = AmpIrsScenario(h0=h0, h1=h1, h2=h2, sigma=np.eye(1))
    rep = ds.solve_amp_irs_capacity(s)
    assert np.abs(rep.solution[0]) == pytest.approx(1.0, abs=1e-6)
    # 1-D scan oracle over the single complex entry
    best = -np.inf
    for r in np.linspace(0, 1, 60):
        for ang in np.linspace(0, 2 * np.pi, 180, endpoint=False):
            d = np.array([r * np.exp(1j * ang)])
            best = max(best, ds.amp_irs_capacity_objective(s, d))
    assert rep.objective >= best - 1e-4


# -- block-diagonal MU-MIMO ---------------------------------------------------

def test_blockdiag_single_user_is_textbook():
    rng = np.random.default_rng(4)
    h = cn(rng, 4, 2)
    scn = BlockDiagScenario(h_users=[h], sigma=np.eye(4), p_user=[2.0])
    rep = ds.solve_blockdiag_capacity(scn)
    _, sv, _ = np.linalg.svd(h)
    p = ds.waterfill(sv ** 2, 2.0)
    assert rep.objective == pytest.approx(float(np.sum(np.log1p(p * sv ** 2))),
                                          abs=1e-10)
    q = rep.solution[0]
    assert np.real(np.trace(q)) <= 2.0 + 1e-10
    assert np.min(np.linalg.eigvalsh(q)) >= -1e-10


def test_blockdiag_orthogonal_users_decouple():
    rng = np.random.default_rng(6)
    h_a = np.zeros((4, 2), dtype=complex)
    h_a[:2, :] = cn(rng, 2, 2)
    h_b = np.zeros((4, 2), dtype=complex)
    h_b[2:, :] = cn(rng, 2, 2)
    joint = ds.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h_a, h_b], sigma=np.eye(4), p_user=[1.0, 2.0]))
    alone = sum(ds.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h], sigma=np.eye(4), p_user=[p])).objective
        for h, p in ((h_a, 1.0), (h_b, 2.0)))
    assert joint.objective == pytest.approx(alone, abs=1e-8)


def test_blockdiag_user_permutation_invariant():
    rng = np.random.default_rng(7)
    h1, h2 = cn(rng, 4, 2), cn(rng, 4, 2)
    a = ds.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h1, h2], sigma=0.8 * np.eye(4), p_user=[1.0, 1.5]))
    b = ds.solve_blockdiag_capacity(BlockDiagScenario(
        h_users=[h2, h1], sigma=0.8 * np.eye(4), p_user=[1.5, 1.0]))
    assert a.objective == pytest.approx(b.objective, abs=1e-8)


def test_wmmse_g_is_mse_stationary_by_fd(amp_scn):
    # the receiver update minimizes the unweighted trace MSE over G
    from structopt.derivatives import fd_gradient

    rng = np.random.default_rng(17)
    d = cn(rng, 1, 8)[0] * 0.5
    g0 = ds.wmmse_update_g(amp_scn, d)
    h = amp_scn.effective_channel(d)
    shape = g0.shape

    def mse_of(flat):
        g = (flat[:g0.size] + 1j * flat[g0.size:]).reshape(shape)
        e = g @ h - np.eye(amp_scn.n_t)
        return float(np.real(np.trace(e @ e.conj().T)
                             + np.trace(g @ amp_scn.sigma @ g.conj().T)))

    at = np.concatenate([g0.real.ravel(), g0.imag.ravel()])
    grad = fd_gradient(mse_of, at)
    assert np.max(np.abs(grad)) <= 1e-6
