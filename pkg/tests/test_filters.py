"""Filter step tests.

Beyond wiring checks, the load-bearing tests here are the brute-force
statistics oracles (exponentially weighted sums recomputed from scratch)
and the residual invariants of the coordinate-descent variant: in both
correlation-update modes the maintained right-hand side must equal
``theta_implied - R w`` with the implied cross-statistics rebuilt
independently from the step outputs.
"""

import math

import numpy as np
import pytest

from asefilt import (
    AseParams,
    DcdParams,
    FilterConfig,
    FilterError,
    FilterState,
    NoStepsError,
    ase_weight,
    correlation_update,
    dcd_ase_step,
    filter_init,
    iwf_ase_step,
    iwf_step,
    rmcc_step,
    update_ratio,
)
from asefilt.signals import regressors


def cfg_for(length=4, lam=0.95, rho=0.1, c=2.0, **kw):
    return FilterConfig(length=length, lam=lam, rho=rho, ase=AseParams(c), **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg_for(length=0)
    with pytest.raises(ValueError):
        cfg_for(lam=1.0)
    with pytest.raises(ValueError):
        cfg_for(lam=0.0)
    with pytest.raises(ValueError):
        cfg_for(rho=0.0)
    with pytest.raises(ValueError):
        cfg_for(vss_guard=0.0)
    with pytest.raises(ValueError):
        cfg_for(delta_schedule="linear")
    with pytest.raises(ValueError):
        cfg_for(dcd_update="sparse")
    with pytest.raises(ValueError):
        FilterConfig(length=3, lam=0.9, rho=0.1, ase="not params")


def test_filter_init_shapes_and_leakage_seed():
    cfg = cfg_for(length=3, rho=0.25)
    st = filter_init(cfg)
    assert np.array_equal(st.w, np.zeros(3))
    assert np.array_equal(st.r_matrix, 0.25 * np.eye(3))
    assert st.delta_prev == pytest.approx(cfg.lam * 0.25)
    st2 = filter_init(cfg_for(length=3, rho=0.25, delta_schedule="constant"))
    assert st2.delta_prev == 0.25


def test_correlation_update_hand_values():
    cfg = cfg_for(length=1, lam=0.9, rho=0.5)
    st = filter_init(cfg)
    correlation_update(st, cfg, np.array([2.0]), 3.0, 1.0)
    assert st.r_matrix[0, 0] == pytest.approx(0.9 * 0.5 + 4.0)
    assert st.theta[0] == pytest.approx(6.0)


def test_correlation_update_brute_force_oracle():
    rng = np.random.default_rng(11)
    cfg = cfg_for(length=3, lam=0.95, rho=0.3)
    st = filter_init(cfg)
    xs = rng.standard_normal((40, 3))
    ds = rng.standard_normal(40)
    phis = rng.random(40)
    for x, d, phi in zip(xs, ds, phis):
        correlation_update(st, cfg, x, d, phi)
    n = 40
    r_ref = 0.3 * np.eye(3) * 0.95**n
    th_ref = np.zeros(3)
    for k in range(n):
        w = 0.95 ** (n - 1 - k) * phis[k]
        r_ref += w * np.outer(xs[k], xs[k])
        th_ref += w * ds[k] * xs[k]
    assert np.allclose(st.r_matrix, r_ref, atol=1e-10)
    assert np.allclose(st.theta, th_ref, atol=1e-10)
    assert np.allclose(st.r_matrix, st.r_matrix.T, atol=0)


def test_correlation_update_rejects_bad_phi():
    cfg = cfg_for(length=2)
    st = filter_init(cfg)
    with pytest.raises(ValueError):
        correlation_update(st, cfg, np.zeros(2), 0.0, -0.5)
    with pytest.raises(ValueError):
        correlation_update(st, cfg, np.zeros(2), 0.0, float("nan"))


def test_step_rejects_bad_samples():
    cfg = cfg_for(length=2)
    st = filter_init(cfg)
    with pytest.raises(ValueError):
        iwf_step(st, cfg, np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        iwf_step(st, cfg, np.array([1.0, np.inf]), 0.0)
    with pytest.raises(ValueError):
        iwf_step(st, cfg, np.zeros(2), float("nan"))


def test_iwf_ase_step_decomposes():
    """A step must equal prior error -> weighted stats -> residual move."""
    rng = np.random.default_rng(3)
    cfg = cfg_for(length=4, lam=0.9, rho=0.2, c=2.0)
    st = filter_init(cfg)
    for step in range(25):
        x = rng.standard_normal(4)
        d = rng.standard_normal()
        w_prev = st.w.copy()
        r_prev = st.r_matrix.copy()
        th_prev = st.theta.copy()
        st, out = iwf_ase_step(st, cfg, x, d)
        e = d - float(w_prev @ x)
        assert out.prior_error == pytest.approx(e, abs=1e-12)
        gate = abs(e) <= cfg.ase.cutoff
        assert out.applied is gate
        phi = ase_weight(e, cfg.ase) if gate else 0.0
        r_ref = 0.9 * r_prev + phi * np.outer(x, x)
        th_ref = 0.9 * th_prev + phi * d * x
        assert np.allclose(st.r_matrix, r_ref, atol=1e-12)
        assert np.allclose(st.theta, th_ref, atol=1e-12)
        resid = th_ref - r_ref @ w_prev
        if step < cfg.length - 1:
            w_ref = w_prev  # weights rest while the delay line fills
        else:
            denom = float(resid @ r_ref @ resid) + cfg.vss_guard
            w_ref = w_prev + (float(resid @ resid) / denom) * resid
        assert np.allclose(st.w, w_ref, atol=1e-12)
        assert np.allclose(st.residual, resid, atol=1e-12)


def test_iwf_ase_gate_leaves_decayed_stats():
    cfg = cfg_for(length=2, lam=0.9, c=1.0)
    st = filter_init(cfg)
    st, _ = iwf_ase_step(st, cfg, np.array([1.0, 0.5]), 0.1)
    r_prev = st.r_matrix.copy()
    th_prev = st.theta.copy()
    st, out = iwf_ase_step(st, cfg, np.array([0.3, -0.2]), 1e6)
    assert not out.applied
    assert np.allclose(st.r_matrix, 0.9 * r_prev, atol=0)
    assert np.allclose(st.theta, 0.9 * th_prev, atol=0)


def test_zero_error_step_is_finite():
    cfg = cfg_for(length=2)
    st = filter_init(cfg)
    st, out = iwf_ase_step(st, cfg, np.array([1.0, 2.0]), 0.0)
    assert out.prior_error == 0.0
    assert out.applied
    assert np.all(np.isfinite(st.w))


def test_update_counters_and_ratio():
    cfg = cfg_for(length=2, c=1.0)
    st = filter_init(cfg)
    with pytest.raises(NoStepsError):
        update_ratio(st)
    iwf_ase_step(st, cfg, np.array([1.0, 0.0]), 0.5)
    iwf_ase_step(st, cfg, np.array([1.0, 0.0]), 1e9)
    assert st.updates_total == 2
    assert st.updates_applied == 1
    assert update_ratio(st) == 0.5


def test_snapshot_is_independent_copy():
    cfg = cfg_for(length=2)
    st = filter_init(cfg)
    st, out = iwf_step(st, cfg, np.array([1.0, 1.0]), 2.0)
    frozen = out.weights_snapshot.copy()
    st.w += 100.0
    assert np.array_equal(out.weights_snapshot, frozen)


def test_iwf_matches_wide_cutoff_variant():
    """With a very wide cutoff the robust weighting becomes a (nearly)
    constant scale on the statistics, which the step-size normalization
    cancels, so the weight trajectories coincide."""
    rng = np.random.default_rng(8)
    cfg_plain = cfg_for(length=3, lam=0.95, rho=1e-6)
    # tiny zeta keeps the weighting effectively constant across samples so
    # the scale really does cancel
    cfg_wide = FilterConfig(
        length=3, lam=0.95, rho=1e-6, ase=AseParams(100.0, zeta=1e-12)
    )
    sa = filter_init(cfg_plain)
    sb = filter_init(cfg_wide)
    w_o = np.array([0.5, -1.0, 0.25])
    for _ in range(300):
        x = rng.standard_normal(3)
        d = float(w_o @ x) + 0.01 * rng.standard_normal()
        sa, _ = iwf_step(sa, cfg_plain, x, d)
        sb, _ = iwf_ase_step(sb, cfg_wide, x, d)
    # the unscaled leakage and step-size guard perturb the trajectories at
    # the 1e-3 level, so agreement is to first order, not bitwise
    assert np.allclose(sa.w, sb.w, atol=0.01)
    assert np.allclose(sa.w, w_o, atol=0.05)
    assert np.allclose(sb.w, w_o, atol=0.05)


def test_rmcc_weighting_factor():
    cfg = cfg_for(length=2, lam=0.9)
    st = filter_init(cfg)
    x = np.array([1.0, -1.0])
    d = 2.0
    r_prev = st.r_matrix.copy()
    st, out = rmcc_step(st, cfg, x, d, kernel_sigma=1.5)
    phi = math.exp(-(out.prior_error**2) / (2 * 1.5**2))
    assert np.allclose(st.r_matrix, 0.9 * r_prev + phi * np.outer(x, x), atol=1e-14)
    assert out.applied
    with pytest.raises(ValueError):
        rmcc_step(st, cfg, x, d, kernel_sigma=0.0)


# ---------------------------------------------------------------------
# coordinate-descent variant


def test_dcd_requires_solver_params():
    cfg = cfg_for(length=2)
    st = filter_init(cfg)
    with pytest.raises(FilterError):
        dcd_ase_step(st, cfg, np.zeros(2), 0.0)


def _run_dcd(cfg, horizon, seed=5, impulse_every=7, solve_fn=None):
    """Drive dcd_ase_step on a tapped-delay-line stream; returns state plus
    the per-step (x, d, e, applied) log for rebuilding oracles."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(horizon)
    xs = regressors(u, cfg.length)
    w_o = rng.standard_normal(cfg.length)
    st = filter_init(cfg)
    log = []
    for t in range(horizon):
        d = float(w_o @ xs[t]) + 0.05 * rng.standard_normal()
        if impulse_every and t % impulse_every == impulse_every - 1:
            d += 500.0
        st, out = dcd_ase_step(st, cfg, xs[t], d, solve_fn=solve_fn)
        log.append((xs[t], d, out.prior_error, out.applied))
    return st, log


def test_dcd_shift_matrix_follows_unweighted_recursion():
    """Shift mode: R must satisfy R(n) = lam R(n-1) + x x^T entry-exactly
    (the rank-one term never gated), up to the initial leakage mass."""
    cfg = cfg_for(length=4, lam=0.9, rho=1e-30, c=2.0, dcd=DcdParams(2.0, 8, 8))
    st, log = _run_dcd(cfg, 60)
    r_ref = np.zeros((4, 4))
    for x, _, _, _ in log:
        r_ref = 0.9 * r_ref + np.outer(x, x)
    assert np.allclose(st.r_matrix, r_ref, atol=1e-10)


def test_dcd_shift_residual_invariant():
    """The maintained right-hand side equals theta_implied - R w, where the
    implied cross-statistics use the error-censored desired signal
    d - (1 - phi) e."""
    cfg = cfg_for(length=4, lam=0.9, rho=1e-30, c=2.0, dcd=DcdParams(2.0, 8, 16))
    st, log = _run_dcd(cfg, 80)
    th_ref = np.zeros(4)
    for x, d, e, applied in log:
        phi = ase_weight(e, cfg.ase) if applied else 0.0
        d_cens = d - (1.0 - phi) * e
        th_ref = 0.9 * th_ref + d_cens * x
    expected = th_ref - st.r_matrix @ st.w
    assert np.allclose(st.residual, expected, atol=1e-9)


def test_dcd_dense_residual_invariant():
    """Dense mode: same invariant with the sample-weighted statistics."""
    cfg = cfg_for(
        length=4, lam=0.9, rho=1e-30, c=2.0, dcd=DcdParams(2.0, 8, 16), dcd_update="dense"
    )
    st, log = _run_dcd(cfg, 80)
    r_ref = np.zeros((4, 4))
    th_ref = np.zeros(4)
    for x, d, e, applied in log:
        phi = ase_weight(e, cfg.ase) if applied else 0.0
        r_ref = 0.9 * r_ref + phi * np.outer(x, x)
        th_ref = 0.9 * th_ref + phi * d * x
    assert np.allclose(st.r_matrix, r_ref, atol=1e-10)
    expected = th_ref - r_ref @ st.w
    assert np.allclose(st.residual, expected, atol=1e-9)


def test_dcd_gated_step_passes_decayed_rhs_only():
    captured = []

    def spy_solve(r, z):
        captured.append(z.copy())
        return np.zeros(r.shape[0]), z

    cfg = cfg_for(length=2, lam=0.8, rho=1e-12, c=0.5)
    st = filter_init(cfg)
    st, out1 = dcd_ase_step(st, cfg, np.array([1.0, 0.0]), 0.3, solve_fn=spy_solve)
    prev = st.residual.copy()
    st, out2 = dcd_ase_step(st, cfg, np.array([0.5, 1.0]), 1e7, solve_fn=spy_solve)
    assert out2.applied is False
    assert np.allclose(captured[-1], 0.8 * prev, atol=0)


def test_dcd_fill_in_delay_keeps_weights_zero():
    cfg = cfg_for(length=5, lam=0.9, rho=0.1, c=5.0, dcd=DcdParams(2.0, 8, 8))
    st = filter_init(cfg)
    rng = np.random.default_rng(1)
    w_o = rng.standard_normal(5)
    u = rng.standard_normal(40)
    xs = regressors(u, 5)
    for t in range(40):
        d = float(w_o @ xs[t]) + 0.01 * rng.standard_normal()
        st, _ = dcd_ase_step(st, cfg, xs[t], d)
        if t < 4:
            assert np.array_equal(st.w, np.zeros(5))
    assert np.any(st.w != 0.0)


def test_dcd_exact_solver_zeroes_residual_and_tracks_normal_equations():
    def exact(r, z):
        dw = np.linalg.solve(r, z)
        return dw, z - r @ dw

    cfg = cfg_for(length=3, lam=0.95, rho=1e-12, c=50.0)
    st, log = _run_dcd(cfg, 120, impulse_every=0, solve_fn=exact)
    assert np.allclose(st.residual, np.zeros(3), atol=1e-10)
    th_ref = np.zeros(3)
    for x, d, e, applied in log:
        phi = ase_weight(e, cfg.ase) if applied else 0.0
        th_ref = 0.95 * th_ref + (d - (1.0 - phi) * e) * x
    assert np.allclose(st.w, np.linalg.solve(st.r_matrix, th_ref), atol=1e-8)


def test_dcd_delta_schedules():
    # decaying schedule: delta(n) = lam^(n+1) rho, correction cancels exactly
    cfg = cfg_for(length=2, lam=0.5, rho=0.8, c=1e6, dcd=DcdParams(2.0, 4, 4))
    st = filter_init(cfg)
    for t in range(4):
        dcd_ase_step(st, cfg, np.array([1.0, 0.0]), 0.1)
    assert st.delta_prev == pytest.approx(0.8 * 0.5**5, rel=1e-12)

    # constant: delta stays rho; dense mode adds (1-lam) rho to the
    # diagonal every step, keeping the total leakage at rho
    cfgc = cfg_for(
        length=2,
        lam=0.5,
        rho=0.8,
        c=1e6,
        dcd=DcdParams(2.0, 4, 4),
        delta_schedule="constant",
        dcd_update="dense",
    )
    stc = filter_init(cfgc)
    r_ref = 0.8 * np.eye(2)
    rng = np.random.default_rng(0)
    for t in range(6):
        x = rng.standard_normal(2)
        stc, out = dcd_ase_step(stc, cfgc, x, 0.05)
        phi = ase_weight(out.prior_error, cfgc.ase) if out.applied else 0.0
        r_ref = 0.5 * r_ref + phi * np.outer(x, x) + 0.5 * 0.8 * np.eye(2)
    assert stc.delta_prev == 0.8
    assert np.allclose(stc.r_matrix, r_ref, atol=1e-12)


def test_dcd_constant_schedule_shift_mode_keeps_leading_leakage():
    cfg = cfg_for(
        length=3,
        lam=0.9,
        rho=0.2,
        c=1e6,
        dcd=DcdParams(2.0, 4, 4),
        delta_schedule="constant",
    )
    st, _ = _run_dcd(cfg, 30, impulse_every=0)
    # interior diagonal carries the (undecayed) initial mass forward, and
    # the rebuilt leading entry is topped back up to the same level: the
    # leakage contribution on every diagonal entry stays rho
    u_only = np.zeros_like(st.r_matrix)
    cfg0 = cfg_for(
        length=3, lam=0.9, rho=1e-30, c=1e6, dcd=DcdParams(2.0, 4, 4), delta_schedule="constant"
    )
    st0, _ = _run_dcd(cfg0, 30, impulse_every=0)
    assert np.allclose(st.r_matrix - st0.r_matrix, 0.2 * np.eye(3), atol=1e-6)


def test_dcd_counters_and_output_shape():
    cfg = cfg_for(length=2, lam=0.9, rho=0.1, c=2.0, dcd=DcdParams(2.0, 8, 8))
    st = filter_init(cfg)
    st, out = dcd_ase_step(st, cfg, np.array([0.5, 0.1]), 0.2)
    assert st.updates_total == 1
    assert isinstance(out.weights_snapshot, np.ndarray)
    assert st.step_index == 1
