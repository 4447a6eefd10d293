import dataclasses

import numpy as np
import pytest

from spoofsim import ekf
from spoofsim import harness as h
from spoofsim import sensors as se
from spoofsim import trajectory as tr
from spoofsim.errors import NumericalFault, ValidationError
from spoofsim.experiments import numeric_jacobian
from spoofsim.sensors import GRAVITY, ImuSample

DT = tr.DT
G_IDX = list(ekf.GNSS_STATES)


def _tuned(params=None, **kw):
    cfg = h.FilterSettings().filter_config(params or se.SensorParams())
    return dataclasses.replace(cfg, **kw) if kw else cfg


def _random_state(rng):
    x = np.zeros(ekf.N_STATES)
    q = rng.normal(size=4)
    x[ekf.Q_IDX] = q / np.linalg.norm(q)
    x[4:10] = rng.normal(0, 10, 6)
    x[10:16] = rng.normal(0, 1e-3, 6)
    x[16:22] = rng.normal(0, 0.5, 6)
    return x


def _psd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + 1e-3 * np.eye(n)


# init


def test_init_zero_perturbation_is_truth(straight20):
    s0 = straight20.sample(0)
    x, P = ekf.init(s0, _tuned())
    np.testing.assert_array_equal(x[ekf.Q_IDX], s0.attitude)
    np.testing.assert_array_equal(x[ekf.POS], s0.pos)
    np.testing.assert_array_equal(x[ekf.VEL], s0.vel)
    np.testing.assert_array_equal(x[10:16], 0.0)


def test_init_p0_trace():
    cfg = _tuned(p0=np.full(ekf.N_STATES, 0.1))
    _, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    assert np.trace(P) == pytest.approx(2.2)


def test_init_rejects_non_psd_p0():
    p0 = np.full(ekf.N_STATES, 0.1)
    p0[3] = -1.0
    with pytest.raises(ValidationError):
        _tuned(p0=p0)


def test_perturbed_init_converges_noiseless():
    traj = tr.build_segment(tr.straight(5.0, 20.0, heading=0.0))
    p = se.SensorParams.noiseless()
    cfg = _tuned(p, pos_offset=np.array([1.0, 0.0, 0.0]))
    t = ekf.run_filter(se.synthesize(traj, p, 0), traj.sample(0), cfg)
    err = np.linalg.norm(t.pos[::160, :2] - traj.pos[::160, :2], axis=1)
    assert err[0] < 1.0
    assert err[10] < 0.2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_perturbed_init_offset_effect_decays(seed, straight20):
    p = se.SensorParams()
    s = se.synthesize(straight20, p, seed)
    a = ekf.run_filter(s, straight20.sample(0), _tuned())
    b = ekf.run_filter(s, straight20.sample(0), _tuned(pos_offset=np.array([1.0, 0.0, 0.0])))
    d = np.linalg.norm(b.pos[::160, :2] - a.pos[::160, :2], axis=1)
    assert d[10] < 0.2


# predict


def test_predict_equilibrium():
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    imu = ImuSample(0.0, np.zeros(3), np.array([0.0, 0.0, -GRAVITY]))
    x1, P1 = ekf.predict(x, P, imu, DT, cfg.noise)
    np.testing.assert_allclose(x1, x, atol=1e-15)
    F = ekf.transition_jacobian(x, imu.gyro, imu.accel, DT)
    np.testing.assert_allclose(P1, F @ P @ F.T + cfg.noise.Q * DT, atol=1e-15)
    np.testing.assert_allclose(np.diag(P1) - np.diag(P) >= 0, True)


def test_predict_euler_position_step():
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    x[ekf.VEL] = [2.0, 0.0, 0.0]
    imu = ImuSample(0.0, np.zeros(3), np.array([0.0, 0.0, -GRAVITY]))
    x1, _ = ekf.predict(x, P, imu, DT, cfg.noise)
    np.testing.assert_allclose(x1[ekf.POS] - x[ekf.POS], [0.0125, 0.0, 0.0], atol=1e-15)


def test_predict_uses_previous_velocity():
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    imu = ImuSample(0.0, np.zeros(3), np.array([1.0, 0.0, -GRAVITY]))
    x1, _ = ekf.predict(x, P, imu, DT, cfg.noise)
    assert x1[4] == 0.0
    assert x1[7] == pytest.approx(DT)


def test_jacobian_vs_finite_differences(rng):
    worst = 0.0
    for _ in range(100):
        x = _random_state(rng)
        gyro, accel = rng.normal(0, 1, 3), rng.normal(0, 3, 3) + [0, 0, -9.8]
        F = ekf.transition_jacobian(x, gyro, accel, DT)
        worst = max(worst, np.abs(F - numeric_jacobian(x, gyro, accel, DT)).max())
    assert worst <= 1e-5


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_predict_non_finite_imu(bad):
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    with pytest.raises(NumericalFault):
        ekf.predict(x, P, ImuSample(0.0, np.array([bad, 0, 0]), np.zeros(3)), DT, cfg.noise)


def test_predict_quaternion_drift_fault():
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    # a 1 rad step in one sample pushes the first-order quaternion update far off the unit sphere
    with pytest.raises(NumericalFault, match="quaternion"):
        ekf.predict(x, P, ImuSample(0.0, np.array([160.0, 0, 0]), np.zeros(3)), DT, cfg.noise)


def test_predict_rejects_bad_dt():
    cfg = _tuned()
    x, P = ekf.init(tr.TrajectorySample.at_rest(), cfg)
    with pytest.raises(ValidationError):
        ekf.predict(x, P, ImuSample(0.0, np.zeros(3), np.zeros(3)), 0.0, cfg.noise)


# observation model


def test_gnss_observation_selector(rng):
    H = ekf.gnss_observation()
    assert H.shape == (5, 22)
    np.testing.assert_array_equal(H @ np.ones(22), np.ones(5))
    assert np.count_nonzero(H) == 5 and np.all(H[H != 0] == 1)
    x = rng.normal(size=22)
    np.testing.assert_array_equal(H @ x, x[[4, 5, 7, 8, 9]])


def test_mag_model_jacobian_fd(rng):
    x = _random_state(rng)
    _, H = ekf.mag_model(x)
    for j in range(22):
        e = np.zeros(22)
        e[j] = 1e-6
        fd = (ekf.mag_model(x + e)[0] - ekf.mag_model(x - e)[0]) / 2e-6
        np.testing.assert_allclose(H[:, j], fd, atol=1e-6)


# update


def test_update_zero_residual(rng):
    x = _random_state(rng)
    P = _psd(rng, 22)
    H = ekf.gnss_observation()
    xn, _, inn, _ = ekf.update(x, P, H @ x, H, np.eye(5))
    np.testing.assert_allclose(xn, x, atol=1e-12)
    np.testing.assert_array_equal(inn.r, 0.0)


def test_update_scalar_textbook():
    x, P, inn, K = ekf.update(np.array([3.0]), np.array([[1.0]]), np.array([5.0]), np.array([[1.0]]),
                              np.array([[1.0]]))
    assert K[0, 0] == pytest.approx(0.5)
    assert x[0] == pytest.approx(4.0)
    assert P[0, 0] == pytest.approx(0.5)
    assert inn.r[0] == 2.0 and inn.S[0, 0] == 2.0


def test_update_matches_dense_reference(straight20):
    cfg = _tuned(record_covariance=True)
    t = ekf.run_filter(se.synthesize(straight20, se.SensorParams(), 1), straight20.sample(0), cfg)
    P = t.step_cov[5 * 160 - 1]
    x = t.states[5 * 160 - 1]
    z = t.gnss_in[5].as_vector()
    H, R = ekf.gnss_observation(), cfg.noise.R_gnss
    xn, Pn, _, _ = ekf.update(x, P, z, H, R)
    # textbook dense form
    K = P @ H.T @ np.linalg.inv(H @ P @ H.T + R)
    ref = x + K @ (z - H @ x)
    ref[:4] /= np.linalg.norm(ref[:4])
    assert np.abs(xn - ref).max() <= 1e-10
    np.testing.assert_allclose(Pn, (np.eye(22) - K @ H) @ P, atol=1e-9)


def test_update_singular_s_rejected():
    x = np.zeros(22)
    x[0] = 1.0
    P = np.zeros((22, 22))
    H = ekf.gnss_observation()
    xn, Pn, inn, K = ekf.update(x, P, np.ones(5), H, np.zeros((5, 5)))
    assert inn.rejected and K is None
    np.testing.assert_array_equal(xn, x)
    np.testing.assert_array_equal(inn.r, np.ones(5))


def test_update_dimension_check():
    with pytest.raises(ValidationError):
        ekf.update(np.zeros(22), np.eye(22), np.zeros(5), np.zeros((4, 22)), np.eye(5))


# simplified gain


def test_gain_simplified_examples(rng):
    R = _psd(rng, 5)
    np.testing.assert_allclose(ekf.gain_simplified_check(np.zeros((5, 5)), np.zeros((5, 5)), R), 0.0,
                               atol=1e-12)
    np.testing.assert_allclose(ekf.gain_simplified_check(_psd(rng, 5), _psd(rng, 5), np.zeros((5, 5))),
                               np.eye(5), atol=1e-12)


def test_gain_simplified_matches_full_gain(rng):
    for _ in range(100):
        Pp, Q, R = (_psd(rng, 5) for _ in range(3))
        Pm = Pp + Q
        full = Pm @ np.linalg.inv(Pm + R)
        assert np.abs(ekf.gain_simplified_check(Pp, Q, R) - full).max() <= 1e-10


def test_gain_simplified_singular():
    with pytest.raises(NumericalFault):
        ekf.gain_simplified_check(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))


# full runs


def test_clean_straight_final_error_95th_percentile(straight20):
    errs = []
    cfg = _tuned()
    for seed in range(30):
        t = ekf.run_filter(se.synthesize(straight20, se.SensorParams(), seed), straight20.sample(0), cfg)
        errs.append(np.linalg.norm(t.pos[-1, :2] - straight20.pos[-1, :2]))
    assert np.percentile(errs, 95) < 1.5


def test_identity_hook_is_no_hook(straight20):
    s = se.synthesize(straight20, se.SensorParams(), 4)
    a = ekf.run_filter(s, straight20.sample(0), _tuned())
    b = ekf.run_filter(s, straight20.sample(0), _tuned(), attack=lambda z: z)
    assert a.states.tobytes() == b.states.tobytes()
    assert all(np.array_equal(i.r, j.r) for i, j in zip(a.innovations, b.innovations))


def test_bias_hook_moves_innovation(straight20):
    s = se.synthesize(straight20, se.SensorParams(), 4)

    def hook(z):
        return z.replace(pos_ne=z.pos_ne + [5.0, 0.0]) if z.t == 7.0 else z

    a = ekf.run_filter(s, straight20.sample(0), _tuned()).gnss_innovations()
    b = ekf.run_filter(s, straight20.sample(0), _tuned(), attack=hook).gnss_innovations()
    assert b[7].r[0] - a[7].r[0] == pytest.approx(5.0, abs=1e-9)
    assert b[6].r[0] == a[6].r[0]


def test_trace_shapes_and_order(straight20):
    t = ekf.run_filter(se.synthesize(straight20, se.SensorParams(), 0), straight20.sample(0), _tuned())
    assert t.states.shape == (len(straight20), 22)
    assert len(t.innovations) == 2 * 21
    # GNSS then mag at each epoch
    assert [i.source for i in t.innovations[:4]] == ["gnss", "mag", "gnss", "mag"]


def test_run_invariants_on_u_shape():
    cfg = h.preset("clean_u_shape")
    traj = cfg.trajectory.build()
    fcfg = _tuned(record_covariance=True)
    t = ekf.run_filter(se.synthesize(traj, cfg.sensors, 3), traj.sample(0), fcfg)
    P = t.step_cov
    assert np.abs(P - np.transpose(P, (0, 2, 1))).max() <= 1e-9
    assert min(np.linalg.eigvalsh(p).min() for p in P[::40]) >= -1e-9
    assert np.abs(np.linalg.norm(t.states[:, :4], axis=1) - 1).max() <= 1e-6


def test_misaligned_streams_rejected(straight20):
    s = se.synthesize(straight20, se.SensorParams(), 0)
    short = dataclasses.replace(s, gnss=se.GnssData(s.gnss.t[:-1], s.gnss.pos_ne[:-1], s.gnss.vel_ned[:-1]))
    with pytest.raises(ValidationError):
        ekf.run_filter(short, straight20.sample(0), _tuned())


def _gnss_gain_steps(duration=100.0):
    traj = tr.build_segment(tr.straight(5.0, duration, heading=0.0))
    t = ekf.run_filter(se.synthesize(traj, se.SensorParams(), 0), traj.sample(0), _tuned(record_gains=True))
    Ks = [K[G_IDX] for K in t.gains]
    return np.array([np.linalg.norm(b - a) for a, b in zip(Ks, Ks[1:])])


def test_gnss_gain_settles():
    d = _gnss_gain_steps()
    assert d[60] < d[30] < d[10] < d[0]
    # residual jitter comes from the state-dependent Jacobian
    assert d[80:].mean() < 2e-4


def test_gnss_gain_converges_within_30_epochs():
    d = _gnss_gain_steps(40.0)
    assert d[:30].min() < 1e-4
