"""22-state IMU/GNSS/magnetometer extended Kalman filter.

State layout (0-based)::

    0:4    attitude quaternion [w, x, y, z] (body -> NED)
    4:7    position NED (m)
    7:10   velocity NED (m/s)
    10:13  gyro bias as integrated angle per IMU step (rad)
    13:16  accel bias as integrated velocity per IMU step (m/s)
    16:19  geomagnetic field, NED
    19:22  magnetometer bias, body

Prediction is strapdown mechanization driven by the IMU at every sample;
GNSS (N/E position, NED velocity) and magnetometer corrections run at the
1 Hz epochs.  The 160 Hz inner loop lives in a numba kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .errors import NumericalFault, ValidationError
from .quaternion import (
    dcm_vec_jacobian,
    quat_left_matrix,
    quat_multiply,
    quat_right_matrix,
    quat_to_dcm,
)
from .sensors import GRAVITY, GnssMeasurement, ImuSample, SensorParams, SensorStreams
from .trajectory import DT, IMU_RATE_HZ, TrajectorySample

N_STATES = 22
Q_IDX = slice(0, 4)
POS = slice(4, 7)
VEL = slice(7, 10)
DANG_BIAS = slice(10, 13)
DVEL_BIAS = slice(13, 16)
GEO = slice(16, 19)
MAG_BIAS = slice(19, 22)
GNSS_STATES = (4, 5, 7, 8, 9)

QUAT_DRIFT_LIMIT = 1e-3
COND_LIMIT = 1e12

GNSS = "gnss"
MAG = "mag"


def _sym(P):
    return 0.5 * (P + P.T)


def _as_cov(a, n, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = np.diag(a)
    if a.shape != (n, n):
        raise ValidationError(f"{name} must be {n}x{n} or a length-{n} diagonal, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValidationError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(a).min() < -1e-12:
        raise ValidationError(f"{name} must be positive semi-definite")
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NoiseConfig:
    """Constant process/measurement covariances.

    ``Q`` is a rate (per second); prediction adds ``Q * dt`` each step.
    """

    Q: np.ndarray
    R_gnss: np.ndarray
    R_mag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", _as_cov(self.Q, N_STATES, "Q"))
        object.__setattr__(self, "R_gnss", _as_cov(self.R_gnss, 5, "R_gnss"))
        object.__setattr__(self, "R_mag", _as_cov(self.R_mag, 3, "R_mag"))

    @classmethod
    def from_sensors(
        cls,
        params: SensorParams,
        q_scale: float = 1.0,
        r_pos_scale: float = 1.0,
        r_vel_scale: float = 1.0,
        r_mag_scale: float = 1.0,
        cov_scale: float = 1.0,
    ) -> "NoiseConfig":
        """Covariances matched to the sensor model, then scaled.

        White IMU noise of per-sample std ``s`` integrates to a random walk
        with variance rate ``s**2 * DT`` per second. ``cov_scale`` multiplies
        everything; paired with the same factor on P0 it leaves every
        estimate unchanged and divides the chi-square statistic by it.
        """
        if not all(x > 0 for x in (q_scale, r_pos_scale, r_vel_scale, r_mag_scale, cov_scale)):
            raise ValidationError("noise scale factors must be > 0")
        q = np.empty(N_STATES)
        q[Q_IDX] = (0.5 * params.gyro_std) ** 2 * DT + 1e-12
        q[POS] = 1e-6
        q[VEL] = params.accel_std**2 * DT + 1e-8
        q[DANG_BIAS] = 1e-14
        q[DVEL_BIAS] = 1e-12
        q[GEO] = 1e-8
        q[MAG_BIAS] = 1e-8
        q *= q_scale * cov_scale
        pos_var = max(params.gnss_pos_std, 1e-3) ** 2 * r_pos_scale
        vel_var = max(params.gnss_vel_std, 1e-3) ** 2 * r_vel_scale
        r_gnss = np.array([pos_var, pos_var, vel_var, vel_var, vel_var]) * cov_scale
        r_mag = np.full(3, max(params.mag_std, 1e-4) ** 2 * r_mag_scale * cov_scale)
        return cls(Q=q, R_gnss=r_gnss, R_mag=r_mag)


def default_p0(quat_var: float = 1e-5) -> np.ndarray:
    p0 = np.empty(N_STATES)
    p0[Q_IDX] = quat_var
    p0[POS] = 1.0
    p0[VEL] = 0.1
    p0[DANG_BIAS] = (1e-3 * DT) ** 2
    p0[DVEL_BIAS] = (0.05 * DT) ** 2
    p0[GEO] = 1e-3
    p0[MAG_BIAS] = 1e-3
    return p0


_NOISE_KEYS = ("q_scale", "r_pos_scale", "r_vel_scale", "r_mag_scale", "cov_scale")


@dataclass(frozen=True)
class FilterConfig:
    noise: NoiseConfig
    p0: np.ndarray = field(default_factory=default_p0)
    pos_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    geo_field: np.ndarray = field(default_factory=lambda: np.array([0.33, 0.0, 0.44]))
    gravity: float = GRAVITY
    fuse_mag: bool = True
    cond_limit: float = COND_LIMIT
    record_gains: bool = False
    record_covariance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p0", _as_cov(self.p0, N_STATES, "P0"))
        for name in ("pos_offset", "vel_offset", "geo_field"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    @classmethod
    def for_sensors(cls, params: SensorParams, **kw) -> "FilterConfig":
        noise_kw = {k: kw.pop(k) for k in list(kw) if k in _NOISE_KEYS}
        if "p0" not in kw:
            kw["p0"] = default_p0() * noise_kw.get("cov_scale", 1.0)
        return cls(
            noise=NoiseConfig.from_sensors(params, **noise_kw),
            geo_field=params.ref_field.copy(),
            gravity=params.gravity,
            **kw,
        )


@dataclass(frozen=True)
class Innovation:
    r: np.ndarray
    S: np.ndarray
    t: float
    source: str
    rejected: bool = False


@dataclass
class FilterTrace:
    t: np.ndarray
    states: np.ndarray
    innovations: list
    gnss_in: list
    gains: list = field(default_factory=list)
    epoch_cov: list = field(default_factory=list)
    step_cov: Optional[np.ndarray] = None

    @property
    def pos(self):
        return self.states[:, POS]

    @property
    def vel(self):
        return self.states[:, VEL]

    def gnss_innovations(self) -> list:
        return [i for i in self.innovations if i.source == GNSS]


# --------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _mechanize(x, gyro, accel, dt, g):
    """One strapdown step without quaternion renormalization."""
    out = x.copy()
    q = x[0:4]
    dang = gyro * dt - x[10:13]
    dvel = accel * dt - x[13:16]
    dq = np.empty(4)
    dq[0] = 1.0
    dq[1:4] = 0.5 * dang
    out[0:4] = quat_multiply(q, dq)
    R = quat_to_dcm(q)
    out[7:10] = x[7:10] + R @ dvel
    out[9] += g * dt
    out[4:7] = x[4:7] + x[7:10] * dt
    return out


@njit(cache=True)
def _jacobian(x, gyro, accel, dt):
    F = np.eye(22)
    q = x[0:4]
    dang = gyro * dt - x[10:13]
    dvel = accel * dt - x[13:16]
    dq = np.empty(4)
    dq[0] = 1.0
    dq[1:4] = 0.5 * dang
    F[0:4, 0:4] = quat_right_matrix(dq)
    F[0:4, 10:13] = -0.5 * quat_left_matrix(q)[:, 1:4]
    F[7:10, 0:4] = dcm_vec_jacobian(q, dvel)
    F[7:10, 13:16] = -quat_to_dcm(q)
    for i in range(3):
        F[4 + i, 7 + i] = dt
    return F


@njit(cache=True)
def _propagate(x, P, gyro, accel, dt, Qdt, g, states_out, cov_out, record_cov):
    """Run ``gyro.shape[0]`` predictions in place. Returns 0, or an error code.

    1: quaternion norm drift beyond limit; 2: non-finite state.
    """
    n = gyro.shape[0]
    for k in range(n):
        F = _jacobian(x, gyro[k], accel[k], dt)
        xn = _mechanize(x, gyro[k], accel[k], dt, g)
        nq = math.sqrt(xn[0] ** 2 + xn[1] ** 2 + xn[2] ** 2 + xn[3] ** 2)
        if abs(nq - 1.0) > 1e-3:
            return 1
        xn[0:4] /= nq
        for i in range(22):
            if not math.isfinite(xn[i]):
                return 2
        x[:] = xn
        Pn = F @ P @ F.T + Qdt
        P[:, :] = 0.5 * (Pn + Pn.T)
        states_out[k, :] = x
        if record_cov:
            cov_out[k, :, :] = P
    return 0


# --------------------------------------------------------------------------
# public operations


def init(truth0: TrajectorySample, cfg: FilterConfig):
    """Initial state from ground truth plus the configured offsets."""
    att = np.asarray(truth0.attitude, dtype=float)
    if abs(np.linalg.norm(att) - 1.0) > 1e-9:
        raise ValidationError("truth attitude must be a unit quaternion")
    x = np.zeros(N_STATES)
    x[Q_IDX] = att
    x[POS] = np.asarray(truth0.pos, dtype=float) + cfg.pos_offset
    x[VEL] = np.asarray(truth0.vel, dtype=float) + cfg.vel_offset
    x[GEO] = cfg.geo_field
    return x, np.array(cfg.p0)


def mechanize(x, gyro, accel, dt, gravity=GRAVITY) -> np.ndarray:
    """Raw transition function f (no renormalization)."""
    return _mechanize(np.asarray(x, float), np.asarray(gyro, float), np.asarray(accel, float), dt, gravity)


def transition_jacobian(x, gyro, accel, dt) -> np.ndarray:
    return _jacobian(np.asarray(x, float), np.asarray(gyro, float), np.asarray(accel, float), dt)


def _check_imu(gyro, accel):
    if not (np.all(np.isfinite(gyro)) and np.all(np.isfinite(accel))):
        raise NumericalFault("non-finite IMU sample")


def _raise_code(code, t):
    if code == 1:
        raise NumericalFault(f"quaternion norm drift beyond {QUAT_DRIFT_LIMIT} at t={t:.4f}s")
    if code == 2:
        raise NumericalFault(f"non-finite state at t={t:.4f}s")


def predict(x, P, imu: ImuSample, dt: float, noise: NoiseConfig, gravity: float = GRAVITY):
    """Single prediction step; returns new (x, P) without mutating inputs."""
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    gyro = np.asarray(imu.gyro, dtype=float).reshape(1, 3)
    accel = np.asarray(imu.accel, dtype=float).reshape(1, 3)
    _check_imu(gyro, accel)
    x = np.array(x, dtype=float)
    P = np.array(P, dtype=float)
    out = np.empty((1, N_STATES))
    code = _propagate(x, P, gyro, accel, dt, noise.Q * dt, gravity, out, np.empty((1, 1, 1)), False)
    _raise_code(code, imu.t)
    return x, P


def gnss_observation() -> np.ndarray:
    """5x22 selector of (pN, pE, vN, vE, vD)."""
    H = np.zeros((5, N_STATES))
    for row, col in enumerate(GNSS_STATES):
        H[row, col] = 1.0
    return H


def mag_model(x):
    """Predicted body-frame field and its 3x22 Jacobian."""
    q = x[Q_IDX]
    qc = q * np.array([1.0, -1.0, -1.0, -1.0])
    m = x[GEO]
    Rt = quat_to_dcm(qc)
    h = Rt @ m + x[MAG_BIAS]
    H = np.zeros((3, N_STATES))
    H[:, Q_IDX] = dcm_vec_jacobian(qc, m) * np.array([1.0, -1.0, -1.0, -1.0])
    H[:, GEO] = Rt
    H[:, MAG_BIAS] = np.eye(3)
    return h, H


def update(x, P, z, H, R, h=None, t: float = 0.0, source: str = GNSS, cond_limit: float = COND_LIMIT):
    """Kalman correction.

    Returns ``(x, P, innovation, K)``. If S is numerically singular the
    prior passes through unchanged and the innovation is flagged rejected.
    """
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    z = np.asarray(z, dtype=float)
    if H.shape != (z.shape[0], x.shape[0]) or R.shape != (z.shape[0], z.shape[0]):
        raise ValidationError("update(): inconsistent dimensions")
    pred = H @ x if h is None else np.asarray(h, dtype=float)
    r = z - pred
    PHt = P @ H.T
    S = _sym(H @ PHt + R)
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > cond_limit:
        return x.copy(), P.copy(), Innovation(r, S, t, source, rejected=True), None
    K = np.linalg.solve(S, PHt.T).T
    xn = x + K @ r
    if x.shape[0] == N_STATES:
        xn[Q_IDX] /= np.linalg.norm(xn[Q_IDX])
    # Joseph form: same value as (I - KH)P for this K, better conditioned
    A = np.eye(x.shape[0]) - K @ H
    Pn = _sym(A @ P @ A.T + K @ R @ K.T)
    return xn, Pn, Innovation(r, S, t, source), K


def gain_simplified_check(P_prev, Q, R) -> np.ndarray:
    """Gain for an identity observation written as ``I - R (P + Q + R)^-1``."""
    P_prev, Q, R = (np.asarray(a, dtype=float) for a in (P_prev, Q, R))
    n = P_prev.shape[0]
    if not (P_prev.shape == Q.shape == R.shape == (n, n)):
        raise ValidationError("gain_simplified_check(): matrices must be square and same size")
    M = P_prev + Q + R
    if np.linalg.cond(M) > COND_LIMIT:
        raise NumericalFault("P + Q + R is singular")
    return np.eye(n) - R @ np.linalg.inv(M)


AttackHook = Callable[[GnssMeasurement], GnssMeasurement]


def run_filter(streams: SensorStreams, truth0: TrajectorySample, cfg: FilterConfig,
               attack: AttackHook | None = None) -> FilterTrace:
    """Predict on every IMU sample, correct at each 1 Hz epoch.

    At an epoch the attack hook (if any) rewrites the GNSS measurement, then
    GNSS and magnetometer updates run in that order.
    """
    imu = streams.imu
    n = len(imu)
    _check_imu(imu.gyro, imu.accel)
    if len(streams.gnss) != (n - 1) // IMU_RATE_HZ + 1:
        raise ValidationError("GNSS stream is not aligned with the IMU grid")
    x, P = init(truth0, cfg)
    states = np.empty((n, N_STATES))
    step_cov = np.empty((n, N_STATES, N_STATES)) if cfg.record_covariance else np.empty((1, 1, 1))
    Qdt = cfg.noise.Q * DT
    H_gnss = gnss_observation()
    innovations, gnss_in, gains, epoch_cov = [], [], [], []

    def correct(k, x, P):
        e = k // IMU_RATE_HZ
        z = streams.gnss[e]
        if attack is not None:
            z = attack(z)
        gnss_in.append(z)
        x, P, inn, K = update(x, P, z.as_vector(), H_gnss, cfg.noise.R_gnss, t=z.t,
                              source=GNSS, cond_limit=cfg.cond_limit)
        innovations.append(inn)
        if cfg.record_gains:
            gains.append(K)
        if cfg.fuse_mag:
            h, Hm = mag_model(x)
            x, P, inn, _ = update(x, P, streams.mag.field_body[e], Hm, cfg.noise.R_mag, h=h,
                                  t=float(streams.mag.t[e]), source=MAG, cond_limit=cfg.cond_limit)
            innovations.append(inn)
        epoch_cov.append(P.copy())
        return x, P

    x, P = correct(0, x, P)
    states[0] = x
    if cfg.record_covariance:
        step_cov[0] = P
    k = 0
    while k < n - 1:
        k1 = min(k + IMU_RATE_HZ, n - 1)
        code = _propagate(x, P, imu.gyro[k:k1], imu.accel[k:k1], DT, Qdt, cfg.gravity,
                          states[k + 1:k1 + 1],
                          step_cov[k + 1:k1 + 1] if cfg.record_covariance else step_cov,
                          cfg.record_covariance)
        _raise_code(code, imu.t[k1])
        k = k1
        if k % IMU_RATE_HZ == 0:
            x, P = correct(k, x, P)
            states[k] = x
            if cfg.record_covariance:
                step_cov[k] = P
    return FilterTrace(
        t=imu.t.copy(),
        states=states,
        innovations=innovations,
        gnss_in=gnss_in,
        gains=gains,
        epoch_cov=epoch_cov,
        step_cov=step_cov if cfg.record_covariance else None,
    )
