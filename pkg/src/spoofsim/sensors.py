"""Noisy IMU / GNSS / magnetometer synthesis from ground truth.

IMU runs at 160 Hz; GNSS and magnetometer fire on every 160th IMU sample
(integer seconds).  Each sensor draws from its own counter-based Philox
stream keyed by ``(seed, sensor)``, so reseeding one sensor never perturbs
another.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .quaternion import rotate_to_body
from .trajectory import IMU_RATE_HZ, Trajectory

GRAVITY = 9.80665
_STREAM_KEYS = {"imu": 1, "gnss": 2, "mag": 3, "attack": 4}


def stream_rng(seed: int, stream: str, *subkey: int) -> np.random.Generator:
    """Independent generator for one named sub-stream of ``seed``.

    Extra integer ``subkey`` values select a child stream, e.g. one per epoch.
    """
    if stream not in _STREAM_KEYS:
        raise ValidationError(f"unknown random stream {stream!r}")
    key = (_STREAM_KEYS[stream],) + tuple(int(k) for k in subkey)
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SensorParams:
    gyro_std: float = 0.005  # rad/s, per sample
    accel_std: float = 0.05  # m/s^2, per sample
    gyro_bias: np.ndarray = field(default_factory=lambda: _vec3((0, 0, 0)))
    accel_bias: np.ndarray = field(default_factory=lambda: _vec3((0, 0, 0)))
    gnss_pos_std: float = 0.5
    gnss_vel_std: float = 0.1
    mag_std: float = 0.01
    mag_bias: np.ndarray = field(default_factory=lambda: _vec3((0, 0, 0)))
    ref_field: np.ndarray = field(default_factory=lambda: _vec3((0.33, 0.0, 0.44)))
    gravity: float = GRAVITY

    def __post_init__(self):
        for name in ("gyro_bias", "accel_bias", "mag_bias", "ref_field"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        for name in ("gyro_std", "accel_std", "gnss_pos_std", "gnss_vel_std", "mag_std"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be >= 0, got {v}")
        if not self.gravity > 0:
            raise ValidationError("gravity must be > 0")

    @classmethod
    def noiseless(cls, **overrides) -> "SensorParams":
        base = dict(gyro_std=0.0, accel_std=0.0, gnss_pos_std=0.0, gnss_vel_std=0.0, mag_std=0.0)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: np.ndarray
    accel: np.ndarray


@dataclass(frozen=True)
class GnssMeasurement:
    t: float
    pos_ne: np.ndarray
    vel_ned: np.ndarray

    def replace(self, pos_ne=None, vel_ned=None, t=None) -> "GnssMeasurement":
        return GnssMeasurement(
            t=self.t if t is None else t,
            pos_ne=self.pos_ne.copy() if pos_ne is None else np.asarray(pos_ne, dtype=float),
            vel_ned=self.vel_ned.copy() if vel_ned is None else np.asarray(vel_ned, dtype=float),
        )

    def as_vector(self) -> np.ndarray:
        """(pN, pE, vN, vE, vD), the GNSS observation layout."""
        return np.concatenate([self.pos_ne, self.vel_ned])


@dataclass(frozen=True)
class MagMeasurement:
    t: float
    field_body: np.ndarray


@dataclass(frozen=True)
class ImuData:
    t: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i) -> ImuSample:
        return ImuSample(float(self.t[i]), self.gyro[i], self.accel[i])


@dataclass(frozen=True)
class GnssData:
    t: np.ndarray
    pos_ne: np.ndarray
    vel_ned: np.ndarray

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i) -> GnssMeasurement:
        return GnssMeasurement(float(self.t[i]), self.pos_ne[i].copy(), self.vel_ned[i].copy())


@dataclass(frozen=True)
class MagData:
    t: np.ndarray
    field_body: np.ndarray

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i) -> MagMeasurement:
        return MagMeasurement(float(self.t[i]), self.field_body[i].copy())


@dataclass(frozen=True)
class SensorStreams:
    imu: ImuData
    gnss: GnssData
    mag: MagData
    seed: int

    @property
    def epoch_indices(self) -> np.ndarray:
        """IMU sample indices that carry a GNSS/mag epoch."""
        return np.arange(len(self.gnss)) * IMU_RATE_HZ


def epoch_indices(traj: Trajectory) -> np.ndarray:
    return np.arange(0, len(traj), IMU_RATE_HZ)


def synth_imu(traj: Trajectory, params: SensorParams, seed: int) -> ImuData:
    rng = stream_rng(seed, "imu")
    n = len(traj)
    g_ned = np.array([0.0, 0.0, params.gravity])
    specific = rotate_to_body(traj.attitude, traj.accel - g_ned)
    gyro = traj.body_rate + params.gyro_bias + params.gyro_std * rng.standard_normal((n, 3))
    accel = specific + params.accel_bias + params.accel_std * rng.standard_normal((n, 3))
    return ImuData(traj.t.copy(), gyro, accel)


def synth_gnss(traj: Trajectory, params: SensorParams, seed: int) -> GnssData:
    rng = stream_rng(seed, "gnss")
    idx = epoch_indices(traj)
    m = idx.shape[0]
    pos = traj.pos[idx, :2] + params.gnss_pos_std * rng.standard_normal((m, 2))
    vel = traj.vel[idx] + params.gnss_vel_std * rng.standard_normal((m, 3))
    return GnssData(traj.t[idx].copy(), pos, vel)


def synth_mag(traj: Trajectory, params: SensorParams, seed: int) -> MagData:
    rng = stream_rng(seed, "mag")
    idx = epoch_indices(traj)
    m = idx.shape[0]
    body = rotate_to_body(traj.attitude[idx], np.broadcast_to(params.ref_field, (m, 3)))
    field_body = body + params.mag_bias + params.mag_std * rng.standard_normal((m, 3))
    return MagData(traj.t[idx].copy(), field_body)


def synthesize(traj: Trajectory, params: SensorParams, seed: int) -> SensorStreams:
    return SensorStreams(
        imu=synth_imu(traj, params, seed),
        gnss=synth_gnss(traj, params, seed),
        mag=synth_mag(traj, params, seed),
        seed=int(seed),
    )


def write_streams_csv(streams: SensorStreams, path) -> None:
    """Long-format CSV: t, sensor, v0, v1, v2, v3, v4."""
    path = Path(path)
    rows = []
    for i in range(len(streams.imu)):
        t = streams.imu.t[i]
        rows.append((t, "gyro", *streams.imu.gyro[i]))
        rows.append((t, "accel", *streams.imu.accel[i]))
    for i in range(len(streams.gnss)):
        g = streams.gnss[i]
        rows.append((g.t, "gnss", *g.as_vector()))
    for i in range(len(streams.mag)):
        rows.append((streams.mag.t[i], "mag", *streams.mag.field_body[i]))
    rows.sort(key=lambda r: (r[0], r[1]))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "sensor", "v0", "v1", "v2", "v3", "v4"])
        for r in rows:
            vals = [f"{x:.9g}" for x in r[2:]]
            vals += [""] * (5 - len(vals))
            w.writerow([f"{r[0]:.9g}", r[1], *vals])
