"""Analytic ground-truth UAV kinematics.

Trajectories are chained :class:`MotionSegment` pieces sampled on the
fixed 160 Hz IMU grid.  Every quantity (position, velocity, acceleration,
attitude, body rate) is evaluated in closed form, so downstream sensor
synthesis never finite-differences the truth.

Attitude follows the velocity heading with zero roll and pitch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .quaternion import quat_from_yaw, yaw_from_quat

IMU_RATE_HZ = 160
DT = 1.0 / IMU_RATE_HZ
LINEAR_ACCEL_TOL = 1e-6  # m/s^2
_HEADING_TOL = 1e-6  # rad
_POS_TOL = 1e-6  # m


class SegmentKind(str, enum.Enum):
    STRAIGHT_LINE = "straight_line"
    CIRCULAR_ARC = "circular_arc"
    SPIRAL = "spiral"
    HOVER = "hover"


class MotionClass(enum.IntEnum):
    LINEAR = 0
    NONLINEAR = 1


@dataclass(frozen=True)
class MotionSegment:
    """One analytic piece of a mission.

    ``heading`` is the initial course in radians from north; ``None``
    inherits the end heading of the previous segment. ``turn`` is +1 for a
    clockwise (rightward, positive-yaw) turn seen from above and -1 for
    counter-clockwise. ``climb_rate`` is positive upward.
    """

    kind: SegmentKind
    duration: float
    speed: float = 0.0
    heading: float | None = None
    radius: float = 0.0
    climb_rate: float = 0.0
    turn: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", SegmentKind(self.kind))
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"segment duration must be > 0, got {self.duration}")
        if not (math.isfinite(self.speed) and self.speed >= 0):
            raise ValidationError(f"segment speed must be >= 0, got {self.speed}")
        if self.kind in (SegmentKind.CIRCULAR_ARC, SegmentKind.SPIRAL):
            if not (math.isfinite(self.radius) and self.radius > 0):
                raise ValidationError(f"{self.kind.value} radius must be > 0, got {self.radius}")
        if self.turn not in (1, -1):
            raise ValidationError(f"turn must be +1 or -1, got {self.turn}")
        if not math.isfinite(self.climb_rate):
            raise ValidationError("climb_rate must be finite")

    @property
    def turned_angle(self) -> float:
        """Signed heading change over the segment (rad)."""
        if self.kind in (SegmentKind.CIRCULAR_ARC, SegmentKind.SPIRAL):
            return self.turn * self.speed * self.duration / self.radius
        return 0.0

    def evaluate(self, tau, p0, yaw0):
        """Kinematics at segment-local times ``tau`` (array, seconds).

        Returns (pos, vel, accel, yaw, yaw_rate) arrays.
        """
        tau = np.asarray(tau, dtype=float)
        n = tau.shape[0]
        p0 = np.asarray(p0, dtype=float)
        pos = np.empty((n, 3))
        vel = np.zeros((n, 3))
        acc = np.zeros((n, 3))
        v = self.speed
        kind = self.kind
        if kind is SegmentKind.HOVER:
            pos[:] = p0
            yaw = np.full(n, yaw0)
            yaw_rate = np.zeros(n)
        elif kind is SegmentKind.STRAIGHT_LINE:
            c, s = math.cos(yaw0), math.sin(yaw0)
            vel[:, 0] = v * c
            vel[:, 1] = v * s
            vel[:, 2] = -self.climb_rate
            pos[:] = p0 + tau[:, None] * vel
            yaw = np.full(n, yaw0)
            yaw_rate = np.zeros(n)
        else:
            omega = self.turn * v / self.radius
            yaw = yaw0 + omega * tau
            cy, sy = np.cos(yaw), np.sin(yaw)
            rs = self.radius * self.turn
            pos[:, 0] = p0[0] + rs * (sy - math.sin(yaw0))
            pos[:, 1] = p0[1] - rs * (cy - math.cos(yaw0))
            vel[:, 0] = v * cy
            vel[:, 1] = v * sy
            acc[:, 0] = -v * omega * sy
            acc[:, 1] = v * omega * cy
            if kind is SegmentKind.SPIRAL:
                vel[:, 2] = -self.climb_rate
                pos[:, 2] = p0[2] - self.climb_rate * tau
            else:
                pos[:, 2] = p0[2]
            yaw_rate = np.full(n, omega)
        return pos, vel, acc, yaw, yaw_rate


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    pos: np.ndarray
    vel: np.ndarray
    accel: np.ndarray
    attitude: np.ndarray

    @classmethod
    def at_rest(cls, pos=(0.0, 0.0, 0.0), yaw: float = 0.0) -> "TrajectorySample":
        return cls(
            t=0.0,
            pos=np.asarray(pos, dtype=float),
            vel=np.zeros(3),
            accel=np.zeros(3),
            attitude=quat_from_yaw(yaw),
        )


@dataclass(frozen=True)
class Waypoint:
    index: int
    pos: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Ground truth sampled at ``DT``; arrays are row-aligned with ``t``."""

    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    accel: np.ndarray
    attitude: np.ndarray
    body_rate: np.ndarray
    motion_class: np.ndarray
    segment_index: np.ndarray
    waypoints: tuple[Waypoint, ...]
    segments: tuple[MotionSegment, ...]
    # segment start times and start states, for analytic re-evaluation
    _starts: tuple[tuple[float, np.ndarray, float], ...] = field(repr=False)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def sample(self, i: int) -> TrajectorySample:
        return TrajectorySample(
            t=float(self.t[i]),
            pos=self.pos[i].copy(),
            vel=self.vel[i].copy(),
            accel=self.accel[i].copy(),
            attitude=self.attitude[i].copy(),
        )

    def segment_at(self, t: float) -> int:
        """Index of the segment active at ``t`` (closed-left intervals)."""
        if not (-1e-12 <= t <= self.duration + 1e-12):
            raise ValidationError(f"t={t} outside trajectory span [0, {self.duration}]")
        starts = [s[0] for s in self._starts]
        return max(0, int(np.searchsorted(starts, t + 1e-12, side="right")) - 1)

    def evaluate(self, t: float):
        """Analytic (pos, vel, accel, yaw, yaw_rate) at arbitrary ``t``."""
        i = self.segment_at(t)
        t0, p0, yaw0 = self._starts[i]
        pos, vel, acc, yaw, yaw_rate = self.segments[i].evaluate(np.array([t - t0]), p0, yaw0)
        return pos[0], vel[0], acc[0], float(yaw[0]), float(yaw_rate[0])


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _grid(total: float) -> np.ndarray:
    n = int(math.floor(total * IMU_RATE_HZ + 1e-9))
    return np.arange(n + 1, dtype=float) / IMU_RATE_HZ


def compose(segments: Sequence[MotionSegment], start: TrajectorySample | None = None) -> Trajectory:
    """Chain segments into one trajectory sampled on the 160 Hz grid.

    Position is continuous by construction. A segment with an explicit
    ``heading`` must match the running heading; speed may step.
    """
    segments = tuple(segments)
    if not segments:
        raise ValidationError("compose() needs at least one segment")
    if start is None:
        first = segments[0].heading
        start = TrajectorySample.at_rest(yaw=0.0 if first is None else first)
    q0 = np.asarray(start.attitude, dtype=float)
    if abs(np.linalg.norm(q0) - 1.0) > 1e-9:
        raise ValidationError("start attitude must be a unit quaternion")

    yaw = float(yaw_from_quat(q0))
    p = np.asarray(start.pos, dtype=float).copy()
    t0 = 0.0
    starts = []
    for k, seg in enumerate(segments):
        if seg.heading is not None:
            if k > 0 and abs(_wrap(seg.heading - yaw)) > _HEADING_TOL:
                raise ValidationError(
                    f"segment {k} heading {seg.heading:.6f} rad is discontinuous with "
                    f"previous end heading {yaw:.6f} rad"
                )
            yaw = float(seg.heading)
        starts.append((t0, p.copy(), yaw))
        pe, _, _, ye, _ = seg.evaluate(np.array([seg.duration]), p, yaw)
        p = pe[0]
        yaw = float(ye[0])
        t0 += seg.duration

    t = _grid(t0)
    n = t.shape[0]
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    acc = np.empty((n, 3))
    yaw_arr = np.empty(n)
    rate = np.empty(n)
    seg_idx = np.empty(n, dtype=np.int64)
    begin_times = np.array([s[0] for s in starts])
    # closed-left: a sample exactly on a boundary belongs to the next segment
    owner = np.searchsorted(begin_times, t + 1e-12, side="right") - 1
    for k, seg in enumerate(segments):
        mask = owner == k
        if not mask.any():
            continue
        ts, ps, ys = starts[k]
        out = seg.evaluate(t[mask] - ts, ps, ys)
        pos[mask], vel[mask], acc[mask], yaw_arr[mask], rate[mask] = out
        seg_idx[mask] = k

    attitude = quat_from_yaw(yaw_arr)
    body_rate = np.zeros((n, 3))
    body_rate[:, 2] = rate
    motion = np.where(
        np.linalg.norm(acc, axis=1) <= LINEAR_ACCEL_TOL, MotionClass.LINEAR, MotionClass.NONLINEAR
    ).astype(np.int8)

    idx = [0]
    for ts, _, _ in starts[1:]:
        idx.append(min(n - 1, int(math.ceil(ts * IMU_RATE_HZ - 1e-9))))
    idx.append(n - 1)
    waypoints = tuple(Waypoint(i, pos[i].copy()) for i in idx)

    for arr in (t, pos, vel, acc, attitude, body_rate, motion, seg_idx):
        arr.setflags(write=False)
    return Trajectory(
        t=t,
        pos=pos,
        vel=vel,
        accel=acc,
        attitude=attitude,
        body_rate=body_rate,
        motion_class=motion,
        segment_index=seg_idx,
        waypoints=waypoints,
        segments=segments,
        _starts=tuple(starts),
    )


def build_segment(seg: MotionSegment, start: TrajectorySample | None = None) -> Trajectory:
    """Single-segment trajectory starting from ``start`` (default: origin)."""
    if start is None:
        start = TrajectorySample.at_rest(yaw=seg.heading or 0.0)
    return compose([seg], start)


def acceleration_at(traj: Trajectory, t: float) -> np.ndarray:
    """Analytic NED acceleration of the segment active at ``t``."""
    return traj.evaluate(t)[2]


def straight(speed, duration, heading=None, climb_rate=0.0) -> MotionSegment:
    return MotionSegment(SegmentKind.STRAIGHT_LINE, duration, speed, heading, climb_rate=climb_rate)


def arc(speed, radius, *, duration=None, angle=None, heading=None, turn=1) -> MotionSegment:
    """Circular arc given either its duration or the swept angle (rad)."""
    if (duration is None) == (angle is None):
        raise ValidationError("arc() needs exactly one of duration or angle")
    if duration is None:
        if speed <= 0:
            raise ValidationError("arc() by angle needs speed > 0")
        duration = abs(angle) * radius / speed
    return MotionSegment(SegmentKind.CIRCULAR_ARC, duration, speed, heading, radius, turn=turn)


def spiral(speed, radius, climb_rate, duration, heading=None, turn=1) -> MotionSegment:
    return MotionSegment(SegmentKind.SPIRAL, duration, speed, heading, radius, climb_rate, turn)


def hover(duration, heading=None) -> MotionSegment:
    return MotionSegment(SegmentKind.HOVER, duration, 0.0, heading)
