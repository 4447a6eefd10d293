"""GNSS spoofing payloads.

Pure payload functions transform one :class:`GnssMeasurement`; the hook
classes wrap them with a window and per-run state so they can be handed to
:func:`spoofsim.ekf.run_filter`, which calls a hook once per GNSS epoch with
the clean measurement.

The SSD hook picks its branch from the victim's acceleration, differenced
from consecutive GNSS velocities: a position bias ``theta * exp(t / alpha)``
while flight is straight, a velocity factor ``log2(2 + phi * a * t)`` while
it is turning.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ValidationError
from .sensors import GnssMeasurement, stream_rng

METERS_PER_DEGREE = 111_320.0
LOG_ARG_FLOOR = 2.0**-20
_EPS_T = 1e-9


@dataclass(frozen=True)
class AttackWindow:
    """Half-open interval ``[start, start + duration)`` in seconds."""

    start: float
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and self.start >= 0):
            raise ValidationError(f"attack window start must be >= 0, got {self.start}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"attack window duration must be > 0, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def contains(self, t: float) -> bool:
        return self.start - _EPS_T <= t < self.end - _EPS_T

    def check_span(self, duration: float) -> None:
        if self.start > duration + _EPS_T:
            raise ValidationError(f"attack window starts at {self.start}s, after the run ends ({duration}s)")


class Branch(enum.IntEnum):
    POSITION = 0  # linear flight
    VELOCITY = 1  # turning flight


class SsdMode(str, enum.Enum):
    """Which SSD branch runs in which motion state.

    ``CCA`` is the canonical pairing; ``SPA`` / ``SVA`` keep only one
    branch; ``SWAP`` runs velocity during linear and position during
    nonlinear flight.
    """

    CCA = "cca"
    SPA = "spa"
    SVA = "sva"
    SWAP = "swap"


class BiasDirection(str, enum.Enum):
    NE = "ne"
    ALONG_TRACK = "along_track"
    BEARING = "bearing"


@dataclass(frozen=True)
class AttackParams:
    theta: float = 20.0
    alpha: float = 11.0
    phi: float = 0.08
    trigger_eps: float = 0.05
    window: AttackWindow = field(default_factory=lambda: AttackWindow(0.0, 1e9))
    direction: BiasDirection = BiasDirection.NE
    bearing: float = 0.0  # rad from north, for BiasDirection.BEARING
    accel_positive_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "direction", BiasDirection(self.direction))
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not (math.isfinite(self.trigger_eps) and self.trigger_eps > 0):
            raise ValidationError(f"trigger_eps must be > 0, got {self.trigger_eps}")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValidationError("theta and phi must be finite")


@dataclass(frozen=True)
class ObservedVictimState:
    t: float
    vel: np.ndarray
    prev_vel: np.ndarray
    epoch_dt: float = 1.0


# --------------------------------------------------------------------------
# attack kinds, as carried by scenario configs


@dataclass(frozen=True)
class Bias:
    low: float
    high: float
    units: str = "deg"  # "deg" or "m"
    target: str = "pos"  # "pos" or "vel"

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValidationError(f"bias low ({self.low}) must be <= high ({self.high})")
        if self.units not in ("deg", "m"):
            raise ValidationError(f"bias units must be 'deg' or 'm', got {self.units!r}")
        if self.target not in ("pos", "vel"):
            raise ValidationError(f"bias target must be 'pos' or 'vel', got {self.target!r}")

    def bounds_m(self) -> tuple[float, float]:
        # velocity payloads are already in m/s
        scale = METERS_PER_DEGREE if self.units == "deg" and self.target == "pos" else 1.0
        return self.low * scale, self.high * scale


@dataclass(frozen=True)
class Multiplicative:
    factor: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not math.isfinite(self.factor):
            raise ValidationError("multiplicative factor must be finite")


@dataclass(frozen=True)
class Replacement:
    pos_ne: tuple[float, float]
    vel_ned: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Ssd:
    params: AttackParams = field(default_factory=AttackParams)
    mode: SsdMode = SsdMode.CCA

    def __post_init__(self):
        object.__setattr__(self, "mode", SsdMode(self.mode))


AttackKind = Union[Bias, Multiplicative, Replacement, Ssd]


# --------------------------------------------------------------------------
# pure payloads


def bias_attack(z: GnssMeasurement, low: float, high: float, seed: int, epoch: int) -> GnssMeasurement:
    """Add independent Uniform[low, high) draws to N and E position."""
    return z.replace(pos_ne=z.pos_ne + _uniform_pair(low, high, seed, epoch))


def velocity_bias_attack(z: GnssMeasurement, low: float, high: float, seed: int, epoch: int) -> GnssMeasurement:
    """Add independent Uniform[low, high) draws to N and E velocity."""
    vel = z.vel_ned.copy()
    vel[:2] += _uniform_pair(low, high, seed, epoch)
    return z.replace(vel_ned=vel)


def _uniform_pair(low, high, seed, epoch):
    if not low <= high:
        raise ValidationError(f"bias low ({low}) must be <= high ({high})")
    u = stream_rng(seed, "attack", epoch).random(2)
    return low + (high - low) * u


def multiplicative_attack(z: GnssMeasurement, factor: float, origin=(0.0, 0.0)) -> GnssMeasurement:
    """Scale N/E position about ``origin``."""
    if not math.isfinite(factor):
        raise ValidationError("multiplicative factor must be finite")
    o = np.asarray(origin, dtype=float)
    return z.replace(pos_ne=o + factor * (z.pos_ne - o))


def replacement_attack(z: GnssMeasurement, fake: GnssMeasurement) -> GnssMeasurement:
    return fake.replace(t=z.t)


def ssd_position_bias(t_i: float, theta: float, alpha: float) -> float:
    return theta * math.exp(t_i / alpha)


def ssd_velocity_factor(t_i: float, a_dim: float, phi: float, positive_only: bool = False) -> float:
    if positive_only and not a_dim > 0:
        return 1.0
    return math.log2(max(2.0 + phi * a_dim * t_i, LOG_ARG_FLOOR))


def ssd_accel_estimate(obs: ObservedVictimState) -> np.ndarray:
    if not obs.epoch_dt > 0:
        raise ValidationError(f"epoch_dt must be > 0, got {obs.epoch_dt}")
    return (np.asarray(obs.vel, dtype=float) - np.asarray(obs.prev_vel, dtype=float)) / obs.epoch_dt


def motion_branch(a, trigger_eps: float) -> Branch:
    return Branch.POSITION if float(np.linalg.norm(a)) <= trigger_eps else Branch.VELOCITY


def _bias_vector(F, params: AttackParams, obs: ObservedVictimState):
    if params.direction is BiasDirection.NE:
        return np.array([F, F])
    if params.direction is BiasDirection.BEARING:
        return F * np.array([math.cos(params.bearing), math.sin(params.bearing)])
    v = np.asarray(obs.vel, dtype=float)[:2]
    n = np.linalg.norm(v)
    # no track to follow when hovering
    u = v / n if n > 1e-9 else np.array([1.0, 0.0])
    return F * u


def apply_branch(z: GnssMeasurement, branch: Branch, a, obs: ObservedVictimState,
                 t_attack: float, params: AttackParams) -> GnssMeasurement:
    if branch is Branch.POSITION:
        F = ssd_position_bias(t_attack, params.theta, params.alpha)
        return z.replace(pos_ne=z.pos_ne + _bias_vector(F, params, obs))
    vel = z.vel_ned.copy()
    for d in (0, 1):
        vel[d] *= ssd_velocity_factor(t_attack, float(a[d]), params.phi, params.accel_positive_only)
    return z.replace(vel_ned=vel)


def ssd_apply(z: GnssMeasurement, obs: ObservedVictimState, t_attack: float,
              params: AttackParams) -> GnssMeasurement:
    """One epoch of the canonical SSD payload."""
    a = ssd_accel_estimate(obs)
    return apply_branch(z, motion_branch(a, params.trigger_eps), a, obs, t_attack, params)


# --------------------------------------------------------------------------
# stateful hooks


class _WindowedHook:
    def __init__(self, window: AttackWindow):
        self.window = window
        self.active_epochs: list[float] = []

    def __call__(self, z: GnssMeasurement) -> GnssMeasurement:
        if not self.window.contains(z.t):
            self.observe(z)
            return z
        self.active_epochs.append(z.t)
        return self.payload(z)

    def observe(self, z: GnssMeasurement) -> None:
        pass

    def payload(self, z: GnssMeasurement) -> GnssMeasurement:
        raise NotImplementedError


class BiasAttack(_WindowedHook):
    def __init__(self, kind: Bias, window: AttackWindow, seed: int):
        super().__init__(window)
        self.kind = kind
        self.low, self.high = kind.bounds_m()
        self.seed = seed

    def payload(self, z):
        epoch = int(round(z.t))
        fn = bias_attack if self.kind.target == "pos" else velocity_bias_attack
        return fn(z, self.low, self.high, self.seed, epoch)


class MultiplicativeAttack(_WindowedHook):
    def __init__(self, kind: Multiplicative, window: AttackWindow):
        super().__init__(window)
        self.kind = kind

    def payload(self, z):
        return multiplicative_attack(z, self.kind.factor, self.kind.origin)


class ReplacementAttack(_WindowedHook):
    def __init__(self, kind: Replacement, window: AttackWindow):
        super().__init__(window)
        self.fake = GnssMeasurement(0.0, np.asarray(kind.pos_ne, dtype=float),
                                    np.asarray(kind.vel_ned, dtype=float))

    def payload(self, z):
        return replacement_attack(z, self.fake)


VelocityObserver = Callable[[GnssMeasurement], np.ndarray]


class SsdAttack(_WindowedHook):
    """State-triggered SSD hook.

    The attacker watches every epoch (in or out of the window) to keep the
    previous velocity for its acceleration estimate. ``observer`` maps the
    clean measurement to the velocity the attacker sees; the default reads
    the GNSS velocity itself.

    The branch clock restarts on activation and whenever the detected
    motion state changes.
    """

    def __init__(self, kind: Ssd, observer: Optional[VelocityObserver] = None, epoch_dt: float = 1.0):
        super().__init__(kind.params.window)
        self.params = kind.params
        self.mode = kind.mode
        self.observer = observer or (lambda z: z.vel_ned)
        self.epoch_dt = epoch_dt
        self.prev_vel: Optional[np.ndarray] = None
        self.state: Optional[Branch] = None
        self.clock_start = 0.0
        self.log: list[tuple[float, int, float]] = []  # (t, applied branch or -1, t_attack)

    def _observe(self, z) -> ObservedVictimState:
        vel = np.asarray(self.observer(z), dtype=float)
        prev = vel if self.prev_vel is None else self.prev_vel
        self.prev_vel = vel.copy()
        return ObservedVictimState(z.t, vel, prev, self.epoch_dt)

    def observe(self, z):
        self._observe(z)
        self.state = None

    def payload(self, z):
        obs = self._observe(z)
        a = ssd_accel_estimate(obs)
        state = motion_branch(a, self.params.trigger_eps)
        if state is not self.state:
            self.state = state
            self.clock_start = z.t
        t_attack = z.t - self.clock_start
        applied = self._branch_for(state)
        self.log.append((z.t, -1 if applied is None else int(applied), t_attack))
        if applied is None:
            return z
        return apply_branch(z, applied, a, obs, t_attack, self.params)

    def _branch_for(self, state: Branch) -> Optional[Branch]:
        m = self.mode
        if m is SsdMode.CCA:
            return state
        if m is SsdMode.SPA:
            return Branch.POSITION if state is Branch.POSITION else None
        if m is SsdMode.SVA:
            return Branch.VELOCITY if state is Branch.VELOCITY else None
        return Branch.VELOCITY if state is Branch.POSITION else Branch.POSITION


def make_hook(kind: Optional[AttackKind], window: AttackWindow, seed: int,
              observer: Optional[VelocityObserver] = None):
    """Fresh per-run hook for an attack kind; ``None`` means no attack."""
    if kind is None:
        return None
    if isinstance(kind, Bias):
        return BiasAttack(kind, window, seed)
    if isinstance(kind, Multiplicative):
        return MultiplicativeAttack(kind, window)
    if isinstance(kind, Replacement):
        return ReplacementAttack(kind, window)
    if isinstance(kind, Ssd):
        if kind.params.window != window:
            kind = Ssd(AttackParams(**{**kind.params.__dict__, "window": window}), kind.mode)
        return SsdAttack(kind, observer)
    raise ValidationError(f"unknown attack kind {type(kind).__name__}")
