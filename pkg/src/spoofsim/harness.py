"""Scenario orchestration: configs, presets, Monte-Carlo runs, sweeps, output.

A scenario is a plain YAML document::

    schema_version: 1
    name: ssd_straight
    trajectory: {preset: straight}          # or segments: [...]
    sensors: {gnss_pos_std: 0.5}
    filter: {tuned: true}
    attack:
      kind: ssd
      window: {start: 5, duration: 1000}
      theta: 20
    detector: {tau: 11.1}
    seeds: [0, 1, 2]
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import yaml

from . import attacks as atk
from .detectors import DetectionReport, DetectorConfig, LtwConfig, NlcConfig, run_detectors, summarize
from .ekf import FilterConfig, FilterTrace, run_filter
from .errors import NumericalFault, ValidationError
from .metrics import MetricReport, report
from .sensors import SensorParams, stream_rng, synthesize
from .trajectory import IMU_RATE_HZ, MotionSegment, Trajectory, arc, compose, spiral, straight

SCHEMA_VERSION = 1
DEFAULT_SEEDS = tuple(range(30))
NO_WINDOW = atk.AttackWindow(0.0, 1e9)

# ---------------------------------------------------------------------------
# trajectories


def _straight_I():
    return [straight(5.0, 20.0, heading=0.0)]


def _spiral_II():
    return [spiral(5.0, 15.0, 0.5, 48.0, heading=0.0)]


def _u_shape_III():
    turn = math.pi * 10.0 / 5.0
    leg = (71.0 - turn) / 2.0
    return [straight(5.0, leg, heading=0.0), arc(5.0, 10.0, angle=math.pi), straight(5.0, leg)]


def _ablation():
    return [straight(2.0, 20.0, heading=0.0), arc(2.0, 10.0, duration=15.0)]


def _study_straight():
    return [straight(5.0, 20.0, heading=0.0)]


def _study_circle():
    return [arc(5.0, 10.0, duration=20.0, heading=0.0)]


TRAJECTORY_PRESETS = {
    "straight": _straight_I,
    "spiral": _spiral_II,
    "u_shape": _u_shape_III,
    "ablation": _ablation,
    "study_straight": _study_straight,
    "study_circle": _study_circle,
}
MISSIONS = ("straight", "spiral", "u_shape")


@functools.lru_cache(maxsize=32)
def _preset_trajectory(name: str) -> Trajectory:
    return compose(TRAJECTORY_PRESETS[name]())


@functools.lru_cache(maxsize=32)
def _segment_trajectory(segments: tuple) -> Trajectory:
    return compose(segments)


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class TrajectoryConfig:
    preset: Optional[str] = None
    segments: tuple = ()

    def __post_init__(self):
        if (self.preset is None) == (not self.segments):
            raise ValidationError("trajectory needs exactly one of 'preset' or 'segments'")
        if self.preset is not None and self.preset not in TRAJECTORY_PRESETS:
            raise ValidationError(f"unknown trajectory preset {self.preset!r}; known: {sorted(TRAJECTORY_PRESETS)}")

    def build(self) -> Trajectory:
        if self.preset is not None:
            return _preset_trajectory(self.preset)
        return _segment_trajectory(tuple(self.segments))


@dataclass(frozen=True)
class FilterSettings:
    """Noise scaling relative to the sensor model; ``tuned`` loads the shipped factors."""

    tuned: bool = True
    q_scale: float = 1.0
    r_vel_scale: float = 1.0
    cov_scale: float = 1.0
    fuse_mag: bool = True

    def resolve(self) -> dict:
        if self.tuned:
            return dict(tuned_noise())
        return {"q_scale": self.q_scale, "r_vel_scale": self.r_vel_scale, "cov_scale": self.cov_scale}

    def filter_config(self, sensors: SensorParams) -> FilterConfig:
        return FilterConfig.for_sensors(sensors, fuse_mag=self.fuse_mag, **self.resolve())


@dataclass(frozen=True)
class AttackConfig:
    kind: Optional[atk.AttackKind] = None
    window: atk.AttackWindow = NO_WINDOW
    observer: str = "truth"  # velocity source for the SSD trigger: "gnss" or "truth"
    observer_vel_std: float = 0.01

    def __post_init__(self):
        if self.observer not in ("gnss", "truth"):
            raise ValidationError(f"observer must be 'gnss' or 'truth', got {self.observer!r}")
        if not self.observer_vel_std >= 0:
            raise ValidationError("observer_vel_std must be >= 0")

    @property
    def label(self) -> str:
        k = self.kind
        if k is None:
            return "none"
        if isinstance(k, atk.Ssd):
            return "ssd" if k.mode is atk.SsdMode.CCA else f"ssd_{k.mode.value}"
        if isinstance(k, atk.Bias):
            return "bias" if k.target == "pos" else "bias_vel"
        return type(k).__name__.lower()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    trajectory: TrajectoryConfig
    sensors: SensorParams = field(default_factory=SensorParams)
    filter: FilterSettings = field(default_factory=FilterSettings)
    attack: AttackConfig = field(default_factory=AttackConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    seeds: tuple = DEFAULT_SEEDS
    out_dir: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("scenario name must be non-empty")
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ValidationError("scenario needs at least one seed")
        if any(s < 0 or s >= 1 << 64 for s in seeds):
            raise ValidationError("seeds must be unsigned 64-bit integers")
        object.__setattr__(self, "seeds", seeds)

    def with_attack(self, kind, window=None, name=None, **kw) -> "ScenarioConfig":
        a = dataclasses.replace(self.attack, kind=kind, window=window or self.attack.window, **kw)
        return dataclasses.replace(self, attack=a, name=name or self.name)

    def with_seeds(self, seeds) -> "ScenarioConfig":
        return dataclasses.replace(self, seeds=tuple(seeds))


TUNED_KEYS = ("q_scale", "r_vel_scale", "cov_scale")


@functools.lru_cache(maxsize=1)
def tuned_noise() -> dict:
    text = resources.files("spoofsim").joinpath("data/tuned_noise.yaml").read_text()
    data = yaml.safe_load(text)
    return {k: float(data[k]) for k in TUNED_KEYS}


def _take(d: dict, allowed: Iterable[str], where: str) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ValidationError(f"{where} must be a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise ValidationError(f"unknown key(s) in {where}: {sorted(extra)}")
    return dict(d)


_SEGMENT_KEYS = ("kind", "duration", "speed", "heading", "radius", "climb_rate", "turn", "angle")


def _parse_segment(d) -> MotionSegment:
    d = _take(d, _SEGMENT_KEYS, "trajectory.segments[]")
    if "kind" not in d:
        raise ValidationError("segment needs a 'kind'")
    angle = d.pop("angle", None)
    if angle is not None:
        if "duration" in d:
            raise ValidationError("segment takes 'angle' or 'duration', not both")
        speed = float(d.get("speed", 0.0))
        if speed <= 0:
            raise ValidationError("segment with 'angle' needs speed > 0")
        d["duration"] = abs(float(angle)) * float(d["radius"]) / speed
    try:
        return MotionSegment(**d)
    except TypeError as exc:
        raise ValidationError(f"bad segment: {exc}") from exc


_ATTACK_KEYS = (
    "kind", "window", "observer", "observer_vel_std",
    "theta", "alpha", "phi", "trigger_eps", "direction", "bearing", "accel_positive_only", "mode",
    "low", "high", "units", "target", "factor", "origin", "pos_ne", "vel_ned",
)


def _parse_attack(d) -> AttackConfig:
    d = _take(d, _ATTACK_KEYS, "attack")
    kind = d.pop("kind", "none")
    w = _take(d.pop("window", None), ("start", "duration"), "attack.window")
    window = atk.AttackWindow(float(w.get("start", 0.0)), float(w.get("duration", 1e9)))
    obs = {k: d.pop(k) for k in ("observer", "observer_vel_std") if k in d}
    groups = {
        "none": (),
        "ssd": ("theta", "alpha", "phi", "trigger_eps", "direction", "bearing", "accel_positive_only", "mode"),
        "bias": ("low", "high", "units", "target"),
        "multiplicative": ("factor", "origin"),
        "replacement": ("pos_ne", "vel_ned"),
    }
    if kind not in groups:
        raise ValidationError(f"unknown attack kind {kind!r}; known: {sorted(groups)}")
    extra = set(d) - set(groups[kind])
    if extra:
        raise ValidationError(f"key(s) {sorted(extra)} do not apply to attack kind {kind!r}")
    if kind == "none":
        k = None
    elif kind == "ssd":
        mode = d.pop("mode", "cca")
        k = atk.Ssd(atk.AttackParams(window=window, **d), mode)
    elif kind == "bias":
        k = atk.Bias(**{**{"low": 0.0, "high": 0.0005}, **d})
    elif kind == "multiplicative":
        if "origin" in d:
            d["origin"] = tuple(float(x) for x in d["origin"])
        k = atk.Multiplicative(**{**{"factor": 1.5}, **d})
    else:
        if "pos_ne" not in d:
            raise ValidationError("replacement attack needs 'pos_ne'")
        k = atk.Replacement(tuple(d["pos_ne"]), tuple(d.get("vel_ned", (0.0, 0.0, 0.0))))
    return AttackConfig(kind=k, window=window, **obs)


def _parse_sensors(d) -> SensorParams:
    names = [f.name for f in dataclasses.fields(SensorParams)]
    return SensorParams(**_take(d, names, "sensors"))


def _parse_detector(d) -> DetectorConfig:
    d = _take(d, ("tau", "nlc", "ltw"), "detector")
    nlc = NlcConfig(**_take(d.pop("nlc", None), ("drift", "threshold"), "detector.nlc"))
    ltw = LtwConfig(**_take(d.pop("ltw", None), ("window", "threshold"), "detector.ltw"))
    return DetectorConfig(nlc=nlc, ltw=ltw, **d)


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ValidationError("scenario file must contain a mapping")
    doc = _take(doc, ("schema_version", "name", "trajectory", "sensors", "filter", "attack",
                      "detector", "seeds", "n_seeds", "base_seed", "output"), "scenario")
    if "schema_version" not in doc:
        raise ValidationError("scenario file is missing 'schema_version'")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {doc['schema_version']!r} (expected {SCHEMA_VERSION})")
    tr = _take(doc.get("trajectory"), ("preset", "segments"), "trajectory")
    traj = TrajectoryConfig(preset=tr.get("preset"),
                            segments=tuple(_parse_segment(s) for s in tr.get("segments") or ()))
    if "seeds" in doc and "n_seeds" in doc:
        raise ValidationError("give 'seeds' or 'n_seeds', not both")
    if "seeds" in doc:
        seeds = tuple(doc["seeds"])
    else:
        base = int(doc.get("base_seed", 0))
        seeds = tuple(range(base, base + int(doc.get("n_seeds", len(DEFAULT_SEEDS)))))
    out = _take(doc.get("output"), ("dir",), "output")
    try:
        return ScenarioConfig(
            name=str(doc.get("name", "scenario")),
            trajectory=traj,
            sensors=_parse_sensors(doc.get("sensors")),
            filter=FilterSettings(**_take(doc.get("filter"), [f.name for f in dataclasses.fields(FilterSettings)], "filter")),
            attack=_parse_attack(doc.get("attack")),
            detector=_parse_detector(doc.get("detector")),
            seeds=seeds,
            out_dir=out.get("dir"),
        )
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# presets

STEALTH_START = 5.0
STUDY_WINDOW = atk.AttackWindow(10.0, 2.0)
ABLATION_WINDOW = atk.AttackWindow(2.0, 1e9)
LINEAR_PHASE_END = 20.0  # end of the straight leg of the ablation flight


def _cfg(name, preset, kind=None, window=NO_WINDOW, **kw) -> ScenarioConfig:
    return ScenarioConfig(name=name, trajectory=TrajectoryConfig(preset=preset),
                          attack=AttackConfig(kind=kind, window=window), **kw)


def _stealth_window():
    return atk.AttackWindow(STEALTH_START, 1e9)


def _build_presets() -> dict:
    p = {}
    w = _stealth_window()
    for traj in MISSIONS:
        p[f"clean_{traj}"] = _cfg(f"clean_{traj}", traj)
        p[f"ssd_{traj}"] = _cfg(f"ssd_{traj}", traj, atk.Ssd(atk.AttackParams(window=w)), w)
        p[f"bias_{traj}"] = _cfg(f"bias_{traj}", traj, atk.Bias(0.0, 0.0005), w)
        p[f"mult_{traj}"] = _cfg(f"mult_{traj}", traj, atk.Multiplicative(1.5), w)
    p["calibration"] = _cfg("calibration", "straight", seeds=tuple(range(100)))
    for motion in ("straight", "circle"):
        traj = f"study_{motion}"
        p[f"finding1_bias_{motion}"] = _cfg(f"finding1_bias_{motion}", traj, atk.Bias(0.0, 0.0005), STUDY_WINDOW)
        p[f"finding1_mult_{motion}"] = _cfg(f"finding1_mult_{motion}", traj, atk.Multiplicative(1.5), STUDY_WINDOW)
        p[f"finding2_pos_{motion}"] = _cfg(f"finding2_pos_{motion}", traj, atk.Bias(0.0, 0.0005), STUDY_WINDOW)
        p[f"finding2_vel_{motion}"] = _cfg(f"finding2_vel_{motion}", traj,
                                           atk.Bias(0.0, 1.0, units="m", target="vel"), STUDY_WINDOW)
    aw = ABLATION_WINDOW
    p["ablation_baseline"] = _cfg("ablation_baseline", "ablation")
    for mode in atk.SsdMode:
        p[f"ablation_{mode.value}"] = _cfg(f"ablation_{mode.value}", "ablation",
                                           atk.Ssd(atk.AttackParams(window=aw), mode), aw)
    p["sweep_base"] = dataclasses.replace(p["ablation_cca"], name="sweep_base", seeds=tuple(range(10)))
    return p


PRESETS = _build_presets()


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    scenario: str
    seed: int
    attack: str
    truth: Trajectory
    trace: FilterTrace
    detections: dict
    reports: dict
    metrics: MetricReport
    window: Optional[atk.AttackWindow] = None
    hook: Any = None

    @property
    def run_id(self) -> str:
        return f"{self.scenario}-{self.seed}"

    @property
    def chi2(self) -> np.ndarray:
        return np.array([r.statistic for r in self.detections["chi2"]])

    def row(self) -> dict:
        rep: DetectionReport = self.reports["chi2"]
        m = self.metrics
        return {
            "run_id": self.run_id,
            "scenario": self.scenario,
            "attack": self.attack,
            "seed": self.seed,
            "ade": m.ade,
            "fde": m.fde,
            "apde": m.apde,
            "ade_n": m.ade_n,
            "ade_e": m.ade_e,
            "chi_max": m.chi_max,
            "detected": rep.detected,
            "latency_s": rep.latency,
            "peak_stat": rep.peak_statistic,
        }


def _observer(cfg: AttackConfig, traj: Trajectory, seed: int):
    if cfg.observer == "gnss" and cfg.observer_vel_std == 0:
        return None
    std = cfg.observer_vel_std

    def observe(z):
        k = int(round(z.t * IMU_RATE_HZ))
        v = traj.vel[k] if cfg.observer == "truth" else z.vel_ned
        if std > 0:
            v = v + std * stream_rng(seed, "attack", 1 << 20, k).standard_normal(3)
        return v

    return observe


def run_scenario(cfg: ScenarioConfig, seed: int, baseline: Optional[FilterTrace] = None) -> RunResult:
    """Trajectory, sensors, filter with attack hook, detectors, metrics.

    With ``baseline`` (a clean trace on the same seed) the metrics measure
    the shift from the clean estimate instead of the error from truth.
    """
    try:
        traj = cfg.trajectory.build()
        if cfg.attack.kind is not None:
            cfg.attack.window.check_span(traj.duration)
        streams = synthesize(traj, cfg.sensors, seed)
        fcfg = cfg.filter.filter_config(cfg.sensors)
        hook = atk.make_hook(cfg.attack.kind, cfg.attack.window, seed, _observer(cfg.attack, traj, seed))
        trace = run_filter(streams, traj.sample(0), fcfg, hook)
    except NumericalFault as exc:
        raise NumericalFault(f"scenario {cfg.name!r} seed {seed}: {exc}") from exc
    except ValidationError as exc:
        raise ValidationError(f"scenario {cfg.name!r}: {exc}") from exc
    dets = run_detectors(trace.innovations, cfg.detector)
    window = cfg.attack.window if cfg.attack.kind is not None else None
    reports = {name: summarize(recs, window) for name, recs in dets.items()}
    ref = traj.pos if baseline is None else baseline.pos
    metrics = report(trace.pos, ref, traj.waypoints, reports["chi2"].peak_statistic)
    return RunResult(cfg.name, int(seed), cfg.attack.label, traj, trace, dets, reports, metrics, window, hook)


def run_many(cfg: ScenarioConfig, seeds: Optional[Sequence[int]] = None) -> list[RunResult]:
    return [run_scenario(cfg, s) for s in (cfg.seeds if seeds is None else seeds)]


def false_alarm_rate(results: Sequence[RunResult], tau: float) -> float:
    stats = np.concatenate([r.chi2 for r in results])
    return float(np.mean(stats > tau))


# ---------------------------------------------------------------------------
# sweeps and ablation


@dataclass(frozen=True)
class SweepGrid:
    base: ScenarioConfig
    theta: tuple = (5.0, 10.0, 20.0, 40.0)
    alpha: tuple = (5.0, 8.0, 11.0, 13.0, 15.0)
    phi: tuple = (0.02, 0.04, 0.08)

    def __post_init__(self):
        if not (self.theta and self.alpha and self.phi):
            raise ValidationError("sweep axes must be non-empty")
        if not isinstance(self.base.attack.kind, atk.Ssd):
            raise ValidationError("sweep base scenario must use an SSD attack")

    def points(self):
        for th in sorted(self.theta):
            for al in sorted(self.alpha):
                for ph in sorted(self.phi):
                    yield th, al, ph


def _ssd_variant(base: ScenarioConfig, **params) -> ScenarioConfig:
    kind = base.attack.kind
    p = dataclasses.replace(kind.params, **params)
    return base.with_attack(atk.Ssd(p, kind.mode))


def sweep_parameters(grid: SweepGrid) -> list[dict]:
    rows = []
    for th, al, ph in grid.points():
        cfg = _ssd_variant(grid.base, theta=th, alpha=al, phi=ph)
        res = run_many(cfg)
        rows.append({
            "theta": th,
            "alpha": al,
            "phi": ph,
            "mean_ade": float(np.mean([r.metrics.ade for r in res])),
            "mean_chi_max": float(np.mean([r.metrics.chi_max for r in res])),
        })
    return rows


def ablation_suite(base: ScenarioConfig, seeds: Optional[Sequence[int]] = None, include_swap: bool = False) -> list[dict]:
    """Seed-averaged per-axis ADE and chi-square peak for Baseline, SPA, SVA, CCA."""
    seeds = tuple(base.seeds if seeds is None else seeds)
    window = base.attack.window if base.attack.kind is not None else ABLATION_WINDOW
    params = base.attack.kind.params if isinstance(base.attack.kind, atk.Ssd) else atk.AttackParams(window=window)
    variants = [("Baseline", None)]
    modes = [atk.SsdMode.SPA, atk.SsdMode.SVA, atk.SsdMode.CCA] + ([atk.SsdMode.SWAP] if include_swap else [])
    variants += [(m.name, atk.Ssd(params, m)) for m in modes]
    rows = []
    for label, kind in variants:
        cfg = base.with_attack(kind, window)
        res = [run_scenario(cfg, s) for s in seeds]
        rows.append({
            "strategy": label,
            "ade_n": float(np.mean([r.metrics.ade_n for r in res])),
            "ade_e": float(np.mean([r.metrics.ade_e for r in res])),
            "ade": float(np.mean([r.metrics.ade for r in res])),
            "chi_max": float(np.mean([r.metrics.chi_max for r in res])),
            "detected_rate": float(np.mean([r.reports["chi2"].detected for r in res])),
        })
    return rows


# ---------------------------------------------------------------------------
# output

RUN_COLUMNS = ("run_id", "scenario", "attack", "seed", "ade", "fde", "apde", "ade_n", "ade_e",
               "chi_max", "detected", "latency_s", "peak_stat")
SWEEP_COLUMNS = ("theta", "alpha", "phi", "mean_ade", "mean_chi_max")
ABLATION_COLUMNS = ("strategy", "ade_n", "ade_e", "ade", "chi_max", "detected_rate")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _json_val(v):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(f"{float(v):.9g}")


def _rows(results) -> list[dict]:
    return [r.row() if isinstance(r, RunResult) else r for r in results]


def render(results, fmt: str = "csv", columns: Optional[Sequence[str]] = None) -> str:
    rows = _rows(results)
    if columns is None:
        columns = list(rows[0]) if rows else list(RUN_COLUMNS)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([{c: _json_val(r.get(c)) for c in columns} for r in rows], indent=2) + "\n"
    raise ValidationError(f"unknown output format {fmt!r}")


def emit(results, fmt: str, path, columns: Optional[Sequence[str]] = None) -> None:
    """Write rows as CSV or JSON with fixed columns and 9 significant digits."""
    if columns is None and (not results or isinstance(results[0], RunResult)):
        columns = RUN_COLUMNS
    text = render(results, fmt, columns)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_trace_csv(result: RunResult, path) -> None:
    """Per-IMU-sample trace: t, true N/E, est N/E, chi2 (chi2 only at epochs)."""
    chi = {round(r.t * IMU_RATE_HZ): r.statistic for r in result.detections["chi2"]}
    truth, est = result.truth.pos, result.trace.pos
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "true_n", "true_e", "est_n", "est_e", "chi2"])
    for k, t in enumerate(result.trace.t):
        w.writerow([_fmt(t), _fmt(truth[k, 0]), _fmt(truth[k, 1]), _fmt(est[k, 0]), _fmt(est[k, 1]),
                    _fmt(chi.get(k))])
    _write(path, buf.getvalue())


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        fh.write(text)
