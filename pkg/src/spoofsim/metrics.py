"""Trajectory displacement metrics on the horizontal (N, E) plane."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError


def _ne(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise ValidationError(f"{name} must be an (n, 2) or (n, 3) position series")
    return a[:, :2]


def _pair(est, truth):
    e, t = _ne(est, "est"), _ne(truth, "truth")
    if e.shape[0] != t.shape[0]:
        raise ValidationError(f"series length mismatch: {e.shape[0]} vs {t.shape[0]}")
    if e.shape[0] == 0:
        raise ValidationError("empty position series")
    return e, t


def loc_err(est, truth) -> np.ndarray:
    e, t = _pair(est, truth)
    return np.hypot(e[:, 0] - t[:, 0], e[:, 1] - t[:, 1])


def ade(est, truth) -> float:
    """RMSE of the per-frame displacement magnitude."""
    d = loc_err(est, truth)
    return float(np.sqrt(np.mean(d * d)))


def fde(est, truth) -> float:
    return float(loc_err(est, truth)[-1])


def apde(est, truth, waypoints: Sequence[int]) -> float:
    """Mean displacement over waypoint frames."""
    e, t = _pair(est, truth)
    idx = np.asarray([getattr(w, "index", w) for w in waypoints], dtype=int)
    if idx.size == 0:
        raise ValidationError("apde needs at least one waypoint")
    if idx.min() < 0 or idx.max() >= e.shape[0]:
        raise ValidationError(f"waypoint index out of range [0, {e.shape[0]})")
    d = e[idx] - t[idx]
    return float(np.mean(np.hypot(d[:, 0], d[:, 1])))


def per_axis_ade(est, truth) -> tuple[float, float]:
    e, t = _pair(est, truth)
    rms = np.sqrt(np.mean((e - t) ** 2, axis=0))
    return float(rms[0]), float(rms[1])


@dataclass(frozen=True)
class MetricReport:
    ade: float
    fde: float
    apde: float
    ade_n: float
    ade_e: float
    chi_max: float
    loc_err: np.ndarray

    def to_dict(self, with_series: bool = False) -> dict:
        d = asdict(self)
        d["loc_err"] = [float(x) for x in self.loc_err] if with_series else None
        if not with_series:
            del d["loc_err"]
        return d

    def to_json(self, with_series: bool = False) -> str:
        return json.dumps(self.to_dict(with_series), sort_keys=True)


def report(est, truth, waypoints, chi_max: float) -> MetricReport:
    """Metrics of ``est`` against ``truth``.

    Pass the clean-run estimate as ``truth`` to measure the attack-induced
    shift instead of the absolute error.
    """
    d = loc_err(est, truth)
    n, e = per_axis_ade(est, truth)
    return MetricReport(
        ade=float(np.sqrt(np.mean(d * d))),
        fde=float(d[-1]),
        apde=apde(est, truth, waypoints),
        ade_n=n,
        ade_e=e,
        chi_max=float(chi_max),
        loc_err=d,
    )
