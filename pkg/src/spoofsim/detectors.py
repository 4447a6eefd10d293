"""Residual detectors over GNSS innovations.

``chi_square`` thresholds the normalized innovation squared of each epoch.
``nlc_lite`` and ``ltw_lite`` are small stand-ins for the NLC and LTW
detectors: a one-sided CUSUM on the innovation magnitude and a sliding mean
of the chi-square statistic. Neither reproduces the original designs.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .attacks import AttackWindow
from .ekf import GNSS, Innovation
from .errors import DetectorError, ValidationError

CHI2_5DOF_95 = 11.1


@dataclass(frozen=True)
class NlcConfig:
    # calibrated on clean runs to a 5% per-epoch false-alarm rate (python -m spoofsim.tune --detectors)
    drift: float = 2.0  # b, subtracted from sqrt(chi2) each epoch
    threshold: float = 0.7


@dataclass(frozen=True)
class LtwConfig:
    window: int = 5
    threshold: float = 4.0  # clean 95th percentile of the windowed mean, rounded up


@dataclass(frozen=True)
class DetectorConfig:
    tau: float = CHI2_5DOF_95
    nlc: NlcConfig = field(default_factory=NlcConfig)
    ltw: LtwConfig = field(default_factory=LtwConfig)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValidationError(f"tau must be > 0, got {self.tau}")
        if self.ltw.window < 1:
            raise ValidationError(f"LTW window must be >= 1, got {self.ltw.window}")
        if not math.isfinite(self.nlc.threshold) or not math.isfinite(self.ltw.threshold):
            raise ValidationError("detector thresholds must be finite")


@dataclass(frozen=True)
class DetectionRecord:
    t: float
    statistic: float
    flagged: bool


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    latency: Optional[float]
    peak_statistic: float
    flagged_fraction: float


def chi_square_stat(innov: Innovation) -> float:
    """Normalized innovation squared ``r^T S^-1 r``."""
    r = np.asarray(innov.r, dtype=float)
    S = np.asarray(innov.S, dtype=float)
    if S.shape != (r.shape[0], r.shape[0]):
        raise DetectorError("innovation and covariance dimensions differ")
    try:
        c = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise DetectorError("innovation covariance is not positive definite") from exc
    y = np.linalg.solve(c, r)
    return float(y @ y)


def _gnss_stats(innovations: Iterable[Innovation]):
    """(t, chi2) pairs for usable GNSS epochs; singular or rejected ones are skipped."""
    out = []
    for inn in innovations:
        if inn.source != GNSS or inn.rejected:
            continue
        try:
            out.append((inn.t, chi_square_stat(inn)))
        except DetectorError:
            continue
    return out


def chi_square(innovations: Iterable[Innovation], tau: float = CHI2_5DOF_95) -> list[DetectionRecord]:
    return [DetectionRecord(t, c, c > tau) for t, c in _gnss_stats(innovations)]


def nlc_lite(innovations: Iterable[Innovation], cfg: NlcConfig = NlcConfig()) -> list[DetectionRecord]:
    s = 0.0
    out = []
    for t, c in _gnss_stats(innovations):
        s = max(0.0, s + math.sqrt(c) - cfg.drift)
        out.append(DetectionRecord(t, s, s > cfg.threshold))
    return out


def ltw_lite(innovations: Iterable[Innovation], cfg: LtwConfig = LtwConfig()) -> list[DetectionRecord]:
    if cfg.window < 1:
        raise ValidationError(f"LTW window must be >= 1, got {cfg.window}")
    buf: deque = deque(maxlen=cfg.window)
    out = []
    for t, c in _gnss_stats(innovations):
        buf.append(c)
        m = sum(buf) / len(buf)
        out.append(DetectionRecord(t, m, m > cfg.threshold))
    return out


def run_detectors(innovations: Sequence[Innovation], cfg: DetectorConfig) -> dict[str, list[DetectionRecord]]:
    return {
        "chi2": chi_square(innovations, cfg.tau),
        "nlc": nlc_lite(innovations, cfg.nlc),
        "ltw": ltw_lite(innovations, cfg.ltw),
    }


def summarize(records: Sequence[DetectionRecord], window: Optional[AttackWindow]) -> DetectionReport:
    """Detection outcome relative to the attack window.

    Without a window (clean runs) every epoch counts and latency is
    measured from t = 0.
    """
    if window is None:
        start, inside = 0.0, list(records)
    else:
        start = window.start
        inside = [r for r in records if window.contains(r.t)]
    first = next((r for r in records if r.flagged and r.t >= start - 1e-9), None)
    peak = max((r.statistic for r in records), default=0.0)
    frac = sum(r.flagged for r in inside) / len(inside) if inside else 0.0
    return DetectionReport(
        detected=first is not None,
        latency=None if first is None else first.t - start,
        peak_statistic=peak,
        flagged_fraction=frac,
    )


def write_records_csv(records: dict[str, Sequence[DetectionRecord]], path) -> None:
    """Long format: t, detector, statistic, flagged."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "detector", "statistic", "flagged"])
        for name in sorted(records):
            for r in records[name]:
                w.writerow([f"{r.t:.9g}", name, f"{r.statistic:.9g}", int(r.flagged)])
