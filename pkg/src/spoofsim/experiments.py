"""Seed-ensemble experiments with pass/fail verdicts.

Each function runs one study on the shipped presets and returns an
:class:`Outcome` carrying the measured numbers and whether the expected
trend holds.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import harness as h
from . import metrics
from .ekf import gain_simplified_check

TAU = 11.1


@dataclass
class Outcome:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        detail = ", ".join(f"{k}={_short(v)}" for k, v in self.values.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {detail}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def sign_test_p(wins: int, n: int) -> float:
    """One-sided exact binomial p-value of at least ``wins`` successes out of ``n``."""
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0**n


def _peak_after(r: h.RunResult) -> float:
    k0 = int(round(r.window.start * 160))
    return float(r.metrics.loc_err[k0:].max())


# ---------------------------------------------------------------------------


def calibration(seeds: Sequence[int] = range(100), limit: float = 0.07) -> Outcome:
    runs = h.run_many(h.preset("calibration"), seeds)
    rate = h.false_alarm_rate(runs, TAU)
    run_rate = float(np.mean([r.reports["chi2"].detected for r in runs]))
    return Outcome("clean-run calibration", rate <= limit,
                   {"epoch_exceed_rate": rate, "limit": limit, "runs_with_alarm": run_rate})


def paired(prefix: str, seeds: Sequence[int]):
    out = {}
    for motion in ("straight", "circle"):
        out[motion] = h.run_many(h.preset(f"{prefix}_{motion}"), seeds)
    return out


def finding1(seeds: Sequence[int] = range(30), alpha: float = 0.05) -> Outcome:
    runs = paired("finding1_bias", seeds)
    s = np.array([_peak_after(r) for r in runs["straight"]])
    c = np.array([_peak_after(r) for r in runs["circle"]])
    wins = int(np.sum(c > s))
    p = sign_test_p(wins, len(s))
    return Outcome("finding 1: position bias hurts more while turning",
                   bool(c.mean() > s.mean() and p < alpha),
                   {"peak_straight": float(s.mean()), "peak_circle": float(c.mean()),
                    "circle_wins": wins, "n": len(s), "sign_test_p": p})


def finding2(seeds: Sequence[int] = range(30), rel_tol: float = 0.25) -> Outcome:
    vel = paired("finding2_vel", seeds)
    pos = paired("finding2_pos", seeds)
    vs = np.mean([r.metrics.chi_max for r in vel["straight"]])
    vc = np.mean([r.metrics.chi_max for r in vel["circle"]])
    ps = np.mean([r.metrics.chi_max for r in pos["straight"]])
    pc = np.mean([r.metrics.chi_max for r in pos["circle"]])
    rel = abs(pc - ps) / ps
    return Outcome("finding 2: turning hides velocity spoofing",
                   bool(vc < vs and rel <= rel_tol),
                   {"vel_chi_straight": float(vs), "vel_chi_circle": float(vc),
                    "pos_chi_straight": float(ps), "pos_chi_circle": float(pc), "pos_rel_diff": float(rel)})


def stealth(seeds: Sequence[int] = range(30), within: int = 5) -> Outcome:
    vals, ok = {}, True
    for traj in h.MISSIONS:
        ssd = h.run_many(h.preset(f"ssd_{traj}"), seeds)
        frac = float(np.mean([r.chi2.max() < TAU for r in ssd]))
        vals[f"ssd_stealthy_{traj}"] = frac
        ok &= frac >= 0.90
        for base in ("bias", "mult"):
            runs = h.run_many(h.preset(f"{base}_{traj}"), seeds)
            hit = float(np.mean([_flagged_within(r, within) for r in runs]))
            vals[f"{base}_caught_{traj}"] = hit
            ok &= hit >= 0.95
    return Outcome("SSD stealth vs baselines", bool(ok), vals)


def _flagged_within(r: h.RunResult, epochs: int) -> bool:
    start = r.window.start
    return any(rec.flagged for rec in r.detections["chi2"] if start - 1e-9 <= rec.t < start + epochs - 1e-9)


def ablation(seeds: Sequence[int] = range(30)) -> Outcome:
    rows = {r["strategy"]: r for r in h.ablation_suite(h.preset("ablation_cca"), seeds)}
    b, spa, sva, cca = (rows[k] for k in ("Baseline", "SPA", "SVA", "CCA"))
    checks = {
        "base_lt_spa_n": b["ade_n"] < spa["ade_n"],
        "base_lt_sva_e": b["ade_e"] < sva["ade_e"],
        "cca_n_ge_spa_n": cca["ade_n"] >= spa["ade_n"],
        "cca_e_ge_sva_e": cca["ade_e"] >= sva["ade_e"],
        "cca_total_ge_1.5x": cca["ade"] >= 1.5 * b["ade"],
    }
    vals = {f"{k}_ade_ne": [rows[k]["ade_n"], rows[k]["ade_e"]] for k in rows}
    vals.update(checks)
    return Outcome("ablation ordering", all(checks.values()), vals)


def effectiveness(seeds: Sequence[int] = range(30)) -> Outcome:
    vals, ok = {}, True
    for traj in h.MISSIONS:
        clean = h.run_many(h.preset(f"clean_{traj}"), seeds)
        att = h.run_many(h.preset(f"ssd_{traj}"), seeds)
        for m, need in (("ade", 3.0), ("fde", 3.0), ("apde", 2.5)):
            ratio = np.mean([getattr(r.metrics, m) for r in att]) / np.mean([getattr(r.metrics, m) for r in clean])
            vals[f"{m}_x_{traj}"] = float(ratio)
            ok &= ratio >= need
    return Outcome("SSD effectiveness", bool(ok), vals)


SWEEP_THETA = (5.0, 10.0, 20.0, 40.0)
SWEEP_ALPHA = (5.0, 8.0, 11.0, 13.0, 15.0)
SWEEP_PHI = (0.02, 0.04, 0.08)


def sweep(seeds: Sequence[int] = range(10)) -> Outcome:
    base = h.preset("sweep_base").with_seeds(seeds)
    rows = h.sweep_parameters(h.SweepGrid(base, SWEEP_THETA, SWEEP_ALPHA, SWEEP_PHI))
    chi = {(r["theta"], r["alpha"], r["phi"]): r["mean_chi_max"] for r in rows}
    inversions = 0
    theta_ok = True
    for al in SWEEP_ALPHA:
        for ph in SWEEP_PHI:
            line = [chi[(th, al, ph)] for th in SWEEP_THETA]
            inv = sum(b < a for a, b in zip(line, line[1:]))
            inversions = max(inversions, inv)
            theta_ok &= inv <= 1
    alpha_line = [chi[(20.0, al, 0.08)] for al in SWEEP_ALPHA]
    alpha_ok = all(b < a for a, b in zip(alpha_line, alpha_line[1:]))
    phi_line = np.array([chi[(20.0, 11.0, ph)] for ph in SWEEP_PHI])
    spread = float(np.max(np.abs(phi_line / phi_line.mean() - 1.0)))
    return Outcome("sweep trends", bool(theta_ok and alpha_ok and spread <= 0.30),
                   {"max_theta_inversions": inversions, "alpha_line": alpha_line,
                    "phi_line": phi_line.tolist(), "phi_spread": spread})


def swap(seeds: Sequence[int] = range(30)) -> Outcome:
    swapped = h.run_many(h.preset("ablation_swap"), seeds)
    canon = h.run_many(h.preset("ablation_cca"), seeds)
    early = float(np.mean([
        r.reports["chi2"].detected and r.window.start + r.reports["chi2"].latency < h.LINEAR_PHASE_END
        for r in swapped
    ]))
    canon_clean = float(np.mean([not r.reports["chi2"].detected for r in canon]))
    return Outcome("swapped branches are detected", bool(early >= 0.90 and canon_clean == 1.0),
                   {"swap_caught_in_linear_phase": early, "canonical_never_flagged": canon_clean})


def metric_oracles(n: int = 1000, seed: int = 7, tol: float = 1e-12) -> Outcome:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(1, 12))
        est = rng.normal(0, 10, (k, 3))
        tru = rng.normal(0, 10, (k, 3))
        wp = sorted(set(rng.integers(0, k, size=int(rng.integers(1, k + 1))).tolist()))
        d = [math.sqrt((est[i, 0] - tru[i, 0]) ** 2 + (est[i, 1] - tru[i, 1]) ** 2) for i in range(k)]
        ref_ade = math.sqrt(sum(x * x for x in d) / k)
        ref_apde = sum(d[i] for i in wp) / len(wp)
        worst = max(worst, abs(metrics.ade(est, tru) - ref_ade), abs(metrics.fde(est, tru) - d[-1]),
                    abs(metrics.apde(est, tru, wp) - ref_apde))
    a = _digest(h.preset("ssd_straight"), 3)
    b = _digest(h.preset("ssd_straight"), 3)
    return Outcome("metric oracles and determinism", bool(worst <= tol and a == b),
                   {"max_abs_err": worst, "repeat_identical": a == b})


def _digest(cfg, seed) -> str:
    r = h.run_scenario(cfg, seed)
    blob = h.render([r], "csv", h.RUN_COLUMNS).encode() + r.trace.states.tobytes()
    return hashlib.sha256(blob).hexdigest()


def filter_correctness(n_gain: int = 100, seed: int = 11) -> Outcome:
    from . import ekf
    rng = np.random.default_rng(seed)
    cfg = h.preset("clean_u_shape")
    traj = cfg.trajectory.build()
    fcfg = dataclasses.replace(cfg.filter.filter_config(cfg.sensors), record_covariance=True)
    trace = ekf.run_filter(h.synthesize(traj, cfg.sensors, 0), traj.sample(0), fcfg)
    P = trace.step_cov
    asym = float(np.max(np.abs(P - np.transpose(P, (0, 2, 1)))))
    min_eig = float(min(np.linalg.eigvalsh(p).min() for p in P[::16]))
    qnorm = float(np.max(np.abs(np.linalg.norm(trace.states[:, :4], axis=1) - 1.0)))
    jac = 0.0
    for _ in range(100):
        x = _random_state(rng)
        gyro, accel = rng.normal(0, 1, 3), rng.normal(0, 3, 3) + [0, 0, -9.8]
        F = ekf.transition_jacobian(x, gyro, accel, 1 / 160)
        jac = max(jac, float(np.max(np.abs(F - numeric_jacobian(x, gyro, accel, 1 / 160)))))
    gain = 0.0
    for _ in range(n_gain):
        Pp, Q, R = (_random_psd(rng, 5) for _ in range(3))
        dense = (Pp + Q) @ np.linalg.inv(Pp + Q + R)
        gain = max(gain, float(np.max(np.abs(gain_simplified_check(Pp, Q, R) - dense))))
    ok = asym <= 1e-9 and min_eig >= -1e-9 and qnorm <= 1e-6 and jac <= 1e-5 and gain <= 1e-10
    return Outcome("filter correctness", bool(ok),
                   {"max_asym": asym, "min_eig": min_eig, "quat_norm_err": qnorm,
                    "jacobian_err": jac, "gain_err": gain})


def _random_state(rng):
    from . import ekf
    x = np.zeros(ekf.N_STATES)
    q = rng.normal(size=4)
    x[:4] = q / np.linalg.norm(q)
    x[4:10] = rng.normal(0, 10, 6)
    x[10:16] = rng.normal(0, 1e-3, 6)
    x[16:22] = rng.normal(0, 0.5, 6)
    return x


def _random_psd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + 1e-3 * np.eye(n)


def numeric_jacobian(x, gyro, accel, dt, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of the raw transition."""
    from . import ekf
    n = x.shape[0]
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        J[:, j] = (ekf.mechanize(x + e, gyro, accel, dt) - ekf.mechanize(x - e, gyro, accel, dt)) / (2 * step)
    return J


ALL: dict[str, Callable[[], Outcome]] = {
    "1": filter_correctness,
    "2": calibration,
    "3": finding1,
    "4": finding2,
    "5": stealth,
    "6": ablation,
    "7": effectiveness,
    "8": sweep,
    "9": swap,
    "10": metric_oracles,
}
