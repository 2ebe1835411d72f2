"""Event-level Monte Carlo of the pulsed coincidence experiment.

Per pulse the pair count is Poisson; each pair produces a joint
two-arm outcome whose unconditional distribution is

    P(both click)   = (1 + V cos 2 phi) / 4
    P(t only)       = P(r only) = 1/2 - P(both)
    P(neither)      = (1 + V cos 2 phi) / 4

before efficiency thinning.  This is the minimal per-pair distribution
with marginals 1/2 per arm whose detection rates converge exactly to
singles eta/2 R0 and coincidences (eta_t eta_r/4) R0 (1 + V cos 2 phi);
the beamsplitter post-selection and bunched-pair bookkeeping are folded
into it.  Uncorrelated background counts are Poisson per arm.  The TAC
takes t detections as starts: a start opens a single non-retriggerable
window, the first r detection inside it counts as the coincidence, and
starts arriving during an open window are ignored.

Every acquisition owns a counter-based random stream derived from
(seed, angle index, acquisition index), so results are independent of
worker scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (PI, Angle, CountRecord, DetectionEfficiency,
                   ExperimentConfig, scan_grid)
from .errors import DomainError
from .qm import AnalyzerSetting

BASE_ANALYZER = PI / 4  # both polarizers referenced to pi/4


@dataclass(frozen=True)
class PulseTrainConfig:
    repetition_rate: float
    pairs_per_pulse_mean: float
    duration_s: float

    def __post_init__(self):
        if self.pairs_per_pulse_mean < 0:
            raise DomainError("pairs_per_pulse_mean must be >= 0")
        if self.duration_s * self.repetition_rate >= 2**63:
            raise DomainError("pulse count overflows a 64-bit counter")


@dataclass(frozen=True)
class DetectorModel:
    eta: DetectionEfficiency
    dark_rate: float = 0.0
    dead_time_ns: float = 0.0

    def __post_init__(self):
        if self.dark_rate < 0:
            raise DomainError("dark_rate must be >= 0")
        if self.dead_time_ns < 0:
            raise DomainError("dead_time_ns must be >= 0")


@dataclass(frozen=True)
class TacModel:
    window_ns: float
    start_arm: str = "t"
    stop_arm: str = "r"

    def __post_init__(self):
        if self.window_ns <= 0:
            raise DomainError("window_ns must be > 0")


@dataclass(frozen=True)
class SimulatedRun:
    """All acquisitions for one analyzer setting (or the background)."""

    records: tuple[CountRecord, ...]
    config: ExperimentConfig
    seed: int
    label: str = "signal"
    angle: float | None = None   # phi relative to the fixed t analyzer


def _accept_starts(starts: np.ndarray, window: float) -> np.ndarray:
    """Greedy non-retriggerable window opening over sorted start times."""
    m = starts.size
    if m < 2:
        return starts
    gaps = np.diff(starts)
    close = gaps < window
    if not close.any():
        return starts
    keep = np.ones(m, dtype=bool)
    # Greedy acceptance only propagates inside maximal runs of close
    # gaps: an element whose left gap is >= window is always accepted.
    # Runs are rare at realistic rates, so the inner loop stays small.
    idx = np.flatnonzero(close)
    run_starts = idx[np.insert(np.diff(idx) > 1, 0, True)]
    run_ends = idx[np.append(np.diff(idx) > 1, True)]
    for gs, ge in zip(run_starts, run_ends):
        last = starts[gs]  # first element of the cluster, always accepted
        for j in range(gs + 1, ge + 2):
            if starts[j] < last + window:
                keep[j] = False
            else:
                last = starts[j]
    return starts[keep]


def _tac_counts(t_times: np.ndarray, r_times: np.ndarray,
                window_s: float) -> tuple[int, int]:
    """(valid_starts, coincidences) from sorted detection times."""
    starts = _accept_starts(np.sort(t_times), window_s)
    stops = np.sort(r_times)
    if starts.size == 0 or stops.size == 0:
        return int(starts.size), 0
    pos = np.searchsorted(stops, starts, side="left")
    inside = pos < stops.size
    hits = np.zeros(starts.size, dtype=bool)
    hits[inside] = stops[pos[inside]] < starts[inside] + window_s
    return int(starts.size), int(np.count_nonzero(hits))


def _rng_for(seed, angle_index: int = 0, acq_index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(angle_index), int(acq_index)])
    return np.random.default_rng(ss)


def _simulate_one(cfg: ExperimentConfig, phi: float, rng: np.random.Generator,
                  label: str = "signal") -> CountRecord:
    T = cfg.acquisition_duration_s
    period = 1.0 / cfg.repetition_rate
    n_pulses = int(T * cfg.repetition_rate)
    window_s = cfg.window_ns * 1e-9

    t_parts, r_parts = [], []
    n_pairs = 0
    if cfg.pair_rate_R0 > 0.0 and label == "signal":
        n_pairs = rng.poisson(cfg.pair_rate_R0 * T)
    if n_pairs > 0:
        pulse_idx = rng.integers(0, n_pulses, size=n_pairs)
        p11 = (1.0 + cfg.state_visibility_V * math.cos(2.0 * phi)) / 4.0
        u = rng.random(n_pairs)
        both = u < p11
        t_only = (~both) & (u < 0.5)
        r_only = (~both) & (~t_only) & (u < 1.0 - p11)
        t_hit = both | t_only
        r_hit = both | r_only
        t_det = t_hit & (rng.random(n_pairs) < cfg.eta_t.eta)
        r_det = r_hit & (rng.random(n_pairs) < cfg.eta_r.eta)
        times = pulse_idx * period
        t_parts.append(times[t_det])
        r_parts.append(times[r_det])
    if cfg.background_rate > 0.0:
        for parts in (t_parts, r_parts):
            n_bg = rng.poisson(cfg.background_rate * T)
            parts.append(rng.uniform(0.0, T, size=n_bg))

    t_times = np.concatenate(t_parts) if t_parts else np.empty(0)
    r_times = np.concatenate(r_parts) if r_parts else np.empty(0)
    valid_starts, coincidences = _tac_counts(t_times, r_times, window_s)
    return CountRecord(singles_t=int(t_times.size), singles_r=int(r_times.size),
                       coincidences=coincidences, valid_starts=valid_starts,
                       duration_s=T, label=label)


def simulate_acquisition(cfg: ExperimentConfig, setting: AnalyzerSetting,
                         seed) -> CountRecord:
    """One signal acquisition at the given analyzer setting."""
    phi = setting.phi.radians
    return _simulate_one(cfg, phi, _rng_for(seed), label="signal")


def simulate_background_run(cfg: ExperimentConfig, seed) -> CountRecord:
    """One acquisition with pair generation disabled (pump rotated):
    only background/dark processes contribute."""
    return _simulate_one(cfg, 0.0, _rng_for(seed), label="background")


def simulate_scan(cfg: ExperimentConfig, n: int, seed: int,
                  workers: int = 1) -> tuple[list[SimulatedRun], SimulatedRun]:
    """Full protocol: the t analyzer fixed at pi/4, the r analyzer
    stepped through pi/4 + phi_j over the n-point grid, cfg.acquisitions
    acquisitions per step, plus one background run.

    Deterministic in (cfg, n, seed) regardless of worker count.
    """
    if n < 4:
        raise DomainError(f"simulate_scan needs n >= 4, got {n}")
    grid = scan_grid(n)
    jobs = []  # (angle_index, acq_index, phi, label)
    for ai, phi in enumerate(grid):
        for qi in range(cfg.acquisitions):
            jobs.append((ai, qi, phi, "signal"))
    for qi in range(cfg.acquisitions):
        jobs.append((n, qi, 0.0, "background"))

    def run(job):
        ai, qi, phi, label = job
        rng = _rng_for(seed, ai, qi)
        return _simulate_one(cfg, phi, rng, label=label)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    by_angle: dict[int, list[CountRecord]] = {i: [] for i in range(n + 1)}
    for job, rec in zip(jobs, results):
        by_angle[job[0]].append(rec)
    signal = [SimulatedRun(records=tuple(by_angle[i]), config=cfg, seed=seed,
                           label="signal", angle=grid[i])
              for i in range(n)]
    background = SimulatedRun(records=tuple(by_angle[n]), config=cfg,
                              seed=seed, label="background", angle=None)
    return signal, background
