"""Multi-level alarms driven by on-line committer-probability predictions.

A trained model is called every ``call_freq`` integration steps of a live
noisy simulation. Each prediction (clamped to [0, 1]) feeds a state machine
with one alarm level per threshold:

* level k activates when the prediction crosses its threshold upward
  (previous call below, current call at or above);
* an active level-k episode escalates when level k+1 activates;
* an active episode deactivates when the prediction falls below its threshold;
* for the highest level, escalation means the true state entering basin B.

Response actions are never applied, so every model sees the same state path
for a given simulation seed.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, SimulationDiverged
from .process import EV_HIGH, BasinSpec, ProcessModel

ESCALATED = "escalated"
DEACTIVATED = "deactivated"
TERMINAL = "reached-terminal-basin"
ENDED = "sim-ended"


@dataclass(frozen=True)
class AlarmSpec:
    thresholds: tuple = (0.2, 0.5)

    def __post_init__(self):
        th = tuple(float(v) for v in self.thresholds)
        if not th:
            raise ConfigError("need at least one alarm level")
        if any(not 0 < v < 1 for v in th) or any(b <= a for a, b in zip(th, th[1:])):
            raise ConfigError("thresholds must be strictly increasing inside (0, 1)")
        object.__setattr__(self, "thresholds", th)

    @property
    def n_levels(self) -> int:
        return len(self.thresholds)


def theoretical_probs(spec: AlarmSpec) -> list:
    """Escalation probability implied by the thresholds: ``p_k / p_{k+1}``, last level against 1."""
    th = spec.thresholds
    return [th[k] / (th[k + 1] if k + 1 < len(th) else 1.0) for k in range(len(th))]


@dataclass
class DeploymentConfig:
    n_sim: int = 10
    t_sim: float = 3000.0
    call_freq: int = 200
    seeds: tuple = ()
    response_name: str | None = None
    response_value: float | None = None
    initial: tuple | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.call_freq < 1:
            raise ConfigError("call_freq must be >= 1")
        if self.n_sim < 1:
            raise ConfigError("n_sim must be >= 1")
        if not self.t_sim > 0:
            raise ConfigError("t_sim must be positive")
        if self.seeds and len(self.seeds) != self.n_sim:
            raise ConfigError(f"need {self.n_sim} seeds, got {len(self.seeds)}")

    def seed_list(self, master_seed: int = 0) -> list:
        """Explicit seeds if given, otherwise ``n_sim`` seeds spawned from ``master_seed``."""
        if self.seeds:
            return [int(s) for s in self.seeds]
        ss = np.random.SeedSequence(master_seed).spawn(self.n_sim)
        return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss]


@dataclass
class AlarmEpisode:
    sim: int
    level: int
    t_activate: float
    resolution: str | None = None
    t_resolve: float | None = None

    @property
    def escalated(self) -> bool:
        return self.resolution in (ESCALATED, TERMINAL)


@dataclass
class AlarmMetrics:
    n_alarms: list
    n_escalated: list
    p_measured: list
    p_theoretical: list
    delta_p: float
    total_alarms: int
    t_deploy: float
    n_diverged: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class AlarmTracker:
    """Alarm state machine for one simulation."""

    def __init__(self, spec: AlarmSpec, sim: int = 0):
        self.spec = spec
        self.sim = sim
        self.episodes: list = []
        self._open: list = [None] * spec.n_levels
        self._prev = -math.inf

    def _resolve(self, k, how, t):
        ep = self._open[k]
        ep.resolution, ep.t_resolve = how, t
        self._open[k] = None

    def update(self, t: float, p: float) -> None:
        th = self.spec.thresholds
        for k in range(len(th)):
            if self._open[k] is not None and p < th[k]:
                self._resolve(k, DEACTIVATED, t)
        for k in range(len(th)):
            if self._open[k] is None and self._prev < th[k] <= p:
                ep = AlarmEpisode(self.sim, k + 1, t)
                self.episodes.append(ep)
                self._open[k] = ep
                if k > 0 and self._open[k - 1] is not None:
                    self._resolve(k - 1, ESCALATED, t)
        self._prev = p

    def enter_basin_b(self, t: float) -> None:
        last = self.spec.n_levels - 1
        for k in range(last + 1):
            if self._open[k] is not None:
                self._resolve(k, TERMINAL if k == last else ENDED, t)

    def finish(self, t: float) -> None:
        for k in range(self.spec.n_levels):
            if self._open[k] is not None:
                self._resolve(k, ENDED, t)

    @property
    def active_levels(self) -> list:
        return [k + 1 for k, ep in enumerate(self._open) if ep is not None]


def track(predictions: Sequence[float], spec: AlarmSpec, times: Sequence[float] | None = None,
          entered_b: bool = False) -> list:
    """Run the state machine over a prediction sequence; returns the episodes."""
    times = range(len(predictions)) if times is None else times
    tr = AlarmTracker(spec)
    t = 0.0
    for t, p in zip(times, predictions):
        tr.update(t, min(max(float(p), 0.0), 1.0))
    if entered_b:
        tr.enter_basin_b(t)
    tr.finish(t)
    return tr.episodes


# --------------------------------------------------------------------------
# deployment


def feature_columns(handle) -> list:
    cols = getattr(handle, "columns", None)
    if cols is None:
        cols = handle.preprocessor.columns
    return list(cols)


class _RowBuilder:
    def __init__(self, model: ProcessModel, columns, response_name, response_value):
        self.row = np.empty((1, len(columns)))
        self.pos, self.idx = [], []
        for j, c in enumerate(columns):
            if c == response_name:
                self.row[0, j] = response_value
            elif c in model.state_names:
                self.pos.append(j)
                self.idx.append(model.state_names.index(c))
            else:
                raise ConfigError(f"cannot build feature {c!r} from the process state")
        self.pos = np.array(self.pos, dtype=np.intp)
        self.idx = np.array(self.idx, dtype=np.intp)

    def __call__(self, x):
        self.row[0, self.pos] = x[self.idx]
        return self.row


@dataclass
class SimOutcome:
    sim: int
    episodes: list
    predict_time: float
    t_end: float
    entered_b: bool
    diverged: bool = False
    n_calls: int = 0
    predictions: list = field(default_factory=list)


def simulate_with_alarms(handle, model: ProcessModel, basins: BasinSpec, config: DeploymentConfig,
                         spec: AlarmSpec, seed: int, sim: int = 0, keep_predictions: bool = False) -> SimOutcome:
    """One deployment simulation; the noise stream depends on ``seed`` only."""
    rng = np.random.default_rng(seed)
    build = _RowBuilder(model, feature_columns(handle), config.response_name, config.response_value)
    x = np.array(config.initial if config.initial is not None else model.initial_state().x, dtype=np.float64)
    sign = float(basins.direction)
    hi = sign * basins.lambda_b
    n_steps = int(round(config.t_sim / model.dt))
    tracker = AlarmTracker(spec, sim)
    steps, spent, calls, entered = 0, 0.0, 0, False
    preds = []
    try:
        while steps < n_steps:
            chunk = min(config.call_freq, n_steps - steps)
            done, ev = model.advance(x, rng, chunk, sign, -math.inf, hi)
            steps += done
            t = steps * model.dt
            if ev == EV_HIGH:
                tracker.enter_basin_b(t)
                entered = True
                break
            if done == config.call_freq:
                t0 = time.perf_counter()
                p = float(handle.predict(build(x))[0])
                spent += time.perf_counter() - t0
                p = min(max(p, 0.0), 1.0) if math.isfinite(p) else 1.0
                calls += 1
                tracker.update(t, p)
                if keep_predictions:
                    preds.append(p)
    except SimulationDiverged:
        return SimOutcome(sim, [], spent, steps * model.dt, False, True, calls, preds)
    tracker.finish(steps * model.dt)
    return SimOutcome(sim, tracker.episodes, spent, steps * model.dt, entered, False, calls, preds)


def _sim_job(args):
    return simulate_with_alarms(*args)


@dataclass
class DeploymentResult:
    episodes: list
    t_deploy: float
    outcomes: list
    seeds: list

    @property
    def n_diverged(self) -> int:
        return sum(o.diverged for o in self.outcomes)


def run_deployment(handle, model: ProcessModel, basins: BasinSpec, config: DeploymentConfig,
                   spec: AlarmSpec = AlarmSpec(), master_seed: int = 0) -> DeploymentResult:
    """Run ``n_sim`` seeded simulations with the model in the loop.

    Episodes are pooled in simulation order. ``t_deploy`` is the total
    prediction wall time of simulation 0, always run in this process.
    """
    if config.response_name is not None:
        model = model.with_params(**{config.response_name: config.response_value})
    seeds = config.seed_list(master_seed)
    jobs = [(handle, model, basins, config, spec, s, i) for i, s in enumerate(seeds)]
    first = _sim_job(jobs[0])
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            rest = list(pool.map(_sim_job, jobs[1:]))
    else:
        rest = [_sim_job(j) for j in jobs[1:]]
    outcomes = [first, *rest]
    n_div = sum(o.diverged for o in outcomes)
    if n_div:
        warnings.warn(f"{n_div} deployment simulation(s) diverged and were excluded", stacklevel=2)
    episodes = [ep for o in outcomes for ep in o.episodes]
    return DeploymentResult(episodes, first.predict_time, outcomes, seeds)


# --------------------------------------------------------------------------
# metrics


def alarm_counts(episodes: Sequence[AlarmEpisode], n_levels: int) -> tuple:
    n = [0] * n_levels
    esc = [0] * n_levels
    for ep in episodes:
        n[ep.level - 1] += 1
        esc[ep.level - 1] += ep.escalated
    return n, esc


def measured_probs(episodes: Sequence[AlarmEpisode], n_levels: int) -> list:
    """Escalations over activations per level; ``None`` where a level never activated."""
    n, esc = alarm_counts(episodes, n_levels)
    return [e / a if a else None for a, e in zip(n, esc)]


def delta_p(theoretical: Sequence[float], measured: Sequence[float | None]) -> float:
    """Level-weighted absolute gap ``sum k * |p_theory - p_measured|``; undefined levels are skipped."""
    if len(theoretical) != len(measured):
        raise ValueError("theoretical and measured lists differ in length")
    total = 0.0
    for k, (pt, pm) in enumerate(zip(theoretical, measured), start=1):
        if pm is None:
            warnings.warn(f"alarm level {k} never activated; excluded from delta_p", stacklevel=2)
            continue
        total += k * abs(pt - pm)
    return total


def total_alarms(episodes: Sequence[AlarmEpisode]) -> int:
    return len(episodes)


def alarm_metrics(result: DeploymentResult, spec: AlarmSpec) -> AlarmMetrics:
    n, esc = alarm_counts(result.episodes, spec.n_levels)
    theory = theoretical_probs(spec)
    measured = measured_probs(result.episodes, spec.n_levels)
    return AlarmMetrics(n, esc, measured, theory, delta_p(theory, measured), total_alarms(result.episodes),
                        result.t_deploy, result.n_diverged)


def write_episode_log(episodes: Sequence[AlarmEpisode], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sim", "level", "t_activate", "resolution", "t_resolve"])
        for ep in episodes:
            w.writerow([ep.sim, ep.level, repr(ep.t_activate), ep.resolution, repr(ep.t_resolve)])
