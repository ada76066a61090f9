"""Branched-growth forward-flux sampling (BG-FFS).

Everything works in the normalized coordinate ``z = sign * lambda`` where
``sign`` is the ladder direction, so transitions always run toward larger z.
Conventions (in z):

* basin A: ``z <= z_0``; leaving A means ``z > z_0``
* interface ``i >= 1`` is reached when ``z >= z_i``; basin B is ``z >= z_n``
* a branch fails when it re-enters basin A
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, InsufficientFlux, SimulationDiverged
from .process import EV_HIGH, EV_LOW, ProcessModel, ProcessState

log = logging.getLogger(__name__)

FLUX_BLOCK = 8192


@dataclass(frozen=True)
class InterfaceLadder:
    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if len(v) < 2:
            raise ConfigError("an interface ladder needs at least lambda_0 and lambda_n")
        d = np.diff(v)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("interfaces must be strictly monotone")

    @classmethod
    def uniform(cls, lambda_0: float, lambda_n: float, n: int) -> "InterfaceLadder":
        if n < 1:
            raise ConfigError("need at least one interface interval")
        return cls(tuple(np.linspace(lambda_0, lambda_n, n + 1)))

    @property
    def n(self) -> int:
        return len(self.values) - 1

    @property
    def sign(self) -> int:
        return 1 if self.values[-1] > self.values[0] else -1

    def z(self, i: int) -> float:
        return self.sign * self.values[i]


@dataclass(frozen=True)
class BranchConfig:
    m: tuple
    n_seeds: int = 1
    max_steps: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if any(v < 1 for v in self.m):
            raise ConfigError("all branch counts m_i must be >= 1")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")

    @classmethod
    def constant(cls, m: int, n: int, **kw) -> "BranchConfig":
        return cls(tuple([m] * n), **kw)


@dataclass
class CrossingRecord:
    id: int
    interface: int
    x: np.ndarray
    t: float
    parent: int | None
    seed: int
    children: list = field(default_factory=list)
    n_trials: int = 0
    n_success: int = 0
    n_unresolved: int = 0
    p_B: float | None = None
    response_value: float | None = None
    path: tuple = ()


@dataclass
class FfsResult:
    r0: float
    p_seeds: list
    forest: list
    ladder: InterfaceLadder
    m: tuple
    response_name: str | None = None
    response_value: float | None = None
    time_in_a: float = 0.0
    n_flux_crossings: int = 0
    state_names: tuple = ()

    @property
    def p_mean(self) -> float:
        return float(np.mean(self.p_seeds))

    @property
    def r_mean(self) -> float:
        return self.r0 * self.p_mean

    def crossings_at(self, i: int) -> list:
        return [c for c in self.forest if c.interface == i]

    def summary(self) -> dict:
        counts = [len(self.crossings_at(i)) for i in range(self.ladder.n + 1)]
        return {
            "response_name": self.response_name,
            "response_value": self.response_value,
            "r_0": self.r0,
            "p_mean": self.p_mean,
            "r_mean": self.r_mean,
            "p_seeds": list(self.p_seeds),
            "n_seeds": len(self.p_seeds),
            "crossings_per_interface": counts,
            "time_in_basin_a": self.time_in_a,
            "flux_crossings": self.n_flux_crossings,
            "interfaces": list(self.ladder.values),
            "m": list(self.m),
        }


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a labelled sub-task."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def initial_flux(n_crossings: int, time_in_a: float) -> float:
    if time_in_a <= 0:
        raise InsufficientFlux("no time spent in basin A")
    return n_crossings / time_in_a


# --------------------------------------------------------------------------
# initial crossings


def collect_initial_crossings(model: ProcessModel, ladder: InterfaceLadder, rng: np.random.Generator,
                              target_count: int, initial: ProcessState | None = None,
                              burn_in_steps: int = 0, max_steps: int = 50_000_000,
                              block: int = FLUX_BLOCK):
    """Run a long trajectory in basin A and save states at outward crossings of lambda_0.

    Time is accumulated only for steps that start strictly inside basin A.
    If the trajectory reaches basin B it is restarted from the (burnt-in)
    initial state, continuing on the same noise stream.

    Returns ``(crossings, r0, time_in_a)`` where ``crossings`` is a list of
    ``(state_vector, t)``.
    """
    sign = ladder.sign
    z0, zn = ladder.z(0), ladder.z(ladder.n)
    start = (initial or model.initial_state()).x.copy()
    t = 0.0
    if burn_in_steps:
        traj = model.simulate_array(start, rng, burn_in_steps)
        start = traj[-1].copy()
    x = start.copy()
    li = model.lambda_index
    crossings = []
    steps_in_a = 0
    used = 0
    buf = np.empty((block + 1, x.shape[0]))
    while used < max_steps and len(crossings) < target_count:
        noise = model._draw(rng, min(block, max_steps - used))
        pos = 0
        while pos < noise.shape[0] and len(crossings) < target_count:
            seg = noise[pos:]
            out = buf[: seg.shape[0] + 1]
            steps, ev = model._run(x, seg, sign, -math.inf, zn, False, out)
            if ev not in (0, EV_HIGH):
                raise SimulationDiverged("diverged while collecting initial crossings", out[steps].copy())
            z = sign * out[: steps + 1, li]
            in_a = z[:-1] <= z0
            cross = np.flatnonzero(in_a & (z[1:] > z0))
            need = target_count - len(crossings)
            if cross.size >= need:
                last = cross[need - 1]
                steps_in_a += int(np.count_nonzero(in_a[: last + 1]))
                for k in cross[:need]:
                    crossings.append((out[k + 1].copy(), t + (k + 1) * model.dt))
                break
            steps_in_a += int(np.count_nonzero(in_a))
            for k in cross:
                crossings.append((out[k + 1].copy(), t + (k + 1) * model.dt))
            t += steps * model.dt
            pos += steps
            if ev == EV_HIGH:
                x[:] = start
        used += noise.shape[0]
    time_in_a = steps_in_a * model.dt
    if not crossings:
        raise InsufficientFlux(f"no outward crossing of lambda_0={ladder.values[0]} within {max_steps} steps")
    if len(crossings) < target_count:
        log.warning("only %d of %d initial crossings collected", len(crossings), target_count)
    return crossings, initial_flux(len(crossings), time_in_a), time_in_a


# --------------------------------------------------------------------------
# branch growth


def grow_branches(model: ProcessModel, parent: CrossingRecord, m_i: int, ladder: InterfaceLadder,
                  master_seed: int, key: tuple = (), max_steps: int = 1_000_000):
    """Fire ``m_i`` continuations from ``parent`` toward the next interface.

    Returns ``(children, n_failed, n_unresolved)``. ``children`` holds
    ``(x, t, branch_index)`` tuples for the successful branches, in branch
    order; unresolved branches hit ``max_steps`` and are counted as failures.
    """
    i = parent.interface
    if i >= ladder.n:
        raise ValueError("cannot grow branches from the final interface")
    sign = ladder.sign
    lo, hi = ladder.z(0), ladder.z(i + 1)
    children = []
    failed = 0
    unresolved = 0
    for b in range(m_i):
        rng = stream(master_seed, *key, *parent.path, b)
        x = parent.x.copy()
        steps, ev = model.advance(x, rng, max_steps, sign, lo, hi)
        if ev == EV_HIGH:
            children.append((x, parent.t + steps * model.dt, b))
        else:
            failed += 1
            if ev != EV_LOW:
                unresolved += 1
    if unresolved:
        log.warning("%d branches from crossing %d hit max_steps and count as failures", unresolved, parent.id)
    return children, failed, unresolved


def _grow_tree(model, ladder, config, master_seed, key, seed_index, x, t):
    """Grow the full tree for one lambda_0 seed; ids are local (0 = root)."""
    root = CrossingRecord(0, 0, x, t, None, seed_index, path=(seed_index,))
    tree = [root]
    frontier = [root]
    for i in range(ladder.n):
        nxt = []
        for rec in frontier:
            kids, failed, unresolved = grow_branches(model, rec, config.m[i], ladder, master_seed, key,
                                                     config.max_steps)
            rec.n_trials = config.m[i]
            rec.n_success = len(kids)
            rec.n_unresolved = unresolved
            for xk, tk, b in kids:
                child = CrossingRecord(len(tree), i + 1, xk, tk, rec.id, seed_index, path=rec.path + (b,))
                rec.children.append(child.id)
                tree.append(child)
                nxt.append(child)
        frontier = nxt
    return tree


def _grow_tree_job(args):
    return _grow_tree(*args)


# --------------------------------------------------------------------------
# probabilities


def transition_probability(tree: Sequence[CrossingRecord], m: Sequence[int], n: int) -> float:
    """Fraction of the ``prod(m)`` possible branch sequences that reach basin B."""
    reached = sum(1 for c in tree if c.interface == n)
    return reached / math.prod(m)


def committer_probabilities(forest: Sequence[CrossingRecord], m: Sequence[int], n: int) -> None:
    """Fill ``p_B`` on every record by the backward recursion over interfaces.

    Basin-B crossings carry 1, failed branches 0. Sums are done in exact
    rationals so the root value equals the direct transition probability.
    """
    by_id = {c.id: c for c in forest}
    exact = {}
    for c in sorted(forest, key=lambda c: -c.interface):
        if c.interface == n:
            exact[c.id] = Fraction(1)
        else:
            exact[c.id] = sum((exact[k] for k in c.children), Fraction(0)) / m[c.interface]
    for cid, v in exact.items():
        by_id[cid].p_B = float(v)


def run_bgffs(model: ProcessModel, ladder: InterfaceLadder, config: BranchConfig, master_seed: int,
              response_name: str | None = None, stream_id: int = 0, initial: ProcessState | None = None,
              burn_in_steps: int = 0, flux_max_steps: int = 50_000_000, jobs: int = 1) -> FfsResult:
    """Full BG-FFS pipeline for one response-action value (already set in ``model``)."""
    if len(config.m) != ladder.n:
        raise ConfigError(f"need {ladder.n} branch counts, got {len(config.m)}")
    response_value = model.response_value(response_name) if response_name else None
    rng = stream(master_seed, 0, stream_id)
    seeds, r0, time_in_a = collect_initial_crossings(model, ladder, rng, config.n_seeds, initial,
                                                     burn_in_steps, flux_max_steps)
    key = (1, stream_id)
    jobs_args = [(model, ladder, config, master_seed, key, s, x, t) for s, (x, t) in enumerate(seeds)]
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            trees = list(ex.map(_grow_tree_job, jobs_args))
    else:
        trees = [_grow_tree_job(a) for a in jobs_args]

    forest = []
    p_seeds = []
    for tree in trees:
        offset = len(forest)
        for rec in tree:
            rec.id += offset
            if rec.parent is not None:
                rec.parent += offset
            rec.children = [k + offset for k in rec.children]
            rec.response_value = response_value
        committer_probabilities(tree, config.m, ladder.n)
        p = transition_probability(tree, config.m, ladder.n)
        if tree[0].p_B != p:
            raise AssertionError("committer recursion disagrees with the direct transition probability")
        p_seeds.append(p)
        forest.extend(tree)
    return FfsResult(r0, p_seeds, forest, ladder, config.m, response_name, response_value, time_in_a,
                     len(seeds), model.state_names)


def run_sweep(model: ProcessModel, ladder: InterfaceLadder, config: BranchConfig, master_seed: int,
              response_name: str, values: Sequence[float], **kw) -> list:
    """One :func:`run_bgffs` per discrete response-action value."""
    results = []
    for k, v in enumerate(values):
        m = model.with_params(**{response_name: float(v)})
        try:
            results.append(run_bgffs(m, ladder, config, master_seed, response_name, stream_id=k, **kw))
        except InsufficientFlux as exc:
            raise InsufficientFlux(f"{response_name}={v}: {exc}") from None
    return results


# --------------------------------------------------------------------------
# export


def forest_rows(results: Sequence[FfsResult]):
    """Flatten results into CSV-ready dict rows with globally unique ids."""
    rows = []
    offset = 0
    for res in results:
        name = res.response_name or "response"
        for c in res.forest:
            row = {
                "interface_index": c.interface,
                "crossing_id": c.id + offset,
                "parent_id": "" if c.parent is None else c.parent + offset,
                "p_B": c.p_B,
            }
            for nm, v in zip(res.state_names, c.x):
                row[nm] = float(v)
            row[name] = res.response_value
            rows.append(row)
        offset += len(res.forest)
    return rows


def write_forest_csv(results: Sequence[FfsResult], path) -> None:
    rows = forest_rows(results)
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def write_summary_json(results: Sequence[FfsResult], path) -> None:
    with open(path, "w") as fh:
        json.dump([r.summary() for r in results], fh, indent=2)
