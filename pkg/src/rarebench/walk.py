"""1-D biased random walk used as an exactly solvable test system.

Each step moves +1 with probability ``p_up`` and -1 otherwise. A reflecting
floor keeps the walk from drifting away inside basin A, which is needed for a
finite initial flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigError
from .process import ProcessModel, ProcessState


@numba.njit(cache=True)
def _walk_kernel(x0, p, noise, dt, sign, lo, hi, strict_hi, out):
    record = out.shape[0] > 0
    if record:
        out[0, 0] = x0[0]
    p_up = p[0]
    floor = p[1]
    n = noise.shape[0]
    for s in range(n):
        z = x0[0] + 1.0 if noise[s] < p_up else x0[0] - 1.0
        if z < floor:
            z = floor
        x0[0] = z
        if record:
            out[s + 1, 0] = z
        v = sign * z
        if v <= lo:
            return s + 1, -1
        if strict_hi:
            if v > hi:
                return s + 1, 1
        elif v >= hi:
            return s + 1, 1
    return n, 0


@dataclass(frozen=True)
class WalkParams:
    p_up: float = 0.45
    floor: float = -10.0
    start: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p_up <= 1:
            raise ConfigError("p_up must lie in [0, 1]")

    def to_array(self) -> np.ndarray:
        return np.array([self.p_up, self.floor])


class _NoNoise:
    std = 0.0
    mean = 0.0
    variance = 0.0


class RandomWalk(ProcessModel):
    name = "walk"
    state_names = ("z",)
    feature_names = ("z",)
    lambda_index = 0
    response_fields = ("p_up",)
    _kernel = staticmethod(_walk_kernel)

    def __init__(self, p_up: float = 0.45, floor: float = -10.0, start: float = 0.0,
                 params: WalkParams | None = None, noise=None, dt: float = 1.0):
        params = params or WalkParams(p_up, floor, start)
        super().__init__(params, _NoNoise(), dt)

    def with_params(self, **changes) -> "RandomWalk":
        from dataclasses import replace

        return RandomWalk(params=replace(self.params, **changes))

    def _draw(self, rng, n):
        return rng.random(n)

    def initial_state(self) -> ProcessState:
        return ProcessState(np.array([self.params.start]))


def gamblers_ruin(start: int, upper: int, p_up: float, lower: int = 0) -> float:
    """Probability that a walk from ``start`` hits ``upper`` before ``lower``."""
    n = upper - lower
    i = start - lower
    if p_up == 0.5:
        return i / n
    r = (1.0 - p_up) / p_up
    return (1.0 - r ** i) / (1.0 - r ** n)


def walk_committor_closed_form(z: float, lambda_a: float, lambda_b: float, p_up: float) -> float:
    """Committer of the integer walk: reach ``z >= lambda_b`` before ``z <= lambda_a``."""
    lo = math.floor(lambda_a)
    hi = math.ceil(lambda_b)
    return gamblers_ruin(int(z), hi, p_up, lo)
