"""Stochastic feedback-controlled CSTR models.

Two reactors are provided:

* ``ExothermicCSTR``: PI-controlled first-order exothermic reactor with noise
  on the feed concentration. State ``[C_A, T, T_C, e_I]``.
* ``PolystyreneCSTR``: dimensionless PID-controlled styrene polymerization
  reactor with noise on the monomer feed. State ``[x1, x2, x3, x4, I, e_prev]``
  where ``I`` is the integral of the setpoint error and ``e_prev`` the error at
  the previous step (used by the backward-difference derivative term).

Integration is explicit fixed-step RK4 with one noise draw held constant over
each step. The inner loops are numba kernels; every model exposes the same
``advance``/``simulate_array`` surface so the sampling engine can drive any of
them, including the 1-D random walk in :mod:`rarebench.walk`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numba
import numpy as np
from scipy.optimize import fsolve

from .errors import ConfigError, DomainError, SimulationDiverged

# event codes returned by the kernels
EV_NONE = 0
EV_LOW = -1
EV_HIGH = 1
EV_DIVERGED = 2

NOISE_CHUNK = 2048


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ExothermicParams:
    A: float = 30.0
    C_Af: float = 2.0
    c_p: float = 4.0
    c_pw: float = 4.0
    E: float = 1.50e4
    F_C0: float = 50.0
    k0: float = 17.038
    R: float = 8.314
    T_C0: float = 300.0
    T_f: float = 300.0
    T_SP: float = 800.0
    U: float = 100.0
    V_reactor: float = 10.0
    V_j: float = 10.0
    dH: float = -2.20e6
    rho: float = 1000.0
    rho_w: float = 1000.0
    K_C: float = 0.02
    tau_I: float = 25.0
    tau: float = 0.53

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "dH":
                if not v < 0:
                    raise ConfigError("dH must be negative (exothermic)")
            elif not v > 0:
                raise ConfigError(f"{f.name} must be positive, got {v}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True)
class PolystyreneParams:
    q_i: float = 0.1
    q_m: float = 0.4
    q_s: float = 0.48571
    q_c0: float = 1.5
    phi_d: float = 0.01688
    phi_p: float = 2.1956e7
    phi_t: float = 9.6583e12
    # activation energies are not tabulated; gamma_p is a typical styrene
    # value and gamma_d, gamma_t make the A.14 initial point an open-loop
    # steady state
    gamma_d: float = 4.1734
    gamma_p: float = 11.85
    gamma_t: float = 0.2595
    x_1f: float = 0.06769
    x_2f: float = 1.0
    x_3f: float = 0.0
    x_4f: float = -1.5
    delta: float = 0.74074
    delta_1: float = 0.90569
    delta_2: float = 0.37256
    beta: float = 13.17936
    f: float = 0.6
    x_3sp: float = 0.85
    K_c: float = 50.0
    tau_D: float = 0.9
    tau_I: float = 5.0

    def __post_init__(self):
        for name in ("phi_d", "phi_p", "phi_t", "gamma_p", "tau_I"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.f <= 1:
            raise ConfigError("initiator efficiency f must lie in (0, 1]")
        for name in ("q_i", "q_m", "q_s", "q_c0"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True)
class NoiseSpec:
    variance: float
    mean: float = 0.0

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigError("noise variance must be >= 0")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class BasinSpec:
    """Basin bounds on the order parameter.

    ``lambda_a`` bounds basin A and ``lambda_b`` bounds basin B. The transition
    direction is the sign of ``lambda_b - lambda_a``: basin A is everything on
    the far side of ``lambda_a`` and basin B everything at or past ``lambda_b``.
    """

    lambda_a: float
    lambda_b: float

    def __post_init__(self):
        if self.lambda_a == self.lambda_b:
            raise ConfigError("basin A and basin B bounds must differ")

    @property
    def direction(self) -> int:
        return 1 if self.lambda_b > self.lambda_a else -1


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_sim: float
    seed: int = 0
    stop_on_basin: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.t_sim < self.dt:
            raise ConfigError("t_sim must be >= dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_sim / self.dt))


@dataclass
class ProcessState:
    x: np.ndarray
    t: float = 0.0

    def copy(self) -> "ProcessState":
        return ProcessState(self.x.copy(), self.t)


# --------------------------------------------------------------------------
# right-hand sides (plain float math, shared by numba kernels and python API)

# ExothermicParams.to_array() index order
_A, _CAF, _CP, _CPW, _E, _FC0, _K0, _R, _TC0, _TF, _TSP, _U, _V, _VJ, _DH, _RHO, _RHOW, _KC, _TAUI, _TAU = range(20)


@numba.njit(cache=True)
def _exo_coolant(x, p):
    fc = p[_FC0] + p[_KC] * (x[1] - p[_TSP] - x[3] / p[_TAUI])
    if fc < 30.0:
        return 30.0
    if fc > 70.0:
        return 70.0
    return fc


@numba.njit(cache=True)
def _exo_rhs(x, p, eta, aux, out):
    ca, temp, tc = x[0], x[1], x[2]
    fc = _exo_coolant(x, p)
    rate = p[_K0] * math.exp(-p[_E] / (p[_R] * temp)) * ca
    ua = p[_U] * p[_A]
    out[0] = (p[_CAF] - ca + eta) / p[_TAU] - rate
    out[1] = ((p[_TF] - temp) / p[_TAU] - p[_DH] * rate / (p[_RHO] * p[_CP])
              + ua * (tc - temp) / (p[_RHO] * p[_V] * p[_CP]))
    out[2] = fc / p[_VJ] * (p[_TC0] - tc) - ua / (p[_RHOW] * p[_VJ] * p[_CPW]) * (tc - temp)
    out[3] = p[_TSP] - temp


@numba.njit(cache=True)
def _exo_pre(x, p, dt, aux):
    pass


@numba.njit(cache=True)
def _exo_post(x, p, aux):
    if x[0] < 0.0:
        x[0] = 0.0


# PolystyreneParams.to_array() index order
(_QI, _QM, _QS, _QC0, _PHID, _PHIP, _PHIT, _GD, _GP, _GT, _X1F, _X2F, _X3F, _X4F,
 _DELTA, _DELTA1, _DELTA2, _BETA, _FEFF, _X3SP, _KCP, _TAUD, _TAUIP) = range(23)


@numba.njit(cache=True)
def _ps_kappas(x3, p):
    u = x3 / (1.0 + x3 / p[_GP])
    return math.exp(p[_GD] * u), math.exp(p[_GT] * u), math.exp(u)


@numba.njit(cache=True)
def _ps_x5(x1, x3, p):
    kd, kt, _ = _ps_kappas(x3, p)
    return math.sqrt(2.0 * p[_FEFF] * p[_PHID] * kd * x1 / (p[_PHIT] * kt))


@numba.njit(cache=True)
def _ps_coolant(x, p, deriv):
    err = p[_X3SP] - x[2]
    qc = p[_QC0] - p[_KCP] * (err + x[4] / p[_TAUIP] + p[_TAUD] * deriv)
    if qc < 0.0:
        return 0.0
    if qc > 5.0:
        return 5.0
    return qc


@numba.njit(cache=True)
def _ps_rhs(x, p, eta, aux, out):
    x1 = x[0] if x[0] > 0.0 else 0.0  # RK4 stages may dip below zero
    x2, x3, x4 = x[1], x[2], x[3]
    kd, kt, kp = _ps_kappas(x3, p)
    x5 = math.sqrt(2.0 * p[_FEFF] * p[_PHID] * kd * x1 / (p[_PHIT] * kt))
    qsum = p[_QI] + p[_QM] + p[_QS]
    prop = p[_PHIP] * kp * x2 * x5
    qc = _ps_coolant(x, p, aux[0])
    out[0] = p[_QI] * p[_X1F] - qsum * x1 - p[_PHID] * kd * x1
    out[1] = p[_QM] * (p[_X2F] + eta) - qsum * x2 - prop
    out[2] = qsum * (p[_X3F] - x3) + p[_BETA] * prop - p[_DELTA] * (x3 - x4)
    out[3] = p[_DELTA1] * (qc * (p[_X4F] - x4) + p[_DELTA] * p[_DELTA2] * (x3 - x4))
    out[4] = p[_X3SP] - x3
    out[5] = 0.0


@numba.njit(cache=True)
def _ps_pre(x, p, dt, aux):
    err = p[_X3SP] - x[2]
    aux[0] = (err - x[5]) / dt
    aux[1] = err


@numba.njit(cache=True)
def _ps_post(x, p, aux):
    x[5] = aux[1]
    if x[0] < 0.0:
        x[0] = 0.0
    if x[1] < 0.0:
        x[1] = 0.0


def _make_kernel(rhs, pre, post, lam_index):
    @numba.njit(cache=False)
    def integrate(x0, p, noise, dt, sign, lo, hi, strict_hi, out):
        """Integrate one RK4 step per noise entry.

        Stops early when ``sign * lambda <= lo`` or ``sign * lambda >= hi``
        (``> hi`` when ``strict_hi``). Rows of ``out`` receive the states
        visited (row 0 = initial) when ``out`` has rows.
        Returns (steps taken, event code); ``x0`` is updated in place.
        """
        d = x0.shape[0]
        record = out.shape[0] > 0
        k1 = np.empty(d)
        k2 = np.empty(d)
        k3 = np.empty(d)
        k4 = np.empty(d)
        tmp = np.empty(d)
        aux = np.zeros(2)
        if record:
            out[0, :] = x0
        n = noise.shape[0]
        for s in range(n):
            eta = noise[s]
            pre(x0, p, dt, aux)
            rhs(x0, p, eta, aux, k1)
            for j in range(d):
                tmp[j] = x0[j] + 0.5 * dt * k1[j]
            rhs(tmp, p, eta, aux, k2)
            for j in range(d):
                tmp[j] = x0[j] + 0.5 * dt * k2[j]
            rhs(tmp, p, eta, aux, k3)
            for j in range(d):
                tmp[j] = x0[j] + dt * k3[j]
            rhs(tmp, p, eta, aux, k4)
            finite = True
            for j in range(d):
                tmp[j] = x0[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                if not math.isfinite(tmp[j]):
                    finite = False
            if not finite:
                return s, 2
            for j in range(d):
                x0[j] = tmp[j]
            post(x0, p, aux)
            if record:
                out[s + 1, :] = x0
            z = sign * x0[lam_index]
            if z <= lo:
                return s + 1, -1
            if strict_hi:
                if z > hi:
                    return s + 1, 1
            elif z >= hi:
                return s + 1, 1
        return n, 0

    return integrate


_EMPTY_OUT = {}


def _empty_out(d):
    if d not in _EMPTY_OUT:
        _EMPTY_OUT[d] = np.empty((0, d))
    return _EMPTY_OUT[d]


# --------------------------------------------------------------------------
# model classes


class ProcessModel:
    """Common driver around a numba integration kernel.

    Subclasses set ``state_names``, ``lambda_index``, ``noise`` and ``dt`` and
    provide ``_kernel``, ``_draw`` and ``initial_state``.
    """

    name = "process"
    state_names: tuple = ()
    feature_names: tuple = ()
    lambda_index = 0
    response_fields: tuple = ()

    def __init__(self, params, noise: NoiseSpec, dt: float):
        if not dt > 0:
            raise ConfigError("dt must be positive")
        self.params = params
        self.noise = noise
        self.dt = float(dt)
        self._p = params.to_array()

    # parameters --------------------------------------------------------

    def with_params(self, **changes) -> "ProcessModel":
        return type(self)(replace(self.params, **changes), self.noise, self.dt)

    def response_value(self, name: str) -> float:
        return float(getattr(self.params, name))

    # order parameter ---------------------------------------------------

    def order_parameter(self, state) -> float:
        x = state.x if isinstance(state, ProcessState) else state
        return float(x[self.lambda_index])

    def classify_basin(self, state, basins: BasinSpec) -> str:
        lam = self.order_parameter(state)
        s = basins.direction
        if s * lam >= s * basins.lambda_b:
            return "B"
        if s * lam <= s * basins.lambda_a:
            return "A"
        return "transition"

    # stepping ----------------------------------------------------------

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.noise.mean + self.noise.std * rng.standard_normal(n)

    def _run(self, x, noise, sign=1.0, lo=-math.inf, hi=math.inf, strict_hi=False, out=None):
        if out is None:
            out = _empty_out(x.shape[0])
        return self._kernel(x, self._p, noise, self.dt, float(sign), float(lo), float(hi),
                            bool(strict_hi), out)

    def step(self, state: ProcessState, rng: np.random.Generator, dt: float | None = None) -> ProcessState:
        """Advance one integration step with a fresh noise draw."""
        if dt is not None and not dt > 0:
            raise ConfigError("dt must be positive")
        model = self if dt is None or dt == self.dt else type(self)(self.params, self.noise, dt)
        x = np.array(state.x, dtype=np.float64)
        n, ev = model._run(x, model._draw(rng, 1))
        if ev == EV_DIVERGED:
            raise SimulationDiverged("integration produced non-finite state", state.x.copy())
        return ProcessState(x, state.t + model.dt)

    def advance(self, x: np.ndarray, rng: np.random.Generator, max_steps: int,
                sign: float, lo: float, hi: float, strict_hi: bool = False):
        """Integrate in place until ``sign*lambda`` leaves ``(lo, hi)`` or ``max_steps``.

        Returns ``(steps, event)``.
        """
        done = 0
        while done < max_steps:
            n = min(NOISE_CHUNK, max_steps - done)
            steps, ev = self._run(x, self._draw(rng, n), sign, lo, hi, strict_hi)
            done += steps
            if ev == EV_DIVERGED:
                raise SimulationDiverged("integration produced non-finite state", x.copy())
            if ev != EV_NONE:
                return done, ev
        return done, EV_NONE

    def simulate_array(self, x0: np.ndarray, rng: np.random.Generator, n_steps: int,
                       sign: float = 1.0, lo: float = -math.inf, hi: float = math.inf,
                       strict_hi: bool = False) -> np.ndarray:
        """Record ``n_steps`` steps (fewer if a stop bound is hit). Row 0 is ``x0``."""
        x = np.array(x0, dtype=np.float64)
        out = np.empty((n_steps + 1, x.shape[0]))
        steps, ev = self._run(x, self._draw(rng, n_steps), sign, lo, hi, strict_hi, out)
        if ev == EV_DIVERGED:
            raise SimulationDiverged("integration produced non-finite state", out[steps].copy())
        return out[: steps + 1]

    def simulate(self, initial: ProcessState, config: SimConfig,
                 basins: BasinSpec | None = None) -> "Trajectory":
        model = self if config.dt == self.dt else type(self)(self.params, self.noise, config.dt)
        rng = np.random.default_rng(config.seed)
        sign, hi = 1.0, math.inf
        if config.stop_on_basin:
            if basins is None:
                raise ConfigError("stop_on_basin requires basins")
            sign = float(basins.direction)
            hi = sign * basins.lambda_b
        states = model.simulate_array(initial.x, rng, config.n_steps, sign, -math.inf, hi)
        times = initial.t + config.dt * np.arange(states.shape[0])
        return Trajectory(times, states, self)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    model: ProcessModel = field(repr=False)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> ProcessState:
        return ProcessState(self.states[i].copy(), float(self.times[i]))

    @property
    def lambdas(self) -> np.ndarray:
        return self.states[:, self.model.lambda_index]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *self.model.state_names, "lambda"])
            for t, x, lam in zip(self.times, self.states, self.lambdas):
                w.writerow([repr(float(t)), *(repr(float(v)) for v in x), repr(float(lam))])


class ExothermicCSTR(ProcessModel):
    name = "exothermic"
    state_names = ("C_A", "T", "T_C", "e_I")
    feature_names = ("C_A", "T", "T_C")
    lambda_index = 1
    response_fields = ("tau",)
    _kernel = staticmethod(_make_kernel(_exo_rhs, _exo_pre, _exo_post, 1))

    def __init__(self, params: ExothermicParams | None = None, noise: NoiseSpec | None = None,
                 dt: float = 0.01):
        super().__init__(params or ExothermicParams(), noise or NoiseSpec(0.02), dt)

    def initial_state(self) -> ProcessState:
        p = self.params
        return ProcessState(np.array([1.2, 700.0, p.T_C0, 0.0]))

    def coolant_flow(self, state) -> float:
        x = state.x if isinstance(state, ProcessState) else np.asarray(state, dtype=float)
        return float(_exo_coolant(x, self._p))

    def derivatives(self, state, eta: float = 0.0) -> np.ndarray:
        return exothermic_derivatives(state, self.params, eta)

    def steady_state(self, branch: str = "high", e_I: float | None = None) -> ProcessState:
        """Locate a steady state of the reactor/jacket balances with eta = 0.

        The controller memory ``e_I`` is held at the supplied value (default:
        deep in the windup direction so the coolant flow is saturated, which is
        the case for the multi-steady-state residence times). The integral
        error itself keeps drifting unless ``T == T_SP``.
        """
        p = self.params
        guesses = {"high": 850.0, "middle": 456.0, "low": 360.0}
        if branch not in guesses:
            raise ValueError(f"unknown branch {branch!r}")
        if e_I is None:
            e_I = -1e6 if branch == "high" else 1e6
        p_arr = self._p
        out = np.empty(4)
        aux = np.zeros(2)

        def resid(v):
            x = np.array([v[0], v[1], v[2], e_I])
            _exo_rhs(x, p_arr, 0.0, aux, out)
            return [out[0], out[1] / 100.0, out[2]]

        t0 = guesses[branch]
        ca0 = p.C_Af / (1 + p.tau * p.k0 * math.exp(-p.E / (p.R * t0)))
        sol, info, ier, msg = fsolve(resid, [ca0, t0, p.T_C0 + 5.0], full_output=True, xtol=1e-13)
        if ier != 1:
            raise RuntimeError(f"steady state not found: {msg}")
        return ProcessState(np.array([sol[0], sol[1], sol[2], e_I]))


class PolystyreneCSTR(ProcessModel):
    name = "polystyrene"
    state_names = ("x1", "x2", "x3", "x4", "I", "e_prev")
    feature_names = ("x1", "x2", "x3", "x4")
    lambda_index = 2
    response_fields = ("q_i", "q_m")
    _kernel = staticmethod(_make_kernel(_ps_rhs, _ps_pre, _ps_post, 2))

    def __init__(self, params: PolystyreneParams | None = None, noise: NoiseSpec | None = None,
                 dt: float = 0.001):
        super().__init__(params or PolystyreneParams(), noise or NoiseSpec(0.0014), dt)

    def initial_state(self) -> ProcessState:
        p = self.params
        x3 = 0.951
        return ProcessState(np.array([0.0041, 0.2156, x3, -1.1191, 0.0, p.x_3sp - x3]))

    def coolant_flow(self, state, deriv: float = 0.0) -> float:
        x = state.x if isinstance(state, ProcessState) else np.asarray(state, dtype=float)
        return float(_ps_coolant(x, self._p, deriv))

    def derivatives(self, state, eta: float = 0.0, deriv: float = 0.0) -> np.ndarray:
        return polystyrene_derivatives(state, self.params, eta, deriv)

    def steady_state(self) -> ProcessState:
        """Closed-loop equilibrium at ``x3 = x_3sp`` (integral term absorbs the offset)."""
        p = self.params
        p_arr = self._p
        x3 = p.x_3sp
        qsum = p.q_i + p.q_m + p.q_s

        kd, kt, kp = _ps_kappas(x3, p_arr)
        x1 = p.q_i * p.x_1f / (qsum + p.phi_d * kd)
        x5 = math.sqrt(2 * p.f * p.phi_d * kd * x1 / (p.phi_t * kt))
        x2 = p.q_m * p.x_2f / (qsum + p.phi_p * kp * x5)
        prop = p.phi_p * kp * x2 * x5
        x4 = x3 - (qsum * (p.x_3f - x3) + p.beta * prop) / p.delta
        qc = -p.delta * p.delta_2 * (x3 - x4) / (p.x_4f - x4)
        integral = p.tau_I * (p.q_c0 - qc) / p.K_c
        return ProcessState(np.array([x1, x2, x3, x4, integral, 0.0]))


# --------------------------------------------------------------------------
# functional API


def _as_vector(state) -> np.ndarray:
    x = state.x if isinstance(state, ProcessState) else state
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise SimulationDiverged("non-finite state", x.copy())
    return x


def exothermic_derivatives(state, params: ExothermicParams, eta: float = 0.0) -> np.ndarray:
    """Time derivatives ``(dC_A, dT, dT_C, de_I)/dt`` with the clamped coolant law."""
    x = _as_vector(state)
    out = np.empty(4)
    with np.errstate(over="raise"):
        _exo_rhs(x, params.to_array(), float(eta), np.zeros(2), out)
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged("non-finite derivative", x.copy())
    return out


def polystyrene_derivatives(state, params: PolystyreneParams, eta: float = 0.0,
                            deriv: float = 0.0) -> np.ndarray:
    """Dimensionless derivatives ``(dx1, dx2, dx3, dx4)/dtau``.

    ``deriv`` is the setpoint-error rate used by the derivative action.
    """
    x = _as_vector(state)
    if x[0] < 0:
        raise DomainError("x1 must be non-negative for the growing-polymer concentration")
    if x.shape[0] == 4:
        x = np.concatenate([x, [0.0, params.x_3sp - x[2]]])
    out = np.empty(6)
    _ps_rhs(x, params.to_array(), float(eta), np.array([deriv, 0.0]), out)
    if not np.all(np.isfinite(out[:4])):
        raise SimulationDiverged("non-finite derivative", x.copy())
    return out[:4]


def growing_polymer(x1: float, x3: float, params: PolystyreneParams) -> float:
    if x1 < 0:
        raise DomainError("x1 must be non-negative")
    return float(_ps_x5(float(x1), float(x3), params.to_array()))


def kappas(x3: float, params: PolystyreneParams) -> tuple[float, float, float]:
    """Return ``(kappa_d, kappa_t, kappa_p)`` at dimensionless temperature ``x3``."""
    return _ps_kappas(float(x3), params.to_array())


def order_parameter(state, model: ProcessModel) -> float:
    return model.order_parameter(state)


def classify_basin(state, basins: BasinSpec, model: ProcessModel) -> str:
    return model.classify_basin(state, basins)


def step(state: ProcessState, model: ProcessModel, dt: float, rng: np.random.Generator) -> ProcessState:
    return model.step(state, rng, dt)


def simulate(initial: ProcessState, model: ProcessModel, config: SimConfig,
             basins: BasinSpec | None = None) -> Trajectory:
    return model.simulate(initial, config, basins)


MODELS = {"exothermic": (ExothermicCSTR, ExothermicParams), "polystyrene": (PolystyreneCSTR, PolystyreneParams)}


def build_model(name: str, params: dict | None = None, noise_variance: float | None = None,
                dt: float | None = None) -> ProcessModel:
    if name == "walk":
        from .walk import RandomWalk

        return RandomWalk(**(params or {}))
    try:
        cls, pcls = MODELS[name]
    except KeyError:
        raise ConfigError(f"unknown process {name!r}") from None
    try:
        p = pcls(**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad {name} parameters: {exc}") from None
    kwargs = {}
    if noise_variance is not None:
        kwargs["noise"] = NoiseSpec(noise_variance)
    if dt is not None:
        kwargs["dt"] = dt
    return cls(p, **kwargs)


def params_dict(model: ProcessModel) -> dict:
    return asdict(model.params)
