"""Fixed-step fourth-order Runge-Kutta integration, warmup, and the
quadrature oracle for the averaged dynamics.

A fixed step is deliberate: the dither period dictates the resolution
anyway, and identical inputs must give bit-identical trajectories so golden
traces and determinism checks stay meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from .dynamics import (
    AlgorithmConfig,
    AverageState,
    FullState,
    Variant,
    make_rhs,
    state_size,
)
from .errors import (
    DimensionMismatch,
    NonFiniteState,
    NonPositiveTolerance,
    QuadratureFailure,
    ValidationError,
    WarmupTimeout,
)
from .problem import PlantModel, eval_barrier, eval_objective
from .signals import dither, signal_period

# default step resolves the fastest dither oscillation with 40 samples; the
# settings validator only insists on 20
DEFAULT_SAMPLES_PER_PERIOD = 40
MIN_SAMPLES_PER_PERIOD = 20


@dataclass(frozen=True)
class IntegrationSettings:
    dt: float
    t_end: float
    record_stride: int = 1
    gamma_guard: float = 1e6

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValidationError("dt must be positive")
        if self.t_end <= 0.0:
            raise ValidationError("t_end must be positive")
        if int(self.record_stride) < 1:
            raise ValidationError("record_stride must be a positive integer")
        object.__setattr__(self, "record_stride", int(self.record_stride))


def default_dt(dither_cfg) -> float:
    return (2.0 * math.pi / dither_cfg.omega_max) / DEFAULT_SAMPLES_PER_PERIOD


def check_resolves_dither(settings: IntegrationSettings, dither_cfg) -> None:
    """The step must resolve the fastest dither period (20 samples minimum)."""
    limit = (2.0 * math.pi / dither_cfg.omega_max) / MIN_SAMPLES_PER_PERIOD
    if settings.dt > limit * (1.0 + 1e-12):
        raise ValidationError(
            f"dt={settings.dt:.3e} does not resolve the fastest dither period; "
            f"need dt <= {limit:.3e}"
        )


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: times, raw states, and the evaluated plant channels.

    ``thetas`` holds the point fed to the plant maps at each record
    (theta_hat + S(t) for the dithered systems, theta_tilde + theta* for the
    averaged and reduced models); ``j_values`` and ``h_values`` are the
    objective and safety metric there.  Channel arrays are None for runs of
    abstract fields with no plant attached.
    """

    times: np.ndarray
    states: np.ndarray
    thetas: Optional[np.ndarray] = None
    j_values: Optional[np.ndarray] = None
    h_values: Optional[np.ndarray] = None
    gamma_exceeded_at: Optional[float] = None

    def __len__(self) -> int:
        return self.times.shape[0]

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape[0] != self.times.shape[0]:
            raise ValidationError("times and states must have matching lengths")
        if self.times.shape[0] and np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("times must be strictly increasing")


ChannelFn = Callable[[float, np.ndarray], tuple]


def full_state_channels(plant: PlantModel, cfg: AlgorithmConfig) -> ChannelFn:
    """theta = theta_hat + S(t), with J and h evaluated there."""
    n = plant.dimension

    def channels(t, y):
        theta = y[:n] + dither(cfg.dither, t)
        return theta, eval_objective(plant, theta), eval_barrier(plant, theta)

    return channels


def average_channels(plant: PlantModel) -> ChannelFn:
    """theta = theta_tilde + theta* for averaged-coordinate states."""
    n = plant.dimension

    def channels(t, y):
        theta = y[:n] + plant.theta_star
        return theta, eval_objective(plant, theta), eval_barrier(plant, theta)

    return channels


reduced_channels = average_channels  # the reduced model uses the same coordinate


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0,
    settings: IntegrationSettings,
    channels: Optional[ChannelFn] = None,
    gamma_index: Optional[int] = None,
) -> Trajectory:
    """Classic fixed-step RK4 from t=0 to t_end, recording every
    ``record_stride``-th step (plus the first and last).

    Raises :class:`NonFiniteState` if any component leaves the reals; the
    exception carries the trajectory recorded so far.  Crossing
    ``gamma_guard`` in magnitude at ``gamma_index`` is only flagged, not
    stopped: the local theory gives no global bound, so divergence is
    surfaced as a diagnostic.
    """
    y = np.asarray(x0, float).copy()
    if y.ndim != 1:
        raise DimensionMismatch("x0 must be a vector")
    n_steps = max(1, math.ceil(settings.t_end / settings.dt - 1e-9))
    h = settings.t_end / n_steps
    stride = settings.record_stride

    times = [0.0]
    states = [y.copy()]
    chans = [channels(0.0, y)] if channels else None
    gamma_exceeded_at = None

    def build(partial_flag):
        t_arr = np.array(times)
        s_arr = np.array(states)
        if chans is not None:
            th = np.array([c[0] for c in chans])
            jv = np.array([c[1] for c in chans])
            hv = np.array([c[2] for c in chans])
        else:
            th = jv = hv = None
        return Trajectory(
            times=t_arr, states=s_arr, thetas=th, j_values=jv, h_values=hv,
            gamma_exceeded_at=gamma_exceeded_at,
        )

    half = 0.5 * h
    sixth = h / 6.0
    # divergence is detected and raised; the intermediate inf/nan warnings
    # on the way there are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_steps):
            t = i * h
            k1 = rhs(t, y)
            k2 = rhs(t + half, y + half * k1)
            k3 = rhs(t + half, y + half * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_next = (i + 1) * h
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(t_next, partial=build(True))
            if (
                gamma_index is not None
                and gamma_exceeded_at is None
                and abs(y[gamma_index]) > settings.gamma_guard
            ):
                gamma_exceeded_at = t_next
            if (i + 1) % stride == 0 or i + 1 == n_steps:
                times.append(t_next)
                states.append(y.copy())
                if chans is not None:
                    chans.append(channels(t_next, y))
    return build(False)


def exact_initial_state(plant: PlantModel, cfg: AlgorithmConfig, theta0) -> FullState:
    """Filter states set to the values they estimate, parameter at theta0.

    G_J and G_h get the true gradients, eta_J the objective plus the probing
    bias (a^2/4) tr(H), eta_h the safety value, gamma its Riccati fixed
    point, and Gamma the true inverse Hessian for the Newton variant.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, float))
    tt = theta0 - plant.theta_star
    a = cfg.dither.amplitude
    eta_j = eval_objective(plant, theta0) + 0.25 * a * a * float(np.trace(plant.hessian))
    gamma_newton = None
    if cfg.variant is Variant.NEWTON_ASFES:
        gamma_newton = 1.0 / float(plant.hessian[0, 0])
    return FullState(
        theta_hat=theta0,
        g_j=plant.hessian @ tt,
        eta_j=eta_j,
        g_h=plant.h1.copy(),
        eta_h=eval_barrier(plant, theta0),
        gamma=1.0 / float(plant.h1 @ plant.h1),
        gamma_newton=gamma_newton,
    )


def warmup(
    plant: PlantModel,
    cfg: AlgorithmConfig,
    theta0,
    settings: IntegrationSettings,
    rel_tol: float,
) -> FullState:
    """Settle the filters with the parameter frozen at theta0.

    Integrates the filter subsystem (parameter row zeroed) and compares the
    filter states one signal period apart: sampling at period boundaries
    removes the dither ripple, which never converges pointwise.  Returns the
    assembled initial state once the relative change drops below
    ``rel_tol``; raises :class:`WarmupTimeout` when ``t_end`` is exhausted
    first.
    """
    if rel_tol <= 0.0:
        raise NonPositiveTolerance("rel_tol must be positive")
    check_resolves_dither(settings, cfg.dither)
    n = plant.dimension
    theta0 = np.atleast_1d(np.asarray(theta0, float))
    if theta0.shape != (n,):
        raise DimensionMismatch(f"theta0 has shape {theta0.shape}, expected ({n},)")
    newton = cfg.variant is Variant.NEWTON_ASFES
    f = make_rhs(plant, cfg)

    def frozen(t, y):
        dy = f(t, y)
        dy[:n] = 0.0
        return dy

    period = signal_period(cfg.dither)
    steps = max(1, math.ceil(period / settings.dt - 1e-9))
    h = period / steps
    half, sixth = 0.5 * h, h / 6.0

    y = np.zeros(state_size(n, newton=newton))
    y[:n] = theta0
    y[2 * n] = eval_objective(plant, theta0)
    y[3 * n + 1] = eval_barrier(plant, theta0)
    y[3 * n + 2] = 1.0
    if newton:
        y[3 * n + 3] = 1.0

    t = 0.0
    max_periods = max(1, int(settings.t_end / period))
    prev = y[n:].copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_periods):
            for i in range(steps):
                k1 = frozen(t, y)
                k2 = frozen(t + half, y + half * k1)
                k3 = frozen(t + half, y + half * k2)
                k4 = frozen(t + h, y + h * k3)
                y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t += h
                if not np.all(np.isfinite(y)):
                    raise NonFiniteState(t)
            cur = y[n:]
            change = float(np.linalg.norm(cur - prev))
            scale = max(float(np.linalg.norm(cur)), 1e-30)
            if change <= rel_tol * scale:
                return FullState.from_vector(y, n)
            prev = cur.copy()
    raise WarmupTimeout(
        f"filters did not settle to rel_tol={rel_tol:g} within t_end={settings.t_end:g}"
    )


def numeric_average(
    plant: PlantModel,
    cfg: AlgorithmConfig,
    x,
    nodes_per_fastest_period: int = 200,
) -> np.ndarray | AverageState:
    """Quadrature average of the dithered field over one signal period.

    The state is held fixed (interpreted in averaged coordinates, so the
    parameter block is theta_tilde) and the original right-hand side is
    averaged by composite Simpson quadrature over the exact common period.
    This is the independent oracle for :func:`asfes.dynamics.average_rhs`.
    """
    is_state = isinstance(x, AverageState)
    vec = x.as_vector() if is_state else np.asarray(x, float)
    n = plant.dimension
    if vec.shape[0] != state_size(n):
        raise DimensionMismatch(
            f"state vector of length {vec.shape[0]}, expected {state_size(n)}"
        )
    y = vec.copy()
    y[:n] += plant.theta_star  # the dithered field works in theta_hat

    period = signal_period(cfg.dither)
    fastest = 2.0 * math.pi / cfg.dither.omega_max
    intervals = math.ceil(nodes_per_fastest_period * period / fastest)
    intervals += intervals % 2  # composite Simpson wants an even count
    ts = np.linspace(0.0, period, intervals + 1)
    f = make_rhs(plant, cfg, variant=Variant.ASFES)
    samples = np.empty((intervals + 1, vec.shape[0]))
    for i, t in enumerate(ts):
        samples[i] = f(float(t), y)
    if not np.all(np.isfinite(samples)):
        raise QuadratureFailure("non-finite integrand while averaging")
    avg = simpson(samples, x=ts, axis=0) / period
    if is_state:
        return AverageState.from_vector(avg, n)
    return avg
