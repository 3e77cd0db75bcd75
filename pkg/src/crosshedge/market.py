"""Market model: parameters, exposures, controlled dynamics and the Euler path simulator.

The traded asset midprice S and the non-tradable risk factor U follow
arithmetic dynamics driven by correlated Brownian motions.  The agent's
trading speed nu feeds back into both drifts (permanent impact b on S,
cross impact c on U) and into the execution price (temporary impact k).
Cash X and inventory Q follow from the execution price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "derived_constants",
    "LinearExposure",
    "BachelierCallExposure",
    "CustomSmoothExposure",
    "Exposure",
    "State",
    "Strategy",
    "constant_strategy",
    "PathBundle",
    "SimulationError",
    "make_rng",
    "simulate_path",
    "payoff_eval",
    "terminal_wealth",
    "utility_of",
]


class SimulationError(RuntimeError):
    """Raised when a path simulation produces a non-finite quantity."""


@dataclass(frozen=True)
class ModelParams:
    """Market, impact, and preference constants.

    mu, sigma  : drift and volatility of the traded asset S
    beta, eta  : drift and volatility of the non-tradable factor U
    rho        : Brownian correlation between S and U shocks, in (-1, 1)
    b          : permanent impact of trading speed on the S drift, >= 0
    c          : cross impact of trading speed on the U drift
    k          : temporary impact (execution-price penalty), > 0
    gamma      : exponential-utility risk aversion, >= 0
    alpha      : terminal quadratic liquidation penalty, > 0
    T          : trading horizon, > 0

    The constructor enforces 2*alpha - b > 0; without it the closed-form
    value-function coefficients can blow up inside [0, T].
    """

    mu: float
    sigma: float
    beta: float
    eta: float
    rho: float
    b: float
    c: float
    k: float
    gamma: float
    alpha: float
    T: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"temporary impact k must be positive, got {self.k}")
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if not abs(self.rho) < 1:
            raise ValueError(f"correlation rho must lie in (-1, 1), got {self.rho}")
        if self.b < 0:
            raise ValueError(f"permanent impact b must be nonnegative, got {self.b}")
        if self.gamma < 0:
            raise ValueError(f"risk aversion gamma must be nonnegative, got {self.gamma}")
        if not self.alpha > 0:
            raise ValueError(f"liquidation penalty alpha must be positive, got {self.alpha}")
        if self.sigma < 0 or self.eta < 0:
            raise ValueError("volatilities sigma and eta must be nonnegative")
        if not 2.0 * self.alpha - self.b > 0:
            raise ValueError(
                f"well-posedness requires 2*alpha - b > 0, got {2.0 * self.alpha - self.b}"
            )

    @property
    def m(self) -> float:
        """Effective terminal stiffness 2*alpha - b (positive by construction)."""
        return 2.0 * self.alpha - self.b


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from ModelParams (and a linear exposure size).

    m         : 2*alpha - b
    zeta      : risk-adjusted drift mu - gamma*rho*sigma*eta*frak_n
    omega     : sqrt(k * gamma * sigma^2 / 2)
    phi_plus  : omega + alpha - b/2
    phi_minus : omega - alpha + b/2
    """

    m: float
    zeta: float
    omega: float
    phi_plus: float
    phi_minus: float


def derived_constants(params: ModelParams, frak_n: float = 0.0) -> DerivedConstants:
    """Compute the derived constants for a linear exposure of ``frak_n`` units."""
    omega = math.sqrt(params.k * params.gamma * params.sigma**2 / 2.0)
    half_b = params.b / 2.0
    return DerivedConstants(
        m=params.m,
        zeta=params.mu - params.gamma * params.rho * params.sigma * params.eta * frak_n,
        omega=omega,
        phi_plus=omega + params.alpha - half_b,
        phi_minus=omega - params.alpha + half_b,
    )


@dataclass(frozen=True)
class LinearExposure:
    """Terminal exposure psi(U) = frak_n * U (frak_n frozen units of the factor)."""

    frak_n: float


@dataclass(frozen=True)
class BachelierCallExposure:
    """n_options European calls on U, strike K, expiring dt_offset after the horizon.

    dt_offset > 0 keeps the effective payoff smooth at the horizon; the raw
    kinked payoff is only used for realized terminal wealth.
    """

    n_options: float
    strike: float
    dt_offset: float = 1e-5

    def __post_init__(self):
        if not self.dt_offset > 0:
            raise ValueError("dt_offset must be positive (smooth-payoff regularization)")


@dataclass(frozen=True)
class CustomSmoothExposure:
    """Caller-supplied smooth payoff with bounded derivatives up to fourth order.

    payoff_derivative is optional; conditional-expectation deltas fall back to
    finite differences when it is absent.  fourth_derivative_bound is recorded
    for tolerance scaling and trusted as declared.
    """

    payoff: Callable[[np.ndarray], np.ndarray]
    payoff_derivative: Callable[[np.ndarray], np.ndarray] | None = None
    fourth_derivative_bound: float | None = None


Exposure = Union[LinearExposure, BachelierCallExposure, CustomSmoothExposure]


@dataclass(frozen=True)
class State:
    """A point (t, x, q, S, U) of the controlled system."""

    t: float
    x: float
    q: float
    s: float
    u: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class Strategy:
    """A feedback trading rule (t, q, U) -> speed with an identifying tag.

    ``rule`` must accept scalar t and array-like q, U and broadcast.
    """

    tag: str
    rule: Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def constant_strategy(speed: float) -> Strategy:
    """Trade at a constant speed regardless of state."""
    return Strategy(tag="constant", rule=lambda t, q, u: np.broadcast_arrays(q, u)[0] * 0.0 + speed)


@dataclass(frozen=True)
class PathBundle:
    """One discretized trajectory of (W, Z, S, U, Q, X, nu) under a strategy.

    State arrays have length n_steps + 1; nu_path has length n_steps.
    Arrays are frozen read-only after construction.
    """

    seed: int
    stream: int
    n_steps: int
    dt: float
    times: np.ndarray
    w_path: np.ndarray
    z_path: np.ndarray
    s_path: np.ndarray
    u_path: np.ndarray
    q_path: np.ndarray
    x_path: np.ndarray
    nu_path: np.ndarray
    strategy_tag: str
    clamp_events: int = 0

    def __post_init__(self):
        for name in ("times", "w_path", "z_path", "s_path", "u_path", "q_path", "x_path", "nu_path"):
            getattr(self, name).flags.writeable = False


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator with a substream keyed by (seed, stream).

    Philox is used so that substreams are independent and results are
    reproducible bit-for-bit regardless of execution order.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


DEFAULT_SPEED_CLAMP = 1e6


def simulate_path(
    params: ModelParams,
    exposure: Exposure,
    strategy: Strategy,
    initial: State,
    n_steps: int,
    seed: int,
    *,
    stream: int = 0,
    nu_max: float = DEFAULT_SPEED_CLAMP,
    antithetic: bool = False,
) -> PathBundle:
    """Euler-Maruyama simulation of the controlled system on a uniform grid.

    The trading speed is evaluated at the left endpoint of each step
    (predictable control); the correlated factor shock is realized as
    dZ = rho*dW + sqrt(1-rho^2)*dB with an independent dB.  Cash updates
    use the execution price at the step's left endpoint:
    x_{i+1} = x_i - (S_i + k*nu_i)*nu_i*dt.

    ``antithetic=True`` negates every Gaussian increment (same seed).
    Speeds are clamped to |nu| <= nu_max; clamp events are counted on the
    returned bundle.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if initial.t >= params.T:
        raise ValueError(f"initial time {initial.t} must precede the horizon {params.T}")
    rng = make_rng(seed, stream)
    dt = (params.T - initial.t) / n_steps
    sqdt = math.sqrt(dt)

    shocks = rng.standard_normal(size=(2, n_steps))
    if antithetic:
        shocks = -shocks
    dw = sqdt * shocks[0]
    db = sqdt * shocks[1]
    dz = params.rho * dw + math.sqrt(1.0 - params.rho**2) * db

    times = initial.t + dt * np.arange(n_steps + 1)
    w = np.concatenate([[0.0], np.cumsum(dw)])
    z = np.concatenate([[0.0], np.cumsum(dz)])

    # Prices are accumulated as deviations from their initial values so that
    # negating every Gaussian increment negates (S - S0) and (U - U0) exactly
    # (round-to-nearest is odd-symmetric about zero, not about S0).
    ds = np.empty(n_steps + 1)
    du = np.empty(n_steps + 1)
    q = np.empty(n_steps + 1)
    x = np.empty(n_steps + 1)
    nu = np.empty(n_steps)
    ds[0], du[0], q[0], x[0] = 0.0, 0.0, initial.q, initial.x

    clamp_events = 0
    for i in range(n_steps):
        s_i = initial.s + ds[i]
        u_i = initial.u + du[i]
        speed = float(strategy.rule(times[i], q[i], u_i))
        if not math.isfinite(speed):
            raise SimulationError(
                f"strategy '{strategy.tag}' returned non-finite speed at step {i} "
                f"(t={times[i]:.6g}, q={q[i]:.6g}, u={u_i:.6g})"
            )
        if abs(speed) > nu_max:
            speed = math.copysign(nu_max, speed)
            clamp_events += 1
        nu[i] = speed
        x[i + 1] = x[i] - (s_i + params.k * speed) * speed * dt
        q[i + 1] = q[i] + speed * dt
        ds[i + 1] = ds[i] + (params.mu + params.b * speed) * dt + params.sigma * dw[i]
        du[i + 1] = du[i] + (params.beta + params.c * speed) * dt + params.eta * dz[i]

    return PathBundle(
        seed=seed,
        stream=stream,
        n_steps=n_steps,
        dt=dt,
        times=times,
        w_path=w,
        z_path=z,
        s_path=initial.s + ds,
        u_path=initial.u + du,
        q_path=q,
        x_path=x,
        nu_path=nu,
        strategy_tag=strategy.tag,
        clamp_events=clamp_events,
    )


def payoff_eval(exposure: Exposure, u) -> np.ndarray | float:
    """Raw terminal payoff psi(u).

    For a Bachelier call this is the intrinsic value n*max(u - K, 0); it is
    what the agent actually receives at the horizon, while pricing before the
    horizon goes through the smoothed conditional-expectation machinery.
    """
    if isinstance(exposure, LinearExposure):
        return exposure.frak_n * np.asarray(u, dtype=float) if np.ndim(u) else exposure.frak_n * float(u)
    if isinstance(exposure, BachelierCallExposure):
        return exposure.n_options * np.maximum(np.asarray(u, dtype=float) - exposure.strike, 0.0)
    if isinstance(exposure, CustomSmoothExposure):
        return exposure.payoff(np.asarray(u, dtype=float))
    raise TypeError(f"unknown exposure type: {type(exposure).__name__}")


def terminal_wealth(bundle: PathBundle, params: ModelParams, exposure: Exposure) -> float:
    """Realized terminal wealth X_T + Q_T*(S_T - alpha*Q_T) + psi(U_T)."""
    x_t = bundle.x_path[-1]
    q_t = bundle.q_path[-1]
    s_t = bundle.s_path[-1]
    u_t = bundle.u_path[-1]
    return float(x_t + q_t * (s_t - params.alpha * q_t) + payoff_eval(exposure, u_t))


def utility_of(wealth, gamma: float):
    """Exponential utility -exp(-gamma * wealth)."""
    return -np.exp(-gamma * np.asarray(wealth, dtype=float))
