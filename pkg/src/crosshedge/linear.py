"""Closed-form value function and optimal strategy for a linear factor exposure.

With psi(U) = frak_n * U the certainty-equivalent value separates as
x + q*S + frak_n*U + h(t, q) with h quadratic in inventory:

    h(t, q) = h0(t) + h1(t) * q + h2(t) * q^2.

h2 solves an uncoupled Riccati equation, h1 a linear ODE forced by the
risk-adjusted drift zeta and the cross impact, and h0 integrates the
squared forcing.  All three admit explicit solutions built from the
constants omega = sqrt(k*gamma*sigma^2/2) and phi_± = omega ± alpha ∓ b/2.

For gamma = 0 the expressions above divide by omega; this module switches
to the analytic omega -> 0 limits (which coincide with the zero-order
expansion coefficients f1, f2) below a small omega threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .market import DerivedConstants, ModelParams, State, Strategy, derived_constants

__all__ = [
    "LinearCoefficients",
    "linear_coefficients",
    "uses_zero_gamma_branch",
    "h0",
    "h1",
    "h2",
    "optimal_speed_linear",
    "optimal_inventory_linear",
    "long_horizon_position",
    "linear_value_function",
    "linear_optimal_strategy",
]

# Relative omega size below which the analytic gamma=0 limit is used.
OMEGA_SWITCH = 1e-8

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-10, limit=200)


def _check_time(params: ModelParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > params.T * (1.0 + 1e-12)):
        raise ValueError(f"time must lie in [0, T={params.T}], got {t}")
    return np.clip(t, 0.0, params.T)


def uses_zero_gamma_branch(params: ModelParams) -> bool:
    """True when omega is small enough that the gamma=0 limit formulas apply."""
    omega = math.sqrt(params.k * params.gamma * params.sigma**2 / 2.0)
    return omega < OMEGA_SWITCH * max(1.0, params.m)


def h2(params: ModelParams, t) -> np.ndarray | float:
    """Quadratic-in-inventory coefficient of the certainty-equivalent value.

    Exponentials are evaluated in decayed form (largest factored out) so the
    expression stays finite for omega*T/k beyond the naive overflow range.
    At gamma = 0 this returns the analytic limit -k*m/(2k + m*(T-t)) - b/2.
    """
    t = _check_time(params, t)
    tau = params.T - t
    m = params.m
    if uses_zero_gamma_branch(params):
        out = -params.k * m / (2.0 * params.k + m * tau) - params.b / 2.0
    else:
        d = derived_constants(params)
        e = np.exp(-d.omega * tau / params.k)
        e2 = e * e
        out = (
            d.omega
            * (d.phi_minus * e2 - d.phi_plus)
            / (d.phi_minus * e2 + d.phi_plus)
            - params.b / 2.0
        )
    return out if out.ndim else float(out)


def h1(params: ModelParams, frak_n, t) -> np.ndarray | float:
    """Linear-in-inventory coefficient; broadcasts over frak_n and t.

    Forced by the risk-adjusted drift zeta = mu - gamma*rho*sigma*eta*frak_n
    and by the cross impact c*frak_n; vanishes at the horizon.
    """
    t = _check_time(params, t)
    frak_n = np.asarray(frak_n, dtype=float)
    tau = params.T - t
    m, k, c = params.m, params.k, params.c
    zeta = params.mu - params.gamma * params.rho * params.sigma * params.eta * frak_n
    if uses_zero_gamma_branch(params):
        out = (
            zeta * tau * (4.0 * k + m * tau) / (2.0 * (2.0 * k + m * tau))
            - c * frak_n * m * tau / (2.0 * k + m * tau)
        )
    else:
        d = derived_constants(params)
        x = d.omega * tau / k
        e = np.exp(-x)
        one_minus_e = -np.expm1(-x)
        denom = d.phi_minus * e * e + d.phi_plus
        out = (
            ((zeta * k / d.omega) * one_minus_e * (d.phi_minus * e + d.phi_plus)
             + 2.0 * d.omega * c * frak_n * e)
            / denom
            - c * frak_n
        )
    return out if np.ndim(out) else float(out)


def h0(params: ModelParams, frak_n: float, t: float) -> float:
    """Inventory-independent value component.

    The time integral of (h1 + c*frak_n)^2 / (4k) is evaluated by adaptive
    quadrature (relative tolerance 1e-10); the formula's linear part is exact.
    """
    t = float(_check_time(params, t))
    tau = params.T - t
    base = (params.beta * frak_n - 0.5 * params.gamma * params.eta**2 * frak_n**2) * tau
    if tau == 0.0:
        return 0.0
    zeta = params.mu - params.gamma * params.rho * params.sigma * params.eta * frak_n
    if zeta == 0.0 and params.c * frak_n == 0.0:
        return base

    def integrand(s: float) -> float:
        w = h1(params, frak_n, s) + params.c * frak_n
        return w * w / (4.0 * params.k)

    val, _ = quad(integrand, t, params.T, **_QUAD_OPTS)
    return base + val


@dataclass(frozen=True)
class LinearCoefficients:
    """Bundle of the value-function coefficients for a fixed linear exposure."""

    frak_n: float
    derived: DerivedConstants
    h0_fn: Callable[[float], float]
    h1_fn: Callable[[float], float]
    h2_fn: Callable[[float], float]


def linear_coefficients(params: ModelParams, frak_n: float) -> LinearCoefficients:
    """Package h0, h1, h2 as callables of time for ``frak_n`` exposure units."""
    return LinearCoefficients(
        frak_n=frak_n,
        derived=derived_constants(params, frak_n),
        h0_fn=lambda t: h0(params, frak_n, t),
        h1_fn=lambda t: h1(params, frak_n, t),
        h2_fn=lambda t: h2(params, t),
    )


def optimal_speed_linear(params: ModelParams, frak_n, t, q) -> np.ndarray | float:
    """Optimal trading speed (c*frak_n + h1(t) + (2*h2(t) + b)*q) / (2k).

    Affine in inventory with strictly negative slope; broadcasts over
    array-valued frak_n and q.
    """
    out = (
        params.c * np.asarray(frak_n, dtype=float)
        + h1(params, frak_n, t)
        + (2.0 * h2(params, t) + params.b) * np.asarray(q, dtype=float)
    ) / (2.0 * params.k)
    return out if np.ndim(out) else float(out)


def optimal_inventory_linear(params: ModelParams, frak_n: float, q0: float, t) -> np.ndarray | float:
    """Deterministic optimal inventory path started from q0 at time 0.

    For gamma > 0 this is the explicit two-exponential solution written with
    decayed exponentials only; for gamma = 0 the analytic limit integrates
    the affine feedback speed against the rational gain -m/(2k + m*(T-t)).
    """
    t = _check_time(params, t)
    k, m, c = params.k, params.m, params.c
    d = derived_constants(params, frak_n)
    if uses_zero_gamma_branch(params):
        u_t = 2.0 * k + m * (params.T - t)
        u_0 = 2.0 * k + m * params.T
        j1 = (1.0 / u_t - 1.0 / u_0) / m
        j2 = ((u_0 + 4.0 * k * k / u_0) - (u_t + 4.0 * k * k / u_t)) / (m * m)
        out = (u_t / u_0) * (q0 + c * frak_n * u_0 * j1 + d.zeta * u_0 * j2 / (4.0 * k))
    else:
        r = d.omega / k
        decay_2t = math.exp(-2.0 * r * params.T)
        denom = d.phi_plus + d.phi_minus * decay_2t
        lead = -d.zeta * k * m / (4.0 * d.omega**2) + c * frak_n / 2.0
        sinh_part = (np.exp(-r * (params.T - t)) - np.exp(-r * (params.T + t))) / denom
        ell_ratio = (d.phi_plus * np.exp(-r * t) + d.phi_minus * np.exp(-r * (2.0 * params.T - t))) / denom
        out = (
            lead * sinh_part
            - (d.zeta * k / (2.0 * d.omega**2)) * (ell_ratio - 1.0)
            + q0 * ell_ratio
        )
    return out if np.ndim(out) else float(out)


def long_horizon_position(params: ModelParams, frak_n: float) -> float:
    """Inventory level approached mid-horizon as T -> infinity (equivalently k -> 0).

    Balances the drift reward mu*q against the instantaneous risk
    gamma*(rho*sigma*eta*frak_n*q + sigma^2*q^2/2).
    """
    if params.gamma <= 0 or params.sigma <= 0:
        raise ValueError("long-horizon position requires gamma > 0 and sigma > 0")
    return (params.mu - params.gamma * params.rho * params.sigma * params.eta * frak_n) / (
        params.gamma * params.sigma**2
    )


def linear_value_function(params: ModelParams, frak_n: float, state: State) -> float:
    """Value -exp(-gamma*(x + q*S + frak_n*U + h(t, q))) of the optimal strategy."""
    if params.gamma <= 0:
        raise ValueError("the exponential-utility value function requires gamma > 0")
    t = float(_check_time(params, state.t))
    h_val = (
        h0(params, frak_n, t)
        + h1(params, frak_n, t) * state.q
        + h2(params, t) * state.q**2
    )
    return -math.exp(-params.gamma * (state.x + state.q * state.s + frak_n * state.u + h_val))


def linear_optimal_strategy(params: ModelParams, frak_n: float) -> Strategy:
    """Feedback form of the optimal speed for a linear exposure."""

    def rule(t, q, u):
        return optimal_speed_linear(params, frak_n, t, q)

    return Strategy(tag="linear-optimal", rule=rule)
