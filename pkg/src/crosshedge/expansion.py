"""First-order expansion of the value function for non-linear exposures.

Cross impact c and risk aversion gamma are jointly scaled by theta; the
certainty-equivalent value admits the expansion

    h = h0 + theta*(c*h1 + gamma*h2) + o(theta^2),

where h0 collects a risk-neutral execution value plus the expected payoff
g(t,U), and the first-order coefficients are quadratic in inventory with
time/factor coefficients lambda_0, lambda_1 (cross impact) and Lambda_0,
Lambda_1, Lambda_2 (risk aversion).  Conditional expectations along the
uncontrolled factor reduce through the delta-martingale property wherever
possible; the single non-reducible term (the squared delta inside Lambda_0)
is integrated with Gauss-Hermite nodes under an outer Gauss-Legendre time
rule.

Two implementable strategies follow: ``nu_hat`` assembles the expansion
speed nu_0 + theta*(c*nu_1 + gamma*nu_2); ``nu_prime`` substitutes the
payoff delta for the unit count in the linear-exposure optimal speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .bachelier import PayoffCurve
from .linear import optimal_speed_linear
from .market import ModelParams, Strategy

__all__ = [
    "ExpansionScale",
    "ExpansionCoefficients",
    "expansion_coefficients",
    "f_coefficients",
    "lambda0",
    "lambda1",
    "Lambda0",
    "Lambda1",
    "Lambda2",
    "nu_hat",
    "nu_hat_components",
    "nu_prime",
    "risk_neutral_cross_impact_speed",
    "expansion_value",
    "expansion_nu_hat_strategy",
    "delta_substitution_strategy",
    "risk_neutral_cross_impact_strategy",
]

TIME_NODES = 64
HERMITE_NODES = 128

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-10, limit=200)


@dataclass(frozen=True)
class ExpansionScale:
    """Expansion bookkeeping: theta scales (c, gamma) into the effective pair."""

    theta: float
    effective_c: float
    effective_gamma: float

    def __post_init__(self):
        if not self.theta >= 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")

    @classmethod
    def from_params(cls, params: ModelParams, theta: float = 1.0) -> "ExpansionScale":
        return cls(theta=theta, effective_c=theta * params.c, effective_gamma=theta * params.gamma)


def _check_time(params: ModelParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > params.T * (1.0 + 1e-12)):
        raise ValueError(f"time must lie in [0, T={params.T}], got {t}")
    return np.clip(t, 0.0, params.T)


def _f1(params: ModelParams, t):
    tau = params.T - np.asarray(t, dtype=float)
    k, m = params.k, params.m
    return params.mu * tau * (4.0 * k + m * tau) / (4.0 * k + 2.0 * m * tau)


def _f2(params: ModelParams, t):
    tau = params.T - np.asarray(t, dtype=float)
    k, m = params.k, params.m
    return -k * m / (2.0 * k + m * tau) - params.b / 2.0


def f_coefficients(params: ModelParams, t: float) -> tuple[float, float, float]:
    """Zero-order value coefficients (f0, f1, f2) at time t.

    f1 and f2 are explicit rationals in time-to-go; f0 integrates f1^2/(4k)
    by adaptive quadrature and short-circuits to 0 when mu = 0.
    """
    t = float(_check_time(params, t))
    f1 = float(_f1(params, t))
    f2 = float(_f2(params, t))
    if params.mu == 0.0 or t == params.T:
        f0 = 0.0
    else:
        val, _ = quad(lambda s: _f1(params, s) ** 2, t, params.T, **_QUAD_OPTS)
        f0 = val / (4.0 * params.k)
    return f0, f1, f2


def lambda1(params: ModelParams, payoff: PayoffCurve, t, u) -> np.ndarray | float:
    """Cross-impact coefficient on q: -m*(T-t)/(2k + m*(T-t)) * delta(t,u).

    The defining expectation of the running future delta collapses through
    the delta-martingale property; no sampling is involved.
    """
    t_arr = _check_time(params, t)
    tau = params.T - t_arr
    factor = -params.m * tau / (2.0 * params.k + params.m * tau)
    out = factor * np.asarray(payoff.delta(float(t_arr), u), dtype=float)
    return out if np.ndim(out) else float(out)


def lambda0(params: ModelParams, payoff: PayoffCurve, t: float, u) -> np.ndarray | float:
    """Cross-impact coefficient at q^0: delta(t,u) times a drift-weighted time integral.

    Vanishes when mu = 0 (no drift-induced trading to interact with).
    """
    t = float(_check_time(params, t))
    if params.mu == 0.0 or t == params.T:
        z = np.zeros_like(np.asarray(u, dtype=float))
        return z if z.ndim else 0.0
    k, m = params.k, params.m

    def integrand(s: float) -> float:
        return float(_f1(params, s)) / (2.0 * k + m * (params.T - s))

    weight, _ = quad(integrand, t, params.T, **_QUAD_OPTS)
    out = weight * np.asarray(payoff.delta(t, u), dtype=float)
    return out if np.ndim(out) else float(out)


def Lambda2(params: ModelParams, t) -> np.ndarray | float:
    """Risk-aversion coefficient on q^2; nonpositive, zero at the horizon."""
    t_arr = _check_time(params, t)
    tau = params.T - t_arr
    k, m = params.k, params.m
    out = (
        -params.sigma**2
        * tau
        * (12.0 * k * k + 6.0 * k * m * tau + m * m * tau * tau)
        / (6.0 * (2.0 * k + m * tau) ** 2)
    )
    return out if np.ndim(out) else float(out)


def _drift_risk_integral(params: ModelParams, t: float) -> float:
    """D(t) = [integral_t^T (2k+m(T-s)) f1(s) Lambda2(s) ds] / (k*(2k+m(T-t)))."""
    if params.mu == 0.0 or t == params.T:
        return 0.0
    k, m = params.k, params.m

    def integrand(s: float) -> float:
        return (2.0 * k + m * (params.T - s)) * float(_f1(params, s)) * float(Lambda2(params, s))

    val, _ = quad(integrand, t, params.T, **_QUAD_OPTS)
    return val / (k * (2.0 * k + m * (params.T - t)))


def _lemma_weight(params: ModelParams, t) -> np.ndarray:
    """integral_t^T (2k+m(T-s)) ds / (2k+m(T-t)) = (2k*tau + m*tau^2/2)/(2k+m*tau)."""
    tau = params.T - np.asarray(t, dtype=float)
    k, m = params.k, params.m
    return (2.0 * k * tau + 0.5 * m * tau * tau) / (2.0 * k + m * tau)


def Lambda1(params: ModelParams, payoff: PayoffCurve, t, u) -> np.ndarray | float:
    """Risk-aversion coefficient on q: drift-risk integral minus the hedging pull.

    The delta-dependent part reduces through the martingale property to
    -rho*sigma*eta * delta(t,u) * lemma-weight(t); the drift part is a
    deterministic time integral (zero when mu = 0).  Sign is indeterminate
    in general.
    """
    t_sc = float(_check_time(params, t))
    d_term = _drift_risk_integral(params, t_sc)
    pull = -params.rho * params.sigma * params.eta * float(_lemma_weight(params, t_sc))
    out = d_term + pull * np.asarray(payoff.delta(t_sc, u), dtype=float)
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=16)
def _legendre_nodes(n: int):
    return leggauss(n)


@lru_cache(maxsize=16)
def _normal_nodes(n: int):
    x, w = hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def _gauss_legendre(t0: float, t1: float, n: int):
    x, w = _legendre_nodes(n)
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    return mid + half * x, half * w


def _expected_delta_sq(params: ModelParams, payoff: PayoffCurve, t: float, s: float, u, n_nodes: int):
    """E[(delta(s, U~_s))^2 | U~_t = u]; not lemma-reducible.

    Uses the payoff's closed form when it carries one (calls, linear);
    otherwise Gauss-Hermite, adequate for genuinely smooth payoffs.
    """
    u = np.asarray(u, dtype=float)
    if payoff.delta_sq_expectation is not None:
        return np.asarray(payoff.delta_sq_expectation(t, s, u), dtype=float)
    sd = params.eta * math.sqrt(max(s - t, 0.0))
    if sd == 0.0:
        d = np.asarray(payoff.delta(s, u), dtype=float)
        return d * d
    x, w = _normal_nodes(n_nodes)
    pts = (u + params.beta * (s - t))[..., None] + sd * x
    d = np.asarray(payoff.delta(s, pts), dtype=float)
    return (d * d) @ w


def Lambda0(
    params: ModelParams,
    payoff: PayoffCurve,
    t: float,
    u,
    time_nodes: int = TIME_NODES,
    hermite_nodes: int = HERMITE_NODES,
) -> np.ndarray | float:
    """Risk-aversion coefficient at q^0 (enters the value, not the strategies).

    The drift part reduces through the martingale property; the squared-delta
    variance cost needs genuine quadrature over the factor transition.
    """
    t = float(_check_time(params, t))
    u = np.asarray(u, dtype=float)
    if t == params.T:
        z = np.zeros_like(u)
        return z if z.ndim else 0.0
    s_nodes, s_w = _gauss_legendre(t, params.T, time_nodes)

    drift_part = 0.0
    if params.mu != 0.0:
        f1s = _f1(params, s_nodes)
        d_vals = np.array([_drift_risk_integral(params, float(s)) for s in s_nodes])
        kappa = _lemma_weight(params, s_nodes)
        delta_t = np.asarray(payoff.delta(t, u), dtype=float)
        det = float(np.sum(s_w * f1s * d_vals))
        red = np.sum(s_w * f1s * kappa) * params.rho * params.sigma * params.eta
        drift_part = (det - red * delta_t) / (2.0 * params.k)

    if params.eta == 0.0:
        variance_part = np.zeros_like(u)
    else:
        dsq = np.stack(
            [np.asarray(_expected_delta_sq(params, payoff, t, float(s), u, hermite_nodes)) for s in s_nodes],
            axis=-1,
        )
        variance_part = -0.5 * params.eta**2 * (dsq @ s_w)
    out = drift_part + variance_part
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class ExpansionCoefficients:
    """All expansion coefficient functions for one (params, payoff) pair."""

    f0: Callable[[float], float]
    f1: Callable[[float], float]
    f2: Callable[[float], float]
    lambda0: Callable[[float, np.ndarray], np.ndarray]
    lambda1: Callable[[float, np.ndarray], np.ndarray]
    Lambda0: Callable[[float, np.ndarray], np.ndarray]
    Lambda1: Callable[[float, np.ndarray], np.ndarray]
    Lambda2: Callable[[float], float]


def expansion_coefficients(params: ModelParams, payoff: PayoffCurve) -> ExpansionCoefficients:
    return ExpansionCoefficients(
        f0=lambda t: f_coefficients(params, t)[0],
        f1=lambda t: float(_f1(params, _check_time(params, t))),
        f2=lambda t: float(_f2(params, _check_time(params, t))),
        lambda0=lambda t, u: lambda0(params, payoff, t, u),
        lambda1=lambda t, u: lambda1(params, payoff, t, u),
        Lambda0=lambda t, u: Lambda0(params, payoff, t, u),
        Lambda1=lambda t, u: Lambda1(params, payoff, t, u),
        Lambda2=lambda t: float(Lambda2(params, t)),
    )


def nu_hat_components(
    params: ModelParams,
    payoff: PayoffCurve,
    scale: ExpansionScale,
    t: float,
    q,
    u,
) -> tuple[np.ndarray | float, np.ndarray | float, np.ndarray | float]:
    """Pieces of the expansion speed: (nu_0, theta*c*nu_1, theta*gamma*nu_2).

    nu_0 is the risk-neutral no-cross-impact execution speed; the c-term
    pushes the factor in the option's favor net of round-trip costs; the
    gamma-term combines the hedging pull with inventory-risk decay.
    """
    t = float(_check_time(params, t))
    q = np.asarray(q, dtype=float)
    two_k = 2.0 * params.k
    nu0 = (_f1(params, t) + (2.0 * _f2(params, t) + params.b) * q) / two_k
    delta = np.asarray(payoff.delta(t, u), dtype=float)
    c_term = scale.effective_c * (delta + lambda1(params, payoff, t, u)) / two_k
    gamma_term = scale.effective_gamma * (
        Lambda1(params, payoff, t, u) + 2.0 * Lambda2(params, t) * q
    ) / two_k
    return nu0, c_term, gamma_term


def nu_hat(params: ModelParams, payoff: PayoffCurve, scale: ExpansionScale, t: float, q, u):
    """Expansion trading speed nu_0 + theta*(c*nu_1 + gamma*nu_2); affine in q."""
    nu0, c_term, gamma_term = nu_hat_components(params, payoff, scale, t, q, u)
    out = nu0 + c_term + gamma_term
    return out if np.ndim(out) else float(out)


def _effective_params(params: ModelParams, scale: ExpansionScale) -> ModelParams:
    return replace(params, c=scale.effective_c, gamma=scale.effective_gamma)


def nu_prime(params: ModelParams, payoff: PayoffCurve, scale: ExpansionScale, t: float, q, u):
    """Delta-substitution speed: the linear-case optimal speed with the unit
    count replaced by the payoff delta, at the theta-scaled (c, gamma).

    Exact when the payoff is linear; within o(theta) of ``nu_hat`` otherwise.
    """
    t = float(_check_time(params, t))
    delta = payoff.delta(t, u)
    out = optimal_speed_linear(_effective_params(params, scale), delta, t, q)
    return out if np.ndim(out) else float(out)


def risk_neutral_cross_impact_speed(params: ModelParams, payoff: PayoffCurve, t: float, q, u):
    """Reduced gamma=0 speed: nu_0 plus c*delta(t,u)/(2k + m*(T-t)).

    Drives inventory toward (c/m)*delta(t,u) with a gain that stiffens as
    the horizon approaches; equals ``nu_hat`` at gamma=0, theta=1.
    """
    t = float(_check_time(params, t))
    q = np.asarray(q, dtype=float)
    tau = params.T - t
    nu0 = (_f1(params, t) + (2.0 * _f2(params, t) + params.b) * q) / (2.0 * params.k)
    delta = np.asarray(payoff.delta(t, u), dtype=float)
    out = nu0 + params.c * delta / (2.0 * params.k + params.m * tau)
    return out if np.ndim(out) else float(out)


def expansion_value(
    params: ModelParams,
    payoff: PayoffCurve,
    scale: ExpansionScale,
    t: float,
    q,
    u,
    return_components: bool = False,
):
    """First-order value approximation h0 + theta*(c*h1 + gamma*h2).

    Second-order terms have no explicit solution and are not computed; the
    truncation error is o(theta^2) in the defining PDE.  With
    ``return_components`` the pieces (h0, h1, h2) are returned alongside.
    """
    t = float(_check_time(params, t))
    q = np.asarray(q, dtype=float)
    f0, f1, f2 = f_coefficients(params, t)
    g_val = np.asarray(payoff.g(t, u), dtype=float)
    h0_val = f0 + f1 * q + f2 * q * q + g_val
    h1_val = np.asarray(lambda0(params, payoff, t, u)) + np.asarray(lambda1(params, payoff, t, u)) * q
    h2_val = (
        np.asarray(Lambda0(params, payoff, t, u))
        + np.asarray(Lambda1(params, payoff, t, u)) * q
        + Lambda2(params, t) * q * q
    )
    total = h0_val + scale.effective_c * h1_val + scale.effective_gamma * h2_val
    total = total if np.ndim(total) else float(total)
    if return_components:
        return total, {"h0": h0_val, "h1": h1_val, "h2": h2_val}
    return total


def expansion_nu_hat_strategy(params: ModelParams, payoff: PayoffCurve, scale: ExpansionScale) -> Strategy:
    def rule(t, q, u):
        return nu_hat(params, payoff, scale, t, q, u)

    return Strategy(tag="expansion-nu-hat", rule=rule)


def delta_substitution_strategy(params: ModelParams, payoff: PayoffCurve, scale: ExpansionScale) -> Strategy:
    effective = _effective_params(params, scale)

    def rule(t, q, u):
        return optimal_speed_linear(effective, payoff.delta(float(t), u), t, q)

    return Strategy(tag="delta-substitution", rule=rule)


def risk_neutral_cross_impact_strategy(params: ModelParams, payoff: PayoffCurve) -> Strategy:
    def rule(t, q, u):
        return risk_neutral_cross_impact_speed(params, payoff, t, q, u)

    return Strategy(tag="risk-neutral-cross-impact", rule=rule)
