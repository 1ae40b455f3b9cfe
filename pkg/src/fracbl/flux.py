"""Buckley-Leverett flux, its derivative, and the global-existence thresholds."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, ParameterDomainError
from .spectral import normalizing_constant

log = logging.getLogger(__name__)

#: relative tolerance for calling the closed-form and cubic thresholds consistent
CONSISTENCY_RTOL = 1e-6


@dataclass(frozen=True)
class Parameters:
    """Physical parameters: dissipation (alpha, nu), conservative term (beta, mu), ratio M."""

    alpha: float = 1.0
    beta: float = 1.0
    nu: float = 0.5
    mu: float = 0.0
    m_ratio: float = 0.5

    def __post_init__(self):
        if not self.m_ratio > 0:
            raise ParameterDomainError(f"m_ratio must be > 0, got {self.m_ratio}")
        if self.nu < 0 or self.mu < 0:
            raise ParameterDomainError("nu and mu must be >= 0")
        if self.nu > 0 and not 0.0 < self.alpha <= 2.0:
            raise ParameterDomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.mu > 0 and not 0.0 < self.beta <= 2.0:
            raise ParameterDomainError(f"beta must lie in (0, 2], got {self.beta}")

    @property
    def inviscid(self) -> bool:
        return self.nu == 0 and self.mu == 0


def _check_m(m_ratio):
    if not m_ratio > 0:
        raise ParameterDomainError(f"m_ratio must be > 0, got {m_ratio}")


def flux(u, m_ratio):
    """f(u) = u^2 / (u^2 + M (1-u)^2)."""
    _check_m(m_ratio)
    u = np.asarray(u, dtype=float)
    return u * u / (u * u + m_ratio * (1.0 - u) ** 2)


def flux_derivative(u, m_ratio):
    """a(u) = f'(u) = 2 u M (1-u) / (u^2 + M (1-u)^2)^2."""
    _check_m(m_ratio)
    u = np.asarray(u, dtype=float)
    den = u * u + m_ratio * (1.0 - u) ** 2
    return 2.0 * u * m_ratio * (1.0 - u) / (den * den)


def flux_derivative_quotient_form(u, m_ratio):
    """f'(u) written as the unsimplified quotient rule."""
    _check_m(m_ratio)
    u = np.asarray(u, dtype=float)
    den = u * u + m_ratio * (1.0 - u) ** 2
    return 2.0 * u / den - u * u * (2.0 * u - 2.0 * m_ratio * (1.0 - u)) / (den * den)


def c_of_m(m_ratio, interval=(0.0, 1.0), samples=2**16):
    """sup of f'(u) over ``interval`` (default [0, 1])."""
    _check_m(m_ratio)
    lo, hi = interval
    u = np.linspace(lo, hi, samples + 1)
    a = flux_derivative(u, m_ratio)
    i = int(np.argmax(a))
    if 0 < i < samples:
        res = optimize.minimize_scalar(
            lambda s: -float(flux_derivative(s, m_ratio)),
            bracket=(u[i - 1], u[i], u[i + 1]),
            method="golden",
            options={"xtol": 1e-12},
        )
        return max(float(a[i]), -float(res.fun))
    return float(a[i])


def critical_expression(gamma, m_ratio):
    """2 g (M+1)/M + 2 g^2 (g+M) (M+1)^2 / M^2, the bound on |f'| for ||u||_inf <= g."""
    M = m_ratio
    return 2 * gamma * (M + 1) / M + 2 * gamma**2 * (gamma + M) * (M + 1) ** 2 / M**2


def sigma(gamma, m_ratio):
    """Sigma(gamma): the five-term bound used in the supercritical case."""
    _check_m(m_ratio)
    if np.any(np.asarray(gamma) < 0):
        raise ParameterDomainError("gamma must be >= 0")
    g, M = gamma, m_ratio
    return (
        2 * g * (M + 1) / M
        + 4 * g * (g + M) * (M + 1) ** 2 / M**2
        + 4 * g**2 * (g + M) * (M + 1) ** 2 / M**2
        + 2 * g**3 * (M + 1) ** 3 / M**2
        + 8 * g**3 * (g + M) ** 2 * (M + 1) ** 3 / M**3
    )


def _increasing_root(func, target):
    """Root of func(g) = target for func increasing on [0, inf) with func(0) = 0."""
    hi = 1.0
    while func(hi) < target:
        hi *= 2.0
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if func(mid) < target:
            lo = mid
        else:
            hi = mid
    return lo if abs(func(lo) - target) <= abs(func(hi) - target) else hi


def gamma_star_critical(nu, m_ratio):
    """Positive root of the critical cubic = nu."""
    _check_m(m_ratio)
    if not nu > 0:
        raise ParameterDomainError(f"nu must be > 0, got {nu}")
    return _increasing_root(lambda g: critical_expression(g, m_ratio), nu)


def gamma_star_explicit(nu, m_ratio):
    """Closed form min{1, (-1 + sqrt(1 + 2 (M+1) nu)) / (1+M)}, reported as is."""
    _check_m(m_ratio)
    if not nu > 0:
        raise ParameterDomainError(f"nu must be > 0, got {nu}")
    return min(1.0, (-1.0 + math.sqrt(1.0 + 2.0 * (m_ratio + 1.0) * nu)) / (1.0 + m_ratio))


def gamma_star_supercritical(nu, alpha, m_ratio):
    """Positive root of Sigma(g) = nu * C_alpha."""
    _check_m(m_ratio)
    if not nu > 0:
        raise ParameterDomainError(f"nu must be > 0, got {nu}")
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"alpha must lie in (0, 1), got {alpha}")
    target = nu * normalizing_constant(alpha)
    return _increasing_root(lambda g: sigma(g, m_ratio), target)


@dataclass(frozen=True)
class ThresholdReport:
    nu: float
    m_ratio: float
    alpha: float | None
    c_of_m: float
    gamma_star_critical: float
    gamma_star_explicit: float
    gamma_star_supercritical: float | None
    consistency_flag: bool

    def as_dict(self):
        return asdict(self)


def threshold_report(nu, m_ratio, alpha=None) -> ThresholdReport:
    crit = gamma_star_critical(nu, m_ratio)
    expl = gamma_star_explicit(nu, m_ratio)
    sup = gamma_star_supercritical(nu, alpha, m_ratio) if alpha is not None and 0 < alpha < 1 else None
    return ThresholdReport(
        nu=nu,
        m_ratio=m_ratio,
        alpha=alpha,
        c_of_m=c_of_m(m_ratio),
        gamma_star_critical=crit,
        gamma_star_explicit=expl,
        gamma_star_supercritical=sup,
        consistency_flag=abs(expl - crit) <= CONSISTENCY_RTOL * max(1.0, crit),
    )


# hypothesis tags accepted by smallness_check
CRITICAL_LINF = "critical-linf"
CRITICAL_SOBOLEV = "critical-sobolev"
SUPERCRITICAL_LIPSCHITZ = "supercritical-lipschitz"

_REQUIRED = {
    CRITICAL_LINF: ("linf",),
    CRITICAL_SOBOLEV: ("l2", "h_half", "h_one_plus_beta_half"),
    SUPERCRITICAL_LIPSCHITZ: ("lipschitz",),
}


@dataclass(frozen=True)
class SmallnessVerdict:
    which: str
    passed: bool
    value: float
    threshold: float

    @property
    def margin(self) -> float:
        return self.threshold - self.value


def smallness_check(u0_norms: dict, params: Parameters, which: str,
                    sobolev_constant: float | None = None) -> SmallnessVerdict:
    """Evaluate one of the small-data hypotheses for the initial datum.

    ``u0_norms`` keys: ``linf``, ``l2``, ``h_half`` (H^0.5 seminorm),
    ``h_one_plus_beta_half`` (H^((1+beta)/2) seminorm) and ``lipschitz``
    (max of sup norm and sup of the derivative). A hypothesis holds when
    some gamma strictly below the threshold works, i.e. value < threshold.
    """
    if which not in _REQUIRED:
        raise ConfigurationError(f"unknown hypothesis {which!r}; expected one of {sorted(_REQUIRED)}")
    missing = [k for k in _REQUIRED[which] if k not in u0_norms]
    if missing:
        raise ConfigurationError(f"{which} needs norms {missing}")
    p = params
    if which == CRITICAL_LINF:
        threshold = gamma_star_critical(p.nu, p.m_ratio)
        value = float(u0_norms["linf"])
    elif which == CRITICAL_SOBOLEV:
        if sobolev_constant is None:
            log.warning("no Sobolev embedding constant supplied; using C_S = 1.0, "
                        "which is not a value from the literature")
            sobolev_constant = 1.0
        if not sobolev_constant > 0:
            raise ParameterDomainError("sobolev_constant must be > 0")
        g = gamma_star_critical(p.nu, p.m_ratio)
        threshold = (1.0 + p.mu) * g * g / sobolev_constant**2
        value = (float(u0_norms["l2"]) ** 2
                 + (1.0 + p.mu) * float(u0_norms["h_half"]) ** 2
                 + p.mu * float(u0_norms["h_one_plus_beta_half"]) ** 2)
    else:
        threshold = gamma_star_supercritical(p.nu, p.alpha, p.m_ratio)
        value = float(u0_norms["lipschitz"])
    return SmallnessVerdict(which=which, passed=value < threshold, value=value, threshold=threshold)
