"""Monitored functionals: norms, entropies, Fisher informations, balances, envelopes.

Integrals over the torus use the nodal rule ``h * sum``, which is the
trapezoidal rule on a periodic grid. Functionals that need ``log u`` or
``1/u`` are reported as NaN (and listed in ``DiagnosticsRecord.undefined``)
when the profile is not bounded away from zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import optimize

from .errors import ParameterDomainError
from .flux import Parameters, flux
from .spectral import (
    SpectralField,
    derivative,
    frac_laplacian,
    holder_seminorm,
    interpolate,
    mean,
    normalizing_constant,
    sobolev_seminorm,
    w_s1_seminorm,
)

UNDEFINED = float("nan")


@dataclass(frozen=True)
class EntropyGuard:
    """Minimum of u below which log/reciprocal functionals are left undefined."""

    positivity_floor_threshold: float = 1e-8

    def positive(self, field: SpectralField) -> bool:
        return float(field.nodal.min()) >= self.positivity_floor_threshold

    def nonnegative(self, field: SpectralField) -> bool:
        return float(field.nodal.min()) >= -self.positivity_floor_threshold


DEFAULT_GUARD = EntropyGuard()


def _integral(field: SpectralField, values) -> float:
    return field.grid.spacing * float(np.sum(values))


def entropy_f1(field: SpectralField, guard: EntropyGuard = DEFAULT_GUARD) -> float:
    """int (u log u - u + 1) dx."""
    if not guard.positive(field):
        return UNDEFINED
    u = field.nodal
    return _integral(field, u * np.log(u) - u + 1.0)


def entropy_f2(field: SpectralField, guard: EntropyGuard = DEFAULT_GUARD) -> float:
    """int (1 + u) log(1 + u) dx."""
    if not guard.nonnegative(field):
        return UNDEFINED
    u = field.nodal
    return _integral(field, (1.0 + u) * np.log1p(u))


def _log_denominator(u, m_ratio):
    return np.log(u * u + m_ratio * (1.0 - u) ** 2)


def entropy_f3(field: SpectralField, m_ratio: float) -> float:
    """int u log(u^2 + M (1-u)^2) dx."""
    u = field.nodal
    return _integral(field, u * _log_denominator(u, m_ratio))


def fisher_i1(field: SpectralField, alpha: float, guard: EntropyGuard = DEFAULT_GUARD) -> float:
    """int Lambda^alpha u * log u dx."""
    if not guard.positive(field):
        return UNDEFINED
    lap = frac_laplacian(field, alpha).nodal
    return _integral(field, lap * np.log(field.nodal))


def fisher_i2(field: SpectralField, alpha: float, guard: EntropyGuard = DEFAULT_GUARD) -> float:
    """int Lambda^alpha u * log(1 + u) dx."""
    if not guard.nonnegative(field):
        return UNDEFINED
    lap = frac_laplacian(field, alpha).nodal
    return _integral(field, lap * np.log1p(field.nodal))


def fisher_i3(field: SpectralField, alpha: float, m_ratio: float) -> float:
    """int Lambda^alpha u [log(u^2 + M(1-u)^2) + 2 (M+1) f(u)] dx."""
    u = field.nodal
    lap = frac_laplacian(field, alpha).nodal
    weight = _log_denominator(u, m_ratio) + 2.0 * (m_ratio + 1.0) * flux(u, m_ratio)
    return _integral(field, lap * weight)


def entropy_b_functional(field: SpectralField, m_ratio: float,
                         guard: EntropyGuard = DEFAULT_GUARD) -> float:
    """F3 + M/(1+M) [int log(u^2 + M(1-u)^2) - 2 sqrt(M) int arctan(sqrt(M)(1/u - 1))].

    Along smooth positive solutions with mu = 0 this plus
    nu * int_0^t I3 is conserved.
    """
    if not guard.positive(field):
        return UNDEFINED
    u = field.nodal
    M = m_ratio
    sq = math.sqrt(M)
    logd = _log_denominator(u, M)
    bracket = _integral(field, logd) - 2.0 * sq * _integral(field, np.arctan(sq * (1.0 / u - 1.0)))
    return _integral(field, u * logd) + M / (1.0 + M) * bracket


def sup_abs(field: SpectralField) -> float:
    """sup |u| of the trigonometric interpolant, refined around the nodal maximum."""
    vals = np.abs(field.nodal)
    i = int(np.argmax(vals))
    best = float(vals[i])
    if best == 0.0:
        return 0.0
    h = field.grid.spacing
    x0 = field.grid.x[i]
    res = optimize.minimize_scalar(
        lambda s: -abs(interpolate(field, s)),
        bounds=(x0 - h, x0 + h),
        method="bounded",
        options={"xatol": 1e-10 * max(1.0, abs(x0))},
    )
    return max(best, -float(res.fun))


# ---------------------------------------------------------------- records

@dataclass
class DiagnosticsRecord:
    time: float
    l2_sq: float
    hs_beta_half_sq: float
    hs_alpha_half_sq: float
    dissipation_integral: float
    energy_total: float
    linf: float
    mean: float
    lipschitz: float
    grad_linf: float
    f1: float
    f2: float
    f3: float
    i1: float
    i2: float
    i3: float
    holder_delta: float
    positivity_floor: float
    # virial columns, present only when the tracker is enabled
    j_value: float | None = None
    char_y: float | None = None
    char_value: float | None = None
    odi_residual: float | None = None
    # values needed by balance residuals but not written as columns
    extras: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def undefined(self) -> tuple[str, ...]:
        return tuple(
            name for name in CORE_COLUMNS
            if isinstance(getattr(self, name), float) and math.isnan(getattr(self, name))
        )

    def row(self, virial: bool = False) -> list[float]:
        cols = CORE_COLUMNS + (VIRIAL_COLUMNS if virial else ())
        return [getattr(self, c) for c in cols]


CORE_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))[:18]
VIRIAL_COLUMNS = ("j_value", "char_y", "char_value", "odi_residual")


def norms_snapshot(field: SpectralField, params: Parameters, holder_delta: float = 0.1,
                   holder_stride: int | None = None) -> dict:
    """Norm fields of a record; seminorm orders follow params.alpha / params.beta."""
    u = field.nodal
    grad = derivative(field)
    grad_linf = sup_abs(grad)
    linf = float(np.abs(u).max())
    return {
        "l2_sq": field.grid.spacing * float(np.dot(u, u)),
        "hs_beta_half_sq": sobolev_seminorm(field, params.beta / 2.0) ** 2,
        "hs_alpha_half_sq": sobolev_seminorm(field, params.alpha / 2.0) ** 2,
        "linf": linf,
        "mean": mean(field),
        "lipschitz": max(linf, grad_linf),
        "grad_linf": grad_linf,
        "holder_delta": holder_seminorm(field, holder_delta, holder_stride),
        "positivity_floor": float(u.min()),
    }


def make_record(field: SpectralField, time: float, params: Parameters,
                dissipation_integral: float, guard: EntropyGuard = DEFAULT_GUARD,
                holder_delta: float = 0.1, holder_stride: int | None = None) -> DiagnosticsRecord:
    """All monitored functionals of one snapshot."""
    norms = norms_snapshot(field, params, holder_delta, holder_stride)
    M, a = params.m_ratio, params.alpha
    energy = norms["l2_sq"] + params.mu * norms["hs_beta_half_sq"] + dissipation_integral
    rec = DiagnosticsRecord(
        time=float(time),
        dissipation_integral=float(dissipation_integral),
        energy_total=energy,
        f1=entropy_f1(field, guard),
        f2=entropy_f2(field, guard),
        f3=entropy_f3(field, M),
        i1=fisher_i1(field, a, guard),
        i2=fisher_i2(field, a, guard),
        i3=fisher_i3(field, a, M),
        **norms,
    )
    rec.extras["b_functional"] = entropy_b_functional(field, M, guard)
    rec.extras["max_u"] = float(field.nodal.max())
    return rec


# ---------------------------------------------------------------- balances

def _records(trajectory):
    return trajectory.records if hasattr(trajectory, "records") else list(trajectory)


def running_trapezoid(times, values) -> np.ndarray:
    """Cumulative trapezoid integral starting at 0; NaN propagates forward."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(t)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (v[1:] + v[:-1]))
    return out


def entropy_balance_residual_a(trajectory, nu: float) -> np.ndarray:
    """F1(t) + nu * int_0^t I1 ds - F1(0) at every record (NaN where undefined)."""
    recs = _records(trajectory)
    t = [r.time for r in recs]
    f1 = np.array([r.f1 for r in recs])
    return f1 + nu * running_trapezoid(t, [r.i1 for r in recs]) - f1[0]


def entropy_balance_residual_b(trajectory, nu: float) -> np.ndarray:
    """Residual of the F3 balance including its log / arctan bracket."""
    recs = _records(trajectory)
    t = [r.time for r in recs]
    b = np.array([r.extras.get("b_functional", UNDEFINED) for r in recs])
    return b + nu * running_trapezoid(t, [r.i3 for r in recs]) - b[0]


# ---------------------------------------------------------------- decay envelopes

STATEMENT = "statement"
PROOF = "proof"


def periodic_decay_rate(alpha: float, constant_variant: str = PROOF) -> float:
    """2 Gamma(1+alpha) cos((1-alpha) pi/2) / L^(1+alpha), L = pi (statement) or 2 pi (proof)."""
    if not 0.0 < alpha <= 2.0:
        raise ParameterDomainError(f"alpha must lie in (0, 2], got {alpha}")
    if constant_variant not in (STATEMENT, PROOF):
        raise ParameterDomainError(f"unknown constant variant {constant_variant!r}")
    length = math.pi if constant_variant == STATEMENT else 2.0 * math.pi
    return 2.0 * math.gamma(1.0 + alpha) * math.cos((1.0 - alpha) * math.pi / 2.0) / length ** (1.0 + alpha)


def decay_envelope_periodic(t, mean_u0: float, linf_u0: float, alpha: float,
                            constant_variant: str = PROOF):
    """<u0> + (||u0||_inf - <u0>) exp(-r t)."""
    r = periodic_decay_rate(alpha, constant_variant)
    return mean_u0 + (linf_u0 - mean_u0) * np.exp(-r * np.asarray(t, dtype=float))


def decay_envelope_real_line(t, linf_u0: float, l1_u0: float, alpha: float,
                             constant_variant: str = PROOF):
    """Algebraic sup-norm decay on the line; a formula evaluator only.

    statement: ||u0||_inf / (1 + alpha C ||u0||_inf^alpha t / 2)^(1/alpha)
    proof:     ||u0||_inf / (1 + alpha C (||u0||_inf / ||u0||_1)^alpha t / 2^(1+alpha))^(1/alpha)
    with C the kernel constant of Lambda^alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterDomainError(f"alpha must lie in (0, 2), got {alpha}")
    if linf_u0 <= 0 or l1_u0 <= 0:
        raise ParameterDomainError("norms must be positive")
    c = normalizing_constant(alpha)
    t = np.asarray(t, dtype=float)
    if constant_variant == STATEMENT:
        rate = alpha * c / 2.0 * linf_u0**alpha
    elif constant_variant == PROOF:
        rate = alpha * c / 2.0 ** (1.0 + alpha) * (linf_u0 / l1_u0) ** alpha
    else:
        raise ParameterDomainError(f"unknown constant variant {constant_variant!r}")
    return linf_u0 / (1.0 + rate * t) ** (1.0 / alpha)


@dataclass(frozen=True)
class EnvelopeSample:
    time: float
    linf: float
    envelope: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.envelope - self.linf


def envelope_monitor(trajectory, params: Parameters, tolerance: float = 1e-8,
                     constant_variant: str = PROOF) -> list[EnvelopeSample]:
    """Check ||u(t)||_inf against the periodic decay envelope at each record."""
    if params.mu != 0 or not params.nu > 0:
        raise ParameterDomainError("the decay envelope applies to mu = 0, nu > 0 runs")
    recs = _records(trajectory)
    m0, l0 = recs[0].mean, recs[0].linf
    out = []
    for r in recs:
        env = float(decay_envelope_periodic(r.time, m0, l0, params.alpha, constant_variant))
        out.append(EnvelopeSample(r.time, r.linf, env, r.linf <= env + tolerance))
    return out


# ---------------------------------------------------------------- functional inequalities

def riesz_constant(epsilon: float) -> float:
    """int_T |y|^(-1+2 eps) dy = pi^(2 eps) / eps."""
    return math.pi ** (2.0 * epsilon) / epsilon


@dataclass(frozen=True)
class Prop1Report:
    alpha: float
    epsilon: float
    which: str
    fisher: float
    l1_lhs: float
    l1_rhs: float
    linf_lhs: float
    linf_rhs: float
    defined: bool = True

    @property
    def l1_slack(self) -> float:
        return self.l1_rhs - self.l1_lhs

    @property
    def linf_slack(self) -> float:
        return self.linf_rhs - self.linf_lhs

    @property
    def holds(self) -> bool | None:
        if not self.defined:
            return None
        return self.l1_slack >= 0 and self.linf_slack >= 0


def prop1_inequality_check(field: SpectralField, alpha: float, epsilon: float,
                           which: str = "i1", guard: EntropyGuard = DEFAULT_GUARD) -> Prop1Report:
    """Both sides of the W^{alpha/2-eps,1} and H^{alpha/2} bounds by a Fisher information.

    ||u||_{W^{a/2-e,1}}^2 <= 2 C(e)/C_a ||u||_1 I[u]
    ||u||_{H^{a/2}}^2     <= 4/C_a ||u||_inf I[u]
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterDomainError(f"alpha must lie in (0, 2), got {alpha}")
    if not 0.0 < epsilon < alpha / 2.0:
        raise ParameterDomainError(f"epsilon must lie in (0, alpha/2), got {epsilon}")
    if which not in ("i1", "i2"):
        raise ParameterDomainError(f"which must be 'i1' or 'i2', got {which!r}")
    nan = UNDEFINED
    if not guard.positive(field):
        return Prop1Report(alpha, epsilon, which, nan, nan, nan, nan, nan, defined=False)
    fisher = fisher_i1(field, alpha, guard) if which == "i1" else fisher_i2(field, alpha, guard)
    c_alpha = normalizing_constant(alpha)
    u = field.nodal
    l1 = field.grid.spacing * float(np.abs(u).sum())
    return Prop1Report(
        alpha=alpha,
        epsilon=epsilon,
        which=which,
        fisher=fisher,
        l1_lhs=w_s1_seminorm(field, alpha / 2.0 - epsilon) ** 2,
        l1_rhs=2.0 * riesz_constant(epsilon) / c_alpha * l1 * fisher,
        linf_lhs=sobolev_seminorm(field, alpha / 2.0) ** 2,
        linf_rhs=4.0 / c_alpha * float(np.abs(u).max()) * fisher,
    )


def random_positive_trig_polynomial(grid, rng: np.random.Generator, max_mode: int = 8,
                                    floor: float = 0.1) -> SpectralField:
    """Random trig polynomial with modes <= max_mode shifted so min u >= floor.

    The minimum is taken on a 16x oversampled grid so the bound holds for the
    continuous profile, not only at the nodes.
    """
    k = np.arange(1, max_mode + 1)
    a = rng.normal(size=max_mode) / k
    b = rng.normal(size=max_mode) / k
    fine = np.linspace(-np.pi, np.pi, 16 * grid.n_nodes, endpoint=False)

    def shape(x):
        return np.cos(np.outer(x, k)) @ a + np.sin(np.outer(x, k)) @ b

    shift = floor - shape(fine).min() + rng.uniform(0.0, 1.0)
    return SpectralField(grid, nodal=shape(grid.x) + shift)
