"""Characteristic tracking and the weighted virial functional J(t).

Along y'(t) = a(u(y(t), t)) the shifted profile v(x, t) = u(x + y(t), t) is
sampled on the window [-1, 0], where the weight |x|^(-delta) is integrated
exactly against the piecewise-linear interpolant of v(x) - v(0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterDomainError
from .flux import flux_derivative
from .spectral import SpectralField, interpolate

#: |u0(0)| allowed by j0
SEED_TOLERANCE = 1e-8


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ParameterDomainError(f"delta must lie in (0, 1), got {delta}")


@dataclass
class VirialState:
    delta: float
    y: float = 0.0
    j_value: float = float("nan")
    j_history: list = field(default_factory=list)

    def __post_init__(self):
        _check_delta(self.delta)

    @property
    def y_reduced(self) -> float:
        """y mapped into [-pi, pi)."""
        return float((self.y + np.pi) % (2.0 * np.pi) - np.pi)


def shifted_nodal(field: SpectralField, y: float) -> np.ndarray:
    """Nodal samples of v(x) = u(x + y), exact for the trigonometric interpolant."""
    g = field.grid
    shift = np.exp(1j * g.k * y)
    # the Nyquist term of a real interpolant is a cosine; keep it real
    shift[-1] = np.cos(g.k[-1] * y)
    return SpectralField(g, modal=field.modal * shift).nodal


def _window_moments(s0, s1, delta):
    """int s^-delta ds and int s^(1-delta) ds over [s0, s1]."""
    m0 = (s1 ** (1.0 - delta) - s0 ** (1.0 - delta)) / (1.0 - delta)
    m1 = (s1 ** (2.0 - delta) - s0 ** (2.0 - delta)) / (2.0 - delta)
    return m0, m1


def weighted_window_integral(x_nodes, values, delta) -> float:
    """int_{-1}^{0} g(x) |x|^-delta dx for g piecewise linear through (x_nodes, values).

    ``x_nodes`` must be increasing with x_nodes[0] = -1 and x_nodes[-1] = 0.
    """
    s = -np.asarray(x_nodes, dtype=float)[::-1]
    g = np.asarray(values, dtype=float)[::-1]
    s0, s1 = s[:-1], s[1:]
    g0, g1 = g[:-1], g[1:]
    m0, m1 = _window_moments(s0, s1, delta)
    width = s1 - s0
    # g(s) = g0 + (g1 - g0)(s - s0)/width on each cell
    slope = (g1 - g0) / width
    return float(np.sum((g0 - slope * s0) * m0 + slope * m1))


def _window(field: SpectralField, y: float):
    g = field.grid
    v = shifted_nodal(field, y)
    x = g.x
    inside = np.nonzero((x > -1.0) & (x <= 0.0))[0]
    # x = 0 is a node; the left end -1 sits between two nodes
    left = inside[0] - 1
    theta = (-1.0 - x[left]) / g.spacing
    v_left = (1.0 - theta) * v[left] + theta * v[left + 1]
    xs = np.concatenate(([-1.0], x[inside]))
    vs = np.concatenate(([v_left], v[inside]))
    return xs, vs


def j_functional(field: SpectralField, y: float, delta: float) -> float:
    """J = int_{-1}^0 (v(x) - v(0)) |x|^-delta dx with v(x) = u(x + y)."""
    _check_delta(delta)
    xs, vs = _window(field, y)
    return weighted_window_integral(xs, vs - vs[-1], delta)


def j0(initial_field: SpectralField, delta: float) -> float:
    """J at t = 0, y = 0; requires u0(0) = 0."""
    _check_delta(delta)
    u_at_0 = interpolate(initial_field, 0.0)
    if abs(u_at_0) > SEED_TOLERANCE:
        raise ConfigurationError(f"virial seed needs u0(0) = 0, got {u_at_0:.3e}")
    return j_functional(initial_field, 0.0, delta)


def characteristic_speed(field: SpectralField, y: float, m_ratio: float) -> float:
    return float(flux_derivative(interpolate(field, y), m_ratio))


def advance_characteristic(state: VirialState, stage_fields, dt: float, m_ratio: float) -> VirialState:
    """RK4 update of y using the four stage fields of the PDE step.

    ``stage_fields`` holds the solution approximations at t, t + dt/2,
    t + dt/2 and t + dt, in that order. A single frozen field may be passed
    for all four.
    """
    state.y = characteristic_step(state.y, stage_fields, dt, m_ratio)
    return state


def characteristic_step(y: float, stage_fields, dt: float, m_ratio: float) -> float:
    if isinstance(stage_fields, SpectralField):
        stage_fields = (stage_fields,) * 4
    f1, f2, f3, f4 = stage_fields
    k1 = characteristic_speed(f1, y, m_ratio)
    k2 = characteristic_speed(f2, y + 0.5 * dt * k1, m_ratio)
    k3 = characteristic_speed(f3, y + 0.5 * dt * k2, m_ratio)
    k4 = characteristic_speed(f4, y + dt * k3, m_ratio)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def odi_residual(j_history, m_ratio: float, delta: float) -> np.ndarray:
    """dJ/dt - delta/(1+M) J^2 with dJ/dt by second-order differences in time."""
    _check_delta(delta)
    hist = np.asarray(j_history, dtype=float)
    if hist.ndim != 2 or hist.shape[0] < 3:
        raise ValueError("odi_residual needs at least 3 (t, J) samples")
    t, j = hist[:, 0], hist[:, 1]
    djdt = np.gradient(j, t, edge_order=2)
    return djdt - delta / (1.0 + m_ratio) * j * j


def blowup_time_bound(j0_value: float, m_ratio: float, delta: float) -> float:
    """(1+M)/(delta J0): the time by which J must blow up under the ODI."""
    _check_delta(delta)
    if not j0_value > 0:
        raise ParameterDomainError(f"j0 must be > 0, got {j0_value}")
    return (1.0 + m_ratio) / (delta * j0_value)
