"""Integrating-factor RK4 time stepping on the modal system.

In modal form the equation reads

    d u_k/dt = [-i k (f(u))_k - nu |k|^alpha u_k] / (1 + mu |k|^beta),

so the conservative term is a modal divisor and the dissipative part is the
diagonal rate sigma_k = nu |k|^alpha / (1 + mu |k|^beta), integrated exactly.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DiagnosticsRecord, EntropyGuard, make_record
from .errors import ConfigurationError, NumericalError
from .flux import Parameters, flux, flux_derivative
from .spectral import Grid, SpectralField, dealias_mask, symbol
from . import virial as vr

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    RUNNING = "running"
    RESOLUTION_LOST = "resolution_lost"
    GRADIENT_BLOWUP = "gradient_blowup"
    COMPLETED = "completed"


FIXED = "fixed"
CFL = "cfl"


@dataclass(frozen=True)
class StepPolicy:
    mode: str = CFL
    dt: float = 1e-3
    cfl_number: float = 0.5
    max_dt: float = 1e-2

    def __post_init__(self):
        if self.mode not in (FIXED, CFL):
            raise ConfigurationError(f"step mode must be {FIXED!r} or {CFL!r}, got {self.mode!r}")
        if not self.dt > 0 or not self.max_dt > 0:
            raise ConfigurationError("dt and max_dt must be > 0")
        if not 0.0 < self.cfl_number <= 1.0:
            raise ConfigurationError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")


@dataclass(frozen=True)
class State:
    field: SpectralField
    time: float = 0.0
    step_index: int = 0
    char_y: float | None = None


class _Operators:
    """Per-(grid, params) arrays shared by all steps."""

    _cache: dict = {}

    def __init__(self, grid: Grid, params: Parameters):
        k = grid.k
        self.ik = 1j * k * grid.nyquist_mask * dealias_mask(grid.n_nodes)
        self.divisor = 1.0 + params.mu * symbol(grid, params.beta) if params.mu > 0 else np.ones_like(k)
        diss = params.nu * symbol(grid, params.alpha) if params.nu > 0 else np.zeros_like(k)
        self.sigma = diss / self.divisor
        self._dt = None

    @classmethod
    def get(cls, grid, params):
        key = (grid.n_nodes, params)
        ops = cls._cache.get(key)
        if ops is None:
            if len(cls._cache) > 16:
                cls._cache.clear()
            ops = cls._cache[key] = cls(grid, params)
        return ops

    def factors(self, dt):
        if self._dt != dt:
            self._dt = dt
            self.e_half = np.exp(-0.5 * dt * self.sigma)
            self.e_full = self.e_half * self.e_half
        return self.e_half, self.e_full


def _nonlinear(grid: Grid, modal: np.ndarray, params: Parameters, ops: _Operators,
               time: float = float("nan")) -> tuple[np.ndarray, SpectralField]:
    """-i k dealias(F[f(u)]) / (1 + mu |k|^beta), and the field it was evaluated on."""
    u = SpectralField(grid, modal=modal)
    fu = flux(u.nodal, params.m_ratio)
    if not np.all(np.isfinite(fu)):
        raise NumericalError("non-finite flux value", time=time, nodal=np.array(u.nodal))
    fhat = SpectralField(grid, nodal=fu).modal
    return -ops.ik * fhat / ops.divisor, u


def rhs(state: State, params: Parameters, flux_enabled: bool = True) -> np.ndarray:
    """Modal tendency du_k/dt; the k = 0 entry is exactly zero."""
    grid = state.field.grid
    ops = _Operators.get(grid, params)
    c = state.field.modal
    out = -ops.sigma * c
    if flux_enabled:
        out = out + _nonlinear(grid, c, params, ops, state.time)[0]
    out[0] = 0.0
    return out


def if_rk4_step(state: State, params: Parameters, dt: float, flux_enabled: bool = True) -> State:
    """One integrating-factor RK4 step (Lawson form).

    When ``state.char_y`` is set the characteristic is advanced with the
    same four stage fields.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    grid = state.field.grid
    ops = _Operators.get(grid, params)
    e1, e2 = ops.factors(dt)
    c = np.array(state.field.modal)
    t = state.time

    if flux_enabled:
        def nl(modal, tt):
            return _nonlinear(grid, modal, params, ops, tt)

        k1, u1 = nl(c, t)
        k2, u2 = nl(e1 * (c + 0.5 * dt * k1), t + 0.5 * dt)
        k3, u3 = nl(e1 * c + 0.5 * dt * k2, t + 0.5 * dt)
        k4, u4 = nl(e2 * c + dt * e1 * k3, t + dt)
        new = e2 * c + dt / 6.0 * (e2 * k1 + 2.0 * e1 * (k2 + k3) + k4)
    else:
        new = e2 * c
    new[0] = c[0]

    y = state.char_y
    if y is not None:
        stages = (u1, u2, u3, u4) if flux_enabled else state.field
        y = vr.characteristic_step(y, stages, dt, params.m_ratio)
    return State(SpectralField(grid, modal=new), t + dt, state.step_index + 1, y)


def suggest_dt(state: State, params: Parameters, policy: StepPolicy) -> float:
    """cfl * min(h / max|a(u)|, 1), capped at max_dt; fixed mode returns policy.dt."""
    if policy.mode == FIXED:
        return policy.dt
    speed = float(np.max(np.abs(flux_derivative(state.field.nodal, params.m_ratio))))
    if speed == 0.0:
        return policy.max_dt
    return min(policy.cfl_number * min(state.field.grid.spacing / speed, 1.0), policy.max_dt)


# ---------------------------------------------------------------- resolution monitor

#: fraction of the dealiased band (|k| > 0.9 n/3) treated as the tail
TAIL_BAND = 0.9
#: floor applied to the initial gradient before scaling by the blow-up factor
GRADIENT_FLOOR = 1e-12


def tail_fraction(field: SpectralField) -> float:
    """Energy in 0.9 n/3 < |k| <= n/3 over the fluctuation energy sum_{k != 0} |u_k|^2.

    The mean carries no resolution information and is invariant, so it is
    left out of the total; otherwise a large mean hides an unresolved front.
    """
    g = field.grid
    n = g.n_nodes
    k = g.k
    energy = g.mode_weights * np.abs(field.modal) ** 2
    total = float(energy[1:].sum())
    if total == 0.0:
        return 0.0
    band = (k > TAIL_BAND * n / 3.0) & (3 * k <= n)
    return float(energy[band].sum()) / total


def nodal_gradient_max(field: SpectralField) -> float:
    g = field.grid
    return float(np.abs(SpectralField(g, modal=field.modal * (1j * g.k * g.nyquist_mask)).nodal).max())


@dataclass
class ResolutionMonitor:
    tail_fraction_threshold: float = 1e-4
    gradient_blowup_factor: float = 1e4
    verdict: Verdict = Verdict.RUNNING
    initial_gradient: float | None = None
    last_tail: float = 0.0
    last_gradient: float = 0.0

    def check(self, field: SpectralField) -> Verdict:
        """Update and return the verdict; terminal verdicts never revert."""
        grad = nodal_gradient_max(field)
        if self.initial_gradient is None:
            self.initial_gradient = grad
        self.last_gradient = grad
        self.last_tail = tail_fraction(field)
        if self.verdict != Verdict.RUNNING:
            return self.verdict
        ceiling = self.gradient_blowup_factor * max(self.initial_gradient, GRADIENT_FLOOR)
        if not math.isfinite(grad) or grad > ceiling:
            self.verdict = Verdict.GRADIENT_BLOWUP
        elif self.last_tail > self.tail_fraction_threshold:
            self.verdict = Verdict.RESOLUTION_LOST
        return self.verdict

    def finish(self) -> Verdict:
        if self.verdict == Verdict.RUNNING:
            self.verdict = Verdict.COMPLETED
        return self.verdict


def resolution_check(state: State, monitor: ResolutionMonitor) -> Verdict:
    return monitor.check(state.field)


# ---------------------------------------------------------------- evolution

HERMITE = "hermite"
TRAPEZOID = "trapezoid"


def dissipation_rate(field: SpectralField, params: Parameters, tendency: np.ndarray | None = None):
    """2 nu ||u||^2_{H^{alpha/2}} and, given du/dt, its time derivative."""
    g = field.grid
    if params.nu == 0:
        return 0.0, 0.0
    w = 2.0 * np.pi * g.mode_weights * symbol(g, params.alpha)
    c = field.modal
    rate = 2.0 * params.nu * float(np.dot(w, np.abs(c) ** 2))
    if tendency is None:
        return rate, float("nan")
    slope = 2.0 * params.nu * 2.0 * float(np.dot(w, (np.conj(c) * tendency).real))
    return rate, slope


@dataclass
class Trajectory:
    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)
    verdict: Verdict = Verdict.RUNNING
    final_state: State | None = None
    steps: int = 0
    max_grad: float = 0.0
    max_grad_time: float = 0.0
    j0: float | None = None
    error: str | None = None

    @property
    def t_final(self) -> float:
        return self.final_state.time if self.final_state is not None else 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def _cadence_times(t_end, cadence):
    if t_end == 0:
        return [0.0]
    count = max(1, int(round(t_end / cadence)))
    times = [min(i * cadence, t_end) for i in range(count + 1)]
    if times[-1] < t_end * (1 - 1e-12):
        times.append(t_end)
    times[-1] = t_end
    return times


def evolve(config, initial: SpectralField | None = None, flux_enabled: bool = True) -> Trajectory:
    """Integrate from t = 0 to config.t_end, recording diagnostics at the cadence.

    ``config`` needs the attributes of ``fracbl.config.SolverConfig``. Steps are
    shortened so that every cadence time is hit exactly; the resolution
    monitor runs after every step and a terminal verdict stops the run with
    a final record at the last resolved time.
    """
    grid = Grid(config.n_nodes)
    params = config.params
    policy = config.step_policy
    if initial is None:
        initial = config.initial_field(grid)
    guard = EntropyGuard(config.entropy_guard)
    monitor = ResolutionMonitor(config.tail_fraction_threshold, config.gradient_blowup_factor)
    virial_on = bool(config.virial_enabled)
    delta = config.virial_delta
    quadrature = getattr(config, "dissipation_quadrature", HERMITE)
    snap_times = sorted(float(s) for s in getattr(config, "snapshot_times", ()) or ())

    traj = Trajectory()
    state = State(initial, 0.0, 0, 0.0 if virial_on else None)
    if virial_on:
        traj.j0 = vr.j0(initial, delta)

    accum = 0.0
    prev = None  # (time, rate, slope)

    def record(st: State):
        nonlocal accum, prev
        tend = rhs(st, params, flux_enabled) if quadrature == HERMITE else None
        rate, slope = dissipation_rate(st.field, params, tend)
        if prev is not None:
            dt = st.time - prev[0]
            accum += 0.5 * dt * (prev[1] + rate)
            if quadrature == HERMITE:
                accum -= dt * dt / 12.0 * (slope - prev[2])
        prev = (st.time, rate, slope)
        rec = make_record(st.field, st.time, params, accum, guard, config.holder_delta)
        if virial_on:
            rec.char_y = st.char_y
            rec.char_value = float(vr.interpolate(st.field, st.char_y))
            rec.j_value = vr.j_functional(st.field, st.char_y, delta)
        traj.records.append(rec)
        if rec.grad_linf > traj.max_grad:
            traj.max_grad, traj.max_grad_time = rec.grad_linf, rec.time

    monitor.check(state.field)
    record(state)
    next_snap = 0
    while next_snap < len(snap_times) and snap_times[next_snap] <= 0.0:
        traj.snapshots.append((0.0, np.array(state.field.nodal)))
        next_snap += 1

    cadence = _cadence_times(config.t_end, config.diagnostic_cadence)
    try:
        for target in cadence[1:]:
            while state.time < target:
                dt = suggest_dt(state, params, policy)
                remaining = target - state.time
                # avoid a sliver step just before the target
                if dt >= remaining * (1 - 1e-9):
                    dt = remaining
                elif dt > 0.5 * remaining:
                    dt = 0.5 * remaining
                new = if_rk4_step(state, params, dt, flux_enabled)
                if abs(new.time - target) <= 1e-12 * max(1.0, target):
                    new = replace(new, time=target)
                verdict = monitor.check(new.field)
                if verdict != Verdict.RUNNING:
                    # stop at the last resolved state
                    if prev is None or state.time > prev[0]:
                        record(state)
                    break
                state = new
                while next_snap < len(snap_times) and snap_times[next_snap] <= state.time:
                    traj.snapshots.append((state.time, np.array(state.field.nodal)))
                    next_snap += 1
            if monitor.verdict != Verdict.RUNNING:
                break
            record(state)
    except NumericalError:
        log.error("numerical failure at t=%.6g after %d steps", state.time, state.step_index)
        raise
    traj.verdict = monitor.finish()
    traj.final_state = state
    traj.steps = state.step_index
    if virial_on and len(traj.records) >= 3:
        hist = [(r.time, r.j_value) for r in traj.records]
        res = vr.odi_residual(hist, params.m_ratio, delta)
        for r, v in zip(traj.records, res):
            r.odi_residual = float(v)
    return traj
