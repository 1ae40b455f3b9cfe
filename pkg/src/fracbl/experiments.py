"""Run orchestration, persistence and the self-test reports behind the CLI."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .diagnostics import (
    CORE_COLUMNS,
    VIRIAL_COLUMNS,
    Prop1Report,
    entropy_balance_residual_a,
    entropy_balance_residual_b,
    envelope_monitor,
    prop1_inequality_check,
    random_positive_trig_polynomial,
)
from .errors import ConfigurationError, NumericalError
from .flux import threshold_report
from .initial_data import initial_data_preset
from .integrator import Trajectory, Verdict, evolve
from .spectral import (
    Grid,
    SpectralField,
    frac_laplacian_kernel,
    symbol,
)
from .virial import blowup_time_bound

log = logging.getLogger(__name__)

OUTPUT_ENV = "FRACBL_OUTPUT_DIR"
DEFAULT_OUTPUT = "fracbl-output"

EXIT_CODES = {
    Verdict.COMPLETED: 0,
    Verdict.GRADIENT_BLOWUP: 2,
    Verdict.RESOLUTION_LOST: 3,
}
EXIT_ERROR = 1


def _clean(value):
    """JSON-safe copy: NaN and inf become None, numpy scalars become floats."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class RunSummary:
    name: str
    verdict: str
    t_final: float
    steps: int
    max_grad_linf: float
    max_grad_time: float
    initial_grad_linf: float
    mass_drift: float
    min_u: float
    max_u: float
    energy_drift_rel: float | None
    balance_a_max: float | None
    balance_b_max: float | None
    envelope_passed: bool | None
    envelope_min_margin: float | None
    thresholds: dict | None = None
    virial: dict | None = None
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunSummary":
        data = json.loads(text)
        for key in ("energy_drift_rel", "balance_a_max", "balance_b_max", "envelope_min_margin"):
            if data.get(key) is None:
                data[key] = None
        return cls(**data)

    @property
    def exit_code(self) -> int:
        if self.error:
            return EXIT_ERROR
        return EXIT_CODES.get(Verdict(self.verdict), EXIT_ERROR)


def _max_abs(values) -> float | None:
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.all(np.isnan(v)):
        return None
    return float(np.nanmax(np.abs(v)))


def summarize(cfg: cfgmod.SolverConfig, traj: Trajectory) -> RunSummary:
    p = cfg.params
    recs = traj.records
    mean = traj.column("mean")
    energy = traj.column("energy_total")
    nu = p.nu
    thresholds = None
    if nu > 0:
        alpha = p.alpha if 0 < p.alpha < 1 else None
        thresholds = threshold_report(nu, p.m_ratio, alpha).as_dict()
    env_passed = env_margin = None
    if p.mu == 0 and nu > 0:
        samples = envelope_monitor(traj, p, constant_variant=cfg.envelope_variant)
        env_passed = all(s.passed for s in samples)
        env_margin = min(s.margin for s in samples)
    virial = None
    if cfg.virial_enabled:
        j = traj.column("j_value")
        char = traj.column("char_value")
        odi = traj.column("odi_residual") if len(recs) >= 3 else np.array([np.nan])
        virial = {
            "delta": cfg.virial_delta,
            "j0": traj.j0,
            "j_final": float(j[-1]),
            "j_monotone": bool(np.all(np.diff(j) >= 0)),
            "char_value_drift": float(np.max(np.abs(char - char[0]))),
            "odi_residual_min": float(np.nanmin(odi)) if not np.all(np.isnan(odi)) else None,
            "holder_bound_ok": bool(np.all(j <= traj.column("holder_delta") + 1e-12)),
            "blowup_time_bound": (blowup_time_bound(traj.j0, p.m_ratio, cfg.virial_delta)
                                  if traj.j0 and traj.j0 > 0 else None),
        }
    return RunSummary(
        name=cfg.name,
        verdict=traj.verdict.value,
        t_final=traj.t_final,
        steps=traj.steps,
        max_grad_linf=traj.max_grad,
        max_grad_time=traj.max_grad_time,
        initial_grad_linf=recs[0].grad_linf,
        mass_drift=float(np.max(np.abs(mean - mean[0]))),
        min_u=float(traj.column("positivity_floor").min()),
        max_u=float(np.max([r.extras.get("max_u", np.nan) for r in recs])),
        energy_drift_rel=float(np.max(np.abs(energy - energy[0])) / energy[0]) if energy[0] else None,
        balance_a_max=_max_abs(entropy_balance_residual_a(traj, nu)),
        balance_b_max=_max_abs(entropy_balance_residual_b(traj, nu)),
        envelope_passed=env_passed,
        envelope_min_margin=env_margin,
        thresholds=thresholds,
        virial=virial,
        error=traj.error,
    )


# ---------------------------------------------------------------- persistence

def output_root(cfg: cfgmod.SolverConfig | None = None, override: str | None = None) -> Path:
    if override:
        return Path(override)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def write_csv(path: Path, traj: Trajectory, virial: bool) -> None:
    cols = CORE_COLUMNS + (VIRIAL_COLUMNS if virial else ())
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in traj.records:
            w.writerow(["%.17g" % float(v) if v is not None else "nan" for v in rec.row(virial)])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_snapshots(directory: Path, grid: Grid, traj: Trajectory) -> list[str]:
    names = []
    for t, u in traj.snapshots:
        name = f"profile_t{t:.6f}.csv"
        np.savetxt(directory / name, np.column_stack([grid.x, u]), fmt="%.17g",
                   delimiter=",", header="x,u", comments="")
        names.append(name)
    return names


GNUPLOT_TEMPLATE = """\
# gnuplot -p {script}
set datafile separator ','
set key autotitle columnhead
set multiplot layout 2,1
set xlabel 't'
set ylabel '|u_x|_inf'
plot '{csv}' using 1:{grad} with lines
set ylabel '|u|_inf'
plot '{csv}' using 1:{linf} with lines
unset multiplot
"""


def write_gnuplot(directory: Path) -> None:
    cols = list(CORE_COLUMNS)
    text = GNUPLOT_TEMPLATE.format(script="plot.gp", csv="diagnostics.csv",
                                   grad=cols.index("grad_linf") + 1, linf=cols.index("linf") + 1)
    (directory / "plot.gp").write_text(text)


def run(cfg: cfgmod.SolverConfig, out_dir: str | Path | None = None, write: bool = True):
    """Evolve one configuration; optionally persist CSV, JSON and snapshots.

    Returns (trajectory, summary). A NumericalError is recorded in the summary
    and, when writing, the offending nodal state is dumped next to it.
    """
    run_dir = None
    if write:
        run_dir = (Path(out_dir) if out_dir else output_root(cfg)) / cfg.name
        try:
            run_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"cannot create output directory {run_dir}: {exc}") from exc
        (run_dir / "config.ini").write_text(cfgmod.dumps(cfg))
    try:
        traj = evolve(cfg)
    except NumericalError as exc:
        summary = RunSummary(cfg.name, Verdict.RUNNING.value, float(exc.time or 0.0), 0,
                             math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                             None, None, None, None, None, error=str(exc))
        if run_dir is not None:
            if exc.nodal is not None:
                np.savetxt(run_dir / "state_dump.csv", exc.nodal, fmt="%.17g")
            (run_dir / "summary.json").write_text(summary.to_json())
        return None, summary
    summary = summarize(cfg, traj)
    if run_dir is not None:
        write_csv(run_dir / "diagnostics.csv", traj, cfg.virial_enabled)
        write_snapshots(run_dir, Grid(cfg.n_nodes), traj)
        write_gnuplot(run_dir)
        (run_dir / "summary.json").write_text(summary.to_json())
    return traj, summary


def _sweep_worker(args):
    text, out_dir = args
    cfg = cfgmod.loads(text, "<sweep point>")
    try:
        _, summary = run(cfg, out_dir)
        return cfg.name, summary.to_json(), None
    except Exception as exc:  # recorded, the sweep continues
        return cfg.name, None, f"{type(exc).__name__}: {exc}"


def sweep(spec: cfgmod.SweepSpec, out_dir: str | Path | None = None, workers: int | None = None) -> dict:
    """Run every grid point; write and return the index mapping point -> summary path."""
    root = Path(out_dir) if out_dir else output_root(spec.base)
    root.mkdir(parents=True, exist_ok=True)
    configs = spec.configs()
    points = spec.points()
    jobs = [(cfgmod.dumps(c), str(root)) for c in configs]
    nworkers = workers or spec.workers
    if nworkers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(j) for j in jobs]
    entries = []
    for point, (name, summary_json, err) in zip(points, results):
        entry = {"name": name, "parameters": _clean(point), "summary": f"{name}/summary.json"}
        if err:
            entry["error"] = err
        else:
            entry["verdict"] = json.loads(summary_json)["verdict"]
        entries.append(entry)
    index = {"sweep": spec.base.name, "points": entries}
    (root / f"{spec.base.name}_index.json").write_text(json.dumps(index, indent=2, sort_keys=True))
    return index


# ---------------------------------------------------------------- self tests

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)
    kernel_table: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.3e} (tol {c.tolerance:.1e}) {c.detail}".rstrip()
               for c in self.checks]
        out.append("kernel vs multiplier, alpha=0.5, n=512:")
        out.extend(f"  image_count={g:4d}  rel L2 error={e:.3e}" for g, e in self.kernel_table)
        return out


def eigen_error(n: int, alpha: float, symbol_fn=symbol, per_mode: bool = False) -> float:
    """max over 1 <= k <= n/2-1 of |Lambda^alpha cos kx - k^alpha cos kx|.

    Normalized by the operator norm max(1, (n/2-1)^alpha): rounding noise in
    the sampled cosine reaches every mode and is amplified by the largest
    symbol, so this is the attainable scale. ``per_mode=True`` divides by
    max(1, k^alpha) instead.
    """
    grid = Grid(n)
    mult = symbol_fn(grid, alpha)
    scale = max(1.0, (n // 2 - 1) ** alpha)
    worst = 0.0
    for k in range(1, n // 2):
        u = SpectralField(grid, nodal=np.cos(k * grid.x))
        got = SpectralField(grid, modal=u.modal * mult).nodal
        err = float(np.max(np.abs(got - k**alpha * u.nodal)))
        worst = max(worst, err / (max(1.0, k**alpha) if per_mode else scale))
    return worst


def kernel_error(n: int = 512, alpha: float = 0.5, image_count: int = 64, symbol_fn=symbol) -> float:
    grid = Grid(n)
    u = SpectralField(grid, nodal=np.cos(grid.x) + 0.3 * np.cos(4 * grid.x))
    spec = SpectralField(grid, modal=u.modal * symbol_fn(grid, alpha)).nodal
    kern = frac_laplacian_kernel(u, alpha, image_count).nodal
    return float(np.linalg.norm(kern - spec) / np.linalg.norm(spec))


def verify(n: int = 1024, symbol_fn=symbol, seed: int = 0) -> VerifyReport:
    """Operator self-tests; ``symbol_fn`` lets tests inject a corrupted multiplier."""
    report = VerifyReport()
    eps = float(np.finfo(float).eps)
    tol = 10 * eps * n
    for alpha in (0.25, 0.5, 1.0, 1.5, 2.0):
        err = eigen_error(n, alpha, symbol_fn)
        report.checks.append(CheckResult(f"eigenfunction alpha={alpha}", err <= tol, err, tol,
                                         "relative to the operator norm"))
    errors = []
    for g in (8, 16, 32, 64, 128):
        errors.append(kernel_error(512, 0.5, g, symbol_fn))
        report.kernel_table.append((g, errors[-1]))
    e64 = dict(report.kernel_table)[64]
    report.checks.append(CheckResult("kernel vs multiplier image_count=64", e64 <= 1e-3, e64, 1e-3))
    mono = all(b < a for a, b in zip(errors, errors[1:]))
    report.checks.append(CheckResult("kernel error decreasing in image_count", mono,
                                     errors[-1] / errors[0], 1.0))
    rng = np.random.default_rng(seed)
    grid = Grid(n)
    u = SpectralField(grid, nodal=rng.normal(size=n))
    lhs = grid.spacing * float(np.dot(u.nodal, u.nodal))
    rhs = 2 * np.pi * float(np.dot(grid.mode_weights, np.abs(u.modal) ** 2))
    perr = abs(lhs - rhs) / lhs
    report.checks.append(CheckResult("Parseval", perr <= 1e-12, perr, 1e-12))
    back = SpectralField(grid, modal=u.modal).nodal
    rerr = float(np.max(np.abs(back - u.nodal)))
    report.checks.append(CheckResult("round trip", rerr <= 1e-12, rerr, 1e-12))
    return report


def entropy_check(function: str, alpha: float, epsilon: float | None = None, which: str = "i1",
                  n_nodes: int = 512, count: int = 0, seed: int = 0) -> list[Prop1Report]:
    """Prop1 inequality reports for a named profile, or ``count`` random ones.

    ``function`` is an initial-data name (``constant:2``, ``smooth-positive``, ...)
    or ``random`` for the seeded suite.
    """
    eps = alpha / 4.0 if epsilon is None else epsilon
    grid = Grid(n_nodes)
    if function == "random":
        rng = np.random.default_rng(seed)
        return [prop1_inequality_check(random_positive_trig_polynomial(grid, rng), alpha, eps, which)
                for _ in range(count)]
    return [prop1_inequality_check(initial_data_preset(function, grid), alpha, eps, which)]
