"""Run configuration and its INI serialization.

A run file has the sections ``[grid] [params] [time] [initial] [diagnostics]
[monitor] [virial] [output] [run]``; missing keys take the dataclass
defaults. Sweep files add a ``[sweep]`` section whose keys are
``section.key`` with comma-separated values.
"""
from __future__ import annotations

import configparser
import io
import itertools
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError, ParameterDomainError
from .flux import Parameters
from .initial_data import check_preset_name, initial_data_preset
from .integrator import HERMITE, TRAPEZOID, StepPolicy
from .spectral import Grid

# (section, key) -> (attribute path, type)
_LAYOUT = {
    ("grid", "n_nodes"): ("n_nodes", int),
    ("params", "alpha"): ("params.alpha", float),
    ("params", "beta"): ("params.beta", float),
    ("params", "nu"): ("params.nu", float),
    ("params", "mu"): ("params.mu", float),
    ("params", "m_ratio"): ("params.m_ratio", float),
    ("time", "t_end"): ("t_end", float),
    ("time", "mode"): ("step_policy.mode", str),
    ("time", "dt"): ("step_policy.dt", float),
    ("time", "cfl_number"): ("step_policy.cfl_number", float),
    ("time", "max_dt"): ("step_policy.max_dt", float),
    ("initial", "data"): ("initial_data", str),
    ("diagnostics", "cadence"): ("diagnostic_cadence", float),
    ("diagnostics", "entropy_guard"): ("entropy_guard", float),
    ("diagnostics", "envelope_variant"): ("envelope_variant", str),
    ("diagnostics", "holder_delta"): ("holder_delta", float),
    ("diagnostics", "dissipation_quadrature"): ("dissipation_quadrature", str),
    ("diagnostics", "snapshot_times"): ("snapshot_times", tuple),
    ("monitor", "tail_fraction_threshold"): ("tail_fraction_threshold", float),
    ("monitor", "gradient_blowup_factor"): ("gradient_blowup_factor", float),
    ("virial", "enabled"): ("virial_enabled", bool),
    ("virial", "delta"): ("virial_delta", float),
    ("output", "directory"): ("output_dir", str),
    ("run", "name"): ("name", str),
    ("run", "seed"): ("seed", int),
}


@dataclass(frozen=True)
class SolverConfig:
    name: str = "run"
    n_nodes: int = 1024
    params: Parameters = field(default_factory=Parameters)
    step_policy: StepPolicy = field(default_factory=StepPolicy)
    t_end: float = 1.0
    diagnostic_cadence: float = 0.01
    initial_data: str = "smooth-positive"
    virial_enabled: bool = False
    virial_delta: float = 0.1
    entropy_guard: float = 1e-8
    envelope_variant: str = "proof"
    holder_delta: float = 0.1
    dissipation_quadrature: str = HERMITE
    snapshot_times: tuple = ()
    tail_fraction_threshold: float = 1e-4
    gradient_blowup_factor: float = 1e4
    output_dir: str = ""
    seed: int = 0

    def __post_init__(self):
        try:
            Grid(self.n_nodes)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.t_end < 0:
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if not self.diagnostic_cadence > 0:
            raise ConfigurationError("diagnostic cadence must be > 0")
        if self.envelope_variant not in ("statement", "proof"):
            raise ConfigurationError(f"envelope_variant must be statement or proof, got {self.envelope_variant!r}")
        if self.dissipation_quadrature not in (HERMITE, TRAPEZOID):
            raise ConfigurationError(f"dissipation_quadrature must be {HERMITE} or {TRAPEZOID}")
        if not 0.0 < self.holder_delta < 1.0 or not 0.0 < self.virial_delta < 1.0:
            raise ConfigurationError("holder and virial delta must lie in (0, 1)")
        if not self.entropy_guard >= 0:
            raise ConfigurationError("entropy_guard must be >= 0")
        if not self.tail_fraction_threshold > 0 or not self.gradient_blowup_factor > 1:
            raise ConfigurationError("monitor thresholds must be positive (blow-up factor > 1)")
        check_preset_name(self.initial_data)

    def initial_field(self, grid: Grid | None = None):
        return initial_data_preset(self.initial_data, grid or Grid(self.n_nodes))

    def with_values(self, **dotted) -> "SolverConfig":
        """Copy with attributes replaced; keys may be dotted (``params.alpha``)."""
        top, params, policy = {}, {}, {}
        for key, value in dotted.items():
            head, _, tail = key.partition(".")
            if head == "params" and tail:
                params[tail] = value
            elif head == "step_policy" and tail:
                policy[tail] = value
            else:
                top[key] = value
        try:
            if params:
                top["params"] = replace(self.params, **params)
            if policy:
                top["step_policy"] = replace(self.step_policy, **policy)
            return replace(self, **top)
        except ParameterDomainError as exc:
            raise ConfigurationError(str(exc)) from exc
        except TypeError as exc:
            raise ConfigurationError(f"unknown configuration key: {exc}") from exc


def _convert(raw: str, kind, where: str):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _get(cfg: SolverConfig, path: str):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))


def _from_parser(cp: configparser.ConfigParser, source: str, base: SolverConfig | None = None) -> SolverConfig:
    known_sections = {s for s, _ in _LAYOUT} | {"sweep"}
    values = {}
    for section in cp.sections():
        if section not in known_sections:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
        if section == "sweep":
            continue
        for key, raw in cp.items(section):
            if (section, key) not in _LAYOUT:
                raise ConfigurationError(f"{source}: unknown key {section}.{key}")
            path, kind = _LAYOUT[(section, key)]
            values[path] = _convert(raw, kind, f"{source} [{section}] {key}")
    try:
        return (base or SolverConfig()).with_values(**values)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{source}: {exc}") from exc


def loads(text: str, source: str = "<string>") -> SolverConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    return _from_parser(cp, source)


def load(path) -> SolverConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from exc
    return loads(text, str(p))


def dumps(cfg: SolverConfig) -> str:
    cp = _parser()
    for (section, key), (path, _) in _LAYOUT.items():
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, _format(_get(cfg, path)))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepSpec:
    base: SolverConfig
    axes: tuple  # ((attribute path, (values...)), ...)
    workers: int = 1
    tied: tuple = ()  # groups of attribute paths that vary together

    def points(self) -> list[dict]:
        """Cartesian product of the axes; tied axes share one index."""
        groups = []
        seen = set()
        for path, vals in self.axes:
            if path in seen:
                continue
            group = next((g for g in self.tied if path in g), (path,))
            members = [(p, v) for p, v in self.axes if p in group]
            lengths = {len(v) for _, v in members}
            if len(lengths) != 1:
                raise ConfigurationError(f"tied axes {group} need equal lengths")
            seen.update(p for p, _ in members)
            groups.append([dict((p, v[i]) for p, v in members) for i in range(lengths.pop())])
        return [dict(itertools.chain.from_iterable(d.items() for d in combo))
                for combo in itertools.product(*groups)]

    def configs(self) -> list[SolverConfig]:
        out = []
        for point in self.points():
            tag = "_".join(f"{p.split('.')[-1]}={v:g}" if isinstance(v, float) else f"{p.split('.')[-1]}={v}"
                           for p, v in point.items())
            out.append(self.base.with_values(name=f"{self.base.name}_{tag}", **point))
        return out


def _axis_values(raw, kind, where):
    return tuple(_convert(v, kind, where) for v in raw.split(",") if v.strip())


def loads_sweep(text: str, source: str = "<string>") -> SweepSpec:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    base = _from_parser(cp, source)
    if not cp.has_section("sweep"):
        raise ConfigurationError(f"{source}: sweep file needs a [sweep] section")
    axes, workers, tied = [], 1, []
    for key, raw in cp.items("sweep"):
        if key == "workers":
            workers = _convert(raw, int, f"{source} [sweep] workers")
            continue
        if key == "tie":
            for grp in raw.split(";"):
                names = tuple(_layout_by_dotted(n.strip(), source)[0] for n in grp.split(",") if n.strip())
                tied.append(names)
            continue
        path, kind = _layout_by_dotted(key, source)
        vals = _axis_values(raw, kind, f"{source} [sweep] {key}")
        if not vals:
            raise ConfigurationError(f"{source}: empty axis {key}")
        axes.append((path, vals))
    if workers < 1:
        raise ConfigurationError(f"{source}: workers must be >= 1")
    spec = SweepSpec(base, tuple(axes), workers, tuple(tied))
    spec.configs()  # validate every point before any compute
    return spec


def _layout_by_dotted(dotted: str, source: str):
    section, _, key = dotted.partition(".")
    try:
        return _LAYOUT[(section, key)]
    except KeyError:
        raise ConfigurationError(f"{source}: unknown sweep axis {dotted!r}") from None


def load_sweep(path) -> SweepSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read sweep file {p}: {exc}") from exc
    return loads_sweep(text, str(p))


# ---------------------------------------------------------------- shipped presets

def preset_names() -> list[str]:
    root = resources.files("fracbl") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def preset_text(name: str) -> str:
    res = resources.files("fracbl") / "presets" / f"{name}.ini"
    if not res.is_file():
        raise ConfigurationError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return res.read_text()


def is_sweep_text(text: str) -> bool:
    cp = _parser()
    cp.read_string(text)
    return cp.has_section("sweep")


def load_preset(name: str) -> SolverConfig:
    return loads(preset_text(name), f"preset:{name}")


def load_any(spec: str) -> SolverConfig:
    """A config from a file path or a shipped preset name."""
    if Path(spec).is_file():
        return load(spec)
    return load_preset(spec)
