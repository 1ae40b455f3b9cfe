"""Named initial profiles."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .spectral import Grid, SpectralField, interpolate


def paper_fig(x):
    """1 - exp(-x^2) (1 - x^2/pi^2): vanishes at 0, equals 1 at +-pi."""
    return 1.0 - np.exp(-x * x) * (1.0 - x * x / np.pi**2)


def smooth_positive(x):
    return 0.5 + 0.4 * np.sin(x)


def blowup_seed(x):
    return np.sin(0.5 * x) ** 2


def raised_cosine(x):
    """(1 + cos x)/2, a unit-amplitude bump used by the scaled-bump preset."""
    return 0.5 * (1.0 + np.cos(x))


_NAMED = {
    "paper-fig": paper_fig,
    "smooth-positive": smooth_positive,
    "blowup-seed": blowup_seed,
}

PRESET_HELP = {
    "paper-fig": "1 - exp(-x^2)(1 - x^2/pi^2); 0 <= u <= 1, u(0) = 0",
    "smooth-positive": "0.5 + 0.4 sin x",
    "blowup-seed": "sin^2(x/2); u(0) = 0",
    "constant:c": "u = c",
    "scaled-bump:A": "A (1 + cos x)/2",
    "file:path": "two-column CSV (x, u) on [-pi, pi), resampled spectrally",
}


def _load_file(path: str, grid: Grid) -> SpectralField:
    p = Path(path)
    try:
        with p.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigurationError(f"cannot read initial data {p}: {exc}") from exc
    try:
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"cannot parse initial data {p}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 8 or data.shape[0] % 2:
        raise ConfigurationError(f"{p}: need an even number (>= 8) of (x, u) rows")
    src = SpectralField(Grid(data.shape[0]), nodal=data[np.argsort(data[:, 0]), 1])
    if src.grid.n_nodes == grid.n_nodes:
        return src
    return SpectralField(grid, nodal=interpolate(src, grid.x))


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def initial_data_preset(name: str, grid: Grid) -> SpectralField:
    """Sample a named profile on ``grid``."""
    kind, _, arg = name.partition(":")
    if kind in _NAMED and not arg:
        return SpectralField.from_function(grid, _NAMED[kind])
    if kind in ("constant", "scaled-bump"):
        try:
            value = float(arg)
        except ValueError:
            raise ConfigurationError(f"preset {name!r} needs a numeric argument") from None
        if kind == "constant":
            return SpectralField.constant(grid, value)
        return SpectralField(grid, nodal=value * raised_cosine(grid.x))
    if kind == "file" and arg:
        return _load_file(arg, grid)
    raise ConfigurationError(f"unknown initial data {name!r}; known: {', '.join(PRESET_HELP)}")


def check_preset_name(name: str) -> None:
    """Raise ConfigurationError early for names that cannot resolve."""
    kind, _, arg = name.partition(":")
    if kind in _NAMED and not arg:
        return
    if kind in ("constant", "scaled-bump"):
        try:
            float(arg)
        except ValueError:
            raise ConfigurationError(f"preset {name!r} needs a numeric argument") from None
        return
    if kind == "file" and arg:
        if not Path(arg).is_file():
            raise ConfigurationError(f"initial data file not found: {arg}")
        return
    raise ConfigurationError(f"unknown initial data {name!r}; known: {', '.join(PRESET_HELP)}")
