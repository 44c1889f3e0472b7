"""Reproducible synthetic observations and the dataset CSV format.

Noise is additive i.i.d. Gaussian with constant variance. Variates come
from an explicitly specified transform (inverse normal CDF applied to
53-bit uniforms from a PCG64 stream), so a seed pins the exact byte
content of a dataset across platforms; the transform is recorded in the
dataset provenance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .models import ModelSystem, incidence_series
from .ode import IntegratorConfig, TimeGrid


class DataParseError(ValueError):
    """Dataset CSV is malformed."""


@dataclass(frozen=True)
class NoiseSpec:
    """Observation noise: standard deviation (people) and generator seed."""

    sigma0: float
    seed: int

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be nonnegative")


@dataclass(frozen=True)
class DataSet:
    """Observation times and values, with a provenance tag."""

    times: np.ndarray
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be equal-length vectors")
        if not np.all(np.isfinite(values)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.times.size


def standard_normal_stream(seed: int, n: int) -> np.ndarray:
    """n standard-normal variates: inverse CDF of (0,1)-open 53-bit PCG64 uniforms."""
    gen = np.random.Generator(np.random.PCG64(seed))
    u = gen.integers(1, 2**53, size=n) / float(2**53)
    return ndtri(u)


def generate(
    model: ModelSystem,
    params,
    grid: TimeGrid,
    noise: NoiseSpec,
    config: IntegratorConfig = IntegratorConfig(),
) -> DataSet:
    """Observations y_j = z_j + sigma0 * v_j with seeded standard-normal v."""
    z = incidence_series(model, params, grid, config)
    v = standard_normal_stream(noise.seed, grid.n)
    return DataSet(
        times=grid.points,
        values=z + noise.sigma0 * v,
        provenance=f"synthetic:pcg64-inverse-cdf:seed={noise.seed}:sigma0={noise.sigma0!r}",
    )


def write_dataset_csv(dataset: DataSet, path) -> None:
    """CSV with header t,y; shortest round-trip float formatting."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y"])
        for t, y in zip(dataset.times, dataset.values):
            writer.writerow([repr(float(t)), repr(float(y))])


def read_dataset_csv(path) -> DataSet:
    """Read a t,y CSV written by write_dataset_csv (or any matching file)."""
    path = Path(path)
    if not path.exists():
        raise DataParseError(f"{path}: no such file")
    times, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t", "y"]:
            raise DataParseError(f"{path}: expected header 't,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise DataParseError(f"{path}:{lineno}: expected two columns")
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError as err:
                raise DataParseError(f"{path}:{lineno}: {err}") from None
    if not times:
        raise DataParseError(f"{path}: no observations")
    return DataSet(
        times=np.array(times), values=np.array(values), provenance=f"file:{path}"
    )
