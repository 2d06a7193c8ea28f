"""Turbine load reduction and pulsating wind-force series."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LoadError(ValueError):
    """Invalid load set or series parameters."""


@dataclass(frozen=True)
class TurbineLoadSet:
    """Raw tower-base loads in the turbine coordinate system (N, N·m).

    ``G1`` is the foundation self-weight, ``G2`` the backfill weight.
    """

    Fx: float = 0.0
    Fy: float = 0.0
    Fz: float = 0.0
    Mx: float = 0.0
    My: float = 0.0
    Mz: float = 0.0
    G1: float = 0.0
    G2: float = 0.0

    def __post_init__(self):
        for name in ("Fx", "Fy", "Fz", "Mx", "My", "Mz", "G1", "G2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise LoadError(f"load component {name} is not finite ({v!r})")
        if self.G1 < 0 or self.G2 < 0:
            raise LoadError("G1 and G2 must be non-negative")


@dataclass(frozen=True)
class SimplifiedLoad:
    """Three-component design load: vertical, horizontal resultant, moment."""

    Fz: float
    Fr: float
    Mr: float
    G1: float = 0.0
    G2: float = 0.0
    dropped: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("Fz", "Fr", "Mr", "G1", "G2"):
            if not math.isfinite(getattr(self, name)):
                raise LoadError(f"load component {name} is not finite")
        if self.Fr < 0 or self.Mr < 0:
            raise LoadError("Fr and Mr must be non-negative")


def simplify_loads(loads: TurbineLoadSet) -> SimplifiedLoad:
    """Fold the horizontal force and moment pairs into resultants.

    The torsional moment Mz is discarded and listed in ``dropped``.
    """
    return SimplifiedLoad(
        Fz=loads.Fz,
        Fr=math.hypot(loads.Fx, loads.Fy),
        Mr=math.hypot(loads.Mx, loads.My),
        G1=loads.G1,
        G2=loads.G2,
        dropped=(("Mz", loads.Mz),),
    )


@dataclass(frozen=True)
class WindSeries:
    dt: float
    duration: float
    mean_force: float
    amplitude_ratio: float
    period: float
    rng_seed: int
    random_ratio: float
    hold: float
    samples: np.ndarray = field(repr=False, compare=False)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt

    def __len__(self):
        return len(self.samples)


def synthesize_wind_series(mean_force: float, amplitude_ratio: float = 0.2, period: float = 600.0,
                           duration: float = 1200.0, dt: float = 1.0, seed: int = 0,
                           random_ratio: float = 0.05, hold: float | None = None) -> WindSeries:
    """Mean force plus a sinusoid plus a seeded, held uniform fluctuation.

    ``sample(t) = F (1 + a sin(2 pi t / T) + r u(t))`` with ``u`` uniform on
    [-1, 1], redrawn every ``hold`` seconds (default one step).
    """
    if not (math.isfinite(mean_force) and mean_force > 0):
        raise LoadError("mean_force must be positive")
    if not 0 <= amplitude_ratio < 1:
        raise LoadError("amplitude_ratio must lie in [0, 1)")
    if not 0 <= random_ratio < 1:
        raise LoadError("random_ratio must lie in [0, 1)")
    if not period > 0:
        raise LoadError("period must be positive")
    if not dt > 0:
        raise LoadError("dt must be positive")
    if dt > period / 20:
        raise LoadError(f"dt={dt} s undersamples the {period} s sinusoid (need dt <= period/20)")
    if not duration >= 0:
        raise LoadError("duration must be non-negative")
    hold = dt if hold is None else hold
    if not hold > 0:
        raise LoadError("hold must be positive")
    n = int(math.floor(duration / dt + 1e-9)) + 1
    k = np.arange(n)
    t = k * dt
    phase = np.sin(2.0 * np.pi * k * (dt / period))
    rng = np.random.default_rng(seed)
    slot = np.floor(t / hold + 1e-9).astype(np.int64)
    u = rng.uniform(-1.0, 1.0, size=int(slot[-1]) + 1)[slot]
    samples = mean_force * (1.0 + amplitude_ratio * phase + random_ratio * u)
    # exact quarter-period values are not representable through sin(); snap them
    q = (k * dt * 4.0) / period
    exact = np.abs(q - np.round(q)) < 1e-12
    quarter = np.round(q[exact]).astype(np.int64) % 4
    samples[exact] = mean_force * (1.0 + amplitude_ratio * np.array([0.0, 1.0, 0.0, -1.0])[quarter]
                                   + random_ratio * u[exact])
    return WindSeries(dt, duration, mean_force, amplitude_ratio, period, seed, random_ratio, hold, samples)


def series_stats(series: WindSeries) -> dict:
    """Mean, extrema and zero-crossing period of the detrended series.

    ``dominant_period`` is None when the series never crosses its mean.
    """
    x = np.asarray(series.samples, dtype=float)
    if x.size == 0:
        raise LoadError("empty series")
    mean = float(np.mean(x))
    d = x - mean
    span = float(np.max(np.abs(d)))
    period = None
    if span > 1e-12 * max(abs(mean), 1.0):
        ups = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0))
        if ups.size >= 2:
            # linear interpolation of the crossing instants
            t = (ups + d[ups] / (d[ups] - d[ups + 1])) * series.dt
            period = float(np.mean(np.diff(t)))
    return {"mean": mean, "max": float(np.max(x)), "min": float(np.min(x)), "dominant_period": period}


def write_series_csv(series: WindSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "force_N"])
        for t, f in zip(series.times, series.samples):
            w.writerow([repr(float(t)), repr(float(f))])


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
