"""Uniform-grid time series with CSV persistence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def min_samples(window: float, g_max: float) -> int:
    """Grid size so the fastest oscillation e^{i g_max t} gets >= 8 points per period."""
    if window < 0 or g_max < 0:
        raise ValueError("window and g_max must be nonnegative")
    return max(512, int(math.ceil(8.0 * window * g_max / math.pi)))


@dataclass
class TimeSeries:
    """Real-valued samples on a uniform grid over [t0, t1], endpoints included."""

    t0: float
    t1: float
    values: np.ndarray
    meta: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 2:
            raise ValueError("values must be a 1-d array with at least 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite value in time series")
        if not self.t1 > self.t0:
            raise ValueError("need t1 > t0")

    @property
    def n_samples(self) -> int:
        return len(self.values)

    def grid(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_samples)

    def mean(self) -> float:
        """Trapezoid time average over [t0, t1]."""
        return float(np.trapezoid(self.values, self.grid()) / (self.t1 - self.t0))

    def to_csv(self, path) -> None:
        t = self.grid()
        with open(path, "w", newline="") as fh:
            fh.write("t,value\n")
            for ti, vi in zip(t, self.values):
                fh.write(f"{ti:.17g},{vi:.17g}\n")

    @classmethod
    def from_csv(cls, path, meta: str = "") -> "TimeSeries":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        t, v = data[:, 0], data[:, 1]
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-10, atol=1e-12 * abs(t[-1] - t[0])):
            raise ValueError("non-uniform grid in CSV")
        return cls(t0=float(t[0]), t1=float(t[-1]), values=v, meta=meta)
