"""Inverse-transform sampling from a kernel CDF estimate through a lookup table.

The table holds ``L`` pairs ``(z_l, u_l = F(z_l))`` on a uniform grid over
``[max(eps, z_min - h), z_max + h]``.  Each uniform draw is mapped to the
``z_l`` whose ``u_l`` is nearest (ties go to the lower index).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, DomainError
from .estimator import KcdeModel

__all__ = ["LookupTable", "build_lookup", "simulate", "nearest_index", "qq_pairs", "DEFAULT_TABLE_SIZE"]

DEFAULT_TABLE_SIZE = 10_000


@dataclass(frozen=True, eq=False)
class LookupTable:
    z_grid: np.ndarray
    u_grid: np.ndarray
    z_prime_min: float
    z_prime_max: float

    @property
    def size(self) -> int:
        return self.z_grid.size


def build_lookup(model: KcdeModel, size: int = DEFAULT_TABLE_SIZE) -> LookupTable:
    if size < 2:
        raise DomainError("lookup table needs at least 2 rows")
    x = model.sorted_sample
    zmin = max(np.finfo(float).eps, float(x[0]) - model.h)
    zmax = float(x[-1]) + model.h
    z = np.linspace(zmin, zmax, int(size))
    u = np.maximum.accumulate(np.clip(model.cdf(z), 0.0, 1.0))
    z.setflags(write=False)
    u.setflags(write=False)
    return LookupTable(z_grid=z, u_grid=u, z_prime_min=zmin, z_prime_max=zmax)


def nearest_index(u_grid: np.ndarray, u) -> np.ndarray:
    """Index of the entry of a nondecreasing ``u_grid`` nearest to each ``u``.

    Equidistant candidates and runs of equal values resolve to the lowest index.
    """
    u = np.asarray(u, dtype=float)
    last = u_grid.size - 1
    right = np.clip(np.searchsorted(u_grid, u, side="left"), 0, last)
    left = np.clip(right - 1, 0, last)
    d_left = np.abs(u - u_grid[left])
    take_left = d_left <= np.abs(u_grid[right] - u)
    # lowest index whose rounded distance still equals d_left; distances grow
    # monotonically leftwards, so bisect on [0, left]
    lo, hi = np.zeros_like(left), left.copy()
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ok = np.abs(u - u_grid[mid]) <= d_left
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid + 1)
    return np.where(take_left, hi, right)


def simulate(table: LookupTable, n: int, seed=None) -> np.ndarray:
    """``n`` simulated amounts; deterministic for a fixed seed."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(int(n))
    return table.z_grid[nearest_index(table.u_grid, u)]


def qq_pairs(sample_a, sample_b) -> np.ndarray:
    """Matched empirical quantiles at probabilities ``(i - 0.5) / K``, ``K = min(|A|, |B|)``.

    Returns an array of shape ``(K, 2)``.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DegenerateSampleError("q-q pairs need two nonempty samples")
    k = min(a.size, b.size)
    p = (np.arange(1, k + 1) - 0.5) / k
    return np.column_stack([np.quantile(a, p, method="hazen"), np.quantile(b, p, method="hazen")])


def series_to_csv(values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["amount_mm"])
    for v in values:
        w.writerow([repr(float(v))])
    return buf.getvalue()
