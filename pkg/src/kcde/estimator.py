"""Kernel CDF/PDF estimators and the empirical staircase CDF."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bandwidth import BandwidthResult, BgkConfig, resolve_bandwidth
from .errors import DegenerateSampleError, DomainError
from .kernels import Kernel, kernel_pdf, kernel_step

__all__ = [
    "KcdeModel",
    "fit_kcde",
    "cdf",
    "pdf",
    "staircase_cdf",
    "apply_boundary_correction",
]

# Caps the size of the (points x window) work matrix.
_CHUNK_ELEMENTS = 2 ** 22


def _as_sample(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSampleError("empty sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample contains non-finite values")
    return x


def _as_points(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("evaluation points must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class KcdeModel:
    """Fitted kernel CDF estimate.

    ``cdf(z) = mean_i step((z - z_i) / h)``; with boundary correction the CDF is
    0 below zero and jumps to ``p_at_zero`` at zero.
    """

    sorted_sample: np.ndarray
    kernel: Kernel
    h: float
    boundary_corrected: bool = False
    p_at_zero: float = 0.0
    bandwidth: Optional[BandwidthResult] = field(default=None, compare=False)

    def __post_init__(self):
        x = np.asarray(self.sorted_sample, dtype=float)
        if x.size == 0:
            raise DegenerateSampleError("empty sample")
        if np.any(np.diff(x) < 0):
            x = np.sort(x)
        x.setflags(write=False)
        object.__setattr__(self, "sorted_sample", x)
        object.__setattr__(self, "kernel", Kernel.parse(self.kernel))
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError("bandwidth h must be positive and finite")
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.sorted_sample.size

    def cdf(self, z):
        z_arr = _as_points(z)
        flat = z_arr.ravel()
        out = self._raw(flat, kernel_step)
        if self.boundary_corrected:
            out = np.where(flat < 0.0, 0.0, out)
        out = np.clip(out, 0.0, 1.0).reshape(z_arr.shape)
        return float(out) if np.ndim(z) == 0 else out

    def pdf(self, z):
        z_arr = _as_points(z)
        out = self._raw(z_arr.ravel(), kernel_pdf, density=True).reshape(z_arr.shape)
        return float(out) if np.ndim(z) == 0 else out

    def uncorrected_cdf(self, z):
        z_arr = _as_points(z)
        out = self._raw(z_arr.ravel(), kernel_step).reshape(z_arr.shape)
        return float(out) if np.ndim(z) == 0 else out

    def _raw(self, z: np.ndarray, fn, density: bool = False) -> np.ndarray:
        x, h, n = self.sorted_sample, self.h, self.n
        if z.size == 0:
            return np.zeros(0)
        if not self.kernel.compact:
            out = np.empty(z.size)
            step = max(1, _CHUNK_ELEMENTS // n)
            for s in range(0, z.size, step):
                u = (z[s:s + step, None] - x[None, :]) / h
                out[s:s + step] = fn(self.kernel, u).sum(axis=1)
            return out / (n * h) if density else out / n
        # Compact support: points left of the window saturate at 1 (steps) or
        # contribute 0 (densities); points right of it contribute 0.
        lo = np.searchsorted(x, z - h, side="left")
        hi = np.searchsorted(x, z + h, side="right")
        width = hi - lo
        out = np.zeros(z.size) if density else lo.astype(float)
        wmax = int(width.max())
        if wmax > 0:
            step = max(1, _CHUNK_ELEMENTS // wmax)
            offs = np.arange(wmax)
            for s in range(0, z.size, step):
                sl = slice(s, s + step)
                idx = lo[sl, None] + offs[None, :]
                mask = offs[None, :] < width[sl, None]
                u = (z[sl, None] - x[np.minimum(idx, n - 1)]) / h
                u = np.where(mask, u, 2.0)  # masked cells: pdf 0, step 1 -> remove below
                vals = fn(self.kernel, u)
                if not density:
                    vals = np.where(mask, vals, 0.0)
                out[sl] += vals.sum(axis=1)
        return out / (n * h) if density else out / n

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.value,
            "h": self.h,
            "pAtZero": self.p_at_zero,
            "boundaryCorrected": self.boundary_corrected,
            "sample": [float(v) for v in self.sorted_sample],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "KcdeModel":
        try:
            return cls(
                sorted_sample=np.asarray(d["sample"], dtype=float),
                kernel=Kernel.parse(d["kernel"]),
                h=float(d["h"]),
                boundary_corrected=bool(d.get("boundaryCorrected", False)),
                p_at_zero=float(d.get("pAtZero", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed model: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "KcdeModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed model JSON: {exc}") from None
        if not isinstance(d, dict):
            raise DomainError("malformed model JSON: expected an object")
        return cls.from_dict(d)


def apply_boundary_correction(model: KcdeModel) -> KcdeModel:
    """Put all mass the estimate assigns to ``z < 0`` into a jump at zero.

    Identity (apart from the flag) when the uncorrected ``cdf(0)`` is zero.
    """
    p = float(model.uncorrected_cdf(0.0))
    if p >= 1.0:
        raise DomainError("entire estimated mass lies at or below zero")
    return replace(model, boundary_corrected=True, p_at_zero=p)


def fit_kcde(sample, kernel="bitriangular", bandwidth="bgk", *,
             boundary_correction: Optional[bool] = None,
             bgk_config: Optional[BgkConfig] = None) -> KcdeModel:
    """Fit a kernel CDF estimate.

    ``bandwidth`` is ``"bgk"``, ``"nrr"`` or a positive number.  With
    ``boundary_correction=None`` the zero-boundary rule is applied whenever the
    sample is nonnegative.
    """
    x = np.sort(_as_sample(sample))
    bw = resolve_bandwidth(x, bandwidth, bgk_config) if not isinstance(bandwidth, BandwidthResult) else bandwidth
    model = KcdeModel(sorted_sample=x, kernel=Kernel.parse(kernel), h=bw.h, bandwidth=bw)
    if boundary_correction is None:
        boundary_correction = bool(x[0] >= 0.0)
    if boundary_correction:
        model = apply_boundary_correction(model)
    return model


def cdf(model: KcdeModel, z):
    return model.cdf(z)


def pdf(model: KcdeModel, z):
    return model.pdf(z)


def staircase_cdf(sample, z):
    """Right-continuous empirical CDF ``#{z_i <= z} / N``."""
    x = np.sort(_as_sample(sample))
    z_arr = _as_points(z)
    out = np.searchsorted(x, z_arr, side="right") / x.size
    return float(out) if np.ndim(z) == 0 else out
