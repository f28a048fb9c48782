"""Smoothing kernels and their closed-form CDF steps.

Every kernel is exposed in normalized form, so that ``kernel_step`` rises from
0 to 1.  Compact kernels live on [-1, 1]; Gaussian and exponential kernels have
infinite support.

The Gaussian kernel uses the convention ``K(u) = exp(-u**2) / sqrt(pi)``
(variance 1/2), whose step is ``(1 + erf(u)) / 2``.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = ["Kernel", "kernel_pdf", "kernel_step", "erf", "COMPACT_KERNELS"]

_SQRT_PI = math.sqrt(math.pi)


class Kernel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    EPANECHNIKOV = "epanechnikov"
    BITRIANGULAR = "bitriangular"
    TRIWEIGHT = "triweight"
    SPHERICAL = "spherical"
    UNIFORM = "uniform"

    @property
    def compact(self) -> bool:
        return self not in (Kernel.GAUSSIAN, Kernel.EXPONENTIAL)

    @property
    def support(self) -> tuple[float, float]:
        return (-1.0, 1.0) if self.compact else (-math.inf, math.inf)

    @classmethod
    def parse(cls, name: "str | Kernel") -> "Kernel":
        if isinstance(name, Kernel):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise DomainError(f"unknown kernel {name!r}; expected one of: {valid}") from None

    def pdf(self, u):
        return kernel_pdf(self, u)

    def step(self, u):
        return kernel_step(self, u)


COMPACT_KERNELS = tuple(k for k in Kernel if k.compact)


def _as_finite(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("kernel argument must be finite")
    return arr


def _ret(arr: np.ndarray, like):
    return float(arr) if np.ndim(like) == 0 else arr


def erf(x):
    """Gauss error function, ``2/sqrt(pi) * int_0^x exp(-t**2) dt``.

    Accepts scalars or arrays; raises :class:`DomainError` on NaN/inf input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("erf argument must be finite")
    return _ret(special.erf(arr), x)


def _compact_pdf(kernel: Kernel, a: np.ndarray) -> np.ndarray:
    # a = |u|, already restricted to [0, 1]
    if kernel is Kernel.EPANECHNIKOV:
        return 0.75 * (1.0 - a * a)
    if kernel is Kernel.BITRIANGULAR:
        return 1.5 * (1.0 - a) ** 2
    if kernel is Kernel.TRIWEIGHT:
        return (35.0 / 32.0) * (1.0 - a * a) ** 3
    if kernel is Kernel.SPHERICAL:
        return (4.0 / 3.0) * (1.0 - 1.5 * a + 0.5 * a ** 3)
    if kernel is Kernel.UNIFORM:
        return np.full_like(a, 0.5)
    raise AssertionError(kernel)


def kernel_pdf(kernel: "Kernel | str", u):
    """Normalized kernel density ``K(u)``."""
    kernel = Kernel.parse(kernel)
    arr = _as_finite(u)
    a = np.abs(arr)
    if kernel is Kernel.GAUSSIAN:
        out = np.exp(-arr * arr) / _SQRT_PI
    elif kernel is Kernel.EXPONENTIAL:
        out = 0.5 * np.exp(-a)
    else:
        inside = a <= 1.0
        out = np.where(inside, _compact_pdf(kernel, np.minimum(a, 1.0)), 0.0)
    return _ret(out, u)


def _compact_step(kernel: Kernel, v: np.ndarray) -> np.ndarray:
    # v restricted to [-1, 1]
    s = np.sign(v)
    if kernel is Kernel.EPANECHNIKOV:
        return 0.75 * (v - v ** 3 / 3.0 + 2.0 / 3.0)
    if kernel is Kernel.BITRIANGULAR:
        return 1.5 * (v ** 3 / 3.0 - v * v * s + v + 1.0 / 3.0)
    if kernel is Kernel.TRIWEIGHT:
        return (35.0 / 32.0) * (v - v ** 3 + 0.6 * v ** 5 - v ** 7 / 7.0 + 16.0 / 35.0)
    if kernel is Kernel.SPHERICAL:
        # the printed constant 13/8 does not reach 1 at u = 1; 3/8 does
        return (4.0 / 3.0) * (s * (v * v - 6.0) * v * v / 8.0 + v + 3.0 / 8.0)
    if kernel is Kernel.UNIFORM:
        return 0.5 * (v + 1.0)
    raise AssertionError(kernel)


def kernel_step(kernel: "Kernel | str", u):
    """CDF kernel step ``int_{-inf}^u K(t) dt``.

    For compact kernels the result is exactly 0 for ``u <= -1`` and exactly 1
    for ``u >= 1``.
    """
    kernel = Kernel.parse(kernel)
    arr = _as_finite(u)
    if kernel is Kernel.GAUSSIAN:
        out = 0.5 * (1.0 + special.erf(arr))
    elif kernel is Kernel.EXPONENTIAL:
        # 1 - exp(-|u|)/2 written via expm1 to keep precision near 0
        out = 0.5 - 0.5 * np.sign(arr) * np.expm1(-np.abs(arr))
    else:
        v = np.clip(arr, -1.0, 1.0)
        out = np.where(arr <= -1.0, 0.0, np.where(arr >= 1.0, 1.0, _compact_step(kernel, v)))
        out = np.clip(out, 0.0, 1.0)
    return _ret(out, u)
