"""Parametric models for positive, skewed amounts: gamma, GEV, lognormal, Weibull, normal.

Parameter vectors follow the ordering::

    gamma      (shape, scale)
    gev        (shape, scale, loc)   y(z) = [1 + shape (z - loc) / scale]^(-1/shape)
    lognormal  (log_mean, log_std)
    weibull    (scale, shape)
    normal     (mean, std)

GEV CDF is ``exp(-y(z))``.  Positive ``shape`` gives a lower support bound
``loc - scale/shape``; negative ``shape`` an upper one.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special

from .errors import DegenerateSampleError, DomainError, NumericalError

__all__ = [
    "FAMILIES",
    "ParametricModel",
    "FitReport",
    "Selection",
    "gev_mean",
    "fit_mle",
    "model_select",
    "lower_incomplete_gamma",
    "log_gamma",
    "EULER_GAMMA",
]

FAMILIES = ("gamma", "gev", "lognormal", "weibull", "normal")
N_PARAMS = {"gamma": 2, "gev": 3, "lognormal": 2, "weibull": 2, "normal": 2}
PARAM_NAMES = {
    "gamma": ("shape", "scale"),
    "gev": ("shape", "scale", "loc"),
    "lognormal": ("log_mean", "log_std"),
    "weibull": ("scale", "shape"),
    "normal": ("mean", "std"),
}
EULER_GAMMA = 0.57721566490153286061
GUMBEL_THRESHOLD = 1e-8
POSITIVE_FAMILIES = ("gamma", "lognormal", "weibull")


def log_gamma(a):
    """``ln Gamma(a)`` for ``a > 0``."""
    arr = np.asarray(a, dtype=float)
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise DomainError("log_gamma requires finite a > 0")
    out = special.gammaln(arr)
    return float(out) if np.ndim(a) == 0 else out


def lower_incomplete_gamma(a, x, regularized: bool = False):
    """Lower incomplete gamma ``int_0^x t^(a-1) e^(-t) dt``; divided by ``Gamma(a)`` if ``regularized``."""
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(a_arr > 0) or not np.all(np.isfinite(a_arr)):
        raise DomainError("lower_incomplete_gamma requires finite a > 0")
    if not np.all(x_arr >= 0):
        raise DomainError("lower_incomplete_gamma requires x >= 0")
    p = special.gammainc(a_arr, x_arr)
    out = p if regularized else p * special.gamma(a_arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ParametricModel:
    family: str
    params: tuple

    def __post_init__(self):
        fam = str(self.family).lower()
        if fam not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        params = tuple(float(p) for p in self.params)
        if len(params) != N_PARAMS[fam]:
            raise DomainError(f"{fam} takes {N_PARAMS[fam]} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise DomainError("parameters must be finite")
        positive = {"gamma": (0, 1), "gev": (1,), "lognormal": (1,), "weibull": (0, 1), "normal": (1,)}[fam]
        for i in positive:
            if not params[i] > 0:
                raise DomainError(f"{fam} parameter {PARAM_NAMES[fam][i]} must be positive")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", params)

    @classmethod
    def gamma(cls, shape, scale):
        return cls("gamma", (shape, scale))

    @classmethod
    def gev(cls, shape, scale, loc):
        return cls("gev", (shape, scale, loc))

    @classmethod
    def lognormal(cls, log_mean, log_std):
        return cls("lognormal", (log_mean, log_std))

    @classmethod
    def weibull(cls, scale, shape):
        return cls("weibull", (scale, shape))

    @classmethod
    def normal(cls, mean, std):
        return cls("normal", (mean, std))

    @property
    def k(self) -> int:
        return N_PARAMS[self.family]

    def as_dict(self) -> dict:
        return {"family": self.family, **dict(zip(PARAM_NAMES[self.family], self.params))}

    @property
    def support(self) -> tuple:
        if self.family in POSITIVE_FAMILIES:
            return (0.0, math.inf)
        if self.family == "gev":
            xi, sigma, mu = self.params
            if abs(xi) < GUMBEL_THRESHOLD:
                return (-math.inf, math.inf)
            edge = mu - sigma / xi
            return (edge, math.inf) if xi > 0 else (-math.inf, edge)
        return (-math.inf, math.inf)

    # --- density / distribution -------------------------------------------------

    def _gev_logy(self, z: np.ndarray):
        """Return ``(log y(z), inside)``."""
        xi, sigma, mu = self.params
        w = (z - mu) / sigma
        if abs(xi) < GUMBEL_THRESHOLD:
            return -w, np.ones(z.shape, dtype=bool)
        xw = xi * w
        inside = xw > -1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            logy = np.where(inside, -np.log1p(np.where(inside, xw, 0.0)) / xi, 0.0)
        return logy, inside

    def logpdf(self, z):
        z_arr = np.asarray(z, dtype=float)
        fam, p = self.family, self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam == "gamma":
                shape, scale = p
                pos = z_arr > 0
                zz = np.where(pos, z_arr, 1.0)
                out = (shape - 1) * np.log(zz) - zz / scale - shape * math.log(scale) - special.gammaln(shape)
                out = np.where(pos, out, -np.inf)
            elif fam == "gev":
                xi, sigma, _ = p
                logy, inside = self._gev_logy(z_arr)
                out = -math.log(sigma) + (xi + 1.0) * logy - np.exp(logy)
                out = np.where(inside, out, -np.inf)
            elif fam == "lognormal":
                mu, sigma = p
                pos = z_arr > 0
                lz = np.log(np.where(pos, z_arr, 1.0))
                out = -lz - math.log(sigma * math.sqrt(2 * math.pi)) - (lz - mu) ** 2 / (2 * sigma ** 2)
                out = np.where(pos, out, -np.inf)
            elif fam == "weibull":
                scale, shape = p
                pos = z_arr >= 0
                r = np.where(pos, z_arr, 0.0) / scale
                out = math.log(shape / scale) + (shape - 1) * np.log(r) - r ** shape
                out = np.where(pos, out, -np.inf)
            else:
                mu, sd = p
                out = -0.5 * ((z_arr - mu) / sd) ** 2 - math.log(sd * math.sqrt(2 * math.pi))
        return float(out) if np.ndim(z) == 0 else out

    def pdf(self, z, nonnegative: bool = False):
        with np.errstate(over="ignore"):
            out = np.exp(self.logpdf(z))
        if nonnegative:
            out = np.where(np.asarray(z) < 0, 0.0, out)
        return float(out) if np.ndim(z) == 0 else out

    def cdf(self, z, nonnegative: bool = False):
        """CDF; ``nonnegative=True`` applies the precipitation convention ``F(z < 0) = 0``."""
        z_arr = np.asarray(z, dtype=float)
        fam, p = self.family, self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam == "gamma":
                shape, scale = p
                out = special.gammainc(shape, np.maximum(z_arr, 0.0) / scale)
            elif fam == "gev":
                xi = p[0]
                logy, inside = self._gev_logy(z_arr)
                out = np.exp(-np.exp(logy))
                if abs(xi) >= GUMBEL_THRESHOLD:
                    outside_value = 0.0 if xi > 0 else 1.0
                    out = np.where(inside, out, outside_value)
            elif fam == "lognormal":
                mu, sigma = p
                pos = z_arr > 0
                lz = np.log(np.where(pos, z_arr, 1.0))
                out = np.where(pos, 0.5 * (1.0 + special.erf((lz - mu) / (sigma * math.sqrt(2.0)))), 0.0)
            elif fam == "weibull":
                scale, shape = p
                r = np.maximum(z_arr, 0.0) / scale
                out = -np.expm1(-(r ** shape))
            else:
                mu, sd = p
                out = special.ndtr((z_arr - mu) / sd)
        if nonnegative:
            out = np.where(z_arr < 0, 0.0, out)
        return float(out) if np.ndim(z) == 0 else out

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        if not np.all((u_arr > 0) & (u_arr < 1)):
            raise DomainError("quantile requires 0 < u < 1")
        fam, p = self.family, self.params
        if fam == "gamma":
            shape, scale = p
            out = scale * special.gammaincinv(shape, u_arr)
        elif fam == "gev":
            xi, sigma, mu = p
            ly = np.log(-np.log(u_arr))  # log y
            if abs(xi) < GUMBEL_THRESHOLD:
                out = mu - sigma * ly
            else:
                out = mu + sigma * np.expm1(-xi * ly) / xi
        elif fam == "lognormal":
            mu, sigma = p
            out = np.exp(mu + sigma * special.ndtri(u_arr))
        elif fam == "weibull":
            scale, shape = p
            out = scale * (-np.log1p(-u_arr)) ** (1.0 / shape)
        else:
            mu, sd = p
            out = mu + sd * special.ndtri(u_arr)
        return float(out) if np.ndim(u) == 0 else out

    def sample(self, n: int, seed=None) -> np.ndarray:
        """``n`` independent draws; reproducible for a given seed."""
        if n < 1:
            raise DomainError("n must be >= 1")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        if self.family == "gamma":
            shape, scale = self.params
            return rng.gamma(shape, scale, size=n)
        if self.family == "normal":
            mu, sd = self.params
            return rng.normal(mu, sd, size=n)
        # inverse transform on open-interval uniforms
        u = rng.random(n)
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return np.asarray(self.quantile(u), dtype=float)

    def nll(self, data) -> float:
        lp = self.logpdf(np.asarray(data, dtype=float))
        return float(-np.sum(lp))

    def mean(self) -> float:
        fam, p = self.family, self.params
        if fam == "gamma":
            return p[0] * p[1]
        if fam == "gev":
            return gev_mean(self)
        if fam == "lognormal":
            return math.exp(p[0] + 0.5 * p[1] ** 2)
        if fam == "weibull":
            return p[0] * math.gamma(1 + 1 / p[1])
        return p[0]


def gev_mean(model: ParametricModel) -> float:
    """Mean of a GEV model, finite for ``shape < 1``."""
    if model.family != "gev":
        raise DomainError("gev_mean requires a GEV model")
    xi, sigma, mu = model.params
    if xi >= 1:
        raise DomainError("GEV mean is undefined for shape >= 1")
    if abs(xi) < GUMBEL_THRESHOLD:
        return mu + sigma * EULER_GAMMA
    return mu + sigma * (math.gamma(1.0 - xi) - 1.0) / xi


# --- maximum likelihood -----------------------------------------------------------


CSV_HEADER = ("family", "p1", "p2", "p3", "nll", "aic", "bic")


@dataclass(frozen=True)
class FitReport:
    model: ParametricModel
    nll: float
    n: int
    converged: bool = True
    message: str = ""

    @property
    def k(self) -> int:
        return self.model.k

    @property
    def family(self) -> str:
        return self.model.family

    @property
    def aic(self) -> float:
        return 2.0 * self.k + 2.0 * self.nll

    @property
    def bic(self) -> float:
        return self.k * math.log(self.n) + 2.0 * self.nll

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": dict(zip(PARAM_NAMES[self.family], self.model.params)),
            "nll": self.nll,
            "aic": self.aic,
            "bic": self.bic,
            "n": self.n,
            "k": self.k,
            "converged": self.converged,
            "message": self.message,
        }

    def csv_row(self) -> list:
        """``family, p1, p2, p3, nll, aic, bic``; unused parameter slots are empty."""
        params = list(self.model.params) + [""] * (3 - self.k)
        return [self.family, *params, self.nll, self.aic, self.bic]

    CSV_HEADER = CSV_HEADER


def _check_data(data, family: str) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    k = N_PARAMS[family]
    if x.size < 5 * k:
        raise DegenerateSampleError(f"{family} fit needs at least {5 * k} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    if family in POSITIVE_FAMILIES and np.any(x <= 0):
        raise DomainError(f"{family} requires strictly positive data")
    if np.ptp(x) == 0:
        raise DegenerateSampleError("data are constant")
    return x


def _fit_gamma(x: np.ndarray):
    m = x.mean()
    s = math.log(m) - float(np.mean(np.log(x)))
    if not s > 0:
        raise NumericalError("gamma fit: log-mean statistic is not positive")
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    converged = False
    for _ in range(100):
        f = math.log(k) - special.digamma(k) - s
        fp = 1.0 / k - special.polygamma(1, k)
        step = f / fp
        k_new = k - step
        if k_new <= 0:
            k_new = k / 2.0
        if abs(k_new - k) <= 1e-14 * k:
            k = k_new
            converged = True
            break
        k = k_new
    return (k, m / k), converged, "" if converged else "gamma Newton iteration did not converge"


def _pwm_gev_start(x: np.ndarray):
    xs = np.sort(x)
    n = xs.size
    i = np.arange(n)
    b0 = xs.mean()
    b1 = float(np.sum(i / (n - 1) * xs) / n)
    b2 = float(np.sum(i * (i - 1) / ((n - 1) * (n - 2)) * xs) / n)
    l2 = 2 * b1 - b0
    l3 = 6 * b2 - 6 * b1 + b0
    t3 = l3 / l2
    c = 2.0 / (3.0 + t3) - math.log(2) / math.log(3)
    kk = 7.8590 * c + 2.9554 * c * c  # Hosking shape, kk = -xi
    kk = float(np.clip(kk, -0.9, 0.9))
    if abs(kk) < 1e-6:
        sigma = l2 / math.log(2)
        mu = b0 - EULER_GAMMA * sigma
    else:
        g = math.gamma(1 + kk)
        sigma = l2 * kk / ((1 - 2 ** -kk) * g)
        mu = b0 - sigma * (1 - g) / kk
    return -kk, max(sigma, 1e-12 * np.ptp(x)), mu


def _nelder_mead(objective, x0):
    # fatol relative to the objective's magnitude; an absolute 1e-12 is below one ulp for large n
    ftol = 1e-13 * max(1.0, abs(float(objective(np.asarray(x0, dtype=float)))))
    opts = {"xatol": 1e-10, "fatol": ftol, "maxiter": 20000, "maxfev": 40000, "adaptive": True}
    res = optimize.minimize(objective, x0, method="Nelder-Mead", options=opts)
    # restart once from the optimum to shake off a collapsed simplex
    res2 = optimize.minimize(objective, res.x, method="Nelder-Mead", options=opts)
    best = res2 if res2.fun <= res.fun else res
    return best.x, bool(res2.success and np.isfinite(best.fun)), str(res2.message)


def _fit_weibull(x: np.ndarray):
    cv = x.std() / x.mean()
    shape0 = float(np.clip(cv ** -1.086, 0.05, 50.0))
    scale0 = x.mean() / math.gamma(1 + 1 / shape0)
    lx = np.log(x)

    def nll(theta):
        ls, lk = theta
        scale, shape = math.exp(ls), math.exp(lk)
        r = x / scale
        return -(x.size * (lk - ls) + (shape - 1) * float(np.sum(lx - ls)) - float(np.sum(r ** shape)))

    theta, ok, msg = _nelder_mead(nll, [math.log(scale0), math.log(shape0)])
    return (math.exp(theta[0]), math.exp(theta[1])), ok, msg


def _fit_gev(x: np.ndarray):
    # fit on standardized data so all three coordinates are O(1); GEV is location-scale
    m, sd = float(x.mean()), float(x.std())
    y = (x - m) / sd
    xi0, sigma0, mu0 = _pwm_gev_start(y)

    def nll(theta):
        xi, ls, mu = theta
        v = ParametricModel("gev", (xi, math.exp(ls), mu)).nll(y)
        return v if math.isfinite(v) else 1e300

    # make sure the starting point has every observation inside the support
    start = [xi0, math.log(sigma0), mu0]
    if nll(start) >= 1e300:
        b = math.sqrt(6) / math.pi
        start = [0.0, math.log(b), -EULER_GAMMA * b]
    theta, ok, msg = _nelder_mead(nll, start)
    return (theta[0], math.exp(theta[1]) * sd, theta[2] * sd + m), ok, msg


def fit_mle(data, family: str) -> FitReport:
    """Maximum-likelihood fit of one family.

    Non-convergence is reported via ``FitReport.converged``, not raised.
    """
    family = str(family).lower()
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    x = _check_data(data, family)
    if family == "normal":
        params, ok, msg = (x.mean(), x.std()), True, ""
    elif family == "lognormal":
        lx = np.log(x)
        params, ok, msg = (lx.mean(), lx.std()), True, ""
    elif family == "gamma":
        params, ok, msg = _fit_gamma(x)
    elif family == "weibull":
        params, ok, msg = _fit_weibull(x)
    else:
        params, ok, msg = _fit_gev(x)
    model = ParametricModel(family, params)
    nll = model.nll(x)
    if not math.isfinite(nll):
        raise NumericalError(f"{family} fit produced a non-finite likelihood")
    return FitReport(model=model, nll=nll, n=x.size, converged=ok, message="" if ok else msg)


@dataclass
class Selection:
    reports: list
    failures: dict = field(default_factory=dict)

    def ranking(self, criterion: str = "bic") -> list:
        criterion = criterion.lower()
        if criterion not in ("aic", "bic", "nll"):
            raise DomainError("criterion must be aic, bic or nll")
        return sorted(self.reports, key=lambda r: getattr(r, criterion))

    @property
    def by_aic(self):
        return self.ranking("aic")

    @property
    def by_bic(self):
        return self.ranking("bic")

    @property
    def by_nll(self):
        return self.ranking("nll")

    def best(self, criterion: str = "bic") -> FitReport:
        return self.ranking(criterion)[0]

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "rankings": {c: [r.family for r in self.ranking(c)] for c in ("aic", "bic", "nll")},
            "failures": dict(self.failures),
        }


def model_select(data, families: Iterable[str] = FAMILIES) -> Selection:
    """Fit every family and rank by AIC, BIC and NLL (lower is better)."""
    reports, failures = [], {}
    for fam in families:
        try:
            reports.append(fit_mle(data, fam))
        except (ValueError, NumericalError) as exc:
            failures[str(fam)] = str(exc)
    if not reports:
        raise NumericalError("no family could be fitted: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))
    return Selection(reports=reports, failures=failures)


def reports_to_csv(reports: Sequence[FitReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_row()])
    return buf.getvalue()
