"""Synthetic validation: kernel CDF estimates vs the staircase against known CDFs.

For every (model, N, replicate) a sample and a set of test points uniform on
``[min, max]`` of the sample are drawn; each (kernel, bandwidth) arm is scored
by ``RE = MSE_kernel / MSE_staircase`` against the true CDF at those points.
Seeds are derived from the cell position, so results do not depend on the
order (or process) in which cells run.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bandwidth import BgkConfig, resolve_bandwidth
from .distributions import ParametricModel
from .errors import DegenerateSampleError
from .estimator import KcdeModel, apply_boundary_correction, staircase_cdf
from .kernels import Kernel

__all__ = [
    "default_models",
    "ExperimentConfig",
    "ResultRow",
    "generate_test_points",
    "mse_between",
    "run_cell",
    "run_experiment",
    "summarize",
    "rows_to_csv",
]

log = logging.getLogger(__name__)

BW_METHODS = ("bgk", "normal_reference")


def default_models() -> dict:
    """The seven synthetic models, keyed by their short names."""
    return {
        "GAM1": ParametricModel.gamma(1.0, 30.0),
        "GAM2": ParametricModel.gamma(0.35, 40.0),
        "LGN": ParametricModel.lognormal(2.0, 1.1),
        "GEV1": ParametricModel.gev(0.25, 8.0, 15.0),
        "GEV2": ParametricModel.gev(0.0, 18.0, 45.0),
        "GEV3": ParametricModel.gev(-0.25, 30.0, 100.0),
        "WBL": ParametricModel.weibull(15.0, 0.7),
    }


@dataclass
class ExperimentConfig:
    models: dict = field(default_factory=default_models)
    sizes: tuple = (50, 100, 200, 500, 1000)
    replicates: int = 100
    test_points: int = 500
    kernels: tuple = ("bitriangular",)
    bandwidth_methods: tuple = ("bgk",)
    seed: int = 20240101
    bgk: BgkConfig = field(default_factory=BgkConfig)

    def __post_init__(self):
        if not self.models:
            raise ValueError("at least one model is required")
        if isinstance(self.models, (list, tuple)):
            self.models = {f"M{i}": m for i, m in enumerate(self.models)}
        self.sizes = tuple(int(n) for n in self.sizes)
        self.kernels = tuple(Kernel.parse(k).value for k in self.kernels)
        self.bandwidth_methods = tuple(_bw_name(b) for b in self.bandwidth_methods)
        if self.replicates < 1 or self.test_points < 1 or min(self.sizes) < 1:
            raise ValueError("replicates, test_points and sizes must all be >= 1")

    @classmethod
    def quick(cls, **kw) -> "ExperimentConfig":
        kw.setdefault("replicates", 20)
        kw.setdefault("sizes", (100, 500))
        return cls(**kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kw = {}
        if "models" in d:
            all_models = default_models()
            models = {}
            for entry in d.pop("models"):
                if isinstance(entry, str):
                    models[entry] = all_models[entry]
                else:
                    models[entry["name"]] = ParametricModel(entry["family"], tuple(entry["params"]))
            kw["models"] = models
        if "bgk" in d:
            kw["bgk"] = BgkConfig.from_dict(d.pop("bgk"))
        for key in ("sizes", "kernels", "bandwidth_methods"):
            if key in d:
                kw[key] = tuple(d.pop(key))
        for key in ("replicates", "test_points", "seed"):
            if key in d:
                kw[key] = int(d.pop(key))
        if d:
            raise ValueError(f"unknown experiment config keys: {sorted(d)}")
        return cls(**kw)


def _bw_name(b: str) -> str:
    b = str(b).lower()
    if b in ("nrr", "normal_reference", "normal-reference"):
        return "normal_reference"
    if b == "bgk":
        return "bgk"
    raise ValueError(f"unknown bandwidth method {b!r}")


@dataclass(frozen=True)
class ResultRow:
    model: str
    n: int
    kernel: str
    bw_method: str
    replicate: int
    h: float
    mse_k: float
    mse_s: float
    re: float
    status: str = "ok"


CSV_COLUMNS = ("model", "n", "kernel", "bw_method", "replicate", "h", "mse_k", "mse_s", "re", "status")


def generate_test_points(sample, n_points: int = 500, seed=None) -> np.ndarray:
    """``n_points`` i.i.d. uniform draws on ``[min(sample), max(sample)]``."""
    x = np.asarray(sample, dtype=float)
    lo, hi = float(np.min(x)), float(np.max(x))
    if not hi > lo:
        raise DegenerateSampleError("test points need a sample with two distinct values")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=int(n_points))


def mse_between(cdf_a: Callable, cdf_b: Callable, points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("mse needs at least one point")
    d = np.asarray(cdf_a(pts), dtype=float) - np.asarray(cdf_b(pts), dtype=float)
    return float(np.mean(d * d))


def cell_seed(root_seed: int, model_index: int, n: int, replicate: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root_seed), int(model_index), int(n), int(replicate)])


def run_cell(name: str, model: ParametricModel, model_index: int, n: int, replicate: int,
             config: ExperimentConfig) -> list:
    """All kernel/bandwidth arms for one (model, N, replicate)."""
    ss = cell_seed(config.seed, model_index, n, replicate)
    s_sample, s_points = ss.spawn(2)
    sample = model.sample(n, np.random.default_rng(s_sample))
    x = np.sort(sample)
    try:
        points = generate_test_points(x, config.test_points, np.random.default_rng(s_points))
    except DegenerateSampleError as exc:
        return [ResultRow(name, n, k, b, replicate, float("nan"), float("nan"), float("nan"),
                          float("nan"), f"error: {exc}")
                for b in config.bandwidth_methods for k in config.kernels]

    truth = model.cdf(points)
    mse_s = float(np.mean((staircase_cdf(x, points) - truth) ** 2))
    rows = []
    for bw_method in config.bandwidth_methods:
        try:
            bw = resolve_bandwidth(x, "nrr" if bw_method == "normal_reference" else "bgk", config.bgk)
        except (ValueError, ArithmeticError) as exc:
            rows.extend(ResultRow(name, n, k, bw_method, replicate, float("nan"), float("nan"), mse_s,
                                  float("nan"), f"error: {exc}") for k in config.kernels)
            continue
        status = "ok" if bw.converged else "fallback"
        for kname in config.kernels:
            km = KcdeModel(sorted_sample=x, kernel=Kernel.parse(kname), h=bw.h, bandwidth=bw)
            if x[0] >= 0 and km.uncorrected_cdf(0.0) > 0:
                km = apply_boundary_correction(km)
            mse_k = float(np.mean((km.cdf(points) - truth) ** 2))
            re = mse_k / mse_s if mse_s > 0 else float("nan")
            rows.append(ResultRow(name, n, kname, bw_method, replicate, bw.h, mse_k, mse_s, re, status))
    return rows


def _cell_jobs(config: ExperimentConfig):
    for mi, (name, model) in enumerate(config.models.items()):
        for n in config.sizes:
            for r in range(config.replicates):
                yield name, model, mi, n, r


def _run_job(args):
    name, model, mi, n, r, config = args
    return run_cell(name, model, mi, n, r, config)


def run_experiment(config: Optional[ExperimentConfig] = None, jobs: int = 1) -> list:
    """Run the full grid; returns a list of :class:`ResultRow` in grid order."""
    config = config or ExperimentConfig()
    tasks = [(*job, config) for job in _cell_jobs(config)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_run_job, tasks, chunksize=16))
    else:
        chunks = [_run_job(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def summarize(rows: Sequence[ResultRow]) -> list:
    """Per (model, n, kernel, bw_method) quartiles of RE, for boxplots."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.model, r.n, r.kernel, r.bw_method), []).append(r)
    out = []
    for (model, n, kernel, bw), rs in groups.items():
        re = np.array([r.re for r in rs if np.isfinite(r.re)])
        q = np.quantile(re, [0.0, 0.25, 0.5, 0.75, 1.0]) if re.size else [float("nan")] * 5
        out.append({
            "model": model, "n": n, "kernel": kernel, "bw_method": bw,
            "count": int(re.size), "failures": sum(r.status.startswith("error") for r in rs),
            "fallbacks": sum(r.status == "fallback" for r in rs),
            "min": float(q[0]), "q1": float(q[1]), "median": float(q[2]), "q3": float(q[3]), "max": float(q[4]),
        })
    return out


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def summary_json(rows: Sequence[ResultRow], **kwargs) -> str:
    return json.dumps({"cells": summarize(rows)}, **kwargs)
