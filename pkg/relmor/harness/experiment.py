#!/usr/bin/env python3
"""
Reduction Experiments
Runs a method x order x seed grid on one model and emits the report as CSV,
an aligned text table and JSON/CSV sidecars
"""

import json
import logging
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy
from pydantic import BaseModel, ConfigDict, field_validator

import relmor
from relmor.config import get_settings
from relmor.errors import ConfigurationError
from relmor.harness.model_package import atomic_write_text, load_model
from relmor.harness.progress import GridProgressTracker
from relmor.lti_model import StateSpaceModel, TimeInterval, impulse_response
from relmor.reductors import InitStrategy, Method, ReductionResult, ReductorConfig, initial_guess, reduce
from relmor.relerr_system import FeedthroughConvention, FullOrderCache
from relmor.spectral_factor import FactorOrientation

logger = logging.getLogger(__name__)

METHOD_ORDER = list(Method)
REPORT_COLUMNS = [
    "method", "order", "seed", "relative_error", "additive_error", "relative_error_dual",
    "iterations", "converged", "rom_stable", "restarts", "error",
]


class ExperimentConfig(BaseModel):
    """One benchmark grid; orders are checked against the model once it is loaded"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    model_path: Path
    interval: TimeInterval
    orders: List[int]
    methods: List[Method]
    epsilon: float = 1e-4
    max_iter: int = 50
    conv_tol: float = 1e-6
    seeds: List[int] = [0]
    restarts: int = 3
    init_strategy: InitStrategy = InitStrategy.RANDOM_STABLE
    convention: FeedthroughConvention = FeedthroughConvention.REGULARIZED
    orientation: FactorOrientation = FactorOrientation.RIGHT
    out: Optional[Path] = None
    impulse_out: Optional[Path] = None
    impulse_samples: int = 501
    workers: Optional[int] = None

    @field_validator("interval", mode="before")
    @classmethod
    def parse_interval(cls, v: Any) -> TimeInterval:
        if isinstance(v, str):
            return TimeInterval.parse(v)
        if isinstance(v, (tuple, list)):
            return TimeInterval(*v)
        return v

    @field_validator("orders")
    @classmethod
    def check_orders(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one order is required")
        if min(v) < 1:
            raise ValueError(f"orders must be positive, got {v}")
        return sorted(set(v))

    @field_validator("methods")
    @classmethod
    def check_methods(cls, v: List[Method]) -> List[Method]:
        if not v:
            raise ValueError("at least one method is required")
        return sorted(set(v), key=METHOD_ORDER.index)

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one seed is required")
        return list(dict.fromkeys(v))

    @field_validator("impulse_samples", "max_iter")
    @classmethod
    def check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @field_validator("workers")
    @classmethod
    def check_workers(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"workers must be at least 1, got {v}")
        return v

    def reductor_config(self, order: int, seed: int) -> ReductorConfig:
        return ReductorConfig(
            order=order, interval=self.interval, epsilon=self.epsilon, max_iter=self.max_iter,
            conv_tol=self.conv_tol, init_strategy=self.init_strategy, rng_seed=seed,
            restarts=self.restarts, orientation=self.orientation, convention=self.convention,
        )


@dataclass
class ReportEntry:
    """One grid cell; failed cells carry the error message and NaN norms"""
    method: Method
    order: int
    seed: Optional[int]
    relative_error: float = float("nan")
    additive_error: float = float("nan")
    relative_error_dual: float = float("nan")
    iterations: int = 0
    converged: bool = False
    rom_stable: bool = False
    restarts: int = 0
    error: Optional[str] = None
    wall_time: float = 0.0
    result: Optional[ReductionResult] = field(default=None, repr=False)

    @classmethod
    def from_result(cls, result: ReductionResult, order: int, seed: Optional[int], wall_time: float) -> "ReportEntry":
        errors = result.errors
        return cls(
            method=result.method, order=order, seed=seed,
            relative_error=errors.relative, additive_error=errors.additive,
            relative_error_dual=errors.relative_dual,
            iterations=result.iterations, converged=result.converged, rom_stable=errors.rom_stable,
            restarts=len(result.restarts), wall_time=wall_time, result=result,
        )

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return METHOD_ORDER.index(self.method), self.order, -1 if self.seed is None else self.seed

    def row(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "order": self.order,
            "seed": self.seed,
            "relative_error": self.relative_error,
            "additive_error": self.additive_error,
            "relative_error_dual": self.relative_error_dual,
            "iterations": self.iterations,
            "converged": self.converged,
            "rom_stable": self.rom_stable,
            "restarts": self.restarts,
            "error": self.error or "",
        }


@dataclass
class ReductionReport:
    entries: List[ReportEntry]
    environment: Dict[str, Any] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return all(entry.error is None for entry in self.entries)

    def failed(self) -> List[ReportEntry]:
        return [entry for entry in self.entries if entry.error is not None]

    def entry(self, method: Union[Method, str], order: int, seed: Optional[int] = None) -> ReportEntry:
        method = Method(method)
        for candidate in self.entries:
            if candidate.method is method and candidate.order == order and (seed is None or candidate.seed == seed):
                return candidate
        raise KeyError(f"no report entry for {method.value} r={order} seed={seed}")

    def to_frame(self) -> pd.DataFrame:
        """One row per cell, wall times excluded so identical runs give identical frames"""
        frame = pd.DataFrame([e.row() for e in sorted(self.entries, key=lambda e: e.sort_key)], columns=REPORT_COLUMNS)
        frame["seed"] = frame["seed"].astype("Int64")
        return frame

    def best_of_seeds(self) -> pd.DataFrame:
        """Smallest relative error over seeds; rows are orders, columns are methods"""
        frame = self.to_frame()
        frame = frame[frame["error"] == ""]
        if frame.empty:
            return pd.DataFrame()
        best = frame.groupby(["order", "method"])["relative_error"].min().unstack("method")
        columns = [m.value for m in METHOD_ORDER if m.value in best.columns]
        return best[columns]

    def table(self) -> str:
        best = self.best_of_seeds()
        if best.empty:
            return "(no successful cells)"
        return best.reset_index().to_string(index=False, float_format=lambda v: f"{v:.4f}")

    def timings_frame(self) -> pd.DataFrame:
        rows = [{"method": e.method.value, "order": e.order, "seed": e.seed, "wall_time_s": e.wall_time}
                for e in sorted(self.entries, key=lambda e: e.sort_key)]
        frame = pd.DataFrame(rows, columns=["method", "order", "seed", "wall_time_s"])
        frame["seed"] = frame["seed"].astype("Int64")
        return frame

    def write(self, out: Union[str, Path]) -> Dict[str, Path]:
        """Main CSV plus .txt table, .timings.csv and .env.json sidecars"""
        out = Path(out)
        stem = out.with_suffix("")
        paths = {
            "csv": out,
            "table": stem.with_name(stem.name + ".txt"),
            "timings": stem.with_name(stem.name + ".timings.csv"),
            "environment": stem.with_name(stem.name + ".env.json"),
        }
        atomic_write_text(paths["csv"], self.to_frame().to_csv(index=False, float_format="%.10g", lineterminator="\n"))
        atomic_write_text(paths["table"], self.table() + "\n")
        atomic_write_text(paths["timings"], self.timings_frame().to_csv(index=False, float_format="%.6f", lineterminator="\n"))
        atomic_write_text(paths["environment"], json.dumps(self.environment, indent=2, sort_keys=True, default=str) + "\n")
        logger.info(f"Report written to {out}")
        return paths


def environment_record(cfg: ExperimentConfig, model: StateSpaceModel) -> Dict[str, Any]:
    settings = get_settings()
    return {
        "model": str(cfg.model_path),
        "n": model.n, "m": model.m, "p": model.p,
        "interval": [cfg.interval.t1, cfg.interval.t2],
        "seeds": list(cfg.seeds),
        "epsilon": cfg.epsilon,
        "relative_error_convention": cfg.convention.value,
        "spectral_factor_orientation": cfg.orientation.value,
        "init_strategy": cfg.init_strategy.value,
        "max_iter": cfg.max_iter,
        "conv_tol": cfg.conv_tol,
        "restarts": cfg.restarts,
        "tolerances": settings.model_dump(exclude={"benchmark_dir", "log_level", "workers"}),
        "versions": {
            "relmor": relmor.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "python": sys.version.split()[0],
        },
        "platform": platform.platform(),
    }


def emit_impulse_error(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    samples: int,
    path: Union[str, Path],
) -> Path:
    """CSV of t and every entry of the impulse response of H - Ĥ on a uniform grid"""
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    grid = np.linspace(interval.t1, interval.t2, samples)
    response = impulse_response(H.parallel_difference(H_hat), grid)
    columns = {"t": grid}
    for i in range(response.shape[1]):
        for j in range(response.shape[2]):
            columns[f"h_{i + 1}_{j + 1}"] = response[:, i, j]
    path = Path(path)
    atomic_write_text(path, pd.DataFrame(columns).to_csv(index=False, float_format="%.15g", lineterminator="\n"))
    logger.debug(f"impulse error written to {path}")
    return path


def _grid(cfg: ExperimentConfig) -> List[Tuple[Method, int, Optional[int]]]:
    cells = []
    for method in cfg.methods:
        for order in cfg.orders:
            for seed in (cfg.seeds if method.iterative else [None]):
                cells.append((method, order, seed))
    return cells


def run_experiment(cfg: ExperimentConfig, model: Optional[StateSpaceModel] = None) -> ReductionReport:
    """
    Execute the grid. TLIRKA and TLRHMORA share one initial guess per
    (order, seed); a failed cell is recorded and the grid continues.
    """
    H = model if model is not None else load_model(cfg.model_path).model
    too_large = [r for r in cfg.orders if r > H.n]
    if too_large:
        raise ConfigurationError(f"orders {too_large} exceed model order {H.n}")

    cache = FullOrderCache(H, cfg.interval)
    guesses: Dict[Tuple[int, int], StateSpaceModel] = {}
    if any(m.iterative for m in cfg.methods):
        for order in cfg.orders:
            for seed in cfg.seeds:
                guesses[(order, seed)] = initial_guess(H, order, cfg.init_strategy, seed)

    tracker = GridProgressTracker()
    cells = _grid(cfg)
    ids = [tracker.register(m.value, r, -1 if s is None else s) for m, r, s in cells]

    def run_cell(cell_id: str, method: Method, order: int, seed: Optional[int]) -> ReportEntry:
        tracker.start_cell(cell_id)
        started = time.perf_counter()
        try:
            rcfg = cfg.reductor_config(order, seed if seed is not None else cfg.seeds[0])
            guess = guesses.get((order, seed)) if seed is not None else None
            result = reduce(method, H, rcfg, initial_rom=guess, cache=cache)
        except Exception as e:
            tracker.fail_cell(cell_id, f"{type(e).__name__}: {e}")
            return ReportEntry(method, order, seed, error=f"{type(e).__name__}: {e}",
                               wall_time=time.perf_counter() - started)
        entry = ReportEntry.from_result(result, order, seed, time.perf_counter() - started)
        tracker.complete_cell(cell_id, {"relative_error": entry.relative_error})
        return entry

    workers = cfg.workers or get_settings().workers
    logger.info(f"Running {len(cells)} cells on {workers} worker(s)")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(run_cell, cid, *cell) for cid, cell in zip(ids, cells)]
            entries = [f.result() for f in futures]
    else:
        entries = [run_cell(cid, *cell) for cid, cell in zip(ids, cells)]

    report = ReductionReport(sorted(entries, key=lambda e: e.sort_key), environment_record(cfg, H))
    tracker.log_summary()

    if cfg.out is not None:
        report.write(cfg.out)
    if cfg.impulse_out is not None:
        for entry in report.entries:
            if entry.result is None:
                continue
            seed = "" if entry.seed is None else f"_s{entry.seed}"
            emit_impulse_error(H, entry.result.rom, cfg.interval, cfg.impulse_samples,
                               Path(cfg.impulse_out) / f"{entry.method.value}_r{entry.order}{seed}.csv")
    return report
