"""Experiment plumbing: bundled models, CSV traces, engine dispatch and the
repeated-run PAC tester."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .access import AccessMode, SimulatedOracle
from .blackvi import BlackViConfig, black_vi
from .model import StochasticGame, parse_model, serialize_model
from .whitebox import ReachabilityQuery, RunReport, TraceRecord, bvi_white, oracle_value

TRACE_COLUMNS = ("wall_ms", "k", "delta_k", "explored_states", "explored_pct", "lower", "upper")


# ---------------------------------------------------------------------------
# models


def bundled_models() -> list[str]:
    root = resources.files("pacsg") / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_model_text(ref: str | os.PathLike) -> str:
    """Contents of a model file, falling back to a bundled model of that name."""
    path = Path(ref)
    if path.is_file():
        return path.read_text()
    name = path.name[:-5] if path.name.endswith(".json") else path.name
    if name in bundled_models():
        return (resources.files("pacsg") / "models" / f"{name}.json").read_text()
    raise FileNotFoundError(f"no model file or bundled model named {str(ref)!r}")


def load_game(ref: str | os.PathLike) -> StochasticGame:
    return parse_model(read_model_text(ref))


# ---------------------------------------------------------------------------
# traces


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(path: str | os.PathLike, records: Iterable[TraceRecord]) -> None:
    """Append records to a CSV trace, writing the header if the file is new or empty."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(TRACE_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])


def read_trace(path: str | os.PathLike) -> list[TraceRecord]:
    with Path(path).open(newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header!r}")
        out = []
        for row in rows:
            wall, k, dk, n, pct, lo, hi = row
            out.append(TraceRecord(float(wall), int(k), float(dk), int(n),
                                   float(pct) if pct else None, float(lo), float(hi)))
    return out


# ---------------------------------------------------------------------------
# engines


def run_engine(game: StochasticGame, mode: AccessMode, config: BlackViConfig,
               pmin: float | None = None) -> RunReport:
    """Run the white-box iteration or the black/grey-box learner on ``game``."""
    if mode is AccessMode.WHITE:
        return bvi_white(ReachabilityQuery(game, config.epsilon), seed=config.seed)
    config = replace(config, mode=mode, total_states=config.total_states or game.num_states)
    return black_vi(SimulatedOracle(game, mode, pmin), config=config)


def derive_seeds(master: int, runs: int) -> list[int]:
    """Independent per-run seeds; seed ``i`` depends only on ``master`` and ``i``."""
    return [int(np.random.SeedSequence(master, spawn_key=(i,)).generate_state(1, np.uint64)[0])
            for i in range(runs)]


@dataclass
class PacTestReport:
    runs: int
    violations: int
    delta: float
    true_value: float
    intervals: list[tuple[float, float]] = field(default_factory=list)

    @property
    def violation_rate(self) -> float:
        return self.violations / self.runs

    @property
    def threshold(self) -> float:
        return self.delta + 3 * math.sqrt(self.delta * (1 - self.delta) / self.runs)

    @property
    def verdict(self) -> str:
        return "PASS" if self.violation_rate <= self.threshold else "FAIL"

    @property
    def median_width(self) -> float:
        return float(np.median([hi - lo for lo, hi in self.intervals]))


def _one_run(args: tuple) -> tuple[float, float]:
    text, mode, config, pmin = args
    report = run_engine(parse_model(text), mode, config, pmin)
    return report.lower, report.upper


def pac_test(game: StochasticGame, runs: int, config: BlackViConfig, master_seed: int = 0,
             mode: AccessMode = AccessMode.BLACK, pmin: float | None = None,
             workers: int | None = None) -> PacTestReport:
    """Run the learner ``runs`` times with derived seeds and count intervals missing the true value."""
    if runs < 1:
        raise ValueError("at least one run is required")
    if mode is AccessMode.WHITE:
        raise ValueError("the PAC test exercises the black- or grey-box learner")
    truth = float(oracle_value(game)[game.initial])
    text = serialize_model(game)
    jobs = [(text, mode, replace(config, seed=s), pmin) for s in derive_seeds(master_seed, runs)]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        results = [_one_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, runs)) as pool:
            results = list(pool.map(_one_run, jobs))  # map keeps run order
    bad = sum(1 for lo, hi in results if not lo <= truth <= hi)
    return PacTestReport(runs, bad, config.delta, truth, results)


__all__ = [
    "TRACE_COLUMNS", "PacTestReport", "bundled_models", "derive_seeds", "load_game",
    "pac_test", "read_model_text", "read_trace", "run_engine", "write_trace",
]
