"""Scaling runs: build indexes over a grid of n, count words and f-evaluations.

Every reported number is a count (stored words, f-evaluations) except
``build_seconds``, which is wall clock and kept out of the fitted slopes.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .index import KSumIndex, preprocess
from .inverter import Mode, derive_params
from .sumfn import Instance, enumerate_sumset
from .universe import sample_elements

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class ScalingRow:
    n: int
    k: int
    delta: float
    mode: str
    seed: int
    stored_words: int
    mean_query_steps: float
    max_query_steps: int
    build_seconds: float
    retries: int
    L: int  # noqa: N815


CSV_COLUMNS = tuple(f.name for f in fields(ScalingRow))


class InsufficientPointsError(ValueError):
    pass


def fit_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log2(values) against log2(ns)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(ns)) < MIN_FIT_POINTS:
        raise InsufficientPointsError(
            f"need at least {MIN_FIT_POINTS} distinct grid points, got {len(np.unique(ns))}")
    slope, _ = np.polyfit(np.log2(ns), np.log2(values), 1)
    return float(slope)


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    failures: list[dict] = field(default_factory=list)

    @property
    def fitted_space_slope(self) -> float:
        return fit_slope([r.n for r in self.rows], [r.stored_words for r in self.rows])

    @property
    def fitted_steps_slope(self) -> float:
        return fit_slope([r.n for r in self.rows], [r.mean_query_steps for r in self.rows])

    def by_seed(self) -> dict[int, list[ScalingRow]]:
        out: dict[int, list[ScalingRow]] = {}
        for row in self.rows:
            out.setdefault(row.seed, []).append(row)
        return out

    def summary(self) -> dict:
        return {
            "rows": len(self.rows),
            "failures": self.failures,
            "fitted_space_slope": self.fitted_space_slope,
            "fitted_steps_slope": self.fitted_steps_slope,
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow([_fmt(v) for v in asdict(row).values()])


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def read_csv(path: str | Path) -> list[ScalingRow]:
    types = {f.name: f.type for f in fields(ScalingRow)}
    casts = {"int": int, "float": float, "str": str}
    with open(path, newline="") as fh:
        return [ScalingRow(**{k: casts[types[k]](v) for k, v in rec.items()})
                for rec in csv.DictReader(fh)]


def make_instance(n: int, k: int, seed: int) -> Instance:
    """The random instance used for (n, k, seed) by both the generator and the grid."""
    return Instance.random(n, k, np.random.default_rng(seed))


def query_sample(idx: KSumIndex, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` query values: half drawn from the sumset, half from outside it."""
    sumset = enumerate_sumset(idx.instance)
    members = sumset.sums[rng.integers(0, len(sumset), size=count // 2)]
    outside: list[np.ndarray] = []
    want = count - count // 2
    while want > 0:
        draw = sample_elements(rng, 2 * want)
        draw = draw[~sumset.contains(draw)][:want]
        outside.append(draw)
        want -= len(draw)
    return np.concatenate([members] + outside)


def measure(idx: KSumIndex, queries: int, rng: np.random.Generator) -> tuple[float, int]:
    cs = query_sample(idx, queries, rng)
    _, _, steps = idx.query_batch(cs)
    return float(steps.mean()), int(steps.max())


def run_scaling(k: int, delta: float, mode: Mode | str, grid: Iterable[int],
                seeds: Iterable[int], queries: int = 1000,
                on_row: Callable[[ScalingRow], None] | None = None) -> ScalingReport:
    mode = Mode(mode)
    grid, seeds = sorted(set(grid)), sorted(set(seeds))
    if len(grid) < MIN_FIT_POINTS:
        raise InsufficientPointsError(
            f"need at least {MIN_FIT_POINTS} grid points, got {len(grid)}")
    if queries < 2:
        raise ValueError("need at least two queries per cell")
    rows, failures = [], []
    for n in grid:
        for seed in seeds:
            try:
                idx = preprocess(make_instance(n, k, seed), delta, mode, seed=seed)
                mean_steps, max_steps = measure(idx, queries, np.random.default_rng([seed, n]))
            except Exception as exc:  # recorded, the grid carries on
                log.warning("cell n=%d seed=%d failed: %s", n, seed, exc)
                failures.append({"n": n, "seed": seed, "error": repr(exc)})
                continue
            row = ScalingRow(n, k, delta, mode.value, seed, idx.space_words(), mean_steps,
                             max_steps, idx.stats.seconds, idx.stats.retries, idx.L)
            log.info("%s", row)
            if on_row is not None:
                on_row(row)
            rows.append(row)
    rows.sort(key=lambda r: (r.n, r.seed))
    return ScalingReport(rows, failures)


def space_ratio(row: ScalingRow) -> float:
    return row.stored_words / row.n ** 2


def query_cap(row: ScalingRow) -> int:
    """Largest step count any query of this row may report."""
    p = derive_params(row.n ** (row.k - 1), row.n, row.k, row.delta, row.mode)
    return p.step_cap * row.L
