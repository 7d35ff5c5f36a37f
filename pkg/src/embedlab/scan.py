"""Grid scan of qubit embeddability over ``(a, b)`` in the unit square."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .certify import theorem1_test
from .optimizer import DEFAULT_DELTA, DEFAULT_RESTARTS, Parameterization, embed_search
from .stochastic import StochasticMatrix

CSV_HEADER = "a,b,best_objective,verdict,classical,theorem1_blocked,seed"
CLASSICAL_SLACK = 1e-12
THREADS_ENV = "EMBEDLAB_THREADS"


@dataclass(frozen=True)
class ScanRow:
    a: float
    b: float
    best_objective: float
    verdict: str
    classical: bool
    theorem1_blocked: bool
    seed: int

    def fields(self) -> list[str]:
        return [
            repr(self.a),
            repr(self.b),
            repr(self.best_objective),
            self.verdict,
            str(int(self.classical)),
            str(int(self.theorem1_blocked)),
            str(self.seed),
        ]


def grid_points(n: int) -> list[tuple[float, float]]:
    """Row-major grid, ``a`` outer and ``b`` inner, both ``k / (n - 1)``."""
    if n < 2:
        raise ValueError("grid size must be at least 2")
    ticks = [k / (n - 1) for k in range(n)]
    return [(a, b) for a in ticks for b in ticks]


def cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def evaluate_cell(a: float, b: float, seed: int, delta: float, restarts: int, kind: str) -> ScanRow:
    T = StochasticMatrix.from_ab(a, b)
    res = embed_search(T, Parameterization.parse(kind), restarts=restarts, delta=delta, seed=seed)
    return ScanRow(
        a=a,
        b=b,
        best_objective=res.best_objective,
        verdict=res.verdict,
        classical=a + b >= 1.0 - CLASSICAL_SLACK,
        theorem1_blocked=theorem1_test(T).in_Q2_complement,
        seed=seed,
    )


def _evaluate(job) -> ScanRow:
    return evaluate_cell(*job)


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def scan_qubit(
    n: int,
    delta: float = DEFAULT_DELTA,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    kind: str = "reduced-qubit",
    workers: int | None = None,
    progress=None,
) -> list[ScanRow]:
    """Evaluate every grid cell; rows come back in grid order whatever the worker count."""
    jobs = [(a, b, cell_seed(seed, k), delta, restarts, kind) for k, (a, b) in enumerate(grid_points(n))]
    workers = worker_count() if workers is None else max(1, workers)
    rows = []
    if workers == 1:
        for job in jobs:
            rows.append(_evaluate(job))
            if progress:
                progress(len(rows), len(jobs))
        return rows
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for row in pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
            rows.append(row)
            if progress:
                progress(len(rows), len(jobs))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        writer.writerow(row.fields())
    return buf.getvalue()


def read_scan_csv(text: str) -> list[ScanRow]:
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unexpected scan header")
    rows = []
    for rec in csv.reader(lines[1:]):
        a, b, obj, verdict, classical, blocked, seed = rec
        rows.append(ScanRow(float(a), float(b), float(obj), verdict, classical == "1", blocked == "1", int(seed)))
    return rows
