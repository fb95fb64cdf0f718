"""Benchmark harness with machine-readable CSV output.

One row per (model, engine, uar flag, repetition). Reduction time is always
included in the total, so the overhead of attempting a reduction shows up
even when nothing simplifies. Failures are recorded in the status column and
the run continues.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

from .core import Model
from .errors import BudgetExceeded, ParseError, UarError, ValidationError
from .ground import EngineConfig
from .modelfile import parse_model
from .pipeline import solve

CSV_COLUMNS = [
    "model",
    "engine",
    "uar",
    "domain_size",
    "detect_ms",
    "reduce_ms",
    "solve_ms",
    "total_ms",
    "log_weight",
    "status",
]


@dataclass
class BenchRow:
    model: str
    engine: str
    uar: str
    domain_size: int
    detect_ms: float = 0.0
    reduce_ms: float = 0.0
    solve_ms: float = 0.0
    total_ms: float = 0.0
    log_weight: str = ""
    status: str = "ok"

    def as_list(self) -> list:
        return [
            self.model,
            self.engine,
            self.uar,
            self.domain_size,
            f"{self.detect_ms:.3f}",
            f"{self.reduce_ms:.3f}",
            f"{self.solve_ms:.3f}",
            f"{self.total_ms:.3f}",
            self.log_weight,
            self.status,
        ]


def _resolve(source) -> Model:
    if isinstance(source, Model):
        return source
    return parse_model(source)


def bench(
    sources,
    engines=("ve",),
    uar_flags=(True, False),
    repetitions: int = 1,
    config: EngineConfig | None = None,
) -> list:
    """Run solves over (label, model-or-text) sources and collect rows."""
    rows = []
    for label, source in sources:
        try:
            model = _resolve(source)
        except ParseError:
            for engine in engines:
                for flag in uar_flags:
                    for _ in range(repetitions):
                        rows.append(
                            BenchRow(label, engine, "on" if flag else "off", 0, status="parse_error")
                        )
            continue
        size = max((d.size for d in model.domains), default=0)
        for engine in engines:
            for flag in uar_flags:
                for _ in range(repetitions):
                    rows.append(_run_one(label, model, size, engine, flag, config))
    return rows


def _run_one(label, model, size, engine, flag, config) -> BenchRow:
    row = BenchRow(label, engine, "on" if flag else "off", size)
    t0 = time.perf_counter()
    try:
        res = solve(model, engine=engine, use_uar=flag, config=config)
    except BudgetExceeded:
        row.status = "budget_exceeded"
    except ValidationError:
        row.status = "validation_error"
    except UarError as e:
        row.status = type(e).__name__
    else:
        row.detect_ms = (res.stats.shatter_s + res.stats.detect_s) * 1e3
        row.reduce_ms = res.stats.reduce_s * 1e3
        row.solve_ms = res.stats.solve_s * 1e3
        row.log_weight = f"{res.log_weight:.17g}"
    row.total_ms = row.detect_ms + row.reduce_ms + row.solve_ms
    if row.status != "ok":
        row.total_ms = (time.perf_counter() - t0) * 1e3
    return row


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_list())
    return buf.getvalue()
