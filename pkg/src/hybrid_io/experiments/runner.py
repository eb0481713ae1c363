"""Run an experiment config, persist its records and summarize invariants."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

import numpy as np
from pydantic import BaseModel

from .config import config_hash
from .points import COLUMNS, evaluate, plan

log = logging.getLogger(__name__)

WORKERS_ENV = "HYBRID_IO_WORKERS"


@dataclass(frozen=True)
class ResultRecord:
    config_hash: str
    kind: str
    index: int
    inputs: dict[str, Any]
    measured: dict[str, Any]
    predicted: dict[str, Any]
    checks: dict[str, bool]
    wall_time: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def flat(self) -> dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "index": self.index,
            **self.inputs,
            **self.measured,
            **self.predicted,
            **self.checks,
        }


@dataclass(frozen=True)
class ExperimentResult:
    config_hash: str
    kind: str
    records: tuple[ResultRecord, ...]
    summary: dict[str, Any]

    @property
    def passed(self) -> bool:
        return bool(self.summary["passed"])


def worker_count(explicit: Optional[int] = None) -> int:
    if explicit is not None:
        return max(1, explicit)
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _evaluate_point(args) -> tuple[list[dict], float]:
    kind, params, point, seed = args
    t0 = time.perf_counter()
    rows = evaluate(kind, params, point, seed)
    return rows, time.perf_counter() - t0


def _to_record(h: str, kind: str, index: int, row: dict, wall: float) -> ResultRecord:
    ins, meas, pred, chk = COLUMNS[kind]
    return ResultRecord(
        config_hash=h,
        kind=kind,
        index=index,
        inputs={k: row[k] for k in ins},
        measured={k: row[k] for k in meas},
        predicted={k: row[k] for k in pred},
        checks={k: bool(row[k]) for k in chk},
        wall_time=wall,
    )


def iter_records(cfg: BaseModel, workers: Optional[int] = None) -> Iterator[ResultRecord]:
    """Records in deterministic point order, whatever the worker count."""
    points = plan(cfg.kind, cfg.params)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(points))
    jobs = [(cfg.kind, cfg.params, pt, s) for pt, s in zip(points, seeds)]
    h = config_hash(cfg)
    n_workers = worker_count(workers)
    index = 0
    if n_workers == 1 or len(jobs) == 1:
        results: Iterable = map(_evaluate_point, jobs)
        for rows, wall in results:
            for row in rows:
                yield _to_record(h, cfg.kind, index, row, wall / len(rows))
                index += 1
        return
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        # map preserves submission order
        for rows, wall in pool.map(_evaluate_point, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))):
            for row in rows:
                yield _to_record(h, cfg.kind, index, row, wall / len(rows))
                index += 1


def _finite(x) -> Optional[float]:
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def summarize(cfg: BaseModel, records: list[ResultRecord]) -> dict[str, Any]:
    checks = COLUMNS[cfg.kind][3]
    failures = {c: sum(1 for r in records if not r.checks[c]) for c in checks}
    summary: dict[str, Any] = {
        "config_hash": config_hash(cfg),
        "kind": cfg.kind,
        "seed": cfg.seed,
        "params": cfg.params.model_dump(mode="json"),
        "records": len(records),
        "failures": failures,
        "passed": bool(records) and not any(failures.values()),
    }
    if cfg.kind == "cs_bounds":
        summary["exponents"] = exponent_table(records)
        for row in summary["exponents"]:
            if row["violated"]:
                log.warning(
                    "regime %s n=%d: measured exponent %.4f below bound %.4f",
                    row["regime"],
                    row["n"],
                    row["min_measured_exponent"],
                    row["bound_exponent"],
                )
    return summary


def exponent_table(records: list[ResultRecord]) -> list[dict[str, Any]]:
    """Minimum measured exponent per (regime, n) for the B1/B2 upper bounds."""
    groups: dict[tuple[str, int], list[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.inputs["regime"], r.inputs["n"]), []).append(r)
    out = []
    for (reg, n), rs in sorted(groups.items()):
        exps = [r.measured["measured_exponent"] for r in rs if not math.isnan(r.measured["measured_exponent"])]
        if not exps:
            continue
        stated = rs[0].predicted["bound_exponent"]
        worst = min(exps)
        out.append(
            {
                "regime": reg,
                "n": n,
                "min_measured_exponent": worst,
                "bound_exponent": stated,
                "violated": any(not r.checks["within_bounds"] for r in rs),
            }
        )
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def emit_tables(
    cfg: BaseModel, records: list[ResultRecord], out_dir: str | Path, wall_time: float = 0.0
) -> dict[str, Any]:
    """Write ``<kind>.csv`` and ``summary.json``; returns the summary.

    CSV floats use repr so they parse back exactly. Wall times are kept out of
    the CSV so equal configs give byte-identical files.
    """
    if not records:
        raise ValueError("no records to write")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    header = list(records[0].flat())
    with open(out / f"{cfg.kind}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            flat = r.flat()
            w.writerow([_fmt(flat[k]) for k in header])
    summary = summarize(cfg, records)
    doc = {**summary, "wall_time": wall_time}
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=_finite) + "\n")
    return summary


def run_experiment(cfg: BaseModel, workers: Optional[int] = None, write: bool = True) -> ExperimentResult:
    t0 = time.perf_counter()
    records = list(iter_records(cfg, workers))
    wall = time.perf_counter() - t0
    if write:
        summary = emit_tables(cfg, records, cfg.output, wall)
    else:
        summary = summarize(cfg, records)
    return ExperimentResult(config_hash(cfg), cfg.kind, tuple(records), summary)


def _parse_cell(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    if text == "":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_table(path: str | Path) -> list[dict[str, Any]]:
    """Rows of a CSV written by ``emit_tables`` with values parsed back."""
    with open(path, newline="") as fh:
        return [{k: _parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def collect_summaries(results_dir: str | Path) -> list[tuple[Path, dict[str, Any]]]:
    return [(p, json.loads(p.read_text())) for p in sorted(Path(results_dir).rglob("summary.json"))]
