"""Execution-accuracy evaluation of re-ranking over a corpus.

For each entry the gold SQL runs on the original database; the top-1
candidate before and after re-ranking is checked against that result with
the relaxed comparison. The "paper" gate mode re-ranks only entries whose
candidate list contains at least one correct and at least one incorrect
candidate (judging by the gold result), since re-ranking cannot help the
all-wrong case and cannot hurt the all-right case.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable

from .corpus import CorpusEntry, apply_type_overrides
from .dbio import read_database
from .executor import ExecutionResult, OutcomeKind, execute, results_equal_relaxed
from .suite import RerankOutcome, SuiteConfig, select_best


@dataclass(frozen=True)
class EntryReport:
    entry_id: str
    pre_top1_correct: bool = False
    post_top1_correct: bool = False
    gated_out: bool = False
    skipped_all_same: bool = False
    distinguished: bool = False
    suite_size: int = 0
    oracle_calls: int = 0
    oracle_unavailable: int = 0
    error: str | None = None
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    entries: tuple[EntryReport, ...]
    evaluated: int
    ex_before: float
    ex_after: float
    gated_out_count: int
    skipped_count: int
    error_count: int


def entry_seed(base_seed: int, entry_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{entry_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def evaluate_entry(
    entry: CorpusEntry,
    oracle_factory: Callable[[CorpusEntry], Any],
    config: SuiteConfig,
    gate: str = "paper",
    base_seed: int = 0,
) -> EntryReport:
    if entry.gold_sql is None:
        return EntryReport(entry_id=entry.entry_id, error="missing gold_sql", tags=entry.tags)
    try:
        db = apply_type_overrides(read_database(entry.db_file), entry.type_overrides)
    except Exception as exc:  # per-entry failures are recorded, not fatal
        return EntryReport(entry_id=entry.entry_id, error=f"database load: {exc}", tags=entry.tags)

    gold_outcome = execute(db, entry.gold_sql, config.timeout)
    if gold_outcome.kind is not OutcomeKind.OK or gold_outcome.result is None:
        return EntryReport(
            entry_id=entry.entry_id,
            error=f"gold execution: {gold_outcome.kind.value} {gold_outcome.message}".strip(),
            tags=entry.tags,
        )
    gold_result = gold_outcome.result

    def _correct(sql: str) -> bool:
        outcome = execute(db, sql, config.timeout)
        return (
            outcome.kind is OutcomeKind.OK
            and outcome.result is not None
            and results_equal_relaxed(outcome.result, gold_result)
        )

    candidates = list(entry.candidates)
    pre_correct = _correct(candidates[0].sql)

    if gate == "paper":
        flags = [_correct(c.sql) for c in candidates]
        if not any(flags) or all(flags):
            return EntryReport(
                entry_id=entry.entry_id,
                pre_top1_correct=pre_correct,
                post_top1_correct=pre_correct,
                gated_out=True,
                tags=entry.tags,
            )

    seeded = replace(config, gen=replace(config.gen, seed=entry_seed(base_seed, entry.entry_id)))
    oracle = oracle_factory(entry)
    try:
        outcome: RerankOutcome = select_best(
            db, entry.question, candidates, seeded, oracle
        )
    except Exception as exc:
        return EntryReport(
            entry_id=entry.entry_id,
            pre_top1_correct=pre_correct,
            error=f"select_best: {exc}",
            tags=entry.tags,
        )
    post_correct = _correct(outcome.ranked[0].sql)
    suite = outcome.suite
    return EntryReport(
        entry_id=entry.entry_id,
        pre_top1_correct=pre_correct,
        post_top1_correct=post_correct,
        skipped_all_same=outcome.skipped_all_same,
        distinguished=suite.distinguished,
        suite_size=len(suite.cases),
        oracle_calls=suite.attempts - suite.dropped_duplicate,
        oracle_unavailable=suite.dropped_unavailable,
        tags=entry.tags,
    )


def evaluate_corpus(
    entries: list[CorpusEntry],
    oracle_factory: Callable[[CorpusEntry], Any],
    config: SuiteConfig,
    gate: str = "paper",
    base_seed: int = 0,
    workers: int = 1,
) -> EvalReport:
    if gate not in ("paper", "none"):
        raise ValueError(f"unknown gate {gate!r}")
    if workers > 1 and entries:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(
                pool.map(
                    lambda e: evaluate_entry(e, oracle_factory, config, gate, base_seed),
                    entries,
                )
            )
    else:
        reports = [
            evaluate_entry(entry, oracle_factory, config, gate, base_seed)
            for entry in entries
        ]
    return build_report(reports)


def build_report(reports: list[EntryReport]) -> EvalReport:
    usable = [r for r in reports if r.error is None]
    evaluated = len(usable)
    ex_before = sum(r.pre_top1_correct for r in usable) / evaluated if evaluated else 0.0
    ex_after = sum(r.post_top1_correct for r in usable) / evaluated if evaluated else 0.0
    return EvalReport(
        entries=tuple(reports),
        evaluated=evaluated,
        ex_before=ex_before,
        ex_after=ex_after,
        gated_out_count=sum(r.gated_out for r in reports),
        skipped_count=sum(r.skipped_all_same for r in reports),
        error_count=sum(r.error is not None for r in reports),
    )


def report_to_json(report: EvalReport) -> dict[str, Any]:
    payload = {
        "entries": [asdict(r) | {"tags": list(r.tags)} for r in report.entries],
        "evaluated": report.evaluated,
        "ex_before": report.ex_before,
        "ex_after": report.ex_after,
        "gated_out_count": report.gated_out_count,
        "skipped_count": report.skipped_count,
        "error_count": report.error_count,
    }
    _check_report_consistency(payload)
    return payload


def _check_report_consistency(payload: dict[str, Any]) -> None:
    """The aggregates must recompute from the per-entry rows exactly."""
    rows = payload["entries"]
    usable = [r for r in rows if r["error"] is None]
    assert payload["evaluated"] == len(usable)
    expect_before = sum(r["pre_top1_correct"] for r in usable) / len(usable) if usable else 0.0
    expect_after = sum(r["post_top1_correct"] for r in usable) / len(usable) if usable else 0.0
    assert payload["ex_before"] == expect_before
    assert payload["ex_after"] == expect_after
    assert payload["gated_out_count"] == sum(r["gated_out"] for r in rows)
    assert payload["skipped_count"] == sum(r["skipped_all_same"] for r in rows)
    assert payload["error_count"] == sum(r["error"] is not None for r in rows)


def render_report_table(report: EvalReport) -> str:
    lines = [
        f"{'entry':<24} {'pre':>4} {'post':>5} {'gated':>6} {'suite':>6} {'calls':>6}",
    ]
    for r in report.entries:
        if r.error is not None:
            lines.append(f"{r.entry_id:<24} ERROR {r.error}")
            continue
        lines.append(
            f"{r.entry_id:<24} {'yes' if r.pre_top1_correct else 'no':>4}"
            f" {'yes' if r.post_top1_correct else 'no':>5}"
            f" {'yes' if r.gated_out else 'no':>6}"
            f" {r.suite_size:>6} {r.oracle_calls:>6}"
        )
    lines.append(
        f"EX before={report.ex_before:.3f} after={report.ex_after:.3f}"
        f" evaluated={report.evaluated} gated_out={report.gated_out_count}"
        f" skipped={report.skipped_count} errors={report.error_count}"
    )
    return "\n".join(lines)


def dump_report(report: EvalReport) -> str:
    return json.dumps(report_to_json(report), sort_keys=True, indent=2) + "\n"
