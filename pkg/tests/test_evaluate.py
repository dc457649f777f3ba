import json

import pytest

from sqlrerank.corpus import load_corpus
from sqlrerank.dbgen import GenConfig, GenMethod
from sqlrerank.dbio import write_database
from sqlrerank.evaluate import (
    EntryReport,
    build_report,
    dump_report,
    entry_seed,
    evaluate_corpus,
    evaluate_entry,
    render_report_table,
    report_to_json,
)
from sqlrerank.oracle import ReferenceOracle
from sqlrerank.suite import SuiteConfig

GOLD_MIN = "SELECT min(age) FROM student"
WRONG_MAX = "SELECT max(age) FROM student"
GOLD_COUNT = "SELECT count(*) FROM student"


def cfg(seed=0):
    return SuiteConfig(gen=GenConfig(method=GenMethod.RANDOM_SELECTION, seed=seed, mts=3))


def reference_factory(entry):
    return ReferenceOracle(entry.gold_sql)


def _entry(entry_id, candidates, gold=GOLD_MIN, **extra):
    return {
        "entry_id": entry_id,
        "db_id": "students",
        "db_file": "s.db",
        "question": "lowest age?",
        "candidates": [
            {"sql": sql, "rank": i, "probability": p} for i, (sql, p) in enumerate(candidates)
        ],
        "gold_sql": gold,
        **extra,
    }


@pytest.fixture
def corpus(tmp_path, student_instance):
    write_database(student_instance, str(tmp_path / "s.db"))
    manifest = {
        "entries": [
            _entry("good-rerank", [(WRONG_MAX, 0.9), (GOLD_MIN, 0.1)]),
            _entry("already-right", [(GOLD_COUNT, 0.8), ("SELECT 99", 0.2)], gold=GOLD_COUNT),
            _entry("all-wrong", [(WRONG_MAX, 0.9), ("SELECT 'zzz'", 0.1)]),
            _entry(
                "all-right",
                [(GOLD_MIN, 0.6), ("SELECT min(age) FROM student WHERE 1=1", 0.4)],
                tags=["easy"],
            ),
        ]
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return load_corpus(str(path))


def by_id(report, entry_id):
    return next(r for r in report.entries if r.entry_id == entry_id)


# --- per-entry seeds -------------------------------------------------------------


def test_entry_seed_deterministic():
    assert entry_seed(0, "e1") == entry_seed(0, "e1")
    assert entry_seed(0, "e1") != entry_seed(0, "e2")
    assert entry_seed(0, "e1") != entry_seed(1, "e1")
    assert 0 <= entry_seed(7, "anything") < 2**63


# --- single entries ---------------------------------------------------------------


def test_evaluate_entry_reranks_to_gold(corpus):
    report = evaluate_entry(corpus[0], reference_factory, cfg())
    assert report.entry_id == "good-rerank"
    assert not report.pre_top1_correct
    assert report.post_top1_correct
    assert not report.gated_out
    assert report.distinguished
    assert report.suite_size >= 1
    assert report.oracle_calls >= report.suite_size
    assert report.error is None


def test_evaluate_entry_keeps_correct_top1(corpus):
    report = evaluate_entry(corpus[1], reference_factory, cfg())
    assert report.pre_top1_correct
    assert report.post_top1_correct


def test_evaluate_entry_gates_all_wrong(corpus):
    report = evaluate_entry(corpus[2], reference_factory, cfg())
    assert report.gated_out
    assert not report.pre_top1_correct
    assert not report.post_top1_correct
    assert report.suite_size == 0


def test_evaluate_entry_gates_all_right(corpus):
    report = evaluate_entry(corpus[3], reference_factory, cfg())
    assert report.gated_out
    assert report.pre_top1_correct
    assert report.post_top1_correct
    assert report.tags == ("easy",)


def test_evaluate_entry_no_gate_runs_everything(corpus):
    gated = evaluate_entry(corpus[2], reference_factory, cfg(), gate="none")
    assert not gated.gated_out
    same = evaluate_entry(corpus[3], reference_factory, cfg(), gate="none")
    assert not same.gated_out
    assert same.skipped_all_same  # both candidates behave identically
    assert same.post_top1_correct


def test_evaluate_entry_missing_gold(corpus):
    entry = corpus[0]
    stripped = type(entry)(
        entry_id=entry.entry_id,
        db_id=entry.db_id,
        db_file=entry.db_file,
        question=entry.question,
        candidates=entry.candidates,
        gold_sql=None,
    )
    report = evaluate_entry(stripped, reference_factory, cfg())
    assert report.error == "missing gold_sql"


def test_evaluate_entry_broken_gold(corpus):
    entry = corpus[0]
    broken = type(entry)(
        entry_id="bad",
        db_id=entry.db_id,
        db_file=entry.db_file,
        question=entry.question,
        candidates=entry.candidates,
        gold_sql="SELECT ghost FROM student",
    )
    report = evaluate_entry(broken, reference_factory, cfg())
    assert report.error is not None
    assert report.error.startswith("gold execution")


def test_evaluate_entry_unreadable_db(corpus, tmp_path):
    entry = corpus[0]
    junk = tmp_path / "junk.db"
    junk.write_text("not a database file at all, just filler text")
    broken = type(entry)(
        entry_id="bad-db",
        db_id=entry.db_id,
        db_file=str(junk),
        question=entry.question,
        candidates=entry.candidates,
        gold_sql=entry.gold_sql,
    )
    report = evaluate_entry(broken, reference_factory, cfg())
    assert report.error is not None
    assert report.error.startswith("database load")


# --- corpus-level runs --------------------------------------------------------------


def test_evaluate_corpus(corpus):
    report = evaluate_corpus(corpus, reference_factory, cfg())
    assert report.evaluated == 4
    assert report.error_count == 0
    assert report.gated_out_count == 2
    assert by_id(report, "good-rerank").post_top1_correct
    # Before: only already-right and all-right hit on rank 0. After: good-rerank joins.
    assert report.ex_before == 0.5
    assert report.ex_after == 0.75


def test_evaluate_corpus_gate_validation(corpus):
    with pytest.raises(ValueError):
        evaluate_corpus(corpus, reference_factory, cfg(), gate="strict")


def test_evaluate_corpus_workers_match_serial(corpus):
    serial = evaluate_corpus(corpus, reference_factory, cfg(), workers=1)
    threaded = evaluate_corpus(corpus, reference_factory, cfg(), workers=3)
    assert serial == threaded


def test_evaluate_corpus_deterministic(corpus):
    a = dump_report(evaluate_corpus(corpus, reference_factory, cfg()))
    b = dump_report(evaluate_corpus(corpus, reference_factory, cfg()))
    assert a == b


def test_evaluate_corpus_empty():
    report = evaluate_corpus([], reference_factory, cfg())
    assert report.evaluated == 0
    assert report.ex_before == 0.0


# --- report assembly ------------------------------------------------------------------


def test_build_report_aggregates():
    rows = [
        EntryReport("a", pre_top1_correct=True, post_top1_correct=True),
        EntryReport("b", pre_top1_correct=False, post_top1_correct=True),
        EntryReport("c", gated_out=True),
        EntryReport("d", error="boom"),
        EntryReport("e", skipped_all_same=True, pre_top1_correct=True, post_top1_correct=True),
    ]
    report = build_report(rows)
    assert report.evaluated == 4
    assert report.error_count == 1
    assert report.gated_out_count == 1
    assert report.skipped_count == 1
    assert report.ex_before == 2 / 4
    assert report.ex_after == 3 / 4


def test_report_json_round_trips_consistency(corpus):
    report = evaluate_corpus(corpus, reference_factory, cfg())
    payload = report_to_json(report)
    assert payload["evaluated"] == 4
    assert len(payload["entries"]) == 4
    assert payload["entries"][0]["tags"] == []


def test_render_report_table(corpus):
    report = evaluate_corpus(corpus, reference_factory, cfg())
    table = render_report_table(report)
    lines = table.splitlines()
    assert len(lines) == 1 + 4 + 1  # header, rows, summary
    assert "good-rerank" in table
    assert "EX before=0.500 after=0.750" in lines[-1]


def test_render_report_table_error_rows():
    report = build_report([EntryReport("x", error="kaput")])
    assert "ERROR kaput" in render_report_table(report)
    assert "evaluated=0" in render_report_table(report)


def test_dump_report_shape(corpus):
    text = dump_report(evaluate_corpus(corpus, reference_factory, cfg()))
    assert text.endswith("\n")
    payload = json.loads(text)
    assert "timestamp" not in text
    assert sorted(payload) == list(payload)  # honours sort_keys
