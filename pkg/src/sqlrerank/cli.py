"""Command-line interface: gen-db, gen-suite, rerank, eval."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .corpus import CorpusEntry, load_candidates_file, load_corpus
from .dbgen import GenConfig, GenMethod, fuzz_database, sample_database
from .dbio import read_database, write_database
from .errors import SqlRerankError
from .evaluate import dump_report, evaluate_corpus, render_report_table
from .oracle import ReferenceOracle, RemoteOracle, ReplayOracle, ReplyCache
from .promptgen import DbFormat, PromptConfig, load_example_pool
from .suite import (
    SuiteConfig,
    TestSuite,
    classify_candidates,
    dump_json,
    generate_suite,
    outcome_to_json,
    rerank,
    suite_from_json,
    suite_to_json,
)

_CONFIG_KEYS = {"mts", "method", "seed", "format", "shots", "n", "comparison", "workers"}


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as handle:
        config = json.load(handle)
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise SqlRerankError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return config


def _gen_method(name: str) -> GenMethod:
    try:
        return GenMethod(name)
    except ValueError:
        raise SqlRerankError(f"unknown generation method {name!r}") from None


def _build_suite_config(args, config: dict) -> SuiteConfig:
    method = _gen_method(args.method or config.get("method", "random-selection"))
    mts = args.mts if args.mts is not None else int(config.get("mts", 5))
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    n = args.n if getattr(args, "n", None) is not None else int(config.get("n", 10))
    db_format = DbFormat(getattr(args, "format", None) or config.get("format", "csv"))
    comparison = getattr(args, "comparison", None) or config.get("comparison", "relaxed")
    if comparison not in ("relaxed", "exact"):
        raise SqlRerankError(f"unknown comparison mode {comparison!r}")

    pool = ()
    examples_path = getattr(args, "examples", None)
    if examples_path:
        pool = load_example_pool(examples_path)
    shots = getattr(args, "shots", None)
    if shots is None:
        shots = int(config.get("shots", 7)) if pool else 0
    shots = min(shots, len(pool))
    return SuiteConfig(
        max_test_cases=n,
        gen=GenConfig(mts=mts, method=method, seed=seed),
        prompt=PromptConfig(db_format=db_format, shots=shots, example_pool=pool),
        relaxed=(comparison == "relaxed"),
    )


def _build_oracle(args, entry_gold_sql: str | None = None):
    kind = args.oracle
    if kind == "reference":
        gold = entry_gold_sql or getattr(args, "gold_sql", None)
        if not gold:
            raise SqlRerankError("the reference oracle needs --gold-sql")
        return ReferenceOracle(gold)
    if kind == "remote":
        if not args.base_url:
            raise SqlRerankError("the remote oracle needs --base-url")
        remote = RemoteOracle(base_url=args.base_url, model=args.model)
        if getattr(args, "cache", None):
            return ReplayOracle(ReplyCache(args.cache), delegate=remote)
        return remote
    if kind == "replay":
        if not getattr(args, "cache", None):
            raise SqlRerankError("the replay oracle needs --cache")
        return ReplayOracle(ReplyCache(args.cache))
    raise SqlRerankError(f"unknown oracle {kind!r}")


def _cmd_gen_db(args) -> int:
    config = _load_config_file(args.config)
    method = _gen_method(args.method or config.get("method", "random-selection"))
    mts = args.mts if args.mts is not None else int(config.get("mts", 5))
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    gen = GenConfig(mts=mts, method=method, seed=seed)
    original = read_database(args.db)
    if method is GenMethod.FUZZING:
        instance = fuzz_database(original.schema, gen)
    else:
        instance = sample_database(original, gen)
    if os.path.exists(args.out):
        os.remove(args.out)
    write_database(instance, args.out)
    for table in instance.schema.tables:
        print(f"{table.name}: {instance.row_count(table.name)} rows")
    return 0


def _cmd_gen_suite(args) -> int:
    config = _load_config_file(args.config)
    suite_config = _build_suite_config(args, config)
    db = read_database(args.db)
    candidates = list(load_candidates_file(args.candidates_file))
    oracle = _build_oracle(args)
    classes, representatives = classify_candidates(db, candidates, suite_config.timeout)
    if len(classes) <= 1:
        print("skipped: all candidates fall into one behavior class")
        payload = suite_to_json(TestSuite())
    else:
        suite = generate_suite(
            db,
            args.question,
            representatives,
            suite_config,
            oracle,
            all_sqls=[c.sql for c in candidates],
        )
        payload = suite_to_json(suite)
        print(
            f"classes: {len(classes)}; cases kept: {len(suite.cases)};"
            f" dropped duplicate: {suite.dropped_duplicate};"
            f" dropped unavailable: {suite.dropped_unavailable};"
            f" distinguished: {'yes' if suite.distinguished else 'no'}"
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(dump_json(payload))
    return 0


def _cmd_rerank(args) -> int:
    config = _load_config_file(args.config)
    comparison = args.comparison or config.get("comparison", "relaxed")
    if comparison not in ("relaxed", "exact"):
        raise SqlRerankError(f"unknown comparison mode {comparison!r}")
    with open(args.suite, encoding="utf-8") as handle:
        suite = suite_from_json(json.load(handle))
    candidates = list(load_candidates_file(args.candidates_file))
    outcome = rerank(candidates, suite, relaxed=(comparison == "relaxed"))
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(dump_json(outcome_to_json(outcome)))
    before = candidates[0].sql
    after = outcome.ranked[0].sql
    print(f"top-1 before: {before}")
    print(f"top-1 after:  {after}")
    return 0


def _cmd_eval(args) -> int:
    config = _load_config_file(args.config)
    suite_config = _build_suite_config(args, config)
    workers = args.workers if args.workers is not None else int(config.get("workers", 1))
    entries = load_corpus(args.corpus)

    def oracle_factory(entry: CorpusEntry):
        return _build_oracle(args, entry_gold_sql=entry.gold_sql)

    report = evaluate_corpus(
        entries,
        oracle_factory,
        suite_config,
        gate=args.gate,
        base_seed=suite_config.gen.seed,
        workers=workers,
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(dump_report(report))
    print(render_report_table(report))
    return 0


def _add_common_gen_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=[m.value for m in GenMethod], default=None)
    parser.add_argument("--mts", type=int, default=None, help="maximum rows per table")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", default=None, help="JSON config file")


def _add_oracle_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--oracle", choices=["remote", "reference", "replay"], required=True)
    parser.add_argument("--gold-sql", default=None, help="ground truth for the reference oracle")
    parser.add_argument("--base-url", default=None, help="chat-completion endpoint base URL")
    parser.add_argument("--model", default="gpt-4", help="remote model name")
    parser.add_argument("--cache", default=None, help="reply cache file (replay oracle)")
    parser.add_argument("--examples", default=None, help="few-shot example pool JSON")
    parser.add_argument("--shots", type=int, default=None)
    parser.add_argument("--format", choices=[f.value for f in DbFormat], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqlrerank",
        description="Generate test databases and re-rank text-to-SQL candidates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-db", help="generate a database with the same schema")
    p.add_argument("--db", required=True, help="source database file")
    p.add_argument("--out", required=True, help="output database file")
    _add_common_gen_flags(p)
    p.set_defaults(func=_cmd_gen_db)

    p = sub.add_parser("gen-suite", help="generate a distinguishing test suite")
    p.add_argument("--db", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--candidates-file", required=True)
    p.add_argument("--n", type=int, default=None, help="maximum test cases")
    p.add_argument("--out", required=True)
    p.add_argument("--comparison", choices=["relaxed", "exact"], default=None)
    _add_common_gen_flags(p)
    _add_oracle_flags(p)
    p.set_defaults(func=_cmd_gen_suite)

    p = sub.add_parser("rerank", help="re-rank candidates against a saved suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--candidates-file", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--comparison", choices=["relaxed", "exact"], default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_rerank)

    p = sub.add_parser("eval", help="evaluate re-ranking over a corpus")
    p.add_argument("--corpus", required=True, help="corpus manifest JSON")
    p.add_argument("--gate", choices=["paper", "none"], default="paper")
    p.add_argument("--report", default=None, help="report output file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--comparison", choices=["relaxed", "exact"], default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_common_gen_flags(p)
    _add_oracle_flags(p)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SqlRerankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
