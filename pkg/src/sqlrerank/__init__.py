"""Test-case generation and candidate re-ranking for text-to-SQL models."""

from .dbgen import (
    GenConfig,
    GenMethod,
    constrain_numbers,
    extract_target_columns,
    fuzz_database,
    prune_schema,
    sample_database,
)
from .dbio import read_database, write_database
from .errors import (
    CacheIo,
    CyclicForeignKeys,
    FileUnreadable,
    MalformedDatabase,
    ManifestError,
    ParseFailure,
    SqlParseError,
    SqlRerankError,
    TargetIsForeignKey,
    UnknownColumn,
)
from .executor import (
    ExecutionOutcome,
    ExecutionResult,
    OutcomeKind,
    execute,
    result_canonical_key,
    results_equal,
    results_equal_relaxed,
)
from .instance import DatabaseInstance, TableData
from .oracle import (
    NoisyOracle,
    OraclePrediction,
    OracleRequest,
    ReferenceOracle,
    RemoteOracle,
    ReplayOracle,
    ReplyCache,
    build_request,
)
from .promptgen import (
    DbFormat,
    Prompt,
    PromptConfig,
    build_prompt,
    parse_answer,
    render_answer,
    render_csv,
    render_sqlite,
)
from .schema import (
    ColumnDef,
    ColumnType,
    ForeignKey,
    SchemaGraph,
    Table,
    introspect_schema,
    reverse_topo_order,
    topo_order_parents_first,
)
from .suite import (
    Candidate,
    RerankOutcome,
    SuiteConfig,
    TestCase,
    TestSuite,
    classify_candidates,
    generate_suite,
    rerank,
    select_best,
)

__all__ = [
    "CacheIo",
    "Candidate",
    "ColumnDef",
    "ColumnType",
    "CyclicForeignKeys",
    "DatabaseInstance",
    "DbFormat",
    "ExecutionOutcome",
    "ExecutionResult",
    "FileUnreadable",
    "ForeignKey",
    "GenConfig",
    "GenMethod",
    "MalformedDatabase",
    "ManifestError",
    "NoisyOracle",
    "OraclePrediction",
    "OracleRequest",
    "OutcomeKind",
    "ParseFailure",
    "Prompt",
    "PromptConfig",
    "ReferenceOracle",
    "RemoteOracle",
    "ReplayOracle",
    "ReplyCache",
    "RerankOutcome",
    "SchemaGraph",
    "SqlParseError",
    "SqlRerankError",
    "SuiteConfig",
    "Table",
    "TableData",
    "TargetIsForeignKey",
    "TestCase",
    "TestSuite",
    "UnknownColumn",
    "build_prompt",
    "build_request",
    "classify_candidates",
    "constrain_numbers",
    "execute",
    "extract_target_columns",
    "fuzz_database",
    "generate_suite",
    "introspect_schema",
    "parse_answer",
    "prune_schema",
    "read_database",
    "render_answer",
    "render_csv",
    "render_sqlite",
    "rerank",
    "result_canonical_key",
    "results_equal",
    "results_equal_relaxed",
    "reverse_topo_order",
    "sample_database",
    "select_best",
    "topo_order_parents_first",
    "write_database",
]

__version__ = "0.1.0"
