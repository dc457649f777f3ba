"""Generating database instances that share a schema with an original.

Two methods: fuzzing (synthetic random cells, parents generated first so FK
children can sample from parent columns) and random selection (whole rows
sampled from the original, children generated first so their referenced
parent rows can be carried over). Plus two pre-generation transforms driven
by SQL analysis of the candidate queries: schema pruning and number-range
constraining for aggregation/sort columns.
"""
from __future__ import annotations

import logging
import random
import string
from dataclasses import dataclass, replace
from enum import Enum

from .errors import CyclicForeignKeys, MalformedDatabase, TargetIsForeignKey, UnknownColumn
from .instance import Cell, DatabaseInstance, TableData, column_index
from .schema import (
    ColumnDef,
    ColumnType,
    ForeignKey,
    SchemaGraph,
    Table,
    reverse_topo_order,
    topo_order_parents_first,
)
from .sqlanalysis import analyze_all

log = logging.getLogger(__name__)


class GenMethod(Enum):
    FUZZING = "fuzzing"
    RANDOM_SELECTION = "random-selection"


@dataclass(frozen=True)
class GenConfig:
    mts: int = 5
    method: GenMethod = GenMethod.RANDOM_SELECTION
    seed: int = 0
    constrained_range: tuple[int, int] = (1, 10)

    def __post_init__(self) -> None:
        if self.mts < 1:
            raise ValueError("mts must be at least 1")
        lo, hi = self.constrained_range
        if lo > hi:
            raise ValueError("constrained_range is empty")


_TEXT_ALPHABET = string.ascii_lowercase


def _random_text(rng: random.Random) -> str:
    length = rng.randint(3, 10)
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(length))


def _fuzz_plain_column(col: ColumnDef, mts: int, rng: random.Random) -> list[Cell]:
    ctype = col.declared_type
    if ctype is ColumnType.INTEGER:
        if col.is_primary_key:
            return list(rng.sample(range(0, max(101, mts * 10)), mts))
        return [rng.randint(0, 100) for _ in range(mts)]
    if ctype is ColumnType.REAL:
        if col.is_primary_key:
            grid = rng.sample(range(0, max(10001, mts)), mts)
            return [g / 100.0 for g in grid]
        return [round(rng.uniform(0.0, 100.0), 2) for _ in range(mts)]
    # Text and Other both fuzz as text.
    if col.is_primary_key:
        values: list[Cell] = []
        seen: set[str] = set()
        while len(values) < mts:
            v = _random_text(rng)
            if v not in seen:
                seen.add(v)
                values.append(v)
        return values
    return [_random_text(rng) for _ in range(mts)]


def _fuzz_fk_column(
    col: ColumnDef,
    fks: list[ForeignKey],
    pools: dict[tuple[str, str], list[Cell]],
    mts: int,
    rng: random.Random,
) -> list[Cell]:
    pool = list(pools[(fks[0].parent_table.lower(), fks[0].parent_column.lower())])
    for fk in fks[1:]:
        allowed = set(pools[(fk.parent_table.lower(), fk.parent_column.lower())])
        pool = [v for v in pool if v in allowed]
    if not pool:
        tables = ", ".join(sorted({fk.parent_table for fk in fks}))
        raise MalformedDatabase(
            f"no value satisfies every foreign key on {fks[0].child_table}.{col.name}"
            f" (parents: {tables})"
        )
    if col.is_primary_key:
        distinct = list(dict.fromkeys(pool))
        if len(distinct) >= mts:
            return list(rng.sample(distinct, mts))
        # Parent has too few distinct values for a unique child column;
        # FK validity wins and duplicates are accepted.
        return [rng.choice(pool) for _ in range(mts)]
    return [rng.choice(pool) for _ in range(mts)]


def _table_column_order(table: Table, self_fks: list[ForeignKey]) -> list[ColumnDef]:
    """Columns ordered so self-FK parent columns precede their child columns."""
    if not self_fks:
        return list(table.columns)
    names = [c.name.lower() for c in table.columns]
    dependents: dict[str, set[str]] = {n: set() for n in names}
    indegree = {n: 0 for n in names}
    edges = set()
    for fk in self_fks:
        edge = (fk.parent_column.lower(), fk.child_column.lower())
        if edge[0] == edge[1] or edge in edges:
            continue
        edges.add(edge)
        dependents[edge[0]].add(edge[1])
        indegree[edge[1]] += 1
    order: list[str] = []
    remaining = list(names)
    while remaining:
        pick = next((n for n in remaining if indegree[n] == 0), None)
        if pick is None:
            raise CyclicForeignKeys(
                f"self-referencing foreign keys in {table.name!r} form a column cycle"
            )
        remaining.remove(pick)
        order.append(pick)
        for dep in dependents[pick]:
            indegree[dep] -= 1
    by_name = {c.name.lower(): c for c in table.columns}
    return [by_name[n] for n in order]


def fuzz_database(schema: SchemaGraph, config: GenConfig) -> DatabaseInstance:
    """Generate a fresh instance with random cells, honoring FKs and types."""
    if config.method is not GenMethod.FUZZING:
        raise ValueError("config.method must be FUZZING")
    rng = random.Random(config.seed)
    order = topo_order_parents_first(schema)
    pools: dict[tuple[str, str], list[Cell]] = {}
    data: dict[str, TableData] = {}

    for tname in order:
        table = schema.table(tname)
        fks_by_col: dict[str, list[ForeignKey]] = {}
        for fk in schema.foreign_keys_from(tname):
            fks_by_col.setdefault(fk.child_column.lower(), []).append(fk)
        self_fks = [
            fk for fk in schema.foreign_keys_from(tname)
            if fk.parent_table.lower() == tname.lower()
        ]
        values_by_col: dict[str, list[Cell]] = {}
        for col in _table_column_order(table, self_fks):
            fks = fks_by_col.get(col.name.lower())
            if fks:
                # Self-FK pools come from columns of this table generated above.
                for fk in fks:
                    key = (fk.parent_table.lower(), fk.parent_column.lower())
                    if key not in pools and fk.parent_table.lower() == tname.lower():
                        pools[key] = values_by_col[fk.parent_column.lower()]
                values_by_col[col.name.lower()] = _fuzz_fk_column(
                    col, fks, pools, config.mts, rng
                )
            else:
                values_by_col[col.name.lower()] = _fuzz_plain_column(col, config.mts, rng)
        rows = tuple(
            tuple(values_by_col[c.name.lower()][i] for c in table.columns)
            for i in range(config.mts)
        )
        data[table.name] = TableData(table.name, table.column_names(), rows)
        for col in table.columns:
            pools[(tname.lower(), col.name.lower())] = values_by_col[col.name.lower()]

    return DatabaseInstance(schema=schema, tables=data)


def sample_database(original: DatabaseInstance, config: GenConfig) -> DatabaseInstance:
    """Build a new instance out of whole rows sampled from the original.

    Children are processed first; each table keeps every original row that a
    selected child row references (even beyond mts), then fills up to mts
    with distinct randomly chosen remaining rows. Output rows keep the
    original table's relative order.
    """
    if config.method is not GenMethod.RANDOM_SELECTION:
        raise ValueError("config.method must be RANDOM_SELECTION")
    rng = random.Random(config.seed)
    schema = original.schema
    order = reverse_topo_order(schema)
    selected: dict[str, list[int]] = {}
    data: dict[str, TableData] = {}

    for tname in order:
        table = schema.table(tname)
        source = original.data_for(tname)
        rows = source.rows

        needed_values: list[tuple[int, set[Cell]]] = []
        for fk in schema.foreign_keys_into(tname):
            if fk.child_table.lower() == tname.lower():
                continue  # self references are closed over below
            child = original.data_for(fk.child_table)
            ci = column_index(child, fk.child_column)
            chosen = selected.get(fk.child_table.lower(), [])
            values = {child.rows[i][ci] for i in chosen} - {None}
            if values:
                needed_values.append((column_index(source, fk.parent_column), values))

        picked = [
            i for i, row in enumerate(rows)
            if any(row[pi] in values for pi, values in needed_values)
        ]
        picked_set = set(picked)
        if len(picked) < config.mts:
            remaining = [i for i in range(len(rows)) if i not in picked_set]
            need = min(config.mts - len(picked), len(remaining))
            if need:
                picked_set.update(rng.sample(remaining, need))

        self_fks = [
            fk for fk in schema.foreign_keys_from(tname)
            if fk.parent_table.lower() == tname.lower()
        ]
        if self_fks:
            pairs = [
                (column_index(source, fk.child_column), column_index(source, fk.parent_column))
                for fk in self_fks
            ]
            while True:
                missing: set[Cell] = set()
                for ci, pi in pairs:
                    have = {rows[i][pi] for i in picked_set}
                    want = {rows[i][ci] for i in picked_set} - {None}
                    missing |= want - have
                if not missing:
                    break
                closure = [
                    i for i in range(len(rows))
                    if i not in picked_set
                    and any(rows[i][pi] in missing for _ci, pi in pairs)
                ]
                if not closure:
                    break  # original itself violates the FK; nothing to add
                picked_set.update(closure)

        final = sorted(picked_set)
        selected[tname.lower()] = final
        data[table.name] = TableData(
            table.name, source.columns, tuple(rows[i] for i in final)
        )

    return DatabaseInstance(schema=schema, tables=data)


def generate_database(source: DatabaseInstance, config: GenConfig) -> DatabaseInstance:
    """Dispatch on config.method."""
    if config.method is GenMethod.FUZZING:
        return fuzz_database(source.schema, config)
    return sample_database(source, config)


def constrain_numbers(
    db: DatabaseInstance,
    target_columns: set[tuple[str, str]],
    config: GenConfig,
) -> DatabaseInstance:
    """Replace every cell of each target column with a small random integer."""
    schema = db.schema
    for tname, cname in sorted(target_columns):
        if not schema.has_table(tname):
            raise UnknownColumn(f"no table {tname!r}")
        if not schema.table(tname).has_column(cname):
            raise UnknownColumn(f"no column {cname!r} in table {tname!r}")
        if schema.is_foreign_key_endpoint(tname, cname):
            raise TargetIsForeignKey(
                f"{tname}.{cname} participates in a foreign key; constraining it"
                " would break referential validity"
            )
    if not target_columns:
        return db

    rng = random.Random(config.seed)
    lo, hi = config.constrained_range
    tables = dict(db.tables)
    by_table: dict[str, list[str]] = {}
    for tname, cname in sorted(target_columns, key=lambda tc: (tc[0].lower(), tc[1].lower())):
        by_table.setdefault(tname, []).append(cname)

    for tname, cnames in by_table.items():
        source = db.data_for(tname)
        rows = [list(row) for row in source.rows]
        for cname in cnames:
            idx = column_index(source, cname)
            for row in rows:
                row[idx] = rng.randint(lo, hi)
        key = next(k for k in tables if k.lower() == tname.lower())
        tables[key] = TableData(source.table_name, source.columns, tuple(tuple(r) for r in rows))
    return DatabaseInstance(schema=schema, tables=tables)


def extract_target_columns(
    candidate_sqls: list[str], schema: SchemaGraph
) -> set[tuple[str, str]]:
    """Columns used in aggregation or sorting by any candidate, alias-resolved.

    Unparsable candidates are skipped with a warning.
    """
    analyses, _warnings = analyze_all(candidate_sqls, schema)
    targets: set[tuple[str, str]] = set()
    for analysis in analyses:
        targets |= analysis.agg_or_sort_columns
    return targets


def prune_schema(db: DatabaseInstance, candidate_sqls: list[str]) -> DatabaseInstance:
    """Drop tables and columns no candidate references.

    Columns that carry a foreign key between two retained tables survive even
    if unreferenced, so the pruned instance still satisfies its FKs. A
    retained table with no referenced columns keeps its primary key (or first
    column). If nothing parses, the input is returned unchanged.
    """
    analyses, _warnings = analyze_all(candidate_sqls, db.schema)
    if not analyses:
        log.warning("no candidate SQL parsed; returning the instance unpruned")
        return db

    schema = db.schema
    used_tables: set[str] = set()
    used_columns: set[tuple[str, str]] = set()
    starred: set[str] = set()
    for analysis in analyses:
        used_tables |= analysis.tables
        used_columns |= analysis.columns
        starred |= analysis.star_tables

    kept_tables = [t for t in schema.tables if t.name in used_tables]
    kept_names = {t.name.lower() for t in kept_tables}

    fk_keep: set[tuple[str, str]] = set()
    kept_fks: list[ForeignKey] = []
    for fk in schema.foreign_keys:
        if fk.child_table.lower() in kept_names and fk.parent_table.lower() in kept_names:
            fk_keep.add((fk.child_table.lower(), fk.child_column.lower()))
            fk_keep.add((fk.parent_table.lower(), fk.parent_column.lower()))
            kept_fks.append(fk)

    new_tables: list[Table] = []
    projections: dict[str, list[int]] = {}
    for table in kept_tables:
        tkey = table.name.lower()
        wanted = {c.lower() for (t, c) in used_columns if t.lower() == tkey}
        if table.name in starred:
            wanted |= {c.name.lower() for c in table.columns}
        wanted |= {c for (t, c) in fk_keep if t == tkey}
        if not wanted:
            pk = table.primary_key()
            wanted = {c.lower() for c in pk} if pk else {table.columns[0].name.lower()}
        kept_cols = [c for c in table.columns if c.name.lower() in wanted]
        pk_cols = {c.name.lower() for c in table.columns if c.is_primary_key}
        pk_intact = pk_cols <= {c.name.lower() for c in kept_cols}
        if not pk_intact:
            kept_cols = [replace(c, is_primary_key=False) for c in kept_cols]
        new_tables.append(Table(name=table.name, columns=tuple(kept_cols)))
        projections[table.name] = [
            i for i, c in enumerate(table.columns) if c.name.lower() in wanted
        ]

    new_schema = SchemaGraph(tables=tuple(new_tables), foreign_keys=tuple(kept_fks))
    data: dict[str, TableData] = {}
    for table in new_tables:
        source = db.data_for(table.name)
        idxs = projections[table.name]
        data[table.name] = TableData(
            table.name,
            table.column_names(),
            tuple(tuple(row[i] for i in idxs) for row in source.rows),
        )
    return DatabaseInstance(schema=new_schema, tables=data)
