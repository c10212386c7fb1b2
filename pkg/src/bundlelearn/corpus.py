"""Chronological bundle/utility corpora: loading, replay, and table exports.

A corpus row is one transaction: an ordered index, the entities bundled in
it, and the realized utility. Replay runs the recursive estimator over the
dummy design induced by entity membership, the same exercise as fitting
consumer beliefs to a purchase history. Coefficients before the design
reaches full column rank are computed under a ridge prior for display and
flagged as not identified.

CSV contract (bit-exact): header ``order,items,utility``; ``items`` is a
``;``-separated identifier list; decimal point ``.``; LF line endings.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import IO, Mapping, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DuplicateItemInRecord,
    NeverFullRank,
    ParseError,
    SinkWriteFailure,
)
from .estimator import (
    RANK_RTOL,
    History,
    PrecisionState,
    _readonly,
    batch_ols,
    init_ridge,
    recursive_update,
)
from .interactions import CollinearityReduction, reduce_collinearity
from .simulator import Trajectory
from .spectral import decompose

_HEADER = ["order", "items", "utility"]
SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class CorpusRecord:
    timestamp_order: int
    item_ids: tuple[str, ...]
    utility: float

    def __post_init__(self) -> None:
        if not self.item_ids:
            raise ValueError("a record needs at least one item")


@dataclass(frozen=True)
class ReplayReport:
    """Everything the replay produced, identified or not.

    ``entity_index`` maps surviving base entities to their column in the
    reduced design (merged entities share a column; dropped ones are absent).
    Path rows before ``full_rank_time`` carry ridge-prior display values and
    are flagged False in ``identified``. ``kappa_path``/``lambda_min_path``
    come from the exact cumulative information matrix, so kappa is inf until
    rank completes. ``centralities`` rows are (column label, vN entry, vC
    entry) sorted by vN descending.
    """

    entity_index: Mapping[str, int]
    column_labels: tuple[str, ...]
    full_rank_time: int | None
    times: tuple[int, ...]
    coefficient_paths: NDArray[np.float64]
    identified: NDArray[np.bool_]
    surprises: NDArray[np.float64]
    kappa_path: NDArray[np.float64]
    lambda_min_path: NDArray[np.float64]
    centralities: tuple[tuple[str, float, float], ...]
    reductions: CollinearityReduction
    final_state: PrecisionState


@dataclass(frozen=True)
class TrajectoryTable:
    """Neutral tabular form every export writes and the importer returns."""

    columns: tuple[str, ...]
    rows: NDArray[np.float64]

    def __post_init__(self) -> None:
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.size == 0:
            rows = rows.reshape(0, len(self.columns))
        if rows.shape[1] != len(self.columns):
            raise ValueError("row width does not match column count")
        object.__setattr__(self, "rows", _readonly(rows))


def load_corpus(source: IO[str]) -> list[CorpusRecord]:
    """Parse the strict three-column CSV into chronologically sorted records."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, 1, "missing header row") from None
    if header != _HEADER:
        raise ParseError(1, 1, f"header must be {','.join(_HEADER)!r}")
    records: list[CorpusRecord] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(line_no, 1, f"expected 3 columns, got {len(row)}")
        try:
            order = int(row[0])
        except ValueError:
            raise ParseError(line_no, 1, f"bad order {row[0]!r}") from None
        items = row[1].split(";")
        if any(not item for item in items):
            raise ParseError(line_no, 2, "empty item identifier")
        seen: set[str] = set()
        for item in items:
            if item in seen:
                raise DuplicateItemInRecord(line_no, item)
            seen.add(item)
        try:
            utility = float(row[2])
        except ValueError:
            raise ParseError(line_no, 3, f"bad utility {row[2]!r}") from None
        records.append(CorpusRecord(order, tuple(items), utility))
    records.sort(key=lambda r: r.timestamp_order)
    return records


def _filtered_entities(
    records: Sequence[CorpusRecord],
    min_appearances: int,
    split_filter: tuple[int, int, int] | None,
) -> list[str]:
    """Entities passing the appearance filters, in first-appearance order."""
    first_seen: dict[str, int] = {}
    counts: dict[str, int] = {}
    before: dict[str, int] = {}
    after: dict[str, int] = {}
    for pos, rec in enumerate(records):
        for item in rec.item_ids:
            first_seen.setdefault(item, pos)
            counts[item] = counts.get(item, 0) + 1
            if split_filter is not None:
                if rec.timestamp_order <= split_filter[0]:
                    before[item] = before.get(item, 0) + 1
                else:
                    after[item] = after.get(item, 0) + 1
    keep = []
    for item, pos in sorted(first_seen.items(), key=lambda kv: kv[1]):
        if counts[item] < min_appearances:
            continue
        if split_filter is not None:
            if before.get(item, 0) < split_filter[1]:
                continue
            if after.get(item, 0) < split_filter[2]:
                continue
        keep.append(item)
    return keep


def _design(
    records: Sequence[CorpusRecord],
    entities: Sequence[str],
    interactions: bool,
) -> tuple[NDArray[np.float64], list[str]]:
    index = {e: k for k, e in enumerate(entities)}
    base = np.zeros((len(records), len(entities)))
    for row, rec in enumerate(records):
        for item in rec.item_ids:
            col = index.get(item)
            if col is not None:
                base[row, col] = 1.0
    labels = list(entities)
    if not interactions:
        return base, labels
    pair_cols: dict[tuple[int, int], int] = {}
    pair_data: list[NDArray[np.float64]] = []
    for row in range(len(records)):
        present = np.flatnonzero(base[row]).tolist()
        for a in range(len(present)):
            for b in range(a + 1, len(present)):
                key = (present[a], present[b])
                if key not in pair_cols:
                    pair_cols[key] = len(pair_data)
                    pair_data.append(np.zeros(len(records)))
                pair_data[pair_cols[key]][row] = 1.0
    for (i, j), _ in sorted(pair_cols.items(), key=lambda kv: kv[1]):
        labels.append(f"{entities[i]}*{entities[j]}")
    if pair_data:
        base = np.column_stack([base] + pair_data)
    return base, labels


def _reduced_labels(
    reduction: CollinearityReduction, labels: Sequence[str]
) -> tuple[str, ...]:
    out: list[str] = []
    for col in range(reduction.map.shape[1]):
        members = np.flatnonzero(reduction.map[:, col])
        out.append("+".join(labels[int(m)] for m in members))
    return tuple(out)


def replay(
    records: Sequence[CorpusRecord],
    min_appearances: int = 1,
    interactions: bool = False,
    split_filter: tuple[int, int, int] | None = None,
) -> ReplayReport:
    """Run the recursive estimator over the corpus and report the paths.

    Entities appearing fewer than ``min_appearances`` times are dropped
    before building the dummy design (``split_filter = (t, b, a)``
    additionally requires b appearances at orders <= t and a after).
    Perfectly co-occurring entities are merged into composites. The display
    path uses a ridge prior until the exact information matrix reaches full
    rank, switches to the exact batch solution at that step, and continues
    recursively, so final coefficients match a full-design batch fit.

    Raises NeverFullRank, carrying the partial report on its ``report``
    attribute, when the corpus ends before rank completes.
    """
    if min_appearances < 1:
        raise ValueError("min_appearances must be >= 1")
    entities = _filtered_entities(records, min_appearances, split_filter)
    X_raw, labels_raw = _design(records, entities, interactions)
    if not entities:
        empty = ReplayReport(
            entity_index={},
            column_labels=(),
            full_rank_time=None,
            times=tuple(r.timestamp_order for r in records),
            coefficient_paths=np.zeros((len(records), 0)),
            identified=np.zeros(len(records), dtype=bool),
            surprises=np.zeros(len(records)),
            kappa_path=np.full(len(records), np.inf),
            lambda_min_path=np.zeros(len(records)),
            centralities=(),
            reductions=CollinearityReduction((), (), (), np.zeros((0, 0))),
            final_state=init_ridge(1),
        )
        raise NeverFullRank("no entities survive the appearance filter", empty)
    X, reduction = reduce_collinearity(X_raw)
    labels = _reduced_labels(reduction, labels_raw)
    k = X.shape[1]
    col_of_original = {
        int(m): col
        for col in range(reduction.map.shape[1])
        for m in np.flatnonzero(reduction.map[:, col])
    }
    entity_index = {
        e: col_of_original[i]
        for i, e in enumerate(entities)
        if i in col_of_original
    }

    utilities = np.array([r.utility for r in records])
    state = init_ridge(k)
    info_exact = np.zeros((k, k))
    full_rank_time: int | None = None
    paths = np.zeros((len(records), k))
    surprises = np.zeros(len(records))
    kappas = np.zeros(len(records))
    lmins = np.zeros(len(records))
    for t, rec in enumerate(records, start=1):
        x = X[t - 1]
        info_exact += np.outer(x, x)
        eig = np.linalg.eigvalsh(info_exact)
        lmins[t - 1] = float(eig[0])
        rank_ok = eig[0] > RANK_RTOL * max(eig[-1], 1.0)
        kappas[t - 1] = float(eig[-1] / eig[0]) if rank_ok else np.inf
        surprises[t - 1] = float(utilities[t - 1]) - float(x @ state.estimate)
        if full_rank_time is None and rank_ok:
            full_rank_time = t
            state = batch_ols(History(X[:t], utilities[:t]))
        else:
            state = recursive_update(state, x, utilities[t - 1]).new_state
        paths[t - 1] = state.estimate
    identified = np.zeros(len(records), dtype=bool)
    if full_rank_time is not None:
        identified[full_rank_time - 1 :] = True
    identified.setflags(write=False)

    centralities: tuple[tuple[str, float, float], ...] = ()
    if full_rank_time is not None:
        summary = decompose(info_exact)
        order = np.lexsort((np.arange(k), -summary.vN))
        centralities = tuple(
            (labels[int(i)], float(summary.vN[i]), float(summary.vC[i]))
            for i in order
        )
    report = ReplayReport(
        entity_index=entity_index,
        column_labels=labels,
        full_rank_time=full_rank_time,
        times=tuple(r.timestamp_order for r in records),
        coefficient_paths=_readonly(paths),
        identified=identified,
        surprises=_readonly(surprises),
        kappa_path=_readonly(kappas),
        lambda_min_path=_readonly(lmins),
        centralities=centralities,
        reductions=reduction,
        final_state=state,
    )
    if full_rank_time is None:
        raise NeverFullRank(
            "corpus ended before the design reached full rank", report
        )
    return report


def _as_table(obj: Union[Trajectory, ReplayReport, TrajectoryTable]) -> TrajectoryTable:
    if isinstance(obj, TrajectoryTable):
        return obj
    if isinstance(obj, Trajectory):
        steps = len(obj)
        n = obj.estimates.shape[1] if steps else obj.scenario.beta_true.size
        columns = ("t", "surprise", "mse", "kappa", "lambda_min") + tuple(
            f"beta_{i}" for i in range(n)
        )
        rows = np.column_stack(
            [
                np.arange(1, steps + 1, dtype=float),
                obj.surprises,
                obj.mse,
                obj.kappa,
                obj.lambda_min,
                obj.estimates,
            ]
        ) if steps else np.zeros((0, len(columns)))
        return TrajectoryTable(columns, rows)
    if isinstance(obj, ReplayReport):
        steps = len(obj.times)
        columns = ("t", "surprise", "mse", "kappa", "lambda_min") + tuple(
            f"beta_{label}" for label in obj.column_labels
        )
        rows = np.column_stack(
            [
                np.asarray(obj.times, dtype=float),
                obj.surprises,
                np.full(steps, np.nan),
                obj.kappa_path,
                obj.lambda_min_path,
                obj.coefficient_paths,
            ]
        ) if steps else np.zeros((0, len(columns)))
        return TrajectoryTable(columns, rows)
    raise TypeError(f"cannot export {type(obj).__name__}")


def export_trajectory(traj_or_report, sink: IO[str], format: str = "csv") -> None:
    """Write the step table as CSV or a schema-versioned JSON document.

    Floats are written with repr so finite values round-trip bit-exactly
    through ``import_trajectory``.
    """
    table = _as_table(traj_or_report)
    fmt = format.lower()
    try:
        if fmt == "csv":
            writer = csv.writer(sink, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([repr(float(v)) for v in row])
        elif fmt == "json":
            doc = {
                "schema_version": SCHEMA_VERSION,
                "columns": list(table.columns),
                "rows": [[float(v) for v in row] for row in table.rows],
            }
            json.dump(doc, sink, separators=(",", ":"))
            sink.write("\n")
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise SinkWriteFailure(str(exc)) from exc


def import_trajectory(source: IO[str], format: str = "csv") -> TrajectoryTable:
    """Read a table previously written by export_trajectory."""
    fmt = format.lower()
    if fmt == "csv":
        reader = csv.reader(source)
        try:
            columns = tuple(next(reader))
        except StopIteration:
            raise ParseError(1, 1, "missing header row") from None
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise ParseError(line_no, 1, "row width mismatch")
            parsed = []
            for col, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        line_no, col, f"bad number {cell!r}"
                    ) from None
            rows.append(parsed)
        data = np.array(rows) if rows else np.zeros((0, len(columns)))
        return TrajectoryTable(columns, data)
    if fmt == "json":
        doc = json.load(source)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ParseError(1, 1, "unsupported schema_version")
        columns = tuple(doc["columns"])
        rows = np.array(doc["rows"], dtype=float)
        if rows.size == 0:
            rows = np.zeros((0, len(columns)))
        return TrajectoryTable(columns, rows)
    raise ValueError(f"unknown format {format!r}")
