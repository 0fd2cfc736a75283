"""Schema inference, vocabularies, row encoding, and the column-mismatch
distance shared by every evaluation metric.

Rows are human-readable tuples (text for categorical columns, reals for
numeric ones).  Numeric columns are discretized into bins so that every
column becomes a finite alphabet of integer ids; generation and metrics
all operate on those ids.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ColumnSchema",
    "Vocabulary",
    "Dataset",
    "TabularError",
    "infer_schema",
    "encode_row",
    "decode_row",
    "mismatch_distance",
    "read_csv",
    "build_dataset",
]


class TabularError(ValueError):
    """Raised for malformed tables, unknown values, or bad encodings."""


@dataclass(frozen=True)
class ColumnSchema:
    """One column: its name, kind, and (for numerics) the bin geometry."""

    name: str
    kind: str  # "categorical" | "numeric"
    bin_edges: tuple = ()
    bin_representatives: tuple = ()

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric"):
            raise TabularError(f"unknown column kind {self.kind!r}")
        if self.kind == "categorical":
            if self.bin_edges:
                raise TabularError("categorical columns must have no bin edges")
            return
        edges = self.bin_edges
        if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
            raise TabularError(f"bin edges of {self.name!r} must be strictly ascending")
        if len(self.bin_representatives) != len(edges) - 1:
            raise TabularError(f"{self.name!r}: need one representative per bin")
        for i, r in enumerate(self.bin_representatives):
            if not (edges[i] <= r <= edges[i + 1]):
                raise TabularError(f"{self.name!r}: representative {r} outside bin {i}")


@dataclass(frozen=True)
class Vocabulary:
    """Per-column bijection between value text and dense integer ids.

    Numeric columns use their bin index as the id; ``values[c]`` then holds
    the rendered bin representatives.
    """

    values: tuple  # per column: tuple of value strings, index = id
    index: tuple = field(repr=False, default=())  # per column: dict value -> id

    @staticmethod
    def from_columns(columns: list[list[str]]) -> "Vocabulary":
        values = tuple(tuple(col) for col in columns)
        index = tuple({v: i for i, v in enumerate(col)} for col in values)
        return Vocabulary(values=values, index=index)

    def cardinality(self, c: int) -> int:
        return len(self.values[c])

    @property
    def cardinalities(self) -> tuple:
        return tuple(len(v) for v in self.values)


@dataclass(frozen=True)
class Dataset:
    """An encoded table plus its labels and class count."""

    schema: tuple  # feature ColumnSchema per column
    vocab: Vocabulary
    rows: tuple  # EncodedRow tuples over feature columns
    labels: tuple  # one class id per row
    label_column: str
    n_classes: int
    class_values: tuple = ()  # label text per class id

    def __post_init__(self):
        if self.n_classes < 2:
            raise TabularError("need at least 2 classes")
        if len(self.rows) != len(self.labels):
            raise TabularError("rows and labels must align")

    @property
    def n_columns(self) -> int:
        return len(self.schema)

    def encoded_matrix(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.intp)


def _parse_numeric(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TabularError(
            f"row {row}, column {column!r}: {text!r} is not numeric"
        ) from None


def _quantile_bins(values: np.ndarray, bin_count: int):
    """Equal-frequency bins: split the sorted values into bin_count chunks
    of near-equal occupancy; edges fall midway between adjacent chunks."""
    ordered = np.sort(values)
    chunks = [c for c in np.array_split(ordered, bin_count) if c.size]
    edges = [float(ordered[0])]
    reps = []
    for prev, nxt in zip(chunks, chunks[1:]):
        edges.append(float((prev[-1] + nxt[0]) / 2.0))
    edges.append(float(ordered[-1]))
    for chunk in chunks:
        reps.append(float(np.median(chunk)))
    # degenerate chunks (heavy duplicates) can produce non-ascending edges
    keep_edges = [edges[0]]
    keep_reps = []
    for i, e in enumerate(edges[1:]):
        if e > keep_edges[-1]:
            keep_edges.append(e)
            keep_reps.append(reps[i])
    if len(keep_edges) < 2:  # all values identical
        v = float(ordered[0])
        keep_edges = [v - 0.5, v + 0.5]
        keep_reps = [v]
    else:
        keep_reps[-1] = reps[-1]
    return keep_edges, keep_reps


def _width_bins(values: np.ndarray, bin_count: int):
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = list(np.linspace(lo, hi, bin_count + 1))
    reps = []
    for i in range(len(edges) - 1):
        inside = values[(values >= edges[i]) & (values <= edges[i + 1])]
        reps.append(float(np.median(inside)) if inside.size else (edges[i] + edges[i + 1]) / 2)
    return edges, reps


def infer_schema(
    raw_table: list,
    header: list,
    numeric_columns,
    bin_count: int = 20,
    binning: str = "quantile",
):
    """Infer per-column schemas and vocabularies from raw text records.

    Numeric columns get ``bin_count`` equal-frequency bins (or equal-width
    with ``binning="width"``) whose representatives are bin medians;
    categorical vocabularies enumerate distinct values in first-seen order.
    """
    if not raw_table:
        raise TabularError("empty table")
    if bin_count < 1:
        raise TabularError("bin_count must be >= 1")
    numeric_columns = set(numeric_columns)
    n_cols = len(header)
    for i, record in enumerate(raw_table):
        if len(record) != n_cols:
            raise TabularError(f"row {i} has {len(record)} fields, expected {n_cols}")
    schema = []
    vocab_cols = []
    for c, name in enumerate(header):
        column = [record[c] for record in raw_table]
        if name in numeric_columns:
            parsed = np.array(
                [_parse_numeric(v, i, name) for i, v in enumerate(column)]
            )
            if binning == "quantile":
                edges, reps = _quantile_bins(parsed, bin_count)
            elif binning == "width":
                edges, reps = _width_bins(parsed, bin_count)
            else:
                raise TabularError(f"unknown binning mode {binning!r}")
            schema.append(
                ColumnSchema(name, "numeric", tuple(edges), tuple(reps))
            )
            vocab_cols.append([repr(r) for r in reps])
        else:
            seen = []
            known = set()
            for v in column:
                if v not in known:
                    known.add(v)
                    seen.append(v)
            schema.append(ColumnSchema(name, "categorical"))
            vocab_cols.append(seen)
    return tuple(schema), Vocabulary.from_columns(vocab_cols)


def _numeric_bin(value: float, edges: tuple) -> int:
    # half-open [e_i, e_{i+1}) bins, last closed on the right;
    # out-of-range values clamp to the nearest bin
    n_bins = len(edges) - 1
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(idx, 0), n_bins - 1)


def encode_row(row, vocab: Vocabulary, schema) -> tuple:
    """Map a human-readable row onto per-column integer ids."""
    if len(row) != len(schema):
        raise TabularError(f"row has {len(row)} values, expected {len(schema)}")
    ids = []
    for c, (value, col) in enumerate(zip(row, schema)):
        if col.kind == "numeric":
            v = value if isinstance(value, (int, float)) else _parse_numeric(value, -1, col.name)
            ids.append(_numeric_bin(float(v), col.bin_edges))
        else:
            try:
                ids.append(vocab.index[c][value])
            except KeyError:
                raise TabularError(
                    f"column {col.name!r}: unknown value {value!r}"
                ) from None
    return tuple(ids)


def decode_row(ids, vocab: Vocabulary, schema) -> tuple:
    """Map integer ids back to a human-readable row."""
    if len(ids) != len(schema):
        raise TabularError(f"encoding has {len(ids)} ids, expected {len(schema)}")
    values = []
    for c, (i, col) in enumerate(zip(ids, schema)):
        if not 0 <= i < vocab.cardinality(c):
            raise TabularError(f"column {col.name!r}: id {i} out of range")
        if col.kind == "numeric":
            values.append(col.bin_representatives[i])
        else:
            values.append(vocab.values[c][i])
    return tuple(values)


def mismatch_distance(a, b) -> float:
    """Fraction of columns whose ids differ; a pseudometric in [0, 1]."""
    if len(a) != len(b):
        raise TabularError("encodings must have equal length")
    if not len(a):
        raise TabularError("empty encodings")
    return sum(x != y for x, y in zip(a, b)) / len(a)


def read_csv(source) -> tuple:
    """Read a CSV (path or text) into (header, records)."""
    if isinstance(source, str) and "\n" not in source:
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(io.StringIO(source)))
    if not rows:
        raise TabularError("empty CSV")
    return rows[0], rows[1:]


def build_dataset(
    header,
    records,
    numeric_columns,
    label_column: str,
    bin_count: int = 20,
    binning: str = "quantile",
) -> Dataset:
    """Infer schemas over the feature columns, encode every record, and
    split off the label column as class ids."""
    if label_column not in header:
        raise TabularError(f"label column {label_column!r} not in header")
    label_idx = list(header).index(label_column)
    feat_header = [h for i, h in enumerate(header) if i != label_idx]
    feat_records = [
        [v for i, v in enumerate(rec) if i != label_idx] for rec in records
    ]
    schema, vocab = infer_schema(feat_records, feat_header, numeric_columns, bin_count, binning)
    rows = tuple(encode_row(rec, vocab, schema) for rec in feat_records)
    label_values = []
    label_index = {}
    labels = []
    for rec in records:
        v = rec[label_idx]
        if v not in label_index:
            label_index[v] = len(label_values)
            label_values.append(v)
        labels.append(label_index[v])
    return Dataset(
        schema=schema,
        vocab=vocab,
        rows=rows,
        labels=tuple(labels),
        label_column=label_column,
        n_classes=len(label_values),
        class_values=tuple(label_values),
    )
