"""Tables, schemas, and the encoding between records and unit-interval vectors.

Categorical columns become one-hot blocks, numeric columns become a single
min-max normalized scalar, so an encoded row lives in [0, 1]^width and can be
consumed directly by sigmoid/softmax network heads.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

CATEGORICAL = "categorical"
NUMERIC = "numeric"

SCHEMA_FORMAT = "rcgan-schema-v1"


@dataclass(frozen=True)
class ColumnSpec:
    """One column: either categorical with an ordered label set, or numeric
    with an inclusive [domain_min, domain_max] range in native units."""

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    domain_min: float = 0.0
    domain_max: float = 0.0

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if len(self.categories) < 1:
                raise DataError(f"column {self.name!r}: needs at least one category")
            if len(set(self.categories)) != len(self.categories):
                raise DataError(f"column {self.name!r}: duplicate categories")
        else:
            if not (self.domain_min <= self.domain_max):
                raise DataError(
                    f"column {self.name!r}: domain_min {self.domain_min} "
                    f"> domain_max {self.domain_max}"
                )

    @property
    def width(self) -> int:
        return len(self.categories) if self.kind == CATEGORICAL else 1

    @property
    def span(self) -> float:
        return self.domain_max - self.domain_min


@dataclass(frozen=True)
class Schema:
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names in schema")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def encoded_width(self) -> int:
        return sum(c.width for c in self.columns)

    @property
    def numeric_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if c.kind == NUMERIC]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DataError(f"no column named {name!r}")

    def block_start(self, col_index: int) -> int:
        """Offset of a column's block inside an encoded row."""
        return sum(c.width for c in self.columns[:col_index])

    def blocks(self) -> list[tuple[int, int, str]]:
        """(start, stop, kind) per column, in schema order."""
        out = []
        pos = 0
        for c in self.columns:
            out.append((pos, pos + c.width, c.kind))
            pos += c.width
        return out

    def digest(self) -> str:
        """Stable hash of the schema content, used to bind artifacts to it."""
        payload = json.dumps(_schema_to_obj(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class Table:
    """Schema plus row storage. Treat as immutable once constructed; the
    numeric matrix used by query evaluation is cached on first access."""

    schema: Schema
    rows: list[tuple]
    _numeric: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def numeric_matrix(self) -> np.ndarray:
        """n_rows x n_numeric float array, columns in schema numeric order."""
        if self._numeric is None:
            idx = self.schema.numeric_indices
            if self.n_rows == 0:
                self._numeric = np.zeros((0, len(idx)))
            else:
                self._numeric = np.array(
                    [[row[i] for i in idx] for row in self.rows], dtype=float
                )
        return self._numeric

    def numeric_position(self, col_index: int) -> int:
        """Position of a schema column inside numeric_matrix columns."""
        idx = self.schema.numeric_indices
        try:
            return idx.index(col_index)
        except ValueError:
            raise DataError(
                f"column {self.schema.columns[col_index].name!r} is not numeric"
            ) from None


def _parse_real(text: str) -> float | None:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def infer_schema(
    rows: list[list[str]],
    names: list[str] | None = None,
    numeric_hints: set[str] | None = None,
) -> Schema:
    """Infer a schema from raw text records.

    A column is numeric iff every value parses as a finite real, or its name
    is in numeric_hints. Categories keep first-appearance order; numeric
    domains are the observed min/max.
    """
    if not rows:
        raise DataError("cannot infer a schema from empty input")
    width = len(rows[0])
    if width == 0:
        raise DataError("cannot infer a schema from zero-width rows")
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"ragged input: row {r} has {len(row)} values, expected {width}")
    if names is None:
        names = [f"col{i}" for i in range(width)]
    elif len(names) != width:
        raise DataError(f"{len(names)} names for {width} columns")
    hints = numeric_hints or set()

    columns = []
    for j, name in enumerate(names):
        raw = [str(row[j]) for row in rows]
        parsed = [_parse_real(v) for v in raw]
        numeric = name in hints or all(p is not None for p in parsed)
        if numeric:
            vals = []
            for r, p in enumerate(parsed):
                if p is None:
                    raise DataError(
                        f"column {name!r} hinted numeric but row {r} "
                        f"value {raw[r]!r} does not parse"
                    )
                vals.append(p)
            columns.append(
                ColumnSpec(name, NUMERIC, domain_min=min(vals), domain_max=max(vals))
            )
        else:
            seen: dict[str, None] = {}
            for v in raw:
                if v == "":
                    raise DataError(f"column {name!r} has an empty value; pre-clean the data")
                seen.setdefault(v)
            columns.append(ColumnSpec(name, CATEGORICAL, categories=tuple(seen)))
    return Schema(tuple(columns))


def _convert_row(row: list[str], schema: Schema, r: int) -> tuple:
    out = []
    for j, col in enumerate(schema.columns):
        v = row[j]
        if col.kind == CATEGORICAL:
            if v not in col.categories:
                raise DataError(
                    f"row {r}, column {col.name!r}: label {v!r} not in schema categories"
                )
            out.append(v)
        else:
            p = _parse_real(v)
            if p is None:
                raise DataError(f"row {r}, column {col.name!r}: {v!r} is not numeric")
            # Schema may come from a subsample; clamp instead of rejecting.
            out.append(min(max(p, col.domain_min), col.domain_max))
    return tuple(out)


def rows_to_table(raw_rows: list[list[str]], schema: Schema) -> Table:
    converted = [_convert_row(row, schema, r) for r, row in enumerate(raw_rows)]
    return Table(schema, converted)


def read_csv(path) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Raw CSV read: (header, rows, metadata from leading '#' comment lines)."""
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            if header is None and record[0].startswith("#"):
                text = ",".join(record).lstrip("#").strip()
                if "=" in text:
                    k, v = text.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = [c.strip() for c in record]
            if header is None:
                header = cells
            else:
                rows.append(cells)
    if header is None:
        raise DataError(f"{path}: no header row")
    for r, row in enumerate(rows):
        for v in row:
            if v == "":
                raise DataError(f"{path}: row {r} has an empty value; pre-clean the data")
    return header, rows, meta


def load_table(path, schema: Schema) -> Table:
    """Load a CSV whose header matches the schema column names, in order."""
    header, rows, _ = read_csv(path)
    if header != schema.names:
        raise DataError(
            f"{path}: header {header!r} does not match schema columns {schema.names!r}"
        )
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: ragged row {r} ({len(row)} of {len(header)} values)")
    return rows_to_table(rows, schema)


def write_table(table: Table, path, meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(table.schema.names)
        for row in table.rows:
            writer.writerow(
                [v if isinstance(v, str) else repr(float(v)) for v in row]
            )


def encode(table: Table) -> np.ndarray:
    """Encode rows into the unit hypercube: one-hot blocks and min-max scalars.

    A degenerate numeric column (min == max) encodes to the constant 0.5.
    """
    schema = table.schema
    out = np.zeros((table.n_rows, schema.encoded_width))
    for j, ((start, stop, kind), col) in enumerate(zip(schema.blocks(), schema.columns)):
        if kind == CATEGORICAL:
            lookup = {c: k for k, c in enumerate(col.categories)}
            for r, row in enumerate(table.rows):
                out[r, start + lookup[row[j]]] = 1.0
        else:
            vals = np.array([row[j] for row in table.rows], dtype=float)
            if col.span == 0:
                out[:, start] = 0.5
            else:
                out[:, start] = (vals - col.domain_min) / col.span
    return out


def decode(matrix: np.ndarray, schema: Schema) -> Table:
    """Decode any real matrix of the right width; never rejects values.

    Categorical blocks decode by argmax (ties resolve to the lowest category
    index), numeric entries are clamped to [0, 1] and denormalized.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != schema.encoded_width:
        raise DataError(
            f"matrix width {matrix.shape[-1] if matrix.ndim else '?'} "
            f"does not match encoded width {schema.encoded_width}"
        )
    n = matrix.shape[0]
    cols: list[list] = []
    for (start, stop, kind), col in zip(schema.blocks(), schema.columns):
        block = matrix[:, start:stop]
        if kind == CATEGORICAL:
            picks = np.argmax(block, axis=1)
            cols.append([col.categories[k] for k in picks])
        else:
            u = np.clip(block[:, 0], 0.0, 1.0)
            cols.append([float(v) for v in col.domain_min + u * col.span])
    rows = [tuple(cols[j][r] for j in range(len(schema.columns))) for r in range(n)]
    return Table(schema, rows)


def _schema_to_obj(schema: Schema) -> dict:
    cols = []
    for c in schema.columns:
        if c.kind == CATEGORICAL:
            cols.append({"name": c.name, "kind": c.kind, "categories": list(c.categories)})
        else:
            cols.append(
                {"name": c.name, "kind": c.kind, "min": c.domain_min, "max": c.domain_max}
            )
    return {"format": SCHEMA_FORMAT, "columns": cols}


def _schema_from_obj(obj: dict, source: str = "schema") -> Schema:
    if obj.get("format") != SCHEMA_FORMAT:
        raise DataError(f"{source}: expected format {SCHEMA_FORMAT!r}, got {obj.get('format')!r}")
    columns = []
    for c in obj["columns"]:
        if c["kind"] == CATEGORICAL:
            columns.append(ColumnSpec(c["name"], CATEGORICAL, categories=tuple(c["categories"])))
        else:
            columns.append(
                ColumnSpec(c["name"], NUMERIC, domain_min=float(c["min"]), domain_max=float(c["max"]))
            )
    return Schema(tuple(columns))


def schema_to_json(schema: Schema) -> str:
    return json.dumps(_schema_to_obj(schema), indent=2)


def schema_from_json(text: str, source: str = "schema") -> Schema:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{source}: not valid JSON ({exc})") from exc
    return _schema_from_obj(obj, source)


def write_schema(schema: Schema, path) -> None:
    with open(path, "w") as fh:
        fh.write(schema_to_json(schema))
        fh.write("\n")


def read_schema(path) -> Schema:
    with open(path) as fh:
        return schema_from_json(fh.read(), source=str(path))
