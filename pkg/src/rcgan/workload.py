"""Range-count query workloads, the exact counting oracle, and Q-Error.

Queries are conjunctions of inclusive per-column intervals over numeric
attributes. Workload generation is a pure function of (schema, n, seed,
params) so files regenerate byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NUMERIC, Schema, Table
from .errors import DataError, QueryError

DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class RangeQuery:
    """Conjunction of (column index, lo, hi) interval predicates, native units."""

    qid: int
    predicates: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        if not self.predicates:
            raise QueryError(f"query {self.qid}: needs at least one predicate")
        seen = set()
        for col, lo, hi in self.predicates:
            if lo > hi:
                raise QueryError(f"query {self.qid}: lo {lo} > hi {hi} on column {col}")
            if col in seen:
                raise QueryError(f"query {self.qid}: duplicate predicate on column {col}")
            seen.add(col)


@dataclass(frozen=True)
class WorkloadParams:
    """Half-widths are uniform fractions of the column domain span."""

    min_width_frac: float = 0.005
    max_width_frac: float = 0.25

    def __post_init__(self):
        if not (0 <= self.min_width_frac <= self.max_width_frac):
            raise QueryError("need 0 <= min_width_frac <= max_width_frac")


@dataclass
class Workload:
    queries: list[RangeQuery]
    seed: int
    params: WorkloadParams

    def __len__(self) -> int:
        return len(self.queries)


def generate_workload(
    schema: Schema, n: int, seed: int, params: WorkloadParams = WorkloadParams()
) -> Workload:
    """Draw n random range queries over the schema's numeric columns.

    Per query: the number of predicated attributes is uniform over
    1..#numeric, attributes are drawn without replacement, each range is
    centered uniformly in the column domain with a half-width that is a
    uniform fraction of the domain span, then clipped to the domain.
    """
    numeric = schema.numeric_indices
    if not numeric:
        raise QueryError("schema has no numeric columns; cannot generate range queries")
    if n < 1:
        raise QueryError("need n >= 1 queries")
    rng = np.random.default_rng(seed)
    queries = []
    for qid in range(n):
        k = int(rng.integers(1, len(numeric) + 1))
        chosen = sorted(rng.choice(len(numeric), size=k, replace=False).tolist())
        preds = []
        for pos in chosen:
            col = schema.columns[numeric[pos]]
            center = float(rng.uniform(col.domain_min, col.domain_max))
            frac = float(rng.uniform(params.min_width_frac, params.max_width_frac))
            half = frac * col.span
            lo = max(col.domain_min, center - half)
            hi = min(col.domain_max, center + half)
            preds.append((numeric[pos], lo, hi))
        queries.append(RangeQuery(qid, tuple(preds)))
    return Workload(queries, seed, params)


def query_mask(q: RangeQuery, t: Table) -> np.ndarray:
    """Boolean row mask for the query, inclusive on both ends."""
    mask = np.ones(t.n_rows, dtype=bool)
    mat = t.numeric_matrix()
    for col, lo, hi in q.predicates:
        if t.schema.columns[col].kind != NUMERIC:
            raise QueryError(
                f"query {q.qid}: column {t.schema.columns[col].name!r} is not numeric"
            )
        vals = mat[:, t.numeric_position(col)]
        mask &= (vals >= lo) & (vals <= hi)
    return mask


def exact_count(q: RangeQuery, t: Table) -> int:
    """Exact number of rows satisfying every predicate."""
    return int(query_mask(q, t).sum())


def selectivity(q: RangeQuery, t: Table) -> float:
    if t.n_rows == 0:
        raise QueryError("selectivity is undefined on an empty table")
    return exact_count(q, t) / t.n_rows


def qerror(sel_true: float, sel_gen: float, eps: float = DEFAULT_EPS) -> float:
    """max(1, ratio, inverse ratio) with eps smoothing so zeros stay finite."""
    if eps <= 0:
        raise QueryError("eps must be positive")
    a = (sel_true + eps) / (sel_gen + eps)
    b = (sel_gen + eps) / (sel_true + eps)
    return max(1.0, a, b)


def true_selectivities(workload: Workload, t: Table) -> np.ndarray:
    return np.array([selectivity(q, t) for q in workload.queries])


WORKLOAD_FORMAT = "rcgan-workload-v1"


def write_workload(
    workload: Workload, schema: Schema, path, meta: dict | None = None
) -> None:
    """One query per line: id then tab-separated (column, lo, hi) triples."""
    with open(path, "w") as fh:
        fh.write(f"# format={WORKLOAD_FORMAT}\n")
        fh.write(f"# seed={workload.seed}\n")
        fh.write(f"# n={len(workload)}\n")
        fh.write(f"# min_width_frac={workload.params.min_width_frac!r}\n")
        fh.write(f"# max_width_frac={workload.params.max_width_frac!r}\n")
        fh.write(f"# schema={schema.digest()}\n")
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        for q in workload.queries:
            parts = [str(q.qid)]
            for col, lo, hi in q.predicates:
                name = schema.columns[col].name
                if "\t" in name:
                    raise DataError(f"column name {name!r} cannot contain tabs")
                parts += [name, repr(float(lo)), repr(float(hi))]
            fh.write("\t".join(parts) + "\n")


def read_workload(path, schema: Schema) -> Workload:
    meta: dict[str, str] = {}
    queries = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                text = line.lstrip("#").strip()
                if "=" in text:
                    k, v = text.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            parts = line.split("\t")
            if len(parts) < 4 or (len(parts) - 1) % 3 != 0:
                raise DataError(f"{path}: malformed workload line: {line!r}")
            qid = int(parts[0])
            preds = []
            for i in range(1, len(parts), 3):
                name, lo, hi = parts[i], float(parts[i + 1]), float(parts[i + 2])
                preds.append((schema.column_index(name), lo, hi))
            queries.append(RangeQuery(qid, tuple(preds)))
    if meta.get("format") != WORKLOAD_FORMAT:
        raise DataError(f"{path}: expected format {WORKLOAD_FORMAT!r}, got {meta.get('format')!r}")
    if "schema" in meta and meta["schema"] != schema.digest():
        raise DataError(f"{path}: workload was generated for a different schema")
    params = WorkloadParams(
        float(meta.get("min_width_frac", WorkloadParams.min_width_frac)),
        float(meta.get("max_width_frac", WorkloadParams.max_width_frac)),
    )
    return Workload(queries, int(meta.get("seed", -1)), params)
