"""Evaluation protocols: Q-Error percentile reports and classifier fidelity.

Percentiles are nearest-rank throughout: the value at 1-based position
ceil(p * n) of the ascending list, so reports reproduce bit for bit across
implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import classifier
from .data import CATEGORICAL, Schema, Table, encode
from .errors import DataError, ExperimentError
from .workload import DEFAULT_EPS, Workload, qerror, selectivity


def nearest_rank(sorted_values: list[float], p: float) -> float:
    if not sorted_values:
        raise DataError("percentile of an empty list")
    rank = max(1, math.ceil(p * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass
class QErrorReport:
    workload_id: str
    qerrors: list[float]
    median: float
    p75: float
    p90: float

    def lines(self) -> list[str]:
        return [
            f"workload: {self.workload_id}",
            f"queries: {len(self.qerrors)}",
            f"median: {self.median:.4f}",
            f"p75: {self.p75:.4f}",
            f"p90: {self.p90:.4f}",
        ]


def qerror_report(
    real: Table, generated: Table, workload: Workload, eps: float = DEFAULT_EPS
) -> QErrorReport:
    """Per-query q-error between true and generated selectivities."""
    if real.schema != generated.schema:
        raise DataError("real and generated tables use different schemas")
    if real.n_rows == 0 or generated.n_rows == 0:
        raise DataError("q-error report needs non-empty tables")
    qes = [
        qerror(selectivity(q, real), selectivity(q, generated), eps)
        for q in workload.queries
    ]
    ordered = sorted(qes)
    return QErrorReport(
        workload_id=f"seed={workload.seed},n={len(workload)}",
        qerrors=qes,
        median=nearest_rank(ordered, 0.50),
        p75=nearest_rank(ordered, 0.75),
        p90=nearest_rank(ordered, 0.90),
    )


@dataclass(frozen=True)
class LabelRule:
    """Turns a target column into a binary label.

    kind "numeric_threshold": positive iff value > threshold.
    kind "label_match": positive iff the categorical label is in positives.
    """

    kind: str
    threshold: float = 0.0
    positives: tuple[str, ...] = ()

    def apply(self, table: Table, col_index: int) -> np.ndarray:
        col = table.schema.columns[col_index]
        if self.kind == "numeric_threshold":
            if col.kind == CATEGORICAL:
                raise ExperimentError(f"threshold rule on categorical column {col.name!r}")
            return np.array([row[col_index] > self.threshold for row in table.rows], dtype=float)
        if self.kind == "label_match":
            if col.kind != CATEGORICAL:
                raise ExperimentError(f"label-match rule on numeric column {col.name!r}")
            pos = set(self.positives)
            return np.array([row[col_index] in pos for row in table.rows], dtype=float)
        raise ExperimentError(f"unknown label rule kind {self.kind!r}")


@dataclass(frozen=True)
class SplitConfig:
    test_rows: int = 1000
    real_frac_a: float = 0.15
    real_frac_b: float = 0.05
    gen_frac_b: float = 0.10


@dataclass
class SettingResult:
    training_data: str
    precision: float
    recall: float
    f1: float


@dataclass
class FidelityReport:
    settings: list[SettingResult]

    def lines(self) -> list[str]:
        out = []
        for s in self.settings:
            out += [
                f"setting: {s.training_data}",
                f"  precision: {s.precision:.4f}",
                f"  recall: {s.recall:.4f}",
                f"  f1: {s.f1:.4f}",
            ]
        return out


def _feature_schema(schema: Schema, target: int) -> Schema:
    return Schema(tuple(c for i, c in enumerate(schema.columns) if i != target))


def _features(table: Table, target: int, feature_schema: Schema) -> np.ndarray:
    rows = [tuple(v for i, v in enumerate(row) if i != target) for row in table.rows]
    return encode(Table(feature_schema, rows))


def fidelity_experiment(
    real: Table,
    generated: Table,
    target: str,
    rule: LabelRule,
    seed: int,
    split: SplitConfig = SplitConfig(),
    boost: classifier.BoostConfig = classifier.BoostConfig(),
) -> FidelityReport:
    """Compare classifiers trained on real data versus a real/generated mix.

    Setting A trains on real_frac_a of the real table; setting B on
    real_frac_b real plus gen_frac_b generated rows. Both are scored on the
    same held-out test rows, drawn first and excluded from every pool.
    """
    if real.schema != generated.schema:
        raise DataError("real and generated tables use different schemas")
    target_idx = real.schema.column_index(target)
    n = real.n_rows
    if n < split.test_rows + 2:
        raise ExperimentError(f"need more than {split.test_rows} real rows")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    test_idx = order[: split.test_rows]
    pool = order[split.test_rows :]

    n_a = int(split.real_frac_a * n)
    n_b_real = int(split.real_frac_b * n)
    n_b_gen = int(split.gen_frac_b * n)
    if n_a > pool.size or n_b_real > pool.size:
        raise ExperimentError("training fractions exceed available real rows")
    if n_b_gen > generated.n_rows:
        raise ExperimentError("generated table too small for the requested fraction")

    a_idx = pool[:n_a]
    b_idx = pool[:n_b_real]
    gen_idx = rng.permutation(generated.n_rows)[:n_b_gen]

    feat_schema = _feature_schema(real.schema, target_idx)
    x_real = _features(real, target_idx, feat_schema)
    y_real = rule.apply(real, target_idx)
    x_gen = _features(generated, target_idx, feat_schema)
    y_gen = rule.apply(generated, target_idx)

    y_test = y_real[test_idx]
    if len(np.unique(y_test)) < 2:
        raise ExperimentError("label rule yields a single class on the test split")

    def run(x_train, y_train, desc) -> SettingResult:
        if len(np.unique(y_train)) < 2:
            raise ExperimentError(f"single-class training split for {desc}")
        model = classifier.fit(x_train, y_train, boost)
        m = classifier.metrics(classifier.predict(model, x_real[test_idx]), y_test)
        return SettingResult(desc, m.precision, m.recall, m.f1)

    pct = lambda f: f"{100 * f:g}%"
    setting_a = run(x_real[a_idx], y_real[a_idx], f"{pct(split.real_frac_a)} real")
    setting_b = run(
        np.vstack([x_real[b_idx], x_gen[gen_idx]]),
        np.concatenate([y_real[b_idx], y_gen[gen_idx]]),
        f"{pct(split.real_frac_b)} real + {pct(split.gen_frac_b)} generated",
    )
    return FidelityReport([setting_b, setting_a])
