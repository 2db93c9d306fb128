"""Deterministic synthetic datasets used by tests, scripts, and demos.

make_census_like produces a stand-in for the public CensusIncome table with
the same shape (8 categorical plus 6 numeric attributes) and comparable
structure: skewed marginals, zero-inflated capital columns, and an income
label that actually depends on the other attributes.
"""

from __future__ import annotations

import numpy as np

from .data import CATEGORICAL, NUMERIC, ColumnSpec, Schema, Table


def two_cluster_table(n_rows: int, seed: int) -> Table:
    """Two Gaussian clusters over two numeric columns."""
    rng = np.random.default_rng(seed)
    half = n_rows // 2
    a = rng.normal([2.0, 3.0], [0.6, 0.5], size=(half, 2))
    b = rng.normal([7.0, 8.0], [0.8, 0.7], size=(n_rows - half, 2))
    pts = np.clip(np.vstack([a, b]), 0.0, 10.0)
    rng.shuffle(pts)
    schema = Schema(
        (
            ColumnSpec("x", NUMERIC, domain_min=0.0, domain_max=10.0),
            ColumnSpec("y", NUMERIC, domain_min=0.0, domain_max=10.0),
        )
    )
    return Table(schema, [tuple(map(float, row)) for row in pts])


_WORKCLASSES = ("Private", "Self-emp", "Self-emp-inc", "Federal-gov", "Local-gov", "State-gov", "Unpaid")
_EDUCATIONS = (
    "HS-grad", "Some-college", "Bachelors", "Masters", "Assoc-voc", "11th",
    "Assoc-acdm", "10th", "7th-8th", "Prof-school", "9th", "12th", "Doctorate",
    "5th-6th", "1st-4th", "Preschool",
)
_MARITALS = ("Married", "Never-married", "Divorced", "Separated", "Widowed", "Spouse-absent")
_OCCUPATIONS = (
    "Prof-specialty", "Craft-repair", "Exec-managerial", "Adm-clerical", "Sales",
    "Other-service", "Machine-op-inspct", "Transport-moving", "Handlers-cleaners",
    "Farming-fishing", "Tech-support", "Protective-serv", "Priv-house-serv", "Armed-Forces",
)
_RELATIONSHIPS = ("Husband", "Not-in-family", "Own-child", "Unmarried", "Wife", "Other-relative")
_RACES = ("White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other")
_SEXES = ("Male", "Female")
_INCOMES = ("<=50K", ">50K")

# Rough education -> years-of-education anchors.
_EDU_YEARS = {
    "Preschool": 1, "1st-4th": 2, "5th-6th": 3, "7th-8th": 4, "9th": 5, "10th": 6,
    "11th": 7, "12th": 8, "HS-grad": 9, "Some-college": 10, "Assoc-voc": 11,
    "Assoc-acdm": 12, "Bachelors": 13, "Masters": 14, "Prof-school": 15, "Doctorate": 16,
}

_EDU_WEIGHTS = np.array([32, 22, 16, 5.5, 4, 3.5, 3, 2.5, 2, 1.7, 1.5, 1.3, 1.2, 1, 0.5, 0.3])
_WORK_WEIGHTS = np.array([70, 8, 3, 3, 6, 5, 5])
_OCC_WEIGHTS = np.array([13, 13, 13, 12, 11, 10, 6, 5, 4, 3, 3, 2, 0.5, 0.1])
_RACE_WEIGHTS = np.array([85, 9, 3, 1, 2])


def census_like_schema() -> Schema:
    return Schema(
        (
            ColumnSpec("age", NUMERIC, domain_min=17.0, domain_max=90.0),
            ColumnSpec("workclass", CATEGORICAL, categories=_WORKCLASSES),
            ColumnSpec("fnlwgt", NUMERIC, domain_min=12000.0, domain_max=1500000.0),
            ColumnSpec("education", CATEGORICAL, categories=_EDUCATIONS),
            ColumnSpec("education-num", NUMERIC, domain_min=1.0, domain_max=16.0),
            ColumnSpec("marital-status", CATEGORICAL, categories=_MARITALS),
            ColumnSpec("occupation", CATEGORICAL, categories=_OCCUPATIONS),
            ColumnSpec("relationship", CATEGORICAL, categories=_RELATIONSHIPS),
            ColumnSpec("race", CATEGORICAL, categories=_RACES),
            ColumnSpec("sex", CATEGORICAL, categories=_SEXES),
            ColumnSpec("capital-gain", NUMERIC, domain_min=0.0, domain_max=99999.0),
            ColumnSpec("capital-loss", NUMERIC, domain_min=0.0, domain_max=4356.0),
            ColumnSpec("hours-per-week", NUMERIC, domain_min=1.0, domain_max=99.0),
            ColumnSpec("income", CATEGORICAL, categories=_INCOMES),
        )
    )


def make_census_like(n_rows: int, seed: int) -> Table:
    """8 categorical + 6 numeric columns with census-like dependence."""
    rng = np.random.default_rng(seed)
    schema = census_like_schema()

    age = np.clip(rng.normal(38.6, 13.5, n_rows), 17, 90)
    edu_idx = rng.choice(len(_EDUCATIONS), n_rows, p=_EDU_WEIGHTS / _EDU_WEIGHTS.sum())
    education = [_EDUCATIONS[i] for i in edu_idx]
    edu_num = np.array([_EDU_YEARS[e] for e in education], dtype=float)
    edu_num = np.clip(edu_num + rng.integers(-1, 2, n_rows), 1, 16).astype(float)

    workclass = [_WORKCLASSES[i] for i in rng.choice(len(_WORKCLASSES), n_rows, p=_WORK_WEIGHTS / _WORK_WEIGHTS.sum())]
    occ_idx = rng.choice(len(_OCCUPATIONS), n_rows, p=_OCC_WEIGHTS / _OCC_WEIGHTS.sum())
    # Professionals skew toward more schooling.
    occ_idx = np.where((edu_num >= 13) & (rng.random(n_rows) < 0.5), 0, occ_idx)
    occupation = [_OCCUPATIONS[i] for i in occ_idx]

    married_p = np.clip((age - 18.0) / 40.0, 0.05, 0.75)
    marital_draw = rng.random(n_rows)
    marital = np.where(
        marital_draw < married_p,
        "Married",
        np.where(marital_draw < married_p + 0.18, "Never-married", "Divorced"),
    )
    marital = np.where((age < 22) & (marital == "Divorced"), "Never-married", marital)
    extra = rng.random(n_rows)
    marital = np.where(extra < 0.03, "Widowed", marital)
    marital = np.where((extra >= 0.03) & (extra < 0.05), "Separated", marital)
    marital = np.where((extra >= 0.05) & (extra < 0.06), "Spouse-absent", marital)

    sex = np.where(rng.random(n_rows) < 0.667, "Male", "Female")
    relationship = np.where(
        marital == "Married",
        np.where(sex == "Male", "Husband", "Wife"),
        np.where(age < 25, "Own-child", np.where(rng.random(n_rows) < 0.6, "Not-in-family", "Unmarried")),
    )
    relationship = np.where(rng.random(n_rows) < 0.03, "Other-relative", relationship)
    race = [_RACES[i] for i in rng.choice(len(_RACES), n_rows, p=_RACE_WEIGHTS / _RACE_WEIGHTS.sum())]

    fnlwgt = np.clip(rng.lognormal(12.05, 0.48, n_rows), 12000, 1500000)
    hours = np.where(
        rng.random(n_rows) < 0.45,
        40.0,
        np.clip(rng.normal(40.5, 12.0, n_rows), 1, 99),
    )

    gain_mask = rng.random(n_rows) < 0.082
    capital_gain = np.where(gain_mask, np.clip(rng.lognormal(8.6, 1.1, n_rows), 0, 99999), 0.0)
    loss_mask = rng.random(n_rows) < 0.047
    capital_loss = np.where(loss_mask, np.clip(rng.normal(1880, 380, n_rows), 0, 4356), 0.0)

    # Income depends on schooling, age, hours, capital gains, marriage, sex.
    logit = (
        -9.1
        + 0.38 * edu_num
        + 0.045 * age
        + 0.035 * hours
        + 1.8 * (capital_gain > 5000)
        + 1.1 * (marital == "Married")
        + 0.35 * (sex == "Male")
        - 0.00004 * np.abs(fnlwgt - 190000) / 1000.0
    )
    income_p = 1.0 / (1.0 + np.exp(-logit))
    income = np.where(rng.random(n_rows) < income_p, ">50K", "<=50K")

    rows = []
    for i in range(n_rows):
        rows.append(
            (
                float(age[i]),
                workclass[i],
                float(fnlwgt[i]),
                education[i],
                float(edu_num[i]),
                str(marital[i]),
                occupation[i],
                str(relationship[i]),
                race[i],
                str(sex[i]),
                float(capital_gain[i]),
                float(capital_loss[i]),
                float(hours[i]),
                str(income[i]),
            )
        )
    return Table(schema, rows)
