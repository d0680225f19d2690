"""Columnar dataset handling: CSV ingestion, typing, scaling, encodings.

A ``Dataset`` keeps numerical columns as read-only float arrays and
categorical columns as tuples of string tokens. All operations return new
objects; nothing mutates in place.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError, SchemaError

NUMERICAL = "numerical"
CATEGORICAL = "categorical"

# A categorical state is an ordered tuple of (column, token) pairs, one pair
# per categorical column. States compare by exact token equality.
CategoricalState = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Dataset:
    """Typed columnar table. Numerical cells are finite floats."""

    columns: tuple[tuple[str, str], ...]  # (name, kind) in declaration order
    data: dict = field(repr=False)  # name -> ndarray (numerical) | tuple[str] (categorical)
    rows: int

    def __post_init__(self):
        names = [n for n, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names: %r" % (sorted(names),))
        for name, kind in self.columns:
            col = self.data[name]
            if len(col) != self.rows:
                raise SchemaError(
                    "column %r has %d entries, expected %d" % (name, len(col), self.rows)
                )
            if kind == NUMERICAL:
                if not np.all(np.isfinite(col)):
                    raise SchemaError("column %r contains non-finite values" % name)
                col.flags.writeable = False

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    def kind_of(self, name: str) -> str:
        for n, k in self.columns:
            if n == name:
                return k
        raise SchemaError("unknown column %r" % name)

    def numerical_columns(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.columns if k == NUMERICAL)

    def categorical_columns(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.columns if k == CATEGORICAL)

    def column(self, name: str):
        if name not in self.data:
            raise SchemaError("unknown column %r" % name)
        return self.data[name]

    def numeric_matrix(self, cols=None) -> np.ndarray:
        """Rows-by-columns float matrix over the given numerical columns."""
        if cols is None:
            cols = self.numerical_columns()
        for c in cols:
            if self.kind_of(c) != NUMERICAL:
                raise SchemaError("column %r is not numerical" % c)
        if not cols:
            return np.empty((self.rows, 0), dtype=np.float64)
        return np.column_stack([self.data[c] for c in cols]).astype(np.float64)

    def state_of_row(self, i: int, l_c=None) -> CategoricalState:
        if l_c is None:
            l_c = self.categorical_columns()
        return tuple((c, self.data[c][i]) for c in l_c)

    def take(self, mask_or_index) -> "Dataset":
        """Row subset preserving order; accepts a bool mask or index array."""
        idx = np.asarray(mask_or_index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        new = {}
        for name, kind in self.columns:
            col = self.data[name]
            if kind == NUMERICAL:
                new[name] = np.array(col)[idx]
            else:
                new[name] = tuple(col[i] for i in idx)
        return Dataset(columns=self.columns, data=new, rows=int(len(idx)))

    def drop_columns(self, names) -> "Dataset":
        drop = set(names)
        cols = tuple((n, k) for n, k in self.columns if n not in drop)
        data = {n: self.data[n] for n, _ in cols}
        return Dataset(columns=cols, data=data, rows=self.rows)


def load_csv(path, numerical, categorical) -> Dataset:
    """Read a CSV file with a header row into a typed Dataset.

    ``numerical`` and ``categorical`` list the columns to ingest; other file
    columns are ignored. Numerical cells must parse as finite numbers.
    """
    numerical = list(numerical)
    categorical = list(categorical)
    declared = numerical + categorical
    if len(set(declared)) != len(declared):
        raise SchemaError("columns declared twice: %r" % sorted(
            {c for c in declared if declared.count(c) > 1}))

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: %s" % path) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError("duplicate header names %r in %s" % (dupes, path))
        missing = [c for c in declared if c not in header]
        if missing:
            raise SchemaError("declared columns missing from %s: %r" % (path, missing))
        pos = {c: header.index(c) for c in declared}

        num_vals = {c: [] for c in numerical}
        cat_vals = {c: [] for c in categorical}
        rows = 0
        for i, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) < len(header):
                raise ParseError("row %d of %s has %d fields, header has %d"
                                 % (i, path, len(record), len(header)))
            for c in numerical:
                token = record[pos[c]].strip()
                try:
                    v = float(token)
                except ValueError:
                    raise ParseError(
                        "row %d, column %r: cannot parse %r as a number" % (i, c, token)
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(
                        "row %d, column %r: non-finite value %r" % (i, c, token))
                num_vals[c].append(v)
            for c in categorical:
                cat_vals[c].append(record[pos[c]])
            rows += 1

    columns = tuple([(c, NUMERICAL) for c in numerical] + [(c, CATEGORICAL) for c in categorical])
    data = {}
    for c in numerical:
        data[c] = np.array(num_vals[c], dtype=np.float64)
    for c in categorical:
        data[c] = tuple(cat_vals[c])
    return Dataset(columns=columns, data=data, rows=rows)


# ---------------------------------------------------------------------------
# Min-max scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnScale:
    min: float
    max: float
    degenerate: bool  # true iff min == max


@dataclass(frozen=True)
class ScalingParams:
    """Per-column min/max fitted on training data."""

    per_column: dict  # name -> ColumnScale

    def columns(self) -> tuple[str, ...]:
        return tuple(self.per_column)


def scale_fit(d: Dataset, l_n) -> ScalingParams:
    per = {}
    for c in l_n:
        if d.kind_of(c) != NUMERICAL:
            raise SchemaError("cannot fit scaling on non-numerical column %r" % c)
        col = d.data[c]
        if len(col) == 0:
            raise SchemaError("cannot fit scaling on empty column %r" % c)
        lo = float(col.min())
        hi = float(col.max())
        per[c] = ColumnScale(min=lo, max=hi, degenerate=lo == hi)
    return ScalingParams(per_column=per)


def scale_apply(d: Dataset, p: ScalingParams) -> Dataset:
    """Map the fitted columns to [0, 1]; degenerate columns map to 0."""
    data = dict(d.data)
    for c, sc in p.per_column.items():
        if c not in d.data or d.kind_of(c) != NUMERICAL:
            raise SchemaError("scaling params reference column %r not numerical in dataset" % c)
        col = d.data[c]
        if sc.degenerate:
            data[c] = np.zeros_like(col)
        else:
            data[c] = (col - sc.min) / (sc.max - sc.min)
    return Dataset(columns=d.columns, data=data, rows=d.rows)


def scale_value(v: float, col: str, p: ScalingParams) -> float:
    if col not in p.per_column:
        raise SchemaError("no scaling params for column %r" % col)
    sc = p.per_column[col]
    if sc.degenerate:
        return 0.0
    return (v - sc.min) / (sc.max - sc.min)


def unscale_value(v: float, col: str, p: ScalingParams) -> float:
    """Inverse of scale_value on non-degenerate columns."""
    if col not in p.per_column:
        raise SchemaError("no scaling params for column %r" % col)
    sc = p.per_column[col]
    if sc.degenerate:
        return sc.min
    return v * (sc.max - sc.min) + sc.min


# ---------------------------------------------------------------------------
# Cyclical encoding
# ---------------------------------------------------------------------------

def cyclical_encode(v: float, period: float) -> tuple[float, float]:
    """Map a periodic value onto the unit circle as (sin, cos)."""
    if period <= 0:
        raise ConfigError("cyclical period must be positive, got %r" % period)
    angle = 2.0 * math.pi * v / period
    return math.sin(angle), math.cos(angle)


def cyclical_decode(s: float, c: float, period: float) -> float:
    """Invert cyclical_encode; result lies in [0, period)."""
    if period <= 0:
        raise ConfigError("cyclical period must be positive, got %r" % period)
    if s == 0.0 and c == 0.0:
        raise ConfigError("cannot decode (0, 0): angle undefined")
    frac = math.atan2(s, c) / (2.0 * math.pi)
    out = (frac % 1.0) * period
    # a hair under a full turn can round up to the period itself
    return 0.0 if out >= period else out


@dataclass(frozen=True)
class CyclicalInfo:
    period: float
    sin_col: str
    cos_col: str


def expand_cyclical(d: Dataset, periods: dict) -> tuple[Dataset, dict]:
    """Replace each periodic column with its (sin, cos) pair.

    Returns the expanded dataset and a map original-name -> CyclicalInfo for
    later display decoding.
    """
    info = {}
    columns = []
    data = {}
    for name, kind in d.columns:
        if name in periods:
            if kind != NUMERICAL:
                raise SchemaError("cyclical column %r must be numerical" % name)
            period = float(periods[name])
            if period <= 0:
                raise ConfigError("cyclical period for %r must be positive" % name)
            angles = 2.0 * np.pi * d.data[name] / period
            sin_name = name + "_sin"
            cos_name = name + "_cos"
            if sin_name in d.data or cos_name in d.data:
                raise SchemaError("cyclical expansion of %r collides with existing column" % name)
            columns.append((sin_name, NUMERICAL))
            columns.append((cos_name, NUMERICAL))
            data[sin_name] = np.sin(angles)
            data[cos_name] = np.cos(angles)
            info[name] = CyclicalInfo(period=period, sin_col=sin_name, cos_col=cos_name)
        else:
            columns.append((name, kind))
            data[name] = d.data[name]
    unknown = set(periods) - {n for n, _ in d.columns}
    if unknown:
        raise SchemaError("cyclical columns not in dataset: %r" % sorted(unknown))
    return Dataset(columns=tuple(columns), data=data, rows=d.rows), info


def expand_numeric_names(l_n, info: dict) -> tuple[str, ...]:
    """Numeric column list with each expanded column replaced by its pair."""
    out = []
    for name in l_n:
        if name in info:
            out.append(info[name].sin_col)
            out.append(info[name].cos_col)
        else:
            out.append(name)
    return tuple(out)


# ---------------------------------------------------------------------------
# Categorical states
# ---------------------------------------------------------------------------

def unique_categorical_states(d: Dataset, l_c) -> list[CategoricalState]:
    """Distinct combinations of categorical values, in first-appearance order."""
    l_c = list(l_c)
    if not l_c:
        raise SchemaError("unique_categorical_states requires at least one categorical column")
    for c in l_c:
        if d.kind_of(c) != CATEGORICAL:
            raise SchemaError("column %r is not categorical" % c)
    seen = {}
    for i in range(d.rows):
        state = tuple((c, d.data[c][i]) for c in l_c)
        if state not in seen:
            seen[state] = True
    return list(seen)


def state_mask(d: Dataset, state: CategoricalState) -> np.ndarray:
    """Boolean mask of rows matching the state on every listed column."""
    mask = np.ones(d.rows, dtype=bool)
    for col, token in state:
        values = d.data[col]
        mask &= np.fromiter((v == token for v in values), dtype=bool, count=d.rows)
    return mask


def filter_category(X_n: Dataset, X_y: Dataset, c: CategoricalState) -> tuple[Dataset, Dataset]:
    """Rows of each input matching the state; categorical columns dropped."""
    cat_cols = [col for col, _ in c]
    out = []
    for ds in (X_n, X_y):
        sub = ds.take(state_mask(ds, c))
        out.append(sub.drop_columns(cat_cols))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Feature schema and model-matrix encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSchema:
    """Column roles plus one-hot levels, fixed at fit time.

    ``numerical`` reflects any cyclical expansion already applied. Levels are
    sorted so the encoded feature order does not depend on row order.
    """

    numerical: tuple[str, ...]
    categorical: tuple[str, ...]
    levels: dict  # categorical column -> tuple of tokens, sorted
    cyclical: dict = field(default_factory=dict)  # original column -> CyclicalInfo

    def feature_names(self) -> list[str]:
        names = list(self.numerical)
        for c in self.categorical:
            names.extend("%s=%s" % (c, tok) for tok in self.levels[c])
        return names


def build_schema(d: Dataset, l_n, l_c, cyclical=None) -> FeatureSchema:
    levels = {}
    for c in l_c:
        if d.kind_of(c) != CATEGORICAL:
            raise SchemaError("column %r is not categorical" % c)
        levels[c] = tuple(sorted(set(d.data[c])))
    for c in l_n:
        if d.kind_of(c) != NUMERICAL:
            raise SchemaError("column %r is not numerical" % c)
    return FeatureSchema(
        numerical=tuple(l_n),
        categorical=tuple(l_c),
        levels=levels,
        cyclical=dict(cyclical or {}),
    )


def encode_matrix(d: Dataset, schema: FeatureSchema) -> np.ndarray:
    """Numerical columns followed by 0/1 one-hot indicators per level.

    Tokens unseen at fit time encode as all-zeros for that column.
    """
    blocks = [d.numeric_matrix(schema.numerical)]
    for c in schema.categorical:
        tokens = d.data[c]
        for level in schema.levels[c]:
            blocks.append(
                np.fromiter((1.0 if t == level else 0.0 for t in tokens),
                            dtype=np.float64, count=d.rows).reshape(-1, 1))
    return np.hstack(blocks) if blocks else np.empty((d.rows, 0))
