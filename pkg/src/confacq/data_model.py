"""Covariate tables, normalization, and train/pool/test bookkeeping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
_KINDS = (CONTINUOUS, BINARY)


class CovariateError(ValueError):
    """Raised for malformed covariate files or invalid table operations."""


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2 ** 63)))
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class CovariateTable:
    names: tuple[str, ...]
    kinds: tuple[str, ...]
    values: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise CovariateError("values must be a 2-d matrix")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        if len(self.names) != values.shape[1] or len(self.kinds) != values.shape[1]:
            raise CovariateError("names/kinds do not match the number of columns")
        if len(set(self.names)) != len(self.names):
            raise CovariateError("column names must be unique")
        if len(self.ids) != values.shape[0]:
            raise CovariateError("one id per row required")
        if len(set(self.ids)) != len(self.ids):
            raise CovariateError("row ids must be unique")
        for name, kind in zip(self.names, self.kinds):
            if kind not in _KINDS:
                raise CovariateError(f"column {name!r}: unknown kind {kind!r}")
        if not np.all(np.isfinite(values)):
            raise CovariateError("covariates may not contain missing or non-finite values")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise CovariateError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)].copy()

    def kind(self, name: str) -> str:
        return self.kinds[self.index(name)]

    def with_column(self, name: str, values, kind: str | None = None) -> "CovariateTable":
        """Return a copy with ``name`` replaced (or appended when absent)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_samples,):
            raise CovariateError(f"column {name!r} must have {self.n_samples} rows")
        if name in self.names:
            j = self.index(name)
            new = self.values.copy()
            new[:, j] = values
            kinds = list(self.kinds)
            if kind is not None:
                kinds[j] = kind
            return CovariateTable(self.names, tuple(kinds), new, self.ids)
        if kind is None:
            raise CovariateError(f"kind required to append column {name!r}")
        return CovariateTable(self.names + (name,), self.kinds + (kind,),
                              np.column_stack([self.values, values]), self.ids)

    def drop(self, name: str) -> "CovariateTable":
        j = self.index(name)
        keep = [k for k in range(self.n_columns) if k != j]
        return CovariateTable(tuple(self.names[k] for k in keep),
                              tuple(self.kinds[k] for k in keep),
                              self.values[:, keep], self.ids)

    def take(self, rows) -> "CovariateTable":
        rows = np.asarray(rows, dtype=np.int64)
        return CovariateTable(self.names, self.kinds, self.values[rows],
                              tuple(self.ids[r] for r in rows))


def _check_binary(values: np.ndarray, names: Sequence[str], kinds: Sequence[str], ids):
    for j, (name, kind) in enumerate(zip(names, kinds)):
        if kind != BINARY:
            continue
        bad = np.flatnonzero((values[:, j] != 0) & (values[:, j] != 1))
        if bad.size:
            r = int(bad[0])
            raise CovariateError(
                f"row {r + 1} (id {ids[r]!r}), column {name!r}: binary value "
                f"{values[r, j]!r} not in {{0, 1}}")


def load_covariates(path, schema: Mapping[str, str]) -> CovariateTable:
    """Read a delimited covariate file with a header row and an ``id`` column.

    ``schema`` maps every non-id column to ``"continuous"`` or ``"binary"``;
    column kinds are never inferred. Errors name the offending row and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample, delimiters=",\t;")
        except csv.Error:
            dialect = csv.excel
        reader = csv.reader(fh, dialect)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CovariateError(f"{path}: empty file") from None
        if "id" not in header:
            raise CovariateError(f"{path}: missing 'id' column")
        data_cols = [h for h in header if h != "id"]
        for name in schema:
            if name not in header:
                raise CovariateError(f"{path}: missing column {name!r}")
        for name in data_cols:
            if name not in schema:
                raise CovariateError(f"{path}: column {name!r} has no kind in the schema")
        for name, kind in schema.items():
            if kind not in _KINDS:
                raise CovariateError(f"schema: column {name!r} has unknown kind {kind!r}")
        id_pos = header.index("id")
        pos = [header.index(name) for name in data_cols]
        ids, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise CovariateError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(rec)}")
            row = []
            for name, p in zip(data_cols, pos):
                cell = rec[p].strip()
                try:
                    val = float(cell)
                except ValueError:
                    raise CovariateError(
                        f"{path}: line {lineno}, column {name!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(val):
                    raise CovariateError(f"{path}: line {lineno}, column {name!r}: missing value")
                row.append(val)
            ids.append(rec[id_pos].strip())
            rows.append(row)
    kinds = [schema[name] for name in data_cols]
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(data_cols))
    try:
        _check_binary(values, data_cols, kinds, ids)
    except CovariateError as exc:
        raise CovariateError(f"{path}: {exc}") from None
    return CovariateTable(tuple(data_cols), tuple(kinds), values, tuple(ids))


@dataclass(frozen=True)
class ColumnSpec:
    """Marginal distribution of one synthetic column: Normal(mean, sd) or Bernoulli(p)."""

    name: str
    dist: str
    mean: float = 0.0
    sd: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if self.dist == "normal":
            if not self.sd > 0:
                raise CovariateError(f"column {self.name!r}: sd must be positive")
        elif self.dist == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise CovariateError(f"column {self.name!r}: p must lie in [0, 1]")
        else:
            raise CovariateError(f"column {self.name!r}: unknown distribution {self.dist!r}")

    @property
    def kind(self) -> str:
        return CONTINUOUS if self.dist == "normal" else BINARY


def normal(name: str, mean: float = 0.0, sd: float = 1.0) -> ColumnSpec:
    return ColumnSpec(name, "normal", mean=mean, sd=sd)


def bernoulli(name: str, p: float) -> ColumnSpec:
    return ColumnSpec(name, "bernoulli", p=p)


# Column names and kinds follow the IHDP covariates (6 continuous, 19 binary)
# plus the mother's-ethnicity column used as the missing confounder. The
# marginals are rough stand-ins, not fitted to the real cohort.
IHDP_LIKE_COLUMNS: tuple[ColumnSpec, ...] = (
    normal("bw", 2000.0, 450.0),
    normal("b.head", 32.0, 2.5),
    normal("preterm", 6.5, 2.5),
    normal("birth.o", 1.9, 1.0),
    normal("nnhealth", 100.0, 12.0),
    normal("momage", 24.0, 6.0),
    bernoulli("sex", 0.51),
    bernoulli("twin", 0.09),
    bernoulli("b.marr", 0.52),
    bernoulli("mom.lths", 0.37),
    bernoulli("mom.hs", 0.27),
    bernoulli("mom.scoll", 0.21),
    bernoulli("cig", 0.34),
    bernoulli("first", 0.42),
    bernoulli("booze", 0.12),
    bernoulli("drugs", 0.05),
    bernoulli("work.dur", 0.58),
    bernoulli("prenatal", 0.96),
    bernoulli("ark", 0.16),
    bernoulli("ein", 0.11),
    bernoulli("har", 0.12),
    bernoulli("mia", 0.11),
    bernoulli("pen", 0.10),
    bernoulli("tex", 0.12),
    bernoulli("was", 0.20),
    bernoulli("momwhite", 0.50),
)


def synthesize_covariates(n: int, spec: Iterable[ColumnSpec], seed=None) -> CovariateTable:
    spec = list(spec)
    if n < 1:
        raise CovariateError("n must be positive")
    rng = as_rng(seed)
    cols = []
    for col in spec:
        if col.dist == "normal":
            cols.append(rng.normal(col.mean, col.sd, size=n))
        else:
            cols.append((rng.random(n) < col.p).astype(np.float64))
    values = np.column_stack(cols) if cols else np.empty((n, 0))
    ids = tuple(str(i) for i in range(n))
    return CovariateTable(tuple(c.name for c in spec), tuple(c.kind for c in spec), values, ids)


def normalize(table: CovariateTable, stats: Mapping[str, tuple[float, float]] | None = None):
    """Z-score continuous columns; binary columns pass through unchanged.

    Returns ``(normalized_table, stats)`` where ``stats`` maps each continuous
    column to the ``(mean, sd)`` used. Passing ``stats`` back in applies the same
    affine map to held-out rows instead of refitting.
    """
    fitted = stats is None
    if fitted:
        if table.n_samples < 2:
            raise CovariateError("normalization needs at least two rows")
        stats = {}
    new = table.values.copy()
    for j, (name, kind) in enumerate(zip(table.names, table.kinds)):
        if kind != CONTINUOUS:
            continue
        if fitted:
            mean = float(new[:, j].mean())
            sd = float(new[:, j].std())
            if not sd > 1e-12 * max(1.0, abs(mean)):
                raise CovariateError(f"column {name!r} has zero variance")
            stats[name] = (mean, sd)
        mean, sd = stats[name]
        new[:, j] = (new[:, j] - mean) / sd
    return CovariateTable(table.names, table.kinds, new, table.ids), dict(stats)


@dataclass(frozen=True)
class Sample:
    """One unit as the simulator sees it, truth included."""

    id: str
    x: np.ndarray
    a_true: int
    a_observed: int | None
    t: int
    y_factual: float
    y0_true: float
    y1_true: float


class PartitionError(ValueError):
    pass


@dataclass
class DataPartition:
    """Disjoint train / pool / test row-index sets over one realization.

    Rows are addressed by position. ``a_observed`` holds acquired confounder
    values for train rows and NaN for pool rows; test rows are never exposed
    to strategies.
    """

    train: set[int]
    pool: set[int]
    test: frozenset[int]
    a_observed: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.train = set(self.train)
        self.pool = set(self.pool)
        self.test = frozenset(self.test)
        if self.train & self.pool or self.train & self.test or self.pool & self.test:
            raise PartitionError("train, pool and test must be disjoint")

    @property
    def n_total(self) -> int:
        return len(self.train) + len(self.pool) + len(self.test)

    def train_rows(self) -> np.ndarray:
        return np.array(sorted(self.train), dtype=np.int64)

    def pool_rows(self) -> np.ndarray:
        return np.array(sorted(self.pool), dtype=np.int64)

    def test_rows(self) -> np.ndarray:
        return np.array(sorted(self.test), dtype=np.int64)

    def train_a(self) -> np.ndarray:
        return np.array([self.a_observed[r] for r in sorted(self.train)], dtype=np.float64)

    def acquire(self, rows: Iterable[int], values: Iterable[int]) -> None:
        rows = [int(r) for r in rows]
        values = [int(v) for v in values]
        missing = [r for r in rows if r not in self.pool]
        if missing:
            raise PartitionError(f"rows not in pool: {missing[:5]}")
        if len(set(rows)) != len(rows):
            raise PartitionError("duplicate rows in acquisition batch")
        for r, v in zip(rows, values):
            self.pool.discard(r)
            self.train.add(r)
            self.a_observed[r] = v

    def check(self, n_total: int | None = None, require_values: bool = True) -> None:
        if self.train & self.pool or self.train & self.test or self.pool & self.test:
            raise PartitionError("sets overlap")
        if n_total is not None and self.n_total != n_total:
            raise PartitionError("partition no longer covers the realization")
        if require_values and set(self.a_observed) != self.train:
            raise PartitionError("train rows and observed confounder values disagree")

    def copy(self) -> "DataPartition":
        return DataPartition(set(self.train), set(self.pool), self.test, dict(self.a_observed))

    def dump_rows(self, ids: Sequence[str]):
        """Rows for the partition CSV: (id, split, a_observed_present)."""
        out = []
        for r in range(len(ids)):
            if r in self.train:
                out.append((ids[r], "train", 1))
            elif r in self.pool:
                out.append((ids[r], "pool", 0))
            elif r in self.test:
                out.append((ids[r], "test", 0))
        return out


def _count(fraction: float, n: int) -> int:
    return int(math.floor(fraction * n + 0.5))


def partition(n: int, initial_labeled_fraction: float, test_fraction: float, seed=None,
              a_true=None, mask_noise: float = 1.0) -> DataPartition:
    """Split ``n`` rows into train / pool / test.

    Both fractions are relative to ``n``. The test set is a uniform draw. When
    ``a_true`` is given, the train rows are the ones that survive the
    missing-not-at-random mask (see :func:`confacq.simulate.apply_mnar_mask`);
    otherwise they are uniform.
    """
    for name, frac in (("initial_labeled_fraction", initial_labeled_fraction),
                       ("test_fraction", test_fraction)):
        if not 0.0 < frac < 1.0:
            raise PartitionError(f"{name} must lie in (0, 1)")
    if initial_labeled_fraction + test_fraction >= 1.0:
        raise PartitionError("fractions must sum to less than 1")
    n_test = _count(test_fraction, n)
    n_train = _count(initial_labeled_fraction, n)
    n_pool = n - n_test - n_train
    if min(n_test, n_train, n_pool) < 1:
        raise PartitionError(f"fractions give an empty set for n={n} "
                             f"(train={n_train}, pool={n_pool}, test={n_test})")
    rng = as_rng(seed)
    perm = rng.permutation(n)
    test = perm[:n_test]
    rest = np.sort(perm[n_test:])
    if a_true is None:
        chosen = rng.permutation(rest)
        train, pool = chosen[:n_train], chosen[n_train:]
    else:
        from .simulate import mnar_order

        order = mnar_order(np.asarray(a_true)[rest], rng, noise_scale=mask_noise)
        masked = rest[order[:n_pool]]
        pool = masked
        train = np.setdiff1d(rest, masked)
    part = DataPartition(set(train.tolist()), set(pool.tolist()), frozenset(test.tolist()))
    if a_true is not None:
        part.a_observed = {int(r): int(a_true[r]) for r in train}
    return part
