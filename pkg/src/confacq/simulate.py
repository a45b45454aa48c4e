"""Semi-synthetic world generation: treatments, potential outcomes, masking.

The pipeline follows the IHDP "response surface B" recipe: the missing
confounder column is (optionally) made independent of the other covariates,
continuous covariates are z-scored, treatments are Bernoulli with clipped
linear propensities, the control mean is ``exp((x + W) . beta)`` and the
treated mean is ``(x + W) . beta``. Most confounder values are then hidden by
a score that depends on the value itself (missing not at random).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .data_model import (
    BINARY,
    CONTINUOUS,
    CovariateError,
    CovariateTable,
    DataPartition,
    as_rng,
    as_seed_sequence,
    normalize,
)

NAMED_FEATURES = ("b.marr", "mom.scoll", "work.dur", "momwhite", "cig", "drugs")
COEF_VALUES = np.array([0.0, 0.1, 0.2, 0.3, 0.4])
COEF_PROBS = {
    CONTINUOUS: np.array([0.5, 0.125, 0.125, 0.125, 0.125]),
    BINARY: np.array([0.6, 0.1, 0.1, 0.1, 0.1]),
}
# Shipped default for the six named coefficients. Not taken from any
# published table; override through the outcome config.
DEFAULT_NAMED_BETA = 0.4
UNNAMED_OFFSET = 0.5


class SimulationError(ValueError):
    pass


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Treatments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreatmentParams:
    subset_columns: tuple[str, ...]
    xi: np.ndarray
    clip_lo: float = 0.005
    clip_hi: float = 0.995

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "subset_columns", tuple(self.subset_columns))
        if xi.shape[0] != len(self.subset_columns):
            raise SimulationError("xi must have one entry per subset column")
        if not 0.0 < self.clip_lo < self.clip_hi < 1.0:
            raise SimulationError("need 0 < clip_lo < clip_hi < 1")


def default_treatment_columns(table: CovariateTable, a_column: str = "momwhite") -> list[str]:
    """The confounder plus the named binary covariates present in ``table``."""
    cols = [a_column] if a_column in table.names else []
    cols += [c for c in NAMED_FEATURES if c != a_column and c in table.names
             and table.kind(c) == BINARY]
    return cols


def draw_treatment_params(table: CovariateTable, columns: Sequence[str] | None = None,
                          seed=None, xi_high: float = 0.2,
                          a_column: str = "momwhite") -> TreatmentParams:
    """Draw xi uniformly on [0, xi_high] for each selected column."""
    if columns is None:
        columns = default_treatment_columns(table, a_column)
    for c in columns:
        table.index(c)
    xi = as_rng(seed).uniform(0.0, xi_high, size=len(columns))
    return TreatmentParams(tuple(columns), xi)


def treatment_probabilities(table: CovariateTable, params: TreatmentParams) -> np.ndarray:
    try:
        cols = [table.index(c) for c in params.subset_columns]
    except CovariateError as exc:
        raise SimulationError(str(exc)) from None
    lin = table.values[:, cols] @ params.xi
    return np.clip(lin, params.clip_lo, params.clip_hi)


def generate_treatments(table: CovariateTable, params: TreatmentParams, seed=None) -> np.ndarray:
    p = treatment_probabilities(table, params)
    return (as_rng(seed).random(p.shape[0]) < p).astype(np.int64)


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutcomeSurface:
    columns: tuple[str, ...]
    beta: np.ndarray
    w_offset: np.ndarray
    named_beta: Mapping[str, float]
    noise_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))
        object.__setattr__(self, "w_offset", np.asarray(self.w_offset, dtype=np.float64))
        if self.beta.shape != (len(self.columns),) or self.w_offset.shape != self.beta.shape:
            raise SimulationError("beta and W must have one entry per column")
        if not self.noise_sd >= 0:
            raise SimulationError("noise_sd must be non-negative")

    def linear_predictor(self, table: CovariateTable) -> np.ndarray:
        if tuple(table.names) != self.columns:
            raise SimulationError("table columns do not match the outcome surface")
        return (table.values + self.w_offset) @ self.beta


def sample_coefficients(kind: str, size: int, seed=None) -> np.ndarray:
    return as_rng(seed).choice(COEF_VALUES, size=size, p=COEF_PROBS[kind])


def sample_outcome_surface(table: CovariateTable, named_beta_values: Mapping[str, float] | None = None,
                           seed=None, remap: Mapping[str, str] | None = None,
                           noise_sd: float = 1.0) -> OutcomeSurface:
    """Draw the coefficient vector and offsets over every column of ``table``.

    ``named_beta_values`` fixes the coefficients of the six named features
    (keys are the canonical names); ``remap`` maps canonical names to the
    table's own column names when they differ.
    """
    remap = dict(remap or {})
    values = {name: DEFAULT_NAMED_BETA for name in NAMED_FEATURES}
    for key, val in (named_beta_values or {}).items():
        if key not in values:
            raise SimulationError(f"{key!r} is not one of the named features {NAMED_FEATURES}")
        values[key] = float(val)
    named_cols = {}
    for name in NAMED_FEATURES:
        col = remap.get(name, name)
        if col not in table.names:
            raise SimulationError(f"named feature {name!r} (column {col!r}) missing from table")
        named_cols[col] = values[name]

    rng = as_rng(seed)
    beta = np.empty(table.n_columns)
    w = np.empty(table.n_columns)
    for j, (name, kind) in enumerate(zip(table.names, table.kinds)):
        if name in named_cols:
            beta[j] = named_cols[name]
            w[j] = 0.0
        else:
            beta[j] = rng.choice(COEF_VALUES, p=COEF_PROBS[kind])
            w[j] = UNNAMED_OFFSET
    return OutcomeSurface(table.names, beta, w, dict(named_cols), noise_sd)


def generate_outcomes(table: CovariateTable, t, surface: OutcomeSurface, seed=None):
    """Return ``(y0_true, y1_true, y_factual)``; the first two are noiseless means."""
    t = np.asarray(t)
    if t.shape != (table.n_samples,):
        raise SimulationError("one treatment per row required")
    mu = surface.linear_predictor(table)
    y0 = np.exp(mu)
    y1 = mu.copy()
    noise = as_rng(seed).normal(0.0, 1.0, size=mu.shape[0]) * surface.noise_sd
    y = np.where(t == 1, y1, y0) + noise
    return y0, y1, y


# ---------------------------------------------------------------------------
# Missingness
# ---------------------------------------------------------------------------

def mnar_scores(a, noise) -> np.ndarray:
    return (2.0 - np.asarray(a, dtype=np.float64)) * 0.2 + np.asarray(noise) * 0.5


def mnar_order(a, seed=None, noise_scale: float = 1.0) -> np.ndarray:
    """Positions sorted by descending masking score (most likely to be hidden first).

    ``noise_scale`` multiplies the standard-normal draw; 0 disables it, in which
    case ties are broken by a seeded random key.
    """
    rng = as_rng(seed)
    a = np.asarray(a)
    u = rng.normal(0.0, 1.0, size=a.shape[0]) * noise_scale
    tiebreak = rng.random(a.shape[0])
    return np.lexsort((tiebreak, -mnar_scores(a, u)))


def mask_count(fraction: float, n: int) -> int:
    return int(math.ceil(fraction * n - 1e-9))


def apply_mnar_mask(a_true, mask_fraction: float = 0.95, seed=None,
                    noise_scale: float = 1.0) -> np.ndarray:
    """Positions whose confounder value is hidden: the top ``ceil(fraction * n)`` by score."""
    if not 0.0 <= mask_fraction <= 1.0:
        raise SimulationError("mask_fraction must lie in [0, 1]")
    a_true = np.asarray(a_true)
    order = mnar_order(a_true, seed, noise_scale)
    return np.sort(order[:mask_count(mask_fraction, a_true.shape[0])])


# ---------------------------------------------------------------------------
# Dependence between the confounder and the other covariates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AVariantConfig:
    mode: str = "independent_permuted"
    retain_fraction: float | None = None
    rho: float | None = None
    birthweight_column: str = "bw"

    def __post_init__(self):
        if self.mode == "independent_permuted":
            return
        if self.mode == "original_fraction":
            if self.retain_fraction is None or not 0.0 <= self.retain_fraction <= 1.0:
                raise SimulationError("original_fraction mode needs retain_fraction in [0, 1]")
        elif self.mode == "bivariate_gaussian":
            if self.rho is None or not 0.0 <= self.rho <= 1.0:
                raise SimulationError("bivariate_gaussian mode needs rho in [0, 1]")
        elif self.mode != "original":
            raise SimulationError(f"unknown a_variant mode {self.mode!r}")

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "AVariantConfig":
        d = dict(d or {})
        return cls(mode=d.get("mode", "independent_permuted"),
                   retain_fraction=d.get("retain_fraction"),
                   rho=d.get("rho"),
                   birthweight_column=d.get("birthweight_column", "bw"))


def apply_a_variant(table: CovariateTable, cfg: AVariantConfig, seed=None,
                    a_column: str = "momwhite", return_latent: bool = False):
    """Rewrite the confounder column (and, for the bivariate mode, birthweight).

    Returns the new table; with ``return_latent`` also the latent standard
    normal draw used by the bivariate mode (``None`` for the other modes).
    """
    rng = as_rng(seed)
    a = table.column(a_column)
    p_hat = float(a.mean())
    latent = None
    if cfg.mode == "original":
        out = table
    elif cfg.mode == "independent_permuted":
        out = table.with_column(a_column, rng.permutation(a))
    elif cfg.mode == "original_fraction":
        n = table.n_samples
        n_replace = int(math.floor((1.0 - cfg.retain_fraction) * n + 0.5))
        rows = rng.choice(n, size=n_replace, replace=False)
        new = a.copy()
        new[rows] = (rng.random(n_replace) < p_hat).astype(np.float64)
        out = table.with_column(a_column, new)
    else:
        bw = table.column(cfg.birthweight_column)
        n = table.n_samples
        z = rng.normal(size=n)
        e = rng.normal(size=n)
        b = bw.mean() + bw.std() * (cfg.rho * z + math.sqrt(max(0.0, 1.0 - cfg.rho ** 2)) * e)
        # Rank threshold: exactly round(p_hat * n) ones, i.e. the empirical
        # (1 - p_hat) quantile of z.
        k = int(math.floor(p_hat * n + 0.5))
        new = np.zeros(n)
        if k > 0:
            new[np.argsort(-z, kind="stable")[:k]] = 1.0
        out = table.with_column(a_column, new).with_column(cfg.birthweight_column, b)
        latent = z
    return (out, latent) if return_latent else out


def normal_quantile_threshold(p_hat: float) -> float:
    """Population (1 - p_hat) quantile of the standard normal."""
    return float(stats.norm.ppf(1.0 - p_hat))


# ---------------------------------------------------------------------------
# Oracle and whole-world assembly
# ---------------------------------------------------------------------------

class Oracle:
    """Reveals hidden confounder values on request, at most once per row."""

    def __init__(self, a_true, pool_rows):
        self._a = np.asarray(a_true).astype(np.int64)
        self._remaining = set(int(r) for r in pool_rows)
        self.revealed: list[int] = []

    @property
    def remaining(self) -> int:
        return len(self._remaining)

    def reveal(self, rows) -> list[tuple[int, int]]:
        rows = [int(r) for r in rows]
        if len(set(rows)) != len(rows):
            raise OracleError("duplicate rows in one request")
        bad = [r for r in rows if r not in self._remaining]
        if bad:
            raise OracleError(f"rows not in pool (already acquired or never masked): {bad[:5]}")
        for r in rows:
            self._remaining.discard(r)
            self.revealed.append(r)
        return [(r, int(self._a[r])) for r in rows]


@dataclass(frozen=True)
class GroundTruth:
    a: np.ndarray
    y0: np.ndarray
    y1: np.ndarray


@dataclass(frozen=True)
class World:
    """One simulated realization.

    ``x`` holds the normalized covariates without the confounder. The truth
    (confounder values and noiseless potential outcomes) sits in ``truth`` and
    is only read by the oracle and the evaluator.
    """

    ids: tuple[str, ...]
    columns: tuple[str, ...]
    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    truth: GroundTruth
    a_column: str = "momwhite"
    info: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def sample(self, row: int, partition: DataPartition | None = None):
        from .data_model import Sample

        obs = None
        if partition is not None and row in partition.train:
            obs = partition.a_observed[row]
        return Sample(self.ids[row], self.x[row].copy(), int(self.truth.a[row]), obs,
                      int(self.t[row]), float(self.y[row]),
                      float(self.truth.y0[row]), float(self.truth.y1[row]))


@dataclass(frozen=True)
class SimulationConfig:
    mask_fraction: float = 0.95
    mask_noise: float = 1.0
    test_fraction: float = 0.25
    a_column: str = "momwhite"
    a_variant: AVariantConfig = AVariantConfig()
    treatment_columns: tuple[str, ...] | None = None
    xi: tuple[float, ...] | None = None
    xi_high: float = 0.2
    named_beta: Mapping[str, float] = field(default_factory=dict)
    remap: Mapping[str, str] = field(default_factory=dict)
    noise_sd: float = 1.0

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "SimulationConfig":
        d = dict(d or {})
        treat = dict(d.get("treatment") or {})
        outcome = dict(d.get("outcome") or {})
        cols = treat.get("columns")
        xi = treat.get("xi")
        return cls(
            mask_fraction=float(d.get("mask_fraction", 0.95)),
            mask_noise=float(d.get("mask_noise", 1.0)),
            test_fraction=float(d.get("test_fraction", 0.25)),
            a_column=d.get("a_column", "momwhite"),
            a_variant=AVariantConfig.from_dict(d.get("a_variant")),
            treatment_columns=tuple(cols) if cols is not None else None,
            xi=tuple(float(v) for v in xi) if xi is not None else None,
            xi_high=float(treat.get("xi_high", 0.2)),
            named_beta=dict(outcome.get("named_beta") or {}),
            remap=dict(outcome.get("remap") or {}),
            noise_sd=float(outcome.get("noise_sd", 1.0)),
        )

    def validate(self) -> None:
        if not 0.0 < self.mask_fraction < 1.0:
            raise SimulationError("mask_fraction must lie in (0, 1)")
        if not 0.0 < self.test_fraction < 1.0:
            raise SimulationError("test_fraction must lie in (0, 1)")
        if self.xi is not None and self.treatment_columns is not None \
                and len(self.xi) != len(self.treatment_columns):
            raise SimulationError("treatment.xi and treatment.columns differ in length")


_STREAMS = ("variant", "xi", "treatment", "surface", "noise", "split", "mask")


def build_world(covariates: CovariateTable, cfg: SimulationConfig, seed) -> tuple[World, DataPartition]:
    """Simulate one realization and its initial train / pool / test split."""
    cfg.validate()
    children = as_seed_sequence(seed).spawn(len(_STREAMS))
    rngs = {name: np.random.default_rng(ss) for name, ss in zip(_STREAMS, children)}

    table = apply_a_variant(covariates, cfg.a_variant, rngs["variant"], a_column=cfg.a_column)
    table, norm_stats = normalize(table)
    if cfg.xi is not None:
        cols = cfg.treatment_columns or tuple(default_treatment_columns(table, cfg.a_column))
        tparams = TreatmentParams(cols, np.array(cfg.xi))
    else:
        tparams = draw_treatment_params(table, cfg.treatment_columns, rngs["xi"],
                                        cfg.xi_high, cfg.a_column)
    t = generate_treatments(table, tparams, rngs["treatment"])
    surface = sample_outcome_surface(table, cfg.named_beta, rngs["surface"], cfg.remap, cfg.noise_sd)
    y0, y1, y = generate_outcomes(table, t, surface, rngs["noise"])

    a = table.column(cfg.a_column).astype(np.int64)
    x_table = table.drop(cfg.a_column)
    world = World(
        ids=table.ids, columns=x_table.names, x=x_table.values, t=t, y=y,
        truth=GroundTruth(a, y0, y1), a_column=cfg.a_column,
        info={"treatment": tparams, "surface": surface, "normalization": norm_stats},
    )
    part = split_world(world, cfg.test_fraction, cfg.mask_fraction, rngs["split"], rngs["mask"],
                       cfg.mask_noise)
    return world, part


def split_world(world: World, test_fraction: float, mask_fraction: float, split_seed=None,
                mask_seed=None, mask_noise: float = 1.0) -> DataPartition:
    """Uniform test split, then the MNAR mask over the remaining rows."""
    n = world.n
    n_test = int(math.floor(test_fraction * n + 0.5))
    perm = as_rng(split_seed).permutation(n)
    test = np.sort(perm[:n_test])
    rest = np.sort(perm[n_test:])
    masked_pos = apply_mnar_mask(world.truth.a[rest], mask_fraction, mask_seed, mask_noise)
    pool = rest[masked_pos]
    train = np.setdiff1d(rest, pool)
    if train.size == 0 or pool.size == 0 or test.size == 0:
        raise SimulationError(f"split leaves an empty set (train={train.size}, "
                              f"pool={pool.size}, test={test.size})")
    part = DataPartition(set(train.tolist()), set(pool.tolist()), frozenset(test.tolist()))
    part.a_observed = {int(r): int(world.truth.a[r]) for r in train}
    return part
