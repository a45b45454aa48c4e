"""Effect-estimation metrics, acquisition traces and their aggregation."""

from __future__ import annotations

import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)

Z95 = 1.96
ABS_TOL_WHEN_OPTIMAL_ZERO = 1e-3


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _effects(y0_hat, y1_hat, y0, y1):
    arrs = [np.asarray(v, dtype=np.float64).reshape(-1) for v in (y0_hat, y1_hat, y0, y1)]
    n = arrs[0].shape[0]
    if any(a.shape[0] != n for a in arrs):
        raise EvaluationError("predicted and true outcome arrays differ in length")
    if n == 0:
        raise EvaluationError("no samples to evaluate")
    return arrs[1] - arrs[0], arrs[3] - arrs[2]


def eps_ate(y0_hat, y1_hat, y0, y1) -> float:
    """Absolute error between the predicted and true sample-average effects."""
    pred, true = _effects(y0_hat, y1_hat, y0, y1)
    return float(abs(pred.mean() - true.mean()))


def pehe(y0_hat, y1_hat, y0, y1) -> float:
    """Mean squared error of the per-sample effect predictions."""
    pred, true = _effects(y0_hat, y1_hat, y0, y1)
    return float(np.mean((pred - true) ** 2))


@dataclass(frozen=True)
class MetricsRecord:
    iteration: int
    n_acquired: int
    n_train: int
    eps_ate: float
    pehe: float
    n_treated_acquired: int
    n_control_acquired: int

    @property
    def sqrt_pehe(self) -> float:
        return math.sqrt(self.pehe)

    def metric(self, name: str) -> float:
        return getattr(self, name)


@dataclass
class AcquisitionTrace:
    realization: int
    seed: int
    strategy: str
    estimator: str
    records: list[MetricsRecord] = field(default_factory=list)
    acquired: list[list[tuple[int, str, int]]] = field(default_factory=list)
    optimal_eps_ate: float = float("nan")
    optimal_sqrt_pehe: float = float("nan")
    failed: str | None = None

    def values(self, metric: str) -> np.ndarray:
        return np.array([r.metric(metric) for r in self.records])

    def counts(self) -> np.ndarray:
        return np.array([r.n_acquired for r in self.records])

    def optimal(self, metric: str) -> float:
        return {"eps_ate": self.optimal_eps_ate, "sqrt_pehe": self.optimal_sqrt_pehe}[metric]

    def check(self, batch_size: int | None = None) -> None:
        counts = self.counts()
        steps = np.diff(counts)
        if np.any(steps <= 0):
            raise EvaluationError("n_acquired must strictly increase")
        if batch_size is not None and np.any(steps > batch_size):
            raise EvaluationError("more than batch_size acquisitions in one step")
        for r in self.records:
            if r.n_treated_acquired + r.n_control_acquired != r.n_acquired:
                raise EvaluationError("arm counts do not add up")


def evaluate_model(model, x, a, y0, y1) -> tuple[float, float]:
    """(eps_ate, pehe) of a fitted estimator on rows with known truth."""
    y0_hat, y1_hat = model.predict_potential(x, a)
    return eps_ate(y0_hat, y1_hat, y0, y1), pehe(y0_hat, y1_hat, y0, y1)


def optimal_reference(world, partition, kind: str, hyperparams=None, seed=None) -> tuple[float, float]:
    """Metrics of the estimator trained on every non-test row with the confounder revealed."""
    from .estimators.effect import fit_estimator

    rows = np.array(sorted(partition.train | partition.pool), dtype=np.int64)
    test = partition.test_rows()
    truth = world.truth
    model = fit_estimator(kind, world.x[rows], truth.a[rows], world.t[rows], world.y[rows],
                          hyperparams, seed)
    e, p = evaluate_model(model, world.x[test], truth.a[test], truth.y0[test], truth.y1[test])
    return e, math.sqrt(p)


# ---------------------------------------------------------------------------
# Sample efficiency
# ---------------------------------------------------------------------------

def threshold_for(optimal: float, pct: float = 0.01) -> float:
    if optimal <= 1e-9:
        return optimal + ABS_TOL_WHEN_OPTIMAL_ZERO
    return (1.0 + pct) * optimal


def samples_to_within(values, counts, optimal: float, pct: float = 0.01) -> int | None:
    """First acquisition count at which ``values`` falls to within ``pct`` of ``optimal``.

    Returns ``None`` (censored) when the trace never gets there.
    """
    values = np.asarray(values, dtype=np.float64)
    counts = np.asarray(counts)
    if values.size == 0:
        raise EvaluationError("empty trace")
    hit = np.flatnonzero(values <= threshold_for(optimal, pct))
    return int(counts[hit[0]]) if hit.size else None


def trace_samples_to_within(trace: AcquisitionTrace, metric: str = "eps_ate",
                            pct: float = 0.01) -> int | None:
    return samples_to_within(trace.values(metric), trace.counts(), trace.optimal(metric), pct)


def ci_half_width(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return float("nan")
    return float(Z95 * values.std(ddof=1) / math.sqrt(values.size))


def welch_pvalue(a, b, alternative: str = "two-sided") -> float:
    """Welch's unequal-variance t-test; ``alternative='less'`` tests mean(a) < mean(b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        return float("nan")
    if a.std() == 0 and b.std() == 0:
        if a.mean() == b.mean():
            return 1.0
        diff = a.mean() - b.mean()
        if alternative == "two-sided":
            return 0.0
        return 0.0 if (diff < 0) == (alternative == "less") else 1.0
    with warnings.catch_warnings():
        # near-identical samples only lose precision in the variance estimate
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(stats.ttest_ind(a, b, equal_var=False, alternative=alternative).pvalue)


@dataclass(frozen=True)
class EfficiencyRow:
    estimator: str
    strategy: str
    metric: str
    mean: float
    ci_half_width: float
    n_realizations: int
    n_censored: int


@dataclass
class Summary:
    efficiency: list[EfficiencyRow]
    optimal: list[tuple[str, str, float, float, int]]
    curves: list[tuple[str, str, str, int, float, float, float, int]]
    significance: list[tuple[str, str, str, str, float, bool]]

    def lookup(self, estimator: str, strategy: str, metric: str = "eps_ate") -> EfficiencyRow:
        for row in self.efficiency:
            if (row.estimator, row.strategy, row.metric) == (estimator, strategy, metric):
                return row
        raise KeyError((estimator, strategy, metric))


METRICS = ("eps_ate", "sqrt_pehe")


def summarize(traces: Iterable[AcquisitionTrace], pct: float = 0.01, alpha: float = 0.05,
              min_traces: int = 2) -> Summary:
    """Aggregate traces grouped by (estimator, strategy).

    Samples-to-threshold means exclude censored traces (their number is
    reported). Curves give the per-iteration mean with a normal 95% interval.
    Significance compares every pair of strategies under one estimator with
    Welch's test at ``alpha``.
    """
    groups: dict[tuple[str, str], list[AcquisitionTrace]] = defaultdict(list)
    for tr in traces:
        if tr.failed is None:
            groups[(tr.estimator, tr.strategy)].append(tr)
    for key, trs in groups.items():
        if len(trs) < min_traces:
            raise EvaluationError(f"group {key} has {len(trs)} trace(s); need at least {min_traces}")
        trs.sort(key=lambda tr: tr.realization)

    efficiency, curves = [], []
    hits: dict[tuple[str, str, str], list[int]] = {}
    optimal_by_est: dict[str, dict[int, tuple[float, float]]] = defaultdict(dict)
    for (est, strat), trs in sorted(groups.items()):
        for tr in trs:
            optimal_by_est[est][tr.realization] = (tr.optimal_eps_ate, tr.optimal_sqrt_pehe)
        for metric in METRICS:
            found = [trace_samples_to_within(tr, metric, pct) for tr in trs]
            reached = [h for h in found if h is not None]
            hits[(est, strat, metric)] = reached
            efficiency.append(EfficiencyRow(
                est, strat, metric,
                float(np.mean(reached)) if reached else float("nan"),
                ci_half_width(reached) if len(reached) >= 2 else float("nan"),
                len(reached), len(found) - len(reached)))
            length = max(len(tr.records) for tr in trs)
            for i in range(length):
                vals = [tr.records[i].metric(metric) for tr in trs if i < len(tr.records)]
                n_acq = [tr.records[i].n_acquired for tr in trs if i < len(tr.records)]
                curves.append((est, strat, metric, i, float(np.mean(n_acq)), float(np.mean(vals)),
                               ci_half_width(vals) if len(vals) >= 2 else float("nan"), len(vals)))

    optimal = []
    for est, by_real in sorted(optimal_by_est.items()):
        arr = np.array([by_real[k] for k in sorted(by_real)])
        for j, metric in enumerate(METRICS):
            optimal.append((est, metric, float(arr[:, j].mean()), ci_half_width(arr[:, j]), len(arr)))

    significance = []
    for metric in METRICS:
        by_est = defaultdict(list)
        for (est, strat) in groups:
            by_est[est].append(strat)
        for est, strats in sorted(by_est.items()):
            strats = sorted(strats)
            for i, s1 in enumerate(strats):
                for s2 in strats[i + 1:]:
                    p = welch_pvalue(hits[(est, s1, metric)], hits[(est, s2, metric)])
                    significance.append((est, metric, s1, s2, p, bool(p < alpha)))
    return Summary(efficiency, optimal, curves, significance)


def variance_stop(eps_values: Sequence[float], sigma_sq: float | None, window: int = 5) -> bool:
    """Early-stop test on the spread of recent eps_ate values (simulation use only)."""
    if sigma_sq is None or len(eps_values) < window:
        return False
    return float(np.var(np.asarray(eps_values[-window:]), ddof=1)) <= sigma_sq


# ---------------------------------------------------------------------------
# Analysis exports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PCAResult:
    coords: np.ndarray
    eigenvalues: np.ndarray
    components: np.ndarray
    mean: np.ndarray


def pca_export(features, rank_tol: float = 1e-10) -> PCAResult:
    """Project rows onto the top two principal axes of their covariance.

    Each axis is signed so that its largest-magnitude loading is positive.
    """
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 3 or F.shape[1] < 2:
        raise EvaluationError("PCA export needs at least 3 rows and 2 features")
    mean = F.mean(axis=0)
    C = np.cov(F - mean, rowvar=False)
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1][:2]
    vals, vecs = vals[order], vecs[:, order].copy()
    for j in range(2):
        k = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[k, j] < 0:
            vecs[:, j] = -vecs[:, j]
    coords = (F - mean) @ vecs
    scale = max(float(vals[0]), 1.0) if vals.size else 1.0
    if vals[1] <= rank_tol * scale:
        log.warning("features have rank < 2; second principal coordinate set to zero")
        coords[:, 1] = 0.0
        vals = vals.copy()
        vals[1] = 0.0
    return PCAResult(coords, vals, vecs, mean)


def arm_counts(trace: AcquisitionTrace) -> list[tuple[int, int]]:
    """Cumulative (treated, control) acquisitions at every record of a trace."""
    return [(r.n_treated_acquired, r.n_control_acquired) for r in trace.records]


def arm_counts_from_batches(batches: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    """Cumulative (treated, control) counts from per-step lists of treatment labels."""
    out, nt, nc = [(0, 0)], 0, 0
    for batch in batches:
        nt += sum(1 for t in batch if t == 1)
        nc += sum(1 for t in batch if t == 0)
        out.append((nt, nc))
    return out


def early_control_fraction(trace: AcquisitionTrace, share: float = 0.2,
                           pool_size: int | None = None) -> float:
    """Fraction of control units among the first ``share`` of acquisitions."""
    labels = [t for batch in trace.acquired for (_, _, t) in batch]
    total = pool_size if pool_size is not None else len(labels)
    k = max(1, int(math.floor(share * total + 0.5)))
    head = labels[:k]
    if not head:
        return float("nan")
    return float(np.mean([1.0 if t == 0 else 0.0 for t in head]))


def group_traces(traces: Iterable[AcquisitionTrace]) -> Mapping[tuple[str, str], list[AcquisitionTrace]]:
    out = defaultdict(list)
    for tr in traces:
        out[(tr.estimator, tr.strategy)].append(tr)
    return out
