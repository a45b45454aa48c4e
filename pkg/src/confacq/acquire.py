"""Acquisition strategies: Random, Uncertainty, Covariate Balancing, Outcome Error.

Strategies see only observed data: pool rows carry ``(x, t, y)``, train rows
additionally carry the acquired confounder ``a``. Each returns pool row ids in
selection order (best first), at most ``batch_size`` of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from . import kernels
from .data_model import as_seed_sequence
from .estimators.attribute import AttributeModel
from .estimators.effect import EffectEstimator, design

STRATEGIES = ("random", "uncertainty", "cb", "oe")
SCORING_MODES = ("independent", "greedy_sequential")


class AcquisitionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Views over observed data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoolView:
    rows: np.ndarray
    x: np.ndarray
    t: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class TrainView:
    rows: np.ndarray
    x: np.ndarray
    a: np.ndarray
    t: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.rows)

    def features(self) -> np.ndarray:
        return design(self.x, self.a)


# ---------------------------------------------------------------------------
# Config types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    bandwidth: float | str = "median_heuristic"

    def __post_init__(self):
        if self.kind != "rbf":
            raise AcquisitionError(f"unsupported kernel {self.kind!r}")
        if self.bandwidth != "median_heuristic":
            if not (isinstance(self.bandwidth, (int, float)) and self.bandwidth > 0):
                raise AcquisitionError("bandwidth must be positive or 'median_heuristic'")

    def resolve(self, points) -> float:
        if self.bandwidth != "median_heuristic":
            return float(self.bandwidth)
        points = np.asarray(points, dtype=np.float64)
        if points.shape[0] < 2:
            return 1.0
        med = float(np.median(pdist(points)))
        return med if med > 0 else 1.0


def gamma_of(bandwidth: float) -> float:
    return 1.0 / (2.0 * bandwidth * bandwidth)


@dataclass(frozen=True)
class AcquisitionRequest:
    strategy: str
    batch_size: int = 10
    kernel: KernelSpec = KernelSpec()
    scoring_mode: str = "independent"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise AcquisitionError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if int(self.batch_size) < 1:
            raise AcquisitionError("batch_size must be at least 1")
        if self.scoring_mode not in SCORING_MODES:
            raise AcquisitionError(f"unknown scoring_mode {self.scoring_mode!r}")

    def batch_for(self, pool_size: int) -> int:
        return min(int(self.batch_size), int(pool_size))


class ScoredCandidate(NamedTuple):
    id: int
    score: float
    tiebreak: float


def tiebreak_keys(rows, seed) -> np.ndarray:
    """Uniform keys in [0, 1) that depend only on (seed, row), not on pool order."""
    rows = np.asarray(rows, dtype=np.uint64)
    s = as_seed_sequence(seed).generate_state(1, np.uint64)[0]
    with np.errstate(over="ignore"):
        z = rows * np.uint64(0x9E3779B97F4A7C15) + s
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def rank(rows, scores, seed, largest: bool = True) -> list[ScoredCandidate]:
    """Order candidates by score (largest first unless ``largest=False``), ties by seeded key."""
    rows = np.asarray(rows)
    scores = np.asarray(scores, dtype=np.float64)
    keys = tiebreak_keys(rows, seed)
    primary = -scores if largest else scores
    order = np.lexsort((keys, primary))
    return [ScoredCandidate(int(rows[i]), float(scores[i]), float(keys[i])) for i in order]


def _top(rows, scores, k, seed, largest=True) -> np.ndarray:
    ranked = rank(rows, scores, seed, largest)
    return np.array([c.id for c in ranked[:k]], dtype=np.int64)


# ---------------------------------------------------------------------------
# Maximum mean discrepancy
# ---------------------------------------------------------------------------

def _as_points(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    return np.ascontiguousarray(u)


def _weights(w, n):
    return np.ones(n) if w is None else np.asarray(w, dtype=np.float64)


def mmd_from_sums(s_uu, s_vv, s_uv, w_u, w_v) -> float:
    sq = s_uu / (w_u * w_u) + s_vv / (w_v * w_v) - 2.0 * s_uv / (w_u * w_v)
    return float(np.sqrt(np.maximum(sq, 0.0)))


def mmd(u, v, kernel: KernelSpec | float = KernelSpec(), wu=None, wv=None) -> float:
    """Biased (V-statistic) RBF MMD between two weighted point sets.

    ``kernel`` may be a bandwidth. With the median heuristic the bandwidth is
    taken over the union of both sets.
    """
    u, v = _as_points(u), _as_points(v)
    if u.shape[0] == 0 or v.shape[0] == 0:
        raise AcquisitionError("MMD needs two non-empty sets")
    if not isinstance(kernel, KernelSpec):
        kernel = KernelSpec(bandwidth=float(kernel))
    g = gamma_of(kernel.resolve(np.vstack([u, v])))
    wu, wv = _weights(wu, len(u)), _weights(wv, len(v))
    return mmd_from_sums(kernels.rbf_weighted_total(u, u, wu, wu, g),
                         kernels.rbf_weighted_total(v, v, wv, wv, g),
                         kernels.rbf_weighted_total(u, v, wu, wv, g),
                         wu.sum(), wv.sum())


class BalanceState:
    """Treated/control point sets with cached RBF kernel sums.

    ``add`` updates the within- and between-set sums incrementally, so the MMD
    of the current sets and the MMD after adding a candidate cost one kernel
    row per candidate rather than a full recomputation.
    """

    def __init__(self, treated, control, bandwidth: float, w_treated=None, w_control=None):
        self.bandwidth = float(bandwidth)
        self.gamma = gamma_of(self.bandwidth)
        self.points = {1: _as_points(treated), 0: _as_points(control)}
        self.w = {1: _weights(w_treated, len(self.points[1])),
                  0: _weights(w_control, len(self.points[0]))}
        if len(self.points[1]) == 0 or len(self.points[0]) == 0:
            raise AcquisitionError("balancing needs at least one treated and one control point")
        g = self.gamma
        P, W = self.points, self.w
        self.s_tt = kernels.rbf_weighted_total(P[1], P[1], W[1], W[1], g)
        self.s_cc = kernels.rbf_weighted_total(P[0], P[0], W[0], W[0], g)
        self.s_tc = kernels.rbf_weighted_total(P[1], P[0], W[1], W[0], g)

    def _self_sum(self, arm):
        return self.s_tt if arm == 1 else self.s_cc

    def mmd(self) -> float:
        return mmd_from_sums(self.s_tt, self.s_cc, self.s_tc, self.w[1].sum(), self.w[0].sum())

    def mmd_after_adding(self, z, arm: int) -> np.ndarray:
        """MMD after adding each row of ``z`` (weight 1) to the given arm, one at a time."""
        z = _as_points(z)
        g = self.gamma
        own = kernels.rbf_row_sums(z, self.points[arm], self.w[arm], g)
        other = kernels.rbf_row_sums(z, self.points[1 - arm], self.w[1 - arm], g)
        w_own = self.w[arm].sum() + 1.0
        w_other = self.w[1 - arm].sum()
        s_own = self._self_sum(arm) + 2.0 * own + 1.0
        s_other = self._self_sum(1 - arm)
        s_cross = self.s_tc + other
        sq = s_own / (w_own * w_own) + s_other / (w_other * w_other) - 2.0 * s_cross / (w_own * w_other)
        return np.sqrt(np.maximum(sq, 0.0))

    def add(self, z, arm: int, weights=None) -> None:
        z = _as_points(z)
        w = _weights(weights, len(z))
        g = self.gamma
        own = float(np.dot(w, kernels.rbf_row_sums(z, self.points[arm], self.w[arm], g)))
        cross = float(np.dot(w, kernels.rbf_row_sums(z, self.points[1 - arm], self.w[1 - arm], g)))
        inner = kernels.rbf_weighted_total(z, z, w, w, g)
        if arm == 1:
            self.s_tt += 2.0 * own + inner
        else:
            self.s_cc += 2.0 * own + inner
        self.s_tc += cross
        self.points[arm] = np.vstack([self.points[arm], z])
        self.w[arm] = np.concatenate([self.w[arm], w])


def _with_a(x, a_value: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.hstack([x, np.full((x.shape[0], 1), a_value)])


def expected_mmd_after_add(x, t: int, p_a1: float, treated, control,
                           kernel: KernelSpec | float) -> float:
    """Expected treated/control MMD after adding one candidate whose confounder is unknown.

    ``treated``/``control`` are the current train feature sets ``(x, a)``; the
    candidate's ``a`` is enumerated over {0, 1} with weights ``1 - p_a1`` and
    ``p_a1``.
    """
    treated, control = _as_points(treated), _as_points(control)
    if len(treated) == 0 or len(control) == 0:
        raise AcquisitionError("both arms must be non-empty")
    if not isinstance(kernel, KernelSpec):
        kernel = KernelSpec(bandwidth=float(kernel))
    bw = kernel.resolve(np.vstack([treated, control]))
    state = BalanceState(treated, control, bw)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    m1 = state.mmd_after_adding(_with_a(x, 1.0), int(t))[0]
    m0 = state.mmd_after_adding(_with_a(x, 0.0), int(t))[0]
    return float(p_a1 * m1 + (1.0 - p_a1) * m0)


def expected_mmd_scores(state: BalanceState, x, t, p_a1) -> np.ndarray:
    """Vectorized expected MMD for every candidate row (each scored on its own)."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t).astype(np.int64)
    p_a1 = np.asarray(p_a1, dtype=np.float64)
    out = np.empty(x.shape[0])
    for arm in (0, 1):
        sel = np.flatnonzero(t == arm)
        if sel.size == 0:
            continue
        m1 = state.mmd_after_adding(_with_a(x[sel], 1.0), arm)
        m0 = state.mmd_after_adding(_with_a(x[sel], 0.0), arm)
        out[sel] = p_a1[sel] * m1 + (1.0 - p_a1[sel]) * m0
    return out


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

def select_random(pool_rows, request: AcquisitionRequest, seed) -> np.ndarray:
    pool_rows = np.asarray(pool_rows, dtype=np.int64)
    k = request.batch_for(len(pool_rows))
    keys = tiebreak_keys(pool_rows, seed)
    return pool_rows[np.argsort(keys, kind="stable")[:k]]


def select_uncertainty(pool: PoolView, attribute_model: AttributeModel,
                       request: AcquisitionRequest, seed=None) -> np.ndarray:
    p = attribute_model.predict(pool.x, pool.t)
    scores = -np.abs(p - 0.5)
    return _top(pool.rows, scores, request.batch_for(len(pool)), seed)


def select_cb(pool: PoolView, train: TrainView, attribute_model: AttributeModel,
              request: AcquisitionRequest, seed=None) -> np.ndarray:
    k = request.batch_for(len(pool))
    feats = train.features()
    t_train = np.asarray(train.t).astype(np.int64)
    if not ((t_train == 1).any() and (t_train == 0).any()):
        raise AcquisitionError("covariate balancing needs both arms in the training set")
    bw = request.kernel.resolve(feats)
    state = BalanceState(feats[t_train == 1], feats[t_train == 0], bw)
    p_a1 = attribute_model.predict(pool.x, pool.t)
    scores = expected_mmd_scores(state, pool.x, pool.t, p_a1)
    if request.scoring_mode == "independent" or k <= 1:
        return _top(pool.rows, scores, k, seed, largest=False)

    chosen: list[int] = []
    remaining = np.ones(len(pool), dtype=bool)
    keys = tiebreak_keys(pool.rows, seed)
    for _ in range(k):
        idx = np.flatnonzero(remaining)
        best = idx[np.lexsort((keys[idx], scores[idx]))[0]]
        chosen.append(int(pool.rows[best]))
        remaining[best] = False
        arm = int(pool.t[best])
        xb = pool.x[best:best + 1]
        state.add(np.vstack([_with_a(xb, 1.0), _with_a(xb, 0.0)]), arm,
                  weights=[p_a1[best], 1.0 - p_a1[best]])
        if remaining.any():
            idx = np.flatnonzero(remaining)
            scores[idx] = expected_mmd_scores(state, pool.x[idx], pool.t[idx], p_a1[idx])
    return np.array(chosen, dtype=np.int64)


def outcome_error_scores(pool: PoolView, p_a1, estimator: EffectEstimator) -> np.ndarray:
    """|E_{A ~ p(A|x,t)}[y_hat(x, A, t)] - y| for every pool row."""
    p_a1 = np.asarray(p_a1, dtype=np.float64)
    n = len(pool)
    y_a1 = estimator.predict_outcome(pool.x, np.ones(n), pool.t)
    y_a0 = estimator.predict_outcome(pool.x, np.zeros(n), pool.t)
    return np.abs(p_a1 * y_a1 + (1.0 - p_a1) * y_a0 - pool.y)


def check_outcome_error_capable(estimator) -> None:
    if not getattr(estimator, "predicts_factual_outcome", False):
        name = getattr(estimator, "kind", type(estimator).__name__)
        raise AcquisitionError(f"estimator {name!r} cannot predict factual outcomes; "
                               "the outcome-error strategy needs them")


def select_oe(pool: PoolView, train: TrainView | None, attribute_model: AttributeModel,
              estimator: EffectEstimator, request: AcquisitionRequest, seed=None) -> np.ndarray:
    check_outcome_error_capable(estimator)
    p_a1 = attribute_model.predict(pool.x, pool.t)
    scores = outcome_error_scores(pool, p_a1, estimator)
    return _top(pool.rows, scores, request.batch_for(len(pool)), seed)


def select(request: AcquisitionRequest, pool: PoolView, train: TrainView,
           attribute_model: AttributeModel | None, estimator: EffectEstimator | None,
           seed) -> np.ndarray:
    """Dispatch on ``request.strategy``."""
    if len(pool) == 0:
        return np.empty(0, dtype=np.int64)
    if request.strategy == "random":
        return select_random(pool.rows, request, seed)
    if attribute_model is None:
        raise AcquisitionError(f"strategy {request.strategy!r} needs an attribute model")
    if request.strategy == "uncertainty":
        return select_uncertainty(pool, attribute_model, request, seed)
    if request.strategy == "cb":
        return select_cb(pool, train, attribute_model, request, seed)
    if estimator is None:
        raise AcquisitionError("the outcome-error strategy needs a fitted estimator")
    return select_oe(pool, train, attribute_model, estimator, request, seed)


def score_candidates(request: AcquisitionRequest, pool: PoolView, train: TrainView,
                     attribute_model: AttributeModel | None, estimator: EffectEstimator | None,
                     seed) -> list[ScoredCandidate]:
    """Every pool row with its strategy score, in selection order (independent scoring)."""
    s = request.strategy
    if s == "random":
        return rank(pool.rows, tiebreak_keys(pool.rows, seed), seed, largest=False)
    if attribute_model is None:
        raise AcquisitionError(f"strategy {s!r} needs an attribute model")
    p_a1 = attribute_model.predict(pool.x, pool.t)
    if s == "uncertainty":
        return rank(pool.rows, -np.abs(p_a1 - 0.5), seed)
    if s == "cb":
        feats = train.features()
        t_train = np.asarray(train.t).astype(np.int64)
        if not ((t_train == 1).any() and (t_train == 0).any()):
            raise AcquisitionError("covariate balancing needs both arms in the training set")
        state = BalanceState(feats[t_train == 1], feats[t_train == 0], request.kernel.resolve(feats))
        return rank(pool.rows, expected_mmd_scores(state, pool.x, pool.t, p_a1), seed, largest=False)
    if estimator is None:
        raise AcquisitionError("the outcome-error strategy needs a fitted estimator")
    check_outcome_error_capable(estimator)
    return rank(pool.rows, outcome_error_scores(pool, p_a1, estimator), seed)


def needs_attribute_model(strategy: str) -> bool:
    return strategy != "random"


__all__: Sequence[str] = [
    "AcquisitionError", "AcquisitionRequest", "BalanceState", "KernelSpec", "PoolView",
    "STRATEGIES", "ScoredCandidate", "TrainView", "expected_mmd_after_add",
    "expected_mmd_scores", "mmd", "outcome_error_scores", "rank", "score_candidates",
    "select", "select_cb",
    "select_oe", "select_random", "select_uncertainty", "tiebreak_keys",
]
