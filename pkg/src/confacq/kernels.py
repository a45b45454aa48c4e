"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba
(``*_loop``) and a vectorized numpy version (``*_numpy``). The public name is
bound to one of them according to :mod:`confacq._accel`. Both versions are
kept bitwise-compatible where the algorithm allows it (tree growth) and agree
to rounding otherwise (kernel sums).
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "rbf_row_sums",
    "rbf_weighted_total",
    "build_tree",
    "forest_apply",
    "tree_capacity",
]

# rows per block in the numpy kernel-sum path; bounds the (rows, m, d) temporary
_BLOCK_ELEMS = 1 << 21


# ---------------------------------------------------------------------------
# RBF kernel sums
# ---------------------------------------------------------------------------

@njit
def rbf_row_sums_loop(Z, P, w, gamma):
    nz, d = Z.shape
    m = P.shape[0]
    out = np.zeros(nz)
    for i in range(nz):
        acc = 0.0
        for j in range(m):
            d2 = 0.0
            for k in range(d):
                diff = Z[i, k] - P[j, k]
                d2 += diff * diff
            acc += w[j] * math.exp(-gamma * d2)
        out[i] = acc
    return out


def rbf_row_sums_numpy(Z, P, w, gamma):
    Z = np.asarray(Z, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    nz, d = Z.shape
    m = P.shape[0]
    out = np.empty(nz)
    if nz == 0:
        return out
    step = max(1, _BLOCK_ELEMS // max(1, m * d))
    for lo in range(0, nz, step):
        diff = Z[lo:lo + step, None, :] - P[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[lo:lo + step] = np.exp(-gamma * d2) @ w
    return out


def rbf_weighted_total(P, Q, wP, wQ, gamma):
    """Return sum_ij wP_i wQ_j k(p_i, q_j) for the RBF kernel exp(-gamma |p-q|^2)."""
    if len(P) == 0 or len(Q) == 0:
        return 0.0
    return float(np.dot(wP, rbf_row_sums(P, Q, wQ, gamma)))


# ---------------------------------------------------------------------------
# Decision trees (binary labels, Gini, bootstrap multiplicity via repeated ids)
# ---------------------------------------------------------------------------

def tree_capacity(max_depth: int, n_boot: int) -> int:
    """Upper bound on node count for a binary tree of the given depth and sample size."""
    by_depth = (1 << (max_depth + 1)) - 1 if max_depth < 40 else 1 << 40
    return int(max(1, min(by_depth, 2 * n_boot - 1)))


@njit
def build_tree_loop(X, y, boot, feat_keys, max_depth, max_features, min_leaf):
    max_nodes = feat_keys.shape[0]
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)
    start = np.zeros(max_nodes, np.int64)
    stop = np.zeros(max_nodes, np.int64)
    depth = np.zeros(max_nodes, np.int64)
    stack = np.zeros(max_nodes, np.int64)

    idx = boot.copy()
    buf = np.empty_like(idx)
    vals = np.empty(idx.shape[0])
    stop[0] = idx.shape[0]
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top]
        s = start[node]
        e = stop[node]
        cnt = e - s
        pos = 0
        for k in range(s, e):
            pos += y[idx[k]]
        value[node] = pos / cnt
        if (depth[node] >= max_depth or pos == 0 or pos == cnt
                or cnt < 2 * min_leaf or n_nodes + 2 > max_nodes):
            continue
        neg = cnt - pos
        parent_score = (pos * pos + neg * neg) / cnt
        best_score = parent_score * (1.0 + 1e-12)
        best_f = -1
        best_thr = 0.0
        order = np.argsort(feat_keys[node])
        for j in range(max_features):
            f = order[j]
            for k in range(cnt):
                vals[k] = X[idx[s + k], f]
            o = np.argsort(vals[:cnt])
            cl1 = 0
            for k in range(cnt - 1):
                cl1 += y[idx[s + o[k]]]
                nl = k + 1
                nr = cnt - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                v0 = vals[o[k]]
                v1 = vals[o[k + 1]]
                if not v0 < v1:
                    continue
                cl0 = nl - cl1
                cr1 = pos - cl1
                cr0 = nr - cr1
                score = (cl1 * cl1 + cl0 * cl0) / nl + (cr1 * cr1 + cr0 * cr0) / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue
        # stable in-place partition of idx[s:e]
        nl = 0
        for k in range(s, e):
            if X[idx[k], best_f] <= best_thr:
                buf[s + nl] = idx[k]
                nl += 1
        nr = 0
        for k in range(s, e):
            if not X[idx[k], best_f] <= best_thr:
                buf[s + nl + nr] = idx[k]
                nr += 1
        for k in range(s, e):
            idx[k] = buf[k]
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        start[lc] = s
        stop[lc] = s + nl
        start[rc] = s + nl
        stop[rc] = e
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        stack[top] = rc
        stack[top + 1] = lc
        top += 2
    return feature, threshold, left, right, value, n_nodes


def build_tree_numpy(X, y, boot, feat_keys, max_depth, max_features, min_leaf):
    max_nodes = feat_keys.shape[0]
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)

    node_rows = {0: np.asarray(boot, dtype=np.int64)}
    depth = {0: 0}
    stack = [0]
    n_nodes = 1
    while stack:
        node = stack.pop()
        rows = node_rows.pop(node)
        cnt = rows.shape[0]
        labels = y[rows]
        pos = int(labels.sum())
        value[node] = pos / cnt
        if (depth[node] >= max_depth or pos == 0 or pos == cnt
                or cnt < 2 * min_leaf or n_nodes + 2 > max_nodes):
            continue
        neg = cnt - pos
        best_score = (pos * pos + neg * neg) / cnt * (1.0 + 1e-12)
        best_f = -1
        best_thr = 0.0
        nl_all = np.arange(1, cnt, dtype=np.int64)
        nr_all = cnt - nl_all
        size_ok = (nl_all >= min_leaf) & (nr_all >= min_leaf)
        for f in np.argsort(feat_keys[node])[:max_features]:
            vals = X[rows, f]
            o = np.argsort(vals, kind="stable")
            v = vals[o]
            cl1 = np.cumsum(labels[o])[:-1]
            cl0 = nl_all - cl1
            cr1 = pos - cl1
            cr0 = nr_all - cr1
            score = (cl1 * cl1 + cl0 * cl0) / nl_all + (cr1 * cr1 + cr0 * cr0) / nr_all
            ok = size_ok & (v[:-1] < v[1:])
            if not ok.any():
                continue
            score = np.where(ok, score, -np.inf)
            k = int(np.argmax(score))
            if score[k] > best_score:
                best_score = score[k]
                best_f = int(f)
                thr = 0.5 * (v[k] + v[k + 1])
                best_thr = v[k] if thr >= v[k + 1] else thr
        if best_f < 0:
            continue
        go_left = X[rows, best_f] <= best_thr
        lc, rc = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        node_rows[lc] = rows[go_left]
        node_rows[rc] = rows[~go_left]
        depth[lc] = depth[rc] = depth[node] + 1
        stack.append(rc)
        stack.append(lc)
    return feature, threshold, left, right, value, n_nodes


@njit
def forest_apply_loop(feature, threshold, left, right, value, X):
    n_trees = feature.shape[0]
    n = X.shape[0]
    out = np.empty((n_trees, n))
    for t in range(n_trees):
        for i in range(n):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[t, i] = value[t, node]
    return out


def forest_apply_numpy(feature, threshold, left, right, value, X):
    n_trees = feature.shape[0]
    n = X.shape[0]
    out = np.empty((n_trees, n))
    rows = np.arange(n)
    for t in range(n_trees):
        node = np.zeros(n, dtype=np.int64)
        f = feature[t, node]
        active = f >= 0
        while active.any():
            go_left = X[rows, np.where(active, f, 0)] <= threshold[t, node]
            nxt = np.where(go_left, left[t, node], right[t, node])
            node = np.where(active, nxt, node)
            f = feature[t, node]
            active = f >= 0
        out[t] = value[t, node]
    return out


if USE_NUMBA:
    rbf_row_sums = rbf_row_sums_loop
    build_tree = build_tree_loop
    forest_apply = forest_apply_loop
else:
    rbf_row_sums = rbf_row_sums_numpy
    build_tree = build_tree_numpy
    forest_apply = forest_apply_numpy
