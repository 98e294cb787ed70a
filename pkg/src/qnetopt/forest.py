"""Random forest regression: bootstrapped CART trees with variance-reduction splits.

Trees are stored flat (parallel node arrays); growth and the batch tree walk
are the hot kernels. All randomness (bootstrap rows, per-node feature
subsets) is drawn outside the kernels, so the numba and numpy paths match
bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .errors import InsufficientDataError


@dataclass(frozen=True)
class RfSettings:
    n_trees: int = 100
    max_depth: int = 0  # 0 means unlimited
    min_samples_split: int = 2
    max_features: int = 0  # 0 means max(1, ceil(dim / 3))
    bootstrap: bool = True

    def features_per_split(self, dim: int) -> int:
        if self.max_features > 0:
            return min(self.max_features, dim)
        return max(1, math.ceil(dim / 3))


@njit
def _grow_tree(X, y, rows, feat_u, max_depth, min_split, k):
    """Grow one tree with an explicit stack; feat_u[slot] holds the uniforms
    that pick the feature subset tried at that node."""
    n = rows.shape[0]
    dim = X.shape[1]
    max_nodes = 2 * n
    feature = np.full(max_nodes, -1, dtype=np.int64)
    thr = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)
    idx = rows.copy()
    scratch = np.empty(n, dtype=np.int64)
    perm = np.empty(dim, dtype=np.int64)
    stack = np.empty((max_nodes, 4), dtype=np.int64)  # lo, hi, depth, slot
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        lo = stack[sp, 0]
        hi = stack[sp, 1]
        depth = stack[sp, 2]
        slot = stack[sp, 3]
        m = hi - lo
        total = 0.0
        for t in range(lo, hi):
            total += y[idx[t]]
        value[slot] = total / m
        if m < min_split:
            continue
        if max_depth > 0 and depth >= max_depth:
            continue
        first = y[idx[lo]]
        constant = True
        for t in range(lo + 1, hi):
            if y[idx[t]] != first:
                constant = False
                break
        if constant:
            continue
        # partial Fisher-Yates: perm[:k] is the feature subset for this node
        for d0 in range(dim):
            perm[d0] = d0
        for t in range(k):
            j = t + int(feat_u[slot, t] * (dim - t))
            tmp = perm[t]
            perm[t] = perm[j]
            perm[j] = tmp
        best_sse = np.inf
        best_f = -1
        best_thr = 0.0
        x = np.empty(m)
        yv = np.empty(m)
        for fi in range(k):
            f = perm[fi]
            for t in range(m):
                x[t] = X[idx[lo + t], f]
            order = np.argsort(x, kind="mergesort")
            tsum = 0.0
            tsq = 0.0
            for t in range(m):
                v = y[idx[lo + order[t]]]
                yv[t] = v
                tsum += v
                tsq += v * v
            lsum = 0.0
            lsq = 0.0
            for t in range(1, m):
                v = yv[t - 1]
                lsum += v
                lsq += v * v
                a = x[order[t - 1]]
                b = x[order[t]]
                if a == b:
                    continue
                rsum = tsum - lsum
                rsq = tsq - lsq
                sse = (lsq - lsum * lsum / t) + (rsq - rsum * rsum / (m - t))
                if sse < best_sse:
                    best_sse = sse
                    best_f = f
                    best_thr = 0.5 * (a + b)
        if best_f < 0:
            continue
        # stable partition of idx[lo:hi] by x <= threshold
        nl = 0
        for t in range(lo, hi):
            if X[idx[t], best_f] <= best_thr:
                scratch[nl] = idx[t]
                nl += 1
        nr = nl
        for t in range(lo, hi):
            if X[idx[t], best_f] > best_thr:
                scratch[nr] = idx[t]
                nr += 1
        for t in range(m):
            idx[lo + t] = scratch[t]
        feature[slot] = best_f
        thr[slot] = best_thr
        left[slot] = n_nodes
        right[slot] = n_nodes + 1
        stack[sp, 0] = lo
        stack[sp, 1] = lo + nl
        stack[sp, 2] = depth + 1
        stack[sp, 3] = n_nodes
        stack[sp + 1, 0] = lo + nl
        stack[sp + 1, 1] = hi
        stack[sp + 1, 2] = depth + 1
        stack[sp + 1, 3] = n_nodes + 1
        sp += 2
        n_nodes += 2
    return feature[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@njit
def _predict_tree(X, feat, thr, left, right, value, out):
    for i in range(X.shape[0]):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


class ForestHead:
    """Single-output forest; prediction is the mean over tree outputs."""

    def __init__(self, trees):
        self.trees = trees

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        for feat, thr, left, right, value in self.trees:
            _predict_tree(X, feat, thr, left, right, value, out)
        return out / len(self.trees)

    def to_jsonable(self) -> dict:
        return {
            "trees": [
                {
                    "feature": t[0].tolist(),
                    "threshold": t[1].tolist(),
                    "left": t[2].tolist(),
                    "right": t[3].tolist(),
                    "value": t[4].tolist(),
                }
                for t in self.trees
            ]
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "ForestHead":
        trees = [
            (
                np.asarray(t["feature"], dtype=np.int64),
                np.asarray(t["threshold"], dtype=np.float64),
                np.asarray(t["left"], dtype=np.int64),
                np.asarray(t["right"], dtype=np.int64),
                np.asarray(t["value"], dtype=np.float64),
            )
            for t in obj["trees"]
        ]
        return cls(trees)


def fit_forest(X: np.ndarray, y: np.ndarray, settings: RfSettings, rng: np.random.Generator) -> ForestHead:
    """Fit one forest to a single target column."""
    n = X.shape[0]
    if n == 0:
        raise InsufficientDataError("cannot fit a forest on an empty dataset")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    k = settings.features_per_split(X.shape[1])
    trees = []
    for _ in range(settings.n_trees):
        if settings.bootstrap:
            rows = rng.integers(0, n, size=n).astype(np.int64)
        else:
            rows = np.arange(n, dtype=np.int64)
        feat_u = rng.random((2 * n, k))
        trees.append(
            _grow_tree(X, y, rows, feat_u, settings.max_depth, settings.min_samples_split, k)
        )
    return ForestHead(trees)
