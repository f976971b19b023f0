"""CART decision trees grown best-first, and a bootstrap forest of them.

Splits minimize Gini impurity. Growth is best-first by total impurity
decrease, so a ``max_leaf_nodes`` cap keeps the most useful splits; with
no cap the resulting tree is identical to depth-first growth. Candidate
features are redrawn at every split. Vote ties predict the positive
class.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

# smallest impurity decrease worth a split; absorbs float noise
EPS_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray


def _best_split(X, y, idx, feats, min_samples_leaf):
    """Best (total_gain, feature, threshold) on this node, or None.

    Gain ties resolve to the earliest feature in ``feats`` and then the
    lowest threshold, keeping growth deterministic.
    """
    n = idx.size
    yk = y[idx]
    c1_total = int(yk.sum())
    if c1_total == 0 or c1_total == n:
        return None
    parent_gini = 1.0 - ((n - c1_total) ** 2 + c1_total**2) / (n * n)

    sub = X[np.ix_(idx, feats)]
    order = np.argsort(sub, axis=0, kind="stable")
    sv = np.take_along_axis(sub, order, axis=0)
    sy = yk[order]
    c1 = np.cumsum(sy, axis=0)[:-1, :]

    nl = np.arange(1, n, dtype=np.int64)[:, None]
    nr = n - nl
    valid = sv[:-1, :] < sv[1:, :]
    valid &= (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
    if not valid.any():
        return None

    l1 = c1
    l0 = nl - l1
    r1 = c1_total - l1
    r0 = nr - r1
    gini_l = 1.0 - (l0**2 + l1**2) / (nl * nl)
    gini_r = 1.0 - (r0**2 + r1**2) / (nr * nr)
    gain = parent_gini - (nl * gini_l + nr * gini_r) / n
    gain = np.where(valid, gain, -np.inf)

    fj, pos = divmod(int(np.argmax(gain.T)), n - 1)
    g = float(gain[pos, fj])
    if g <= EPS_GAIN:
        return None
    a, b = float(sv[pos, fj]), float(sv[pos + 1, fj])
    thr = 0.5 * (a + b)
    if thr >= b:  # midpoint rounded up to b; fall back so both sides stay non-empty
        thr = a
    return g * n, int(feats[fj]), thr


def build_tree(
    X,
    y,
    idx,
    rng,
    *,
    max_depth=None,
    min_samples_split=2,
    min_samples_leaf=1,
    max_leaf_nodes=None,
    max_features=1.0,
) -> Tree:
    n_cols = X.shape[1]
    m_feats = max(1, min(n_cols, math.ceil(max_features * n_cols)))
    all_feats = np.arange(n_cols)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    label: list[int] = []

    def new_node(rows) -> int:
        c1 = int(y[rows].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(1 if 2 * c1 >= rows.size else 0)
        return len(feature) - 1

    def candidate(node, rows, depth):
        if rows.size < min_samples_split:
            return None
        if max_depth is not None and depth >= max_depth:
            return None
        feats = (
            rng.choice(n_cols, size=m_feats, replace=False)
            if m_feats < n_cols
            else all_feats
        )
        found = _best_split(X, y, rows, feats, min_samples_leaf)
        if found is None:
            return None
        prio, f, thr = found
        return (-prio, next(tick), node, rows, depth, f, thr)

    tick = itertools.count()
    heap: list = []
    root_rows = np.asarray(idx)
    root = new_node(root_rows)
    entry = candidate(root, root_rows, 0)
    if entry is not None:
        heapq.heappush(heap, entry)

    leaves = 1
    cap = math.inf if max_leaf_nodes is None else max_leaf_nodes
    while heap and leaves < cap:
        _, _, node, rows, depth, f, thr = heapq.heappop(heap)
        mask = X[rows, f] <= thr
        li, ri = rows[mask], rows[~mask]
        ln, rn = new_node(li), new_node(ri)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = ln, rn
        leaves += 1
        for child, crows in ((ln, li), (rn, ri)):
            entry = candidate(child, crows, depth + 1)
            if entry is not None:
                heapq.heappush(heap, entry)

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        label=np.asarray(label, dtype=np.int64),
    )


def tree_predict(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        rows = np.flatnonzero(tree.feature[node] >= 0)
        if rows.size == 0:
            break
        cur = node[rows]
        go_left = X[rows, tree.feature[cur]] <= tree.threshold[cur]
        node[rows] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.label[node]


def fit(X: np.ndarray, y: np.ndarray, params: dict, seed: int) -> dict:
    n_estimators = int(params["n_estimators"])
    bootstrap = bool(params.get("bootstrap", True))
    n = X.shape[0]
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng((seed, t))
        rows = rng.integers(0, n, n) if bootstrap else np.arange(n)
        trees.append(
            build_tree(
                X,
                y,
                rows,
                rng,
                max_depth=params["max_depth"],
                min_samples_split=int(params["min_samples_split"]),
                min_samples_leaf=int(params["min_samples_leaf"]),
                max_leaf_nodes=params["max_leaf_nodes"],
                max_features=float(params["max_features"]),
            )
        )
    return {"trees": trees}


def predict(state: dict, X: np.ndarray) -> np.ndarray:
    trees = state["trees"]
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in trees:
        votes += tree_predict(tree, X)
    return (2 * votes >= len(trees)).astype(np.int64)
