"""k-nearest-neighbor classification over a kd-tree.

``leaf_size`` only sets the tree's leaf capacity. Neighbor order is
defined by (squared distance, row index), and pruning keeps boundary ties,
so every leaf size yields exactly the brute-force neighbor set.
"""

from __future__ import annotations

from bisect import insort

import numpy as np


class KdTree:
    """Median-split kd-tree over the rows of a fixed matrix."""

    def __init__(self, X: np.ndarray, leaf_size: int):
        self.X = X
        self.leaf_size = max(1, int(leaf_size))
        self.dim: list[int] = []
        self.split: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_rows: list[np.ndarray | None] = []
        if X.shape[0]:
            self._build(np.arange(X.shape[0]))

    def _new_node(self) -> int:
        self.dim.append(-1)
        self.split.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_rows.append(None)
        return len(self.dim) - 1

    def _build(self, rows: np.ndarray) -> int:
        node = self._new_node()
        if rows.size <= self.leaf_size:
            self.leaf_rows[node] = rows
            return node
        sub = self.X[rows]
        spread = sub.max(axis=0) - sub.min(axis=0)
        d = int(np.argmax(spread))
        if spread[d] == 0.0:
            # all points coincide; nothing to split on
            self.leaf_rows[node] = rows
            return node
        vals = sub[:, d]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        # cut at the value boundary nearest the median so both sides are
        # non-empty even with heavy duplication
        cut = self._boundary_near(sv, rows.size // 2)
        self.dim[node] = d
        self.split[node] = float(sv[cut - 1])
        self.left[node] = self._build(rows[order[:cut]])
        self.right[node] = self._build(rows[order[cut:]])
        return node

    @staticmethod
    def _boundary_near(sv: np.ndarray, mid: int) -> int:
        n = sv.size
        for off in range(n):
            for cut in (mid - off, mid + off):
                if 0 < cut < n and sv[cut - 1] < sv[cut]:
                    return cut
        raise AssertionError("no boundary in a spread > 0 column")

    def query(self, q: np.ndarray, k: int) -> list[tuple[float, int]]:
        """The k nearest rows as (squared distance, row index), ascending."""
        k = min(k, self.X.shape[0])
        best: list[tuple[float, int]] = []
        if k:
            self._visit(0, q, k, best)
        return best

    def _visit(self, node: int, q: np.ndarray, k: int, best: list) -> None:
        rows = self.leaf_rows[node]
        if rows is not None:
            diff = self.X[rows] - q
            d2s = np.einsum("ij,ij->i", diff, diff)
            for d2, i in zip(d2s, rows):
                cand = (float(d2), int(i))
                if len(best) < k:
                    insort(best, cand)
                elif cand < best[-1]:
                    best.pop()
                    insort(best, cand)
            return
        d = self.dim[node]
        delta = float(q[d]) - self.split[node]
        near, far = (
            (self.left[node], self.right[node])
            if delta <= 0.0
            else (self.right[node], self.left[node])
        )
        self._visit(near, q, k, best)
        # the far half-space is at least delta^2 away; equality must still
        # be visited because an equally distant row may have a lower index
        if len(best) < k or delta * delta <= best[-1][0]:
            self._visit(far, q, k, best)


def fit(X: np.ndarray, y: np.ndarray, params: dict, seed: int) -> dict:
    return {
        "X": X,
        "y": y,
        "leaf_size": int(params["leaf_size"]),
        "n_neighbors": int(params["n_neighbors"]),
    }


def predict(state: dict, X: np.ndarray) -> np.ndarray:
    tree = state.get("_tree")
    if tree is None:
        tree = KdTree(state["X"], state["leaf_size"])
        state["_tree"] = tree  # cache; rebuilt after JSON round-trips
    k = state["n_neighbors"]
    y = state["y"]
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, q in enumerate(X):
        hits = tree.query(q, k)
        votes = int(sum(y[idx] for _, idx in hits))
        out[i] = 1 if 2 * votes >= len(hits) else 0
    return out
