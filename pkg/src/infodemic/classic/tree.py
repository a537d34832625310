"""CART trees over CSC matrices, shared by the forest and boosting models.

Trees are stored as flat arrays (feature, threshold, children, leaf value),
which keeps prediction a vectorised level-by-level walk and makes the
serialised form trivial.  Split search is delegated to the kernels
backend; the implicit-zero handling there makes growth cost proportional
to the stored entries of each node, not the node size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import kernels


@dataclass
class TreeArrays:
    feature: np.ndarray    # int64; -1 marks a leaf
    threshold: np.ndarray  # float64
    left: np.ndarray       # int32
    right: np.ndarray      # int32
    value: np.ndarray      # float64 leaf payload (class-1 fraction or regression value)
    n_samples: np.ndarray  # int64
    impurity: np.ndarray   # float64 (gini or variance, per node)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _node_impurity(criterion, count, total, total_sq):
    if criterion == kernels.GINI:
        p = total / count
        return 2.0 * p * (1.0 - p)
    mean = total / count
    return total_sq / count - mean * mean


def grow_tree(X: sp.csc_matrix, target: np.ndarray, criterion: int,
              rng: np.random.Generator, max_features: int | None = None,
              min_leaf: int = 1, max_depth: int | None = None,
              return_assignment: bool = False):
    """Grow one tree to purity (or the depth/leaf limits).

    ``target`` is the 0/1 label vector for gini or the residual vector for
    mse.  ``max_features`` draws a fresh random feature subset per split;
    None scans every column.  With ``return_assignment`` the per-row leaf
    node ids are returned too (used for boosting leaf updates).
    """
    n_rows, n_feats = X.shape
    data = X.data.astype(np.float64, copy=False)
    indices = X.indices.astype(np.int32, copy=False)
    indptr = X.indptr.astype(np.int32, copy=False)
    target = target.astype(np.float64, copy=False)
    all_cols = np.arange(n_feats, dtype=np.int64)
    in_node = np.zeros(n_rows, dtype=np.uint8)
    col_buf = np.zeros(n_rows, dtype=np.float64)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_samples: list[int] = []
    impurity: list[float] = []
    assignment = np.full(n_rows, -1, dtype=np.int32) if return_assignment else None

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        impurity.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n_rows, dtype=np.int64), 0)]
    while stack:
        node_id, rows, depth = stack.pop()
        count = len(rows)
        tsum = float(target[rows].sum())
        tsq = float((target[rows] * target[rows]).sum())
        imp = _node_impurity(criterion, count, tsum, tsq)
        n_samples[node_id] = count
        impurity[node_id] = imp
        value[node_id] = tsum / count

        is_pure = imp <= 1e-12
        depth_capped = max_depth is not None and depth >= max_depth
        if is_pure or depth_capped or count < 2 * min_leaf:
            if assignment is not None:
                assignment[rows] = node_id
            continue

        if max_features is not None and max_features < n_feats:
            cols = np.sort(rng.choice(n_feats, size=max_features, replace=False)).astype(np.int64)
        else:
            cols = all_cols
        in_node[rows] = 1
        col, thr, _score, _nl = kernels.best_split(
            data, indices, indptr, cols, in_node, target,
            count, tsum, tsq, criterion, min_leaf)
        in_node[rows] = 0

        if col < 0:
            if assignment is not None:
                assignment[rows] = node_id
            continue

        # partition rows on X[:, col] <= thr, zeros implicit
        s, e = indptr[col], indptr[col + 1]
        col_buf[indices[s:e]] = data[s:e]
        go_left = col_buf[rows] <= thr
        col_buf[indices[s:e]] = 0.0
        rows_l = rows[go_left]
        rows_r = rows[~go_left]
        if len(rows_l) == 0 or len(rows_r) == 0:  # safety net; kernel prevents this
            if assignment is not None:
                assignment[rows] = node_id
            continue

        feature[node_id] = int(col)
        threshold[node_id] = float(thr)
        left_id = new_node()
        right_id = new_node()
        left[node_id] = left_id
        right[node_id] = right_id
        stack.append((right_id, rows_r, depth + 1))
        stack.append((left_id, rows_l, depth + 1))

    tree = TreeArrays(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        n_samples=np.array(n_samples, dtype=np.int64),
        impurity=np.array(impurity, dtype=np.float64),
    )
    if return_assignment:
        return tree, assignment
    return tree


def tree_apply(tree: TreeArrays, X_dense: np.ndarray) -> np.ndarray:
    """Leaf node id of every row of a dense matrix."""
    n = X_dense.shape[0]
    nodes = np.zeros(n, dtype=np.int32)
    while True:
        feats = tree.feature[nodes]
        live = feats >= 0
        if not live.any():
            return nodes
        rows = np.flatnonzero(live)
        vals = X_dense[rows, feats[live]]
        thr = tree.threshold[nodes[live]]
        go_left = vals <= thr
        nodes[rows] = np.where(go_left, tree.left[nodes[live]], tree.right[nodes[live]])


def tree_predict_value(tree: TreeArrays, X_dense: np.ndarray) -> np.ndarray:
    return tree.value[tree_apply(tree, X_dense)]


def feature_importance(tree: TreeArrays, n_features: int) -> np.ndarray:
    """Impurity-decrease importance, weighted by node size (unnormalised)."""
    out = np.zeros(n_features, dtype=np.float64)
    for i in range(tree.n_nodes):
        f = tree.feature[i]
        if f < 0:
            continue
        l, r = tree.left[i], tree.right[i]
        decrease = (tree.n_samples[i] * tree.impurity[i]
                    - tree.n_samples[l] * tree.impurity[l]
                    - tree.n_samples[r] * tree.impurity[r])
        out[f] += decrease
    return out


def iter_dense_batches(X, batch: int = 512):
    """Yield (start, dense float64 block) over a CSR or dense matrix."""
    n = X.shape[0]
    for start in range(0, n, batch):
        stop = min(start + batch, n)
        block = X[start:stop]
        if sp.issparse(block):
            block = np.asarray(block.todense(), dtype=np.float64)
        else:
            block = np.asarray(block, dtype=np.float64)
        yield start, block
