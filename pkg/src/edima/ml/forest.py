"""Random forest built on the shared split kernel.

Trees are stored as flat parallel arrays in preorder; node i is a leaf
iff feature[i] == -1, and every node carries the class counts of the
training rows that reached it. Growth is deterministic for a given seed:
tree t draws its bootstrap first, then one feature subset per impure
node in preorder, all from the stream seeded by derive_seed(seed, t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..rng import Stream, derive_seed


@dataclass
class Tree:
    feature: np.ndarray    # i8, -1 marks a leaf
    threshold: np.ndarray  # f8
    left: np.ndarray       # i8 child index, -1 at leaves
    right: np.ndarray
    n0: np.ndarray         # benign rows at the node
    n1: np.ndarray         # malicious rows at the node

    def __len__(self) -> int:
        return int(self.feature.shape[0])


def grow_tree(x: np.ndarray, y: np.ndarray, stream: Stream) -> Tree:
    """One tree over rows (x, y), grown until pure or < 2 rows.

    Per impure node: draw ceil(sqrt(d)) candidate features from `stream`,
    split on the best valid Gini score; when none of the drawn features
    admits a split, the remaining features are tried in index order
    before giving up (the subset size is a soft cap, so purity stays
    reachable whenever any feature still varies inside the node).
    """
    d = x.shape[1]
    m = int(math.ceil(math.sqrt(d)))
    feature: list = []
    threshold: list = []
    left: list = []
    right: list = []
    n0: list = []
    n1: list = []

    def build(rows: np.ndarray) -> int:
        idx = len(feature)
        yy = y[rows]
        ones = int(yy.sum())
        zeros = int(rows.shape[0]) - ones
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n0.append(zeros)
        n1.append(ones)
        if zeros == 0 or ones == 0 or rows.shape[0] < 2:
            return idx

        cand = stream.sample_without_replacement(d, m)
        best_score = -1.0
        best_thr = 0.0
        best_f = -1
        for f in cand:
            score, thr, valid = kernels.best_split(x[rows, int(f)], yy)
            if valid and score > best_score:
                best_score, best_thr, best_f = score, thr, int(f)
        if best_f < 0:
            drawn = set(int(f) for f in cand)
            for f in range(d):
                if f in drawn:
                    continue
                score, thr, valid = kernels.best_split(x[rows, f], yy)
                if valid and score > best_score:
                    best_score, best_thr, best_f = score, thr, f
        if best_f < 0:
            # identical rows with mixed labels; nothing can separate them
            return idx

        go_left = x[rows, best_f] <= best_thr
        feature[idx] = best_f
        threshold[idx] = best_thr
        left[idx] = build(rows[go_left])
        right[idx] = build(rows[~go_left])
        return idx

    build(np.arange(x.shape[0], dtype=np.int64))
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        n0=np.asarray(n0, dtype=np.int64),
        n1=np.asarray(n1, dtype=np.int64),
    )


def rf_fit(x: np.ndarray, y: np.ndarray, n_trees: int, seed: int) -> list:
    """Bootstrap-and-grow; tree t is fully determined by derive_seed(seed, t)."""
    n = x.shape[0]
    trees = []
    for t in range(n_trees):
        stream = Stream(derive_seed(seed, t))
        boot = stream.choice_block(n, n)
        trees.append(grow_tree(x[boot], y[boot], stream))
    return trees


def tree_votes(tree: Tree, xq: np.ndarray) -> np.ndarray:
    """Per query row: 1 if the reached leaf leans malicious, else 0."""
    nq = xq.shape[0]
    out = np.zeros(nq, dtype=np.int64)
    for i in range(nq):
        node = 0
        while tree.feature[node] >= 0:
            if xq[i, tree.feature[node]] <= tree.threshold[node]:
                node = int(tree.left[node])
            else:
                node = int(tree.right[node])
        out[i] = 1 if tree.n1[node] >= tree.n0[node] else 0
    return out


def rf_votes(trees: list, xq: np.ndarray) -> np.ndarray:
    """Number of trees voting malicious for each query row."""
    total = np.zeros(xq.shape[0], dtype=np.int64)
    for tree in trees:
        total += tree_votes(tree, xq)
    return total
