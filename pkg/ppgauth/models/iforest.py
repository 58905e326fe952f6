"""
Isolation Forest
────────────────
Trees are flat arrays (feature, threshold, left, right, size); feature −1
marks a leaf. Anomaly score s(x) = 2^(−E[h(x)] / c(ψ)) lies in (0, 1);
evaluation uses −s as the genuine score.
"""
from __future__ import annotations

import math
from typing import Any

import numpy as np
from pydantic import BaseModel
from scipy.special import digamma

from ppgauth.models.kernel import check_finite
from ppgauth.schemas import ArrayModel
from ppgauth.utils.codec import decode_array, encode_array

LEAF = -1


def average_path_length(n: int | np.ndarray) -> np.ndarray:
    """c(n) = 2H(n−1) − 2(n−1)/n, with c(n) = 0 for n ≤ 1."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    big = n > 1
    m = n[big]
    out[big] = 2.0 * (digamma(m) + np.euler_gamma) - 2.0 * (m - 1.0) / m
    return out


class IsolationTree(ArrayModel):
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray

    def path_length(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        depth = np.zeros(x.shape[0])
        rows = np.arange(x.shape[0])
        while True:
            inner = self.feature[node] != LEAF
            if not inner.any():
                break
            r, nd = rows[inner], node[inner]
            go_left = x[r, self.feature[nd]] < self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])
            depth[inner] += 1.0
        return depth + average_path_length(self.size[node])

    def to_payload(self) -> dict[str, Any]:
        return {k: encode_array(getattr(self, k)) for k in ("feature", "threshold", "left", "right", "size")}

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> IsolationTree:
        ints = {k: decode_array(payload[k]).astype(np.int64) for k in ("feature", "left", "right", "size")}
        return cls(threshold=decode_array(payload["threshold"]), **ints)


def build_tree(x: np.ndarray, height_limit: int, rng: np.random.Generator) -> IsolationTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    size: list[int] = []

    def new_node(count: int) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        size.append(count)
        return len(feature) - 1

    stack = [(new_node(x.shape[0]), np.arange(x.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= height_limit or rows.size <= 1:
            continue
        sub = x[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if splittable.size == 0:
            continue
        f = int(rng.choice(splittable))
        t = float(rng.uniform(lo[f], hi[f]))
        goes_left = sub[:, f] < t
        l_node = new_node(int(goes_left.sum()))
        r_node = new_node(int((~goes_left).sum()))
        feature[node], threshold[node], left[node], right[node] = f, t, l_node, r_node
        stack.append((r_node, rows[~goes_left], depth + 1))
        stack.append((l_node, rows[goes_left], depth + 1))

    return IsolationTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        size=np.array(size, dtype=np.int64),
    )


class IsolationForestModel(BaseModel):
    trees: list[IsolationTree]
    max_samples: int
    n_trees: int
    seed: int

    @property
    def normalizer(self) -> float:
        return float(average_path_length(self.max_samples))

    @property
    def height_limit(self) -> int:
        return math.ceil(math.log2(self.max_samples)) if self.max_samples > 1 else 0

    def anomaly_score(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        mean_path = np.mean([tree.path_length(x) for tree in self.trees], axis=0)
        c = self.normalizer
        return np.power(2.0, -mean_path / c) if c > 0 else np.full(x.shape[0], 0.5)

    def to_payload(self) -> dict[str, Any]:
        return {"trees": [tree.to_payload() for tree in self.trees]}

    @classmethod
    def from_payload(cls, payload: dict[str, Any], hyper: dict[str, Any], seed: int) -> IsolationForestModel:
        return cls(
            trees=[IsolationTree.from_payload(t) for t in payload["trees"]],
            max_samples=int(hyper["max_samples"]),
            n_trees=int(hyper["n_trees"]),
            seed=seed,
        )


def iforest_fit(x: np.ndarray, n_trees: int = 100, max_samples: int = 256, seed: int = 0) -> IsolationForestModel:
    x = check_finite(x, "iforest_fit")
    psi = min(max_samples, x.shape[0])
    height_limit = math.ceil(math.log2(psi)) if psi > 1 else 0
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.choice(x.shape[0], size=psi, replace=False)
        trees.append(build_tree(x[rows], height_limit, rng))
    return IsolationForestModel(trees=trees, max_samples=psi, n_trees=n_trees, seed=seed)


def iforest_score(model: IsolationForestModel, x: np.ndarray) -> np.ndarray:
    """Anomaly score in (0, 1); higher is more anomalous."""
    return model.anomaly_score(x)
