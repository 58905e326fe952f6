"""
Mutual information rankings
───────────────────────────
mrmr_rank   quantile-binned features, greedy mRMR with the quotient (MIQ) criterion
rmi_rank    kNN estimate of I(feature; label) for a continuous feature and a
            discrete label, divided by H(label); features enter as normal
            scores of their ranks

Both rankings depend on the order of each feature's values only, so a strictly
increasing transform of a column leaves them unchanged.

All information quantities are in nats.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from scipy.stats import entropy, norm, rankdata
from scipy.stats.contingency import crosstab

from ppgauth.errors import InvalidInput
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

Ranking = list[tuple[str, float]]


def encode_labels(labels: np.ndarray) -> np.ndarray:
    _, codes = np.unique(np.asarray(labels).astype(str), return_inverse=True)
    return codes


def quantile_bins(column: np.ndarray, bins: int = 8) -> np.ndarray:
    """Bin codes 0..bins-1; edges are sample points, so codes survive strictly increasing transforms."""
    edges = np.quantile(column, np.linspace(0.0, 1.0, bins + 1)[1:-1], method="inverted_cdf")
    return np.searchsorted(edges, column, side="right")


def discrete_mi(a: np.ndarray, b: np.ndarray) -> float:
    counts = crosstab(a, b).count.astype(np.float64)
    joint = counts / counts.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))


def _check_labels(codes: np.ndarray) -> None:
    if np.unique(codes).size < 2:
        raise InvalidInput("feature ranking needs at least two classes")


def _keep(ranking: Ranking, keep_fraction: float) -> Ranking:
    return ranking[: math.ceil(keep_fraction * len(ranking))]


def mrmr_rank(
    x: np.ndarray,
    names: list[str] | tuple[str, ...],
    labels: np.ndarray,
    keep_fraction: float = 0.6,
    bins: int = 8,
) -> Ranking:
    """Greedy MIQ order; each score is recorded at the moment its feature is picked."""
    y = encode_labels(labels)
    _check_labels(y)
    binned = np.column_stack([quantile_bins(x[:, j], bins) for j in range(x.shape[1])])
    relevance = np.array([discrete_mi(binned[:, j], y) for j in range(binned.shape[1])])

    first = int(np.argmax(relevance))
    order, scores = [first], [float(relevance[first])]
    remaining = [j for j in range(len(names)) if j != first]
    redundancy = np.zeros(len(names))
    while remaining:
        last = order[-1]
        for j in remaining:
            redundancy[j] += discrete_mi(binned[:, j], binned[:, last])
        quotient = [relevance[j] / max(redundancy[j] / len(order), 1e-12) for j in remaining]
        pick = int(np.argmax(quotient))
        order.append(remaining.pop(pick))
        scores.append(float(quotient[pick]))
    return _keep([(names[j], s) for j, s in zip(order, scores)], keep_fraction)


def knn_mi(feature: np.ndarray, codes: np.ndarray, k: int = 3) -> float:
    """I(x; y) = ψ(N) − ⟨ψ(N_y)⟩ + ⟨ψ(k)⟩ − ⟨ψ(m)⟩; classes of one sample are left out."""
    x = np.asarray(feature, dtype=np.float64).reshape(-1, 1)
    n = x.shape[0]
    radius = np.zeros(n)
    k_used = np.zeros(n)
    class_size = np.zeros(n)
    for label in np.unique(codes):
        mask = codes == label
        count = int(mask.sum())
        class_size[mask] = count
        if count < 2:
            continue
        k_label = min(k, count - 1)
        if k_label < k:
            logger.warning("select.rmi_reduced_k", label=int(label), samples=count, k=k_label)
        dist, _ = cKDTree(x[mask]).query(x[mask], k=k_label + 1)
        radius[mask] = np.nextafter(dist[:, -1], 0)
        k_used[mask] = k_label

    kept = class_size > 1
    if kept.sum() < n:
        logger.warning("select.rmi_singleton_classes", dropped=int(n - kept.sum()))
    x, radius, k_used, class_size = x[kept], radius[kept], k_used[kept], class_size[kept]
    m = cKDTree(x).query_ball_point(x, r=radius, return_length=True)
    return float(
        digamma(x.shape[0]) - np.mean(digamma(class_size)) + np.mean(digamma(k_used)) - np.mean(digamma(m))
    )


def label_entropy(codes: np.ndarray) -> float:
    _, counts = np.unique(codes, return_counts=True)
    return float(entropy(counts))


def normal_scores(column: np.ndarray) -> np.ndarray:
    """Gaussian copula of one column; tied values share a score."""
    column = np.asarray(column, dtype=np.float64)
    return norm.ppf(rankdata(column) / (column.size + 1))


def rmi_rank(
    x: np.ndarray,
    names: list[str] | tuple[str, ...],
    labels: np.ndarray,
    keep_fraction: float = 0.6,
    k: int = 3,
) -> Ranking:
    y = encode_labels(labels)
    _check_labels(y)
    h = label_entropy(y)
    scores = [max(knn_mi(normal_scores(x[:, j]), y, k), 0.0) / h for j in range(x.shape[1])]
    order = sorted(range(len(names)), key=lambda j: -scores[j])
    return _keep([(names[j], scores[j]) for j in order], keep_fraction)
