"""
RBF support vector machines
───────────────────────────
Both machines are solved with the same SMO routine on the dual

    min ½ αᵀQα + pᵀα    s.t.  0 ≤ α ≤ C,  yᵀα = Δ

choosing the maximal violating pair each step (no shrinking).

SvmModel          one-vs-rest C-SVC, Q = yyᵀ∘K, p = −1
OneClassSvmModel  ν-formulation, Q = K, p = 0, bounds [0, 1] and Σα = νN,
                  stored rescaled so that Σα = 1 and α ≤ 1/(νN)
"""
from __future__ import annotations

from typing import Any, NamedTuple

import numpy as np

from ppgauth.errors import InvalidInput
from ppgauth.models.kernel import check_finite, rbf, resolve_gamma
from ppgauth.schemas import ArrayModel
from ppgauth.utils.codec import decode_array, encode_array
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

TAU = 1e-12


class SmoResult(NamedTuple):
    alpha: np.ndarray
    rho: float
    iterations: int
    gap: float


def smo(
    kernel: np.ndarray,
    y: np.ndarray,
    p: np.ndarray,
    c: float,
    alpha: np.ndarray,
    tol: float = 1e-3,
    max_iter: int = 200_000,
) -> SmoResult:
    alpha = alpha.astype(np.float64).copy()
    q = (y[:, None] * y[None, :]) * kernel
    grad = q @ alpha + p
    diag = np.diag(kernel)
    gap = np.inf
    iterations = 0

    for iterations in range(1, max_iter + 1):
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        score = -y * grad
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap < tol:
            break
        eta = max(diag[i] + diag[j] - 2.0 * kernel[i, j], TAU)
        room_i = c - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else c - alpha[j]
        step = min(gap / eta, room_i, room_j)

        delta_i, delta_j = y[i] * step, -y[j] * step
        alpha[i] += delta_i
        alpha[j] += delta_j
        for t in (i, j):
            if alpha[t] < TAU:
                alpha[t] = 0.0
            elif alpha[t] > c - TAU:
                alpha[t] = c
        grad += q[:, i] * delta_i + q[:, j] * delta_j
    else:
        logger.warning("models.smo_max_iter", max_iter=max_iter, gap=float(gap))

    return SmoResult(alpha=alpha, rho=_rho(alpha, y, grad, c), iterations=iterations, gap=float(gap))


def _rho(alpha: np.ndarray, y: np.ndarray, grad: np.ndarray, c: float) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(yg[free].mean())
    at_upper = alpha >= c
    upper_side = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    ub = yg[upper_side].min() if upper_side.any() else np.inf
    lb = yg[~upper_side].max() if (~upper_side).any() else -np.inf
    if not np.isfinite(ub) or not np.isfinite(lb):
        return float(ub if np.isfinite(ub) else lb)
    return float((ub + lb) / 2.0)


# ─── Multi-class (one-vs-rest) ────────────────────────────────────────────────

class SvmModel(ArrayModel):
    gamma: float
    c: float
    classes: list[str]
    support: list[np.ndarray]      # support vectors per class machine
    dual_coef: list[np.ndarray]    # α·y per support vector
    bias: list[float]

    def decision(self, x: np.ndarray, label: str) -> np.ndarray:
        k = self.classes.index(label)
        return rbf(x, self.support[k], self.gamma) @ self.dual_coef[k] + self.bias[k]

    def decision_matrix(self, x: np.ndarray) -> np.ndarray:
        return np.column_stack([self.decision(x, label) for label in self.classes])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.classes, dtype=object)[np.argmax(self.decision_matrix(x), axis=1)]

    def to_payload(self) -> dict[str, Any]:
        return {
            "classes": self.classes,
            "support": [encode_array(s) for s in self.support],
            "dual_coef": [encode_array(d) for d in self.dual_coef],
            "bias": self.bias,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any], hyper: dict[str, Any]) -> SvmModel:
        return cls(
            gamma=float(hyper["gamma"]),
            c=float(hyper["c"]),
            classes=list(payload["classes"]),
            support=[decode_array(s) for s in payload["support"]],
            dual_coef=[decode_array(d) for d in payload["dual_coef"]],
            bias=[float(b) for b in payload["bias"]],
        )


def svm_fit(
    x: np.ndarray,
    labels: np.ndarray,
    c: float = 1.0,
    gamma: float | str = "scale",
    tol: float = 1e-3,
    max_iter: int = 200_000,
) -> SvmModel:
    x = check_finite(x, "svm_fit")
    labels = np.asarray(labels).astype(str)
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise InvalidInput("svm_fit needs at least two classes")
    g = resolve_gamma(gamma, x)
    kernel = rbf(x, x, g)
    support, coef, bias = [], [], []
    for label in classes:
        y = np.where(labels == label, 1.0, -1.0)
        result = smo(kernel, y, -np.ones(len(y)), c, np.zeros(len(y)), tol, max_iter)
        sv = result.alpha > 0
        support.append(x[sv])
        coef.append(result.alpha[sv] * y[sv])
        bias.append(-result.rho)
        logger.debug("models.svm_class_fitted", label=label, support=int(sv.sum()), iterations=result.iterations)
    return SvmModel(gamma=g, c=c, classes=classes, support=support, dual_coef=coef, bias=bias)


def svm_score(model: SvmModel, x: np.ndarray, label: str) -> np.ndarray:
    """Signed distance-like decision value of `label`'s machine; higher is more genuine."""
    return model.decision(x, label)


# ─── One-class ────────────────────────────────────────────────────────────────

class OneClassSvmModel(ArrayModel):
    gamma: float
    nu: float
    support: np.ndarray
    dual_coef: np.ndarray
    rho: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        return rbf(x, self.support, self.gamma) @ self.dual_coef - self.rho

    def to_payload(self) -> dict[str, Any]:
        return {"support": encode_array(self.support), "dual_coef": encode_array(self.dual_coef), "rho": self.rho}

    @classmethod
    def from_payload(cls, payload: dict[str, Any], hyper: dict[str, Any]) -> OneClassSvmModel:
        return cls(
            gamma=float(hyper["gamma"]),
            nu=float(hyper["nu"]),
            support=decode_array(payload["support"]),
            dual_coef=decode_array(payload["dual_coef"]),
            rho=float(payload["rho"]),
        )


def osvm_fit(
    x: np.ndarray,
    nu: float = 0.1,
    gamma: float | str = "scale",
    tol: float = 1e-3,
    max_iter: int = 200_000,
) -> OneClassSvmModel:
    x = check_finite(x, "osvm_fit")
    if not 0 < nu <= 1:
        raise InvalidInput(f"nu must lie in (0, 1], got {nu}")
    n = x.shape[0]
    g = resolve_gamma(gamma, x)
    kernel = rbf(x, x, g)

    total = nu * n
    alpha = np.zeros(n)
    full = min(int(total), n)
    alpha[:full] = 1.0
    if full < n:
        alpha[full] = total - full
    result = smo(kernel, np.ones(n), np.zeros(n), 1.0, alpha, tol, max_iter)

    sv = result.alpha > 0
    return OneClassSvmModel(
        gamma=g,
        nu=nu,
        support=x[sv],
        dual_coef=result.alpha[sv] / total,
        rho=result.rho / total,
    )


def osvm_score(model: OneClassSvmModel, x: np.ndarray) -> np.ndarray:
    return model.decision(x)
