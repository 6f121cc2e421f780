"""[-1, 1] feature scaling, one-vs-one RBF SVM trained by SMO, and file voting.

The binary solver follows the usual dual formulation::

    min 0.5 a^T Q a - e^T a   s.t.  0 <= a_i <= C,  y^T a = 0,
    Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2)

with maximal-violating-pair selection refined by second-order gain
(pick ``i`` by the largest first-order violation, ``j`` by the largest
guaranteed objective decrease).
"""

from __future__ import annotations

import json
import logging
from collections import OrderedDict
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MODEL_VERSION = 1
_TAU = 1e-12


@dataclass(frozen=True)
class FeatureScaler:
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.minimum)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return apply_scaler(self, x)


def fit_scaler(X: np.ndarray) -> FeatureScaler:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) == 0:
        raise ValueError("need at least one training vector")
    return FeatureScaler(X.min(axis=0), X.max(axis=0))


def apply_scaler(scaler: FeatureScaler, x: np.ndarray) -> np.ndarray:
    """Map the training range to [-1, 1]; constant dimensions map to 0, the rest is clamped."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != scaler.dim:
        raise ValueError(f"dimension {x.shape[-1]} does not match scaler dimension {scaler.dim}")
    span = scaler.maximum - scaler.minimum
    const = span <= 0
    out = 2.0 * (x - scaler.minimum) / np.where(const, 1.0, span) - 1.0
    out = np.where(const, 0.0, out)
    return np.clip(out, -1.0, 1.0)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _KernelRows:
    """Row access to the RBF Gram matrix, fully precomputed when it fits the budget."""

    def __init__(self, X: np.ndarray, gamma: float, cache_mb: float):
        self.X = X
        self.gamma = gamma
        n = len(X)
        self.sqnorm = (X * X).sum(1)
        self.max_rows = max(2, int(cache_mb * 2 ** 20 // (8 * max(n, 1))))
        self.rows: OrderedDict[int, np.ndarray] = OrderedDict()
        # built row by row so both paths round identically
        self.full = np.stack([self._row(i) for i in range(n)]) if n * n * 8 <= cache_mb * 2 ** 20 else None

    def _row(self, i: int) -> np.ndarray:
        sq = self.sqnorm + self.sqnorm[i] - 2.0 * (self.X @ self.X[i])
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def __getitem__(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        row = self.rows.get(i)
        if row is None:
            row = self._row(i)
            self.rows[i] = row
            if len(self.rows) > self.max_rows:
                self.rows.popitem(last=False)
        else:
            self.rows.move_to_end(i)
        return row


@dataclass(frozen=True)
class BinaryMachine:
    positive: int  # class index voted for when decision > 0
    negative: int
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # y_i * alpha_i
    bias: float  # decision = sum(coef * k(sv, x)) + bias

    def decision(self, X: np.ndarray, gamma: float) -> np.ndarray:
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef + self.bias


def smo(X: np.ndarray, y: np.ndarray, C: float, gamma: float, tol: float = 1e-3,
        cache_mb: float = 200.0, max_iter: int | None = None) -> tuple[np.ndarray, float, int]:
    """Solve one binary soft-margin dual. ``y`` in {-1, +1}.

    Returns ``(alpha, rho, iterations)`` with decision ``sum(y a K) - rho``.
    """
    n = len(y)
    y = y.astype(float)
    K = _KernelRows(X, gamma, cache_mb)
    diag = np.ones(n)  # RBF: k(x, x) = 1
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = max_iter or max(10_000_000, 100 * n)
    it = 0
    while it < max_iter:
        v = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        vu = np.where(up, v, -np.inf)
        i = int(np.argmax(vu))
        gmax = vu[i]
        gmin = np.min(np.where(low, v, np.inf))
        if gmax - gmin < tol:
            break
        Ki = K[i]
        cand = low & (v < gmax)
        b = gmax - v
        quad = diag[i] + diag - 2.0 * Ki
        quad = np.where(quad > 0, quad, _TAU)
        gain = np.where(cand, -(b * b) / quad, np.inf)
        j = int(np.argmin(gain))
        Kj = K[j]
        ai_old, aj_old = alpha[i], alpha[j]
        _update_pair(alpha, G, y, i, j, Ki[j], C)
        di, dj = alpha[i] - ai_old, alpha[j] - aj_old
        G += y * (y[i] * di * Ki + y[j] * dj * Kj)
        it += 1
    else:
        log.warning("SMO reached max_iter=%d before converging", max_iter)
    return alpha, _rho(alpha, G, y, C), it


def _update_pair(alpha, G, y, i, j, Kij, C):
    # analytic two-variable step with box clipping along y_i a_i + y_j a_j = const
    if y[i] != y[j]:
        quad = max(2.0 - 2.0 * Kij, _TAU)
        delta = (-G[i] - G[j]) / quad
        diff = alpha[i] - alpha[j]
        alpha[i] += delta
        alpha[j] += delta
        if diff > 0:
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = diff
        elif alpha[i] < 0:
            alpha[i] = 0.0
            alpha[j] = -diff
        if diff > 0:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = C - diff
        elif alpha[j] > C:
            alpha[j] = C
            alpha[i] = C + diff
    else:
        quad = max(2.0 - 2.0 * Kij, _TAU)
        delta = (G[i] - G[j]) / quad
        total = alpha[i] + alpha[j]
        alpha[i] -= delta
        alpha[j] += delta
        if total > C:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = total - C
        elif alpha[j] < 0:
            alpha[j] = 0.0
            alpha[i] = total
        if total > C:
            if alpha[j] > C:
                alpha[j] = C
                alpha[i] = total - C
        elif alpha[i] < 0:
            alpha[i] = 0.0
            alpha[j] = total


def _rho(alpha, G, y, C) -> float:
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


@dataclass(frozen=True)
class SvmModel:
    C: float
    gamma: float
    classes: tuple
    machines: tuple[BinaryMachine, ...]
    scaler: FeatureScaler | None = None

    @property
    def dim(self) -> int:
        return self.machines[0].support_vectors.shape[1]

    def decision_matrix(self, X: np.ndarray) -> np.ndarray:
        """Pairwise decision values, shape (n, num_machines)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension {X.shape[1]} does not match model dimension {self.dim}")
        return np.stack([m.decision(X, self.gamma) for m in self.machines], axis=1)

    def class_margins(self, dec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Votes and signed decision sums per class from a decision matrix."""
        n = dec.shape[0]
        k = len(self.classes)
        votes = np.zeros((n, k), dtype=int)
        margins = np.zeros((n, k))
        for col, m in enumerate(self.machines):
            d = dec[:, col]
            votes[:, m.positive] += d > 0
            votes[:, m.negative] += d <= 0
            margins[:, m.positive] += d
            margins[:, m.negative] -= d
        return votes, margins

    def predict(self, X: np.ndarray) -> tuple[list, np.ndarray]:
        """Labels and per-class signed margins for each row of scaled ``X``."""
        votes, margins = self.class_margins(self.decision_matrix(X))
        idx = [_argmax_with_ties(v, m)[0] for v, m in zip(votes, margins)]
        return [self.classes[i] for i in idx], margins

    def save(self, path: str | Path) -> None:
        meta = {
            "version": MODEL_VERSION, "kind": "svm", "C": self.C, "gamma": self.gamma,
            "classes": list(self.classes),
            "pairs": [[m.positive, m.negative] for m in self.machines],
        }
        arrays = {"meta": np.array(json.dumps(meta)),
                  "bias": np.array([m.bias for m in self.machines], dtype="<f8")}
        for k, m in enumerate(self.machines):
            arrays[f"sv_{k}"] = np.ascontiguousarray(m.support_vectors, dtype="<f8")
            arrays[f"coef_{k}"] = np.asarray(m.dual_coef, dtype="<f8")
        if self.scaler is not None:
            arrays["scaler_min"] = np.asarray(self.scaler.minimum, dtype="<f8")
            arrays["scaler_max"] = np.asarray(self.scaler.maximum, dtype="<f8")
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "SvmModel":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("kind") != "svm" or meta.get("version") != MODEL_VERSION:
                raise ValueError(f"{path}: not a version {MODEL_VERSION} SVM model")
            machines = tuple(
                BinaryMachine(p, q, z[f"sv_{k}"], z[f"coef_{k}"], float(z["bias"][k]))
                for k, (p, q) in enumerate(meta["pairs"]))
            scaler = FeatureScaler(z["scaler_min"], z["scaler_max"]) if "scaler_min" in z else None
        return cls(float(meta["C"]), float(meta["gamma"]), tuple(meta["classes"]), machines, scaler)


def _argmax_with_ties(votes: np.ndarray, margins: np.ndarray) -> tuple[int, bool]:
    best = np.flatnonzero(votes == votes.max())
    if len(best) == 1:
        return int(best[0]), False
    # larger margin wins; argmax keeps the first class on exact ties
    return int(best[np.argmax(margins[best])]), True


def train(X: np.ndarray, y, C: float, gamma: float, tol: float = 1e-3,
          cache_mb: float = 200.0, scaler: FeatureScaler | None = None) -> SvmModel:
    """One-vs-one RBF SVM on already scaled vectors."""
    if C <= 0 or gamma <= 0:
        raise ValueError("C and gamma must be positive")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    machines = []
    for a, b in combinations(range(len(classes)), 2):
        ia = np.flatnonzero(y == classes[a])
        ib = np.flatnonzero(y == classes[b])
        if len(ia) == 0 or len(ib) == 0:
            raise ValueError(f"class pair {classes[a]!r}/{classes[b]!r} has an empty side")
        idx = np.concatenate([ia, ib])
        yy = np.concatenate([np.ones(len(ia)), -np.ones(len(ib))])
        alpha, rho, iters = smo(X[idx], yy, C, gamma, tol, cache_mb)
        sv = alpha > 0
        log.debug("pair %s/%s: %d iterations, %d SVs", classes[a], classes[b], iters, sv.sum())
        machines.append(BinaryMachine(a, b, X[idx][sv], (yy * alpha)[sv], -rho))
    return SvmModel(float(C), float(gamma), classes, tuple(machines), scaler)


def predict_segment(model: SvmModel, v: np.ndarray):
    """Label and pairwise decision values for a single scaled vector."""
    dec = model.decision_matrix(np.atleast_2d(v))
    votes, margins = model.class_margins(dec)
    i, _ = _argmax_with_ties(votes[0], margins[0])
    return model.classes[i], dec[0]


@dataclass(frozen=True)
class VoteResult:
    classes: tuple
    votes: np.ndarray
    margins: np.ndarray
    label: object
    tie_broken: bool

    @property
    def num_segments(self) -> int:
        return int(self.votes.sum())


def vote_file(labels, margins: np.ndarray, classes) -> VoteResult:
    """Majority vote over segment predictions of one file.

    ``margins`` holds per-segment, per-class signed decision sums; ties in
    the vote go to the larger summed margin, then to class order.
    """
    classes = tuple(classes)
    labels = list(labels)
    if not labels:
        raise ValueError("no segment predictions to vote on")
    pos = {c: k for k, c in enumerate(classes)}
    votes = np.zeros(len(classes), dtype=int)
    for lab in labels:
        votes[pos[lab]] += 1
    total = np.asarray(margins, dtype=float).reshape(len(labels), len(classes)).sum(axis=0)
    i, tied = _argmax_with_ties(votes, total)
    return VoteResult(classes, votes, total, classes[i], tied)
