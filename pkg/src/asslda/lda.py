"""Fisher linear discriminant analysis on ASS-vectors.

The projection maximizes ``Tr((A^T Sw A)^-1 (A^T Sb A))``. It is solved by
whitening with the Cholesky factor of the regularized within-class scatter
and taking the leading eigenvectors of the resulting symmetric matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

MODEL_VERSION = 1


class LdaError(ValueError):
    pass


@dataclass(frozen=True)
class ScatterPair:
    between: np.ndarray  # S_b
    within: np.ndarray  # S_w
    global_mean: np.ndarray
    class_means: np.ndarray  # (C, d)
    class_counts: np.ndarray  # (C,)
    class_labels: tuple

    @property
    def n(self) -> int:
        return int(self.class_counts.sum())

    @property
    def num_classes(self) -> int:
        return len(self.class_labels)

    @property
    def dim(self) -> int:
        return self.between.shape[0]


@dataclass(frozen=True)
class LdaModel:
    A: np.ndarray  # (d, p)
    eigenvalues: np.ndarray  # (p,), descending
    class_labels: tuple
    regularization_eps: float
    layout_hash: str = ""

    @property
    def p(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def project(self, w: np.ndarray) -> np.ndarray:
        return project(self, w)

    def save(self, path: str | Path) -> None:
        meta = {
            "version": MODEL_VERSION, "kind": "lda", "d": self.d, "p": self.p,
            "eps": self.regularization_eps, "class_labels": list(self.class_labels),
            "layout_hash": self.layout_hash,
        }
        with open(path, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta)),
                     A=np.ascontiguousarray(self.A, dtype="<f8"),
                     eigenvalues=np.asarray(self.eigenvalues, dtype="<f8"))

    @classmethod
    def load(cls, path: str | Path) -> "LdaModel":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("kind") != "lda" or meta.get("version") != MODEL_VERSION:
                raise LdaError(f"{path}: not a version {MODEL_VERSION} LDA model")
            return cls(z["A"], z["eigenvalues"], tuple(meta["class_labels"]),
                       float(meta["eps"]), meta["layout_hash"])


def compute_scatter(X: np.ndarray, y) -> ScatterPair:
    """Unnormalized between- and within-class scatter matrices.

    Class means are computed first; the within-class sum then runs over the
    centred data in a second pass.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise LdaError("X must be (n, d) with one label per row")
    labels = tuple(sorted(set(y.tolist())))
    if len(labels) < 2:
        raise LdaError("need at least two classes")
    mu = X.mean(axis=0)
    d = X.shape[1]
    means = np.empty((len(labels), d))
    counts = np.empty(len(labels), dtype=int)
    Sw = np.zeros((d, d))
    for k, lab in enumerate(labels):
        Xc = X[y == lab]
        counts[k] = len(Xc)
        means[k] = Xc.mean(axis=0)
        D = Xc - means[k]
        Sw += D.T @ D
    M = (means - mu) * np.sqrt(counts)[:, None]
    Sb = M.T @ M
    Sw = 0.5 * (Sw + Sw.T)
    return ScatterPair(Sb, Sw, mu, means, counts, labels)


def regularization(scatter: ScatterPair, reg: float = 1e-3) -> float:
    return reg * float(np.trace(scatter.within)) / scatter.dim


def generalized_eigh(Sb: np.ndarray, Sw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of ``Sw^-1 Sb`` in descending order, with ``V^T Sw V = I``."""
    try:
        L = np.linalg.cholesky(Sw)
    except np.linalg.LinAlgError as exc:
        raise LdaError("within-class scatter is not positive definite after regularization") from exc
    Linv = scipy.linalg.solve_triangular(L, np.eye(len(L)), lower=True)
    M = Linv @ Sb @ Linv.T
    M = 0.5 * (M + M.T)
    vals, U = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1]
    vals, U = vals[order], U[:, order]
    V = Linv.T @ U
    return vals, V


def fit(scatter: ScatterPair, p: int | None = None, reg: float = 1e-3,
        layout_hash: str = "") -> LdaModel:
    """Fit the projection keeping the ``p`` leading discriminant directions.

    ``p`` defaults to ``C - 1``. The within-class scatter is regularized as
    ``Sw + eps I`` with ``eps = reg * trace(Sw) / d``.
    """
    C, d = scatter.num_classes, scatter.dim
    if p is None or p <= 0:
        p = C - 1
    if p > C - 1:
        raise LdaError(f"p={p} exceeds C-1={C - 1}")
    if p > d:
        raise LdaError(f"p={p} exceeds input dimension {d}")
    eps = regularization(scatter, reg)
    Sw = scatter.within + eps * np.eye(d)
    vals, V = generalized_eigh(scatter.between, Sw)
    A = V[:, :p].copy()
    # sign convention: largest-magnitude entry of each column is positive
    idx = np.argmax(np.abs(A), axis=0)
    A *= np.sign(A[idx, np.arange(p)])
    lam = np.maximum(vals[:p], 0.0)
    return LdaModel(A, lam, scatter.class_labels, eps, layout_hash)


def fit_lda(X: np.ndarray, y, p: int | None = None, reg: float = 1e-3, layout_hash: str = "") -> LdaModel:
    return fit(compute_scatter(X, y), p, reg, layout_hash)


def project(model: LdaModel, w: np.ndarray) -> np.ndarray:
    """``v = A^T w`` for a single vector or row-wise for a matrix."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != model.d:
        raise LdaError(f"vector dimension {w.shape[-1]} does not match model dimension {model.d}")
    return w @ model.A


def criterion(A: np.ndarray, Sb: np.ndarray, Sw: np.ndarray) -> float:
    return float(np.trace(np.linalg.solve(A.T @ Sw @ A, A.T @ Sb @ A)))
