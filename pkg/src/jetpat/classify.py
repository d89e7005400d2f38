"""Chi-square nearest neighbor and nearest subspace classifiers.

Features are rows of a 2-D array. Labels may be any sortable values; the
nearest subspace classifier orders its class models by sorted label, which
is what "lowest class id" means in its tie-break.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ClassModel",
    "chi_square",
    "chi_square_matrix",
    "fit_nsc",
    "nnc_predict",
    "nnc_predict_many",
    "nsc_predict",
    "nsc_predict_many",
    "nsc_residuals",
    "sqrt_preprocess",
]

RANK_TOL = 1e-12
# Relative slack under which two scores count as tied.
TIE_TOL = 1e-12


def _first_min(scores: np.ndarray) -> int:
    best = scores.min()
    return int(np.flatnonzero(scores <= best + TIE_TOL * max(1.0, abs(best)))[0])


def chi_square(a, b) -> float:
    """sum((a - b)**2 / (a + b)) with 0/0 terms counted as zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    s = a + b
    d = a - b
    nz = s != 0
    return float(np.sum(d[nz] * d[nz] / s[nz]))


def chi_square_matrix(queries, train) -> np.ndarray:
    """Pairwise chi-square distances, shape ``(len(queries), len(train))``."""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    t = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if q.shape[1] != t.shape[1]:
        raise ValueError(f"feature length mismatch: {q.shape[1]} vs {t.shape[1]}")
    out = np.empty((q.shape[0], t.shape[0]))
    for i, row in enumerate(q):
        s = row + t
        d = row - t
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(s != 0, d * d / s, 0.0)
        out[i] = terms.sum(axis=1)
    return out


def nnc_predict(train_features, train_labels, query):
    """Label of the training sample nearest to ``query`` in chi-square.

    Ties go to the lowest training index.
    """
    train_features = np.atleast_2d(np.asarray(train_features, dtype=np.float64))
    if train_features.shape[0] == 0 or len(train_labels) == 0:
        raise ValueError("training set is empty")
    d = chi_square_matrix(query, train_features)[0]
    return train_labels[_first_min(d)]


def nnc_predict_many(train_features, train_labels, queries) -> list:
    train_features = np.atleast_2d(np.asarray(train_features, dtype=np.float64))
    if train_features.shape[0] == 0:
        raise ValueError("training set is empty")
    d = chi_square_matrix(queries, train_features)
    return [train_labels[_first_min(row)] for row in d]


def sqrt_preprocess(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("square-root preprocessing needs non-negative features")
    return np.sqrt(v)


@dataclass(frozen=True)
class ClassModel:
    """Orthonormal principal subspace of one class, basis shape (dim, n_c)."""

    label: object
    basis: np.ndarray

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.basis.shape[0]

    def residual(self, query) -> float:
        q = np.asarray(query, dtype=np.float64)
        return float(np.linalg.norm(q - self.basis @ (self.basis.T @ q)))


def _subspace_size(energies: np.ndarray, subspace_dim) -> int:
    if isinstance(subspace_dim, (int, np.integer)) and not isinstance(subspace_dim, bool):
        if subspace_dim < 1:
            raise ValueError(f"subspace dimension must be >= 1, got {subspace_dim}")
        return min(int(subspace_dim), len(energies))
    frac = float(subspace_dim)
    if not 0 < frac <= 1:
        raise ValueError(f"energy fraction must be in (0, 1], got {frac}")
    cum = np.cumsum(energies) / energies.sum()
    return min(int(np.searchsorted(cum, frac - 1e-12) + 1), len(energies))


def fit_nsc(features, labels, subspace_dim=0.99) -> list[ClassModel]:
    """Per-class principal subspaces of the (uncentred) class scatter.

    ``subspace_dim`` is either a fixed integer (capped at the class rank) or
    an energy fraction in (0, 1]: the smallest n whose leading eigenvalues
    capture that share of the scatter. Eigenvectors come from the thin SVD
    of the class data matrix, whose squared singular values are the scatter
    eigenvalues.
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = list(labels)
    if x.shape[0] != len(labels):
        raise ValueError(f"{x.shape[0]} feature rows but {len(labels)} labels")
    if not labels:
        raise ValueError("training set is empty")
    models = []
    for label in sorted(set(labels)):
        rows = [i for i, lab in enumerate(labels) if lab == label]
        xc = x[rows].T
        u, s, _ = np.linalg.svd(xc, full_matrices=False)
        energies = s * s
        if energies.size == 0 or energies[0] == 0:
            raise ValueError(f"class {label!r} has no non-zero training vectors")
        rank = int(np.sum(energies > RANK_TOL * energies[0]))
        n = _subspace_size(energies[:rank], subspace_dim)
        models.append(ClassModel(label, np.ascontiguousarray(u[:, :n])))
    return models


def nsc_residuals(models, query) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    if not models:
        raise ValueError("no class models")
    for m in models:
        if m.feature_dim != q.shape[-1]:
            raise ValueError(f"query has dimension {q.shape[-1]}, model {m.label!r} "
                             f"expects {m.feature_dim}")
    return np.array([m.residual(q) for m in models])


def nsc_predict(models, query):
    """Label of the class subspace with the smallest projection residual."""
    return models[_first_min(nsc_residuals(models, query))].label


def nsc_predict_many(models, queries) -> list:
    return [nsc_predict(models, q) for q in np.atleast_2d(queries)]
