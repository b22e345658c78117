"""Gaussian-kernel ridge regression with locally scaled bandwidths.

The kernel is ``K(i, j) = exp(-||a_i - b_j||^2 / (s_i * s_j))`` where each
point carries its own scale: the distance to its k-th nearest neighbour
(k = 7 by default). Training scales exclude the point itself; prediction
scales use the k-th nearest *support* point at strictly positive distance,
so a training row presented again at prediction time reproduces its
training bandwidth. Zero scales fall back to the smallest positive
neighbour distance, or 1.0 when every candidate coincides.

Fitting solves ``(K + lambda I) dual = y_onehot``; a Cholesky factorization
is attempted first and a symmetric indefinite solve covers the rare case
where local scaling makes ``K + lambda I`` lose positive definiteness.
Classification decodes scores by argmax with lowest-index tie-break.

Also here: classification accuracy and normalized mutual information
(NMI), the two comparison metrics used by the experiment drivers. NMI
sums entropy terms in sorted order so that relabeled-but-identical
partitions score exactly 1.0.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels, numerics
from .mappings import as_rows

__all__ = [
    "KernelModel",
    "local_scales",
    "support_scales",
    "gram",
    "fit_krr",
    "predict_scores",
    "classify",
    "nmi",
    "accuracy",
    "DEFAULT_KNN_K",
]

DEFAULT_KNN_K = 7


@dataclass(frozen=True)
class KernelModel:
    """Fitted kernel ridge regressor.

    ``support`` are the training points in model space, ``dual`` the
    coefficients solving ``(K + lambda I) dual = y``, ``scales`` the
    per-point bandwidths used to build ``K``.
    """

    support: np.ndarray
    dual: np.ndarray
    scales: np.ndarray
    ridge_lambda: float
    knn_k: int

    @property
    def n_outputs(self) -> int:
        return self.dual.shape[1]


def _scales_from_selection(kth_sq, min_pos_sq) -> np.ndarray:
    """Apply the zero/missing fallback policy to k-NN squared distances."""
    fallback = np.where(np.isfinite(min_pos_sq), np.sqrt(min_pos_sq), 1.0)
    usable = np.isfinite(kth_sq) & (kth_sq > 0.0)
    return np.where(usable, np.sqrt(np.where(usable, kth_sq, 1.0)), fallback)


def local_scales(x, k: int) -> np.ndarray:
    """Per-point bandwidth: distance to the k-th nearest other point."""
    x = numerics.as_matrix(x, "x")
    if k < 1:
        raise ValueError("k must be at least 1")
    if x.shape[0] < k + 1:
        raise ValueError(f"need at least {k + 1} rows for k={k}, got {x.shape[0]}")
    kth, min_pos = _kernels.kth_smallest_sq_dists(
        x, x, k, exclude_diagonal=True, positive_only=False
    )
    return _scales_from_selection(kth, min_pos)


def support_scales(x, support, k: int) -> np.ndarray:
    """Prediction-time bandwidths: distance from each row of ``x`` to its
    k-th nearest support point at positive distance."""
    kth, min_pos = _kernels.kth_smallest_sq_dists(
        x, support, k, exclude_diagonal=False, positive_only=True
    )
    return _scales_from_selection(kth, min_pos)


def gram(a, b, scales_a, scales_b) -> np.ndarray:
    """Locally scaled Gaussian kernel matrix between two point sets."""
    a = numerics.as_matrix(a, "a")
    b = numerics.as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    scales_a = _as_scales(scales_a, a.shape[0], "scales_a")
    scales_b = _as_scales(scales_b, b.shape[0], "scales_b")
    return _kernels.gaussian_gram(a, b, scales_a, scales_b)


def _as_scales(s, n: int, name: str) -> np.ndarray:
    s = np.ascontiguousarray(s, dtype=np.float64)
    if s.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {s.shape}")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise ValueError(f"{name} must be positive and finite")
    return s


def fit_krr(x, y_onehot, ridge_lambda: float, knn_k: int = DEFAULT_KNN_K) -> KernelModel:
    """Fit the regressor on one-hot targets."""
    x = numerics.as_matrix(x, "x")
    y = numerics.as_matrix(y_onehot, "y_onehot")
    if ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be positive")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"row mismatch: x has {x.shape[0]}, y has {y.shape[0]}")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    scales = local_scales(x, knn_k)
    kernel = gram(x, x, scales, scales)
    if not np.all(np.isfinite(kernel)):
        raise ArithmeticError("kernel matrix contains non-finite values")
    system = kernel + ridge_lambda * np.eye(x.shape[0])
    try:
        factor = scipy.linalg.cho_factor(system, check_finite=False)
        dual = scipy.linalg.cho_solve(factor, y, check_finite=False)
    except scipy.linalg.LinAlgError:
        # local scaling can push K + lambda I off positive definite
        dual = scipy.linalg.solve(system, y, assume_a="sym", check_finite=False)
    return KernelModel(
        support=x.copy(),
        dual=np.ascontiguousarray(dual),
        scales=scales,
        ridge_lambda=float(ridge_lambda),
        knn_k=int(knn_k),
    )


def predict_scores(model: KernelModel, x) -> np.ndarray:
    """Score matrix for new points; one column per training target."""
    x = as_rows(x, model.support.shape[1], "x")
    if x.shape[0] == 0:
        return np.zeros((0, model.n_outputs))
    scales_x = support_scales(x, model.support, model.knn_k)
    kernel = gram(x, model.support, scales_x, model.scales)
    return kernel @ model.dual


def classify(scores) -> np.ndarray:
    """Per-row argmax; ties resolve to the lowest class index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError(f"scores must be 2-D, got ndim={scores.ndim}")
    return np.argmax(scores, axis=1)


def _sorted_entropy(counts: np.ndarray, total: int) -> float:
    """Entropy in nats from nonnegative counts, summing terms in sorted
    order so equal count multisets give bitwise-equal entropies."""
    p = counts[counts > 0] / total
    terms = -p * np.log(p)
    return float(np.sort(terms).sum())


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information, arithmetic-mean normalization.

    Returns a value in [0, 1]; exactly 1.0 for identical partitions
    (including relabelings) and 1.0 by convention when both labelings are
    constant.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 1:
        raise ValueError("labelings must be nonempty")
    n = a.shape[0]
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ka = int(ia.max()) + 1
    kb = int(ib.max()) + 1
    joint = np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb)
    h_a = _sorted_entropy(joint.sum(axis=1), n)
    h_b = _sorted_entropy(joint.sum(axis=0), n)
    if h_a + h_b == 0.0:
        return 1.0
    h_ab = _sorted_entropy(joint.ravel(), n)
    mutual = h_a + h_b - h_ab
    return min(1.0, max(0.0, 2.0 * mutual / (h_a + h_b)))


def accuracy(pred_labels, true_labels) -> float:
    """Fraction of exact matches."""
    p = np.asarray(pred_labels).ravel()
    t = np.asarray(true_labels).ravel()
    if p.shape[0] != t.shape[0]:
        raise ValueError(f"length mismatch: {p.shape[0]} vs {t.shape[0]}")
    if p.shape[0] < 1:
        raise ValueError("labelings must be nonempty")
    return float(np.mean(p == t))
