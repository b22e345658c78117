"""Pure-numpy implementations of the pairwise kernels.

Semantics mirror the compiled module exactly. Squared distances are formed
from explicit row differences (chunked to bound the 3-D temporary) rather
than the Gram-expansion trick, so identical rows produce an exact 0.0 and
zero-distance detection agrees with the compiled loops.
"""

import numpy as np

BACKEND = "numpy"

# Upper bound on elements of the (chunk, nb, dim) difference temporary.
_CHUNK_ELEMS = 2_000_000


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, shape (a.rows, b.rows)."""
    na, dim = a.shape
    nb = b.shape[0]
    out = np.empty((na, nb))
    step = max(1, _CHUNK_ELEMS // max(1, nb * dim))
    for i0 in range(0, na, step):
        diff = a[i0 : i0 + step, None, :] - b[None, :, :]
        out[i0 : i0 + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def gaussian_gram(a, b, scales_a, scales_b) -> np.ndarray:
    """K[i, j] = exp(-||a_i - b_j||^2 / (scales_a[i] * scales_b[j]))."""
    d2 = sq_dists(a, b)
    return np.exp(-d2 / np.outer(scales_a, scales_b))


def kth_smallest_sq_dists(a, b, k, exclude_diagonal, positive_only):
    """Per row of ``a``: the k-th smallest admissible squared distance to
    rows of ``b`` plus the smallest strictly positive one.

    ``exclude_diagonal`` drops entry (i, i) (callers pass the same array
    twice); ``positive_only`` additionally drops exact zeros. Returns
    (kth, min_positive); missing values are +inf.
    """
    d2 = sq_dists(a, b)
    if exclude_diagonal:
        np.fill_diagonal(d2, np.inf)
    positive = np.where(d2 > 0.0, d2, np.inf)
    min_positive = positive.min(axis=1)
    work = positive if positive_only else d2
    if k > work.shape[1]:
        kth = np.full(work.shape[0], np.inf)
    else:
        kth = np.partition(work, k - 1, axis=1)[:, k - 1]
    return kth, min_positive


def rowwise_norms(x, x_prime):
    """Per-row ((||x_i - x'_i||, ||x_i||) pair) for relative-error metrics."""
    diff = x - x_prime
    return (
        np.sqrt(np.einsum("ij,ij->i", diff, diff)),
        np.sqrt(np.einsum("ij,ij->i", x, x)),
    )
