"""Dense linear-algebra kernel: SVD, truncation, pseudo-inverse, least squares.

All routines operate on 2-D float64 arrays and are pure functions of their
inputs. Factorizations are delegated to LAPACK via numpy; this module owns
the contracts on top of it:

* singular values sorted nonincreasing,
* a deterministic sign convention (the largest-magnitude entry of every
  left singular vector is made nonnegative, with the matching right vector
  flipped in lockstep),
* explicit truncation bookkeeping (the Frobenius norm of the discarded
  spectrum travels with a truncated decomposition),
* pseudo-inverse / least-squares rank cutoff at ``max(rows, cols) * eps``
  relative to the largest singular value.

SVD non-convergence surfaces as ``numpy.linalg.LinAlgError``; garbage is
never returned silently.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdResult",
    "as_matrix",
    "svd",
    "truncated_svd",
    "pseudo_inverse",
    "least_squares",
    "default_rcond",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a C-contiguous 2-D float64 array.

    Raises ValueError for wrong dimensionality, empty axes, or non-finite
    entries; matrices in this package never carry NaN/Inf.
    """
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={out.ndim}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def default_rcond(shape: tuple[int, int]) -> float:
    """Relative rank cutoff: max(rows, cols) times machine epsilon."""
    return max(shape) * np.finfo(np.float64).eps


@dataclass(frozen=True)
class SvdResult:
    """Thin singular value decomposition ``a = u @ diag(s) @ v.T``.

    ``u`` and ``v`` have orthonormal columns; ``singular_values`` is sorted
    nonincreasing. ``discarded_norm`` is the Frobenius norm of the spectrum
    dropped by truncation (0.0 for a full decomposition).
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    discarded_norm: float = 0.0

    @property
    def rank(self) -> int:
        """Numerical rank at the default relative cutoff."""
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        cutoff = default_rcond((self.u.shape[0], self.v.shape[0])) * s[0]
        return int(np.count_nonzero(s > cutoff))

    def reconstruct(self) -> np.ndarray:
        """Multiply the factors back together."""
        return (self.u * self.singular_values) @ self.v.T


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    """Make the largest-magnitude entry of each column of ``u`` nonnegative,
    flipping the matching column of ``v`` so the product is unchanged.
    Operates in place; ties resolve to the first maximal index."""
    lead = np.argmax(np.abs(u), axis=0)
    flip = u[lead, np.arange(u.shape[1])] < 0.0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0


def svd(a) -> SvdResult:
    """Thin SVD with min(rows, cols) triplets and deterministic signs."""
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    v = vt.T.copy()
    u = np.ascontiguousarray(u)
    _fix_signs(u, v)
    return SvdResult(u=u, singular_values=s, v=v)


def truncated_svd(a, k: int) -> SvdResult:
    """Leading ``k`` singular triplets plus the norm of the dropped tail."""
    a = as_matrix(a)
    limit = min(a.shape)
    if not 1 <= k <= limit:
        raise ValueError(f"k must be in [1, {limit}], got {k}")
    full = svd(a)
    s = full.singular_values
    return SvdResult(
        u=np.ascontiguousarray(full.u[:, :k]),
        singular_values=s[:k].copy(),
        v=np.ascontiguousarray(full.v[:, :k]),
        discarded_norm=float(np.linalg.norm(s[k:])),
    )


def pseudo_inverse(a, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values at or below ``rcond * s_max`` are treated as zero;
    ``rcond`` defaults to ``max(rows, cols) * eps``.
    """
    a = as_matrix(a)
    if rcond is None:
        rcond = default_rcond(a.shape)
    elif rcond < 0:
        raise ValueError("rcond must be nonnegative")
    res = svd(a)
    s = res.singular_values
    cutoff = rcond * (s[0] if s.size else 0.0)
    keep = s > cutoff
    if not np.any(keep):
        return np.zeros((a.shape[1], a.shape[0]))
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (res.v * inv_s) @ res.u.T


def least_squares(a, b) -> np.ndarray:
    """Minimum-Frobenius-norm minimizer of ``||a @ x - b||_F``.

    Computed as ``pinv(a) @ b`` so rank-deficient systems get the
    minimum-norm solution rather than an arbitrary one.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"row mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}")
    return pseudo_inverse(a) @ b
