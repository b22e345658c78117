"""Per-party dimensionality-reduction maps.

A ``LinearMap`` carries the reduction matrix (features x reduced dim), the
column-mean center of the data it was fit on (all zeros for methods that do
not center), and a tag naming the construction. Three constructions are
provided:

* ``fit_pca``: top right singular vectors of the row-centered data;
* ``fit_random_projection``: i.i.d. Gaussian entries scaled by
  ``1/sqrt(target_dim)`` for approximate norm preservation;
* ``fit_perturbed_basis``: a random recombination of a given basis plus an
  optional Gaussian off-range perturbation, ``b @ e1 + epsilon * ||b||_F * e2``.
  At ``epsilon = 0`` every map built from the same basis shares its range
  while the matrices themselves differ.

``apply_map`` is the plain uncentered product ``x @ f``; the center enters
only through ``reconstruct``, which maps a reduced representation back via
the pseudo-inverse and re-inserts the center in the null space of the map:
``x_tilde @ pinv(f) + 1 mu^T (I - f pinv(f))``. ``reconstruct`` doubles as
the recovery step of the stolen-map attack in :mod:`datacollab.privacy`.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DegenerateDataError

__all__ = [
    "LinearMap",
    "fit_pca",
    "fit_random_projection",
    "fit_perturbed_basis",
    "apply_map",
    "reconstruct",
    "as_rows",
]

KINDS = ("pca", "random_projection", "perturbed_basis")


@dataclass(frozen=True)
class LinearMap:
    """A party's private reduction: ``x -> x @ matrix``.

    ``matrix`` is (features, reduced_dim) with full column rank; ``center``
    has length ``features``. Square (non-reducing) maps are admitted so
    tests can build invertible fixtures, but the fit constructors always
    produce ``reduced_dim < features``.
    """

    matrix: np.ndarray
    center: np.ndarray
    kind: str

    def __post_init__(self):
        matrix = numerics.as_matrix(self.matrix, "matrix")
        center = np.ascontiguousarray(self.center, dtype=np.float64)
        if center.ndim != 1 or center.shape[0] != matrix.shape[0]:
            raise ValueError(
                f"center must be a length-{matrix.shape[0]} vector, got shape {center.shape}"
            )
        if not np.all(np.isfinite(center)):
            raise ValueError("center contains non-finite entries")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if matrix.shape[1] > matrix.shape[0]:
            raise ValueError(
                f"reduced dimension {matrix.shape[1]} exceeds feature count {matrix.shape[0]}"
            )
        s = np.linalg.svd(matrix, compute_uv=False)
        cutoff = numerics.default_rcond(matrix.shape) * s[0] if s[0] > 0 else 0.0
        rank = int(np.count_nonzero(s > cutoff))
        if rank < matrix.shape[1]:
            raise DegenerateDataError(
                f"map matrix has rank {rank}, expected full column rank {matrix.shape[1]}"
            )
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "center", center)

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[1]


def fit_pca(x, target_dim: int) -> LinearMap:
    """PCA map: column mean as center, top right singular vectors as basis."""
    x = numerics.as_matrix(x, "x")
    if x.shape[0] < 2:
        raise ValueError("PCA needs at least 2 samples")
    if not 1 <= target_dim < min(x.shape):
        raise ValueError(
            f"target_dim must be in [1, {min(x.shape) - 1}], got {target_dim}"
        )
    center = x.mean(axis=0)
    centered = x - center
    if not np.any(centered):
        raise DegenerateDataError("all samples identical; PCA is undefined")
    res = numerics.truncated_svd(centered, target_dim)
    return LinearMap(matrix=res.v, center=center, kind="pca")


def fit_random_projection(m: int, target_dim: int, seed) -> LinearMap:
    """Gaussian random projection, entries N(0, 1/target_dim)."""
    if not 1 <= target_dim < m:
        raise ValueError(f"target_dim must be in [1, {m - 1}], got {target_dim}")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, target_dim)) / np.sqrt(target_dim)
    return LinearMap(matrix=matrix, center=np.zeros(m), kind="random_projection")


def fit_perturbed_basis(b, epsilon: float, seed) -> LinearMap:
    """Random recombination of ``b`` plus scaled off-range Gaussian noise.

    ``e1`` (square) is drawn before ``e2``; the draw order is part of the
    determinism contract.
    """
    b = numerics.as_matrix(b, "b")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    m, mt = b.shape
    rng = np.random.default_rng(seed)
    e1 = rng.standard_normal((mt, mt))
    e2 = rng.standard_normal((m, mt))
    matrix = b @ e1 + epsilon * np.linalg.norm(b) * e2
    return LinearMap(matrix=matrix, center=np.zeros(m), kind="perturbed_basis")


def as_rows(x, cols: int, name: str = "x") -> np.ndarray:
    """Like :func:`datacollab.numerics.as_matrix` but permits zero rows,
    for the prediction-time paths where an empty batch is legal."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={x.ndim}")
    if x.shape[1] != cols:
        raise ValueError(f"{name} has {x.shape[1]} columns, expected {cols}")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def apply_map(map_: LinearMap, x) -> np.ndarray:
    """Reduce: ``x @ matrix`` (no centering)."""
    x = as_rows(x, map_.in_dim, "x")
    return x @ map_.matrix


def reconstruct(map_: LinearMap, x_tilde) -> np.ndarray:
    """Best recovery of the original rows from their reduced form.

    Affine: the component in the range of the map is inverted exactly, the
    lost component is replaced by the center's contribution.
    """
    x_tilde = as_rows(x_tilde, map_.out_dim, "x_tilde")
    pinv = numerics.pseudo_inverse(map_.matrix)
    # row offset mu^T (I - f pinv(f)) without forming the m x m projector
    offset = map_.center - map_.matrix @ (pinv @ map_.center)
    return x_tilde @ pinv + offset
