"""Pairwise-distance kernels with a compiled core and a numpy fallback.

The compiled extension (Cython) is preferred when it was built; otherwise
the numpy implementation is used transparently. Setting the environment
variable ``DATACOLLAB_PURE_PYTHON=1`` forces the fallback, which is how the
test suite and the benchmark exercise both paths.

Both backends expose the same four functions with identical semantics:

    sq_dists(a, b)                          -> (na, nb) squared distances
    gaussian_gram(a, b, scales_a, scales_b) -> locally scaled Gaussian kernel
    kth_smallest_sq_dists(a, b, k, exclude_diagonal, positive_only)
                                            -> (kth, min_positive) per row
    rowwise_norms(x, x_prime)               -> (diff norms, row norms)
"""

import os

from . import _pairwise_np

try:
    from . import _pairwise_c
except ImportError:  # extension not built; fall back silently
    _pairwise_c = None

if _pairwise_c is not None and not os.environ.get("DATACOLLAB_PURE_PYTHON"):
    _impl = _pairwise_c
else:
    _impl = _pairwise_np

HAVE_COMPILED = _pairwise_c is not None

sq_dists = _impl.sq_dists
gaussian_gram = _impl.gaussian_gram
kth_smallest_sq_dists = _impl.kth_smallest_sq_dists
rowwise_norms = _impl.rowwise_norms


def backend_name() -> str:
    """Name of the backend selected at import time."""
    return _impl.BACKEND


def available_backends():
    """The importable backend modules, compiled one first when present."""
    mods = [_pairwise_np]
    if _pairwise_c is not None:
        mods.insert(0, _pairwise_c)
    return mods
