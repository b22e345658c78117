"""Exception types shared across the package.

Everything derives from ValueError so callers that only care about
"bad input" can catch one base class, while tests and experiment
drivers can distinguish the failure modes below.
"""


class DegenerateDataError(ValueError):
    """Input data cannot support the requested construction.

    Raised e.g. for zero-variance data handed to PCA, a perturbed basis
    that lost rank, or a ratio whose reference norm is zero.
    """


class IntegrationRankError(ValueError):
    """Concatenated anchor encodings have too small a rank for the
    requested collaboration dimension. The message names the rank found."""


class DegenerateSampleError(ValueError):
    """A sample row is unusable for a relative-error metric (zero norm).
    The message names the offending row index."""


class IdxFormatError(ValueError):
    """An IDX dataset file is malformed. The message names the byte
    offset at which parsing failed."""
