"""Two-role collaboration protocol: users encode, the analyst integrates.

Training phase
  1. A shared anchor dataset (random rows in the feature domain) goes to
     every user.
  2. Each user reduces its private data and the anchor with its own map
     and centralizes only those encodings plus its labels. The map itself
     never leaves the user.
  3. The analyst computes the common target subspace ``z`` (leading left
     singular vectors of the horizontally concatenated anchor encodings)
     and per-party alignment matrices ``g_i`` by least squares
     ``x_tilde_anc_i @ g_i ~ z``.
  4. Aligned party blocks are stacked into one collaboration dataset and a
     kernel ridge model is trained on it.

Prediction phase
  A test batch of party ``i`` is scored through the exact composition
  ``model(g_i(f_i(x_test)))``.

Role separation is structural: analyst-side functions accept only numeric
arrays (inside ``IntermediateRep``), never a ``LinearMap``. Baselines for
comparison experiments (pooled centralized training and single-party
individual training) live here too.
"""

from dataclasses import dataclass, field

import numpy as np

from . import learner, numerics
from .errors import IntegrationRankError
from .mappings import LinearMap, apply_map, as_rows

__all__ = [
    "PartyDataset",
    "AnchorData",
    "IntermediateRep",
    "CollaborationMap",
    "TrainedPipeline",
    "generate_anchor",
    "user_encode",
    "analyst_integrate",
    "assemble_collaboration",
    "train_pipeline",
    "predict",
    "centralized_baseline",
    "individual_baseline",
    "one_hot",
]


def one_hot(labels, num_classes: int | None = None) -> np.ndarray:
    """Encode integer labels as 0/1 rows with a single 1."""
    labels = np.asarray(labels).ravel()
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels.astype(np.int64)] = 1.0
    return out


def _check_one_hot(y: np.ndarray) -> None:
    ok = np.all((y == 0.0) | (y == 1.0)) and np.all(y.sum(axis=1) == 1.0)
    if not ok:
        raise ValueError("y must be one-hot: rows of 0/1 with exactly one 1")


@dataclass(frozen=True)
class PartyDataset:
    """One party's private features and one-hot ground truth.

    Zero-row parties are representable (the down-sampling defense may
    empty a party); protocol training rejects them explicitly.
    """

    x: np.ndarray
    y: np.ndarray
    party_id: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("x and y must be 2-D")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite entries")
        if x.shape[0]:
            _check_one_hot(y)
        if self.party_id < 0:
            raise ValueError("party_id must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class AnchorData:
    """Shareable random rows used to align the parties' encodings."""

    x_anc: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_anc", numerics.as_matrix(self.x_anc, "x_anc"))

    @property
    def n_rows(self) -> int:
        return self.x_anc.shape[0]

    @property
    def n_features(self) -> int:
        return self.x_anc.shape[1]


@dataclass(frozen=True)
class IntermediateRep:
    """What a user actually shares: reduced data, reduced anchor, labels.

    Deliberately holds no map; this is the entire analyst-visible surface
    of a party.
    """

    x_tilde: np.ndarray
    x_tilde_anc: np.ndarray
    y: np.ndarray
    party_id: int

    def __post_init__(self):
        x_tilde_anc = numerics.as_matrix(self.x_tilde_anc, "x_tilde_anc")
        x_tilde = as_rows(self.x_tilde, x_tilde_anc.shape[1], "x_tilde")
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.ndim != 2 or y.shape[0] != x_tilde.shape[0]:
            raise ValueError("y must be 2-D with one row per x_tilde row")
        object.__setattr__(self, "x_tilde", x_tilde)
        object.__setattr__(self, "x_tilde_anc", x_tilde_anc)
        object.__setattr__(self, "y", y)

    @property
    def reduced_dim(self) -> int:
        return self.x_tilde_anc.shape[1]


@dataclass(frozen=True)
class CollaborationMap:
    """Analyst-side integration state.

    ``z`` is column orthogonal; ``g[i]`` aligns party i's encodings into
    the span of ``z``. The kept/discarded spectral masses of the anchor
    concatenation are recorded for the alignment diagnostics.
    """

    z: np.ndarray
    g: tuple
    sigma_kept_norm: float
    sigma_discarded_norm: float

    def __post_init__(self):
        z = numerics.as_matrix(self.z, "z")
        gap = np.abs(z.T @ z - np.eye(z.shape[1])).max()
        if gap > 1e-10:
            raise ValueError(f"z is not column orthogonal (max deviation {gap:.2e})")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "g", tuple(self.g))

    @property
    def n_parties(self) -> int:
        return len(self.g)

    @property
    def collab_dim(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class TrainedPipeline:
    """Everything the two roles hold after training.

    ``maps`` belong to the users (one per party) and are kept here only
    because the simulation plays every role; ``g`` and ``model`` are what
    the analyst returns to each user.
    """

    maps: tuple
    g: tuple
    model: learner.KernelModel
    config_echo: dict = field(default_factory=dict)

    @property
    def n_parties(self) -> int:
        return len(self.maps)


def generate_anchor(m: int, r: int, feature_lo: float, feature_hi: float, seed) -> AnchorData:
    """Random anchor rows, i.i.d. uniform on [feature_lo, feature_hi]."""
    if m < 1 or r < 1:
        raise ValueError("m and r must be at least 1")
    if not feature_lo < feature_hi:
        raise ValueError(
            f"feature_lo must be strictly below feature_hi, got [{feature_lo}, {feature_hi}]"
        )
    rng = np.random.default_rng(seed)
    return AnchorData(x_anc=rng.uniform(feature_lo, feature_hi, size=(r, m)))


def user_encode(party: PartyDataset, map_: LinearMap, anchor: AnchorData) -> IntermediateRep:
    """User-side step: reduce private data and the anchor with one map."""
    if party.x.shape[1] != map_.in_dim:
        raise ValueError(
            f"party {party.party_id} has {party.x.shape[1]} features, map expects {map_.in_dim}"
        )
    if anchor.n_features != map_.in_dim:
        raise ValueError(
            f"anchor has {anchor.n_features} features, map expects {map_.in_dim}"
        )
    return IntermediateRep(
        x_tilde=apply_map(map_, party.x),
        x_tilde_anc=apply_map(map_, anchor.x_anc),
        y=party.y,
        party_id=party.party_id,
    )


def analyst_integrate(reps: list, target_dim: int) -> CollaborationMap:
    """Analyst-side step: common subspace ``z`` plus per-party aligners."""
    if not reps:
        raise ValueError("need at least one intermediate representation")
    rows = {rep.x_tilde_anc.shape[0] for rep in reps}
    if len(rows) != 1:
        raise ValueError(f"anchor encodings disagree on row count: {sorted(rows)}")
    r = rows.pop()
    max_dim = max(rep.reduced_dim for rep in reps)
    if r <= max_dim:
        raise ValueError(
            f"anchor rows ({r}) must exceed the reduced dimension ({max_dim})"
        )
    min_dim = min(rep.reduced_dim for rep in reps)
    if not 1 <= target_dim <= min_dim:
        raise ValueError(f"target_dim must be in [1, {min_dim}], got {target_dim}")
    concat = np.hstack([rep.x_tilde_anc for rep in reps])
    res = numerics.svd(concat)
    s = res.singular_values
    cutoff = numerics.default_rcond(concat.shape) * s[0] if s[0] > 0 else 0.0
    rank = int(np.count_nonzero(s > cutoff))
    if rank < target_dim:
        raise IntegrationRankError(
            f"concatenated anchor encodings have rank {rank}, "
            f"cannot support collaboration dimension {target_dim}"
        )
    z = np.ascontiguousarray(res.u[:, :target_dim])
    g = tuple(numerics.least_squares(rep.x_tilde_anc, z) for rep in reps)
    return CollaborationMap(
        z=z,
        g=g,
        sigma_kept_norm=float(np.linalg.norm(s[:target_dim])),
        sigma_discarded_norm=float(np.linalg.norm(s[target_dim:])),
    )


def assemble_collaboration(reps: list, cmap: CollaborationMap):
    """Stack aligned party blocks (and labels) in party order."""
    if len(reps) != cmap.n_parties:
        raise ValueError(
            f"{len(reps)} representations but {cmap.n_parties} alignment matrices"
        )
    blocks = []
    for rep, g in zip(reps, cmap.g):
        if rep.reduced_dim != g.shape[0]:
            raise ValueError(
                f"party {rep.party_id}: reduced dim {rep.reduced_dim} "
                f"does not match aligner rows {g.shape[0]}"
            )
        blocks.append(rep.x_tilde @ g)
    x_hat = np.vstack(blocks)
    label_cols = {rep.y.shape[1] for rep in reps}
    if len(label_cols) != 1:
        raise ValueError(f"parties disagree on label width: {sorted(label_cols)}")
    y = np.vstack([rep.y for rep in reps])
    return x_hat, y


def train_pipeline(
    parties: list,
    maps: list,
    anchor: AnchorData,
    target_dim: int,
    ridge_lambda: float,
    knn_k: int = learner.DEFAULT_KNN_K,
) -> TrainedPipeline:
    """Run the full training phase: encode, integrate, assemble, fit."""
    if not parties:
        raise ValueError("need at least one party")
    if len(parties) != len(maps):
        raise ValueError(f"{len(parties)} parties but {len(maps)} maps")
    for party in parties:
        if party.n_samples == 0:
            raise ValueError(f"party {party.party_id} is empty")
    reps = [user_encode(p, f, anchor) for p, f in zip(parties, maps)]
    cmap = analyst_integrate(reps, target_dim)
    x_hat, y = assemble_collaboration(reps, cmap)
    model = learner.fit_krr(x_hat, y, ridge_lambda, knn_k)
    echo = {
        "n_parties": len(parties),
        "anchor_rows": anchor.n_rows,
        "n_features": anchor.n_features,
        "target_dim": target_dim,
        "ridge_lambda": ridge_lambda,
        "knn_k": knn_k,
        "party_sizes": [p.n_samples for p in parties],
    }
    return TrainedPipeline(maps=tuple(maps), g=cmap.g, model=model, config_echo=echo)


def predict(pipeline: TrainedPipeline, party_id: int, x_test) -> np.ndarray:
    """Score a test batch through party ``party_id``'s exact chain."""
    if not 0 <= party_id < pipeline.n_parties:
        raise ValueError(f"unknown party_id {party_id} (have {pipeline.n_parties})")
    reduced = apply_map(pipeline.maps[party_id], x_test)
    return learner.predict_scores(pipeline.model, reduced @ pipeline.g[party_id])


def centralized_baseline(
    x, y_onehot, dr, ridge_lambda: float, knn_k: int = learner.DEFAULT_KNN_K
) -> learner.KernelModel:
    """Train on all data pooled, reduced by one shared matrix ``dr``."""
    x = numerics.as_matrix(x, "x")
    dr = numerics.as_matrix(dr, "dr")
    if x.shape[1] != dr.shape[0]:
        raise ValueError(f"x has {x.shape[1]} features, dr expects {dr.shape[0]}")
    return learner.fit_krr(x @ dr, y_onehot, ridge_lambda, knn_k)


def individual_baseline(
    party: PartyDataset,
    map_: LinearMap,
    ridge_lambda: float,
    knn_k: int = learner.DEFAULT_KNN_K,
) -> learner.KernelModel:
    """Train on a single party's own reduced data."""
    return learner.fit_krr(apply_map(map_, party.x), party.y, ridge_lambda, knn_k)
