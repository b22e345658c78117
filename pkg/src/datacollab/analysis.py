"""Alignment diagnostics and the perturbation accuracy experiment.

Four quantities measure how far a collaboration run is from the matching
centralized run (all reported by the experiment driver as tau1..tau4):

* ``anchor_tail_ratio`` (tau1): discarded over kept spectral mass of the
  concatenated anchor encodings — computable by the analyst alone.
* ``basis_tail_ratio`` (tau2): same ratio for the concatenation of the
  parties' reduction matrices — needs the private maps, diagnostic only.
* ``map_deviation`` (tau3): relative Frobenius gap between the pooled data
  pushed through the first party's combined map and the blockwise
  per-party combined maps.
* ``prediction_divergence`` (tau4): 1 - NMI between collaborative and
  centralized test predictions.

When every party's map shares one range (and the anchor excites it fully)
all four vanish: the collaboration is exactly the centralized analysis
with the first party's combined reduction. The experiment driver samples
perturbation levels log-uniformly, records the diagnostics per trial, and
reports their log-log correlations plus an empirical bound check of
``tau4 <= constant * sqrt(tau1)``.
"""

from dataclasses import dataclass

import numpy as np

from . import learner, numerics, protocol, seeding
from .errors import DegenerateDataError
from .mappings import fit_pca, fit_perturbed_basis

__all__ = [
    "TrialDiagnostics",
    "anchor_tail_ratio",
    "basis_tail_ratio",
    "map_deviation",
    "prediction_divergence",
    "run_perturbation_trial",
    "accuracy_experiment",
    "correlations",
    "bound_check",
    "positive_records",
]


@dataclass(frozen=True)
class TrialDiagnostics:
    """One trial's diagnostics at perturbation level ``epsilon``."""

    epsilon: float
    tau1: float
    tau2: float
    tau3: float
    tau4: float
    seed: int

    def as_tuple(self):
        return (self.tau1, self.tau2, self.tau3, self.tau4)


def anchor_tail_ratio(cmap: protocol.CollaborationMap) -> float:
    """Discarded over kept spectral mass recorded at integration time."""
    if cmap.sigma_kept_norm == 0.0:
        raise DegenerateDataError("kept spectral mass is zero")
    return cmap.sigma_discarded_norm / cmap.sigma_kept_norm


def basis_tail_ratio(f_list, target_dim: int) -> float:
    """Tail-over-total singular mass of the horizontally stacked maps."""
    mats = [numerics.as_matrix(f, f"f[{i}]") for i, f in enumerate(f_list)]
    rows = {m.shape[0] for m in mats}
    if len(rows) != 1:
        raise ValueError(f"maps disagree on feature count: {sorted(rows)}")
    concat = np.hstack(mats)
    if not 1 <= target_dim <= min(concat.shape):
        raise ValueError(f"target_dim must be in [1, {min(concat.shape)}]")
    s = numerics.svd(concat).singular_values
    total = float(np.linalg.norm(s))
    if total == 0.0:
        raise DegenerateDataError("stacked maps have zero norm")
    return float(np.linalg.norm(s[target_dim:])) / total


def map_deviation(x, party_row_counts, f_list, g_list) -> float:
    """Relative gap between the reference combined map applied to all rows
    and the per-party combined maps applied blockwise."""
    x = numerics.as_matrix(x, "x")
    counts = [int(c) for c in party_row_counts]
    if sum(counts) != x.shape[0]:
        raise ValueError(
            f"row counts {counts} do not partition {x.shape[0]} rows"
        )
    if not len(counts) == len(f_list) == len(g_list):
        raise ValueError("parties, maps and aligners must align")
    combined = [f @ g for f, g in zip(f_list, g_list)]
    reference = x @ combined[0]
    ref_norm = np.linalg.norm(reference)
    if ref_norm == 0.0:
        raise DegenerateDataError("reference projection has zero norm")
    blocks = []
    start = 0
    for count, fg in zip(counts, combined):
        blocks.append(x[start : start + count] @ fg)
        start += count
    return float(np.linalg.norm(reference - np.vstack(blocks)) / ref_norm)


def prediction_divergence(pred_a, pred_b) -> float:
    """1 - NMI between two label vectors; 0 iff they induce one partition."""
    return 1.0 - learner.nmi(pred_a, pred_b)


def run_perturbation_trial(
    x_train,
    y_onehot,
    x_test,
    basis,
    epsilon: float,
    *,
    parties,
    anchor_rows,
    anchor_range,
    ridge_lambda,
    knn_k,
    master_seed,
    trial,
) -> TrialDiagnostics:
    """One trial: perturbed per-party maps at level ``epsilon``, full
    collaboration run, matching centralized run, all four diagnostics."""
    n = x_train.shape[0]
    per = n // parties
    datasets = [
        protocol.PartyDataset(
            x=x_train[i * per : (i + 1) * per],
            y=y_onehot[i * per : (i + 1) * per],
            party_id=i,
        )
        for i in range(parties)
    ]
    maps = [
        fit_perturbed_basis(
            basis, epsilon, seeding.spawn_rng(master_seed, seeding.MAP_STREAM, trial, i)
        )
        for i in range(parties)
    ]
    anchor = protocol.generate_anchor(
        x_train.shape[1],
        anchor_rows,
        anchor_range[0],
        anchor_range[1],
        seeding.spawn_rng(master_seed, seeding.ANCHOR_STREAM, trial),
    )
    reps = [protocol.user_encode(p, m, anchor) for p, m in zip(datasets, maps)]
    target_dim = basis.shape[1]
    cmap = protocol.analyst_integrate(reps, target_dim)
    x_hat, y_stacked = protocol.assemble_collaboration(reps, cmap)
    model_cda = learner.fit_krr(x_hat, y_stacked, ridge_lambda, knn_k)

    reference = maps[0].matrix @ cmap.g[0]
    model_ca = protocol.centralized_baseline(
        x_train, y_onehot, reference, ridge_lambda, knn_k
    )
    pred_cda = learner.classify(
        learner.predict_scores(model_cda, (x_test @ maps[0].matrix) @ cmap.g[0])
    )
    pred_ca = learner.classify(learner.predict_scores(model_ca, x_test @ reference))
    return TrialDiagnostics(
        epsilon=float(epsilon),
        tau1=anchor_tail_ratio(cmap),
        tau2=basis_tail_ratio([m.matrix for m in maps], target_dim),
        tau3=map_deviation(x_train, [per] * parties, [m.matrix for m in maps], list(cmap.g)),
        tau4=prediction_divergence(pred_cda, pred_ca),
        seed=int(trial),
    )


def accuracy_experiment(
    x_train,
    labels_train,
    x_test,
    *,
    parties,
    intermediate_dim,
    anchor_rows,
    ridge_lambda,
    knn_k=learner.DEFAULT_KNN_K,
    trials,
    eps_low=1e-6,
    eps_high=1e-2,
    zero_eps_trials=10,
    master_seed=0,
    anchor_range=None,
    map_executor=map,
):
    """Perturbation sweep around a shared PCA basis.

    Returns ``(records, zero_records)``: the log-uniform epsilon trials and
    the exact-shared-range batch. The training rows are used as given and
    split into equal consecutive party blocks; the basis is PCA on the
    pooled training data.
    """
    x_train = numerics.as_matrix(x_train, "x_train")
    labels_train = np.asarray(labels_train).ravel()
    if x_train.shape[0] % parties:
        raise ValueError(
            f"{x_train.shape[0]} training rows do not split evenly into {parties} parties"
        )
    if trials < 2:
        raise ValueError("need at least 2 trials")
    y_onehot = protocol.one_hot(labels_train)
    basis = fit_pca(x_train, intermediate_dim).matrix
    if anchor_range is None:
        anchor_range = (float(x_train.min()), float(x_train.max()))

    common = dict(
        parties=parties,
        anchor_rows=anchor_rows,
        anchor_range=anchor_range,
        ridge_lambda=ridge_lambda,
        knn_k=knn_k,
        master_seed=master_seed,
    )

    def _main(trial):
        rng = seeding.spawn_rng(master_seed, seeding.EPSILON_STREAM, trial)
        eps = float(np.exp(rng.uniform(np.log(eps_low), np.log(eps_high))))
        return run_perturbation_trial(
            x_train, y_onehot, x_test, basis, eps, trial=trial, **common
        )

    def _zero(trial):
        return run_perturbation_trial(
            x_train, y_onehot, x_test, basis, 0.0, trial=trials + trial, **common
        )

    records = list(map_executor(_main, range(trials)))
    zero_records = list(map_executor(_zero, range(zero_eps_trials)))
    return records, zero_records


def positive_records(records):
    """Records usable on log axes: every diagnostic strictly positive."""
    return [r for r in records if all(t > 0.0 for t in r.as_tuple())]


def correlations(records) -> np.ndarray:
    """4x4 Pearson matrix of the log diagnostics."""
    if len(records) < 2:
        raise ValueError("need at least 2 records")
    data = np.array([r.as_tuple() for r in records])
    if np.any(data <= 0.0):
        raise ValueError("all diagnostics must be positive; filter with positive_records")
    logs = np.log(data)
    if np.any(logs.std(axis=0) == 0.0):
        raise DegenerateDataError("a diagnostic column has zero variance")
    return np.corrcoef(logs, rowvar=False)


def bound_check(records, constant: float) -> float:
    """Fraction of records with tau4 <= constant * sqrt(tau1).

    tau4 = 0 satisfies the bound by convention; tau1 = 0 with tau4 > 0
    violates it.
    """
    if not records:
        raise ValueError("need at least one record")
    ok = 0
    for r in records:
        if r.tau4 == 0.0:
            ok += 1
        elif r.tau1 > 0.0 and np.log(r.tau4) <= 0.5 * np.log(r.tau1) + np.log(constant):
            ok += 1
    return ok / len(records)
