"""Recovery-attack privacy metrics and the down-sampling defense.

The threat model: an adversary who obtained a party's reduction map (and
its data center) inverts the shared encodings through the pseudo-inverse.
:func:`reconstruction_attack` is exactly the affine recovery from
:mod:`datacollab.mappings`; what the attacker cannot recover is the
component of each sample outside the map's range.

Privacy is quantified per sample by the relative recovery error
``||x - x'|| / ||x||``; the minimum over a party's samples is the
worst-case disclosure level (reported as ``min_edr`` in the trade-off
table), the mean estimates the expected one. The down-sampling defense
removes every training sample whose error falls strictly below a target
``epsilon``, which makes the worst case >= epsilon by construction at the
cost of training data.

``tradeoff_experiment`` drives the full privacy/accuracy study: per trial
it samples party datasets, fits per-party PCA maps, filters each party at
each defense level, runs the collaboration protocol on the survivors, and
scores the shared test set through every retained party's chain, alongside
pooled-centralized and per-party-individual baselines.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels, learner, protocol, seeding
from .errors import DegenerateSampleError
from .mappings import LinearMap, apply_map, fit_pca, reconstruct

__all__ = [
    "DisclosureReport",
    "reconstruction_attack",
    "edr_distances",
    "down_sample",
    "TradeoffRow",
    "TradeoffTable",
    "tradeoff_experiment",
]


@dataclass(frozen=True)
class DisclosureReport:
    """Per-sample relative recovery errors for one party."""

    per_sample_dist: np.ndarray
    min_dist: float
    mean_dist: float
    party_id: int


def reconstruction_attack(x_tilde, map_: LinearMap) -> np.ndarray:
    """Recover data from shared encodings with a stolen map.

    Identical to :func:`datacollab.mappings.reconstruct`; exposed here as
    the attacker capability so experiment code reads as the threat model.
    """
    return reconstruct(map_, x_tilde)


def edr_distances(x, x_prime, party_id: int = 0) -> DisclosureReport:
    """Relative recovery error per row, with min/mean aggregates."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    x_prime = np.ascontiguousarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape or x.ndim != 2:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_prime.shape}")
    if x.shape[0] == 0:
        raise ValueError("need at least one sample")
    diff_norm, row_norm = _kernels.rowwise_norms(x, x_prime)
    zero = np.nonzero(row_norm == 0.0)[0]
    if zero.size:
        raise DegenerateSampleError(
            f"sample row {zero[0]} has zero norm; relative error undefined"
        )
    dist = diff_norm / row_norm
    return DisclosureReport(
        per_sample_dist=dist,
        min_dist=float(dist.min()),
        mean_dist=float(dist.mean()),
        party_id=party_id,
    )


def down_sample(party: protocol.PartyDataset, map_: LinearMap, epsilon: float) -> protocol.PartyDataset:
    """Drop training samples whose recovery error is below ``epsilon``.

    Rows at exactly ``epsilon`` are retained. ``epsilon = 0`` is the
    identity. The filtered party may be empty; excluding it from training
    is the protocol driver's call.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0.0:
        return party
    report = edr_distances(
        party.x, reconstruction_attack(apply_map(map_, party.x), map_), party.party_id
    )
    keep = report.per_sample_dist >= epsilon
    return protocol.PartyDataset(
        x=party.x[keep], y=party.y[keep], party_id=party.party_id
    )


@dataclass(frozen=True)
class TradeoffRow:
    """Aggregates for one defense level, averaged over successful trials."""

    epsilon: float
    min_edr: float
    avg_samples: float
    avg_acc: float
    trials: int
    failures: int = 0


@dataclass(frozen=True)
class TradeoffTable:
    """Defense sweep plus the two reference baselines."""

    rows: tuple
    centralized_acc: float
    centralized_samples: float
    individual_acc: float
    individual_samples: float
    trials: int


def _trial_parties(x_pool, labels_pool, n_classes, parties, per_party, rng):
    """Draw a disjoint per-party sample from the pool."""
    need = parties * per_party
    if need > x_pool.shape[0]:
        raise ValueError(
            f"pool has {x_pool.shape[0]} rows, need {need} for {parties} parties"
        )
    take = rng.choice(x_pool.shape[0], size=need, replace=False)
    out = []
    for i in range(parties):
        idx = take[i * per_party : (i + 1) * per_party]
        out.append(
            protocol.PartyDataset(
                x=x_pool[idx],
                y=protocol.one_hot(labels_pool[idx], n_classes),
                party_id=i,
            )
        )
    return out


def run_tradeoff_trial(
    x_pool,
    labels_pool,
    x_test,
    labels_test,
    *,
    n_classes,
    parties,
    per_party,
    target_dim,
    anchor_rows,
    anchor_range,
    ridge_lambda,
    knn_k,
    epsilon_grid,
    master_seed,
    trial,
):
    """One trial of the sweep; returns per-epsilon dicts plus baselines."""
    rng = seeding.spawn_rng(master_seed, seeding.SAMPLE_STREAM, trial)
    party_data = _trial_parties(
        x_pool, labels_pool, n_classes, parties, per_party, rng
    )
    maps = [fit_pca(p.x, target_dim) for p in party_data]
    anchor = protocol.generate_anchor(
        x_pool.shape[1],
        anchor_rows,
        anchor_range[0],
        anchor_range[1],
        seeding.spawn_rng(master_seed, seeding.ANCHOR_STREAM, trial),
    )
    reports = [
        edr_distances(
            p.x, reconstruction_attack(apply_map(m, p.x), m), p.party_id
        )
        for p, m in zip(party_data, maps)
    ]

    results = []
    for eps in epsilon_grid:
        retained = [r.per_sample_dist >= eps for r in reports]
        counts = [int(k.sum()) for k in retained]
        kept_parties = []
        kept_maps = []
        for p, m, keep in zip(party_data, maps, retained):
            if keep.any():
                kept_parties.append(
                    protocol.PartyDataset(
                        x=p.x[keep], y=p.y[keep], party_id=len(kept_parties)
                    )
                )
                kept_maps.append(m)
        total_kept = sum(p.n_samples for p in kept_parties)
        if not kept_parties or total_kept <= knn_k:
            # nothing left to train on (or too little for local scaling):
            # record a failed cell rather than crash the sweep
            results.append({"epsilon": eps, "ok": False})
            continue
        min_edr = min(
            float(r.per_sample_dist[keep].min())
            for r, keep in zip(reports, retained)
            if keep.any()
        )
        pipeline = protocol.train_pipeline(
            kept_parties, kept_maps, anchor, target_dim, ridge_lambda, knn_k
        )
        accs = [
            learner.accuracy(
                learner.classify(protocol.predict(pipeline, i, x_test)), labels_test
            )
            for i in range(len(kept_parties))
        ]
        results.append(
            {
                "epsilon": eps,
                "ok": True,
                "min_edr": min_edr,
                "avg_samples": float(np.mean(counts)),
                "acc": float(np.mean(accs)),
            }
        )

    pooled_x = np.vstack([p.x for p in party_data])
    pooled_y = np.vstack([p.y for p in party_data])
    pooled_dr = fit_pca(pooled_x, target_dim)
    model_ca = protocol.centralized_baseline(
        pooled_x, pooled_y, pooled_dr.matrix, ridge_lambda, knn_k
    )
    ca_acc = learner.accuracy(
        learner.classify(learner.predict_scores(model_ca, x_test @ pooled_dr.matrix)),
        labels_test,
    )
    ind_accs = []
    for p, m in zip(party_data, maps):
        model = protocol.individual_baseline(p, m, ridge_lambda, knn_k)
        ind_accs.append(
            learner.accuracy(
                learner.classify(
                    learner.predict_scores(model, apply_map(m, x_test))
                ),
                labels_test,
            )
        )
    return {
        "per_eps": results,
        "centralized_acc": ca_acc,
        "individual_acc": float(np.mean(ind_accs)),
        "pooled_samples": pooled_x.shape[0],
    }


def tradeoff_experiment(
    x_pool,
    labels_pool,
    x_test,
    labels_test,
    *,
    parties,
    per_party,
    target_dim,
    anchor_rows,
    ridge_lambda,
    knn_k=learner.DEFAULT_KNN_K,
    epsilon_grid=(0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.2, 0.3, 0.4, 0.5),
    trials=10,
    master_seed=0,
    anchor_range=None,
    map_executor=map,
) -> TradeoffTable:
    """Run the defense sweep and average over trials.

    ``anchor_range`` defaults to the empirical [min, max] of the pool.
    ``map_executor`` lets the caller parallelize trials (results are
    identical either way: every trial derives its own seeds).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    labels_pool = np.asarray(labels_pool).ravel()
    labels_test = np.asarray(labels_test).ravel()
    n_classes = int(max(labels_pool.max(), labels_test.max())) + 1
    if anchor_range is None:
        anchor_range = (float(x_pool.min()), float(x_pool.max()))

    def _one(trial):
        return run_tradeoff_trial(
            x_pool,
            labels_pool,
            x_test,
            labels_test,
            n_classes=n_classes,
            parties=parties,
            per_party=per_party,
            target_dim=target_dim,
            anchor_rows=anchor_rows,
            anchor_range=anchor_range,
            ridge_lambda=ridge_lambda,
            knn_k=knn_k,
            epsilon_grid=tuple(epsilon_grid),
            master_seed=master_seed,
            trial=trial,
        )

    outcomes = list(map_executor(_one, range(trials)))
    rows = []
    for j, eps in enumerate(epsilon_grid):
        ok = [o["per_eps"][j] for o in outcomes if o["per_eps"][j]["ok"]]
        failures = trials - len(ok)
        if ok:
            rows.append(
                TradeoffRow(
                    epsilon=float(eps),
                    min_edr=float(np.mean([r["min_edr"] for r in ok])),
                    avg_samples=float(np.mean([r["avg_samples"] for r in ok])),
                    avg_acc=float(np.mean([r["acc"] for r in ok])),
                    trials=len(ok),
                    failures=failures,
                )
            )
        else:
            rows.append(
                TradeoffRow(
                    epsilon=float(eps),
                    min_edr=float("nan"),
                    avg_samples=0.0,
                    avg_acc=float("nan"),
                    trials=0,
                    failures=failures,
                )
            )
    return TradeoffTable(
        rows=tuple(rows),
        centralized_acc=float(np.mean([o["centralized_acc"] for o in outcomes])),
        centralized_samples=float(np.mean([o["pooled_samples"] for o in outcomes])),
        individual_acc=float(np.mean([o["individual_acc"] for o in outcomes])),
        individual_samples=float(per_party),
        trials=trials,
    )
