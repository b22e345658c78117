"""Recovery attack, disclosure metrics, down-sampling defense, trade-off."""

import numpy as np
import pytest

from datacollab import numerics, privacy, protocol
from datacollab.errors import DegenerateSampleError
from datacollab.mappings import LinearMap, apply_map, fit_pca

from oracles import blobs


class TestReconstructionAttack:
    def test_full_rank_square_recovers_exactly(self):
        rng = np.random.default_rng(0)
        mat = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        m = LinearMap(matrix=mat, center=rng.standard_normal(5), kind="pca")
        x = rng.standard_normal((8, 5))
        recovered = privacy.reconstruction_attack(apply_map(m, x), m)
        report = privacy.edr_distances(x, recovered)
        assert report.min_dist <= 1e-10
        assert np.all(report.per_sample_dist <= 1e-10)

    def test_error_is_discarded_component(self):
        # PCA keeping all but one direction: the loss is the sample's
        # component along the dropped right singular vector
        rng = np.random.default_rng(1)
        x = rng.standard_normal((30, 4)) * np.array([4.0, 3.0, 2.0, 1.0])
        m = fit_pca(x, 3)
        recovered = privacy.reconstruction_attack(apply_map(m, x), m)
        centered = x - m.center
        res = numerics.svd(centered)
        dropped = res.v[:, 3]
        expected = np.abs(centered @ dropped)
        actual = np.linalg.norm(x - recovered, axis=1)
        assert np.abs(actual - expected).max() <= 1e-10

    def test_center_recovers_exactly(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((20, 6))
        m = fit_pca(x, 2)
        mu = m.center[None, :]
        recovered = privacy.reconstruction_attack(apply_map(m, mu), m)
        assert np.abs(recovered - mu).max() <= 1e-10

    def test_projector_arithmetic_agreement(self):
        # rank-deficient map: error equals the complement-projected shift
        rng = np.random.default_rng(3)
        m = LinearMap(
            matrix=rng.standard_normal((6, 2)),
            center=rng.standard_normal(6),
            kind="pca",
        )
        x = rng.standard_normal((10, 6))
        recovered = privacy.reconstruction_attack(apply_map(m, x), m)
        proj = m.matrix @ numerics.pseudo_inverse(m.matrix)
        expected = np.linalg.norm((x - m.center) @ (np.eye(6) - proj), axis=1)
        actual = np.linalg.norm(x - recovered, axis=1)
        assert np.abs(actual - expected).max() <= 1e-10


class TestEdrDistances:
    def test_perfect_recovery_is_zero(self):
        x = np.arange(6.0).reshape(2, 3) + 1
        report = privacy.edr_distances(x, x.copy())
        assert report.min_dist == 0.0 and report.mean_dist == 0.0

    def test_total_loss_is_one(self):
        report = privacy.edr_distances(np.array([[3.0, 4.0]]), np.zeros((1, 2)))
        assert report.per_sample_dist[0] == 1.0

    def test_zero_norm_row_named(self):
        x = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(DegenerateSampleError, match="row 1"):
            privacy.edr_distances(x, x)

    def test_aggregates_consistent(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((50, 4)) + 3.0
        xp = x + rng.standard_normal((50, 4)) * 0.1
        report = privacy.edr_distances(x, xp)
        assert report.min_dist == report.per_sample_dist.min()
        assert abs(report.mean_dist - report.per_sample_dist.mean()) <= 1e-15
        assert np.all(report.per_sample_dist >= 0)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((20, 5)) + 2.0
        xp = x + rng.standard_normal((20, 5)) * 0.3
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        a = privacy.edr_distances(x, xp).per_sample_dist
        b = privacy.edr_distances(x @ q, xp @ q).per_sample_dist
        assert np.abs(a - b).max() <= 1e-12


def make_party(rng, n=40, m=6, classes=3):
    x = rng.standard_normal((n, m)) + 2.0
    y = np.eye(classes)[rng.integers(0, classes, n)]
    return protocol.PartyDataset(x=x, y=y, party_id=0)


class TestDownSample:
    def test_zero_epsilon_identity(self):
        rng = np.random.default_rng(6)
        party = make_party(rng)
        m = fit_pca(party.x, 2)
        out = privacy.down_sample(party, m, 0.0)
        assert out is party

    def test_above_max_empties(self):
        rng = np.random.default_rng(7)
        party = make_party(rng)
        m = fit_pca(party.x, 2)
        out = privacy.down_sample(party, m, 1e9)
        assert out.n_samples == 0

    def test_guarantee_exact(self):
        rng = np.random.default_rng(8)
        party = make_party(rng)
        m = fit_pca(party.x, 2)
        for eps in (1e-3, 0.05, 0.2, 0.5):
            out = privacy.down_sample(party, m, eps)
            if out.n_samples == 0:
                continue
            recovered = privacy.reconstruction_attack(apply_map(m, out.x), m)
            report = privacy.edr_distances(out.x, recovered)
            assert report.min_dist >= eps  # exact, no tolerance

    def test_ties_retained(self):
        rng = np.random.default_rng(9)
        party = make_party(rng)
        m = fit_pca(party.x, 2)
        recovered = privacy.reconstruction_attack(apply_map(m, party.x), m)
        d = privacy.edr_distances(party.x, recovered).per_sample_dist
        eps = float(d[5])  # threshold exactly at an existing distance
        out = privacy.down_sample(party, m, eps)
        assert out.n_samples == int((d >= eps).sum())

    def test_monotone_nested(self):
        rng = np.random.default_rng(10)
        party = make_party(rng, n=60)
        m = fit_pca(party.x, 2)
        grid = [0.0, 0.01, 0.05, 0.1, 0.3]
        kept = []
        for eps in grid:
            out = privacy.down_sample(party, m, eps)
            rows = {tuple(r) for r in out.x}
            kept.append(rows)
        for small, large in zip(kept[1:], kept[:-1]):
            assert small <= large  # subset as epsilon grows

    def test_labels_filtered_in_lockstep(self):
        rng = np.random.default_rng(11)
        party = make_party(rng)
        m = fit_pca(party.x, 2)
        recovered = privacy.reconstruction_attack(apply_map(m, party.x), m)
        d = privacy.edr_distances(party.x, recovered).per_sample_dist
        eps = float(np.median(d))
        out = privacy.down_sample(party, m, eps)
        keep = d >= eps
        assert np.array_equal(out.x, party.x[keep])
        assert np.array_equal(out.y, party.y[keep])


class TestTradeoffExperiment:
    @pytest.fixture(scope="class")
    @staticmethod
    def table():
        rng = np.random.default_rng(12)
        x, labels = blobs(60, 3, 12, separation=6.0, rng=rng)
        xt, lt = blobs(40, 3, 12, separation=6.0, rng=rng)
        return privacy.tradeoff_experiment(
            x,
            labels,
            xt,
            lt,
            parties=3,
            per_party=30,
            target_dim=4,
            anchor_rows=40,
            ridge_lambda=0.1,
            epsilon_grid=(0.0, 0.05, 0.2, 0.6),
            trials=3,
            master_seed=77,
        )

    def test_structure(self, table):
        assert len(table.rows) == 4
        assert table.rows[0].epsilon == 0.0
        assert table.rows[0].avg_samples == 30.0
        assert table.trials == 3

    def test_min_edr_respects_threshold(self, table):
        for row in table.rows[1:]:
            if row.trials:
                assert row.min_edr >= row.epsilon

    def test_samples_nonincreasing(self, table):
        counts = [r.avg_samples for r in table.rows]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_baselines_present(self, table):
        assert 0.0 <= table.individual_acc <= 1.0
        assert 0.0 <= table.centralized_acc <= 1.0
        assert table.centralized_samples == 90.0
        assert table.individual_samples == 30.0

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        x, labels = blobs(40, 3, 10, separation=6.0, rng=rng)
        xt, lt = blobs(20, 3, 10, separation=6.0, rng=rng)
        kwargs = dict(
            parties=2, per_party=20, target_dim=3, anchor_rows=25,
            ridge_lambda=0.1, epsilon_grid=(0.0, 0.1), trials=2, master_seed=5,
        )
        t1 = privacy.tradeoff_experiment(x, labels, xt, lt, **kwargs)
        t2 = privacy.tradeoff_experiment(x, labels, xt, lt, **kwargs)
        assert t1 == t2
