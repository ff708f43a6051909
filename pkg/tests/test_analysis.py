import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xim.analysis import (
    METRICS,
    MethodSpec,
    continuity,
    evaluate_protocol,
    format_keyvalue,
    format_table,
    pair_distances,
    pca_embed,
    sammon_error,
    spearman_rho,
    trust_cont_curves,
    trustworthiness,
    xim_cost,
)
from xim.core import ConfigError, DomainError, Lattice, TrainConfig, build_lattice
from xim.kernels import KernelSpec
from xim.synth import make_clusters

from oracles import trust_cont
from oracles import xim_cost as naive_cost


class TestSammon:
    def test_identity(self):
        assert sammon_error([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0

    def test_hand_value(self):
        assert sammon_error([1.0, 1.0], [2.0, 2.0]) == 1.0

    def test_zero_pair_skipped(self):
        assert sammon_error([0.0, 1.0, 1.0], [5.0, 2.0, 2.0]) == 1.0

    def test_all_zero(self):
        with pytest.raises(DomainError):
            sammon_error([0.0, 0.0], [1.0, 1.0])


class TestSpearman:
    def test_identical(self):
        assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0

    def test_reversed(self):
        assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_hand_value(self):
        assert spearman_rho([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, rel=1e-15)

    def test_constant(self):
        with pytest.raises(DomainError):
            spearman_rho([1, 1, 1], [1, 2, 3])

    def test_against_scipy(self):
        from scipy.stats import spearmanr

        rng = np.random.default_rng(0)
        a, b = rng.integers(0, 5, 40).astype(float), rng.standard_normal(40)
        assert spearman_rho(a, b) == pytest.approx(spearmanr(a, b).statistic, rel=1e-12)


class TestTrustContinuity:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal((30, 3))
        for k in (1, 5, 14):
            assert trustworthiness(x, x, k) == 1.0
            assert continuity(x, x, k) == 1.0

    def test_k_bounds(self):
        x = np.random.default_rng(0).standard_normal((10, 2))
        with pytest.raises(ConfigError):
            trustworthiness(x, x, 0)
        with pytest.raises(ConfigError):
            trustworthiness(x, x, 5)

    @pytest.mark.parametrize("seed", range(50))
    def test_against_naive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 61))
        x = rng.standard_normal((n, int(rng.integers(2, 6))))
        y = rng.standard_normal((n, 2))
        if seed % 5 == 0:
            # grid-valued embedding with plenty of distance ties
            y = np.round(y)
        k = int(rng.integers(1, (n - 1) // 2 + 1))
        t_ref, c_ref = trust_cont(x.tolist(), y.tolist(), k)
        assert trustworthiness(x, y, k) == pytest.approx(t_ref, abs=1e-12)
        assert continuity(x, y, k) == pytest.approx(c_ref, abs=1e-12)
        assert 0 <= trustworthiness(x, y, k) <= 1 and 0 <= continuity(x, y, k) <= 1

    def test_curves(self):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal((25, 4)), rng.standard_normal((25, 2))
        t, c = trust_cont_curves(x, y, range(1, 6))
        np.testing.assert_array_equal(t, [trustworthiness(x, y, k) for k in range(1, 6)])
        np.testing.assert_array_equal(c, [continuity(x, y, k) for k in range(1, 6)])

    @given(st.integers(6, 30), st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_ranges(self, n, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((n, 3)), rng.standard_normal((n, 2))
        k = (n - 1) // 2
        assert 0 <= trustworthiness(x, y, k) <= 1
        assert 0 <= continuity(x, y, k) <= 1
        assert sammon_error(pair_distances(x), pair_distances(y)) >= 0
        assert -1 <= spearman_rho(pair_distances(x), pair_distances(y)) <= 1


class TestPCA:
    def test_rank_one(self):
        t = np.linspace(-2, 3, 20)
        x = np.outer(t, [1.0, 2.0, -2.0]) + [4.0, 0.0, 1.0]
        res = pca_embed(x, 1)
        np.testing.assert_allclose(np.abs(res.components[0]), np.array([1, 2, 2]) / 3, atol=1e-9)
        np.testing.assert_allclose(np.abs(res.coords[:, 0]), np.abs((t - t.mean()) * 3), atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_explained_variance_matches_eigh(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((50, 6)) @ rng.standard_normal((6, 6))
        res = pca_embed(x, 3)
        ev = np.linalg.eigh(np.cov(x, rowvar=False))[0][::-1]
        np.testing.assert_allclose(res.explained_variance, ev[:3], rtol=1e-8)
        np.testing.assert_allclose(res.components @ res.components.T, np.eye(3), atol=1e-8)

    def test_full_dimension_preserves_distances(self):
        x = np.random.default_rng(2).standard_normal((30, 4))
        res = pca_embed(x, 4)
        np.testing.assert_allclose(pair_distances(res.coords), pair_distances(x), rtol=1e-8)

    def test_rotation_invariant(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((40, 3)) * [3.0, 1.5, 0.5]
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        a, b = pca_embed(x, 2).coords, pca_embed(x @ q, 2).coords
        np.testing.assert_allclose(np.abs(a), np.abs(b), atol=1e-7)

    def test_bad_dimension(self):
        with pytest.raises(ConfigError):
            pca_embed(np.zeros((5, 2)) + np.arange(2), 3)


class TestCost:
    def test_zero_for_matching_measures(self):
        # one sample at the origin; prototypes placed so that g_j = h(r_k, r_j) for k = 0
        lat = build_lattice(1, 3)
        h, g = KernelSpec("gaussian", 1.0), KernelSpec("gaussian", 1.0)
        radii = np.sqrt(lat.dist[0])
        w = np.column_stack([radii, np.zeros(3)])
        res = xim_cost(np.zeros((1, 2)), w, lat, h, g)
        assert abs(res.total) < 1e-12 and res.winners[0] == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_against_naive(self, seed):
        rng = np.random.default_rng(seed)
        nodes = rng.uniform(0, 2, (4, 2))
        x, w = rng.standard_normal((10, 3)), rng.standard_normal((4, 3))
        res = xim_cost(x, w, Lattice(nodes), KernelSpec("student_t", 1.4), KernelSpec("gaussian", 1.2))
        assert res.total == pytest.approx(naive_cost(x, w, nodes, "student_t", 1.4, 1.2), rel=1e-10)
        assert np.all(res.scores >= -1e-12)
        assert res.total == pytest.approx(res.scores.sum())


class TestProtocol:
    def setup_method(self):
        self.data = make_clusters(n=60, dims=8, clusters=(15, 45), separation=6.0, seed=1)

    def test_single_run_zero_std(self):
        rep = evaluate_protocol(self.data, MethodSpec("pca", TrainConfig(method="pca")), runs=1, k_range=(1, 10))
        assert all(v == 0 for v in rep.std.values())
        assert set(rep.mean) == set(METRICS)

    def test_clips_k_range(self):
        spec = MethodSpec("c-xim", TrainConfig(method="c-xim", t_max=500), rows=4, cols=4)
        with pytest.warns(RuntimeWarning):
            rep = evaluate_protocol(self.data, spec, runs=2, fraction=0.9, k_range=(1, 50))
        assert rep.k_range == (1, 26) and rep.notes
        assert rep.raw.shape == (2, 4)

    def test_deterministic_and_formatted(self):
        spec = MethodSpec("som", TrainConfig(method="som", t_max=400), rows=3, cols=3)
        a = evaluate_protocol(self.data, spec, runs=2, k_range=(1, 5), seed=3)
        b = evaluate_protocol(self.data, spec, runs=2, k_range=(1, 5), seed=3)
        assert a.raw.tobytes() == b.raw.tobytes()
        table = format_table([a])
        assert "som" in table and "(" in table
        kv = format_keyvalue([a])
        assert "som.trustworthiness.mean=" in kv and "som.runs=2" in kv

    def test_bad_fraction(self):
        with pytest.raises(ConfigError):
            evaluate_protocol(self.data, MethodSpec("pca", TrainConfig(method="pca")), fraction=0.0)
