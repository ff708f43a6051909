import numpy as np
import pytest

from xim.core import ConfigError, PrototypeSet, ShapeError, build_lattice
from xim.mapping import ReferencePairs, embed_dataset, embed_from_distances, shepard_embed, shepard_weights


def line_pairs():
    return ReferencePairs([[0.0], [3.0]], [[0.0], [1.0]])


class TestShepard:
    def test_exact_hit(self):
        pairs = ReferencePairs([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], [[0, 0], [5, 7], [1, 1]])
        np.testing.assert_array_equal(shepard_embed([1.0, 1.0], pairs), [5, 7])

    def test_symmetry(self):
        pairs = ReferencePairs([[-1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 2.0]])
        np.testing.assert_allclose(shepard_embed([0.0, 3.0], pairs), [0.0, 1.0], atol=1e-15)

    def test_hand_weights(self):
        # distances 1 and 2, power 2: weights 1 and 1/4 -> 0.25 / 1.25
        y = shepard_embed([1.0], line_pairs(), power=2)
        assert y[0] == pytest.approx(0.2, rel=1e-15)

    def test_power_one(self):
        y = shepard_embed([1.0], line_pairs(), power=1)
        assert y[0] == pytest.approx(0.5 / 1.5, rel=1e-15)

    def test_duplicate_hits_take_lowest(self):
        w = shepard_weights(np.array([[1.0, 0.0, 0.0]]))
        np.testing.assert_array_equal(w, [[0.0, 1.0, 0.0]])

    def test_empty_pairs(self):
        with pytest.raises(ConfigError):
            ReferencePairs(np.zeros((0, 2)), np.zeros((0, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            shepard_embed([1.0, 2.0], line_pairs())

    def test_top_q(self):
        pairs = ReferencePairs([[0.0], [1.0], [10.0]], [[0.0], [1.0], [100.0]])
        full = shepard_embed([0.5], pairs)
        trunc = shepard_embed([0.5], pairs, top_q=2)
        assert trunc[0] == pytest.approx(0.5, rel=1e-15)
        assert full[0] > trunc[0]


class TestEmbedDataset:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.lat = build_lattice(3, 4)
        self.protos = PrototypeSet(rng.standard_normal((12, 5)), self.lat)

    def test_prototypes_land_on_nodes(self):
        res = embed_dataset(self.protos.weights, self.protos)
        np.testing.assert_array_equal(res.coords, self.lat.nodes)

    def test_row_permutation(self):
        x = np.random.default_rng(1).standard_normal((30, 5))
        perm = np.random.default_rng(2).permutation(30)
        a = embed_dataset(x, self.protos).coords
        b = embed_dataset(x[perm], self.protos).coords
        np.testing.assert_array_equal(b, a[perm])

    def test_bounding_box(self):
        x = np.random.default_rng(3).standard_normal((500, 5)) * 5
        y = embed_dataset(x, self.protos).coords
        lo, hi = self.lat.nodes.min(axis=0), self.lat.nodes.max(axis=0)
        assert np.all(y >= lo - 1e-12) and np.all(y <= hi + 1e-12)
        assert np.all(np.isfinite(y))

    def test_continuity_probe(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = rng.standard_normal(5)
            if np.min(((self.protos.weights - x) ** 2).sum(1)) < 1e-2:
                continue
            step = rng.standard_normal(5)
            step *= 1e-6 / np.linalg.norm(step)
            a = shepard_embed(x, ReferencePairs.from_prototypes(self.protos))
            b = shepard_embed(x + step, ReferencePairs.from_prototypes(self.protos))
            assert np.linalg.norm(a - b) <= 1e-3

    def test_deterministic_with_metadata(self):
        res = embed_dataset(self.protos.weights[:3] + 0.1, self.protos, method="c-xim", seed=5)
        assert res.method == "c-xim" and res.seed == 5
        again = embed_dataset(self.protos.weights[:3] + 0.1, self.protos)
        assert res.coords.tobytes() == again.coords.tobytes()

    def test_from_distances(self):
        d2 = np.array([[1.0, 4.0]])
        np.testing.assert_allclose(embed_from_distances(d2, [[0.0], [1.0]]), [[0.2]])
