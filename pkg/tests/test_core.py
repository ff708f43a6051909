import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xim.core import (
    ConfigError,
    Dataset,
    DissimilarityMatrix,
    DomainError,
    Lattice,
    ParseError,
    PrototypeSet,
    ShapeError,
    StructureError,
    TrainConfig,
    build_lattice,
    load_dataset,
    load_dissimilarity,
    load_lattice,
    save_dataset,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadDataset:
    def test_plain(self, tmp_path):
        ds = load_dataset(write(tmp_path, "a.csv", "1,2\n3,4\n5,6\n"))
        assert ds.points.shape == (3, 2)
        assert ds.labels is None

    def test_header(self, tmp_path):
        ds = load_dataset(write(tmp_path, "a.csv", "1,2\n3,4\n5,6\n"), header=True)
        assert ds.points.shape == (2, 2)
        np.testing.assert_array_equal(ds.points, [[3, 4], [5, 6]])

    def test_parse_error_names_cell(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_dataset(write(tmp_path, "a.csv", "1,2\n3,abc\n"))
        assert (exc.value.row, exc.value.col) == (1, 1)
        assert "abc" in str(exc.value)

    def test_ragged(self, tmp_path):
        with pytest.raises(StructureError):
            load_dataset(write(tmp_path, "a.csv", "1,2\n3\n"))

    def test_whitespace_and_label_column(self, tmp_path):
        ds = load_dataset(write(tmp_path, "a.txt", "0.5 1.5 7\n2 3 8\n"), label_column=-1)
        np.testing.assert_array_equal(ds.labels, [7, 8])
        np.testing.assert_array_equal(ds.points, [[0.5, 1.5], [2, 3]])

    def test_id_column(self, tmp_path):
        ds = load_dataset(write(tmp_path, "a.csv", "g1,1,2\ng2,3,4\n"), id_column=0)
        assert ds.ids == ("g1", "g2")
        assert ds.dim == 2

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((20, 5)) * 10.0 ** rng.integers(-8, 8, size=(20, 5))
        ds = Dataset(pts, labels=rng.integers(0, 3, 20))
        p = tmp_path / "rt.csv"
        save_dataset(ds, p)
        back = load_dataset(p, label_column=-1)
        assert back.points.tobytes() == ds.points.tobytes()
        np.testing.assert_array_equal(back.labels, ds.labels)
        save_dataset(back, tmp_path / "rt2.csv")
        assert (tmp_path / "rt2.csv").read_bytes() == p.read_bytes()


class TestDataset:
    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            Dataset([[1.0, np.nan]])

    def test_label_length(self):
        with pytest.raises(StructureError):
            Dataset([[1.0], [2.0]], labels=[1])

    def test_immutable(self):
        ds = Dataset([[1.0, 2.0]])
        with pytest.raises(ValueError):
            ds.points[0, 0] = 5


class TestLattice:
    def test_two_nodes(self):
        lat = build_lattice(1, 2)
        np.testing.assert_array_equal(lat.nodes, [[0, 0], [0, 1]])
        assert lat.dist[0, 1] == 1

    def test_square_diagonal(self):
        lat = build_lattice(2, 2)
        # nodes (0,0) and (1,1): 1^2 + 1^2
        assert lat.dist[0, 3] == 2

    def test_thirty_by_thirty_grid(self):
        assert build_lattice(30, 30).m == 900

    def test_too_small(self):
        with pytest.raises(ConfigError):
            build_lattice(1, 1)

    def test_hexagonal_neighbours_unit(self):
        lat = build_lattice(4, 4, "hexagonal")
        d = lat.dist.copy()
        np.fill_diagonal(d, np.inf)
        np.testing.assert_allclose(d.min(axis=1), 1.0)

    @given(st.integers(1, 10), st.integers(1, 10), st.sampled_from(["rectangular", "hexagonal"]))
    @settings(max_examples=60, deadline=None)
    def test_cache_properties(self, rows, cols, topo):
        if rows * cols < 2:
            with pytest.raises(ConfigError):
                build_lattice(rows, cols, topo)
            return
        lat = build_lattice(rows, cols, topo)
        assert lat.m == rows * cols
        np.testing.assert_array_equal(lat.dist, lat.dist.T)
        assert np.all(np.diag(lat.dist) == 0)
        assert np.all(lat.dist >= 0)
        r = lat.nodes
        recomputed = ((r[:, None, :] - r[None, :, :]) ** 2).sum(-1)
        np.testing.assert_allclose(lat.dist, recomputed, atol=1e-12)

    def test_explicit_file(self, tmp_path):
        lat = load_lattice(write(tmp_path, "n.txt", "0 0\n0.5 2\n3 1\n"))
        assert lat.topology == "explicit"
        assert lat.dist[0, 1] == pytest.approx(4.25)


class TestDissimilarity:
    def test_symmetric(self, tmp_path):
        d = load_dissimilarity(write(tmp_path, "d.csv", "0,3\n3,0\n"))
        assert d.symmetric

    def test_asymmetric_allowed(self, tmp_path):
        d = load_dissimilarity(write(tmp_path, "d.csv", "0,3\n2,0\n"))
        assert not d.symmetric

    def test_negative(self, tmp_path):
        with pytest.raises(DomainError):
            load_dissimilarity(write(tmp_path, "d.csv", "0,-1\n-1,0\n"))

    def test_non_square(self, tmp_path):
        with pytest.raises(StructureError):
            load_dissimilarity(write(tmp_path, "d.csv", "0,1,2\n1,0,3\n"))

    def test_diagonal(self):
        DissimilarityMatrix([[1e-13, 1], [1, 0]])
        with pytest.raises(DomainError):
            DissimilarityMatrix([[0.5, 1], [1, 0]])


class TestConfigAndPrototypes:
    def test_bad_eta(self):
        with pytest.raises(ConfigError):
            TrainConfig(eta=1.5)

    def test_t_max_zero(self):
        with pytest.raises(ConfigError):
            TrainConfig(t_max=0)

    def test_nonpositive_schedule(self):
        with pytest.raises(ConfigError):
            TrainConfig(epsilon=(0.5, 0.0))

    def test_prototype_rows_match_lattice(self):
        lat = build_lattice(2, 2)
        with pytest.raises(ShapeError):
            PrototypeSet(np.zeros((3, 2)), lat)
