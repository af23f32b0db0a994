"""Instance generation: determinism, distributional checks, file ingestion."""

import numpy as np
import pytest

from bmatch.core import KIND_TORUS
from bmatch.generate import (
    GenSpec,
    LoadError,
    MatrixCampaign,
    edge_prob_from_degree,
    gen_acceptance,
    gen_marks,
    instance_stream,
    load_latency_matrix,
    make_instance,
    stream_rng,
    subsample,
    torus_distance,
)


class TestAcceptanceGraph:
    def test_p_zero_empty(self):
        adj = gen_acceptance(30, 0.0, 1)
        assert adj.n_edges == 0

    def test_p_one_complete(self):
        adj = gen_acceptance(30, 1.0, 1)
        assert adj.n_edges == 30 * 29 // 2

    def test_mean_degree_concentration(self):
        # binomial concentration of the expected degree d = p (N - 1)
        n, p = 2000, 0.01
        degs = []
        for seed in range(100):
            adj = gen_acceptance(n, p, stream_rng(123, seed))
            degs.append(2 * adj.n_edges / n)
        assert abs(np.mean(degs) - 19.99) < 0.3

    def test_deterministic_per_seed(self):
        a = gen_acceptance(100, 0.1, 7)
        b = gen_acceptance(100, 0.1, 7)
        assert np.array_equal(a.edges, b.edges)


class TestMarks:
    def test_torus_wrap_1d(self):
        assert abs(torus_distance(np.array([0.1]), np.array([0.9])) - 0.2) < 1e-15

    def test_torus_2d_taxicab(self):
        d = torus_distance(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
        assert d == 1.0

    def test_torus_2d_max_norm(self):
        d = torus_distance(np.array([0.0, 0.0]), np.array([0.5, 0.2]), norm="max")
        assert d == 0.5

    def test_acyclic_symmetric(self):
        marks, _ = gen_marks(40, "acyclic", 3)
        off = ~np.eye(40, dtype=bool)
        assert np.array_equal(marks, marks.T)
        assert np.all(marks[off] > 0) and np.all(marks[off] < 1)
        assert np.all(np.isinf(np.diag(marks)))

    def test_geometric_marks_match_points(self):
        marks, points = gen_marks(25, "torus", 11, dim=3)
        i, j = 4, 17
        assert abs(marks[i, j] - torus_distance(points[i], points[j])) < 1e-15

    @pytest.mark.parametrize("norm", ["taxicab", "max"])
    def test_torus_metric_triangle_inequality(self, norm):
        rng = np.random.default_rng(5)
        pts = rng.random((60, 4))
        for _ in range(300):
            a, b, c = rng.choice(60, size=3, replace=False)
            dab = torus_distance(pts[a], pts[b], norm)
            dbc = torus_distance(pts[b], pts[c], norm)
            dac = torus_distance(pts[a], pts[c], norm)
            assert dac <= dab + dbc + 1e-12
            assert abs(torus_distance(pts[a], pts[b], norm) - torus_distance(pts[b], pts[a], norm)) < 1e-15


class TestDeterminism:
    def test_identical_specs_bit_identical(self):
        spec = GenSpec(n_nodes=80, edge_prob=0.15, quota=2, kind="torus", dim=2, seed=99)
        a, b = make_instance(spec), make_instance(spec)
        assert np.array_equal(a.acceptance.edges, b.acceptance.edges)
        assert np.array_equal(a.marks, b.marks)
        assert np.array_equal(a.points, b.points)

    def test_stream_order_independent(self):
        spec = GenSpec(n_nodes=30, edge_prob=0.2, kind="acyclic", seed=4)
        full = list(instance_stream(spec, 4))
        tail = list(instance_stream(spec, 2, start=2))
        assert np.array_equal(full[2].marks, tail[0].marks)
        assert np.array_equal(full[3].acceptance.edges, tail[1].acceptance.edges)

    def test_degree_conversion(self):
        assert edge_prob_from_degree(19.99, 2000) == pytest.approx(0.01)
        with pytest.raises(ValueError):
            edge_prob_from_degree(3000.0, 2000)


class TestLatencyLoader:
    def test_symmetric_passthrough(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("0 10 4\n10 0 6\n4 6 0\n")
        m = load_latency_matrix(f)
        assert m[0, 1] == 10 and m[1, 0] == 10

    def test_arithmetic_symmetrization(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("0,10,4\n12,0,6\n4,6,0\n")
        m = load_latency_matrix(f)
        assert m[0, 1] == 11 and m[1, 0] == 11

    def test_non_square_reports_dimensions(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("1 2 3\n4 5 6\n")
        with pytest.raises(LoadError, match="2 rows"):
            load_latency_matrix(f)

    def test_non_numeric_reports_position(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("0 1\nx 0\n")
        with pytest.raises(LoadError, match="row 2, column 1"):
            load_latency_matrix(f)

    def test_too_small(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("0\n")
        with pytest.raises(LoadError, match="at least 2"):
            load_latency_matrix(f)

    def test_rejects_nan(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("0 nan\nnan 0\n")
        with pytest.raises(LoadError, match="NaN"):
            load_latency_matrix(f)


class TestSubsample:
    def _marks(self, n=8, seed=0):
        rng = np.random.default_rng(seed)
        m = rng.random((n, n))
        m = (m + m.T) / 2
        np.fill_diagonal(m, np.inf)
        return m

    def test_full_size_is_permutation(self):
        m = self._marks()
        s = subsample(m, 8, seed=1)
        off = ~np.eye(8, dtype=bool)
        assert sorted(m[off].tolist()) == sorted(s[off].tolist())

    def test_k2_single_value(self):
        s = subsample(self._marks(), 2, seed=1)
        assert s.shape == (2, 2) and s[0, 1] == s[1, 0]

    def test_deterministic(self):
        m = self._marks()
        assert np.array_equal(subsample(m, 5, seed=3), subsample(m, 5, seed=3))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            subsample(self._marks(), 1, seed=0)
        with pytest.raises(ValueError):
            subsample(self._marks(), 9, seed=0)


class TestMatrixCampaign:
    def test_stream_subsamples_and_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(8)
        raw = rng.random((12, 12)) * 100
        f = tmp_path / "lat.txt"
        f.write_text("\n".join(" ".join(f"{v:.6f}" for v in row) for row in raw))
        marks = load_latency_matrix(f)
        camp = MatrixCampaign(marks=marks, n_nodes=6, edge_prob=0.8, quota=1, seed=5)
        a = list(camp.stream(3))
        b = list(camp.stream(3))
        for x, y in zip(a, b):
            assert np.array_equal(x.marks, y.marks)
            assert x.n_nodes == 6 and x.kind == "matrix"
