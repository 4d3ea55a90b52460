import numpy as np
import pytest

from gscpd.graph import (
    DimensionError,
    Graph,
    GraphSignalStream,
    ShiftOperator,
    SpectralBasis,
    build_adjacency,
    build_laplacian,
    build_shift_operator,
    eigendecompose,
    gft,
    igft,
    read_edge_list,
    write_edge_list,
)

PATH2 = Graph(2, ((0, 1),))
SQ2 = np.sqrt(2)


def random_graph(p, prob, rng):
    edges = [(u, v) for u in range(p) for v in range(u + 1, p) if rng.random() < prob]
    return Graph(p, tuple(edges))


class TestGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, ((1, 1),))

    def test_rejects_duplicate_edge_in_either_orientation(self):
        with pytest.raises(ValueError, match="duplicate"):
            Graph(3, ((0, 1), (1, 0)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph(3, ((0, 3),))

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            Graph(2, ((0, 1),), (0.0,))

    def test_degrees_and_neighbors(self):
        g = Graph.from_edges(4, [(1, 0), (0, 2), (2, 3)])
        assert g.degrees().tolist() == [2, 1, 2, 1]
        assert g.neighbors(2) == [0, 3]


class TestLaplacian:
    def test_two_node_path(self):
        assert np.array_equal(build_laplacian(PATH2).matrix, [[1, -1], [-1, 1]])

    def test_empty_edge_set(self):
        assert np.array_equal(build_laplacian(Graph(3)).matrix, np.zeros((3, 3)))

    def test_triangle(self):
        L = build_laplacian(Graph(3, ((0, 1), (0, 2), (1, 2)))).matrix
        assert np.array_equal(np.diag(L), [2, 2, 2])
        assert np.array_equal(L[~np.eye(3, dtype=bool)], -np.ones(6))

    def test_weighted_rows_sum_to_zero(self):
        g = Graph(3, ((0, 1), (1, 2)), (2.5, 0.5))
        L = build_laplacian(g).matrix
        assert np.allclose(L.sum(axis=1), 0)
        assert L[0, 1] == -2.5 and L[1, 1] == 3.0

    def test_sparsity_pattern_follows_edges(self):
        rng = np.random.default_rng(1)
        g = random_graph(8, 0.3, rng)
        L = build_laplacian(g).matrix
        allowed = np.eye(8, dtype=bool) | (g.adjacency() != 0)
        assert np.all(L[~allowed] == 0)

    def test_adjacency_operator(self):
        assert np.array_equal(build_adjacency(PATH2).matrix, [[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            build_shift_operator(PATH2, "normalized")


class TestShiftOperator:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            ShiftOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            ShiftOperator(np.zeros((2, 3)))

    def test_is_read_only(self):
        s = build_laplacian(PATH2)
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 5.0


class TestEigendecompose:
    def test_two_node_path(self):
        b = eigendecompose(build_laplacian(PATH2))
        assert np.allclose(b.eigenvalues, [0, 2])
        assert np.allclose(b.eigenvectors[:, 0], [1 / SQ2, 1 / SQ2])
        assert np.allclose(b.eigenvectors[:, 1], [1 / SQ2, -1 / SQ2])

    def test_zero_matrix(self):
        b = eigendecompose(ShiftOperator(np.zeros((4, 4))))
        assert np.array_equal(b.eigenvalues, np.zeros(4))
        assert np.allclose(b.eigenvectors, np.eye(4))

    def test_random_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(0)
        g = random_graph(5, 0.6, rng)
        L = build_laplacian(g).matrix
        b = eigendecompose(ShiftOperator(L))
        u, th = b.eigenvectors, b.eigenvalues
        assert np.max(np.abs(u @ np.diag(th) @ u.T - L)) <= 1e-8
        assert np.max(np.abs(u.T @ u - np.eye(5))) <= 1e-8
        assert np.all(np.diff(th) >= 0)

    def test_sign_convention_first_nonzero_positive(self):
        rng = np.random.default_rng(3)
        b = eigendecompose(build_laplacian(random_graph(12, 0.4, rng)))
        for col in b.eigenvectors.T:
            first = col[np.abs(col) > 1e-12][0]
            assert first > 0

    def test_deterministic(self):
        s = build_laplacian(random_graph(20, 0.3, np.random.default_rng(4)))
        assert np.array_equal(eigendecompose(s).eigenvectors, eigendecompose(s).eigenvectors)

    def test_basis_shape_checked(self):
        with pytest.raises(DimensionError):
            SpectralBasis(np.zeros(3), np.eye(2))


class TestGFT:
    basis = eigendecompose(build_laplacian(PATH2))

    def test_constant_signal_on_path(self):
        out = gft(self.basis, GraphSignalStream(np.array([[1.0, 1.0]])))
        assert out.domain == "spectral"
        assert np.allclose(out.values, [[SQ2, 0]])

    def test_identity_basis(self):
        b = SpectralBasis(np.zeros(3), np.eye(3))
        y = np.random.default_rng(0).normal(size=(4, 3))
        assert np.array_equal(gft(b, GraphSignalStream(y)).values, y)

    def test_parseval_random(self):
        rng = np.random.default_rng(5)
        b = eigendecompose(build_laplacian(random_graph(10, 0.4, rng)))
        y = GraphSignalStream(rng.normal(size=(7, 10)))
        assert abs(np.linalg.norm(gft(b, y).values) - np.linalg.norm(y.values)) <= 1e-10

    def test_inverse_on_path(self):
        out = igft(self.basis, GraphSignalStream(np.array([[SQ2, 0.0]]), "spectral"))
        assert out.domain == "vertex"
        assert np.allclose(out.values, [[1, 1]])

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        b = eigendecompose(build_laplacian(random_graph(5, 0.5, rng)))
        y = GraphSignalStream(rng.normal(size=(10, 5)))
        assert np.max(np.abs(igft(b, gft(b, y)).values - y.values)) <= 1e-10

    def test_zero_input(self):
        z = igft(self.basis, GraphSignalStream(np.zeros((3, 2)), "spectral"))
        assert np.array_equal(z.values, np.zeros((3, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            gft(self.basis, GraphSignalStream(np.zeros((2, 3))))
        with pytest.raises(DimensionError):
            igft(self.basis, GraphSignalStream(np.zeros((2, 3)), "spectral"))

    def test_domain_checked(self):
        with pytest.raises(ValueError):
            gft(self.basis, GraphSignalStream(np.zeros((1, 2)), "spectral"))

    def test_constant_signal_sits_in_null_space(self):
        rng = np.random.default_rng(7)
        p = 15
        # a path backbone guarantees connectivity
        edges = {(i, i + 1) for i in range(p - 1)} | {(u, v) for u in range(p) for v in range(u + 2, p) if rng.random() < 0.2}
        b = eigendecompose(build_laplacian(Graph(p, tuple(sorted(edges)))))
        out = gft(b, GraphSignalStream(np.full((1, p), 3.0))).values[0]
        assert abs(b.eigenvalues[0]) < 1e-9
        assert np.max(np.abs(out[1:])) <= 1e-9


class TestStream:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            GraphSignalStream(np.array([[1.0, np.nan]]))

    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            GraphSignalStream(np.zeros((0, 3)))

    def test_shape_properties(self):
        y = GraphSignalStream(np.zeros((4, 3)))
        assert (y.T, y.p) == (4, 3)


class TestEdgeList:
    def test_round_trip_with_isolated_node(self, tmp_path):
        g = Graph(5, ((0, 1), (1, 3)))
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        assert read_edge_list(path) == g

    def test_weights_and_comments(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# a comment\n0 1 2.5\n\n1 2 0.5\n")
        g = read_edge_list(path)
        assert g.num_nodes == 3
        assert g.weights == (2.5, 0.5)

    def test_bad_line_reports_line_number(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\n1 two\n")
        with pytest.raises(ValueError, match=":2:"):
            read_edge_list(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1 1 1\n")
        with pytest.raises(ValueError, match=":1:"):
            read_edge_list(path)
