"""Dataset loading, normalization, generators, splits, and edge attacks."""

import numpy as np
import pytest

from spikeprompt.graphs import (Graph, generate_sbm, load_graph, normalize_adjacency,
                                project_features, random_edge_attack,
                                sample_few_shot, save_graph)


def write_dataset(tmp_path, edges, features, labels):
    (tmp_path / "edges.tsv").write_text("".join(f"{u}\t{v}\n" for u, v in edges))
    (tmp_path / "features.csv").write_text(
        "".join(",".join(str(x) for x in row) + "\n" for row in features))
    (tmp_path / "labels.csv").write_text("".join(f"{v}\n" for v in labels))


class TestLoadGraph:
    def test_minimal_dataset(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.1, 0.2, 0.3], [1.0, 2.0, 3.0]], [0, 1])
        g = load_graph(str(tmp_path))
        assert (g.n, g.d, g.num_edges, g.num_classes) == (2, 3, 1, 2)

    def test_self_loop_dropped(self, tmp_path):
        features = [[float(i)] * 2 for i in range(6)]
        write_dataset(tmp_path, [(0, 1), (5, 5)], features, [0, 1, 0, 1, 0, 1])
        g = load_graph(str(tmp_path))
        assert g.num_edges == 1
        assert (5, 5) not in g.edges

    def test_duplicate_edges_collapsed(self, tmp_path):
        write_dataset(tmp_path, [(0, 1), (1, 0), (0, 1)], [[0.0], [1.0]], [0, 1])
        assert load_graph(str(tmp_path)).num_edges == 1

    def test_negative_label_rejected(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [-1, 1])
        with pytest.raises(ValueError, match="label out of range"):
            load_graph(str(tmp_path))

    def test_missing_file(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [0, 1])
        (tmp_path / "edges.tsv").unlink()
        with pytest.raises(ValueError, match="missing required file: edges.tsv"):
            load_graph(str(tmp_path))

    def test_ragged_features(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [0, 1])
        (tmp_path / "features.csv").write_text("0.0,1.0\n2.0\n")
        with pytest.raises(ValueError, match="ragged feature row"):
            load_graph(str(tmp_path))

    def test_edge_id_out_of_range(self, tmp_path):
        write_dataset(tmp_path, [(0, 7)], [[0.0], [1.0]], [0, 1])
        with pytest.raises(ValueError, match="out of range"):
            load_graph(str(tmp_path))

    def test_non_integer_label(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [0, 1])
        (tmp_path / "labels.csv").write_text("0\nx\n")
        with pytest.raises(ValueError, match="non-integer label"):
            load_graph(str(tmp_path))

    def test_label_count_mismatch(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [0, 1, 1])
        with pytest.raises(ValueError, match="expected 2 labels"):
            load_graph(str(tmp_path))

    def test_single_class_rejected(self, tmp_path):
        write_dataset(tmp_path, [(0, 1)], [[0.0], [1.0]], [0, 0])
        with pytest.raises(ValueError, match="at least 2 classes"):
            load_graph(str(tmp_path))

    def test_round_trip(self, tmp_path):
        g = generate_sbm(10, 3, 0.4, 0.05, 0.7, seed=3)
        save_graph(g, str(tmp_path / "ds"))
        g2 = load_graph(str(tmp_path / "ds"))
        assert g2.edges == g.edges
        assert np.array_equal(g2.features, g.features)
        assert np.array_equal(g2.labels, g.labels)
        assert g2.num_classes == g.num_classes


class TestGraphInvariants:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(np.zeros((2, 1)), [(1, 1)], [0, 1], 2)

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="duplicate edge"):
            Graph(np.zeros((2, 1)), [(0, 1), (0, 1)], [0, 1], 2)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match="label out of range"):
            Graph(np.zeros((2, 1)), [(0, 1)], [0, 5], 2)

    def test_immutable_features(self):
        g = Graph(np.zeros((2, 1)), [(0, 1)], [0, 1], 2)
        with pytest.raises(ValueError):
            g.features[0, 0] = 1.0


class TestNormalizeAdjacency:
    def test_two_nodes_one_edge(self):
        # each degree (with self-loop) is 2, so every entry is 1/2
        g = Graph(np.zeros((2, 1)), [(0, 1)], [0, 1], 2)
        assert np.array_equal(normalize_adjacency(g), [[0.5, 0.5], [0.5, 0.5]])

    def test_isolated_node(self):
        g = Graph(np.zeros((2, 1)), [], [0, 1], 2)
        assert np.array_equal(normalize_adjacency(g), np.eye(2))

    def test_triangle(self):
        g = Graph(np.zeros((3, 1)), [(0, 1), (0, 2), (1, 2)], [0, 1, 0], 2)
        assert np.allclose(normalize_adjacency(g), np.full((3, 3), 1.0 / 3.0), atol=1e-15)

    def test_symmetric_nonnegative_positive_diagonal(self):
        g = generate_sbm(15, 3, 0.3, 0.05, 0.5, seed=1)
        a = normalize_adjacency(g)
        assert np.array_equal(a, a.T)
        assert (a >= 0).all()
        assert (np.diag(a) > 0).all()

    def test_spectral_radius_at_most_one(self):
        # row sums exceed 1 on irregular graphs; the tight bound is spectral
        g = generate_sbm(15, 3, 0.3, 0.05, 0.5, seed=2)
        eigs = np.linalg.eigvalsh(normalize_adjacency(g))
        assert eigs.max() <= 1.0 + 1e-12
        assert normalize_adjacency(g).sum(axis=1).min() > 0

    def test_regular_graph_rows_sum_to_one(self):
        # 4-cycle: every node degree 3 with self-loop
        g = Graph(np.zeros((4, 1)), [(0, 1), (1, 2), (2, 3), (0, 3)], [0, 1, 0, 1], 2)
        assert np.allclose(normalize_adjacency(g).sum(axis=1), 1.0, atol=1e-12)


class TestGenerateSbm:
    def test_shape_and_determinism(self):
        g1 = generate_sbm(50, 3, 0.2, 0.02, 0.5, seed=7)
        g2 = generate_sbm(50, 3, 0.2, 0.02, 0.5, seed=7)
        assert g1.n == 150 and g1.num_classes == 3
        assert g1.edges == g2.edges
        assert np.array_equal(g1.features, g2.features)

    def test_different_seed_differs(self):
        g1 = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        g2 = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=1)
        assert g1.edges != g2.edges

    def test_zero_p_out_has_no_cross_class_edges(self):
        g = generate_sbm(20, 3, 0.3, 0.0, 0.5, seed=5)
        for u, v in g.edges:
            assert g.labels[u] == g.labels[v]

    def test_equal_probabilities_rejected(self):
        with pytest.raises(ValueError, match="p_out < p_in"):
            generate_sbm(10, 2, 0.2, 0.2, 0.5, seed=0)

    def test_tiny_class_rejected(self):
        with pytest.raises(ValueError, match="n_per_class"):
            generate_sbm(1, 2, 0.2, 0.0, 0.5, seed=0)

    def test_feature_means_are_one_hot(self):
        g = generate_sbm(200, 3, 0.05, 0.0, 0.1, seed=11)
        for c in range(3):
            mean = g.features[g.labels == c].mean(axis=0)
            assert abs(mean[c] - 1.0) < 0.05
            assert np.abs(np.delete(mean, c)).max() < 0.05


class TestFewShotSplit:
    def test_sizes(self):
        g = generate_sbm(50, 3, 0.2, 0.02, 0.5, seed=7)
        split = sample_few_shot(g, 1, 5, seed=0)
        assert (len(split.train_ids), len(split.val_ids), len(split.test_ids)) == (3, 15, 132)

    def test_exactly_k_per_class(self):
        g = generate_sbm(30, 4, 0.2, 0.02, 0.5, seed=3)
        split = sample_few_shot(g, 5, 3, seed=2)
        counts = np.bincount(g.labels[list(split.train_ids)], minlength=4)
        assert (counts == 5).all()

    def test_deterministic(self):
        g = generate_sbm(50, 3, 0.2, 0.02, 0.5, seed=7)
        assert sample_few_shot(g, 1, 5, seed=4) == sample_few_shot(g, 1, 5, seed=4)
        assert sample_few_shot(g, 1, 5, seed=4) != sample_few_shot(g, 1, 5, seed=5)

    def test_disjoint_and_in_range(self):
        g = generate_sbm(20, 3, 0.2, 0.02, 0.5, seed=7)
        s = sample_few_shot(g, 2, 2, seed=1)
        all_ids = set(s.train_ids) | set(s.val_ids) | set(s.test_ids)
        assert len(all_ids) == len(s.train_ids) + len(s.val_ids) + len(s.test_ids)
        assert all(0 <= i < g.n for i in all_ids)

    def test_class_too_small(self):
        g = Graph(np.zeros((4, 1)), [(0, 1)], [0, 0, 1, 1], 2)
        with pytest.raises(ValueError, match="class 0 has 2 nodes"):
            sample_few_shot(g, 1, 5, seed=0)


class TestRandomEdgeAttack:
    def test_rate_zero_is_identity(self):
        g = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        assert random_edge_attack(g, 0.0, seed=1).edges == g.edges

    def test_exact_insertion_count(self):
        g = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        attacked = random_edge_attack(g, 0.2, seed=1)
        assert attacked.num_edges == g.num_edges + int(0.2 * g.num_edges)

    def test_rate_one_doubles_without_duplicates(self):
        g = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        attacked = random_edge_attack(g, 1.0, seed=2)
        assert attacked.num_edges == 2 * g.num_edges
        assert len(set(attacked.edges)) == attacked.num_edges
        assert set(g.edges) <= set(attacked.edges)
        for u, v in attacked.edges:
            assert u < v  # canonical, hence no self-loops or reversed duplicates

    def test_features_and_labels_unchanged(self):
        g = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        attacked = random_edge_attack(g, 0.5, seed=3)
        assert np.array_equal(attacked.features, g.features)
        assert np.array_equal(attacked.labels, g.labels)

    def test_deterministic(self):
        g = generate_sbm(20, 2, 0.3, 0.05, 0.5, seed=0)
        a1 = random_edge_attack(g, 0.4, seed=9)
        a2 = random_edge_attack(g, 0.4, seed=9)
        assert a1.edges == a2.edges

    def test_complete_graph_rejected(self):
        edges = [(u, v) for u in range(4) for v in range(u + 1, 4)]
        g = Graph(np.zeros((4, 1)), edges, [0, 1, 0, 1], 2)
        with pytest.raises(ValueError, match="complete"):
            random_edge_attack(g, 0.5, seed=0)

    def test_negative_rate_rejected(self):
        g = generate_sbm(10, 2, 0.3, 0.05, 0.5, seed=0)
        with pytest.raises(ValueError, match="rate"):
            random_edge_attack(g, -0.1, seed=0)


class TestProjectFeatures:
    def test_deterministic_and_shared(self):
        g = generate_sbm(10, 3, 0.3, 0.05, 0.5, seed=0)
        p1 = project_features(g, 17)
        p2 = project_features(g, 17)
        assert p1.d == 17
        assert np.array_equal(p1.features, p2.features)

    def test_disabled_width_passthrough(self):
        g = generate_sbm(10, 3, 0.3, 0.05, 0.5, seed=0)
        assert project_features(g, 0) is g
        assert project_features(g, g.d) is g
