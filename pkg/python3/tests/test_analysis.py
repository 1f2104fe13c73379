"""Test python3/packages/heer/analysis.py"""

import csv
import os
import shutil
import tempfile
import unittest

import numpy as np
from scipy.special import expit

from python3.packages.heer.analysis import (
    common_hub_type,
    edge_probabilities,
    export_heatmap,
    export_metapath_csv,
    jaccard_cdf,
    jaccard_coefficient,
    jaccard_profile,
    metapath_neighbors,
    metapath_types,
    metric_similarity,
    order_dimensions,
    save_cdf,
    save_edge_probabilities,
    standardize_metrics,
    transition_matrix,
)
from python3.packages.heer.errors import AnalysisError
from python3.packages.heer.evalbench import SyntheticSpec, generate_synthetic_hin
from python3.packages.heer.hin import EdgeType, HinGraph, Schema
from python3.packages.heer.model import EmbeddingStore, MetricStore
from python3.packages.heer.sampler import make_rng

from .hin_fixtures import bibliographic_graph


def dense_transition(graph, r, reverse=False):
    n = graph.num_nodes
    adjacency = np.zeros((n, n))
    for u, v, t, w in graph.edge_records():
        if t != r:
            continue
        adjacency[u, v] += w
        if not graph.schema.directed[r]:
            adjacency[v, u] += w
    if reverse and graph.schema.directed[r]:
        adjacency = adjacency.T
    sums = adjacency.sum(axis=1, keepdims=True)
    return np.divide(adjacency, sums, out=np.zeros_like(adjacency), where=sums > 0)


def dense_jaccard(graph, r1, r2, hub_type, reverse=False):
    hub = graph.nodes_of_type(hub_type)
    p1 = dense_transition(graph, r1, reverse)[hub]
    p2 = dense_transition(graph, r2, reverse)[hub]
    l1, l2 = p1 @ p1.T, p2 @ p2.T
    low = np.minimum(l1, l2).sum(axis=1)
    high = np.maximum(l1, l2).sum(axis=1)
    return np.divide(low, high, out=np.zeros_like(high), where=high > 0)


# pylint: disable=missing-function-docstring
class TestJaccard(unittest.TestCase):
    """Generalized Jaccard coefficients of typed reachability"""

    def setUp(self):
        self.graph = bibliographic_graph()
        schema = self.graph.schema
        self.ids = {
            name: schema.edge_type_id(name) for name in ("aut", "ref", "ven", "yr")
        }

    def test_transition_rows_are_stochastic(self):
        matrix = transition_matrix(self.graph, self.ids["ref"])
        sums = np.asarray(matrix.sum(axis=1)).ravel()
        self.assertTrue(np.all(np.isclose(sums, 1.0) | (sums == 0.0)))
        expected = dense_transition(self.graph, self.ids["ref"])
        np.testing.assert_allclose(matrix.toarray(), expected)

    def test_hand_computed_value(self):
        p1 = self.graph.node_index("p1")
        value = jaccard_coefficient(self.graph, p1, self.ids["ven"], self.ids["yr"])
        self.assertAlmostEqual(value, 2.0 / 3.0, places=12)

    def test_profile_matches_dense_oracle(self):
        paper = self.graph.schema.node_type_id("paper")
        cases = [
            ("ven", "yr", False),
            ("aut", "ven", False),
            ("ref", "yr", False),
            ("ref", "aut", True),
        ]
        for r1, r2, reverse in cases:
            with self.subTest(r1=r1, r2=r2, reverse=reverse):
                first, second = self.ids[r1], self.ids[r2]
                profile = jaccard_profile(self.graph, first, second, paper, reverse)
                expected = dense_jaccard(self.graph, first, second, paper, reverse)
                np.testing.assert_allclose(
                    profile.coefficients, expected, rtol=0, atol=1e-12
                )
                for u, value in zip(profile.nodes, profile.coefficients):
                    self.assertAlmostEqual(
                        jaccard_coefficient(self.graph, u, first, second, reverse),
                        value,
                        places=12,
                    )

    def test_hub_type(self):
        paper = self.graph.schema.node_type_id("paper")
        hub = common_hub_type(self.graph, self.ids["aut"], self.ids["yr"])
        self.assertEqual(hub, paper)
        author = self.graph.schema.node_type_id("author")
        with self.assertRaises(AnalysisError):
            jaccard_profile(
                self.graph, self.ids["ven"], self.ids["yr"], hub_type=author
            )

    def test_disjoint_edge_types(self):
        edge_types = [EdgeType("r1", "a", "b", False), EdgeType("r2", "c", "d", False)]
        schema = Schema(["a", "b", "c", "d"], edge_types)
        names = ["a0", "b0", "c0", "d0"]
        graph = HinGraph.from_records(schema, names, [0, 1, 2, 3], [])
        with self.assertRaises(AnalysisError) as cm:
            common_hub_type(graph, 0, 1)
        self.assertIn("share no endpoint type", str(cm.exception))

    def test_coefficient_is_symmetric_in_the_edge_types(self):
        paper = self.graph.schema.node_type_id("paper")
        for r1, r2 in (("ven", "yr"), ("aut", "ven"), ("aut", "yr")):
            first, second = self.ids[r1], self.ids[r2]
            for u in self.graph.nodes_of_type(paper):
                with self.subTest(r1=r1, r2=r2, u=int(u)):
                    self.assertEqual(
                        jaccard_coefficient(self.graph, int(u), first, second),
                        jaccard_coefficient(self.graph, int(u), second, first),
                    )

    def test_cdf_is_monotone(self):
        table = jaccard_cdf(self.graph, self.ids["ven"], self.ids["yr"])
        fractions = [fraction for _, fraction in table]
        self.assertEqual(fractions, sorted(fractions))
        self.assertEqual(table[-1], (1.0, 1.0))
        self.assertEqual(table[0][0], 0.0)
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, "cdf.csv")
            save_cdf(table, path)
            with open(path, encoding="utf-8") as cdf:
                rows = list(csv.reader(cdf))
            self.assertEqual(rows[0], ["threshold", "fraction"])
            self.assertEqual(len(rows), len(table) + 1)
        finally:
            shutil.rmtree(tmpdir)

    def test_incompatible_cdf_dominates_at_small_thresholds(self):
        incompatible = generate_synthetic_hin(SyntheticSpec.two_semantic(True), 5)
        compatible = generate_synthetic_hin(SyntheticSpec.two_semantic(False), 5)
        grid = [0.0, 5e-5, 1e-3, 0.01, 0.05, 0.1]
        low = dict(jaccard_cdf(incompatible, 0, 1, grid))
        high = dict(jaccard_cdf(compatible, 0, 1, grid))
        for threshold in grid:
            self.assertGreaterEqual(low[threshold], high[threshold])
        # every user reaches itself through both edge types, so on a graph this
        # small, few coefficients fall below 5e-5; the strict gap is pinned at 0.1
        self.assertGreater(low[0.1], high[0.1])
        self.assertGreater(low[0.1], 0.5)


class TestMetrics(unittest.TestCase):
    """Standardized metrics, similarity and the heat-map export"""

    def test_two_values_standardize_to_minus_one_and_one(self):
        standardized = standardize_metrics(MetricStore(np.array([[1.0, 3.0]])))
        np.testing.assert_allclose(standardized, [[-1.0, 1.0]])
        again = standardize_metrics(MetricStore(standardized))
        np.testing.assert_allclose(again, standardized)

    def test_standardizing_twice_is_a_no_op(self):
        standardized = standardize_metrics(MetricStore(make_rng(8).normal(size=(3, 5))))
        again = standardize_metrics(MetricStore(standardized))
        np.testing.assert_allclose(again, standardized, atol=1e-12)

    def test_standardized_rows(self):
        metrics = MetricStore(make_rng(1).normal(size=(3, 6)))
        standardized = standardize_metrics(metrics)
        np.testing.assert_allclose(standardized.mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(standardized.std(axis=1), 1.0)

    def test_untrained_metrics_cannot_be_standardized(self):
        with self.assertRaises(AnalysisError) as cm:
            standardize_metrics(MetricStore.ones(2, 4), ["r1", "r2"])
        self.assertIn("'r1'", str(cm.exception))
        with self.assertRaises(AnalysisError):
            standardize_metrics(MetricStore(np.array([[1.0], [2.0]])))

    def test_similarity(self):
        base = make_rng(2).normal(size=5)
        noise = make_rng(3).normal(size=5)
        metrics = MetricStore(np.vstack((base, 2 * base + 3, -base, noise)))
        self.assertAlmostEqual(metric_similarity(metrics, 0, 1), 1.0)
        self.assertAlmostEqual(metric_similarity(metrics, 0, 2), -1.0)
        other = metric_similarity(metrics, 0, 3)
        self.assertTrue(-1.0 <= other <= 1.0)
        self.assertAlmostEqual(other, metric_similarity(metrics, 3, 0))

    def test_order_dimensions(self):
        columns = np.array([[0.0, 10.0, 1.0, 5.0], [0.0, 0.0, 0.0, 0.0]])
        self.assertEqual(order_dimensions(columns), [0, 2, 3, 1])
        # equal distances go to the lowest index
        self.assertEqual(order_dimensions(np.array([[0.0, 1.0, -1.0]])), [0, 1, 2])

    def test_export_heatmap(self):
        tmpdir = tempfile.mkdtemp()
        try:
            metrics = MetricStore(make_rng(4).normal(size=(2, 3)))
            path = os.path.join(tmpdir, "heatmap.csv")
            order = export_heatmap(metrics, ["r1", "r2"], path)
            self.assertEqual(sorted(order), [0, 1, 2])
            with open(path, encoding="utf-8") as heatmap:
                rows = list(csv.reader(heatmap))
            header = ["edge_type"] + ["d{}".format(j) for j in order]
            self.assertEqual(rows[0], header)
            self.assertEqual([row[0] for row in rows[1:]], ["r1", "r2"])
            standardized = standardize_metrics(metrics)
            self.assertEqual(float(rows[1][1]), standardized[0, order[0]])
        finally:
            shutil.rmtree(tmpdir)


class TestMetapaths(unittest.TestCase):
    """Meta-path neighbourhoods"""

    def setUp(self):
        self.graph = bibliographic_graph()
        self.aut, self.ref, self.ven = (
            self.graph.schema.edge_type_id(name) for name in ("aut", "ref", "ven")
        )
        self.a1 = self.graph.node_index("a1")

    def test_types_along_a_metapath(self):
        schema = self.graph.schema
        author, paper, venue = (
            schema.node_type_id(t) for t in ("author", "paper", "venue")
        )
        coauthor = metapath_types(self.graph, author, [self.aut, self.aut])
        self.assertEqual(coauthor, [author, paper, author])
        cited_venue = metapath_types(self.graph, paper, [self.ref, self.ven])
        self.assertEqual(cited_venue, [paper, paper, venue])
        with self.assertRaises(AnalysisError):
            metapath_types(self.graph, venue, [self.ref])

    def test_coauthors(self):
        group = metapath_neighbors(self.graph, self.a1, [self.aut, self.aut])
        self.assertEqual(group.label, "aut-aut")
        self.assertEqual(list(group.nodes), [self.graph.node_index("a2")])

    def test_directed_steps(self):
        p4 = self.graph.node_index("p4")
        group = metapath_neighbors(self.graph, p4, [self.ref, self.ref])
        self.assertEqual(list(group.nodes), [self.graph.node_index("p1")])

    def test_downsampling(self):
        metapath = [self.aut, self.ven, self.ven]
        full = metapath_neighbors(self.graph, self.a1, metapath)
        expected = [self.graph.node_index(p) for p in ("p1", "p2", "p4")]
        self.assertEqual(list(full.nodes), expected)
        small = metapath_neighbors(
            self.graph, self.a1, metapath, max_nodes=2, seed=3, label="APVP"
        )
        self.assertEqual(small.label, "APVP")
        self.assertEqual(len(small.nodes), 2)
        self.assertTrue(set(small.nodes.tolist()) <= set(expected))
        again = metapath_neighbors(self.graph, self.a1, metapath, max_nodes=2, seed=3)
        self.assertEqual(list(small.nodes), list(again.nodes))

    def test_reversed_metapath_leads_back_to_the_anchor(self):
        for metapath in ([self.aut, self.ven], [self.aut, self.aut]):
            forward = metapath_neighbors(self.graph, self.a1, metapath)
            self.assertGreater(len(forward.nodes), 0)
            for node in forward.nodes:
                back = metapath_neighbors(self.graph, int(node), metapath[::-1])
                self.assertIn(self.a1, back.nodes.tolist())

    def test_negative_max_nodes(self):
        with self.assertRaises(AnalysisError):
            metapath_neighbors(self.graph, self.a1, [self.aut, self.aut], max_nodes=-1)

    def test_empty_metapath(self):
        with self.assertRaises(AnalysisError):
            metapath_neighbors(self.graph, self.a1, [])

    def test_export(self):
        tmpdir = tempfile.mkdtemp()
        try:
            store = EmbeddingStore(make_rng(5).normal(size=(self.graph.num_nodes, 4)))
            groups = [
                metapath_neighbors(self.graph, self.a1, [self.aut, self.aut]),
                metapath_neighbors(self.graph, self.a1, [self.aut, self.ven]),
            ]
            path = os.path.join(tmpdir, "metapath.csv")
            export_metapath_csv(path, groups, store, self.graph)
            with open(path, encoding="utf-8") as export:
                rows = list(csv.reader(export))
            self.assertEqual(
                rows[0], ["node_id", "metapath_label", "v_1", "v_2", "v_3", "v_4"]
            )
            labels = [row[:2] for row in rows[1:]]
            self.assertEqual(labels, [["a2", "aut-aut"], ["v1", "aut-ven"]])
            self.assertEqual(float(rows[1][2]), store.vectors[1, 0])
        finally:
            shutil.rmtree(tmpdir)


class TestEdgeProbabilities(unittest.TestCase):
    """Pair probabilities under every edge type"""

    def test_pairs_are_scored_under_consistent_types_only(self):
        graph = bibliographic_graph()
        store = EmbeddingStore(make_rng(6).normal(size=(graph.num_nodes, 4)))
        metrics = MetricStore(make_rng(7).normal(size=(4, 2)))
        a1, p1, p2 = (graph.node_index(n) for n in ("a1", "p1", "p2"))
        rows = edge_probabilities(graph, store, metrics, [(a1, p1), (p2, p1)])
        scored = [(u, v, name) for u, v, name, _ in rows]
        self.assertEqual(scored, [(a1, p1, "aut"), (p2, p1, "ref")])
        score = 2 * store.vectors[p2, :2] @ (store.vectors[p1, 2:] * metrics.vectors[1])
        self.assertAlmostEqual(rows[1][3], float(expit(score)), places=12)

    def test_one_pair_under_two_metrics(self):
        graph = generate_synthetic_hin(SyntheticSpec.two_semantic(users=10, items=5), 1)
        store = EmbeddingStore(np.ones((graph.num_nodes, 4)))
        metrics = MetricStore(np.array([[2.0, 2.0], [-2.0, -2.0]]))
        rows = edge_probabilities(graph, store, metrics, [(0, 10)])
        probabilities = {name: p for _, _, name, p in rows}
        self.assertGreater(probabilities["r1"], 0.99)
        self.assertLess(probabilities["r2"], 0.01)
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, "pairs.csv")
            save_edge_probabilities(rows, graph, path)
            with open(path, encoding="utf-8") as pairs:
                saved = list(csv.reader(pairs))
            self.assertEqual(saved[0], ["u", "v", "edge_type", "probability"])
            self.assertEqual(saved[1][:3], ["user0", "item0", "r1"])
        finally:
            shutil.rmtree(tmpdir)


def test_synthetic_profile_covers_every_user(small_synthetic):
    """one coefficient in (0, 1] per user of the synthetic graph"""
    profile = jaccard_profile(small_synthetic, 0, 1)
    users = small_synthetic.schema.node_type_id("user")
    assert profile.hub_type == users
    assert len(profile.coefficients) == len(small_synthetic.nodes_of_type(users))
    assert np.all(profile.coefficients > 0)
    assert np.all(profile.coefficients <= 1.0 + 1e-12)


def test_analysis_logs_the_mean_coefficient(small_synthetic, mocker):
    logger = mocker.patch("python3.packages.heer.analysis.LOGGER")
    jaccard_cdf(small_synthetic, 0, 1, grid=[0.5])
    logger.info.assert_called_once()
    assert logger.info.call_args.args[1:3] == ("r1", "r2")


if __name__ == "__main__":
    unittest.main()
