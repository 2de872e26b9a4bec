import numpy as np
import pytest

from mcdag import (
    AllAdjacencies,
    AllArcs,
    Dag,
    DirectedArc,
    UndirectedAdjacency,
    dag_frequency,
    estimate,
    normalized_score_trace,
)
from mcdag.queries import QueryError, adj_label, arc_label, parse_feature

from conftest import random_dag, trace_from_dags


def three_dag_trace():
    g1 = Dag.from_parent_sets([[], [0], []])       # 0 -> 1
    g2 = Dag.from_parent_sets([[], [0], [0]])      # 0 -> 1, 0 -> 2
    g3 = Dag.empty(3)
    return trace_from_dags([g1, g1, g2, g3]), (g1, g2, g3)


class TestEstimate:
    def test_three_quarters(self):
        trace, _ = three_dag_trace()
        report = estimate(trace, DirectedArc(0, 1))
        assert report.estimates["arc:0->1"] == 0.75
        assert report.sample_size == 4

    def test_adjacency_equals_sum_of_directed(self):
        # 2-cycles are impossible, so the directed indicators never co-occur
        trace, _ = three_dag_trace()
        adj = estimate(trace, UndirectedAdjacency(0, 1)).estimates["adj:0-1"]
        fwd = estimate(trace, DirectedArc(0, 1)).estimates["arc:0->1"]
        bwd = estimate(trace, DirectedArc(1, 0)).estimates["arc:1->0"]
        assert adj == pytest.approx(fwd + bwd, abs=1e-15)

    def test_all_estimates_in_unit_interval(self, rng):
        dags = [random_dag(rng, 4) for _ in range(30)]
        trace = trace_from_dags(dags)
        report = estimate(trace, AllArcs())
        assert all(0.0 <= p <= 1.0 for p in report.estimates.values())
        assert len(report.estimates) == 12

    def test_all_adjacencies_count(self, rng):
        trace = trace_from_dags([random_dag(rng, 4) for _ in range(10)])
        report = estimate(trace, AllAdjacencies())
        assert len(report.estimates) == 6

    def test_concatenation_is_count_weighted_mean(self, rng):
        dags_a = [random_dag(rng, 3) for _ in range(10)]
        dags_b = [random_dag(rng, 3) for _ in range(30)]
        pa = estimate(trace_from_dags(dags_a), DirectedArc(0, 1)).estimates["arc:0->1"]
        pb = estimate(trace_from_dags(dags_b), DirectedArc(0, 1)).estimates["arc:0->1"]
        pc = estimate(
            trace_from_dags(dags_a + dags_b), DirectedArc(0, 1)
        ).estimates["arc:0->1"]
        assert pc == pytest.approx((10 * pa + 30 * pb) / 40, abs=1e-12)

    def test_sum_of_arc_estimates_is_mean_edge_count(self, rng):
        dags = [random_dag(rng, 4) for _ in range(50)]
        trace = trace_from_dags(dags)
        report = estimate(trace, AllArcs())
        mean_edges = sum(d.n_edges for d in dags) / len(dags)
        assert sum(report.estimates.values()) == pytest.approx(mean_edges, abs=1e-9)

    def test_custom_predicate(self):
        trace, _ = three_dag_trace()
        report = estimate(trace, lambda d: d.n_edges == 0, label="edgeless")
        assert report.estimates["edgeless"] == 0.25

    def test_named_labels(self):
        g = Dag.from_parent_sets([[], [0]])
        trace = trace_from_dags([g], names=["left", "right"])
        report = estimate(trace, DirectedArc(0, 1))
        assert report.estimates == {"arc:left->right": 1.0}

    def test_empty_trace_rejected(self):
        trace, _ = three_dag_trace()
        trace.encodings = []
        with pytest.raises(QueryError):
            estimate(trace, DirectedArc(0, 1))

    def test_bad_pair_rejected(self):
        trace, _ = three_dag_trace()
        with pytest.raises(QueryError):
            estimate(trace, DirectedArc(0, 0))


class TestDagFrequency:
    def test_counts_ordered(self):
        trace, (g1, g2, g3) = three_dag_trace()
        report = dag_frequency(trace)
        counts = [c for _, c, _ in report.dag_frequency]
        assert counts == [2, 1, 1]
        assert sum(counts) == report.sample_size
        from mcdag import encode_dag

        assert report.dag_frequency[0][0] == encode_dag(g1)

    def test_top_k_truncation(self):
        trace, _ = three_dag_trace()
        report = dag_frequency(trace, top_k=1)
        assert len(report.dag_frequency) == 1
        assert report.extra["n_distinct"] == 3

    def test_scores_attached(self):
        g = Dag.empty(2)
        trace = trace_from_dags([g, g], log_scores=[-1.5, -1.5])
        report = dag_frequency(trace)
        assert report.dag_frequency[0][2] == -1.5

    def test_deterministic_tie_break(self, rng):
        dags = [random_dag(rng, 3) for _ in range(9)]
        t = trace_from_dags(dags)
        a = dag_frequency(t).dag_frequency
        b = dag_frequency(t).dag_frequency
        assert a == b


class TestNormalizedScoreTrace:
    def test_constant_scores_give_zeros(self):
        g = Dag.empty(2)
        trace = trace_from_dags([g] * 5, log_scores=[-7.0] * 5)
        assert normalized_score_trace(trace).tolist() == [0.0] * 5

    def test_max_is_zero(self, rng):
        g = Dag.empty(2)
        scores = [-(100 + rng.random() * 50) for _ in range(20)]
        trace = trace_from_dags([g] * 20, log_scores=scores)
        values = normalized_score_trace(trace)
        assert values.max() == 0.0
        assert (values <= 0).all()

    def test_sorted_ascending(self, rng):
        g = Dag.empty(2)
        scores = [-(100 + rng.random() * 50) for _ in range(20)]
        trace = trace_from_dags([g] * 20, log_scores=scores)
        values = normalized_score_trace(trace, sort=True)
        assert (np.diff(values) >= 0).all()
        assert values[-1] == 0.0


class TestFeatureGrammar:
    def test_arc_with_names(self):
        q = parse_feature("arc:a->b", ["a", "b", "c"], 3)
        assert q == DirectedArc(0, 1)

    def test_adj_with_indices(self):
        q = parse_feature("adj:2-0", None, 3)
        assert q == UndirectedAdjacency(2, 0)

    def test_all_arcs_and_adj(self):
        assert parse_feature("all-arcs", None, 3) == AllArcs()
        assert parse_feature("all-adj", None, 3) == AllAdjacencies()

    def test_dag_freq(self):
        assert parse_feature("dag-freq:4", None, 3) == ("dag-freq", 4)
        with pytest.raises(QueryError):
            parse_feature("dag-freq:zero", None, 3)
        with pytest.raises(QueryError):
            parse_feature("dag-freq:0", None, 3)

    def test_score_trace(self):
        assert parse_feature("score-trace", None, 3) == ("score-trace", False)
        assert parse_feature("score-trace:sorted", None, 3) == ("score-trace", True)

    def test_unknown_feature(self):
        with pytest.raises(QueryError):
            parse_feature("cpdag:a-b", None, 3)

    def test_unknown_node(self):
        with pytest.raises(QueryError):
            parse_feature("arc:a->zz", ["a", "b"], 2)

    def test_index_out_of_range(self):
        with pytest.raises(QueryError):
            parse_feature("arc:0->9", None, 3)

    def test_labels(self):
        assert arc_label(0, 1, ["a", "b"]) == "arc:a->b"
        assert adj_label(1, 0, ["a", "b"]) == "adj:a-b"


class TestReportSerialization:
    def test_json_and_csv(self, tmp_path):
        trace, _ = three_dag_trace()
        report = estimate(trace, AllAdjacencies())
        obj = report.to_json()
        assert obj["method"] == "mcmc"
        assert obj["sample_size"] == 4
        path = tmp_path / "report.csv"
        report.write_csv(path)
        text = path.read_text()
        assert text.startswith("feature,estimate")
        assert "adj:0-1" in text
