import itertools
import random

import pytest

from polarimeter.errors import DegenerateGraphError, EmptyGraphError
from polarimeter.evaluation import SynthParams, generate_discussion
from polarimeter.graph import (
    RetweetGraph,
    build_graph,
    export_edges,
    largest_component,
    load_edges,
    load_graph,
    prune_low_degree,
    save_graph,
)

from helpers import clique, graph_from_pairs, random_graph, rec


class TestBuildGraph:
    def test_repeat_retweets_sum_weight(self):
        records = [rec("t1", "A", retweet_of="B"), rec("t2", "A", retweet_of="B")]
        g = build_graph(records)
        assert g.nodes == {"A", "B"}
        assert g.edges == {("A", "B"): 2}

    def test_self_loop_dropped(self):
        g = build_graph([rec("t1", "A", retweet_of="A")])
        assert g.nodes == {"A"} and g.edges == {}

    def test_original_authors_become_isolated_nodes(self):
        g = build_graph([rec("t1", "A"), rec("t2", "B", retweet_of="C")])
        assert g.nodes == {"A", "B", "C"}
        assert g.n_edges == 1

    def test_permutation_invariant(self):
        records = [rec(f"t{i}", f"u{i % 7}", retweet_of=f"u{(i + 1) % 7}")
                   for i in range(30)]
        g1 = build_graph(records)
        shuffled = records[:]
        random.Random(4).shuffle(shuffled)
        assert build_graph(shuffled) == g1

    def test_total_weight_matches_generator_retweet_count(self):
        records, info = generate_discussion(SynthParams(
            users_per_side=40, tweets_per_user=4, intra_retweet_mean=2.0, seed=11))
        g = build_graph(records)
        # the generator never emits self-retweets, so nothing is dropped
        assert g.total_weight() == info.n_retweets
        assert g.n_nodes == 80

    def test_empty(self):
        assert build_graph([]).n_nodes == 0


class TestLargestComponent:
    def test_bigger_clique_wins(self):
        g = graph_from_pairs(clique(["a1", "a2", "a3", "a4", "a5"]) + clique(["b1", "b2", "b3"]))
        assert largest_component(g) == {"a1", "a2", "a3", "a4", "a5"}

    def test_connected_graph_is_identity(self):
        g = graph_from_pairs(clique([f"n{i}" for i in range(6)]))
        assert largest_component(g) == g.nodes

    def test_tie_breaks_to_smallest_id(self):
        g = graph_from_pairs([("b", "c"), ("a", "d")])
        assert largest_component(g) == {"a", "d"}

    def test_empty_graph(self):
        with pytest.raises(EmptyGraphError):
            largest_component(RetweetGraph(set(), {}))

    def test_matches_bfs_oracle(self):
        g = random_graph(60, 0.03, seed=9)
        # independent labeling: repeated BFS over an adjacency built here
        adj = {n: set() for n in g.nodes}
        for (u, v) in g.edges:
            adj[u].add(v)
            adj[v].add(u)
        seen, components = set(), []
        for start in sorted(g.nodes):
            if start in seen:
                continue
            stack, comp = [start], set()
            while stack:
                n = stack.pop()
                if n in comp:
                    continue
                comp.add(n)
                stack.extend(adj[n] - comp)
            seen |= comp
            components.append(comp)
        expected = max(components, key=lambda c: (len(c), [-ord(ch) for ch in min(c)]))
        assert largest_component(g) == expected


def peel_oracle(graph, threshold=3):
    """Recompute-from-scratch peeling, an independent code path."""
    alive = set(graph.nodes)
    while True:
        strengths = {n: 0 for n in alive}
        for (u, v), w in graph.edges.items():
            if u in alive and v in alive:
                strengths[u] += w
                strengths[v] += w
        drop = {n for n in alive if strengths[n] < threshold}
        if not drop:
            return alive
        alive -= drop


class TestPrune:
    def test_star_degenerates(self):
        g = graph_from_pairs([(f"leaf{i}", "center") for i in range(5)])
        with pytest.raises(DegenerateGraphError):
            prune_low_degree(g)

    def test_clique_of_six_unchanged(self):
        g = graph_from_pairs(clique([f"n{i}" for i in range(6)]))
        with pytest.raises(DegenerateGraphError):
            # six nodes survive but that is under the 10-node floor
            prune_low_degree(g)

    def test_clique_survives_with_min_size(self):
        g = graph_from_pairs(clique([f"n{i:02d}" for i in range(12)]))
        root = prune_low_degree(g)
        assert root.nodes == g.nodes
        assert root.pruned_count == 0
        assert root.component_size == 12

    def test_weights_count_toward_strength(self):
        # pendant with a weight-3 edge survives; weight-2 pendant does not
        core = clique([f"n{i:02d}" for i in range(10)])
        g = graph_from_pairs(core + [("p3", "n00", 3), ("p2", "n01", 2)])
        root = prune_low_degree(g)
        assert "p3" in root.nodes
        assert "p2" not in root.nodes

    def test_removal_cascades(self):
        core = clique([f"n{i:02d}" for i in range(10)])
        # chain hanging off the core: each link has weight 3 except the last
        chain = [("c1", "n00", 3), ("c2", "c1", 2)]
        g = graph_from_pairs(core + chain)
        root = prune_low_degree(g)
        # c2 goes first (strength 2), dropping c1 to 3 = survives
        assert "c1" in root.nodes and "c2" not in root.nodes

    def test_matches_peeling_oracle(self):
        for seed in range(5):
            g = random_graph(50, 0.08, seed=seed, max_weight=3)
            survivors = peel_oracle(g)
            # restricting to a component never lowers strengths (every
            # neighbor shares the component), so the root-graph is exactly
            # the largest component of the peeling fixpoint
            if survivors:
                comp = largest_component(g.subgraph(survivors))
            else:
                comp = frozenset()
            try:
                root = prune_low_degree(g)
            except DegenerateGraphError:
                assert len(comp) < 10
                continue
            assert root.nodes == comp
            assert all(root.strength(n) >= 3 for n in root.nodes)

    def test_pruned_count_provenance(self):
        core = clique([f"n{i:02d}" for i in range(11)])
        g = graph_from_pairs(core + [("loner", "n00", 1)])
        root = prune_low_degree(g)
        assert root.pruned_count == 1
        assert root.component_size == 11


class TestSerialization:
    def test_empty_graph_empty_file(self, tmp_path):
        path = tmp_path / "edges.tsv"
        export_edges(RetweetGraph(set(), {}), path)
        assert path.read_text() == ""

    def test_single_edge(self, tmp_path):
        path = tmp_path / "edges.tsv"
        export_edges(graph_from_pairs([("u", "v", 2)]), path)
        assert path.read_text() == "u\tv\t2\n"

    def test_round_trip(self, tmp_path):
        g = random_graph(30, 0.1, seed=2, max_weight=4)
        path = tmp_path / "edges.tsv"
        export_edges(g, path)
        back = load_edges(path)
        assert back.edges == g.edges

    def test_round_trip_keeps_isolated_nodes(self, tmp_path):
        g = graph_from_pairs([("a", "b")], extra_nodes=["loner"])
        save_graph(g, tmp_path / "e.tsv", tmp_path / "n.tsv")
        back = load_graph(tmp_path / "e.tsv", tmp_path / "n.tsv")
        assert back == g


class TestInvariants:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            RetweetGraph({"a"}, {("a", "a"): 1})

    def test_zero_weight_rejected(self):
        with pytest.raises(ValueError):
            RetweetGraph({"a", "b"}, {("a", "b"): 0})

    def test_dangling_endpoint_rejected(self):
        with pytest.raises(ValueError):
            RetweetGraph({"a"}, {("a", "b"): 1})

    def test_undirected_sums_antiparallel(self):
        g = RetweetGraph({"a", "b"}, {("a", "b"): 2, ("b", "a"): 3})
        assert g.undirected()["a"]["b"] == 5
        assert g.strength("a") == 5
