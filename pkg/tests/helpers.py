"""Shared fixtures-in-spirit: tiny graph builders and independent oracle
implementations that deliberately do NOT reuse the package's code paths.
"""

from __future__ import annotations

import itertools

import numpy as np

from polarimeter.graph import RetweetGraph
from polarimeter.ingest import InteractionRecord


def rec(tweet_id, user_id, text="hello world", retweet_of=None, ts=0, tags=("topic",)):
    return InteractionRecord(
        tweet_id=str(tweet_id),
        user_id=str(user_id),
        text=text,
        timestamp=ts,
        retweet_of_user=retweet_of,
        hashtags=tuple(tags),
    )


def graph_from_pairs(pairs, extra_nodes=()):
    """Undirected-intent test graph: each pair becomes one directed edge of
    weight 1 (the package symmetrizes internally)."""
    edges = {}
    nodes = set(extra_nodes)
    for item in pairs:
        if len(item) == 3:
            u, v, w = item
        else:
            u, v = item
            w = 1
        edges[(u, v)] = edges.get((u, v), 0) + w
        nodes.add(u)
        nodes.add(v)
    return RetweetGraph(nodes, edges)


def clique(ids):
    return [(a, b) for a, b in itertools.combinations(ids, 2)]


def two_cliques_bridged(k=5):
    """Canonical community test case: two k-cliques joined by one edge."""
    left = [f"a{i}" for i in range(k)]
    right = [f"b{i}" for i in range(k)]
    pairs = clique(left) + clique(right) + [(left[0], right[0])]
    return graph_from_pairs(pairs), set(left), set(right)


def random_graph(n, p, seed, max_weight=1, connected=False):
    """Erdos-Renyi test graph over string ids; optionally force connectivity
    with a spine path so label propagation reaches everything."""
    rng = np.random.default_rng(seed)
    ids = [f"n{i:03d}" for i in range(n)]
    pairs = []
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            w = 1 if max_weight == 1 else int(rng.integers(1, max_weight + 1))
            pairs.append((ids[i], ids[j], w))
    if connected:
        present = {frozenset((u, v)) for u, v, _ in pairs}
        for i in range(n - 1):
            if frozenset((ids[i], ids[i + 1])) not in present:
                pairs.append((ids[i], ids[i + 1], 1))
    return graph_from_pairs(pairs, extra_nodes=ids)


def planted_graph(sizes, p_in, p_out, seed):
    """Planted-partition graph with blocks of the given sizes. Deterministic
    given seed; returns (graph, truth assignment)."""
    rng = np.random.default_rng(seed)
    ids = []
    truth = {}
    for b, size in enumerate(sizes):
        for i in range(size):
            uid = f"n{len(ids):02d}"
            ids.append(uid)
            truth[uid] = b
    pairs = []
    for i, j in itertools.combinations(range(len(ids)), 2):
        p = p_in if truth[ids[i]] == truth[ids[j]] else p_out
        if rng.random() < p:
            pairs.append((ids[i], ids[j]))
    return graph_from_pairs(pairs, extra_nodes=ids), truth


def undirected_weights(graph):
    """Symmetrized pair weights {frozenset({u,v}): w} computed from the raw
    directed edge dict, independent of graph.undirected()."""
    und = {}
    for (u, v), w in graph.edges.items():
        key = frozenset((u, v))
        und[key] = und.get(key, 0) + w
    return und


def brute_force_modularity(graph, assignment):
    """Direct double-sum Newman modularity, an independent code path:
    Q = (1/2m) * sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j] over ordered pairs.
    """
    und = undirected_weights(graph)
    nodes = sorted(graph.nodes)
    idx = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    a = np.zeros((n, n))
    for key, w in und.items():
        u, v = tuple(key)
        a[idx[u], idx[v]] = w
        a[idx[v], idx[u]] = w
    two_m = a.sum()
    if two_m == 0:
        return 0.0
    k = a.sum(axis=1)
    q = 0.0
    for i in range(n):
        for j in range(n):
            if assignment[nodes[i]] == assignment[nodes[j]]:
                q += a[i, j] - k[i] * k[j] / two_m
    return q / two_m


def best_partition_exhaustive(graph, max_k):
    """Exhaustive search over all assignments into at most max_k groups.
    Only sane for ~10 nodes. Returns (best_q, best_assignment)."""
    nodes = sorted(graph.nodes)
    best_q = -np.inf
    best = None
    # restricted growth strings enumerate set partitions without relabelings
    def grow(prefix, n_used):
        if len(prefix) == len(nodes):
            assignment = dict(zip(nodes, prefix))
            q = brute_force_modularity(graph, assignment)
            nonlocal best_q, best
            if q > best_q + 1e-15:
                best_q = q
                best = assignment
            return
        for c in range(min(n_used + 1, max_k)):
            grow(prefix + (c,), max(n_used, c + 1))
    grow((), 0)
    return best_q, best


def harmonic_oracle(graph, seeds):
    """Dense direct solve of the harmonic system: for every non-seed i,
    x_i = (sum_j w_ij x_j) / (sum_j w_ij). Ground truth for the iterative
    propagation. Assumes the graph is connected and every non-seed node
    has a path to a seed."""
    nodes = sorted(graph.nodes)
    idx = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    w = np.zeros((n, n))
    for key, weight in undirected_weights(graph).items():
        u, v = tuple(key)
        w[idx[u], idx[v]] = weight
        w[idx[v], idx[u]] = weight
    x = np.zeros(n)
    seed_mask = np.zeros(n, dtype=bool)
    for u, val in seeds.items():
        seed_mask[idx[u]] = True
        x[idx[u]] = val
    free = ~seed_mask
    deg = w.sum(axis=1)
    # (D - W)_ff x_f = W_fs x_s
    lap = np.diag(deg) - w
    rhs = w[np.ix_(free, seed_mask)] @ x[seed_mask]
    x[free] = np.linalg.solve(lap[np.ix_(free, free)], rhs)
    return dict(zip(nodes, x))
