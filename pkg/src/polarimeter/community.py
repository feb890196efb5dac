"""Community detection on the endorsement graph.

Two detectors are provided: a seeded Louvain (greedy modularity
optimization with local moves and graph aggregation) and Walktrap
(agglomerative merging by short random-walk distance, cut at the
maximum-modularity level of the merge sequence). Both operate on the
undirected view of the retweet graph, antiparallel edge weights summed.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraphError, SingleCommunityError, UnassignedNodeError
from .graph import RetweetGraph

# A local-move pass that improves modularity by less than this is noise.
GAIN_THRESHOLD = 1e-7


@dataclass(frozen=True)
class Partition:
    """Community assignment per node, with the modularity it achieves."""

    assignment: dict
    modularity_q: float
    method: str
    # Flat modularity after each local-move/aggregation pass (Louvain only);
    # must be non-decreasing.
    pass_history: tuple = ()

    def communities(self) -> list:
        """Node sets grouped by community id, ordered by id."""
        groups = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, set()).add(node)
        return [frozenset(groups[cid]) for cid in sorted(groups)]

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))


@dataclass(frozen=True)
class PrincipalPair:
    """The two largest communities; c1 is the biggest."""

    c1_users: frozenset
    c2_users: frozenset


def _dense_relabel(assignment: dict) -> dict:
    """Relabel community ids to 0..k-1 in order of first appearance over
    sorted node ids, so equal partitions get equal labels."""
    mapping = {}
    out = {}
    for node in sorted(assignment):
        cid = assignment[node]
        if cid not in mapping:
            mapping[cid] = len(mapping)
        out[node] = mapping[cid]
    return out


def modularity(graph: RetweetGraph, assignment: dict) -> float:
    """Newman modularity Q = sum_c (e_c - a_c^2) on the undirected view.

    e_c is the fraction of edge-weight endpoints inside community c and
    a_c the fraction of all endpoints attached to c. Edgeless graphs
    score 0.
    """
    adj = graph.undirected()
    missing = [n for n in graph.nodes if n not in assignment]
    if missing:
        raise UnassignedNodeError(f"{len(missing)} node(s) unassigned, e.g. {sorted(missing)[:3]}")
    two_m = 0.0
    internal = {}
    attached = {}
    # adj iterates in sorted order, so the float accumulation order (and
    # hence the exact Q bits) depends only on the graph value
    for u, nbrs in adj.items():
        cu = assignment[u]
        strength = 0.0
        for v, w in nbrs.items():
            strength += w
            if assignment[v] == cu:
                internal[cu] = internal.get(cu, 0.0) + w
        attached[cu] = attached.get(cu, 0.0) + strength
        two_m += strength
    if two_m == 0:
        return 0.0
    q = 0.0
    for cid in sorted(attached, key=str):
        q += internal.get(cid, 0.0) / two_m - (attached[cid] / two_m) ** 2
    return q


def louvain(graph: RetweetGraph, seed: int = 0) -> Partition:
    """Seeded Louvain: repeated local moves then aggregation, until a full
    pass gains less than GAIN_THRESHOLD modularity.

    The node visit order is shuffled by `seed`; a fixed seed gives an
    identical partition.
    """
    if not graph.nodes:
        raise EmptyGraphError("cannot cluster an empty graph")
    rng = random.Random(seed)

    base_nodes = sorted(graph.nodes)
    # Level-graph state: adjacency without self entries, plus aggregated
    # internal weight per supernode (counts twice toward its strength).
    adj = {u: dict(nbrs) for u, nbrs in graph.undirected().items()}
    self_w = {u: 0.0 for u in adj}
    two_m = sum(sum(nbrs.values()) for nbrs in adj.values())
    if two_m == 0:
        assignment = _dense_relabel({u: i for i, u in enumerate(base_nodes)})
        return Partition(assignment, 0.0, "louvain", pass_history=(0.0,))

    # node -> community id of the current level, composed down to base nodes
    flat = {u: u for u in base_nodes}
    history = []
    prev_q = None

    while True:
        nodes = list(adj)
        strength = {u: sum(adj[u].values()) + 2.0 * self_w[u] for u in nodes}
        com = {u: u for u in nodes}
        tot = dict(strength)

        rng.shuffle(nodes)
        moved_any = True
        while moved_any:
            moved_any = False
            for u in nodes:
                cu = com[u]
                k_u = strength[u]
                # weight from u to each neighboring community
                links = {}
                for v, w in adj[u].items():
                    links[com[v]] = links.get(com[v], 0.0) + w
                tot[cu] -= k_u
                stay = links.get(cu, 0.0) - tot[cu] * k_u / two_m
                best_c, best_gain = cu, stay
                for c, w_uc in links.items():
                    if c == cu:
                        continue
                    gain = w_uc - tot[c] * k_u / two_m
                    if gain > best_gain + 1e-12:
                        best_c, best_gain = c, gain
                tot[best_c] += k_u
                if best_c != cu:
                    com[u] = best_c
                    moved_any = True

        flat = {base: com[level_node] for base, level_node in flat.items()}
        q = modularity(graph, flat)
        if prev_q is not None and q < prev_q - 1e-9:
            raise RuntimeError(
                f"modularity decreased across passes: {prev_q} -> {q}"
            )
        history.append(q)
        if prev_q is not None and q - prev_q <= GAIN_THRESHOLD:
            break
        prev_q = q

        # Aggregate communities into supernodes for the next level.
        new_adj = {}
        new_self = {}
        for u, nbrs in adj.items():
            cu = com[u]
            new_adj.setdefault(cu, {})
            new_self[cu] = new_self.get(cu, 0.0) + self_w[u]
            for v, w in nbrs.items():
                cv = com[v]
                if cu == cv:
                    # each undirected edge visited from both ends
                    new_self[cu] += w / 2.0
                else:
                    new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
        if len(new_adj) == len(adj):
            break
        adj = new_adj
        self_w = new_self

    assignment = _dense_relabel(flat)
    return Partition(assignment, history[-1], "louvain", pass_history=tuple(history))


def walktrap(graph: RetweetGraph, walk_length: int = 4) -> Partition:
    """Walktrap: agglomerate adjacent communities by the Ward cost of their
    random-walk distance, then cut the merge sequence at the level with
    maximum modularity. Deterministic given the graph.

    Needs a dense walk-distribution matrix, so memory is O(n^2); fine for
    discussion-scale root-graphs.
    """
    if not graph.nodes:
        raise EmptyGraphError("cannot cluster an empty graph")
    adj = graph.undirected()
    all_nodes = sorted(graph.nodes)
    active = [u for u in all_nodes if adj[u]]
    isolated = [u for u in all_nodes if not adj[u]]

    if not active:
        assignment = _dense_relabel({u: i for i, u in enumerate(all_nodes)})
        return Partition(assignment, 0.0, "walktrap")

    n = len(active)
    index = {u: i for i, u in enumerate(active)}
    dtype = np.float32 if n > 1500 else np.float64
    A = np.zeros((n, n), dtype=dtype)
    for u in active:
        for v, w in adj[u].items():
            A[index[u], index[v]] = w
    deg = A.sum(axis=1)
    P = A / deg[:, None]
    Pt = np.linalg.matrix_power(P, walk_length)
    inv_deg = (1.0 / deg).astype(dtype)
    two_m = float(deg.sum())

    # Per-community state, keyed by an ever-increasing id. Vectors are
    # immutable, so a queued pair distance stays valid while both ids live.
    size = {}
    vec = {}
    nbr_w = {}
    w_in = {}
    w_tot = {}
    for i in range(n):
        size[i] = 1
        vec[i] = Pt[i]
        w_in[i] = 0.0
        w_tot[i] = float(deg[i])
        nbr_w[i] = {}
    for i in range(n):
        for v, w in adj[active[i]].items():
            nbr_w[i][index[v]] = float(w)

    def ward_cost(a: int, b: int) -> float:
        diff = vec[a] - vec[b]
        r2 = float(np.dot(diff * diff, inv_deg))
        return size[a] * size[b] / (size[a] + size[b]) / n * r2

    def q_of(c: int) -> float:
        return 2.0 * w_in[c] / two_m - (w_tot[c] / two_m) ** 2

    heap = []
    for a in range(n):
        for b in nbr_w[a]:
            if a < b:
                heapq.heappush(heap, (ward_cost(a, b), a, b))

    alive = set(range(n))
    q_now = sum(q_of(c) for c in alive)
    levels = [q_now]
    merges = []
    next_id = n

    while heap:
        cost, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive:
            continue
        nid = next_id
        next_id += 1
        cross = nbr_w[a].get(b, 0.0)
        q_now += -q_of(a) - q_of(b)
        size[nid] = size[a] + size[b]
        vec[nid] = (size[a] * vec[a] + size[b] * vec[b]) / size[nid]
        w_in[nid] = w_in[a] + w_in[b] + cross
        w_tot[nid] = w_tot[a] + w_tot[b]
        merged_nbrs = {}
        for old in (a, b):
            for x, w in nbr_w[old].items():
                if x == a or x == b:
                    continue
                merged_nbrs[x] = merged_nbrs.get(x, 0.0) + w
        for x, w in merged_nbrs.items():
            nbr_w[x].pop(a, None)
            nbr_w[x].pop(b, None)
            nbr_w[x][nid] = w
        nbr_w[nid] = merged_nbrs
        alive.discard(a)
        alive.discard(b)
        alive.add(nid)
        for old in (a, b):
            del vec[old], nbr_w[old]
        q_now += q_of(nid)
        merges.append((a, b, nid))
        levels.append(q_now)
        for x in merged_nbrs:
            pair = (nid, x) if nid < x else (x, nid)
            heapq.heappush(heap, (ward_cost(nid, x), pair[0], pair[1]))

    best_level = int(np.argmax(levels))

    # Replay the first best_level merges to recover that cut.
    parent = list(range(next_id))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, nid in merges[:best_level]:
        parent[a] = nid
        parent[b] = nid

    assignment = {u: find(index[u]) for u in active}
    cid = next_id
    for u in isolated:
        assignment[u] = cid
        cid += 1
    assignment = _dense_relabel(assignment)
    return Partition(assignment, modularity(graph, assignment), "walktrap")


def principal_pair(partition: Partition) -> PrincipalPair:
    """The two communities with the most users; ties broken by smallest
    member id."""
    groups = {}
    for node, cid in partition.assignment.items():
        groups.setdefault(cid, set()).add(node)
    if len(groups) < 2:
        raise SingleCommunityError(
            f"clustering found {len(groups)} community(ies); need at least 2"
        )
    ranked = sorted(groups.values(), key=lambda members: (-len(members), min(members)))
    return PrincipalPair(frozenset(ranked[0]), frozenset(ranked[1]))


def save_partition(partition: Partition, path) -> None:
    """Persist as TSV "user_id community_id", sorted by user id."""
    with open(path, "w", encoding="utf-8") as fh:
        for node in sorted(partition.assignment):
            fh.write(f"{node}\t{partition.assignment[node]}\n")


def load_partition(path, method: str = "unknown") -> Partition:
    assignment = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            node, cid = line.split("\t")
            assignment[node] = int(cid)
    return Partition(assignment, float("nan"), method)
