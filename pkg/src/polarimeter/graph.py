"""Directed retweet endorsement graph and the pruned root-graph.

An edge u -> v with weight w means user u retweeted user v w times.
The root-graph is the largest weakly connected component after
iteratively removing users with fewer than three total retweet
interactions (made + received, counted with edge weights).
"""

from __future__ import annotations

from collections import deque

from .errors import DegenerateGraphError, EmptyGraphError

# Below this many surviving nodes the discussion is too small to score.
MIN_ROOT_NODES = 10


class RetweetGraph:
    """Directed weighted user graph. Immutable once built."""

    def __init__(self, nodes, edges):
        self.nodes = frozenset(nodes)
        self.edges = dict(edges)
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            if w < 1:
                raise ValueError(f"edge ({u!r}, {v!r}) has weight {w}")
        endpoint_nodes = {u for u, _ in self.edges} | {v for _, v in self.edges}
        if not endpoint_nodes <= self.nodes:
            raise ValueError("edge endpoints missing from node set")
        self._undirected = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_weight(self) -> int:
        return sum(self.edges.values())

    def undirected(self) -> dict:
        """Symmetrized adjacency {u: {v: weight}}, weights of antiparallel
        edges summed. Nodes and neighbors are listed in sorted order so
        iteration is a function of the graph value, not of edge insertion
        order or set hashing. Cached; treat as read-only."""
        if self._undirected is None:
            adj = {node: {} for node in sorted(self.nodes)}
            for (u, v), w in self.edges.items():
                adj[u][v] = adj[u].get(v, 0) + w
                adj[v][u] = adj[v].get(u, 0) + w
            self._undirected = {u: {v: nbrs[v] for v in sorted(nbrs)}
                                for u, nbrs in adj.items()}
        return self._undirected

    def strength(self, node) -> int:
        """Total retweet interactions of `node`: retweets made + received."""
        return sum(self.undirected()[node].values())

    def subgraph(self, keep) -> "RetweetGraph":
        keep = frozenset(keep)
        edges = {(u, v): w for (u, v), w in self.edges.items() if u in keep and v in keep}
        return RetweetGraph(keep, edges)

    def __eq__(self, other):
        if not isinstance(other, RetweetGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return f"RetweetGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


class RootGraph(RetweetGraph):
    """Pruned largest component used for prediction and propagation."""

    def __init__(self, nodes, edges, component_size: int, pruned_count: int):
        super().__init__(nodes, edges)
        self.component_size = component_size
        self.pruned_count = pruned_count


def build_graph(records) -> RetweetGraph:
    """One node per contributing user; edge (u, v) counts u's retweets of v.

    Self-retweets are dropped; authors of original tweets stay as
    (possibly isolated) nodes. Order of records does not matter.
    """
    nodes = set()
    edges = {}
    for record in records:
        nodes.add(record.user_id)
        target = record.retweet_of_user
        if target is None or target == record.user_id:
            continue
        nodes.add(target)
        key = (record.user_id, target)
        edges[key] = edges.get(key, 0) + 1
    return RetweetGraph(nodes, edges)


def largest_component(graph: RetweetGraph) -> frozenset:
    """Largest weakly connected component; ties broken by smallest member id."""
    if not graph.nodes:
        raise EmptyGraphError("graph has no nodes")
    adj = graph.undirected()
    unvisited = set(graph.nodes)
    best = None
    while unvisited:
        start = unvisited.pop()
        component = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for neighbor in adj[node]:
                if neighbor in unvisited:
                    unvisited.remove(neighbor)
                    component.add(neighbor)
                    queue.append(neighbor)
        if (
            best is None
            or len(component) > len(best)
            or (len(component) == len(best) and min(component) < min(best))
        ):
            best = component
    return frozenset(best)


def prune_low_degree(graph: RetweetGraph, min_total_degree: int = 3) -> RootGraph:
    """Iteratively peel nodes with strength < min_total_degree, then keep the
    largest component of what survives.

    Peeling runs to a fixpoint: removing a node lowers its neighbors'
    strengths, which can push them below the threshold in turn. Raises
    DegenerateGraphError when fewer than MIN_ROOT_NODES nodes survive.
    """
    adj = {u: dict(nbrs) for u, nbrs in graph.undirected().items()}
    strengths = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
    queue = deque(u for u, s in strengths.items() if s < min_total_degree)
    removed = set(queue)
    while queue:
        node = queue.popleft()
        for neighbor, w in adj[node].items():
            if neighbor in removed:
                continue
            strengths[neighbor] -= w
            if strengths[neighbor] < min_total_degree:
                removed.add(neighbor)
                queue.append(neighbor)
        adj[node] = {}
    survivors = graph.nodes - removed
    if len(survivors) < MIN_ROOT_NODES:
        raise DegenerateGraphError(
            f"only {len(survivors)} node(s) survive degree pruning; "
            f"need at least {MIN_ROOT_NODES}"
        )
    pruned = graph.subgraph(survivors)
    component = largest_component(pruned)
    if len(component) < MIN_ROOT_NODES:
        raise DegenerateGraphError(
            f"largest surviving component has {len(component)} node(s); "
            f"need at least {MIN_ROOT_NODES}"
        )
    final = pruned.subgraph(component)
    return RootGraph(
        final.nodes,
        final.edges,
        component_size=len(component),
        pruned_count=graph.n_nodes - len(component),
    )


def export_edges(graph: RetweetGraph, path) -> None:
    """Write tab-separated "u v weight" lines in sorted order."""
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v) in sorted(graph.edges):
            fh.write(f"{u}\t{v}\t{graph.edges[(u, v)]}\n")


def load_edges(path) -> RetweetGraph:
    """Parse an edge-list file back into a graph. Nodes are edge endpoints
    only; use save_graph/load_graph to keep isolated nodes."""
    edges = {}
    nodes = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 'u<TAB>v<TAB>weight'")
            u, v, w = parts
            edges[(u, v)] = int(w)
            nodes.add(u)
            nodes.add(v)
    return RetweetGraph(nodes, edges)


def save_graph(graph: RetweetGraph, edges_path, nodes_path) -> None:
    """Persist a graph as an edge list plus a node list (keeps isolated nodes)."""
    export_edges(graph, edges_path)
    with open(nodes_path, "w", encoding="utf-8") as fh:
        for node in sorted(graph.nodes):
            fh.write(f"{node}\n")


def load_graph(edges_path, nodes_path) -> RetweetGraph:
    base = load_edges(edges_path)
    with open(nodes_path, "r", encoding="utf-8") as fh:
        nodes = {line.strip() for line in fh if line.strip() and not line.startswith("#")}
    return RetweetGraph(nodes | base.nodes, base.edges)
