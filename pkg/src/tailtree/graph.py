"""Trees over 1-based node labels, unique paths, and maximum-weight spanning trees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Tree:
    """Undirected tree on nodes 1..d.

    Edges are normalized to (min, max) pairs and sorted. A parent array rooted
    at node 1 is precomputed for O(d) path queries.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    _parent: np.ndarray = field(init=False, repr=False, compare=False)
    _depth: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.node_count
        if d < 2:
            raise ValueError(f"a tree needs at least 2 nodes, got d={d}")
        norm = []
        seen = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (1 <= a <= d and 1 <= b <= d):
                raise ValueError(f"edge ({a},{b}) outside 1..{d}")
            e = (min(a, b), max(a, b))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        if len(norm) != d - 1:
            raise ValueError(f"expected {d - 1} edges, got {len(norm)}")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

        adj: list[list[int]] = [[] for _ in range(d + 1)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        parent = np.zeros(d + 1, dtype=np.int64)
        depth = np.full(d + 1, -1, dtype=np.int64)
        depth[1] = 0
        stack = [1]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if depth[w] < 0:
                    depth[w] = depth[u] + 1
                    parent[w] = u
                    stack.append(w)
        if np.any(depth[1:] < 0):
            missing = [v for v in range(1, d + 1) if depth[v] < 0]
            raise ValueError(f"tree is not connected; unreachable nodes {missing}")
        object.__setattr__(self, "_parent", parent)
        object.__setattr__(self, "_depth", depth)

    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.node_count + 1)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {v: tuple(sorted(nb)) for v, nb in adj.items()}

    def parent_of(self, v: int) -> int:
        """Parent of v in the rooting at node 1 (0 for the root itself)."""
        return int(self._parent[v])

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in set(self.edges)


def path_between(tree: Tree, a: int, b: int) -> list[tuple[int, int]]:
    """Directed edge sequence along the unique path from a to b."""
    d = tree.node_count
    if not (1 <= a <= d and 1 <= b <= d):
        raise ValueError(f"nodes must be in 1..{d}, got ({a},{b})")
    if a == b:
        raise ValueError("path endpoints must differ")
    parent, depth = tree._parent, tree._depth
    up_a, up_b = [a], [b]
    ua, ub = a, b
    while depth[ua] > depth[ub]:
        ua = int(parent[ua])
        up_a.append(ua)
    while depth[ub] > depth[ua]:
        ub = int(parent[ub])
        up_b.append(ub)
    while ua != ub:
        ua = int(parent[ua])
        ub = int(parent[ub])
        up_a.append(ua)
        up_b.append(ub)
    nodes = up_a + up_b[-2::-1]
    return [(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)]


def _check_weights(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 2:
        raise ValueError(f"weight matrix must be square with d >= 2, got {w.shape}")
    if not np.all(np.isfinite(w[~np.eye(w.shape[0], dtype=bool)])):
        raise ValueError("weight matrix has non-finite off-diagonal entries")
    if not np.allclose(w, w.T, atol=1e-12, rtol=0.0):
        raise ValueError("weight matrix must be symmetric")
    return w


def prim_max_tree(weights: np.ndarray) -> Tree:
    """Spanning tree maximizing the sum of edge weights.

    Grows from node 1; among frontier edges of maximal weight, the smallest
    (min, max) label pair wins, so the output is deterministic under ties.
    """
    w = _check_weights(weights)
    d = w.shape[0]
    in_tree = [1]
    out = set(range(2, d + 1))
    edges: list[tuple[int, int]] = []
    while out:
        best = None
        for u in in_tree:
            for v in out:
                cand = (w[u - 1, v - 1], (min(u, v), max(u, v)))
                if best is None or cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                    best = cand
        edges.append(best[1])
        a, b = best[1]
        v_new = b if b in out else a
        in_tree.append(v_new)
        out.remove(v_new)
    return Tree(d, tuple(edges))


def tree_weight_sum(tree: Tree, weights: np.ndarray) -> float:
    w = _check_weights(weights)
    if w.shape[0] != tree.node_count:
        raise ValueError("weight matrix dimension does not match the tree")
    return float(sum(w[a - 1, b - 1] for a, b in tree.edges))


def tree_to_json(tree: Tree) -> str:
    return json.dumps({"d": tree.node_count, "edges": [list(e) for e in tree.edges]})


def tree_from_json(text: str) -> Tree:
    obj = json.loads(text)
    return Tree(int(obj["d"]), tuple((int(a), int(b)) for a, b in obj["edges"]))
