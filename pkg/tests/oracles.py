"""Independent brute-force oracles used by the tests.

Everything here recomputes quantities from first principles (enumeration,
direct counting, finite differences) without touching the package's fast
paths.
"""

from itertools import product

import numpy as np

from tailtree.graph import Tree


def prufer_to_edges(seq: tuple[int, ...], d: int) -> list[tuple[int, int]]:
    """Decode a Prüfer sequence (1-based labels) into tree edges."""
    degree = [1] * (d + 1)
    for v in seq:
        degree[v] += 1
    edges = []
    seq = list(seq)
    for v in seq:
        for leaf in range(1, d + 1):
            if degree[leaf] == 1:
                edges.append((leaf, v))
                degree[leaf] -= 1
                degree[v] -= 1
                break
    last = [v for v in range(1, d + 1) if degree[v] == 1]
    edges.append((last[0], last[1]))
    return edges


def all_spanning_trees(d: int):
    """Every labelled tree on 1..d (d^(d-2) of them), as Tree objects."""
    if d == 2:
        yield Tree(2, ((1, 2),))
        return
    for seq in product(range(1, d + 1), repeat=d - 2):
        yield Tree(d, tuple(prufer_to_edges(seq, d)))


def brute_max_tree_weight(weights: np.ndarray) -> float:
    d = weights.shape[0]
    best = -np.inf
    for tree in all_spanning_trees(d):
        s = sum(weights[a - 1, b - 1] for a, b in tree.edges)
        best = max(best, s)
    return best


def brute_kendall_tau(x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    acc = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            acc += np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
    return 2.0 * acc / (n * (n - 1))


def brute_empirical_stdf(ranks_a, ranks_b, n: int, k: int, xa: float, xb: float) -> float:
    count = 0
    for ra, rb in zip(ranks_a, ranks_b):
        if ra > n + 0.5 - k * xa or rb > n + 0.5 - k * xb:
            count += 1
    return count / k


def central_difference(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2 * h)


def random_tree(d: int, rng: np.random.Generator) -> Tree:
    if d == 2:
        return Tree(2, ((1, 2),))
    seq = tuple(int(v) for v in rng.integers(1, d + 1, size=d - 2))
    return Tree(d, tuple(prufer_to_edges(seq, d)))
