"""The tree-structured extreme value model.

A :class:`TreeModel` couples a spanning tree with one bivariate family per
edge (oriented parent -> child from root 1). The model's dependence function
is evaluated either in closed form (all-two-atom edges consistent with a
single node weight vector) or by Monte Carlo over independent multiplicative
edge increments; pairwise tail dependence coefficients, the variogram
completion for Hüsler-Reiss edges, the goodness-of-fit distance against a
reference coefficient matrix, and joint exceedance probabilities all build on
those two evaluators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from tailtree._backend import kernels
from tailtree.families import (
    AsymLogisticSpecial,
    EdgeFamily,
    HuslerReiss,
    family_from_dict,
    family_to_dict,
    increment_law,
    sample_increment,
)
from tailtree.graph import Tree, path_between, tree_from_json, tree_to_json

DEFAULT_N_MC = 100_000


@dataclass(frozen=True)
class TreeModel:
    """Tree plus one edge family per oriented edge.

    ``oriented_edges[e] = (parent, child)`` under the rooting at node 1 and
    ``families[e]`` is stated in that direction (``psi_p`` at the parent).
    """

    tree: Tree
    oriented_edges: tuple[tuple[int, int], ...]
    families: tuple[EdgeFamily, ...]

    def __post_init__(self):
        if len(self.oriented_edges) != len(self.families):
            raise ValueError("one family per edge required")
        seen = {tuple(sorted(e)) for e in self.oriented_edges}
        expected = {tuple(sorted(e)) for e in self.tree.edges}
        if seen != expected:
            raise ValueError("oriented edges do not match the tree's edge set")
        for p, c in self.oriented_edges:
            if self.tree.parent_of(c) != p:
                raise ValueError(f"edge ({p},{c}) is not oriented parent -> child")

    @staticmethod
    def build(tree: Tree, edge_families: Mapping[tuple[int, int], EdgeFamily]) -> "TreeModel":
        """Assemble a model from families keyed by edges in either orientation.

        A two-atom family given against the parent -> child direction is
        flipped so its endpoint weights stay attached to the right nodes.
        """
        remaining = dict(edge_families)
        oriented = []
        fams = []
        for a, b in tree.edges:
            parent, child = (a, b) if tree.parent_of(b) == a else (b, a)
            if (parent, child) in remaining:
                fam = remaining.pop((parent, child))
            elif (child, parent) in remaining:
                fam = remaining.pop((child, parent))
                if isinstance(fam, AsymLogisticSpecial):
                    fam = fam.reversed()
            else:
                raise ValueError(f"no family supplied for edge ({a},{b})")
            oriented.append((parent, child))
            fams.append(fam)
        if remaining:
            raise ValueError(f"families supplied for non-edges: {sorted(remaining)}")
        return TreeModel(tree, tuple(oriented), tuple(fams))

    @property
    def d(self) -> int:
        return self.tree.node_count

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {tuple(sorted(e)): i for i, e in enumerate(self.oriented_edges)}

    def directed_family(self, u: int, v: int) -> EdgeFamily:
        """Family for the step u -> v, restated in travel direction."""
        idx = self.edge_index().get((min(u, v), max(u, v)))
        if idx is None:
            raise ValueError(f"({u},{v}) is not a tree edge")
        fam = self.families[idx]
        if self.oriented_edges[idx] == (u, v):
            return fam
        return fam.reversed() if isinstance(fam, AsymLogisticSpecial) else fam

    def path_families(self, a: int, b: int) -> list[EdgeFamily]:
        return [self.directed_family(u, v) for u, v in path_between(self.tree, a, b)]


def model_to_json(model: TreeModel) -> str:
    obj = {
        "tree": json.loads(tree_to_json(model.tree)),
        "edges": [
            {"a": p, "b": c, **family_to_dict(fam)}
            for (p, c), fam in zip(model.oriented_edges, model.families)
        ],
    }
    return json.dumps(obj, indent=2)


def model_from_json(text: str) -> TreeModel:
    obj = json.loads(text)
    tree = tree_from_json(json.dumps(obj["tree"]))
    fams = {}
    for entry in obj["edges"]:
        fams[(int(entry["a"]), int(entry["b"]))] = family_from_dict(entry)
    return TreeModel.build(tree, fams)


# ---------------------------------------------------------------------------
# Monte Carlo machinery


def _directed_columns(model: TreeModel):
    """Map every directed step (u, v) to a column in the draw matrix.

    Columns 0..m-1 hold the stored parent -> child laws, columns m..2m-1 the
    reversed ones. The two directions of one edge are sampled independently;
    each term of the telescoping sum touches one direction only, so any
    coupling would leave the estimator's mean unchanged.
    """
    m = len(model.oriented_edges)
    index = model.edge_index()
    cols = {}
    for i, (p, c) in enumerate(model.oriented_edges):
        cols[(p, c)] = i
        cols[(c, p)] = m + i
    laws = [increment_law(f) for f in model.families]
    laws += [
        increment_law(f.reversed() if isinstance(f, AsymLogisticSpecial) else f)
        for f in model.families
    ]
    return cols, laws, index


def draw_increments(model: TreeModel, n_mc: int, rng: np.random.Generator) -> np.ndarray:
    """Sample the (n_mc, 2m) matrix of directed-edge increments.

    Reuse the returned matrix across evaluation points for common random
    numbers.
    """
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    _, laws, _ = _directed_columns(model)
    out = np.empty((n_mc, len(laws)))
    for j, law in enumerate(laws):
        out[:, j] = sample_increment(law, rng, size=n_mc)
    return out


def _path_tensor(model: TreeModel, order: Sequence[int]):
    d = model.d
    cols, _, _ = _directed_columns(model)
    maxlen = max(1, d - 1)
    paths = np.zeros((d, d, maxlen), dtype=np.int64)
    plens = np.zeros((d, d), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            steps = path_between(model.tree, order[i], order[j])
            plens[i, j] = len(steps)
            for s, (u, v) in enumerate(steps):
                paths[i, j, s] = cols[(u, v)]
    return paths, plens


def stdf_tree_mc(
    model: TreeModel,
    y: Sequence[float],
    n_mc: int = DEFAULT_N_MC,
    rng: np.random.Generator | None = None,
    permutation: Sequence[int] | None = None,
    draws: np.ndarray | None = None,
) -> tuple[float, float]:
    """Monte Carlo value and standard error of the model's stdf at ``y``.

    Uses the telescoping-sum representation, valid whenever every increment
    has mean at most one; node order defaults to the identity but any
    permutation of 1..d may be supplied. Pass a matrix from
    :func:`draw_increments` to share randomness across evaluation points.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d,):
        raise ValueError(f"y must have length d={model.d}")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("y must be finite and nonnegative")
    order = list(range(1, model.d + 1)) if permutation is None else [int(v) for v in permutation]
    if sorted(order) != list(range(1, model.d + 1)):
        raise ValueError("permutation must rearrange 1..d")
    if draws is None:
        if rng is None:
            rng = np.random.default_rng(0)
        draws = draw_increments(model, n_mc, rng)
    yv = np.ascontiguousarray(y[np.asarray(order) - 1])
    paths, plens = _path_tensor(model, order)
    vals = kernels().stdf_mc_values(np.ascontiguousarray(draws), yv, paths, plens)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return est, se


# ---------------------------------------------------------------------------
# Closed forms


def _consistent_psi(model: TreeModel) -> np.ndarray:
    """Node weight vector implied by all-two-atom edges; error on conflict."""
    psi = np.full(model.d + 1, np.nan)
    for (p, c), fam in zip(model.oriented_edges, model.families):
        if not isinstance(fam, AsymLogisticSpecial):
            raise ValueError("closed form requires two-atom families on every edge")
        for node, val in ((p, fam.psi_p), (c, fam.psi_s)):
            if np.isnan(psi[node]):
                psi[node] = val
            elif abs(psi[node] - val) > 1e-12:
                raise ValueError(
                    f"edge weights are inconsistent at node {node}: {psi[node]} vs {val}"
                )
    return psi[1:]


def stdf_tree_closed_alog(model: TreeModel, y: Sequence[float]) -> float:
    """Exact stdf for an all-two-atom model driven by one node weight vector.

    Inclusion-exclusion over subsets of suffix node sets; exponential in d,
    guarded at d <= 20.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (model.d,):
        raise ValueError(f"y must have length d={model.d}")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("y must be finite and nonnegative")
    d = model.d
    if d > 20:
        raise ValueError("subset enumeration is limited to d <= 20")
    psi = _consistent_psi(model)

    path_edges = {}
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i != j:
                path_edges[(i, j)] = frozenset(path_between(model.tree, i, j))

    def expected_max(i: int, nodes: list[int]) -> float:
        total = 0.0
        n_s = len(nodes)
        for mask in range(1, 1 << n_s):
            subset = [nodes[t] for t in range(n_s) if mask >> t & 1]
            union: set[tuple[int, int]] = set()
            for j in subset:
                if j != i:
                    union |= path_edges[(i, j)]
            prob = 1.0
            for u, _ in union:
                prob *= psi[u - 1]
            if prob == 0.0:
                continue
            vals = [y[j - 1] if j == i else y[j - 1] * psi[j - 1] / psi[i - 1] for j in subset]
            term = prob * min(vals)
            total += term if len(subset) % 2 == 1 else -term
        return total

    out = 0.0
    for i in range(1, d + 1):
        out += expected_max(i, list(range(i, d + 1)))
        if i < d:
            out -= expected_max(i, list(range(i + 1, d + 1)))
    return out


def variogram_tree(model: TreeModel) -> np.ndarray:
    """Path-sum completion of the edge parameters of an all-HR model."""
    for fam in model.families:
        if not isinstance(fam, HuslerReiss):
            raise ValueError("variogram completion requires Hüsler-Reiss families on every edge")
    d = model.d
    idx = model.edge_index()
    gam = np.zeros((d, d))
    for a in range(1, d + 1):
        for b in range(a + 1, d + 1):
            total = sum(
                model.families[idx[(min(u, v), max(u, v))]].gamma
                for u, v in path_between(model.tree, a, b)
            )
            gam[a - 1, b - 1] = gam[b - 1, a - 1] = total
    return gam


def _hr_tdc(gamma: float) -> float:
    return float(2.0 * (1.0 - ndtr(math.sqrt(gamma) / 2.0)))


def tdc_tree_mc(
    model: TreeModel,
    a: int,
    b: int,
    n_mc: int = DEFAULT_N_MC,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Monte Carlo E[min(1, product of path increments)] with standard error."""
    if a == b:
        raise ValueError("nodes must differ")
    if rng is None:
        rng = np.random.default_rng(0)
    prod = np.ones(n_mc)
    for fam in model.path_families(a, b):
        prod *= sample_increment(increment_law(fam), rng, size=n_mc)
    vals = np.minimum(1.0, prod)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc))


def tdc_tree(
    model: TreeModel,
    a: int,
    b: int,
    n_mc: int = DEFAULT_N_MC,
    rng: np.random.Generator | None = None,
) -> float:
    """Pairwise tail dependence coefficient of the model.

    Closed forms cover paths whose edges share one family kind (HR path sums,
    two-atom endpoint products); mixed paths fall back to Monte Carlo with a
    deterministic default stream.
    """
    if a == b:
        raise ValueError("nodes must differ")
    fams = model.path_families(a, b)
    if all(isinstance(f, HuslerReiss) for f in fams):
        return _hr_tdc(sum(f.gamma for f in fams))
    if all(isinstance(f, AsymLogisticSpecial) for f in fams):
        prod_p = float(np.prod([f.psi_p for f in fams]))
        prod_s = float(np.prod([f.psi_s for f in fams]))
        return min(prod_p, prod_s)
    return tdc_tree_mc(model, a, b, n_mc=n_mc, rng=rng)[0]


def approximation_error_D(
    model: TreeModel,
    lambda_ref: np.ndarray,
    n_mc: int = DEFAULT_N_MC,
    rng: np.random.Generator | None = None,
) -> float:
    """Sum over non-adjacent unordered pairs of |model tdc - reference tdc|."""
    ref = np.asarray(lambda_ref, dtype=float)
    d = model.d
    if ref.shape != (d, d):
        raise ValueError(f"reference matrix must be {d}x{d}, got {ref.shape}")
    total = 0.0
    for a, b in combinations(range(1, d + 1), 2):
        if model.tree.has_edge(a, b):
            continue
        total += abs(tdc_tree(model, a, b, n_mc=n_mc, rng=rng) - ref[a - 1, b - 1])
    return total


# ---------------------------------------------------------------------------
# Margins and joint exceedance probabilities


@dataclass(frozen=True)
class FrechetMargin:
    """Analytic Fréchet margin, cdf(x) = exp(-x^(-alpha)) for x > 0."""

    alpha: float = 1.0

    def cdf(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        return float(math.exp(-(x ** -self.alpha)))


MarginSet = Sequence  # any sequence of objects exposing .cdf(x) -> float


def rare_event_probability(
    model: TreeModel,
    margins: MarginSet,
    u: Sequence[float],
    n_mc: int = DEFAULT_N_MC,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """P(any component exceeds its threshold) under the fitted model.

    Thresholds may be ``inf`` (coordinate drops out). Closed-form evaluation
    is used when the model admits it, otherwise Monte Carlo with the standard
    error propagated through p = 1 - exp(-l).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (model.d,):
        raise ValueError(f"thresholds must have length d={model.d}")
    y = np.zeros(model.d)
    for v in range(model.d):
        if np.isinf(u[v]):
            continue
        f = float(margins[v].cdf(u[v]))
        if not (0.0 <= f <= 1.0):
            raise ValueError(f"margin {v + 1} returned cdf {f} outside [0, 1]")
        if f == 0.0:
            raise ValueError(
                f"margin {v + 1} has cdf 0 at threshold {u[v]}; the exceedance "
                "probability is degenerate there"
            )
        y[v] = -math.log(f)
    active = int(np.count_nonzero(y > 0))
    if active == 0:
        return 0.0, 0.0
    if active == 1:
        return float(-math.expm1(-y.sum())), 0.0
    if all(isinstance(f, AsymLogisticSpecial) for f in model.families):
        try:
            ell = stdf_tree_closed_alog(model, y)
            return float(-math.expm1(-ell)), 0.0
        except ValueError:
            pass
    ell, se = stdf_tree_mc(model, y, n_mc=n_mc, rng=rng)
    return float(-math.expm1(-ell)), float(math.exp(-ell) * se)
