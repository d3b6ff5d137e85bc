"""Replication harness: generate -> corrupt -> learn -> fit -> score.

Used by the ``simstudy`` CLI subcommand and by the verification suite. Each
replication derives its own seed from (master seed, replication index), so
results do not depend on how replications are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy.special import ndtr

from tailtree.depmeasures import empirical_tdc_matrix, kendall_tau_matrix
from tailtree.errors import EstimationError
from tailtree.estimators import EstimatorConfig, fit_tree_model
from tailtree.families import AsymLogisticSpecial, HuslerReiss
from tailtree.graph import Tree, prim_max_tree, tree_weight_sum
from tailtree.margins import empirical_quantile
from tailtree.simulate import (
    GAMMA1,
    GAMMA2,
    PSI1,
    PSI2,
    SimulationSpec,
    ae_metric,
    oracle_joint_cdf,
    simulate_sample,
    variogram_distance,
)
from tailtree.treemodel import (
    FrechetMargin,
    TreeModel,
    approximation_error_D,
    rare_event_probability,
    variogram_tree,
)


def replication_seed(master_seed: int, rep_index: int) -> int:
    """Scheduling-independent per-replication seed."""
    ss = np.random.SeedSequence((master_seed, rep_index))
    return int(ss.generate_state(1)[0])


@dataclass
class ReplicationResult:
    rep: int
    weight: str
    seed: int
    n_wrong_edges: int | None = None
    tree_exact: bool | None = None
    variogram_dist: float | None = None
    dhat: float | None = None
    ae: float | None = None
    est_tail: float | None = None
    true_tail: float | None = None
    error: str = ""

    def to_row(self) -> dict:
        return {
            "rep": self.rep,
            "weight": self.weight,
            "seed": self.seed,
            "n_wrong_edges": self.n_wrong_edges,
            "tree_exact": self.tree_exact,
            "variogram_dist": self.variogram_dist,
            "dhat": self.dhat,
            "ae": self.ae,
            "est_tail": self.est_tail,
            "true_tail": self.true_tail,
            "error": self.error,
        }


@dataclass(frozen=True)
class StudyConfig:
    spec: SimulationSpec
    reps: int = 50
    weights: tuple[str, ...] = ("tau",)
    estimator: EstimatorConfig = EstimatorConfig()
    k_lambda: int | None = None  # default 0.1 * n
    metrics: tuple[str, ...] = ("tree", "dhat")
    true_tree: Tree | None = None
    true_variogram: np.ndarray | None = None
    rare_quantile: float = 0.999
    rare_coords: tuple[int, ...] = (1, 2, 3)
    oracle_tol: float = 1e-5
    n_mc: int = 100_000


def _wrong_edges(found: Tree, truth: Tree) -> int:
    return len(set(truth.edges) - set(found.edges))


def run_replication(config: StudyConfig, rep_index: int) -> list[ReplicationResult]:
    seed = replication_seed(config.spec.seed, rep_index)
    spec = replace(config.spec, seed=seed)
    sample = simulate_sample(spec)
    k_lambda = config.k_lambda or max(1, round(0.1 * spec.n))
    out = []
    for weight in config.weights:
        res = ReplicationResult(rep=rep_index, weight=weight, seed=seed)
        try:
            if weight == "tau":
                wmat = kendall_tau_matrix(sample)
            elif weight == "lambda":
                wmat = empirical_tdc_matrix(sample, k_lambda)
            else:
                raise ValueError(f"unknown weight {weight!r}")
            tree = prim_max_tree(wmat)
            if config.true_tree is not None:
                res.n_wrong_edges = _wrong_edges(tree, config.true_tree)
                res.tree_exact = res.n_wrong_edges == 0
            needs_fit = any(m in config.metrics for m in ("vario", "dhat", "ae"))
            if needs_fit:
                model, _ = fit_tree_model(sample, tree, config.estimator)
                rng = np.random.default_rng(seed + 1)
                if "vario" in config.metrics and config.true_variogram is not None:
                    res.variogram_dist = variogram_distance(
                        variogram_tree(model), config.true_variogram
                    )
                if "dhat" in config.metrics:
                    lam_hat = empirical_tdc_matrix(sample, k_lambda)
                    res.dhat = approximation_error_D(
                        model, lam_hat, n_mc=config.n_mc, rng=rng
                    )
                if "ae" in config.metrics:
                    u = np.full(spec.d, np.inf)
                    for c in config.rare_coords:
                        u[c - 1] = empirical_quantile(
                            sample.values[:, c - 1], config.rare_quantile
                        )
                    margins = [FrechetMargin(1.0)] * spec.d
                    est, _ = rare_event_probability(
                        model, margins, u, n_mc=config.n_mc, rng=rng
                    )
                    true = 1.0 - oracle_joint_cdf(spec, u, tol=config.oracle_tol)
                    res.est_tail, res.true_tail = est, true
                    res.ae = ae_metric(est, true)
        except (EstimationError, ValueError) as exc:
            res.error = str(exc)
        out.append(res)
    return out


def _run_replication_star(args) -> list[ReplicationResult]:
    return run_replication(*args)


def run_study(config: StudyConfig, workers: int | None = None) -> list[ReplicationResult]:
    """All replications, ordered by index regardless of scheduling."""
    if workers is None:
        workers = int(os.environ.get("TAILTREE_THREADS", "1"))
    jobs = [(config, r) for r in range(config.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_replication_star, jobs))
    else:
        chunks = [run_replication(*j) for j in jobs]
    return [res for chunk in chunks for res in chunk]


# ---------------------------------------------------------------------------
# Analytic (S, D) table for the built-in 4-node example models


def _chain(labels) -> Tree:
    a, b, c, d = labels
    return Tree(4, ((a, b), (b, c), (c, d)))


def _star(labels) -> Tree:
    a, b, c, d = labels
    return Tree(4, ((b, a), (a, c), (a, d)))


TABLE_TREES = tuple(
    [("chain", lab, _chain(lab)) for lab in (
        (1, 2, 3, 4), (1, 2, 4, 3), (1, 3, 2, 4), (1, 3, 4, 2), (1, 4, 2, 3),
        (1, 4, 3, 2), (2, 1, 3, 4), (2, 1, 4, 3), (2, 3, 1, 4), (2, 4, 1, 3),
        (3, 2, 1, 4), (3, 1, 2, 4),
    )]
    + [("star", lab, _star(lab)) for lab in (
        (1, 2, 3, 4), (2, 3, 4, 1), (3, 4, 1, 2), (4, 1, 2, 3),
    )]
)

TABLE_MODELS = (
    ("hr1", "hr", GAMMA1),
    ("hr2", "hr", GAMMA2),
    ("alog1", "alog", PSI1),
    ("alog2", "alog", PSI2),
)


def pairwise_tdc_matrix(kind: str, params) -> np.ndarray:
    """True pairwise tail dependence coefficients of a built-in generator."""
    if kind == "hr":
        g = np.asarray(params, dtype=float)
        lam = 2.0 * (1.0 - ndtr(np.sqrt(np.maximum(g, 0.0)) / 2.0))
        np.fill_diagonal(lam, 1.0)
        return lam
    psi = np.asarray(params, dtype=float)
    lam = np.minimum(psi[:, None], psi[None, :])
    np.fill_diagonal(lam, 1.0)
    return lam


def tree_margin_model(kind: str, params, tree: Tree) -> TreeModel:
    """Tree model whose edge margins equal the generator's bivariate margins."""
    fams = {}
    for a, b in tree.edges:
        if kind == "hr":
            fams[(a, b)] = HuslerReiss(float(params[a - 1, b - 1]))
        else:
            fams[(a, b)] = AsymLogisticSpecial(float(params[a - 1]), float(params[b - 1]))
    return TreeModel.build(tree, fams)


def reference_tree_table() -> list[dict]:
    """S (edge-weight sum under true tdc) and D (tdc distance) for every
    4-node chain and star under the four bundled example models."""
    rows = []
    for shape, labels, tree in TABLE_TREES:
        row = {"structure": shape, "labels": labels}
        for name, kind, params in TABLE_MODELS:
            lam_true = pairwise_tdc_matrix(kind, params)
            model = tree_margin_model(kind, params, tree)
            s_val = tree_weight_sum(tree, lam_true)
            d_val = approximation_error_D(model, lam_true)
            row[f"S_{name}"] = s_val
            row[f"D_{name}"] = d_val
        rows.append(row)
    return rows


def empirical_union_fraction(values: np.ndarray, u: np.ndarray) -> float:
    """Fraction of rows exceeding any finite threshold coordinate."""
    finite = np.isfinite(u)
    if not finite.any():
        return 0.0
    hits = (values[:, finite] > u[finite][None, :]).any(axis=1)
    return float(hits.mean())


def nonadjacent_pairs(tree: Tree):
    return [
        (a, b)
        for a, b in combinations(range(1, tree.node_count + 1), 2)
        if not tree.has_edge(a, b)
    ]
