"""Pure-numpy implementations of the hot kernels.

Reference semantics for the numba versions in ``_kernels_numba``; also the
fallback when numba is disabled or unavailable. See ``_backend``.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 20_000


def kendall_tau_matrix(values: np.ndarray) -> np.ndarray:
    """Pairwise tau over columns: (2/(n(n-1))) sum_{i<j} sgn(dx)*sgn(dy).

    Ties contribute zero through sgn. Diagonal is set to 1.
    """
    n, d = values.shape
    acc = np.zeros((d, d))
    block = max(1, 8_000_000 // (n * d))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        sg = np.sign(values[lo:hi, None, :] - values[None, :, :])
        acc += np.einsum("ijv,ijw->vw", sg, sg)
    tau = acc / (n * (n - 1))
    np.fill_diagonal(tau, 1.0)
    return tau


def stdf_mc_values(
    draws: np.ndarray,
    y: np.ndarray,
    paths: np.ndarray,
    plens: np.ndarray,
) -> np.ndarray:
    """Per-replicate telescoping sums for the tree dependence function.

    ``draws`` has one column per directed edge law; ``paths[i, j]`` lists the
    column indices multiplied along the walk i -> j (``plens[i, j]`` of them).
    Node order inside the sum is the row order 0..d-1.
    """
    n_rep = draws.shape[0]
    d = y.shape[0]
    out = np.zeros(n_rep)
    for lo in range(0, n_rep, _CHUNK):
        hi = min(n_rep, lo + _CHUNK)
        w = draws[lo:hi]
        scaled = np.empty((hi - lo, d, d))
        for i in range(d):
            for j in range(d):
                if y[j] == 0.0:
                    scaled[:, i, j] = 0.0
                    continue
                m = plens[i, j]
                prod = np.ones(hi - lo) if m == 0 else w[:, paths[i, j, :m]].prod(axis=1)
                scaled[:, i, j] = y[j] * prod
        total = np.zeros(hi - lo)
        for i in range(d):
            tail = np.zeros(hi - lo)
            for j in range(d - 1, i, -1):
                np.maximum(tail, scaled[:, i, j], out=tail)
            head = np.maximum(tail, scaled[:, i, i])
            total += head - tail
        out[lo:hi] = total
    return out


def hr_sample_rows(
    n: int,
    d: int,
    means: np.ndarray,
    chols: np.ndarray,
    seed: int,
) -> np.ndarray:
    """Exact max-stable rows via per-anchor extremal functions.

    ``means[k]`` and ``chols[k]`` parameterize the log-Gaussian spectral
    vector anchored at component k (entry k itself is pinned to 1). Rows are
    produced by the record-breaking composition over anchors; the whole batch
    advances anchor by anchor with masked vectorized proposal rounds.
    """
    rng = np.random.default_rng(seed)
    z = np.zeros((n, d))
    others = [np.array([v for v in range(d) if v != k]) for k in range(d)]
    for k in range(d):
        zeta = rng.exponential(size=n)
        active = (1.0 / zeta) > z[:, k]
        while np.any(active):
            idx = np.nonzero(active)[0]
            g = rng.standard_normal((idx.size, d - 1))
            logy = means[k, others[k]][None, :] + g @ chols[k].T
            yprop = np.empty((idx.size, d))
            yprop[:, others[k]] = np.exp(logy)
            yprop[:, k] = 1.0
            contrib = yprop / zeta[idx, None]
            if k == 0:
                accept = np.ones(idx.size, dtype=bool)
            else:
                accept = np.all(contrib[:, :k] < z[idx, :k], axis=1)
            if np.any(accept):
                rows = idx[accept]
                z[rows] = np.maximum(z[rows], contrib[accept])
            zeta[idx] += rng.exponential(size=idx.size)
            active[idx] = (1.0 / zeta[idx]) > z[idx, k]
    return z
