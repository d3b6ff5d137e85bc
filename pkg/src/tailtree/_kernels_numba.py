"""Numba-compiled hot kernels. Same contracts as ``_kernels_numpy``."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def kendall_tau_matrix(values):
    n, d = values.shape
    tau = np.zeros((d, d))
    for a in range(d):
        for b in range(a + 1, d):
            acc = 0.0
            for i in range(n):
                xa = values[i, a]
                xb = values[i, b]
                for j in range(i + 1, n):
                    dx = xa - values[j, a]
                    dy = xb - values[j, b]
                    if dx != 0.0 and dy != 0.0:
                        acc += 1.0 if (dx > 0.0) == (dy > 0.0) else -1.0
            t = 2.0 * acc / (n * (n - 1.0))
            tau[a, b] = t
            tau[b, a] = t
    for a in range(d):
        tau[a, a] = 1.0
    return tau


@njit(cache=True)
def stdf_mc_values(draws, y, paths, plens):
    n_rep = draws.shape[0]
    d = y.shape[0]
    out = np.zeros(n_rep)
    theta = np.empty(d)
    for r in range(n_rep):
        total = 0.0
        for i in range(d):
            for j in range(i, d):
                if y[j] == 0.0:
                    theta[j] = 0.0
                    continue
                prod = 1.0
                for s in range(plens[i, j]):
                    prod *= draws[r, paths[i, j, s]]
                theta[j] = y[j] * prod
            tail = 0.0
            for j in range(d - 1, i, -1):
                if theta[j] > tail:
                    tail = theta[j]
            head = theta[i] if theta[i] > tail else tail
            total += head - tail
        out[r] = total
    return out


@njit(cache=True)
def hr_sample_rows(n, d, means, chols, seed):
    np.random.seed(seed)
    z = np.zeros((n, d))
    yprop = np.empty(d)
    g = np.empty(d - 1)
    for row in range(n):
        for k in range(d):
            zeta = np.random.exponential()
            while 1.0 / zeta > z[row, k]:
                for t in range(d - 1):
                    g[t] = np.random.standard_normal()
                col = 0
                for v in range(d):
                    if v == k:
                        yprop[v] = 1.0
                        continue
                    acc = means[k, v]
                    for t in range(col + 1):
                        acc += chols[k, col, t] * g[t]
                    yprop[v] = np.exp(acc)
                    col += 1
                ok = True
                for j in range(k):
                    if yprop[j] / zeta >= z[row, j]:
                        ok = False
                        break
                if ok:
                    for v in range(d):
                        c = yprop[v] / zeta
                        if c > z[row, v]:
                            z[row, v] = c
                zeta += np.random.exponential()
    return z
