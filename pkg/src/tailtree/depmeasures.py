"""Rank-based dependence estimators: Kendall's tau, the empirical upper tail
dependence coefficient, and the empirical stable tail dependence function."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from tailtree._backend import kernels
from tailtree.errors import InputError


def _stable_ranks(column: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties broken by original row index."""
    order = np.argsort(column, kind="stable")
    ranks = np.empty(column.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, column.shape[0] + 1)
    return ranks


@dataclass(frozen=True)
class SampleMatrix:
    """n x d observation matrix plus per-column ranks.

    Ranks are a permutation of 1..n per column; ties resolve by row order so
    that every derived statistic is reproducible.
    """

    values: np.ndarray
    columns: tuple[str, ...]
    ranks: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"values must be 2-dimensional, got shape {v.shape}")
        n, d = v.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values contain non-finite entries")
        if len(self.columns) != d:
            raise ValueError("column name count does not match data width")
        object.__setattr__(self, "values", v)
        ranks = np.column_stack([_stable_ranks(v[:, j]) for j in range(d)])
        object.__setattr__(self, "ranks", ranks)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def from_values(values, columns=None) -> "SampleMatrix":
        values = np.asarray(values, dtype=float)
        if columns is None:
            columns = tuple(f"x{j + 1}" for j in range(values.shape[1]))
        return SampleMatrix(values, tuple(columns))

    @staticmethod
    def from_csv(path) -> "SampleMatrix":
        """Load a sample: first row holds column names, one row per observation.

        Missing or non-numeric cells are rejected with row/column diagnostics.
        """
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError(f"{path}: empty file") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise InputError(
                        f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}"
                    )
                parsed = []
                for col, cell in zip(header, row):
                    cell = cell.strip()
                    if cell == "":
                        raise InputError(f"{path}: line {lineno} column {col!r} is missing")
                    try:
                        x = float(cell)
                    except ValueError:
                        raise InputError(
                            f"{path}: line {lineno} column {col!r} is not numeric: {cell!r}"
                        ) from None
                    if not np.isfinite(x):
                        raise InputError(f"{path}: line {lineno} column {col!r} is not finite")
                    parsed.append(x)
                rows.append(parsed)
        if len(rows) < 2:
            raise InputError(f"{path}: need at least 2 observation rows, got {len(rows)}")
        return SampleMatrix(np.asarray(rows, dtype=float), tuple(header))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.values.tolist())


def kendall_tau_matrix(sample: SampleMatrix) -> np.ndarray:
    """Pairwise tau-a matrix with unit diagonal."""
    return kernels().kendall_tau_matrix(np.ascontiguousarray(sample.values))


def empirical_tdc_matrix(sample: SampleMatrix, k_lambda: int) -> np.ndarray:
    """Fraction of rows that are jointly in both columns' top-``k_lambda`` ranks.

    Entries are clipped to [0, 1]; the diagonal equals 1 by construction.
    """
    n = sample.n
    if not (1 <= k_lambda <= n):
        raise ValueError(f"k_lambda must be in 1..{n}, got {k_lambda}")
    top = sample.ranks >= n - k_lambda + 1
    joint = top.T.astype(np.int64) @ top.astype(np.int64)
    return np.clip(joint / float(k_lambda), 0.0, 1.0)


def empirical_stdf(sample: SampleMatrix, k: int, pair: tuple[int, int], x) -> float:
    """Empirical bivariate stable tail dependence function at x = (xa, xb).

    Columns in ``pair`` are 1-based. Counts rows whose rank in either column
    exceeds n + 1/2 - k * x_coord, scaled by 1/k.
    """
    n = sample.n
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    a, b = pair
    if not (1 <= a <= sample.d and 1 <= b <= sample.d) or a == b:
        raise ValueError(f"pair must be distinct columns in 1..{sample.d}, got {pair}")
    xa, xb = float(x[0]), float(x[1])
    if xa < 0 or xb < 0 or not (np.isfinite(xa) and np.isfinite(xb)):
        raise ValueError(f"evaluation point must be finite and nonnegative, got {x}")
    ra = sample.ranks[:, a - 1]
    rb = sample.ranks[:, b - 1]
    hit = (ra > n + 0.5 - k * xa) | (rb > n + 0.5 - k * xb)
    return float(np.count_nonzero(hit)) / k


def empirical_stdf_grid(
    sample: SampleMatrix, k: int, pair: tuple[int, int], xs: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Empirical stdf on a tensor grid, shape (len(xs), len(ys)).

    Uses the inclusion-exclusion count over the joint top-rank corner, so the
    cost is O(n + k^2 + grid) rather than O(n * grid).
    """
    n = sample.n
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    a, b = pair
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs < 0) or np.any(ys < 0):
        raise ValueError("grid coordinates must be nonnegative")
    xmax = max(xs.max(initial=0.0), ys.max(initial=0.0))
    span = min(n, int(np.ceil(k * xmax)) + 1)
    base = n - span
    ra = sample.ranks[:, a - 1]
    rb = sample.ranks[:, b - 1]

    corner = np.zeros((span + 2, span + 2), dtype=np.int64)
    mask = (ra > base) & (rb > base)
    np.add.at(corner, (ra[mask] - base, rb[mask] - base), 1)
    # suffix[u, v] = #{rows with ra - base >= u and rb - base >= v}
    suffix = corner[::-1, ::-1].cumsum(axis=0).cumsum(axis=1)[::-1, ::-1]

    def count_above(t: np.ndarray) -> np.ndarray:
        # ranks form a permutation of 1..n: #{rank > t} is a closed form
        return n - np.clip(np.floor(t), 0, n)

    tx = n + 0.5 - k * xs
    ty = n + 0.5 - k * ys
    ca = count_above(tx)
    cb = count_above(ty)
    ux = np.clip(np.floor(tx).astype(np.int64) - base + 1, 0, span + 1)
    uy = np.clip(np.floor(ty).astype(np.int64) - base + 1, 0, span + 1)
    both = suffix[ux[:, None], uy[None, :]]
    return (ca[:, None] + cb[None, :] - both) / float(k)
