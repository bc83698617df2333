"""Kendall rank correlation.

Two independent routes produce the same pair counts:

* :func:`count_pairs_bruteforce` classifies every one of the ``n(n-1)/2``
  pairs directly (O(n^2), chunked numpy comparisons);
* :func:`count_pairs_fast` sorts by ``(x, y)`` and counts discordant pairs as
  inversions of the y sequence with a bottom-up merge count (O(n log n)
  levels, each level a vectorised sort/search), plus run-length tie counts.

:func:`tau_matrix` scores a batch of equal-length segments against a batch
of templates at once; it is what the detector uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import AllTied, LengthMismatch, TooShort

Variant = Literal["tau_a", "tau_b"]

P_VALUE_FLOOR = 1e-300

# Elements per chunk of pair-sign comparisons in the brute-force route.
_CHUNK_ELEMENTS = 1 << 21
# Segment rows per cache-sized block in tau_matrix.
_BATCH_ROWS = 256


@dataclass(frozen=True)
class PairCounts:
    n_c: int
    n_d: int
    ties_x: int  # tied in x only
    ties_y: int  # tied in y only
    ties_xy: int  # tied in both
    n: int

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def is_consistent(self) -> bool:
        total = self.n_c + self.n_d + self.ties_x + self.ties_y + self.ties_xy
        return total == self.n_pairs


@dataclass(frozen=True)
class TauResult:
    tau: float
    z: float
    p_value: float
    counts: PairCounts
    variant: str


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"x has {x.size} values, y has {y.size}")
    if x.size < 2:
        raise TooShort("Kendall tau needs at least 2 observations")
    return x, y


def count_pairs_bruteforce(x, y) -> PairCounts:
    """Classify every pair ``i < j`` as concordant, discordant or tied."""
    x, y = _as_pair(x, y)
    n = x.size
    n_c = n_d = t_x = t_y = t_xy = 0
    rows = max(1, _CHUNK_ELEMENTS // n)
    cols = np.arange(n)
    for lo in range(0, n - 1, rows):
        hi = min(lo + rows, n - 1)
        idx = np.arange(lo, hi)
        upper = cols[None, :] > idx[:, None]
        sx = np.sign(x[None, :] - x[idx, None])
        sy = np.sign(y[None, :] - y[idx, None])
        prod = sx * sy
        zx = (sx == 0) & upper
        zy = (sy == 0) & upper
        n_c += int(np.count_nonzero((prod > 0) & upper))
        n_d += int(np.count_nonzero((prod < 0) & upper))
        t_xy += int(np.count_nonzero(zx & zy))
        t_x += int(np.count_nonzero(zx & ~zy))
        t_y += int(np.count_nonzero(zy & ~zx))
    return PairCounts(n_c, n_d, t_x, t_y, t_xy, n)


def _tied_pairs(sorted_values: np.ndarray) -> int:
    """Number of equal-valued pairs in an already sorted 1-D array."""
    if sorted_values.size < 2:
        return 0
    starts = np.flatnonzero(np.r_[True, sorted_values[1:] != sorted_values[:-1]])
    runs = np.diff(np.r_[starts, sorted_values.size])
    return int((runs * (runs - 1) // 2).sum())


def _tied_pairs_2d(a: np.ndarray, b: np.ndarray) -> int:
    """Tied pairs over (a, b) jointly; input sorted lexicographically."""
    if a.size < 2:
        return 0
    change = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
    starts = np.flatnonzero(np.r_[True, change])
    runs = np.diff(np.r_[starts, a.size])
    return int((runs * (runs - 1) // 2).sum())


def _tied_pairs_rows(V: np.ndarray) -> np.ndarray:
    """Tied pairs within each row of `V` (as float64)."""
    srt = np.sort(V, axis=1)
    idx = np.broadcast_to(np.arange(V.shape[1]), V.shape)
    new_run = np.ones(V.shape, dtype=bool)
    new_run[:, 1:] = srt[:, 1:] != srt[:, :-1]
    run_start = np.maximum.accumulate(np.where(new_run, idx, 0), axis=1)
    # element k of a run is tied with the k elements before it
    return (idx - run_start).sum(axis=1).astype(np.float64)


def count_inversions(ranks: np.ndarray) -> int:
    """Count pairs ``i < j`` with ``ranks[i] > ranks[j]`` (strict).

    `ranks` must be non-negative integers below ``len(ranks)``. Bottom-up
    merge counting: at width ``w`` every element of a right half is compared,
    by binary search, against its sorted left half. Blocks are kept apart by
    offsetting keys with ``block_id * n``, so each level is one global sort
    and two global searches.
    """
    r = np.asarray(ranks, dtype=np.int64)
    n = r.size
    if n < 2:
        return 0
    pos = np.arange(n, dtype=np.int64)
    current = r.copy()  # sorted within blocks of the current width
    inversions = 0
    width = 1
    while width < n:
        block = pos // (2 * width)
        in_left = (pos % (2 * width)) < width
        keys = block * n + current
        left_keys = keys[in_left]  # globally sorted: blocks ascend, halves sorted
        right_keys = keys[~in_left]
        right_block = block[~in_left]
        upper = np.searchsorted(left_keys, right_block * n + n, side="left")
        lower = np.searchsorted(left_keys, right_keys, side="right")
        inversions += int((upper - lower).sum())
        current = np.sort(keys) - block * n
        width *= 2
    return inversions


def count_pairs_fast(x, y) -> PairCounts:
    """O(n log n) pair counts via lexicographic sort and inversion counting."""
    x, y = _as_pair(x, y)
    n = x.size
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]
    t_x_all = _tied_pairs(xs)
    t_xy = _tied_pairs_2d(xs, ys)
    t_y_all = _tied_pairs(np.sort(y))
    # dense integer ranks of y; pairs tied in x are already y-ascending, so
    # every strict inversion is a discordant pair
    _, y_rank = np.unique(ys, return_inverse=True)
    n_d = count_inversions(y_rank.ravel())
    n0 = n * (n - 1) // 2
    t_x = t_x_all - t_xy
    t_y = t_y_all - t_xy
    n_c = n0 - n_d - t_x - t_y - t_xy
    return PairCounts(n_c, n_d, t_x, t_y, t_xy, n)


def tau_a(counts: PairCounts) -> float:
    """``2 (n_c - n_d) / (n (n - 1))``."""
    if counts.n < 2:
        raise TooShort("tau needs n >= 2")
    return 2.0 * (counts.n_c - counts.n_d) / (counts.n * (counts.n - 1))


def tau_b(counts: PairCounts) -> float:
    """Tie-corrected tau: ``(n_c - n_d) / sqrt((n0 - t_x)(n0 - t_y))``.

    Raises
    ------
    AllTied
        If every pair is tied in x or every pair is tied in y.
    """
    if counts.n < 2:
        raise TooShort("tau needs n >= 2")
    n0 = counts.n_pairs
    untied_x = n0 - counts.ties_x - counts.ties_xy
    untied_y = n0 - counts.ties_y - counts.ties_xy
    if untied_x == 0 or untied_y == 0:
        raise AllTied("all pairs tied in one variable; tau-b undefined")
    tau = (counts.n_c - counts.n_d) / math.sqrt(float(untied_x) * float(untied_y))
    return min(1.0, max(-1.0, tau))


def tau_signsum(x, y) -> float:
    """``2/(n(n-1)) * sum_{i<j} sgn(x_i - x_j) sgn(y_i - y_j)``.

    Computed straight from the sign products, with no pair classification.
    Equal to :func:`tau_a` on any input.
    """
    x, y = _as_pair(x, y)
    n = x.size
    total = 0
    for i in range(n - 1):
        total += int(np.dot(np.sign(x[i] - x[i + 1:]), np.sign(y[i] - y[i + 1:])))
    return 2.0 * total / (n * (n - 1))


def significance(tau: float, n: int, two_sided: bool = True) -> tuple[float, float]:
    """Normal-approximation statistic for tau and its tail probability.

    ``z = 3 tau sqrt(n(n-1)) / sqrt(2(2n+5))``. The p-value is the two-sided
    standard normal tail ``2 (1 - Phi(|z|))``, or the upper tail
    ``1 - Phi(z)`` when `two_sided` is False. p-values are floored at 1e-300.
    """
    if n < 3:
        raise TooShort(f"significance needs n >= 3, got {n}")
    z = 3.0 * tau * math.sqrt(n * (n - 1)) / math.sqrt(2.0 * (2 * n + 5))
    if two_sided:
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return z, min(1.0, max(P_VALUE_FLOOR, p))


def _result(counts: PairCounts, variant: Variant, two_sided: bool) -> TauResult:
    if variant == "tau_a":
        tau = tau_a(counts)
    elif variant == "tau_b":
        tau = tau_b(counts)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if counts.n >= 3:
        z, p = significance(tau, counts.n, two_sided)
    else:
        z, p = 0.0, 1.0
    return TauResult(tau, z, p, counts, variant)


def tau_fast(x, y, variant: Variant = "tau_b", two_sided: bool = True) -> TauResult:
    """Kendall tau with significance, using the O(n log n) pair counts."""
    return _result(count_pairs_fast(x, y), variant, two_sided)


def tau_bruteforce(x, y, variant: Variant = "tau_b", two_sided: bool = True) -> TauResult:
    """Same as :func:`tau_fast` but from exhaustive pair classification."""
    return _result(count_pairs_bruteforce(x, y), variant, two_sided)


def tau_matrix(X, Y, variant: Variant = "tau_b") -> np.ndarray:
    """Tau of every row of `X` against every row of `Y`.

    `X` is ``(S, L)`` and `Y` is ``(T, L)``; the result is ``(S, T)``. The
    concordance numerator ``n_c - n_d`` of two rows is the dot product of
    their pair-sign vectors. Pairs are visited one lag ``j - i`` at a time,
    so each step is a contiguous slice difference and one small matrix
    product for all segment/template combinations. Entries where tau-b is
    undefined (a row with every pair tied) are NaN.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise LengthMismatch(f"rows of length {X.shape[1]} vs {Y.shape[1]}")
    if variant not in ("tau_a", "tau_b"):
        raise ValueError(f"unknown variant {variant!r}")
    n = X.shape[1]
    if n < 2:
        raise TooShort("Kendall tau needs at least 2 observations")
    n0 = n * (n - 1) // 2
    num = np.zeros((X.shape[0], Y.shape[0]))
    untied_x = n0 - _tied_pairs_rows(X)
    untied_y = n0 - _tied_pairs_rows(Y)
    sy_by_lag = [np.sign(Y[:, lag:] - Y[:, :-lag]) for lag in range(1, n)]
    for lo in range(0, X.shape[0], _BATCH_ROWS):
        block = X[lo:lo + _BATCH_ROWS]
        for lag, sy in enumerate(sy_by_lag, start=1):
            sx = np.sign(block[:, lag:] - block[:, :-lag])
            num[lo:lo + _BATCH_ROWS] += sx @ sy.T
    if variant == "tau_a":
        return num / n0
    denom = np.sqrt(np.outer(untied_x, untied_y))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), np.nan)
    return np.clip(out, -1.0, 1.0)
