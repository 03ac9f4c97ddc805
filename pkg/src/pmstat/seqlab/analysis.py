"""Subsequences, strong-convergence extraction, cluster points and the dichotomy report."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from ..ideals import IdealModel, IdealVerdict, IndexSet2D, ideal_limit_verdict, is_negligible_mask
from ..pmspace import PMSpace
from .indicators import value_classes
from .sequences import DoubleSequence

TENDS_TOL = 0.02
OSCILLATION_TOL = 0.1


# -- subsequences ----------------------------------------------------------------------

def subsequence_along(x: DoubleSequence, K: IndexSet2D, window: tuple[int, int]) -> DoubleSequence:
    """Re-index ``x`` over ``K`` in dictionary order, as seen inside ``window``.

    Row ``i`` of the result is the ``i``-th row of ``window`` meeting ``K``;
    column ``l`` is the ``l``-th member of ``K`` on that row.  Indices past the
    window's trace raise ``IndexError``.
    """
    if K.is_explicit:
        raise ValueError("K is finite; a subsequence needs an infinite index set")
    m, n = window
    trace = K.trace(m, n)
    rows = np.flatnonzero(trace.any(axis=1))
    if len(rows) == 0:
        raise ValueError("K has an empty trace on the window")
    if rows[-1] < m // 2:
        warnings.warn("K does not look cofinal on this window; the subsequence may be short",
                      RuntimeWarning, stacklevel=2)
    cols = {int(r): np.flatnonzero(trace[r]) for r in rows}

    def rule(i, l):
        if i < 1 or l < 1 or i > len(rows):
            raise IndexError(f"({i}, {l}) is outside the subsequence window")
        r = int(rows[i - 1])
        cs = cols[r]
        if l > len(cs):
            raise IndexError(f"({i}, {l}) is outside the subsequence window")
        return x(r + 1, int(cs[l - 1]) + 1)

    name = f"{x.name}|{K.name}" if K.name else f"{x.name}|K"
    return DoubleSequence(rule, name, points=x.points)


def subsequence_shape(K: IndexSet2D, window: tuple[int, int]) -> tuple[int, int]:
    """Largest rectangle ``(rows, cols)`` on which :func:`subsequence_along` is defined."""
    trace = K.trace(*window)
    per_row = trace.sum(axis=1)
    per_row = per_row[per_row > 0]
    return (len(per_row), int(per_row.min()) if len(per_row) else 0)


# -- extraction -----------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractionResult:
    """Selected indices, one per level, plus the stopping status.

    ``status`` is ``complete`` when every requested level was filled,
    ``exhausted`` when the window ran out of candidate windows, and ``failed``
    when candidate windows existed but none admitted a selection.
    """

    indices: tuple[tuple[int, int], ...]
    status: str
    failed_level: int | None = None
    windows: tuple[tuple[int, int], ...] = ()
    distances: tuple[float, ...] = ()

    @property
    def succeeded(self) -> bool:
        return self.status != "failed"


def eps0_distances_to(space: PMSpace, x: DoubleSequence, p, window: tuple[int, int]) -> np.ndarray:
    """``d_L(F_{x_jk p}, eps0)`` over the window."""
    m, n = window
    vals = x.window(m, n)
    uniq, _, codes = value_classes(vals)
    target = np.empty(len(uniq), dtype=uniq.dtype)
    target[:] = [p] * len(uniq) if uniq.dtype == object else p
    return space.pair_eps0(uniq, target)[codes].reshape(m, n)


def _prefix(mask: np.ndarray) -> np.ndarray:
    cs = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    cs[1:, 1:] = np.cumsum(np.cumsum(mask, axis=0, dtype=np.int64), axis=1)
    return cs


def extract_convergent_subsequence(space: PMSpace, x: DoubleSequence, p, window: tuple[int, int],
                                   levels: int | None = None) -> ExtractionResult:
    """Inductive selection of a strongly convergent subsequence toward ``p``.

    At level ``i`` (threshold ``1/i``) the search scans windows ``(m, n)`` with
    ``m > 4 m_prev`` and ``n > 4 n_prev``, smallest ``max(m, n)`` first and
    ties in dictionary order, and takes the first one whose exceptional density ``|{d >= 1/i}| / (mn)`` is below
    ``1/i`` and whose new block ``(m_prev, m] x (n_prev, n]`` holds an index
    with ``d < 1/i``.  The first such index in dictionary order is selected.
    """
    M, N = window
    d = eps0_distances_to(space, x, p, window)
    picks: list[tuple[int, int]] = []
    wins: list[tuple[int, int]] = []
    dists: list[float] = []
    m_prev = n_prev = 0
    i = 0
    while levels is None or i < levels:
        i += 1
        thr = 1.0 / i
        lo_m, lo_n = 4 * m_prev + 1, 4 * n_prev + 1
        if lo_m > M or lo_n > N:
            return ExtractionResult(tuple(picks), "exhausted", None, tuple(wins), tuple(dists))
        bad = _prefix(d >= thr)
        good = _prefix(d < thr)
        ms = np.arange(lo_m, M + 1)[:, None]
        ns = np.arange(lo_n, N + 1)[None, :]
        stat_ok = bad[ms, ns] * i < ms * ns
        block = good[ms, ns] - good[m_prev, ns] - good[ms, n_prev] + good[m_prev, n_prev]
        ok = stat_ok & (block > 0)
        if not ok.any():
            return ExtractionResult(tuple(picks), "failed", i, tuple(wins), tuple(dists))
        # smallest max(m, n) first, ties broken in dictionary order
        size = np.where(ok, np.maximum(ms, ns), np.iinfo(np.int64).max)
        a, b = np.unravel_index(int(np.argmin(size)), size.shape)
        m, n = int(ms[a, 0]), int(ns[0, b])
        sub = d[m_prev:m, n_prev:n] < thr
        r, c = np.unravel_index(int(np.argmax(sub)), sub.shape)
        j, k = m_prev + int(r) + 1, n_prev + int(c) + 1
        picks.append((j, k))
        wins.append((m, n))
        dists.append(float(d[j - 1, k - 1]))
        m_prev, n_prev = m, n
    return ExtractionResult(tuple(picks), "complete", None, tuple(wins), tuple(dists))


# -- cluster points -------------------------------------------------------------------

def i_stat_cluster_points(x: DoubleSequence, xi_grid: Sequence[float], eps: float, I: IdealModel,
                          window: tuple[int, int],
                          threshold: float | None = None) -> list[tuple[float, IdealVerdict]]:
    """Ideal verdict on ``{(j, k) : |x_jk - xi| < eps}`` for each ``xi``.

    Candidates for cluster points are those whose near-set is ``not_negligible``.
    """
    grid = list(xi_grid)
    if not grid:
        raise ValueError("xi_grid must be nonempty")
    if not eps > 0:
        raise ValueError("eps must be positive")
    vals = np.asarray(x.window(*window), dtype=float)
    return [(float(xi), is_negligible_mask(I, np.abs(vals - xi) < eps, threshold)) for xi in grid]


# -- dichotomy ------------------------------------------------------------------------

@dataclass(frozen=True)
class DichotomyReport:
    windows: tuple[tuple[int, int], ...]
    d_a: tuple[Fraction, ...]
    d_b: tuple[Fraction, ...]
    product: tuple[float, ...]
    oscillation: float
    verdict: str
    ideal_verdicts: dict[str, IdealVerdict] = field(default_factory=dict)
    tail_mean: float = math.nan


def _window_grid(M: int, N: int, points: int) -> list[tuple[int, int]]:
    grid = []
    for i in range(1, points + 1):
        w = (max(1, math.ceil(i * M / points)), max(1, math.ceil(i * N / points)))
        if not grid or w != grid[-1]:
            grid.append(w)
    return grid


def dichotomy_report(x: DoubleSequence, alpha: float, beta: float, I: IdealModel,
                     window: tuple[int, int], points: int = 20,
                     threshold: float | None = None) -> DichotomyReport:
    """Window densities of ``A = {x <= alpha}`` and its complement, plus a verdict.

    The verdict is ``tends-0`` (or ``tends-1``) when the mean of ``D(A)``
    (or ``D(B)``) over the last quarter of the trajectory is below 0.02 and
    the half window agrees, ``oscillates`` when ``D(A)`` spreads by more than
    0.1 over the tail block of windows, and ``inconclusive`` otherwise.
    """
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    M, N = window
    vals = np.asarray(x.window(M, N), dtype=float)
    inside = (vals > alpha) & (vals < beta)
    if inside.any():
        j, k = np.argwhere(inside)[0] + 1
        raise ValueError(f"x({j}, {k}) = {vals[j - 1, k - 1]} lies inside ({alpha}, {beta})")
    cs = _prefix(vals <= alpha)
    grid = _window_grid(M, N, points)
    d_a = tuple(Fraction(int(cs[m, n]), m * n) for m, n in grid)
    d_b = tuple(1 - v for v in d_a)
    product = tuple(float(v * (1 - v)) for v in d_a)

    ms = np.arange(1, M + 1)[:, None]
    ns = np.arange(1, N + 1)[None, :]
    net = cs[1:, 1:] / (ms * ns)
    tail = net[(3 * M) // 4:, (3 * N) // 4:]
    oscillation = float(tail.max() - tail.min())

    q = max(1, len(d_a) // 4)
    tail_mean = float(np.mean([float(v) for v in d_a[-q:]]))
    half = float(net[max(1, M // 2) - 1, max(1, N // 2) - 1])
    if tail_mean < TENDS_TOL and half < TENDS_TOL:
        verdict = "tends-0"
    elif 1 - tail_mean < TENDS_TOL and 1 - half < TENDS_TOL:
        verdict = "tends-1"
    elif oscillation > OSCILLATION_TOL:
        verdict = "oscillates"
    else:
        verdict = "inconclusive"
    ideal = {
        "0": ideal_limit_verdict(net, 0.0, I, TENDS_TOL, window, threshold),
        "1": ideal_limit_verdict(net, 1.0, I, TENDS_TOL, window, threshold),
    }
    return DichotomyReport(tuple(grid), d_a, d_b, product, oscillation, verdict, ideal, tail_mean)
