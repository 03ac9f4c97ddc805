"""Densities on N and N x N, decidable ideal models and window verdicts.

An ideal is an infinite object, so every verdict here is computed on a
finite window ``[1..m] x [1..n]`` and may come back ``unknown``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

DEFAULT_THRESHOLD = 0.01


class Verdict(str, enum.Enum):
    NEGLIGIBLE = "negligible"
    NOT_NEGLIGIBLE = "not_negligible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class IdealVerdict:
    verdict: Verdict
    evidence: dict = field(default_factory=dict, compare=False)

    @property
    def negligible(self) -> bool:
        return self.verdict is Verdict.NEGLIGIBLE


class IndexSet2D:
    """A subset of N x N, either an explicit finite set or a predicate.

    Predicates take ``(j, k)`` with 1-based indices.  With ``vectorized=True``
    the predicate is called once with integer index arrays.
    """

    def __init__(self, pairs: Iterable[tuple[int, int]] | None = None,
                 predicate: Callable | None = None, vectorized: bool = False,
                 name: str = ""):
        if (pairs is None) == (predicate is None):
            raise ValueError("give exactly one of pairs or predicate")
        self.pairs = frozenset((int(j), int(k)) for j, k in pairs) if pairs is not None else None
        if self.pairs is not None and any(j < 1 or k < 1 for j, k in self.pairs):
            raise ValueError("indices start at 1")
        self.predicate = predicate
        self.vectorized = vectorized
        self.name = name
        self.base: IndexSet2D | None = None

    @property
    def is_explicit(self) -> bool:
        return self.pairs is not None

    def __contains__(self, jk) -> bool:
        j, k = jk
        if self.pairs is not None:
            return (j, k) in self.pairs
        return bool(self.predicate(j, k))

    def trace(self, m: int, n: int) -> np.ndarray:
        """Boolean ``(m, n)`` array; entry ``[j-1, k-1]`` is membership of ``(j, k)``."""
        out = np.zeros((m, n), dtype=bool)
        if self.pairs is not None:
            for j, k in self.pairs:
                if j <= m and k <= n:
                    out[j - 1, k - 1] = True
            return out
        if self.vectorized:
            J, K = np.indices((m, n)) + 1
            res = np.asarray(self.predicate(J, K), dtype=bool)
            return np.broadcast_to(res, (m, n)).copy()
        for j in range(1, m + 1):
            for k in range(1, n + 1):
                out[j - 1, k - 1] = bool(self.predicate(j, k))
        return out

    def count(self, m: int, n: int) -> int:
        return int(self.trace(m, n).sum())

    def complement(self) -> "IndexSet2D":
        if self.base is not None:
            return self.base
        if self.pairs is not None:
            pairs = self.pairs
            out = IndexSet2D(predicate=lambda j, k: (j, k) not in pairs,
                             name=f"not({self.name})")
        elif self.vectorized:
            pred = self.predicate
            out = IndexSet2D(predicate=lambda J, K: ~np.asarray(pred(J, K), dtype=bool),
                             vectorized=True, name=f"not({self.name})")
        else:
            pred = self.predicate
            out = IndexSet2D(predicate=lambda j, k: not pred(j, k), name=f"not({self.name})")
        out.base = self
        return out

    def __repr__(self):
        kind = f"{len(self.pairs)} pairs" if self.pairs is not None else "predicate"
        return f"IndexSet2D({self.name or kind})"


def explicit(pairs) -> IndexSet2D:
    return IndexSet2D(pairs=pairs)


def where(predicate, vectorized: bool = False, name: str = "") -> IndexSet2D:
    return IndexSet2D(predicate=predicate, vectorized=vectorized, name=name)


def from_mask(mask: np.ndarray, name: str = "") -> IndexSet2D:
    """Index set whose membership outside ``mask`` is False."""
    mask = np.asarray(mask, dtype=bool)
    m0, n0 = mask.shape

    def pred(J, K):
        J, K = np.asarray(J), np.asarray(K)
        inside = (J <= m0) & (K <= n0)
        out = np.zeros(np.broadcast(J, K).shape, dtype=bool)
        Jc, Kc = np.broadcast_arrays(J, K)
        out[inside] = mask[Jc[inside] - 1, Kc[inside] - 1]
        return out

    return IndexSet2D(predicate=pred, vectorized=True, name=name)


def all_pairs() -> IndexSet2D:
    return where(lambda J, K: np.ones(np.broadcast(J, K).shape, dtype=bool), True, "all")


def row(i: int) -> IndexSet2D:
    return where(lambda J, K: np.broadcast_to(np.asarray(J) == i, np.broadcast(J, K).shape),
                 True, f"row{i}")


def column(i: int) -> IndexSet2D:
    return where(lambda J, K: np.broadcast_to(np.asarray(K) == i, np.broadcast(J, K).shape),
                 True, f"col{i}")


# -- densities -----------------------------------------------------------------

def natural_density(K, n: int) -> float:
    """``|{k in K : k <= n}| / n`` for a predicate or a set of positive integers."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if callable(K):
        hits = sum(1 for k in range(1, n + 1) if K(k))
    else:
        hits = sum(1 for k in K if 1 <= k <= n)
    return hits / n


def double_density(K: IndexSet2D, m: int, n: int) -> float:
    """``K(m, n) / (m n)``."""
    if m < 1 or n < 1:
        raise ValueError("window must be positive")
    return K.count(m, n) / (m * n)


def min_line_cover(mask: np.ndarray) -> int:
    """Fewest rows plus columns covering every True cell (Konig: max matching)."""
    if not mask.any():
        return 0
    graph = csr_matrix(mask.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int(np.sum(match >= 0))


# -- ideal models ------------------------------------------------------------------

IDEAL_KINDS = ("fin", "density-zero", "row-column", "explicit")


@dataclass(frozen=True)
class IdealModel:
    kind: str
    sets: tuple[IndexSet2D, ...] = ()
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.kind not in IDEAL_KINDS:
            raise ValueError(f"unknown ideal kind {self.kind!r}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    @property
    def strongly_admissible(self) -> bool:
        """Whether every row and column set belongs to the ideal.

        ``fin`` is admissible but contains no infinite row, so it reports False.
        """
        return self.kind in ("density-zero", "row-column")


FIN = IdealModel("fin")
DENSITY_ZERO = IdealModel("density-zero")
ROW_COLUMN = IdealModel("row-column")


def explicit_ideal(sets: Sequence[IndexSet2D]) -> IdealModel:
    return IdealModel("explicit", tuple(sets))


def _row_col_budget(m: int, n: int) -> int:
    return max(1, int(math.floor(math.log2(min(m, n))))) if min(m, n) >= 1 else 1


def _verdict_from_mask(I: IdealModel, K: IndexSet2D | None, mask: np.ndarray,
                       threshold: float | None) -> IdealVerdict:
    m, n = mask.shape
    thr = I.threshold if threshold is None else threshold
    if I.kind == "fin":
        cnt = int(mask.sum())
        if K is not None and K.is_explicit:
            return IdealVerdict(Verdict.NEGLIGIBLE, {"explicit_size": len(K.pairs), "window_count": cnt})
        if cnt == 0:
            return IdealVerdict(Verdict.NEGLIGIBLE, {"window_count": 0})
        # a trace that keeps growing from the half window to the full window
        # is read as infinite
        hm, hn = max(1, m // 2), max(1, n // 2)
        half = int(mask[:hm, :hn].sum())
        ev = {"window_count": cnt, "half_count": half}
        if half > 0 and cnt >= 2 * half:
            return IdealVerdict(Verdict.NOT_NEGLIGIBLE, ev)
        return IdealVerdict(Verdict.UNKNOWN, ev)
    if I.kind == "density-zero":
        hm, hn = max(1, m // 2), max(1, n // 2)
        full = mask.sum() / (m * n)
        half = mask[:hm, :hn].sum() / (hm * hn)
        ev = {"density": float(full), "half_density": float(half), "threshold": thr}
        # the half window only has to confirm the trend, so it may sit on the threshold
        if full < thr and half <= thr:
            return IdealVerdict(Verdict.NEGLIGIBLE, ev)
        if full >= 2 * thr and half >= 2 * thr:
            return IdealVerdict(Verdict.NOT_NEGLIGIBLE, ev)
        return IdealVerdict(Verdict.UNKNOWN, ev)
    if I.kind == "row-column":
        hm, hn = max(1, m // 2), max(1, n // 2)
        cover = min_line_cover(mask)
        half_cover = min_line_cover(mask[:hm, :hn])
        budget, half_budget = _row_col_budget(m, n), _row_col_budget(hm, hn)
        ev = {"cover": cover, "budget": budget, "half_cover": half_cover}
        if cover <= budget:
            return IdealVerdict(Verdict.NEGLIGIBLE, ev)
        if half_cover > half_budget:
            return IdealVerdict(Verdict.NOT_NEGLIGIBLE, ev)
        return IdealVerdict(Verdict.UNKNOWN, ev)
    union = np.zeros_like(mask)
    for S in I.sets:
        union |= S.trace(m, n)
    outside = int((mask & ~union).sum())
    ev = {"outside_union": outside}
    return IdealVerdict(Verdict.NEGLIGIBLE if outside == 0 else Verdict.NOT_NEGLIGIBLE, ev)


def is_negligible(I: IdealModel, K: IndexSet2D, window: tuple[int, int],
                  threshold: float | None = None) -> IdealVerdict:
    """Window verdict on whether ``K`` belongs to the ideal ``I``."""
    m, n = window
    if m < 1 or n < 1:
        raise ValueError("window must be positive")
    return _verdict_from_mask(I, K, K.trace(m, n), threshold)


def is_negligible_mask(I: IdealModel, mask: np.ndarray, threshold: float | None = None) -> IdealVerdict:
    """Same as :func:`is_negligible` for an already-computed window trace."""
    return _verdict_from_mask(I, None, np.asarray(mask, dtype=bool), threshold)


def in_filter(I: IdealModel, K: IndexSet2D, window: tuple[int, int],
              threshold: float | None = None) -> IdealVerdict:
    """Filter membership of ``K``: negligibility of its complement.

    The returned verdict is about the complement; ``NEGLIGIBLE`` means ``K``
    is in the associated filter.
    """
    m, n = window
    if K.base is not None:
        return is_negligible(I, K.base, window, threshold)
    comp = ~K.trace(m, n)
    if I.kind == "fin" and K.is_explicit:
        # complement of a finite set is never finite
        return IdealVerdict(Verdict.NOT_NEGLIGIBLE, {"complement": "cofinite"})
    return _verdict_from_mask(I, None, comp, threshold)


def net_values(a: Callable[[int, int], float], window: tuple[int, int]) -> np.ndarray:
    m, n = window
    if isinstance(a, np.ndarray):
        return np.asarray(a[:m, :n], dtype=float)
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            out[i, j] = a(i + 1, j + 1)
    return out


def ideal_limit_verdict(a, L: float, I: IdealModel, eps: float,
                        window: tuple[int, int], threshold: float | None = None) -> IdealVerdict:
    """Verdict on the exceptional set ``{(m, n) : |a(m, n) - L| >= eps}``.

    ``a`` is a callable on 1-based ``(m, n)`` or a precomputed array.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    vals = net_values(a, window)
    mask = np.abs(vals - L) >= eps
    return _verdict_from_mask(I, None, mask, threshold)


def _window_values(x, m: int, n: int) -> np.ndarray:
    if hasattr(x, "window"):
        return np.asarray(x.window(m, n), dtype=float)
    return net_values(x, (m, n))


def i_liminf_estimate(x, I: IdealModel, window: tuple[int, int],
                      alpha_grid: Sequence[float], threshold: float | None = None) -> float:
    """First grid ``alpha`` whose sublevel set ``{x < alpha}`` is not negligible.

    This brackets the I-limit inferior from above on the grid; ``inf`` when
    no sublevel set on the grid is found non-negligible.
    """
    grid = list(alpha_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("alpha_grid must be sorted ascending")
    vals = _window_values(x, *window)
    for alpha in grid:
        v = _verdict_from_mask(I, None, vals < alpha, threshold)
        if v.verdict is Verdict.NOT_NEGLIGIBLE:
            return float(alpha)
    return math.inf


# -- config descriptors -----------------------------------------------------------

def ideal_from_json(obj: dict, threshold: float | None = None) -> IdealModel:
    kind = obj.get("ideal")
    thr = threshold if threshold is not None else obj.get("threshold", DEFAULT_THRESHOLD)
    if kind not in IDEAL_KINDS:
        raise ValueError(f"unknown ideal kind {kind!r}")
    sets: tuple = ()
    if kind == "explicit":
        sets = tuple(explicit(map(tuple, s)) for s in obj.get("sets", []))
    return IdealModel(kind, sets, float(thr))
