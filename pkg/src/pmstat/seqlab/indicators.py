"""Finite-window convergence and pre-Cauchy statistics.

Quadruple statistics count *ordered* quadruples ``(j, k, p, q)`` with
``j, p <= m`` and ``k, q <= n`` (diagonal included) and normalize by
``(m n)**2``.  Exact mode groups window entries by distinct value, so the
work is quadratic in the number of distinct values rather than in ``m n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..ideals import IndexSet2D
from ..pmspace import PMSpace
from .sequences import DoubleSequence

DEFAULT_BUDGET = 10**9
MIN_SAMPLES = 1000
SAMPLE_CHUNK = 1 << 16
_BLOCK_CELLS = 1 << 22


class BudgetExceeded(ValueError):
    def __init__(self, window, quadruples, budget):
        self.window = window
        super().__init__(f"exact mode at window {window} needs {quadruples} quadruples "
                         f"(budget {budget}); use sampled mode")


@dataclass(frozen=True)
class Mode:
    """``exact`` or ``sampled`` with a sample size and seed."""

    kind: str = "exact"
    samples: int = 0
    seed: int | None = None
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("exact", "sampled"):
            raise ValueError(f"mode must be exact or sampled, got {self.kind!r}")
        if self.kind == "sampled":
            if self.samples < MIN_SAMPLES:
                raise ValueError(f"sampled mode needs at least {MIN_SAMPLES} samples")
            if self.seed is None:
                raise ValueError("sampled mode needs a seed")


EXACT = Mode()


def sampled(samples: int, seed: int, workers: int = 1) -> Mode:
    return Mode("sampled", samples, seed, workers=workers)


@dataclass(frozen=True)
class IndicatorRecord:
    statistic: str
    m: int
    n: int
    param: float
    value: float
    mode: str
    samples: int
    seed: int | None
    count: int | None = None
    den: int | None = None

    @property
    def fraction(self) -> Fraction | None:
        if self.count is None or self.den is None:
            return None
        return Fraction(self.count, self.den)

    def as_row(self) -> dict:
        return asdict(self)


# -- value classes ---------------------------------------------------------------------

def value_classes(vals: np.ndarray):
    """Distinct values of a window, their multiplicities and per-cell codes."""
    flat = vals.ravel()
    if flat.dtype != object:
        uniq, codes, counts = np.unique(flat, return_inverse=True, return_counts=True)
        return uniq, counts.astype(np.int64), codes.reshape(-1)
    index: dict = {}
    codes = np.empty(len(flat), dtype=np.int64)
    for i, v in enumerate(flat):
        codes[i] = index.setdefault(v, len(index))
    uniq = np.empty(len(index), dtype=object)
    for v, i in index.items():
        uniq[i] = v
    counts = np.bincount(codes, minlength=len(index)).astype(np.int64)
    return uniq, counts, codes


def _blocks(u: int):
    size = max(1, _BLOCK_CELLS // max(u, 1))
    return [(s, min(u, s + size)) for s in range(0, u, size)]


def _exact_pair_total(uniq, counts, pair_fn, integer: bool, workers: int):
    """``sum_{a,b} c_a c_b f(a, b)`` over distinct values, in a fixed block order."""
    u = len(uniq)

    def block(bounds):
        s, e = bounds
        vals = pair_fn(uniq[s:e, None], uniq[None, :])
        if integer:
            inner = vals.astype(np.int64) @ counts
            return int(counts[s:e] @ inner)
        inner = vals.astype(float) @ counts.astype(float)
        return float(counts[s:e].astype(float) @ inner)

    bounds = _blocks(u)
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, bounds))
    else:
        parts = [block(b) for b in bounds]
    total = 0 if integer else 0.0
    for p in parts:
        total += p
    return total


def _sampled_pairs(vals_flat, m, n, mode: Mode, pair_fn):
    """Per-sample values of ``pair_fn`` for uniformly drawn quadruples.

    Chunk ``c`` draws from ``SeedSequence(seed, spawn_key=(c,))`` so results do
    not depend on how chunks are spread over workers.
    """
    n_chunks = math.ceil(mode.samples / SAMPLE_CHUNK)

    def chunk(c):
        size = min(SAMPLE_CHUNK, mode.samples - c * SAMPLE_CHUNK)
        rng = np.random.default_rng(np.random.SeedSequence(mode.seed, spawn_key=(c,)))
        j, p = rng.integers(0, m, size), rng.integers(0, m, size)
        k, q = rng.integers(0, n, size), rng.integers(0, n, size)
        return pair_fn(vals_flat[j * n + k], vals_flat[p * n + q])

    if mode.workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(mode.workers) as pool:
            parts = list(pool.map(chunk, range(n_chunks)))
    else:
        parts = [chunk(c) for c in range(n_chunks)]
    return np.concatenate(parts)


def _quadruple_statistic(name, vals, window, param, mode: Mode, bad_fn) -> IndicatorRecord:
    m, n = window
    if mode.kind == "exact":
        quads = (m * n) ** 2
        if quads > mode.budget:
            raise BudgetExceeded(window, quads, mode.budget)
        uniq, counts, _ = value_classes(vals)
        bad = _exact_pair_total(uniq, counts, bad_fn, True, mode.workers)
        return IndicatorRecord(name, m, n, param, bad / quads, "exact", 0, None, bad, quads)
    flat = vals.ravel()
    hits = int(np.count_nonzero(_sampled_pairs(flat, m, n, mode, bad_fn)))
    return IndicatorRecord(name, m, n, param, hits / mode.samples, "sampled",
                           mode.samples, mode.seed, hits, mode.samples)


def _check_positive(v, what):
    if not v > 0:
        raise ValueError(f"{what} must be positive")


def _check_window(window):
    m, n = window
    if m < 1 or n < 1:
        raise ValueError("window must be positive")


# -- statistics --------------------------------------------------------------------------

def pre_cauchy_indicator(space: PMSpace, x: DoubleSequence, t: float,
                         window: tuple[int, int], mode: Mode = EXACT) -> IndicatorRecord:
    """Share of ordered quadruples whose pair ``(x_jk, x_pq)`` is outside ``U(t)``."""
    _check_positive(t, "t")
    _check_window(window)
    vals = x.window(*window)
    return _quadruple_statistic("pre_cauchy", vals, window, t, mode,
                                lambda a, b: ~space.vicinity_mask(a, b, t))


def averaged_levy_sum(space: PMSpace, x: DoubleSequence, window: tuple[int, int],
                      mode: Mode = EXACT) -> IndicatorRecord:
    """Mean of ``d_L(F_{x_jk x_pq}, eps0)`` over ordered quadruples."""
    _check_window(window)
    m, n = window
    vals = x.window(m, n)
    if mode.kind == "exact":
        quads = (m * n) ** 2
        if quads > mode.budget:
            raise BudgetExceeded(window, quads, mode.budget)
        uniq, counts, _ = value_classes(vals)
        total = _exact_pair_total(uniq, counts, space.pair_eps0, False, mode.workers)
        return IndicatorRecord("levy_sum", m, n, math.nan, total / quads, "exact", 0, None)
    d = _sampled_pairs(vals.ravel(), m, n, mode, space.pair_eps0)
    return IndicatorRecord("levy_sum", m, n, math.nan, float(d.mean()), "sampled",
                           mode.samples, mode.seed)


def real_pre_cauchy_indicator(x: DoubleSequence, eps: float, window: tuple[int, int],
                              mode: Mode = EXACT) -> IndicatorRecord:
    """Share of ordered quadruples with ``|x_jk - x_pq| >= eps``."""
    _check_positive(eps, "eps")
    _check_window(window)
    vals = np.asarray(x.window(*window), dtype=float)
    return _quadruple_statistic("real_pre_cauchy", vals, window, eps, mode,
                                lambda a, b: np.abs(a - b) >= eps)


def strong_ist_indicator(space: PMSpace, x: DoubleSequence, p, t: float,
                         window: tuple[int, int]) -> IndicatorRecord:
    """Share of window entries outside the strong t-neighbourhood of ``p``."""
    _check_positive(t, "t")
    _check_window(window)
    m, n = window
    vals = x.window(m, n)
    uniq, counts, _ = value_classes(vals)
    target = np.empty(len(uniq), dtype=uniq.dtype)
    target[:] = [p] * len(uniq) if uniq.dtype == object else p
    bad = ~space.vicinity_mask(uniq, target, t)
    cnt = int(counts[bad].sum())
    return IndicatorRecord("strong_ist", m, n, t, cnt / (m * n), "exact", 0, None, cnt, m * n)


def stat_exceptional_density(x: DoubleSequence, xi: float, eps: float,
                             window: tuple[int, int]) -> IndicatorRecord:
    """``(1/mn) |{(j, k) : |x_jk - xi| >= eps}|``."""
    _check_positive(eps, "eps")
    _check_window(window)
    m, n = window
    vals = np.asarray(x.window(m, n), dtype=float)
    cnt = int(np.count_nonzero(np.abs(vals - xi) >= eps))
    return IndicatorRecord("stat_exceptional", m, n, eps, cnt / (m * n), "exact", 0, None, cnt, m * n)


def pringsheim_limit_estimate(x: DoubleSequence, window: tuple[int, int], eps: float) -> float | None:
    """Corner value if every entry with ``j >= m/2, k >= n/2`` is within ``eps`` of it."""
    m, n = window
    if m < 4 or n < 4:
        raise ValueError("window must be at least (4, 4)")
    vals = np.asarray(x.window(m, n), dtype=float)
    L = float(vals[-1, -1])
    tail = vals[math.ceil(m / 2) - 1:, math.ceil(n / 2) - 1:]
    return L if bool(np.all(np.abs(tail - L) < eps)) else None


def istar_pre_cauchy_indicator(space: PMSpace, x: DoubleSequence, t: float, M: IndexSet2D,
                               windows: Sequence[tuple[int, int]],
                               mode: Mode = EXACT) -> list[IndicatorRecord]:
    """The pre-Cauchy statistic reported only at window corners lying in ``M``."""
    kept = [w for w in windows if tuple(w) in M]
    if not kept:
        raise ValueError("M has an empty trace on the supplied windows")
    out = []
    for w in kept:
        r = pre_cauchy_indicator(space, x, t, tuple(w), mode)
        out.append(IndicatorRecord("istar_pre_cauchy", r.m, r.n, r.param, r.value, r.mode,
                                   r.samples, r.seed, r.count, r.den))
    return out


def sampling_sigma(p: float, samples: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / samples)
