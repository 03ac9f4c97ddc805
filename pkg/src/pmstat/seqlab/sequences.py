"""Double sequences as pure rules, plus the built-in catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np


@dataclass(frozen=True)
class DoubleSequence:
    """A total map ``(j, k) -> value`` on 1-based indices.

    ``vectorized`` rules accept integer index arrays and return an array.
    ``points`` marks values that are opaque PM-space points rather than reals.
    """

    rule: Callable[[Any, Any], Any]
    name: str = ""
    vectorized: bool = False
    points: bool = False

    def __call__(self, j: int, k: int):
        if self.vectorized:
            v = self.rule(np.asarray(j), np.asarray(k))
            return v.item() if isinstance(v, np.ndarray) else v
        return self.rule(j, k)

    def window(self, m: int, n: int) -> np.ndarray:
        """Values on ``[1..m] x [1..n]`` as an ``(m, n)`` array."""
        if m < 1 or n < 1:
            raise ValueError("window must be positive")
        if self.vectorized:
            J, K = np.indices((m, n)) + 1
            out = np.asarray(self.rule(J, K))
            if out.shape != (m, n):
                out = np.broadcast_to(out, (m, n)).copy()
            return out if not self.points else out.astype(object)
        out = np.empty((m, n), dtype=object if self.points else float)
        for j in range(m):
            for k in range(n):
                out[j, k] = self.rule(j + 1, k + 1)
        return out


# -- harmonic blocks ---------------------------------------------------------------

def factorial_block(j):
    """Smallest ``m`` with ``m! >= j``, i.e. the block holding index ``j``."""
    j = np.asarray(j)
    facts = np.cumprod(np.arange(1, 21, dtype=np.int64))
    return np.searchsorted(facts, j, side="left") + 1


def _harmonic(m):
    H = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, 21))))
    return H[m]


def harmonic_block() -> DoubleSequence:
    """``x_jk = H_m + H_n`` where ``(m-1)! < j <= m!`` and ``(n-1)! < k <= n!``."""
    return DoubleSequence(lambda J, K: _harmonic(factorial_block(J)) + _harmonic(factorial_block(K)),
                          "harmonic-block", vectorized=True)


# -- equilateral counterexample ------------------------------------------------------

def squares_index(v):
    """Index ``m`` with ``v = m**2``, or 0 when ``v`` is not a perfect square."""
    v = np.asarray(v, dtype=np.int64)
    r = np.floor(np.sqrt(v.astype(float))).astype(np.int64)
    r = np.where((r + 1) ** 2 <= v, r + 1, r)
    r = np.where(r ** 2 > v, r - 1, r)
    return np.where(r ** 2 == v, r, 0)


def note31(p: Any = "p", q: Any = "q", power: int = 2) -> DoubleSequence:
    """Equilateral counterexample.

    ``A = {(t_m, t_n)}`` with ``t_m = m**power`` (power 2 or 1), ``B`` is the
    diagonal ``{(m, m)}``; the entry at ``(t_m, t_n)`` is ``p`` when
    ``(m, n)`` is in ``B`` and ``q`` otherwise, and every entry off ``A`` is ``p``.
    """
    if power == 2:
        inv = squares_index
    elif power == 1:
        inv = lambda v: np.asarray(v, dtype=np.int64)
    else:
        raise ValueError("power must be 1 or 2")

    def rule(J, K):
        mj, mk = inv(J), inv(K)
        on_a = (mj > 0) & (mk > 0)
        is_q = on_a & (mj != mk)
        out = np.empty(np.broadcast(J, K).shape, dtype=object)
        out[...] = p
        out[is_q] = q
        return out

    return DoubleSequence(rule, "note31", vectorized=True, points=True)


def note31_a_set(power: int = 2):
    """The index set ``A`` of :func:`note31`."""
    from ..ideals import where

    inv = squares_index if power == 2 else (lambda v: np.asarray(v, dtype=np.int64))
    return where(lambda J, K: (inv(J) > 0) & (inv(K) > 0), vectorized=True, name="A")


# -- synthetic families --------------------------------------------------------------

def constant(value: float = 0.0, points: bool = False) -> DoubleSequence:
    def rule(J, K):
        out = np.empty(np.broadcast(J, K).shape, dtype=object if points else float)
        out[...] = value
        return out
    return DoubleSequence(rule, "constant", vectorized=True, points=points)


def row_parity(a: Any = "a", b: Any = "b", points: bool = True) -> DoubleSequence:
    """``a`` on even rows, ``b`` on odd rows."""
    def rule(J, K):
        even = np.broadcast_to(np.asarray(J) % 2 == 0, np.broadcast(J, K).shape)
        out = np.empty(even.shape, dtype=object if points else float)
        out[...] = b
        out[even] = a
        return out
    return DoubleSequence(rule, "row-parity", vectorized=True, points=points)


def checker() -> DoubleSequence:
    """0 where ``j + k`` is even, 1 elsewhere."""
    return DoubleSequence(lambda J, K: ((J + K) % 2).astype(float), "checker", vectorized=True)


def j_mod_2() -> DoubleSequence:
    return DoubleSequence(lambda J, K: np.broadcast_to(J % 2, np.broadcast(J, K).shape).astype(float),
                          "j-mod-2", vectorized=True)


def diagonal() -> DoubleSequence:
    """1 on the diagonal, 0 elsewhere."""
    return DoubleSequence(lambda J, K: (J == K).astype(float), "diagonal", vectorized=True)


def reciprocal_sum() -> DoubleSequence:
    return DoubleSequence(lambda J, K: 1.0 / J + 1.0 / K, "reciprocal-sum", vectorized=True)


def perturbed_constant(base: float = 1.0, amplitude: float = 1.0) -> DoubleSequence:
    """``base + amplitude / (j + k)``."""
    return DoubleSequence(lambda J, K: base + amplitude / (J + K), "perturbed-constant",
                          vectorized=True)


def sparse_zero() -> DoubleSequence:
    """0 when both indices are perfect squares, 1 elsewhere (zeros have density 0)."""
    return DoubleSequence(lambda J, K: np.where((squares_index(J) > 0) & (squares_index(K) > 0), 0.0, 1.0),
                          "sparse-zero", vectorized=True)


_CATALOG: dict[str, Callable[..., DoubleSequence]] = {
    "harmonic-block": harmonic_block,
    "note31": note31,
    "constant": constant,
    "row-parity": row_parity,
    "checker": checker,
    "j-mod-2": j_mod_2,
    "diagonal": diagonal,
    "reciprocal-sum": reciprocal_sum,
    "perturbed-constant": perturbed_constant,
    "sparse-zero": sparse_zero,
}


def builtin_sequences() -> dict[str, Callable[..., DoubleSequence]]:
    return dict(_CATALOG)


def get_sequence(name: str, **params) -> DoubleSequence:
    try:
        ctor = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown sequence {name!r}") from None
    return ctor(**params)
