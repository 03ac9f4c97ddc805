"""Probabilistic metric spaces (S, F, tau) and their strong vicinities."""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from . import ddf as D
from .ddf import DDF

AXIOM_TOL = 1e-9
ETA_HALVINGS = 20


class NoEtaFound(RuntimeError):
    """No eta on the search grid makes U(eta) o U(eta) land inside U(t)."""


class PMSpace:
    """A PM space given by a pure distance rule ``(x, y) -> DDF``.

    Subclasses override :meth:`pair_values` and :meth:`pair_eps0` with
    vectorized formulas; the generic versions go through the pair cache.
    """

    name = "generic"

    def __init__(self, rule: Callable[[Any, Any], DDF], triangle: str = "tau_m"):
        if triangle != "tau_m":
            raise ValueError("only the maximal triangle function tau_m is supported")
        self.rule = rule
        self.triangle = triangle
        self._cache: dict = {}
        self._eps0_cache: dict = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(x, y):
        return frozenset((x, y))

    def distance(self, x, y) -> DDF:
        """``F_xy``, cached per unordered pair."""
        key = self._key(x, y)
        try:
            return self._cache[key]
        except KeyError:
            pass
        F = self.rule(x, y)
        with self._lock:
            # idempotent: the rule is deterministic
            return self._cache.setdefault(key, F)

    def eps0_distance(self, x, y, tol: float = D.DEFAULT_TOL) -> float:
        """``d_L(F_xy, eps0)``, cached per unordered pair."""
        if x == y:
            return 0.0
        key = self._key(x, y)
        got = self._eps0_cache.get(key)
        if got is None:
            got = D.distance_to_eps0(self.distance(x, y), tol)
            with self._lock:
                got = self._eps0_cache.setdefault(key, got)
        return got

    # vectorized surfaces used by the indicator loops

    def pair_values(self, a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
        """``F_ab(t)`` elementwise over broadcast point arrays."""
        a, b = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        out = np.empty(a.shape)
        for idx in np.ndindex(a.shape):
            out[idx] = D.evaluate(self.distance(a[idx], b[idx]), t)
        return out

    def pair_eps0(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        out = np.empty(a.shape)
        for idx in np.ndindex(a.shape):
            out[idx] = self.eps0_distance(a[idx], b[idx])
        return out

    def vicinity_mask(self, a, b, t: float) -> np.ndarray:
        """Elementwise ``(a, b) in U(t)``, i.e. ``F_ab(t) > 1 - t``."""
        return self.pair_values(a, b, t) > 1.0 - t

    def point_array(self, points: Sequence) -> np.ndarray:
        arr = np.empty(len(points), dtype=object)
        arr[:] = list(points)
        return arr


class EquilateralSpace(PMSpace):
    """Every pair of distinct points has the same distance function ``F``."""

    name = "equilateral"

    def __init__(self, F: DDF):
        self.F = F
        super().__init__(lambda x, y: D.EPS0 if x == y else F)
        self._d0 = D.distance_to_eps0(F)

    def pair_values(self, a, b, t):
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        return np.where(a == b, 1.0 if t > 0 else 0.0, D.evaluate(self.F, t))

    def pair_eps0(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        return np.where(a == b, 0.0, self._d0)

    def eps0_distance(self, x, y, tol=D.DEFAULT_TOL):
        return 0.0 if x == y else self._d0


class SimpleSpace(PMSpace):
    """Simple space over the real line: ``F_pq(t) = H(t / |p - q|)``."""

    name = "simple"

    def __init__(self, H: DDF):
        self.H = H
        super().__init__(lambda p, q: D.scale(H, abs(float(p) - float(q))))

    def pair_values(self, a, b, t):
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        with np.errstate(divide="ignore"):
            arg = np.where(d > 0, t / np.where(d > 0, d, 1.0), np.inf)
        if t <= 0:
            return np.zeros(d.shape)
        return D.evaluate(self.H, arg)

    def pair_eps0(self, a, b, tol: float = D.DEFAULT_TOL):
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        flat = d.ravel()
        out = np.zeros(flat.shape)
        pos = flat > 0
        if pos.any():
            dd = flat[pos]
            out[pos] = D._eps0_bisect(lambda h: D.evaluate_right(self.H, h / dd), tol, shape=dd.shape)
        return out.reshape(d.shape)

    def eps0_distance(self, x, y, tol=D.DEFAULT_TOL):
        return float(self.pair_eps0(np.array([x]), np.array([y]), tol)[0])

    def point_array(self, points):
        return np.asarray(points, dtype=float)


def _is_eps0(F: DDF) -> bool:
    return D.evaluate_right(F, 0.0) >= 1.0


def _is_eps_inf(F: DDF) -> bool:
    return D.evaluate(F, 1e300) <= 0.0


def make_equilateral(F: DDF) -> EquilateralSpace:
    if _is_eps0(F) or _is_eps_inf(F):
        raise ValueError("equilateral space needs F distinct from eps0 and eps_inf")
    return EquilateralSpace(F)


def _strictly_increasing(H: DDF) -> bool:
    if H.kind == "exp-simple":
        return True
    if H.kind == "mixture":
        return any(w > 0 and _strictly_increasing(c) for w, c in H.components)
    if H.kind == "table" and H.interp == "linear":
        vs = [0.0] + [v for _, v in H.breakpoints]
        return all(b > a for a, b in zip(vs, vs[1:])) and H.breakpoints[-1][1] < 1.0
    return False


def make_simple(H: DDF) -> SimpleSpace:
    if not _strictly_increasing(H):
        raise ValueError("simple space needs H strictly increasing on (0, inf)")
    return SimpleSpace(H)


def _check_t(t: float):
    if not t > 0:
        raise ValueError("t must be positive")


def in_strong_neighborhood(space: PMSpace, x, y, t: float) -> bool:
    """``y`` lies in the strong t-neighbourhood of ``x``: ``F_xy(t) > 1 - t``."""
    _check_t(t)
    return bool(D.evaluate(space.distance(x, y), t) > 1.0 - t)


def in_vicinity(space: PMSpace, x, y, t: float) -> bool:
    """``(x, y)`` lies in the strong t-vicinity ``U(t)``."""
    _check_t(t)
    return bool(D.evaluate(space.distance(x, y), t) > 1.0 - t)


def find_vicinity_eta(space: PMSpace, t: float, sample_points: Sequence,
                      eta_grid: int = ETA_HALVINGS) -> float:
    """Largest ``eta`` in ``t, t/2, ..., t/2**eta_grid`` with U(eta) o U(eta) in U(t).

    Checked exhaustively over all sampled triples ``(a, c, b)``.  Raises
    :class:`NoEtaFound` when no grid value works.
    """
    _check_t(t)
    if len(sample_points) == 0:
        raise ValueError("sample_points must be nonempty")
    pts = space.point_array(list(dict.fromkeys(sample_points)))
    A, B = pts[:, None], pts[None, :]
    target = space.vicinity_mask(A, B, t)
    eta = t
    for _ in range(eta_grid + 1):
        V = space.vicinity_mask(A, B, eta).astype(np.int64)
        reach = (V @ V) > 0
        if not np.any(reach & ~target):
            return eta
        eta /= 2
    raise NoEtaFound(f"no eta in [t/2**{eta_grid}, t] works for t={t}")


@dataclass
class AxiomReport:
    passed: dict[str, bool]
    worst: dict[str, float]
    witness: dict[str, tuple | None]

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def verify_axioms(space: PMSpace, sample_points: Sequence, grid: int = 512) -> AxiomReport:
    """Scan the four PM-space axioms over sampled pairs and triples.

    Uses the raw distance rule (not the symmetric pair cache).  Axiom 4 is
    checked pointwise on a uniform grid against the discretized tau_M, so a
    pass means no violation was found.
    """
    pts = list(dict.fromkeys(sample_points))
    if len(pts) < 2:
        raise ValueError("need at least two sample points")
    passed = {k: True for k in ("identity", "separation", "symmetry", "triangle")}
    worst = {k: 0.0 for k in passed}
    witness: dict[str, tuple | None] = {k: None for k in passed}

    def note(axiom, mag, wit):
        if mag > AXIOM_TOL:
            passed[axiom] = False
        if mag > worst[axiom]:
            worst[axiom] = mag
            witness[axiom] = wit

    probe = np.concatenate(([1e-12], np.linspace(0, 10, 201)[1:]))
    for x in pts:
        F = space.rule(x, x)
        mag = float(np.max(np.abs(D.evaluate(F, probe) - 1.0)))
        note("identity", mag, (x,))
    funcs = {}
    for x, y in itertools.permutations(pts, 2):
        funcs[(x, y)] = space.rule(x, y)
    for x, y in itertools.combinations(pts, 2):
        d0 = D.distance_to_eps0(funcs[(x, y)])
        note("separation", 1.0 if d0 <= 0 else 0.0, (x, y))
        Fxy, Fyx = funcs[(x, y)], funcs[(y, x)]
        xmax = D._support_end(Fxy) + D._support_end(Fyx)
        xs = np.linspace(0, xmax, grid + 1)
        note("symmetry", float(np.max(np.abs(D.evaluate(Fxy, xs) - D.evaluate(Fyx, xs)))), (x, y))
    for x, z in itertools.combinations(pts, 2):
        Fxz = funcs[(x, z)]
        for y in pts:
            if y == x or y == z:
                continue
            Fxy, Fyz = funcs[(x, y)], funcs[(y, z)]
            # cover the supports of both legs and of F_xz itself
            x_max = D._support_end(Fxy) + D._support_end(Fyz) + D._support_end(Fxz)
            xs = D.tau_grid(Fxy, Fyz, grid, x_max=x_max)
            H = D.tau_m_values(Fxy, Fyz, xs)
            gap = float(np.max(H - D.evaluate(Fxz, xs)))
            note("triangle", max(gap, 0.0), (x, y, z))
    return AxiomReport(passed, worst, witness)


# -- config descriptors --------------------------------------------------------

def space_from_json(obj: dict) -> PMSpace:
    kind = obj.get("space")
    if kind == "equilateral":
        return make_equilateral(D.from_json(obj["F"]))
    if kind == "simple":
        return make_simple(D.from_json(obj["H"]))
    raise ValueError(f"unknown space kind {kind!r}")


def space_to_json(space: PMSpace) -> dict:
    if isinstance(space, EquilateralSpace):
        return {"space": "equilateral", "F": D.to_json(space.F)}
    if isinstance(space, SimpleSpace):
        return {"space": "simple", "H": D.to_json(space.H)}
    raise ValueError("only built-in spaces serialize")
