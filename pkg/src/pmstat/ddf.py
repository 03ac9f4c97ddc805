"""Distance distribution functions on [0, inf] and the Levy metric.

A :class:`DDF` is an immutable value.  Four kinds are supported:

* ``unit-step``  -- 0 on [0, p], 1 on (p, inf]
* ``exp-simple`` -- t -> 1 - exp(-t / c)
* ``table``      -- sorted breakpoints with step or linear interpolation
* ``mixture``    -- convex combination of other DDFs

Evaluation is left-continuous on (0, inf).  For step tables a breakpoint
``(x_i, v_i)`` means the function takes the value ``v_i`` just *after* ``x_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

KINDS = ("unit-step", "exp-simple", "table", "mixture")

DEFAULT_TOL = 1e-9
MAX_BISECT = 64


@dataclass(frozen=True)
class DDF:
    kind: str
    param: float | None = None
    breakpoints: tuple[tuple[float, float], ...] = ()
    interp: str = "step"
    components: tuple[tuple[float, "DDF"], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown DDF kind {self.kind!r}")
        if self.kind == "unit-step":
            if self.param is None or not self.param >= 0:
                raise ValueError("unit step location must be >= 0")
        elif self.kind == "exp-simple":
            if self.param is None or not (0 < self.param < math.inf):
                raise ValueError("exp-simple scale must be positive and finite")
        elif self.kind == "table":
            _check_table(self.breakpoints, self.interp)
        else:
            if not self.components:
                raise ValueError("mixture needs at least one component")
            w = [c[0] for c in self.components]
            if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
                raise ValueError("mixture weights must be nonnegative and sum to 1")

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        if self.kind in ("unit-step", "exp-simple"):
            return f"DDF({self.kind}, {self.param!r})"
        if self.kind == "table":
            return f"DDF(table/{self.interp}, {len(self.breakpoints)} pts)"
        return f"DDF(mixture, {len(self.components)} comps)"


def _check_table(bps, interp):
    if interp not in ("step", "linear"):
        raise ValueError(f"interp must be 'step' or 'linear', got {interp!r}")
    if not bps:
        raise ValueError("table needs at least one breakpoint")
    xs = [b[0] for b in bps]
    vs = [b[1] for b in bps]
    if any(not (0 <= x < math.inf) for x in xs):
        raise ValueError("breakpoint abscissae must be finite and >= 0")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("breakpoints must be strictly increasing in x")
    if any(not (0 <= v <= 1) for v in vs):
        raise ValueError("breakpoint values must lie in [0, 1]")
    if any(b < a for a, b in zip(vs, vs[1:])):
        raise ValueError("breakpoint values must be nondecreasing")


# -- constructors -----------------------------------------------------------

def unit_step(p: float) -> DDF:
    """The unit step at ``p`` (``p`` may be ``math.inf``)."""
    if p < 0:
        raise ValueError("unit step location must be >= 0 (restriction to Delta+)")
    return DDF("unit-step", param=float(p))


def exp_simple(c: float) -> DDF:
    return DDF("exp-simple", param=float(c))


def table(points: Iterable[Sequence[float]], interp: str = "step") -> DDF:
    bps = tuple((float(x), float(v)) for x, v in points)
    return DDF("table", breakpoints=bps, interp=interp)


def mixture(parts: Iterable[tuple[float, DDF]]) -> DDF:
    comps = tuple((float(w), f) for w, f in parts)
    total = sum(w for w, _ in comps)
    if total <= 0:
        raise ValueError("mixture weights must have positive sum")
    comps = tuple((w / total, f) for w, f in comps)
    return DDF("mixture", components=comps)


EPS0 = unit_step(0.0)
EPS_INF = unit_step(math.inf)


def scale(F: DDF, d: float) -> DDF:
    """Return ``t -> F(t / d)``, with ``d == 0`` giving the unit step at 0."""
    if d < 0:
        raise ValueError("scale factor must be >= 0")
    if d == 0:
        return EPS0
    if d == 1:
        return F
    if F.kind == "unit-step":
        return unit_step(F.param * d)
    if F.kind == "exp-simple":
        return exp_simple(F.param * d)
    if F.kind == "table":
        return table([(x * d, v) for x, v in F.breakpoints], F.interp)
    return mixture((w, scale(c, d)) for w, c in F.components)


# -- evaluation -------------------------------------------------------------

def _eval(F: DDF, x: np.ndarray, right: bool) -> np.ndarray:
    # x is a float array; returns values for finite x > 0 handled per kind,
    # caller fixes x <= 0 and x == inf.
    if F.kind == "unit-step":
        if right:
            return (x >= F.param).astype(float)
        return (x > F.param).astype(float)
    if F.kind == "exp-simple":
        return -np.expm1(-x / F.param)
    if F.kind == "table":
        xs = np.array([b[0] for b in F.breakpoints])
        vs = np.array([b[1] for b in F.breakpoints])
        if F.interp == "step":
            side = "right" if right else "left"
            idx = np.searchsorted(xs, x, side=side)
            padded = np.concatenate(([0.0], vs))
            return padded[idx]
        if xs[0] > 0:
            xs = np.concatenate(([0.0], xs))
            vs = np.concatenate(([0.0], vs))
        return np.interp(x, xs, vs)
    out = np.zeros_like(x)
    for w, comp in F.components:
        out += w * _eval(comp, x, right)
    return out


def _apply(F: DDF, x, right: bool):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros(arr.shape)
    inf = np.isposinf(arr)
    pos = (arr > 0) & ~inf
    if right:
        # right limit at 0 is the value just after 0
        pos = (arr >= 0) & ~inf
    if pos.any():
        out[pos] = _eval(F, arr[pos], right)
    out[inf] = 1.0
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


def evaluate(F: DDF, x):
    """Left-continuous value of ``F`` at ``x`` (scalar or array).

    ``F(x) = 0`` for ``x <= 0`` and ``F(inf) = 1``.
    """
    return _apply(F, x, right=False)


def evaluate_right(F: DDF, x):
    """Right limit ``F(x+)``."""
    return _apply(F, x, right=True)


def jump_points(F: DDF) -> list[float]:
    """Finite abscissae where ``F`` may fail to be continuous or smooth."""
    if F.kind == "unit-step":
        return [F.param] if math.isfinite(F.param) else []
    if F.kind == "exp-simple":
        return []
    if F.kind == "table":
        return [x for x, _ in F.breakpoints]
    pts = set()
    for _, comp in F.components:
        pts.update(jump_points(comp))
    return sorted(pts)


def discontinuities(F: DDF) -> list[float]:
    """Abscissae of genuine jumps (excluding linear-table kinks)."""
    if F.kind == "table" and F.interp == "linear":
        x0, v0 = F.breakpoints[0]
        return [0.0] if x0 == 0 and v0 > 0 else []
    if F.kind == "mixture":
        pts = set()
        for _, comp in F.components:
            pts.update(discontinuities(comp))
        return sorted(pts)
    return jump_points(F)


def quantile(F: DDF, u):
    """Generalized inverse ``inf{x >= 0 : F(x+) >= u}`` for ``u`` in (0, 1].

    Returns ``inf`` where ``F`` never reaches ``u`` on finite abscissae.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if F.kind == "unit-step":
        return np.full(u.shape, F.param)
    if F.kind == "exp-simple":
        with np.errstate(divide="ignore"):
            return -F.param * np.log1p(-u)
    if F.kind == "table":
        xs = np.array([b[0] for b in F.breakpoints])
        vs = np.array([b[1] for b in F.breakpoints])
        if F.interp == "step":
            idx = np.searchsorted(vs, u, side="left")
            out = np.full(u.shape, math.inf)
            ok = idx < len(xs)
            out[ok] = xs[idx[ok]]
            return out
        if xs[0] > 0:
            xs = np.concatenate(([0.0], xs))
            vs = np.concatenate(([0.0], vs))
        out = np.full(u.shape, math.inf)
        for i, ui in enumerate(u):
            k = int(np.searchsorted(vs, ui, side="left"))
            if k >= len(xs):
                continue
            if k == 0 or vs[k] == vs[k - 1]:
                out[i] = xs[k]
            else:
                out[i] = xs[k - 1] + (ui - vs[k - 1]) * (xs[k] - xs[k - 1]) / (vs[k] - vs[k - 1])
        return out
    # mixture: bisection, bracketed by the largest component quantile
    hi = np.zeros(u.shape)
    for _, comp in F.components:
        hi = np.maximum(hi, quantile(comp, u))
    out = np.full(u.shape, math.inf)
    fin = np.isfinite(hi)
    lo = np.zeros(u.shape)
    h = np.where(fin, hi, 0.0)
    for _ in range(60):
        mid = 0.5 * (lo + h)
        ok = _eval(F, mid, True) >= u
        h = np.where(ok, mid, h)
        lo = np.where(ok, lo, mid)
    out[fin] = h[fin]
    # generalized inverse may still be reachable when hi is infinite
    for i in np.nonzero(~fin)[0]:
        top = 1.0
        while top < 1e15 and evaluate_right(F, top) < u[i]:
            top *= 2
        if evaluate_right(F, top) >= u[i]:
            a, b = 0.0, top
            for _ in range(80):
                m = 0.5 * (a + b)
                if evaluate_right(F, m) >= u[i]:
                    b = m
                else:
                    a = m
            out[i] = b
    return out


def equal_on(F: DDF, G: DDF, xs, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(evaluate(F, xs) - evaluate(G, xs)) <= tol))


# -- Levy metric -------------------------------------------------------------

_QGRID = np.linspace(0.0, 1.0, 65)[1:-1]
# interval budget per feasibility test; only reached when the two functions
# are within ~1e-5 of each other, where the search stops without a witness
_MAX_INTERVALS = 1 << 16
_TAIL_LEVELS = 1.0 - 2.0 ** -np.arange(1, 48)


def _anchors(F: DDF):
    q = quantile(F, np.concatenate((_QGRID, _TAIL_LEVELS)))
    grid, tail = q[: len(_QGRID)], q[len(_QGRID):]
    return np.asarray(jump_points(F), dtype=float), grid[np.isfinite(grid)], tail


def _tail_quantile(tail: np.ndarray, h: float) -> float:
    # smallest tabulated level >= 1 - h gives an upper bound on quantile(1 - h)
    k = int(np.searchsorted(_TAIL_LEVELS, 1.0 - h, side="left"))
    return float(tail[k]) if k < len(tail) else math.inf


def _sup_exceeds(A: DDF, B: DDF, h: float, anchors_a=None, anchors_b=None) -> bool:
    """True iff sup over x in (0, 1/h) of A(x) - B(x + h) exceeds h."""
    if anchors_a is None:
        anchors_a = _anchors(A)
    if anchors_b is None:
        anchors_b = _anchors(B)
    X = 1.0 / h
    qB = _tail_quantile(anchors_b[2], h)
    # beyond qB - h every x has B(x + h) >= 1 - h, so nothing to check
    end = min(X, qB - h) if math.isfinite(qB) else X
    if end <= 0:
        return False
    include_end = end < X
    cand = np.concatenate(([0.0, end], anchors_a[0], anchors_b[0] - h,
                           anchors_a[1], anchors_b[1] - h))
    pts = np.unique(np.clip(cand, 0.0, end))
    if len(pts) < 2:
        return False
    a = pts[:-1]
    b = pts[1:]
    is_last = np.zeros(len(a), dtype=bool)
    is_last[-1] = not include_end
    for _ in range(200):
        if len(a) == 0 or len(a) > _MAX_INTERVALS:
            return False
        # attained values: right limit at a, and value at b when b is inside
        lo = evaluate_right(A, a) - evaluate_right(B, a + h)
        at_b = evaluate(A, b) - evaluate(B, b + h)
        lo = np.where(is_last, lo, np.maximum(lo, at_b))
        if np.any(lo > h):
            return True
        up = evaluate(A, b) - evaluate_right(B, a + h)
        undecided = up > h
        tiny = (b - a) <= 1e-14 * np.maximum(1.0, b)
        undecided &= ~tiny
        if not undecided.any():
            return False
        a, b, is_last = a[undecided], b[undecided], is_last[undecided]
        mid = 0.5 * (a + b)
        a = np.concatenate((a, mid))
        b_new = np.concatenate((mid, b))
        is_last = np.concatenate((np.zeros(len(mid), dtype=bool), is_last))
        b = b_new
    return False


def levy_feasible(F: DDF, G: DDF, h: float, _anchors_fg=None) -> bool:
    """Whether ``h`` satisfies both Levy sandwich inequalities on (-1/h, 1/h)."""
    if h >= 1:
        return True
    if h <= 0:
        return False
    af, ag = _anchors_fg if _anchors_fg is not None else (_anchors(F), _anchors(G))
    return not (_sup_exceeds(G, F, h, ag, af) or _sup_exceeds(F, G, h, af, ag))


def levy_distance(F: DDF, G: DDF, tol: float = DEFAULT_TOL) -> float:
    """Levy distance between two DDFs, to within ``tol`` (returned from above)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if F == G:
        return 0.0
    anchors = (_anchors(F), _anchors(G))
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECT):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if levy_feasible(F, G, mid, anchors):
            hi = mid
        else:
            lo = mid
    return hi


def _eps0_bisect(right_value, tol: float, shape=None):
    # inf{h : F(h+) >= 1 - h} for a vectorized right-limit evaluator
    lo = np.zeros(shape) if shape is not None else 0.0
    hi = np.ones(shape) if shape is not None else 1.0
    at0 = right_value(lo) >= 1.0
    n_iter = min(MAX_BISECT, max(1, math.ceil(math.log2(1.0 / tol)) + 1))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        ok = right_value(mid) >= 1.0 - mid
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.where(at0, 0.0, hi)


def distance_to_eps0(F: DDF, tol: float = DEFAULT_TOL) -> float:
    """Levy distance from ``F`` to the unit step at 0.

    Uses ``d_L(F, eps0) = inf{h : F(x) >= 1 - h for all x > h}``, which by
    monotonicity reduces to a one-dimensional bisection on ``F(h+) + h >= 1``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return float(_eps0_bisect(lambda h: evaluate_right(F, h), tol))


# -- weak convergence ---------------------------------------------------------

@dataclass(frozen=True)
class WeakConvergenceVerdict:
    converges: bool
    max_discrepancy: float
    probe_points: tuple[float, ...]
    levy_to_target: float = 0.0


def probe_points(F: DDF, count: int) -> np.ndarray:
    """``count`` continuity points of ``F``, spread over the gaps between jumps."""
    if count < 1:
        raise ValueError("probe_count must be positive")
    jumps = sorted(set(discontinuities(F)))
    right = float(quantile(F, 1 - 1e-6)[0])
    last = max(jumps) if jumps else 0.0
    end = max(right, last) + 1.0 if math.isfinite(right) else last + 1.0
    edges = [0.0] + [j for j in jumps if j > 0] + [end]
    edges = sorted(set(edges))
    gaps = list(zip(edges, edges[1:]))
    per = [count // len(gaps)] * len(gaps)
    for i in range(count - sum(per)):
        per[i] += 1
    pts = []
    for (a, b), k in zip(gaps, per):
        pts.extend(a + (b - a) * (i + 1) / (k + 1) for i in range(k))
    return np.asarray(sorted(pts))


def weakly_converges(sequence: Sequence[DDF], F: DDF, probe_count: int = 16,
                     tol: float = 1e-2) -> WeakConvergenceVerdict:
    if len(sequence) == 0:
        raise ValueError("empty sequence")
    if not tol > 0:
        raise ValueError("tol must be positive")
    probes = probe_points(F, probe_count)
    tail = sequence[-1]
    disc = float(np.max(np.abs(evaluate(tail, probes) - evaluate(F, probes))))
    d = levy_distance(tail, F, min(tol / 100, 1e-6))
    return WeakConvergenceVerdict(d < tol and disc < tol, disc, tuple(probes.tolist()), d)


# -- triangle function tau_M ------------------------------------------------------

def _support_end(F: DDF, eps: float = 1e-6) -> float:
    q = float(quantile(F, 1 - eps)[0])
    if math.isfinite(q):
        return q
    finite = jump_points(F)
    return (max(finite) if finite else 0.0) + 1.0


def sup_min_grid(Fr: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``H[i] = max_k min(Fr[k], G[i - k])`` for monotone inputs.

    ``Fr`` nondecreasing, ``G`` nondecreasing; uses the crossing point of the
    increasing and decreasing sequences, found by vectorized binary search.
    """
    n = len(G)
    i = np.arange(n)
    lo = np.zeros(n, dtype=np.int64)       # search k in [0, i]
    hi = i.copy() + 1                       # first k with Fr[k] >= G[i-k], or i+1
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) // 2
        midc = np.minimum(mid, i)
        cond = Fr[midc] >= G[i - midc]
        hi = np.where(active & cond, mid, hi)
        lo = np.where(active & ~cond, mid + 1, lo)
    k = lo
    best = np.zeros(n)
    has = k <= i
    kc = np.minimum(k, i)
    best = np.where(has, G[i - kc], 0.0)
    prev = k - 1
    okp = prev >= 0
    pc = np.maximum(prev, 0)
    best = np.maximum(best, np.where(okp, Fr[np.minimum(pc, i)], 0.0))
    return best


def tau_m_values(F: DDF, G: DDF, xs: np.ndarray) -> np.ndarray:
    """Sup-min convolution of ``F`` and ``G`` on a uniform grid ``xs`` starting at 0.

    Each candidate split uses the right limit of one factor and the value of
    the other, which is a lower bound of the true supremum and is exact for
    the unit-step identity.  Both orders are taken so the result is symmetric.
    """
    xs = np.asarray(xs, dtype=float)
    h1 = sup_min_grid(evaluate_right(F, xs), evaluate(G, xs))
    h2 = sup_min_grid(evaluate_right(G, xs), evaluate(F, xs))
    out = np.maximum(h1, h2)
    out[xs <= 0] = 0.0
    return out


def tau_grid(F: DDF, G: DDF, grid_resolution: int = 1024, x_max: float | None = None) -> np.ndarray:
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    if x_max is None:
        x_max = _support_end(F) + _support_end(G)
    x_max = max(x_max, 1e-12)
    return np.linspace(0.0, x_max, grid_resolution + 1)


def tau_m(F: DDF, G: DDF, grid_resolution: int = 1024, x_max: float | None = None) -> DDF:
    """Discretized maximal triangle function as a linear-interpolated table."""
    xs = tau_grid(F, G, grid_resolution, x_max)
    vals = np.maximum.accumulate(tau_m_values(F, G, xs))
    return table(zip(xs.tolist(), vals.tolist()), interp="linear")


# -- JSON --------------------------------------------------------------------------

def to_json(F: DDF) -> dict:
    if F.kind in ("unit-step", "exp-simple"):
        p = F.param
        return {"kind": F.kind, "param": "inf" if p == math.inf else p}
    if F.kind == "table":
        return {"kind": "table", "breakpoints": [list(b) for b in F.breakpoints],
                "interp": F.interp}
    return {"kind": "mixture", "components": [[w, to_json(c)] for w, c in F.components]}


def from_json(obj: dict) -> DDF:
    kind = obj.get("kind")
    if kind in ("unit-step", "exp-simple"):
        p = obj.get("param")
        p = math.inf if p in ("inf", "Infinity") else float(p)
        return unit_step(p) if kind == "unit-step" else exp_simple(p)
    if kind == "table":
        return table(obj["breakpoints"], obj.get("interp", "step"))
    if kind == "mixture":
        return mixture((w, from_json(c)) for w, c in obj["components"])
    raise ValueError(f"unknown DDF kind {kind!r}")
