import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmstat import ddf as D

import oracles


def build(parts):
    return D.mixture((w, D.unit_step(v) if k == "step" else D.exp_simple(v)) for w, (k, v) in parts)


component = st.tuples(
    st.floats(0.05, 1.0),
    st.one_of(st.tuples(st.just("step"), st.floats(0.0, 3.0)),
              st.tuples(st.just("exp"), st.floats(0.05, 1.0))),
)
mixtures = st.lists(component, min_size=1, max_size=4).map(
    lambda ps: [(w / sum(p[0] for p in ps), c) for w, c in ps])


# -- evaluation -----------------------------------------------------------------------

def test_eval_unit_step_at_zero():
    assert D.evaluate(D.unit_step(0), 1.0) == 1.0


def test_eval_exp_simple_one():
    assert D.evaluate(D.exp_simple(1), 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)


def test_eval_left_continuous_at_jump():
    assert D.evaluate(D.unit_step(0.3), 0.3) == 0.0


def test_eval_endpoints():
    for F in (D.exp_simple(2), D.unit_step(1), D.table([(1, 0.5), (2, 1.0)])):
        assert D.evaluate(F, 0.0) == 0.0
        assert D.evaluate(F, math.inf) == 1.0


def test_unit_step_jump_location():
    F = D.unit_step(2)
    assert D.evaluate(F, 2.0) == 0.0
    assert D.evaluate(F, 2.0001) == 1.0


def test_unit_step_rejects_negative():
    with pytest.raises(ValueError):
        D.unit_step(-0.1)


def test_unit_step_at_infinity_is_zero_on_finite_axis():
    assert D.evaluate(D.EPS_INF, 1e300) == 0.0
    assert D.evaluate(D.EPS_INF, math.inf) == 1.0


def test_step_table_takes_value_just_after_breakpoint():
    F = D.table([(1.0, 0.25), (2.0, 1.0)])
    assert D.evaluate(F, 1.0) == 0.0
    assert D.evaluate(F, 1.5) == 0.25
    assert D.evaluate(F, 2.0) == 0.25
    assert D.evaluate(F, 2.5) == 1.0


def test_linear_table_interpolates():
    F = D.table([(1.0, 0.5), (3.0, 1.0)], interp="linear")
    assert D.evaluate(F, 0.5) == pytest.approx(0.25)
    assert D.evaluate(F, 2.0) == pytest.approx(0.75)


@pytest.mark.parametrize("bad", [
    [(2.0, 0.5), (1.0, 1.0)],
    [(1.0, 0.7), (2.0, 0.5)],
    [(1.0, 1.5)],
    [(-1.0, 0.5)],
])
def test_table_rejects_invalid(bad):
    with pytest.raises(ValueError):
        D.table(bad)


@given(mixtures, st.lists(st.floats(0, 10), min_size=2, max_size=20))
def test_evaluation_is_nondecreasing(parts, xs):
    F = build(parts)
    xs = np.sort(np.asarray(xs))
    v = D.evaluate(F, xs)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.all((v >= 0) & (v <= 1))


@given(mixtures, st.floats(0, 5))
def test_evaluation_matches_independent_evaluator(parts, x):
    assert D.evaluate(build(parts), x) == pytest.approx(float(oracles.eval_components(parts, x)), abs=1e-12)


# -- Levy metric ----------------------------------------------------------------------

def test_levy_identity():
    F = D.exp_simple(1)
    assert D.levy_distance(F, F, 1e-9) == pytest.approx(0, abs=1e-9)
    assert D.levy_distance(D.EPS0, D.EPS0) == 0.0


def test_levy_exp_one_to_eps0_matches_fixed_point():
    h_star = oracles.exp_fixed_point(1.0)
    assert h_star == pytest.approx(0.567143, abs=1e-6)
    assert D.levy_distance(D.exp_simple(1), D.EPS0, 1e-6) == pytest.approx(h_star, abs=1e-4)


def test_levy_step_to_eps0_matches_grid_scan():
    ref = oracles.levy_grid([(1.0, ("step", 0.3))], [(1.0, ("step", 0.0))])
    assert ref == pytest.approx(0.3, abs=2e-4)
    assert D.levy_distance(D.unit_step(0.3), D.EPS0, 1e-6) == pytest.approx(ref, abs=2e-4)


def test_levy_far_steps_cap_at_one():
    assert D.levy_distance(D.unit_step(5), D.EPS0) == 1.0
    assert D.levy_distance(D.unit_step(1), D.EPS0) == 1.0


def test_levy_rejects_nonpositive_tol():
    with pytest.raises(ValueError):
        D.levy_distance(D.EPS0, D.exp_simple(1), 0.0)
    with pytest.raises(ValueError):
        D.distance_to_eps0(D.exp_simple(1), -1.0)


def test_levy_is_symmetric_on_sample():
    F, G = D.exp_simple(1), D.exp_simple(2)
    assert D.levy_distance(F, G) == D.levy_distance(G, F)


@settings(max_examples=25, deadline=None)
@given(mixtures, mixtures)
def test_levy_matches_grid_scan(pf, pg):
    ref = oracles.levy_grid(pf, pg)
    got = D.levy_distance(build(pf), build(pg), 1e-6)
    assert got == pytest.approx(ref, abs=2e-4)


def test_levy_zero_implies_agreement_at_probes():
    F = D.mixture([(0.5, D.exp_simple(1)), (0.5, D.unit_step(1))])
    G = D.mixture([(0.5, D.unit_step(1)), (0.5, D.exp_simple(1))])
    assert D.levy_distance(F, G, 1e-9) <= 1e-9
    xs = D.probe_points(F, 32)
    assert np.allclose(D.evaluate(F, xs), D.evaluate(G, xs), atol=1e-9)


# -- distance to eps0 -----------------------------------------------------------------

def test_distance_to_eps0_of_eps0_is_zero():
    assert D.distance_to_eps0(D.EPS0, 1e-9) == 0.0


def test_distance_to_eps0_exp_one():
    assert D.distance_to_eps0(D.exp_simple(1), 1e-6) == pytest.approx(oracles.exp_fixed_point(1.0), abs=1e-4)


def test_distance_to_eps0_exp_tenth_solves_fixed_point_equation():
    h_star = oracles.exp_fixed_point(0.1)
    assert math.exp(-h_star / 0.1) == pytest.approx(h_star, abs=1e-12)
    assert h_star == pytest.approx(0.174553, abs=1e-6)
    assert D.distance_to_eps0(D.exp_simple(0.1), 1e-6) == pytest.approx(h_star, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(mixtures)
def test_distance_to_eps0_agrees_with_levy(parts):
    F = build(parts)
    tol = 1e-7
    assert abs(D.distance_to_eps0(F, tol) - D.levy_distance(F, D.EPS0, tol)) <= 2 * tol


@settings(max_examples=40, deadline=None)
@given(mixtures)
def test_distance_to_eps0_matches_grid(parts):
    assert D.distance_to_eps0(build(parts), 1e-7) == pytest.approx(oracles.eps0_grid(parts), abs=2e-5)


@settings(max_examples=60, deadline=None)
@given(mixtures, st.floats(1e-3, 1.5))
def test_strong_neighbourhood_criterion(parts, t):
    F = build(parts)
    d = D.distance_to_eps0(F, 1e-9)
    if abs(d - t) > 1e-8:
        assert (D.evaluate(F, t) > 1 - t) == (d < t)


# -- weak convergence -----------------------------------------------------------------

def test_scaled_exponentials_converge_to_eps0():
    seq = [D.exp_simple(2 / m) for m in range(1, 51)]
    v = D.weakly_converges(seq, D.EPS0, probe_count=4, tol=0.1)
    assert v.converges
    assert 0 <= v.max_discrepancy < 0.1
    # the tail member's distance decreases along the sequence
    d = [D.distance_to_eps0(F) for F in seq]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_short_scaled_exponential_sequence_not_yet_close():
    seq = [D.exp_simple(2 / m) for m in range(1, 6)]
    assert not D.weakly_converges(seq, D.EPS0, probe_count=4, tol=0.1).converges


def test_constant_sequence_converges_with_zero_discrepancy():
    F = D.mixture([(0.3, D.unit_step(1)), (0.7, D.exp_simple(0.5))])
    v = D.weakly_converges([F] * 5, F)
    assert v.converges and v.max_discrepancy == 0.0


def test_unit_step_one_does_not_converge_to_eps0():
    v = D.weakly_converges([D.unit_step(1)] * 3, D.EPS0)
    assert not v.converges
    assert v.levy_to_target == pytest.approx(oracles.levy_grid([(1.0, ("step", 1.0))], [(1.0, ("step", 0.0))]), abs=2e-4)


def test_probe_points_avoid_jumps():
    F = D.mixture([(0.5, D.unit_step(1)), (0.5, D.unit_step(2))])
    pts = D.probe_points(F, 10)
    assert len(pts) == 10
    assert not np.any(np.isin(pts, [0.0, 1.0, 2.0]))


def test_weak_convergence_rejects_empty():
    with pytest.raises(ValueError):
        D.weakly_converges([], D.EPS0)


def test_weak_convergence_verdict_matches_levy():
    for m in (2, 10, 100, 1000):
        seq = [D.exp_simple(2 / m)]
        v = D.weakly_converges(seq, D.EPS0, tol=0.05)
        assert v.converges == (D.levy_distance(seq[-1], D.EPS0) < 0.05)


# -- tau_M ----------------------------------------------------------------------------

def test_tau_m_identity():
    F = D.exp_simple(1)
    H = D.tau_m(D.EPS0, F, 256)
    xs = D.tau_grid(D.EPS0, F, 256)
    assert np.allclose(D.evaluate(H, xs), D.evaluate(F, xs), atol=1e-12)


def test_tau_m_steps_add():
    F, G = D.unit_step(1), D.unit_step(2)
    xs = D.tau_grid(F, G, 256, x_max=6.0)
    got = D.tau_m_values(F, G, xs)
    brute = np.maximum(oracles.sup_min_brute(D.evaluate_right(F, xs), D.evaluate(G, xs)),
                       oracles.sup_min_brute(D.evaluate_right(G, xs), D.evaluate(F, xs)))
    brute[0] = 0.0
    assert np.array_equal(got, brute)
    expected = D.evaluate(D.unit_step(3), xs)
    dx = xs[1] - xs[0]
    # away from the jump the grid result is exactly the unit step at 3
    away = np.abs(xs - 3.0) > dx
    assert np.array_equal(got[away], expected[away])


def test_tau_m_steps_add_on_aligned_grid():
    xs = D.tau_grid(D.unit_step(1), D.unit_step(2), 300, x_max=6.0)
    assert np.array_equal(D.tau_m_values(D.unit_step(1), D.unit_step(2), xs),
                          D.evaluate(D.unit_step(3), xs))


def test_sup_min_grid_matches_brute_force_on_steps():
    xs = np.linspace(0, 6, 257)
    F, G = D.unit_step(1), D.unit_step(2)
    fr, g = D.evaluate_right(F, xs), D.evaluate(G, xs)
    assert np.array_equal(D.sup_min_grid(fr, g), oracles.sup_min_brute(fr, g))


@given(st.lists(st.floats(0, 1), min_size=2, max_size=60), st.lists(st.floats(0, 1), min_size=2, max_size=60))
def test_sup_min_grid_matches_brute_force(a, b):
    n = min(len(a), len(b))
    fr, g = np.sort(np.asarray(a[:n])), np.sort(np.asarray(b[:n]))
    assert np.array_equal(D.sup_min_grid(fr, g), oracles.sup_min_brute(fr, g))


def test_tau_m_commutative():
    F, G = D.exp_simple(1), D.mixture([(0.5, D.unit_step(0.5)), (0.5, D.exp_simple(2))])
    xs = D.tau_grid(F, G, 256)
    assert np.array_equal(D.tau_m_values(F, G, xs), D.tau_m_values(G, F, xs))


def test_tau_m_rejects_small_grid():
    with pytest.raises(ValueError):
        D.tau_m(D.EPS0, D.EPS0, 1)


@settings(max_examples=30, deadline=None)
@given(mixtures, mixtures, st.floats(0.0, 1.0))
def test_tau_m_monotone_in_first_argument(pf, pg, lam):
    F, G = build(pf), build(pg)
    # F' = max-dominating mixture: shifting mass to a step at 0 raises F pointwise
    F2 = D.mixture([(1 - lam, F), (lam, D.EPS0)]) if lam > 0 else F
    xs = D.tau_grid(F, G, 256, x_max=8.0)
    assert np.all(D.tau_m_values(F, G, xs) <= D.tau_m_values(F2, G, xs) + 1e-12)


def test_tau_m_result_is_valid_ddf():
    H = D.tau_m(D.exp_simple(1), D.unit_step(1), 128)
    xs = np.linspace(0, 30, 300)
    v = D.evaluate(H, xs)
    assert v[0] == 0.0 and np.all(np.diff(v) >= 0)


# -- JSON -----------------------------------------------------------------------------

@pytest.mark.parametrize("F", [
    D.exp_simple(0.37),
    D.unit_step(2.5),
    D.EPS_INF,
    D.table([(0.5, 0.2), (1.5, 1.0)], interp="linear"),
    D.mixture([(0.25, D.unit_step(1)), (0.75, D.exp_simple(3))]),
])
def test_json_round_trip(F):
    text = json.dumps(D.to_json(F))
    G = D.from_json(json.loads(text))
    assert G == F


def test_json_rejects_unknown_kind():
    with pytest.raises(ValueError):
        D.from_json({"kind": "gamma"})
