import warnings
from fractions import Fraction

import numpy as np
import pytest

from pmstat import ddf as D
from pmstat.ideals import DENSITY_ZERO, Verdict, all_pairs, explicit, row, where
from pmstat.pmspace import make_equilateral, make_simple
from pmstat.seqlab.analysis import (dichotomy_report, eps0_distances_to,
                                    extract_convergent_subsequence, i_stat_cluster_points,
                                    subsequence_along, subsequence_shape)
from pmstat.seqlab.indicators import pringsheim_limit_estimate
from pmstat.seqlab.sequences import (DoubleSequence, checker, constant, harmonic_block, j_mod_2,
                                     note31, reciprocal_sum, sparse_zero)

import oracles

SIMPLE = make_simple(D.exp_simple(1))
EQUI = make_equilateral(D.exp_simple(1))


def recheck_extraction(space, x, p, res):
    """Re-verify an extraction from scratch: ordering, gaps and per-level distances."""
    for i, ((j, k), (m, n)) in enumerate(zip(res.indices, res.windows), start=1):
        d = D.distance_to_eps0(space.distance(x(j, k), p))
        assert d < 1.0 / i
        if i > 1:
            pj, pk = res.indices[i - 2]
            pm, pn = res.windows[i - 2]
            assert j > pj and k > pk
            assert m > 4 * pm and n > 4 * pn
            assert pm < j <= m and pn < k <= n


# -- subsequences ---------------------------------------------------------------------

def test_subsequence_along_all_is_identity():
    x = reciprocal_sum()
    sub = subsequence_along(x, all_pairs(), (20, 20))
    assert np.allclose(sub.window(20, 20), x.window(20, 20))


def test_even_subsequence_has_limit_zero():
    x = reciprocal_sum()
    evens = where(lambda J, K: (J % 2 == 0) & (K % 2 == 0), vectorized=True)
    sub = subsequence_along(x, evens, (400, 400))
    assert subsequence_shape(evens, (400, 400)) == (200, 200)
    assert sub(3, 5) == pytest.approx(1 / 6 + 1 / 10)
    L = pringsheim_limit_estimate(sub, (200, 200), 0.05)
    assert L is not None and abs(L) < 0.05


def test_example1_unbounded_along_diagonal():
    x = harmonic_block()
    diag = where(lambda J, K: J == K, vectorized=True)
    sub = subsequence_along(x, diag, (720, 720))
    vals = [sub(i, 1) for i in (1, 6, 24, 120, 720)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] - vals[0] > 2.5


def test_subsequence_errors():
    with pytest.raises(ValueError):
        subsequence_along(reciprocal_sum(), explicit([(1, 1), (2, 2)]), (10, 10))
    with pytest.raises(ValueError):
        subsequence_along(reciprocal_sum(), where(lambda j, k: j > 50), (10, 10))
    with pytest.warns(RuntimeWarning):
        sub = subsequence_along(reciprocal_sum(), row(1), (10, 10))
    with pytest.raises(IndexError):
        sub(2, 1)


# -- extraction -----------------------------------------------------------------------

def test_extraction_constant_sequence():
    x = constant(2.0)
    res = extract_convergent_subsequence(SIMPLE, x, 2.0, (100, 100), levels=3)
    assert res.status == "complete"
    assert res.indices == ((1, 1), (2, 2), (6, 6))
    recheck_extraction(SIMPLE, x, 2.0, res)


def test_extraction_note31_toward_p():
    x = note31()
    res = extract_convergent_subsequence(EQUI, x, "p", (400, 400))
    assert res.succeeded and len(res.indices) >= 3
    assert all(x(j, k) == "p" for j, k in res.indices)
    recheck_extraction(EQUI, x, "p", res)


def test_extraction_reciprocal_sum_toward_zero():
    x = reciprocal_sum()
    res = extract_convergent_subsequence(SIMPLE, x, 0.0, (500, 500))
    assert res.succeeded and len(res.indices) >= 3
    recheck_extraction(SIMPLE, x, 0.0, res)


@pytest.mark.parametrize("p", [0.0, 1.0, 2.0, 5.0])
def test_extraction_example1_fails(p):
    x = harmonic_block()
    res = extract_convergent_subsequence(SIMPLE, x, p, (200, 200))
    assert res.status == "failed"
    assert res.failed_level == len(res.indices) + 1
    recheck_extraction(SIMPLE, x, p, res)


def test_eps0_distances_to_matches_oracle():
    d = eps0_distances_to(SIMPLE, reciprocal_sum(), 0.0, (5, 5))
    assert d[0, 0] == pytest.approx(oracles.exp_fixed_point(2.0), abs=1e-8)
    assert d[3, 1] == pytest.approx(oracles.exp_fixed_point(0.75), abs=1e-8)


# -- cluster points -------------------------------------------------------------------

def test_cluster_points_constant():
    res = i_stat_cluster_points(constant(3.0), [0, 1, 2, 3], 0.4, DENSITY_ZERO, (50, 50))
    assert [v.verdict for _, v in res] == [Verdict.NEGLIGIBLE] * 3 + [Verdict.NOT_NEGLIGIBLE]


def test_cluster_points_parity():
    res = i_stat_cluster_points(j_mod_2(), [0, 1], 0.3, DENSITY_ZERO, (50, 50))
    assert all(v.verdict is Verdict.NOT_NEGLIGIBLE for _, v in res)


def test_cluster_points_reciprocal_sum():
    res = dict(i_stat_cluster_points(reciprocal_sum(), [0, 0.5, 1], 0.1, DENSITY_ZERO, (300, 300)))
    assert res[0.0].verdict is Verdict.NOT_NEGLIGIBLE
    # the near-sets of 0.5 and 1 are thin but not yet below threshold at the half window
    for xi in (0.5, 1.0):
        assert res[xi].verdict is not Verdict.NOT_NEGLIGIBLE
        assert res[xi].evidence["density"] < 0.01


def test_cluster_points_validation():
    with pytest.raises(ValueError):
        i_stat_cluster_points(constant(1.0), [], 0.1, DENSITY_ZERO, (5, 5))
    with pytest.raises(ValueError):
        i_stat_cluster_points(constant(1.0), [1], 0.0, DENSITY_ZERO, (5, 5))


# -- dichotomy ------------------------------------------------------------------------

def test_dichotomy_all_zero_tends_one():
    rep = dichotomy_report(constant(0.0), 0.4, 0.6, DENSITY_ZERO, (60, 60))
    assert all(v == 1 for v in rep.d_a)
    assert rep.verdict == "tends-1"


def test_dichotomy_checker():
    rep = dichotomy_report(checker(), 0.4, 0.6, DENSITY_ZERO, (100, 100))
    assert rep.d_a[-1] == Fraction(1, 2)
    assert rep.product[-1] == 0.25
    assert rep.verdict in ("oscillates", "inconclusive")


def test_dichotomy_sparse_zero_tends_zero():
    rep = dichotomy_report(sparse_zero(), 0.4, 0.6, DENSITY_ZERO, (200, 200))
    assert rep.verdict == "tends-0"
    assert rep.d_a[-1] == Fraction(14 * 14, 200 * 200)


def test_dichotomy_complement_sums_to_one():
    x = DoubleSequence(lambda J, K: ((J * K) % 3 == 0).astype(float), "mod3", vectorized=True)
    rep = dichotomy_report(x, 0.2, 0.8, DENSITY_ZERO, (90, 70), points=15)
    assert all(a + b == 1 for a, b in zip(rep.d_a, rep.d_b))
    for (m, n), a in zip(rep.windows, rep.d_a):
        assert a == oracles.window_fraction(x.window(m, n) <= 0.2)


def test_dichotomy_rejects_entries_inside_gap():
    with pytest.raises(ValueError, match="inside"):
        dichotomy_report(reciprocal_sum(), 0.4, 0.6, DENSITY_ZERO, (20, 20))
    with pytest.raises(ValueError):
        dichotomy_report(checker(), 0.6, 0.4, DENSITY_ZERO, (20, 20))
