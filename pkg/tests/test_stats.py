import math
import random
import warnings

import pytest
from hypothesis import assume, given, settings, strategies as hst
from scipy import special, stats as sps

from slukit.errors import UndefinedCorrelationError
from slukit.stats import (PerfectCorrelationWarning, betainc, correlate, p_value, pearson, rankdata, spearman,
                          spearman_shortcut, stars)

vec = hst.lists(hst.floats(-1e3, 1e3, allow_nan=False).map(lambda v: round(v, 3)), min_size=5, max_size=40)


def test_perfect():
    x = [1.0, 2.0, 4.0, 7.0]
    assert pearson(x, x) == 1.0
    assert pearson(x, [-v for v in x]) == -1.0
    assert spearman(x, [v ** 3 for v in x]) == 1.0


def test_small_example_against_scipy():
    x, y = [1, 2, 3, 4, 5], [2, 1, 4, 3, 5]
    assert pearson(x, y) == pytest.approx(sps.pearsonr(x, y)[0], abs=1e-12)
    assert pearson(x, y) == pytest.approx(0.8, abs=1e-12)


def test_constant_vector():
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError):
        correlate([0, 0, 0, 0], [0, 0, 0, 0])


def test_length_checks():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])


def test_rankdata_ties():
    assert rankdata([10, 20, 20, 5]) == [2.0, 3.5, 3.5, 1.0]
    assert rankdata([3, 1, 2]) == list(sps.rankdata([3, 1, 2]))


def test_null_coefficient():
    for n in (3, 10, 500):
        t, p = p_value(0.0, n)
        assert t == 0 and p == 1.0


def test_weak_coefficient_large_n_marker():
    t, p = p_value(0.26, 2612)
    assert p < 0.01 and stars(p) == "**"
    assert p == pytest.approx(2 * sps.t.sf(abs(t), 2610), rel=1e-9, abs=1e-300)


def test_perfect_coefficient_flagged():
    with pytest.warns(PerfectCorrelationWarning):
        t, p = p_value(1.0, 10)
    assert p == 0 and math.isinf(t)


def test_stars():
    assert stars(0.009) == "**"
    assert stars(0.01) == "*"
    assert stars(0.049) == "*"
    assert stars(0.05) == ""


@pytest.mark.parametrize("coef", [-0.95, -0.5, -0.1, 0.05, 0.26, 0.7, 0.99])
@pytest.mark.parametrize("n", [3, 4, 7, 30, 200, 2612])
def test_p_value_grid(coef, n):
    t, p = p_value(coef, n)
    assert t == pytest.approx(coef * math.sqrt((n - 2) / (1 - coef ** 2)), rel=1e-12)
    assert abs(p - 2 * sps.t.sf(abs(t), n - 2)) < 1e-9


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (2, 3, 0.9), (100, 0.5, 0.99), (1.5, 0.5, 0.01), (1305, 0.5, 0.97)])
def test_betainc(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-10, abs=1e-14)


def test_random_datasets_against_scipy():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(5, 200)
        x = [rng.randint(0, 20) for _ in range(n)]  # small range forces ties
        y = [v + rng.gauss(0, 8) for v in x]
        rep = correlate(x, y)
        r, p = sps.pearsonr(x, y)
        rs, ps = sps.spearmanr(x, y)
        assert abs(rep.r - r) < 1e-9 and abs(rep.p_r - p) < 1e-9
        assert abs(rep.r_s - rs) < 1e-9 and abs(rep.p_rs - ps) < 1e-9


@settings(max_examples=200)
@given(hst.permutations(list(range(30))), hst.integers(5, 30))
def test_shortcut_matches_rank_pearson_without_ties(perm, n):
    x = list(range(n))
    y = [v for v in perm if v < n]
    assert abs(spearman(x, y) - spearman_shortcut(x, y)) < 1e-9


@settings(max_examples=200)
@given(vec, hst.data())
def test_affine_invariance(x, data):
    y = data.draw(hst.lists(hst.floats(-1e3, 1e3, allow_nan=False).map(lambda v: round(v, 3)),
                            min_size=len(x), max_size=len(x)))
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    a = data.draw(hst.sampled_from([-3.0, -0.5, 2.0, 7.0]))
    c = data.draw(hst.sampled_from([-2.0, 0.25, 4.0]))
    r = pearson(x, y)
    r2 = pearson([a * v + 1.5 for v in x], [c * v - 4 for v in y])
    assert r2 == pytest.approx(math.copysign(1, a * c) * r, abs=1e-9)


@settings(max_examples=200)
@given(vec, vec)
def test_spearman_monotone_invariance(x, y):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    rs = spearman(x, y)
    assert spearman([math.atan(v / 100) * 10 + v for v in x], [v ** 3 for v in y]) == pytest.approx(rs, abs=1e-9)


def test_p_value_monotone():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ps = [p_value(c / 100, 50)[1] for c in range(0, 99)]
        assert all(a > b for a, b in zip(ps, ps[1:]))
        qs = [p_value(0.3, n)[1] for n in range(4, 200)]
        assert all(a > b for a, b in zip(qs, qs[1:]))


def test_block_shape():
    rep = correlate([1, 2, 3, 4, 5, 6, 7, 8], [1, 3, 2, 5, 4, 7, 6, 8])
    lines = rep.block("WER", "CER").splitlines()
    assert lines[0].startswith("Correlation coef.")
    assert lines[1].startswith("Pearson (r)\t") and lines[1].split("\t")[1].endswith("**")
    assert lines[2].startswith("Spearman (r_s)\t")
    assert rep.to_dict()["stars_r"] == "**"
