import math

import pytest

from schubcomp.stats import chi2_sf, gammaincc, pearson_chi2, wilson_interval


def test_closed_forms():
    # df = 2: sf(x) = exp(-x/2); a = 1: Q(1, x) = exp(-x)
    for x in (0.1, 1.0, 5.0, 40.0, 200.0):
        assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12)
        assert gammaincc(1.0, x) == pytest.approx(math.exp(-x), rel=1e-12)


def test_half_integer_closed_form():
    # df = 1: sf(x) = erfc(sqrt(x / 2))
    for x in (0.01, 0.5, 3.0, 30.0):
        assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-10)


def test_against_scipy():
    sp = pytest.importorskip("scipy.stats")
    for df in (1, 5, 23, 40, 100):
        for x in (0.5, df * 0.7, df, df * 1.5, df * 3.0, 60.7):
            assert chi2_sf(x, df) == pytest.approx(sp.chi2.sf(x, df), rel=1e-10)


def test_reference_value():
    # 60.7 on 23 degrees of freedom is about 3e-5
    assert 2e-5 < chi2_sf(60.7, 23) < 4e-5


def test_pearson():
    stat, df, p = pearson_chi2([10, 10], [10, 10])
    assert stat == 0 and df == 1 and p == 1.0


def test_wilson():
    lo, hi = wilson_interval(37476, 500_000)
    assert lo < 0.075 < hi
    assert wilson_interval(0, 1000)[0] == pytest.approx(0.0, abs=1e-12)
    assert wilson_interval(0, 0) == (0.0, 1.0)
