import math

import numpy as np
import pytest

from qkrylov.bessel import bessel_j, bessel_j_all, max_order

# mpmath.besselj at 40 digits
REFERENCE = {
    (0, 1.0): 0.76519768655796655145,
    (1, 1.0): 0.44005058574493351596,
    (5, 5.0): 0.26114054612017009005,
    (-3, 2.5): -0.21660039103911352477,
    (10, 0.5): 2.6131773608228030862e-13,
    (20, 20.0): 0.16474777377532653234,
    (0, 20.0): 0.16702466434058315473,
    (50, 100.0): -0.038698339728525383467,
    (3, 8.0): -0.29113220706595224938,
    (7, 8.0): 0.32058907797982630386,
}


@pytest.mark.parametrize("key", sorted(REFERENCE))
def test_reference_values(key):
    n, x = key
    assert bessel_j(n, x) == pytest.approx(REFERENCE[key], rel=1e-10)


def test_zero_argument():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_j0_of_one_against_maclaurin_series():
    series = sum((-1) ** k * 0.5 ** (2 * k) / math.factorial(k) ** 2 for k in range(30))
    assert bessel_j(0, 1.0) == pytest.approx(series, rel=1e-12)
    assert bessel_j(0, 1.0) == pytest.approx(0.7651976866, abs=1e-10)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 20.0])
def test_sum_rule(x):
    j = bessel_j_all(max_order(x), x)
    assert abs(j[0] ** 2 + 2 * np.sum(j[1:] ** 2) - 1) < 1e-10


def test_against_mpmath_grid():
    mp = pytest.importorskip("mpmath")
    for x in (0.3, 2.0, 7.5, 33.0):
        j = bessel_j_all(60, x)
        for n in (0, 1, 2, 9, 30):
            ref = float(mp.besselj(n, x))
            if abs(ref) > 1e-250:
                assert j[n] == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_order_beyond_bound_is_an_error():
    with pytest.raises(OverflowError):
        bessel_j(max_order(1.0) + 1, 1.0)
