"""Limit laws: Theorem-1 tail product, crossover CDF, Gaussian and GUE edges.

Oracles: scipy.stats.norm for the Gaussian branch ([DERIVED]), direct
partial products for the tail formula ([DERIVED]); structural facts are
[TRIVIAL].  Agreement of the crossover law with the exact finite-t
distribution is covered in test_acceptance.py.
"""

import numpy as np
import pytest
import scipy.stats

from asepdist import make_params
from asepdist.limitdist import (crossover_cdf, crossover_table, f2_cdf,
                                f2_table, gaussian_limit_cdf, theorem1_tail,
                                theorem3_map)
from asepdist.params import scaling_constants


P = make_params(0.3)


def test_theorem1_tail_zero_at_start():
    # [TRIVIAL] P(x_m > x) = 0 for x >= m (the particle starts at m and
    # never moves right past its start under left drift asymptotics).
    assert theorem1_tail(P, 2, 2, 10.0) == 0.0
    assert theorem1_tail(P, 2, 5, 10.0) == 0.0


def test_theorem1_tail_closed_form():
    # [DERIVED] oracle: direct evaluation of
    # prod_{k>=1}(1 - tau^k) * t^{2m-x-2} e^{-t} / ((m-1)! (m-x-1)!).
    import math

    from asepdist.special import euler_product

    tau = P.tau
    m, x, t = 2, -1, 9.0
    expected = (euler_product(tau) * t ** (2 * m - x - 2) * math.exp(-t)
                / (math.factorial(m - 1) * math.factorial(m - x - 1)))
    assert abs(theorem1_tail(P, m, x, t) - expected) < 1e-12 * expected


def test_theorem1_tail_monotone_in_x():
    # [TRIVIAL] the leading term is nonincreasing in x once t exceeds m-x-1.
    vals = [theorem1_tail(P, 1, x, 8.0) for x in range(-6, 1)]
    assert all(v > 0.0 for v in vals)
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_gaussian_limit_is_standard_normal():
    # [DERIVED] oracle: scipy.stats.norm.cdf
    for s in (-3.0, -1.0, 0.0, 0.5, 2.5):
        assert abs(gaussian_limit_cdf(s) - scipy.stats.norm.cdf(s)) < 1e-12


def test_crossover_cdf_monotone_and_bounded():
    vals = []
    for s in np.linspace(-3, 3, 7):
        v, err = crossover_cdf(P, 1, float(s))
        assert 0.0 <= v <= 1.0
        assert err < 1e-6
        vals.append(v)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_crossover_table_matches_pointwise():
    s = np.array([-1.0, 0.0, 1.0])
    tab = crossover_table(P, 2, s)
    for i, si in enumerate(s):
        v, _ = crossover_cdf(P, 2, float(si))
        assert abs(tab.value[i] - v) < 1e-12
    assert tab.label == "crossover_m2"


def test_f2_moments_match_published_constants():
    # [DERIVED] oracle: the GUE Tracy-Widom mean -1.7710868074 and variance
    # 0.8131947928 (standard published constants), recovered from the CDF by
    # E[X] = -int_{-inf}^0 F + int_0^inf (1 - F).
    s = np.arange(-9.5, 8.0 + 1e-9, 0.25)
    F = np.array([f2_cdf(float(x))[0] for x in s])
    from scipy.integrate import simpson

    neg, pos = s <= 0, s >= 0
    mean = -simpson(F[neg], x=s[neg]) + simpson(1.0 - F[pos], x=s[pos])
    # E[X^2] = 2 (int_0^inf s(1-F) + int_{-inf}^0 (-s) F)
    ex2 = 2.0 * (simpson(s[pos] * (1.0 - F[pos]), x=s[pos])
                 + simpson(-s[neg] * F[neg], x=s[neg]))
    var = ex2 - mean ** 2
    assert abs(mean - (-1.7710868074)) < 2e-3
    assert abs(var - 0.8131947928) < 5e-3


def test_f2_limits_and_domain():
    # [TRIVIAL] CDF limits
    v_hi, _ = f2_cdf(5.0)
    assert v_hi > 1.0 - 1e-8
    v_lo, _ = f2_cdf(-9.0)
    assert v_lo < 1e-4
    with pytest.raises(ValueError):
        f2_cdf(-11.0)


def test_f2_table_round_trip():
    s = np.array([-2.0, 0.0, 2.0])
    tab = f2_table(s)
    for i, si in enumerate(s):
        v, _ = f2_cdf(float(si))
        assert tab.value[i] == v
    assert tab.label == "tracy_widom_gue"


def test_theorem3_map_round_trip():
    # [DERIVED] the realized s' must reproduce x through the same formula,
    # and |x - x_real| <= 1/2 by construction of rounding.
    sigma, t, s = 0.25, 40.0, -1.3
    m, x, s_prime, sc = theorem3_map(P, sigma, t, s)
    assert m == round(sigma * t)
    x_back = sc.c1 * t + sc.c2 * s_prime * t ** (1.0 / 3.0)
    assert abs(x_back - x) < 1e-9
    assert abs(x - (sc.c1 * t + sc.c2 * s * t ** (1.0 / 3.0))) <= 0.5 + 1e-9


def test_theorem3_map_rejects_tiny_sigma():
    with pytest.raises(ValueError):
        theorem3_map(P, 0.001, 10.0, 0.0)


def test_scaling_constants_relations():
    # [TRIVIAL] c3 = c2 (1 - sqrt(sigma)); sigma = 1/4 gives c1 = 0.
    for sigma in (0.1, 0.25, 0.6):
        sc = scaling_constants(sigma)
        assert abs(sc.c3 - sc.c2 * (1.0 - np.sqrt(sigma))) < 1e-14
    assert scaling_constants(0.25).c1 == 0.0
