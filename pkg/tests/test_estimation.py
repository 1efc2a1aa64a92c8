from math import comb

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from hdfer.estimation import (EstimatorInput, ber_estimate, binomial_pmf, break_even_fer,
                              complexity_ratio, cumulative_complexity_ratio, curve_rows,
                              enumeration_cost, eps_grid, fer_bounds, fer_lower, fer_upper,
                              p_first, rate_point, s_double_prime_count, s_prime_count,
                              upper_tail)

mp.mp.dps = 60


# arbitrary-precision references written directly from the closed forms

def mp_term(n, i, eps, coef):
    e = mp.mpf(eps)
    return mp.mpf(coef) * e**i * (1 - e) ** (n - i)


def mp_fer_lower(n, j, e_j, cap, eps):
    return mp.fsum(mp_term(n, i, eps, e_j * comb(n - j, i - j)) for i in range(j, cap + 1))


def mp_tail(n, cap, eps):
    return mp.fsum(mp_term(n, i, eps, comb(n, i)) for i in range(cap + 1, n + 1))


def mp_ber(n, j, e_j, n0, m, eps):
    m = mp.mpf(m)
    below = mp.fsum(mp_term(n, i, eps, e_j * comb(n - j, i - j)) for i in range(j, n0))
    at = mp_term(n, n0, eps, e_j * comb(n - j, n0 - j))
    return mp.mpf(j) / n * below + m / n * (at + mp_tail(n, n0, eps))


def rel(a, b):
    b = mp.mpf(b)
    return abs(mp.mpf(a) - b) / abs(b) if b else abs(mp.mpf(a))


TOY = EstimatorInput(5, 2, 3)


def test_toy_values():
    # 3 * sum_{i=2..5} C(3, i-2) 0.1^i 0.9^(5-i) = 3 * 0.01 = 0.03 exactly
    assert fer_lower(TOY, 5, 0.1) == pytest.approx(0.03, rel=1e-14)
    assert float(mp_fer_lower(5, 2, 3, 5, 0.1)) == pytest.approx(0.03, rel=1e-14)
    assert upper_tail(5, 3, 0.1) == pytest.approx(0.00046, rel=1e-12)
    assert fer_lower(TOY, 3, 0.1) == pytest.approx(0.02916, rel=1e-12)
    assert fer_upper(TOY, 3, 0.1) == pytest.approx(0.02916 + 0.00046, rel=1e-12)


def test_zero_crossover():
    inp = EstimatorInput(20, 2, 5, n0=6, m_avg=3.0)
    for cap in (2, 6, 20):
        assert fer_lower(inp, cap, 0.0) == 0.0
        assert fer_upper(inp, cap, 0.0) == 0.0
    assert ber_estimate(inp, 0.0) == 0.0
    assert p_first(inp, 0.0) == 0.0


def test_invalid_crossover_and_cap():
    for eps in (-0.1, 1.0, 1.5, float("nan")):
        with pytest.raises(ValueError):
            fer_lower(TOY, 3, eps)
    with pytest.raises(ValueError):
        fer_lower(TOY, 1, 0.1)
    with pytest.raises(ValueError):
        fer_upper(TOY, 6, 0.1)


def test_input_validation():
    with pytest.raises(ValueError):
        EstimatorInput(5, 2, 11)
    with pytest.raises(ValueError):
        EstimatorInput(5, 2, 3, n0=1)
    with pytest.raises(ValueError):
        EstimatorInput(5, 2, 3, n0=3, m_avg=6)
    with pytest.raises(ValueError):
        ber_estimate(EstimatorInput(5, 2, 3, n0=2, m_avg=1.0), 0.1)


def test_degenerate_cap_is_first_term():
    inp = EstimatorInput(200, 3, 361)
    assert fer_lower(inp, 3, 0.01) == pytest.approx(p_first(inp, 0.01), rel=1e-15)


EPS_GRID = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]


@pytest.mark.parametrize("n, j, e_j", [(200, 3, 361), (1008, 3, 50), (1998, 4, 1234)])
def test_log_domain_matches_arbitrary_precision(n, j, e_j):
    for eps in EPS_GRID:
        for cap in (j, j + 1, j + 6, 40, n):
            assert rel(fer_lower(EstimatorInput(n, j, e_j), cap, eps),
                       mp_fer_lower(n, j, e_j, cap, eps)) < 1e-10
            if cap < n:
                assert rel(upper_tail(n, cap, eps), mp_tail(n, cap, eps)) < 1e-10
        inp = EstimatorInput(n, j, e_j, n0=j + 6, m_avg=7.73)
        assert rel(ber_estimate(inp, eps), mp_ber(n, j, e_j, j + 6, 7.73, eps)) < 1e-10


def test_ber_code_one_parameters():
    # n=200, J=3, N0=9, M=7.73 with a placeholder |E_J| = 100
    ref = {1e-4: "1.5000000000002594143e-12", 1e-3: "1.5000008743752967221e-9",
           1e-2: "3.07162001058060313e-6", 5e-2: "0.021119781169449998833"}
    inp = EstimatorInput(200, 3, 100, n0=9, m_avg=7.73)
    for eps, want in ref.items():
        assert rel(ber_estimate(inp, eps), mp.mpf(want)) < 1e-12
        assert rel(mp_ber(200, 3, 100, 9, 7.73, eps), mp.mpf(want)) < 1e-15


def test_bounds_order_and_equality_at_n():
    inp = EstimatorInput(120, 3, 40)
    for eps in np.logspace(-4, np.log10(0.5), 12):
        prev = 0.0
        for cap in range(3, 121, 9):
            lo, up = fer_lower(inp, cap, eps), fer_upper(inp, cap, eps)
            assert lo <= up
            assert lo >= prev
            prev = lo
        assert fer_upper(inp, 120, eps) == fer_lower(inp, 120, eps)


def test_gap_is_independent_binomial_tail():
    for n in (200, 1008):
        for eps in (1e-3, 1e-2, 0.05):
            for cap in (5, 12, 30):
                want = binom.sf(cap, n, eps)
                assert abs(upper_tail(n, cap, eps) - want) <= 1e-10 * want
                lo, tail = fer_bounds(EstimatorInput(n, 3, 10), cap, eps)
                assert tail == upper_tail(n, cap, eps)


def test_pmf_sums_to_one():
    assert sum(binomial_pmf(50, i, 0.07) for i in range(51)) == pytest.approx(1.0, rel=1e-13)
    assert binomial_pmf(50, 0, 0.0) == 1.0


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 400), st.data(), st.floats(1e-6, 0.5))
def test_outputs_are_probabilities(n, data, eps):
    j = data.draw(st.integers(1, min(6, n - 1)))
    e_j = data.draw(st.integers(1, min(comb(n, j), 10**6)))
    n0 = data.draw(st.integers(j + 1, n))
    m = data.draw(st.floats(0, n))
    cap = data.draw(st.integers(j, n))
    inp = EstimatorInput(n, j, e_j, n0, m)
    pt = rate_point(inp, cap, eps)
    assert 0.0 <= pt.p_j <= pt.fer_lower <= pt.fer_upper <= 1.0
    assert 0.0 <= pt.ber <= 1.0
    # M <= n and J <= n make each BER term at most the matching FER_U(N0) term
    assert pt.ber <= fer_upper(inp, n0, eps) * (1 + 1e-12)


def test_s_prime_examples():
    assert s_prime_count(10, 2, 1, 3) == 8.0
    assert s_prime_count(10, 2, 1, 3, truncated=False) == pytest.approx(7.8235390946502, rel=1e-12)
    assert s_double_prime_count(10, 2, 1, 3) == pytest.approx(7.6483950617284, rel=1e-12)
    for fn in (s_prime_count, s_double_prime_count):
        assert fn(10, 2, 0, 3) == 0.0
    assert s_prime_count(10, 2, 0, 3, truncated=False) == 0.0
    with pytest.raises(ValueError):
        s_prime_count(10, 2, 1, 2)


def test_s_prime_truncated_counts_supersets_exactly_for_one_pattern():
    # with a single failing pair every weight-3 superset contains it exactly once
    from itertools import combinations
    supersets = [c for c in combinations(range(10), 3) if {0, 1} <= set(c)]
    assert len(supersets) == s_prime_count(10, 2, 1, 3)


def test_s_prime_ordering_sweep():
    for n in (8, 12, 20):
        for j in (1, 2, 3):
            for e in (1, 2, comb(n, j) // 3 + 1, comb(n, j)):
                for i in range(j + 1, min(n, j + 5) + 1):
                    t = s_prime_count(n, j, e, i)
                    u = s_prime_count(n, j, e, i, truncated=False)
                    d = s_double_prime_count(n, j, e, i)
                    assert t >= u * (1 - 1e-12)
                    assert u >= d * (1 - 1e-12)


def test_complexity_examples():
    assert enumeration_cost(200, 3) == 200 + comb(200, 2) + comb(200, 3)
    eta = complexity_ratio(200, 3, 1e-7, 100)
    assert eta == pytest.approx(749.906, abs=1e-3)
    assert complexity_ratio(200, 3, 1e-8, 100) == pytest.approx(10 * eta)
    assert cumulative_complexity_ratio(200, 3, [1e-7, 1e-8], 100) == pytest.approx(8248.969, abs=1e-3)
    assert enumeration_cost(1008, 3) == 170699592
    assert break_even_fer(1008, 3, 100) == pytest.approx(5.8582e-7, rel=1e-4)
    with pytest.raises(ValueError):
        complexity_ratio(200, 3, 0.0, 100)
    with pytest.raises(ValueError):
        complexity_ratio(200, 3, 0.1, 0)


def test_eps_grid():
    g = eps_grid("1e-4:1e-1:4")
    assert np.allclose(g, [1e-4, 1e-3, 1e-2, 1e-1])
    assert np.allclose(eps_grid("0.1:0.3:3,lin"), [0.1, 0.2, 0.3])
    for bad in ("0:0.1:5", "1e-3:1:5", "1e-3:0.1", "1e-3:0.1:0", "1e-3:0.1:4,cubic"):
        with pytest.raises(ValueError):
            eps_grid(bad)


def test_ber_asymptote():
    inp = EstimatorInput(200, 3, 361, n0=8, m_avg=33.6)
    for eps in (1e-6, 1e-7):
        ratio = ber_estimate(inp, eps) / fer_upper(inp, 8, eps)
        assert ratio == pytest.approx(3 / 200, rel=0.05)


def test_curve_rows_leave_ber_blank_without_n0():
    rows = curve_rows(EstimatorInput(50, 2, 4), 10, [1e-3, 1e-2])
    assert len(rows) == 2 and rows[0][-1] == ""
    rows = curve_rows(EstimatorInput(50, 2, 4, 5, 3.0), 10, [1e-3])
    assert isinstance(rows[0][-1], float)
