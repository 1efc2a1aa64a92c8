"""Closed-form FER/BER estimates from (n, J, |E_J|, N0, M).

Binomial terms C(a, b) eps^i (1-eps)^(n-i) are evaluated in the log domain
(log-gamma) and accumulated with ``math.fsum``. The probability that more
than N errors occur is summed directly from the tail rather than formed as
``1 - sum``, which keeps full relative precision when it is tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, lgamma, log1p, log

import numpy as np


def log_binom(a: int, b: int) -> float:
    return lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1)


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps < 1.0 or math.isnan(eps):
        raise ValueError(f"crossover probability {eps!r} outside [0, 1)")


def _log_pow(eps: float, n: int, i: int) -> float:
    """log(eps^i (1-eps)^(n-i)); eps > 0."""
    return i * log(eps) + (n - i) * log1p(-eps)


def binomial_pmf(n: int, i: int, eps: float) -> float:
    """p_i = C(n, i) eps^i (1-eps)^(n-i)."""
    _check_eps(eps)
    if eps == 0.0:
        return 1.0 if i == 0 else 0.0
    return math.exp(log_binom(n, i) + _log_pow(eps, n, i))


def upper_tail(n: int, cap: int, eps: float) -> float:
    """P[weight > cap] for a Binomial(n, eps) error weight."""
    _check_eps(eps)
    if cap >= n or eps == 0.0:
        return 0.0
    if cap < 0:
        return 1.0
    lp = [log_binom(n, i) + _log_pow(eps, n, i) for i in range(cap + 1, n + 1)]
    shift = max(lp)
    return min(1.0, math.exp(shift) * math.fsum(math.exp(v - shift) for v in lp))


@dataclass(frozen=True)
class EstimatorInput:
    n: int
    j: int
    e_j_count: int
    n0: int | None = None
    m_avg: float | None = None

    def __post_init__(self):
        if not 1 <= self.j <= self.n:
            raise ValueError("need 1 <= J <= n")
        if not 1 <= self.e_j_count <= comb(self.n, self.j):
            raise ValueError("need 1 <= |E_J| <= C(n, J)")
        if self.n0 is not None and not self.j <= self.n0 <= self.n:
            raise ValueError(f"N0={self.n0} outside [J={self.j}, n={self.n}]")
        if self.m_avg is not None and not 0.0 <= self.m_avg <= self.n:
            raise ValueError("M outside [0, n]")


def _superset_terms(inp: EstimatorInput, lo: int, hi: int, eps: float) -> list[float]:
    """|E_J| C(n-J, i-J) eps^i (1-eps)^(n-i) for i in [lo, hi]."""
    n, j = inp.n, inp.j
    le = log(inp.e_j_count)
    return [math.exp(le + log_binom(n - j, i - j) + _log_pow(eps, n, i)) for i in range(lo, hi + 1)]


def p_first(inp: EstimatorInput, eps: float) -> float:
    """P(J) = |E_J| eps^J (1-eps)^(n-J), the exactly enumerated term."""
    _check_eps(eps)
    if eps == 0.0:
        return 0.0
    return math.exp(log(inp.e_j_count) + _log_pow(eps, inp.n, inp.j))


def _check_cap(inp: EstimatorInput, n_cap: int) -> None:
    if not inp.j <= n_cap <= inp.n:
        raise ValueError(f"N={n_cap} outside [J={inp.j}, n={inp.n}]")


def _lower_sum(inp: EstimatorInput, n_cap: int, eps: float) -> float:
    _check_cap(inp, n_cap)
    _check_eps(eps)
    if eps == 0.0:
        return 0.0
    return math.fsum(_superset_terms(inp, inp.j, n_cap, eps))


def fer_lower(inp: EstimatorInput, n_cap: int, eps: float) -> float:
    """Lower FER estimate: weights above ``n_cap`` assumed never to occur.

    The superset count |E_J| C(n-J, i-J) can exceed C(n, i) when |E_J| is a
    large share of C(n, J), so the sum is capped at 1.
    """
    return min(1.0, _lower_sum(inp, n_cap, eps))


def fer_bounds(inp: EstimatorInput, n_cap: int, eps: float) -> tuple[float, float]:
    """``(uncapped lower sum, tail)``; the upper estimate is their sum."""
    return _lower_sum(inp, n_cap, eps), upper_tail(inp.n, n_cap, eps)


def fer_upper(inp: EstimatorInput, n_cap: int, eps: float) -> float:
    """Upper FER estimate: every pattern heavier than ``n_cap`` fails."""
    lo, tail = fer_bounds(inp, n_cap, eps)
    return min(1.0, lo + tail)


def ber_estimate(inp: EstimatorInput, eps: float) -> float:
    """BER estimate: J residual errors below N0, M residual errors from N0 up."""
    if inp.n0 is None or inp.m_avg is None:
        raise ValueError("BER estimate needs N0 and M")
    if inp.n0 <= inp.j:
        raise ValueError("BER estimate needs N0 > J")
    _check_eps(eps)
    if eps == 0.0:
        return 0.0
    n, j, n0, m = inp.n, inp.j, inp.n0, inp.m_avg
    below = math.fsum(_superset_terms(inp, j, n0 - 1, eps))
    at_n0 = _superset_terms(inp, n0, n0, eps)[0]
    return min(1.0, (j / n) * below + (m / n) * (at_n0 + upper_tail(n, n0, eps)))


def s_prime_count(n: int, j: int, e_j_count: int, i: int, truncated: bool = True) -> float:
    """Estimated number of weight-i patterns containing a failing weight-J pattern.

    ``truncated`` gives |E_J| C(n-J, i-J), the form the FER estimates use;
    otherwise C(n, i) [1 - (1 - |E_J|/C(n, J))^C(i, J)].
    """
    if i <= j:
        raise ValueError("need i > J")
    if e_j_count == 0:
        return 0.0
    if truncated:
        return float(e_j_count * comb(n - j, i - j))
    q = e_j_count / comb(n, j)
    if q >= 1.0:
        return float(comb(n, i))
    # 1 - (1-q)^k computed as -expm1(k log1p(-q))
    return comb(n, i) * -math.expm1(comb(i, j) * log1p(-q))


def s_double_prime_count(n: int, j: int, e_j_count: int, i: int) -> float:
    """Estimated number of weight-i patterns containing exactly one failing weight-J pattern."""
    if i <= j:
        raise ValueError("need i > J")
    if e_j_count == 0:
        return 0.0
    q = e_j_count / comb(n, j)
    k = comb(i, j)
    if q >= 1.0:
        return float(comb(n, i)) if k == 1 else 0.0
    return comb(n, i) * k * math.exp((k - 1) * log1p(-q)) * q


def enumeration_cost(n: int, j: int) -> int:
    """Number of decodes needed to enumerate all weights 1..J."""
    return sum(comb(n, i) for i in range(1, j + 1))


def complexity_ratio(n: int, j: int, p: float, m: int) -> float:
    """Monte Carlo cost over enumeration cost at target FER ``p`` with ``m`` errors."""
    if not 0.0 < p < 1.0:
        raise ValueError("target FER must lie in (0, 1)")
    if m < 1:
        raise ValueError("frame-error quota must be >= 1")
    return m / (p * enumeration_cost(n, j))


def cumulative_complexity_ratio(n: int, j: int, ps, m: int) -> float:
    """Ratio when Monte Carlo must simulate every target FER in ``ps``."""
    return math.fsum(complexity_ratio(n, j, p, m) for p in ps)


def break_even_fer(n: int, j: int, m: int) -> float:
    """FER below which enumeration is cheaper than one Monte Carlo point."""
    return m / enumeration_cost(n, j)


@dataclass(frozen=True)
class RatePoint:
    epsilon: float
    p_j: float
    fer_lower: float
    fer_upper: float
    ber: float | None


def rate_point(inp: EstimatorInput, n_cap: int, eps: float) -> RatePoint:
    lo, tail = fer_bounds(inp, n_cap, eps)
    ber = ber_estimate(inp, eps) if inp.n0 is not None and inp.m_avg is not None else None
    return RatePoint(eps, min(1.0, p_first(inp, eps)), min(1.0, lo), min(1.0, lo + tail), ber)


def eps_grid(text: str) -> np.ndarray:
    """Parse ``start:stop:points[,log|,lin]`` into an array of crossover probabilities."""
    body, _, scale = text.partition(",")
    scale = scale.strip() or "log"
    try:
        a, b, k = body.split(":")
        start, stop, points = float(a), float(b), int(k)
    except ValueError:
        raise ValueError(f"bad grid {text!r}; expected start:stop:points[,log|lin]") from None
    if points < 1:
        raise ValueError("grid needs at least one point")
    for v in (start, stop):
        if not 0.0 < v < 1.0:
            raise ValueError(f"grid endpoint {v} outside (0, 1)")
    if scale == "log":
        return np.logspace(np.log10(start), np.log10(stop), points)
    if scale == "lin":
        return np.linspace(start, stop, points)
    raise ValueError(f"unknown grid scale {scale!r}")


CSV_HEADER = ("epsilon", "p_j", "fer_lower", "fer_upper", "ber_estimate")


def curve_rows(inp: EstimatorInput, n_cap: int, grid) -> list[tuple]:
    rows = []
    for eps in grid:
        pt = rate_point(inp, n_cap, float(eps))
        rows.append((pt.epsilon, pt.p_j, pt.fer_lower, pt.fer_upper,
                     "" if pt.ber is None else pt.ber))
    return rows
