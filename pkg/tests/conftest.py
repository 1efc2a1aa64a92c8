import numpy as np
import pytest
from scipy.stats import binom, chisquare

from hdfer.code_model import TannerGraph, random_regular_graph
from hdfer.decoder import DecoderConfig, max_order
from hdfer.failure_analysis import check_theorem1


def random_sparse_graph(n, m, rng, dmin=1, dmax=4):
    """Random graph with per-variable degrees in [dmin, dmax]; every check used."""
    while True:
        var_adj = [tuple(sorted(rng.choice(m, size=int(rng.integers(dmin, dmax + 1)),
                                           replace=False).tolist()))
                   for _ in range(n)]
        used = {c for a in var_adj for c in a}
        if len(used) == m:
            return TannerGraph.from_var_adj(var_adj, m)


def random_orders(g, rng):
    return [int(rng.integers(0, max_order(d) + 1)) for d in g.var_degrees]


def small_codes(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(10, 21))
        g = random_sparse_graph(n, int(rng.integers(4, n // 2 + 1)), rng, dmin=2, dmax=4)
        if rng.integers(2):
            cfg = DecoderConfig.gallager_a(g, max_iterations=30)
        else:
            cfg = DecoderConfig.majority(g, random_orders(g, rng), max_iterations=30)
        out.append((g, cfg))
    return out


def trap_condition_cases(count, seed, nontrivial=True):
    """Random (graph, config, set) triples whose odd-check condition holds."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(8, 30))
        m = int(rng.integers(3, n))
        g = random_sparse_graph(n, m, rng, dmin=2, dmax=min(6, m))
        cfg = DecoderConfig.majority(g, random_orders(g, rng),
                                     max_iterations=int(rng.integers(5, 40)),
                                     early_stop=bool(rng.integers(2)))
        s = rng.choice(n, size=int(rng.integers(1, 7)), replace=False).tolist()
        rep = check_theorem1(g, cfg, s)
        if rep.condition_holds and (rep.odd_checks or not nontrivial):
            out.append((g, cfg, s))
    return out


def chi_square_weights(hist, n, eps, frames):
    """p-value of the input-weight histogram against Binomial(n, eps), tails pooled."""
    obs = np.array([hist.get(w, [0, 0])[0] for w in range(n + 1)], dtype=float)
    exp = frames * binom.pmf(np.arange(n + 1), n, eps)
    # pool bins from both ends until every pooled bin expects at least 5
    keep = np.flatnonzero(exp >= 5)
    lo, hi = keep[0], keep[-1]
    o = np.concatenate([[obs[:lo + 1].sum()], obs[lo + 1:hi], [obs[hi:].sum()]])
    e = np.concatenate([[exp[:lo + 1].sum()], exp[lo + 1:hi], [exp[hi:].sum()]])
    e *= o.sum() / e.sum()
    return chisquare(o, e).pvalue


@pytest.fixture
def six_cycle_graph():
    """Two 6-cycles of degree-3 variables; {0,1,2} and {3,4,5} each trap GA.

    Checks 0-2 close the cycle 0-1-2; checks 3-5 hang one per cycle
    variable and lead into the second cycle 3-4-5 (checks 6-8).
    """
    var_adj = [(0, 2, 3), (0, 1, 4), (1, 2, 5), (3, 6, 7), (4, 6, 8), (5, 7, 8)]
    return TannerGraph.from_var_adj(var_adj, 9)


@pytest.fixture
def ring_code():
    """Variables 0-3 form a ring through checks 0-3, so {0,1,2,3} is a codeword.

    Variable 4 hangs off check 3 and the degree-1 check 4.
    """
    var_adj = [(0, 3), (0, 1), (1, 2), (2, 3), (3, 4)]
    return TannerGraph.from_var_adj(var_adj, 5)


@pytest.fixture(scope="session")
def code200():
    return random_regular_graph(200, 3, 6, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
