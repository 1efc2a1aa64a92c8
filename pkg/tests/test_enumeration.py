import json
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdfer import _kernels
from hdfer.decoder import DecoderConfig
from hdfer.enumeration import (Checkpoint, EnumerationInterrupted, EnumerationResult,
                               _binom_table, find_j, naive_find_j, pattern_from_rank, rank_of)

from conftest import small_codes


def colex_all(n, w):
    """All w-subsets of range(n) sorted colexicographically (by reversed tuple)."""
    return sorted(combinations(range(n), w), key=lambda c: c[::-1])


def test_colex_examples():
    assert pattern_from_rank(5, 2, 0).positions == (0, 1)
    assert pattern_from_rank(5, 2, 9).positions == (3, 4)
    assert [pattern_from_rank(5, 2, r).positions for r in range(10)] == colex_all(5, 2)


def test_colex_round_trip():
    for r in range(comb(8, 3)):
        assert rank_of(pattern_from_rank(8, 3, r)) == r


def test_rank_out_of_range():
    with pytest.raises(ValueError):
        pattern_from_rank(5, 2, 10)
    with pytest.raises(ValueError):
        pattern_from_rank(5, 2, -1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.data())
def test_kernel_unrank_and_successor(n, data):
    w = data.draw(st.integers(1, n))
    binom = _binom_table(n, w)
    r = data.draw(st.integers(0, comb(n, w) - 1))
    out = np.empty(w, np.int64)
    _kernels.colex_unrank(r, w, binom, out)
    assert tuple(out) == pattern_from_rank(n, w, r).positions
    more = _kernels.colex_next(out, w, n)
    if r + 1 < comb(n, w):
        assert more and tuple(out) == pattern_from_rank(n, w, r + 1).positions
    else:
        assert not more


def _key(res):
    return (res.j_min, res.e_j_count, res.failures_by_class, res.tested_per_weight,
            sorted(map(tuple, res.failing_patterns)))


@pytest.mark.parametrize("g, cfg", small_codes(4, seed=5))
def test_matches_naive_oracle(g, cfg):
    ref = naive_find_j(g, cfg, 4)
    for workers in (1, 3):
        got = find_j(g, cfg, 4, workers, chunk_size=7)
        assert _key(got) == _key(ref)


def test_matches_exhaustive_decoding_of_all_words():
    """Decode every one of the 2^n error patterns and bin failures by weight."""
    from hdfer.decoder import Decoder
    for g, cfg in small_codes(2, seed=8):
        if g.n > 16:
            continue
        dec = Decoder(g, cfg)
        fails = {}
        for x in range(1 << g.n):
            bits = np.array([(x >> k) & 1 for k in range(g.n)], dtype=np.uint8)
            final, _ = dec.decode_word(bits, record=False)
            if final.any():
                w = int(bits.sum())
                fails[w] = fails.get(w, 0) + 1
        j = min(fails)
        res = find_j(g, cfg, g.n)
        assert (res.j_min, res.e_j_count) == (j, fails[j])


def test_cost_accounting(code200):
    cfg = DecoderConfig.gallager_a(code200)
    res = find_j(code200, cfg, 2)
    assert res.j_min is None and res.e_j_count == 0
    assert res.tested_per_weight == {1: 200, 2: comb(200, 2)}
    assert res.decodes == 200 + comb(200, 2)


def test_first_failing_weight_definition():
    # two degree-1 variables on one check: the pair looks like a codeword-free
    # error the decoder cannot see, single errors are fixed by the check
    from hdfer.code_model import TannerGraph
    g = TannerGraph.from_var_adj([(0, 1), (0, 1), (1,)], 2)
    cfg = DecoderConfig.gallager_a(g, max_iterations=10)
    ref = naive_find_j(g, cfg, 3)
    res = find_j(g, cfg, 3)
    assert _key(res) == _key(ref)
    assert res.j_min == min(len(p) for p in res.failing_patterns)


def test_resume_gives_identical_result(tmp_path):
    for g, cfg in small_codes(3, seed=21):
        full = find_j(g, cfg, 4, chunk_size=5)
        ck = tmp_path / "ck.json"
        res, stops, resume = None, 0, None
        while res is None:
            try:
                res = find_j(g, cfg, 4, workers=2, chunk_size=5, checkpoint_path=ck,
                             resume=resume, stop_after=3)
            except EnumerationInterrupted as exc:
                stops += 1
                resume = Checkpoint.load(ck)
                assert resume.to_dict() == exc.checkpoint.to_dict()
        assert stops >= 1
        assert _key(res) == _key(full)


def test_resume_rejects_other_code(tmp_path):
    (g1, cfg1), (g2, cfg2) = small_codes(2, seed=3)
    with pytest.raises(EnumerationInterrupted) as info:
        find_j(g1, cfg1, 3, stop_after=3)
    with pytest.raises(ValueError, match="different code"):
        find_j(g2, cfg2, 3, resume=info.value.checkpoint)


def test_result_json_round_trip():
    g, cfg = small_codes(1, seed=2)[0]
    res = find_j(g, cfg, 4)
    again = EnumerationResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert _key(again) == _key(res)


def test_store_cap_truncates_patterns_not_counts():
    g, cfg = small_codes(1, seed=5)[0]
    full = find_j(g, cfg, 4)
    capped = find_j(g, cfg, 4, store_cap=1)
    assert capped.e_j_count == full.e_j_count
    assert len(capped.failing_patterns) == min(1, full.e_j_count)
    assert capped.patterns_truncated == (full.e_j_count > 1)
