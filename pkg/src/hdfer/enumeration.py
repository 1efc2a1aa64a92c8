"""Exhaustive search for the smallest uncorrectable error weight J and |E_J|.

Weight-w patterns are addressed by colexicographic rank, so work splits into
contiguous rank ranges that are decoded independently and merged in rank
order. Results are therefore identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _kernels
from .code_model import TannerGraph
from .decoder import Decoder, DecoderConfig, ErrorPattern
from .failure_analysis import KINDS, classify

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def rank_of(pattern, n: int | None = None) -> int:
    """Colex rank of a subset: sum of C(c_i, i) over its sorted elements."""
    pos = sorted(pattern)
    if n is not None and pos and (pos[0] < 0 or pos[-1] >= n):
        raise ValueError("position outside [0, n)")
    return sum(comb(c, i) for i, c in enumerate(pos, start=1))


def pattern_from_rank(n: int, weight: int, rank: int) -> ErrorPattern:
    """The colex ``rank``-th subset of size ``weight`` drawn from range(n)."""
    total = comb(n, weight)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} outside [0, {total})")
    out = []
    r = rank
    for i in range(weight, 0, -1):
        # largest c with C(c, i) <= r
        c = i - 1
        while comb(c + 1, i) <= r:
            c += 1
        out.append(c)
        r -= comb(c, i)
    return ErrorPattern(out)


def _binom_table(n: int, w: int) -> np.ndarray:
    if comb(n + 1, w) >= 2**62:
        raise OverflowError(f"C({n}, {w}) too large for 64-bit ranks")
    t = np.zeros((n + 2, w + 1), dtype=np.int64)
    for a in range(n + 2):
        for b in range(min(a, w) + 1):
            t[a, b] = comb(a, b)
    return t


@dataclass
class EnumerationResult:
    n: int
    max_weight: int
    j_min: int | None
    e_j_count: int
    tested_per_weight: dict[int, int]
    failures_by_class: dict[str, int]
    failing_patterns: list[list[int]] = field(default_factory=list)
    patterns_truncated: bool = False

    @property
    def decodes(self) -> int:
        return sum(self.tested_per_weight.values())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "max_weight": self.max_weight,
            "j_min": self.j_min,
            "e_j_count": self.e_j_count,
            "tested_per_weight": {str(k): v for k, v in sorted(self.tested_per_weight.items())},
            "failures_by_class": dict(self.failures_by_class),
            "failing_patterns": self.failing_patterns,
            "patterns_truncated": self.patterns_truncated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnumerationResult":
        return cls(
            n=d["n"],
            max_weight=d["max_weight"],
            j_min=d["j_min"],
            e_j_count=d["e_j_count"],
            tested_per_weight={int(k): v for k, v in d["tested_per_weight"].items()},
            failures_by_class=dict(d["failures_by_class"]),
            failing_patterns=[list(p) for p in d.get("failing_patterns", [])],
            patterns_truncated=d.get("patterns_truncated", False),
        )


@dataclass
class Checkpoint:
    weight: int
    next_rank: int
    tested_per_weight: dict[int, int]
    failures: int
    failures_by_class: dict[str, int]
    failing_patterns: list[list[int]]
    code_hash: str
    decoder: dict

    def to_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "weight": self.weight,
            "next_rank": self.next_rank,
            "partial_counts": {
                "tested_per_weight": {str(k): v for k, v in self.tested_per_weight.items()},
                "failures": self.failures,
                "failures_by_class": self.failures_by_class,
            },
            "failing_patterns": self.failing_patterns,
            "code_hash": self.code_hash,
            "decoder": self.decoder,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Checkpoint":
        pc = d["partial_counts"]
        return cls(
            weight=d["weight"],
            next_rank=d["next_rank"],
            tested_per_weight={int(k): v for k, v in pc["tested_per_weight"].items()},
            failures=pc["failures"],
            failures_by_class=dict(pc["failures_by_class"]),
            failing_patterns=[list(p) for p in d["failing_patterns"]],
            code_hash=d["code_hash"],
            decoder=d["decoder"],
        )

    def save(self, path) -> None:
        write_json_atomic(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class EnumerationInterrupted(Exception):
    """Raised when ``stop_after`` patterns were tested; carries the checkpoint."""

    def __init__(self, checkpoint: Checkpoint):
        super().__init__(f"interrupted at weight {checkpoint.weight}, rank {checkpoint.next_rank}")
        self.checkpoint = checkpoint


def write_json_atomic(path, obj) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def find_j(g: TannerGraph, cfg: DecoderConfig, max_weight: int, workers: int = 1, *,
           chunk_size: int = 1 << 16, store_cap: int = 10**6,
           checkpoint_path=None, checkpoint_interval: int = 10**7,
           resume: Checkpoint | None = None, stop_after: int | None = None,
           progress=None) -> EnumerationResult:
    """Decode all patterns of weight 1, 2, ... until a weight has failures.

    That weight is enumerated completely. Failures are classified and, up to
    ``store_cap``, stored. ``j_min`` is None when nothing fails up to
    ``max_weight``. ``stop_after`` interrupts (raising
    :class:`EnumerationInterrupted`) once at least that many patterns were
    tested in this call; a checkpoint is written first when
    ``checkpoint_path`` is set.
    """
    if max_weight < 1:
        raise ValueError("max_weight must be >= 1")
    cfg.validate(g)
    workers = max(1, int(workers))
    code_hash = g.digest()
    arrays = g.edge_arrays()
    thresh = cfg.thresholds(g)
    dthresh = cfg.decision_thresholds(g)

    if resume is not None:
        if resume.code_hash != code_hash:
            raise ValueError("checkpoint was written for a different code")
        if resume.decoder != cfg.to_dict():
            raise ValueError("checkpoint was written for a different decoder configuration")
        weight, next_rank = resume.weight, resume.next_rank
        tested = dict(resume.tested_per_weight)
        failures = resume.failures
        by_class = {k: resume.failures_by_class.get(k, 0) for k in KINDS}
        stored = [list(p) for p in resume.failing_patterns]
    else:
        weight, next_rank = 1, 0
        tested, failures, stored = {}, 0, []
        by_class = {k: 0 for k in KINDS}

    decoders = [Decoder(g, cfg) for _ in range(workers)]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    done_here = 0
    since_ckpt = 0

    def snapshot(w, r):
        return Checkpoint(w, r, dict(tested), failures, dict(by_class),
                          [list(p) for p in stored], code_hash, cfg.to_dict())

    def run_range(args):
        w, lo, hi, binom = args
        buf = np.empty(hi - lo, dtype=np.int64)
        nf = _kernels.enumerate_range(*arrays, thresh, dthresh, g.n, w, lo, hi, binom,
                                      cfg.max_iterations, cfg.early_stop, buf)
        return buf[:nf].copy()

    t0 = time.perf_counter()
    try:
        while weight <= max_weight and weight <= g.n:
            total = comb(g.n, weight)
            binom = _binom_table(g.n, weight)
            while next_rank < total:
                # one round: `workers` consecutive chunks
                span = chunk_size * workers
                if stop_after is not None:
                    span = max(1, min(span, stop_after - done_here))
                hi_round = min(total, next_rank + span)
                step = -(-(hi_round - next_rank) // workers)
                jobs = [(weight, lo, min(lo + step, hi_round), binom)
                        for lo in range(next_rank, hi_round, step)]
                results = list(pool.map(run_range, jobs)) if pool else [run_range(j) for j in jobs]
                for ranks in results:
                    for r in ranks.tolist():
                        pat = pattern_from_rank(g.n, weight, r)
                        fc = classify(decoders[0].decode(pat))
                        by_class[fc.kind] += 1
                        failures += 1
                        if len(stored) < store_cap:
                            stored.append(list(pat.positions))
                count = hi_round - next_rank
                tested[weight] = tested.get(weight, 0) + count
                next_rank = hi_round
                done_here += count
                since_ckpt += count
                if progress:
                    progress(weight, next_rank, total)
                if checkpoint_path and since_ckpt >= checkpoint_interval:
                    snapshot(weight, next_rank).save(checkpoint_path)
                    since_ckpt = 0
                if stop_after is not None and done_here >= stop_after and (
                        next_rank < total or failures == 0):
                    ck = snapshot(weight, next_rank) if next_rank < total else snapshot(weight + 1, 0)
                    if checkpoint_path:
                        ck.save(checkpoint_path)
                    raise EnumerationInterrupted(ck)
            log.info("weight %d: %d patterns, %d failures (%.1fs)",
                     weight, total, failures, time.perf_counter() - t0)
            if failures:
                break
            weight += 1
            next_rank = 0
    finally:
        if pool:
            pool.shutdown()

    j_min = weight if failures else None
    return EnumerationResult(
        n=g.n,
        max_weight=max_weight,
        j_min=j_min,
        e_j_count=failures,
        tested_per_weight=tested,
        failures_by_class=by_class,
        failing_patterns=stored,
        patterns_truncated=failures > len(stored),
    )


def naive_find_j(g: TannerGraph, cfg: DecoderConfig, max_weight: int) -> EnumerationResult:
    """Unoptimised reference: itertools.combinations and one decode per pattern."""
    from itertools import combinations

    dec = Decoder(g, cfg)
    tested: dict[int, int] = {}
    by_class = {k: 0 for k in KINDS}
    stored = []
    for w in range(1, min(max_weight, g.n) + 1):
        for pat in combinations(range(g.n), w):
            tested[w] = tested.get(w, 0) + 1
            tr = dec.decode(pat)
            if not tr.success:
                by_class[classify(tr).kind] += 1
                stored.append(list(pat))
        if stored:
            return EnumerationResult(g.n, max_weight, w, len(stored), tested, by_class, stored)
    return EnumerationResult(g.n, max_weight, None, 0, tested, by_class, [])
