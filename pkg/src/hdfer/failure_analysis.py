"""Decoder failure taxonomy and the odd-check trapping-set condition."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .code_model import TannerGraph
from .decoder import DecodeTrace, Decoder, DecoderConfig, ErrorPattern

FIXED = "fixed"
OSCILLATORY = "oscillatory"
RANDOM_LIKE = "random_like"
KINDS = (FIXED, OSCILLATORY, RANDOM_LIKE)


@dataclass(frozen=True)
class FailureClass:
    kind: str
    period: int | None
    transition_length: int | None
    steady_state_support: tuple[int, ...]
    final_error_weight: int
    initial_weight: int

    @property
    def weight_growth(self) -> float:
        return self.final_error_weight / self.initial_weight if self.initial_weight else math.inf

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period,
            "transition_length": self.transition_length,
            "steady_state_support": list(self.steady_state_support),
            "final_error_weight": self.final_error_weight,
            "initial_weight": self.initial_weight,
        }


def _periodic_tail(states: list) -> tuple[int, int] | None:
    """Smallest (t, p) such that states[l] == states[l + p] for all l >= t.

    At least one full period must repeat inside the horizon, i.e.
    ``t + 2p - 1 <= len(states) - 1``; a tail seen only once is not evidence
    of periodicity.
    """
    last = len(states) - 1
    best = None
    # Only the shortest period matters for a given tail; scan t ascending.
    for t in range(last):
        for p in range(1, (last - t + 1) // 2 + 1):
            if all(states[l] == states[l + p] for l in range(t, last - p + 1)):
                best = (t, p)
                break
        if best:
            return best
    return None


def classify(trace: DecodeTrace) -> FailureClass:
    """Classify a failed decoding trace as fixed, oscillatory or random-like."""
    if trace.success:
        raise ValueError("classify() requires a failed decoding trace")
    states = trace.error_sets
    if trace.syndrome_satisfied:
        # Decoder stopped on a wrong codeword: the output is final.
        t, p = len(states) - 1, 1
    else:
        tail = _periodic_tail(states)
        if tail is None:
            return FailureClass(RANDOM_LIKE, None, None, tuple(sorted(states[-1])),
                                trace.final_error_weight, trace.initial_weight)
        t, p = tail
    support = frozenset().union(*states[t:t + p])
    return FailureClass(FIXED if p == 1 else OSCILLATORY, p, t, tuple(sorted(support)),
                        trace.final_error_weight, trace.initial_weight)


@dataclass(frozen=True)
class TrappingSetReport:
    set: tuple[int, ...]
    odd_checks: tuple[int, ...]
    condition_holds: bool
    max_violating_node: int | None

    def to_dict(self) -> dict:
        return {
            "set": list(self.set),
            "odd_checks": list(self.odd_checks),
            "condition_holds": self.condition_holds,
            "max_violating_node": self.max_violating_node,
        }


def odd_checks(g: TannerGraph, s) -> set[int]:
    """Checks with odd degree in the subgraph induced by ``s``."""
    odd: set[int] = set()
    for j in s:
        for c in g.var_adj[j]:
            odd ^= {c}
    return odd


def check_theorem1(g: TannerGraph, cfg: DecoderConfig, s) -> TrappingSetReport:
    """Test the sufficient condition for ``s`` to be a fixed trapping set.

    Every variable node j of the graph (inside ``s`` or not) may have at most
    ceil(d_j/2) + omega_j - 1 neighbours among the odd checks of ``s``.
    ``max_violating_node`` is the node exceeding its bound by the most.
    """
    s = ErrorPattern(s)
    s.check(g.n)
    odd = odd_checks(g, s.positions)
    thresh = cfg.thresholds(g)
    worst, worst_excess = None, 0
    for j, checks in enumerate(g.var_adj):
        excess = sum(c in odd for c in checks) - (int(thresh[j]) - 1)
        if excess > worst_excess:
            worst, worst_excess = j, excess
    return TrappingSetReport(s.positions, tuple(sorted(odd)), worst is None, worst)


def certify_trapping_set(g: TannerGraph, cfg: DecoderConfig, s,
                         decoder: Decoder | None = None) -> bool:
    """Decode from ``s`` and confirm the output never leaves ``s``."""
    s = ErrorPattern(s)
    if not check_theorem1(g, cfg, s).condition_holds:
        raise ValueError("condition does not hold for this set; certification not attempted")
    trace = (decoder or Decoder(g, cfg)).decode(s)
    target = frozenset(s.positions)
    return all(es == target for es in trace.error_sets)
