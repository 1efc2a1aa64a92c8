"""Hard-decision majority-based (MB) message passing, Gallager A included.

The all-one codeword is assumed transmitted, so the channel message of node
j is -1 exactly when j belongs to the initial error pattern. Internally
messages are bits (0 for +1, 1 for -1) and check updates are XORs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .code_model import TannerGraph


def max_order(degree: int) -> int:
    """Largest admissible MB order for a variable of the given degree.

    Degree-1 nodes have no extrinsic inputs; they are assigned order 0.
    """
    return max(0, degree - 1 - math.ceil(degree / 2))


DECISION_RULES = ("threshold", "majority")


@dataclass(frozen=True)
class DecoderConfig:
    """Per-node MB orders plus run controls.

    ``decision`` selects the per-iteration bit decision: ``"threshold"`` flips
    a bit when at least ceil(d_j/2) + omega_j of all d_j check messages
    disagree with the channel; ``"majority"`` takes a strict majority over
    the channel value and all check messages (ties keep the channel value).
    Message updates are the same under both.
    """

    orders: tuple[int, ...]
    max_iterations: int = 100
    early_stop: bool = True
    name: str = "mb"
    decision: str = "threshold"

    @classmethod
    def gallager_a(cls, g: TannerGraph, max_iterations: int = 100,
                   early_stop: bool = True, decision: str = "threshold") -> "DecoderConfig":
        return cls(tuple(max_order(d) for d in g.var_degrees), max_iterations, early_stop, "ga",
                   decision)

    @classmethod
    def majority(cls, g: TannerGraph, omega: int | Sequence[int] = 0,
                 max_iterations: int = 100, early_stop: bool = True,
                 decision: str = "threshold") -> "DecoderConfig":
        if isinstance(omega, int):
            orders = (omega,) * g.n
        else:
            orders = tuple(int(w) for w in omega)
        cfg = cls(orders, max_iterations, early_stop, "mb", decision)
        cfg.validate(g)
        return cfg

    def validate(self, g: TannerGraph) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.decision not in DECISION_RULES:
            raise ValueError(f"unknown decision rule {self.decision!r}")
        if len(self.orders) != g.n:
            raise ValueError(f"expected {g.n} per-node orders, got {len(self.orders)}")
        for j, (w, d) in enumerate(zip(self.orders, g.var_degrees)):
            if not 0 <= w <= max_order(d):
                raise ValueError(f"order {w} of variable {j} outside [0, {max_order(d)}] "
                                 f"for degree {d}")

    def thresholds(self, g: TannerGraph) -> np.ndarray:
        """Flip threshold ceil(d_j/2) + omega_j per variable node."""
        return np.array([math.ceil(d / 2) + w for d, w in zip(g.var_degrees, self.orders)],
                        dtype=np.int64)

    def decision_thresholds(self, g: TannerGraph) -> np.ndarray:
        if self.decision == "threshold":
            return self.thresholds(g)
        # smallest k with k > (d - k) + 1
        return np.array([(d + 1) // 2 + 1 for d in g.var_degrees], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"name": self.name, "orders": list(self.orders),
                "max_iterations": self.max_iterations, "early_stop": self.early_stop,
                "decision": self.decision}

    @classmethod
    def from_dict(cls, d: dict) -> "DecoderConfig":
        return cls(tuple(d["orders"]), d["max_iterations"], d["early_stop"], d.get("name", "mb"),
                   d.get("decision", "threshold"))


@dataclass(frozen=True)
class ErrorPattern:
    positions: tuple[int, ...]

    def __init__(self, positions: Iterable[int] = ()):
        pos = tuple(sorted(int(p) for p in positions))
        if len(set(pos)) != len(pos):
            raise ValueError("duplicate positions in error pattern")
        object.__setattr__(self, "positions", pos)

    @property
    def weight(self) -> int:
        return len(self.positions)

    def check(self, n: int) -> None:
        if self.positions and not (0 <= self.positions[0] and self.positions[-1] < n):
            raise ValueError(f"error position outside [0, {n})")

    def to_bits(self, n: int) -> np.ndarray:
        self.check(n)
        bits = np.zeros(n, dtype=np.uint8)
        bits[list(self.positions)] = 1
        return bits

    def __iter__(self):
        return iter(self.positions)

    def __len__(self):
        return len(self.positions)


@dataclass
class DecodeTrace:
    """Output error sets per iteration.

    ``error_sets[0]`` is the channel hard decision (iteration 0), so
    ``len(error_sets) == iterations_run + 1``.
    """

    success: bool
    iterations_run: int
    error_sets: list[frozenset[int]]
    final_error_weight: int
    syndrome_satisfied: bool
    max_iterations: int
    initial_weight: int = field(default=0)


class Decoder:
    """MB decoder bound to one graph and configuration.

    Owns scratch buffers, so use one instance per worker thread.
    """

    def __init__(self, g: TannerGraph, cfg: DecoderConfig):
        cfg.validate(g)
        self.g = g
        self.cfg = cfg
        self.arrays = g.edge_arrays()
        self.thresh = cfg.thresholds(g)
        self.dthresh = cfg.decision_thresholds(g)
        ne = g.num_edges
        self._v2c = np.empty(ne, np.uint8)
        self._c2v = np.empty(ne, np.uint8)
        self._dec = np.empty(g.n, np.uint8)
        self._trace = np.empty((cfg.max_iterations + 1, g.n), np.uint8)

    def decode_word(self, received, record: bool = True):
        """Decode an arbitrary received bit vector.

        Returns ``(decisions, trace_rows)`` where ``trace_rows`` is the
        per-iteration decision matrix (empty when ``record`` is false).
        """
        received = np.ascontiguousarray(received, dtype=np.uint8)
        its = _kernels.decode_word(*self.arrays, self.thresh, self.dthresh, received,
                                   self.cfg.max_iterations, self.cfg.early_stop, record,
                                   self._trace, self._v2c, self._c2v, self._dec)
        rows = self._trace[: its + 1].copy() if record else self._trace[:0].copy()
        return self._dec.copy(), rows

    def decode(self, initial: ErrorPattern | Iterable[int]) -> DecodeTrace:
        if not isinstance(initial, ErrorPattern):
            initial = ErrorPattern(initial)
        final, rows = self.decode_word(initial.to_bits(self.g.n))
        error_sets = [frozenset(np.flatnonzero(r).tolist()) for r in rows]
        synd = bool(_kernels.syndrome_ok(final, *self.arrays[3:], self.arrays[2]))
        weight = int(final.sum())
        return DecodeTrace(
            success=weight == 0 and synd,
            iterations_run=len(rows) - 1,
            error_sets=error_sets,
            final_error_weight=weight,
            syndrome_satisfied=synd,
            max_iterations=self.cfg.max_iterations,
            initial_weight=initial.weight,
        )

    def residual_weights(self, errors: np.ndarray) -> np.ndarray:
        """Output error weight for each row of a (frames, n) 0/1 matrix."""
        errors = np.ascontiguousarray(errors, dtype=np.uint8)
        out = np.empty(errors.shape[0], dtype=np.int64)
        _kernels.decode_batch(*self.arrays, self.thresh, self.dthresh, errors,
                              self.cfg.max_iterations, self.cfg.early_stop, out)
        return out


def decode(g: TannerGraph, cfg: DecoderConfig, initial) -> DecodeTrace:
    return Decoder(g, cfg).decode(initial)


def check_syndrome(g: TannerGraph, errors) -> bool:
    """True iff every check has an even number of neighbours in ``errors``."""
    bits = ErrorPattern(errors).to_bits(g.n) if not isinstance(errors, np.ndarray) else errors
    var_ptr, edge_chk, edge_var, chk_ptr, chk_edges = g.edge_arrays()
    return bool(_kernels.syndrome_ok(np.ascontiguousarray(bits, dtype=np.uint8),
                                     chk_ptr, chk_edges, edge_var))
