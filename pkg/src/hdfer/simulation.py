"""Monte Carlo simulation on the BSC and the N0 / M calibration procedures."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .code_model import TannerGraph
from .decoder import Decoder, DecoderConfig, ErrorPattern
from .estimation import EstimatorInput, fer_upper

log = logging.getLogger(__name__)

BLOCK = 4096
CAL_BAND = (0.005, 0.2)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent stream for frame block ``block``; frame order is fixed within it."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def wilson_interval(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + conf / 2)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, float(mid - half))
    hi = 1.0 if k == n else min(1.0, float(mid + half))
    return lo, hi


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    min_frame_errors: int = 100
    max_frames: int = 10**7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")


@dataclass
class SimResult:
    epsilon: float
    n: int
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    weight_histogram: dict[int, list[int]] = field(default_factory=dict)
    note: str = ""

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else 0.0

    @property
    def fer_ci(self) -> tuple[float, float]:
        return wilson_interval(self.frame_errors, self.frames)

    def csv_row(self) -> tuple:
        lo, hi = self.fer_ci
        return (self.epsilon, self.frames, self.frame_errors, self.fer, lo, hi, self.ber)

    def to_dict(self) -> dict:
        lo, hi = self.fer_ci
        return {
            "epsilon": self.epsilon, "n": self.n, "frames": self.frames,
            "frame_errors": self.frame_errors, "bit_errors": self.bit_errors,
            "fer": self.fer, "fer_ci_low": lo, "fer_ci_high": hi, "ber": self.ber,
            "weight_histogram": {str(k): v for k, v in sorted(self.weight_histogram.items())},
            "note": self.note,
        }


SIM_CSV_HEADER = ("epsilon", "frames", "frame_errors", "fer", "fer_ci_low", "fer_ci_high", "ber")


def _run_block(decoder: Decoder, eps: float, seed: int, block: int):
    rng = block_rng(seed, block)
    errors = (rng.random((BLOCK, decoder.g.n)) < eps).astype(np.uint8)
    weights = errors.sum(axis=1)
    residual = decoder.residual_weights(errors)
    return weights, residual


def simulate(g: TannerGraph, cfg: DecoderConfig, sim: SimConfig, workers: int = 1) -> SimResult:
    """Draw BSC frames until ``min_frame_errors`` failures or ``max_frames``.

    Frames are produced in blocks with per-block seeding and consumed in
    order, so the result depends only on (seed, config), not on ``workers``.
    """
    workers = max(1, int(workers))
    decoders = [Decoder(g, cfg) for _ in range(workers)]
    res = SimResult(sim.epsilon, g.n)
    hist_frames: dict[int, int] = {}
    hist_fail: dict[int, int] = {}
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    block = 0
    try:
        while res.frames < sim.max_frames and res.frame_errors < sim.min_frame_errors:
            ids = range(block, block + workers)
            block += workers
            if pool:
                outs = list(pool.map(lambda a: _run_block(decoders[a[0]], sim.epsilon, sim.seed, a[1]),
                                     enumerate(ids)))
            else:
                outs = [_run_block(decoders[0], sim.epsilon, sim.seed, b) for b in ids]
            for weights, residual in outs:
                take = min(BLOCK, sim.max_frames - res.frames)
                failed = residual[:take] > 0
                need = sim.min_frame_errors - res.frame_errors
                cum = np.cumsum(failed)
                if cum[-1] >= need:
                    take = int(np.searchsorted(cum, need)) + 1
                    failed = failed[:take]
                w = weights[:take]
                res.frames += take
                res.frame_errors += int(failed.sum())
                res.bit_errors += int(residual[:take].sum())
                for val, cnt in zip(*np.unique(w, return_counts=True)):
                    hist_frames[int(val)] = hist_frames.get(int(val), 0) + int(cnt)
                for val, cnt in zip(*np.unique(w[failed], return_counts=True)):
                    hist_fail[int(val)] = hist_fail.get(int(val), 0) + int(cnt)
                if res.frames >= sim.max_frames or res.frame_errors >= sim.min_frame_errors:
                    break
    finally:
        if pool:
            pool.shutdown()
    res.weight_histogram = {k: [v, hist_fail.get(k, 0)] for k, v in sorted(hist_frames.items())}
    if res.frame_errors == 0:
        res.note = (f"no frame errors in {res.frames} frames; "
                    f"FER < {3.0 / res.frames:.3g} at ~95% confidence (rule of three)")
    elif res.frame_errors < sim.min_frame_errors:
        res.note = f"max_frames reached with {res.frame_errors} < {sim.min_frame_errors} errors"
    return res


def uniform_weight_pattern(n: int, w: int, rng: np.random.Generator) -> ErrorPattern:
    """Uniformly random w-subset of range(n) via a partial Fisher-Yates shuffle."""
    if not 0 <= w <= n:
        raise ValueError("need 0 <= w <= n")
    perm = np.arange(n)
    for i in range(w):
        k = int(rng.integers(i, n))
        perm[i], perm[k] = perm[k], perm[i]
    return ErrorPattern(perm[:w].tolist())


@dataclass
class MEstimate:
    n0: int
    trials: int
    mean_all: float
    failures: int
    mean_failures: float | None

    def to_dict(self) -> dict:
        return {"n0": self.n0, "trials": self.trials, "m_avg": self.mean_all,
                "m_avg_failures_only": self.mean_failures, "failures": self.failures}


def estimate_m_detailed(g: TannerGraph, cfg: DecoderConfig, n0: int, trials: int,
                        seed: int = 0) -> MEstimate:
    """Decode ``trials`` random weight-N0 patterns and average the residual errors.

    The default average includes corrected patterns (contributing 0); the
    failures-only average is reported alongside.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= n0 <= g.n:
        raise ValueError("need 0 <= N0 <= n")
    dec = Decoder(g, cfg)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    residual = np.empty(trials, dtype=np.int64)
    step = BLOCK
    for start in range(0, trials, step):
        stop = min(trials, start + step)
        keys = rng.random((stop - start, g.n))
        # the n0 smallest keys of each row form a uniform n0-subset
        errors = np.zeros((stop - start, g.n), dtype=np.uint8)
        if n0:
            idx = np.argpartition(keys, n0 - 1, axis=1)[:, :n0]
            np.put_along_axis(errors, idx, 1, axis=1)
        residual[start:stop] = dec.residual_weights(errors)
    fails = residual[residual > 0]
    return MEstimate(n0, trials, float(residual.mean()), int(fails.size),
                     float(fails.mean()) if fails.size else None)


def estimate_m(g: TannerGraph, cfg: DecoderConfig, n0: int, trials: int, seed: int = 0) -> float:
    return estimate_m_detailed(g, cfg, n0, trials, seed).mean_all


@dataclass
class CalibrationReport:
    n0: int
    objective: dict[int, float]
    points: list[tuple[float, float]]
    used_points: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "n0": self.n0,
            "objective": {str(k): v for k, v in self.objective.items()},
            "points": [{"epsilon": e, "fer_sim": f} for e, f in self.points],
            "used_points": [{"epsilon": e, "fer_sim": f} for e, f in self.used_points],
        }


class CalibrationError(ValueError):
    pass


def select_n0(n: int, j: int, e_j_count: int, points, band=CAL_BAND) -> CalibrationReport:
    """Pick N in {J+1..n} minimising sum |log10 FER_U(N) - log10 FER_sim| over ``points``.

    ``points`` are ``(epsilon, simulated FER)`` pairs; only those whose FER
    lies inside ``band`` are used. Ties go to the smaller N.
    """
    points = [(float(e), float(f)) for e, f in points]
    used = [(e, f) for e, f in points if band[0] <= f <= band[1]]
    if not used:
        raise CalibrationError(
            f"no simulated FER inside [{band[0]}, {band[1]}]; choose crossover probabilities "
            "giving FER around 0.01-0.1")
    inp = EstimatorInput(n, j, e_j_count)
    objective: dict[int, float] = {}
    best, best_val = None, math.inf
    for cap in range(j + 1, n + 1):
        val = math.fsum(abs(math.log10(max(fer_upper(inp, cap, e), 1e-300)) - math.log10(f))
                        for e, f in used)
        objective[cap] = val
        if val < best_val:
            best, best_val = cap, val
    return CalibrationReport(best, objective, points, used)


def calibrate_n0(g: TannerGraph, cfg: DecoderConfig, j: int, e_j_count: int, eps_points,
                 min_frame_errors: int = 100, max_frames: int = 10**5, seed: int = 0,
                 workers: int = 1) -> tuple[CalibrationReport, list[SimResult]]:
    """Simulate at each of ``eps_points`` and choose N0 from the results."""
    sims = [simulate(g, cfg, SimConfig(e, min_frame_errors, max_frames, seed + k), workers)
            for k, e in enumerate(eps_points)]
    report = select_n0(g.n, j, e_j_count, [(s.epsilon, s.fer) for s in sims])
    return report, sims
