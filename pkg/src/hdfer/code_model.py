"""Tanner graph representation, alist I/O and structural properties."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class AlistError(ValueError):
    """Malformed alist input. ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite variable/check adjacency of an LDPC code.

    Indices are 0-based. Instances are immutable and may be shared between
    worker threads.
    """

    n: int
    m: int
    var_adj: tuple[tuple[int, ...], ...]
    chk_adj: tuple[tuple[int, ...], ...]
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.var_adj) != self.n or len(self.chk_adj) != self.m:
            raise ValueError("adjacency list lengths do not match n, m")
        for j, checks in enumerate(self.var_adj):
            if not checks:
                raise ValueError(f"variable node {j} has degree 0")
            if len(set(checks)) != len(checks):
                raise ValueError(f"duplicate edge at variable node {j}")
            for c in checks:
                if not 0 <= c < self.m:
                    raise ValueError(f"check index {c} out of range at variable node {j}")
        for c, vars_ in enumerate(self.chk_adj):
            if not vars_:
                raise ValueError(f"check node {c} has degree 0")
            if len(set(vars_)) != len(vars_):
                raise ValueError(f"duplicate edge at check node {c}")
        from_vars = {(j, c) for j, checks in enumerate(self.var_adj) for c in checks}
        from_chks = {(j, c) for c, vars_ in enumerate(self.chk_adj) for j in vars_}
        if from_vars != from_chks:
            raise ValueError("variable and check adjacency are not symmetric")

    @classmethod
    def from_var_adj(cls, var_adj, m: int | None = None) -> "TannerGraph":
        var_adj = tuple(tuple(int(c) for c in checks) for checks in var_adj)
        if m is None:
            m = 1 + max(c for checks in var_adj for c in checks)
        chk_lists: list[list[int]] = [[] for _ in range(m)]
        for j, checks in enumerate(var_adj):
            for c in checks:
                if not 0 <= c < m:
                    raise ValueError(f"check index {c} out of range at variable node {j}")
                chk_lists[c].append(j)
        return cls(len(var_adj), m, var_adj, tuple(tuple(v) for v in chk_lists))

    @classmethod
    def from_parity_matrix(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        m, n = H.shape
        var_adj = [tuple(int(c) for c in np.flatnonzero(H[:, j])) for j in range(n)]
        return cls.from_var_adj(var_adj, m)

    @property
    def var_degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.var_adj)

    @property
    def chk_degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.chk_adj)

    @property
    def num_edges(self) -> int:
        return sum(self.var_degrees)

    def parity_matrix(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for j, checks in enumerate(self.var_adj):
            H[list(checks), j] = 1
        return H

    def edge_arrays(self):
        """CSR-style edge arrays used by the compiled decoding kernels.

        Edges are numbered in variable-major order. Returns
        ``(var_ptr, edge_chk, edge_var, chk_ptr, chk_edges)`` where
        ``chk_edges`` lists, per check, the ids of its incident edges.
        """
        if "csr" not in self._arrays:
            degs = np.array(self.var_degrees, dtype=np.int64)
            var_ptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(degs, out=var_ptr[1:])
            edge_chk = np.array([c for checks in self.var_adj for c in checks], dtype=np.int64)
            edge_var = np.repeat(np.arange(self.n, dtype=np.int64), degs)
            cdegs = np.array(self.chk_degrees, dtype=np.int64)
            chk_ptr = np.zeros(self.m + 1, dtype=np.int64)
            np.cumsum(cdegs, out=chk_ptr[1:])
            chk_edges = np.empty(len(edge_chk), dtype=np.int64)
            fill = chk_ptr[:-1].copy()
            for e, c in enumerate(edge_chk):
                chk_edges[fill[c]] = e
                fill[c] += 1
            self._arrays["csr"] = (var_ptr, edge_chk, edge_var, chk_ptr, chk_edges)
        return self._arrays["csr"]

    def digest(self) -> str:
        """SHA-256 of the canonical alist rendering (whitespace independent)."""
        return hashlib.sha256(emit_alist(self).encode("ascii")).hexdigest()

    def same_edges(self, other: "TannerGraph") -> bool:
        return (
            self.n == other.n
            and self.m == other.m
            and all(set(a) == set(b) for a, b in zip(self.var_adj, other.var_adj))
        )


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distributions, ``{degree: fraction}`` per side."""

    lambda_coeffs: dict[int, float]
    rho_coeffs: dict[int, float]

    def __post_init__(self):
        for name, coeffs in (("lambda", self.lambda_coeffs), ("rho", self.rho_coeffs)):
            if any(not 0.0 <= v <= 1.0 for v in coeffs.values()):
                raise ValueError(f"{name} coefficient outside [0, 1]")
            if abs(math.fsum(coeffs.values()) - 1.0) > 1e-9:
                raise ValueError(f"{name} coefficients do not sum to 1")


def degree_distributions(g: TannerGraph) -> DegreeDistribution:
    edges = g.num_edges

    def side(degrees):
        per_degree: dict[int, int] = {}
        for d in degrees:
            per_degree[d] = per_degree.get(d, 0) + d
        return {d: cnt / edges for d, cnt in sorted(per_degree.items())}

    return DegreeDistribution(side(g.var_degrees), side(g.chk_degrees))


def has_4cycles(g: TannerGraph) -> bool:
    """True iff two distinct variable nodes share at least two checks."""
    seen: set[tuple[int, int]] = set()
    for vars_ in g.chk_adj:
        for pair in combinations(sorted(vars_), 2):
            if pair in seen:
                return True
            seen.add(pair)
    return False


def _alist_lines(text: str):
    """Yield ``(line_number, [ints])`` for every non-blank line."""
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        try:
            yield lineno, [int(t) for t in tokens]
        except ValueError:
            raise AlistError(f"non-integer token in {raw.strip()!r}", lineno) from None


def load_alist(text: str) -> TannerGraph:
    """Parse alist text into a validated :class:`TannerGraph`.

    Zero padding after the declared degree is accepted and ignored.
    """
    lines = list(_alist_lines(text))

    def take(idx, count, what):
        if idx >= len(lines):
            raise AlistError(f"unexpected end of input while reading {what}",
                             lines[-1][0] if lines else 1)
        lineno, vals = lines[idx]
        if count is not None and len(vals) != count:
            raise AlistError(f"{what}: expected {count} values, got {len(vals)}", lineno)
        return lineno, vals

    ln, (n, m) = take(0, 2, "header 'n m'")
    if n < 1 or m < 1:
        raise AlistError("n and m must be positive", ln)
    ln, (max_dv, max_dc) = take(1, 2, "maximum degrees")
    ln, var_deg = take(2, n, "variable degrees")
    if any(not 1 <= d <= max_dv for d in var_deg):
        raise AlistError("variable degree outside [1, max_var_degree]", ln)
    ln, chk_deg = take(3, m, "check degrees")
    if any(not 1 <= d <= max_dc for d in chk_deg):
        raise AlistError("check degree outside [1, max_chk_degree]", ln)

    def adjacency(start, count, degrees, bound, width, label, other):
        rows = []
        for k in range(count):
            lineno, vals = take(start + k, None, f"{label} {k + 1} adjacency")
            d = degrees[k]
            if len(vals) < d or len(vals) > max(width, d):
                raise AlistError(f"{label} {k + 1}: expected {d} entries "
                                 f"(padded to at most {width}), got {len(vals)}", lineno)
            head, pad = vals[:d], vals[d:]
            if any(v == 0 for v in head):
                raise AlistError(f"{label} {k + 1}: zero entry within declared degree {d}", lineno)
            if any(v != 0 for v in pad):
                raise AlistError(f"{label} {k + 1}: more nonzero entries than declared degree {d}",
                                 lineno)
            if any(not 1 <= v <= bound for v in head):
                raise AlistError(f"{label} {k + 1}: {other} index out of range [1, {bound}]", lineno)
            if len(set(head)) != d:
                raise AlistError(f"{label} {k + 1}: duplicate edge", lineno)
            rows.append((lineno, tuple(v - 1 for v in head)))
        return rows

    var_rows = adjacency(4, n, var_deg, m, max_dv, "variable", "check")
    chk_rows = adjacency(4 + n, m, chk_deg, n, max_dc, "check", "variable")
    if len(lines) > 4 + n + m:
        raise AlistError("trailing data after check adjacency", lines[4 + n + m][0])

    edges = {(j, c) for j, (_, row) in enumerate(var_rows) for c in row}
    for c, (lineno, row) in enumerate(chk_rows):
        for j in row:
            if (j, c) not in edges:
                raise AlistError(f"check {c + 1} lists variable {j + 1}, "
                                 "which does not list it back", lineno)
    if len(edges) != sum(chk_deg):
        raise AlistError("variable-side and check-side edge counts differ", chk_rows[-1][0])

    return TannerGraph(n, m, tuple(r for _, r in var_rows), tuple(r for _, r in chk_rows))


def emit_alist(g: TannerGraph, pad: bool = True) -> str:
    """Render ``g`` as alist text, zero-padding rows to the maximum degree."""
    max_dv = max(g.var_degrees)
    max_dc = max(g.chk_degrees)

    def row(idx, width):
        vals = [i + 1 for i in sorted(idx)]
        if pad:
            vals += [0] * (width - len(vals))
        return " ".join(map(str, vals))

    out = [f"{g.n} {g.m}", f"{max_dv} {max_dc}",
           " ".join(map(str, g.var_degrees)), " ".join(map(str, g.chk_degrees))]
    out += [row(a, max_dv) for a in g.var_adj]
    out += [row(a, max_dc) for a in g.chk_adj]
    return "\n".join(out) + "\n"


def read_alist(path) -> TannerGraph:
    with open(path, "r", encoding="ascii") as fh:
        return load_alist(fh.read())


def random_regular_graph(n: int, dv: int, dc: int, seed: int = 0,
                         avoid_4cycles: bool = True, max_tries: int = 1000) -> TannerGraph:
    """Random (dv, dc)-regular Tanner graph.

    Edges are placed one variable at a time, each variable choosing among the
    checks with the most free sockets and, when ``avoid_4cycles`` is set,
    skipping checks that would close a length-4 cycle. Restarts on dead ends.
    """
    if (n * dv) % dc:
        raise ValueError("n * dv must be divisible by dc")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        free = np.full(m, dc)
        chk_vars: list[set[int]] = [set() for _ in range(m)]
        var_adj: list[tuple[int, ...]] = []
        ok = True
        for j in range(n):
            chosen: list[int] = []
            # variables already sharing a check with j
            near: set[int] = set()
            for _ in range(dv):
                cand = [c for c in range(m) if free[c] > 0 and c not in chosen
                        and not (avoid_4cycles and chk_vars[c] & near)]
                if not cand:
                    ok = False
                    break
                top = max(free[c] for c in cand)
                best = [c for c in cand if free[c] == top]
                c = int(best[rng.integers(len(best))])
                chosen.append(c)
                near |= chk_vars[c]
            if not ok:
                break
            for c in chosen:
                free[c] -= 1
                chk_vars[c].add(j)
            var_adj.append(tuple(sorted(chosen)))
        if ok:
            return TannerGraph.from_var_adj(var_adj, m)
    raise RuntimeError("could not build graph; relax constraints or change seed")
