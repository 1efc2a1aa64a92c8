"""Command-line front end: enumerate, calibrate, estimate, simulate, check sets.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .code_model import (AlistError, TannerGraph, degree_distributions, emit_alist,
                         has_4cycles, random_regular_graph, read_alist)
from .decoder import DECISION_RULES, DecoderConfig
from .enumeration import (Checkpoint, EnumerationInterrupted, EnumerationResult, find_j,
                          write_json_atomic)
from .estimation import CSV_HEADER, EstimatorInput, curve_rows, eps_grid
from .failure_analysis import certify_trapping_set, check_theorem1
from .simulation import (SIM_CSV_HEADER, CalibrationError, SimConfig, calibrate_n0,
                         estimate_m_detailed, simulate)

log = logging.getLogger("hdfer")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3, 4
WORKERS_ENV = "HDFER_WORKERS"


class ValidationError(Exception):
    pass


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _load_code(path) -> TannerGraph:
    g = read_alist(path)
    if has_4cycles(g):
        log.warning("%s: Tanner graph contains cycles of length 4", path)
    return g


def _decoder_config(args, g: TannerGraph) -> DecoderConfig:
    if args.decoder == "ga":
        if args.omega is not None:
            raise ValidationError("--omega is not used with --decoder ga")
        return DecoderConfig.gallager_a(g, args.max_iter, not args.no_early_stop, args.decision)
    omega = args.omega if args.omega is not None else "0"
    if omega.lstrip("-").isdigit():
        orders = int(omega)
    else:
        orders = [int(t) for t in Path(omega).read_text().split()]
    return DecoderConfig.majority(g, orders, args.max_iter, not args.no_early_stop, args.decision)


def _read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _require_hash(artifact: dict, code_hash: str, path) -> None:
    if artifact.get("code_hash") != code_hash:
        raise ValidationError(f"{path} was produced for a different code "
                              f"({artifact.get('code_hash')!r} != {code_hash!r})")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _update_manifest(args, code_hash: str, decoder: dict | None, stage: str, out) -> None:
    """Record ``out`` (a path or list of paths) for ``stage`` in the run manifest."""
    first = out[0] if isinstance(out, list) else out
    path = Path(args.manifest) if args.manifest else Path(first).parent / "manifest.json"
    manifest = _read_json(path) if path.exists() else {}
    if manifest.get("code_hash", code_hash) != code_hash:
        raise ValidationError(f"manifest {path} belongs to a different code")
    manifest["code_hash"] = code_hash
    manifest["tool_version"] = __version__
    if decoder is not None:
        manifest["decoder"] = decoder
    manifest.setdefault("stage_outputs", {})[stage] = out if isinstance(out, list) else str(out)
    manifest.setdefault("timestamps", {})[stage] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    write_json_atomic(path, manifest)


def cmd_info(args) -> int:
    g = _load_code(args.code)
    dd = degree_distributions(g)
    print(json.dumps({
        "n": g.n, "m": g.m, "edges": g.num_edges, "code_hash": g.digest(),
        "lambda": {str(k): v for k, v in dd.lambda_coeffs.items()},
        "rho": {str(k): v for k, v in dd.rho_coeffs.items()},
        "has_4cycles": has_4cycles(g),
    }, indent=1))
    return EXIT_OK


def cmd_generate(args) -> int:
    g = random_regular_graph(args.n, args.dv, args.dc, seed=args.seed,
                             avoid_4cycles=not args.allow_4cycles)
    Path(args.out).write_text(emit_alist(g))
    print(f"wrote {args.out} (n={g.n}, m={g.m})")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    g = _load_code(args.code)
    cfg = _decoder_config(args, g)
    resume = None
    if args.resume:
        resume = Checkpoint.load(args.resume)
        if resume.code_hash != g.digest():
            raise ValidationError(f"checkpoint {args.resume} belongs to a different code")
        if resume.decoder != cfg.to_dict():
            raise ValidationError(f"checkpoint {args.resume} used a different decoder")
    ckpt = args.checkpoint or (args.resume if args.resume else None)
    t0 = time.perf_counter()
    try:
        res = find_j(g, cfg, args.max_weight, args.workers, checkpoint_path=ckpt,
                     checkpoint_interval=args.checkpoint_interval, resume=resume,
                     store_cap=args.store_cap, stop_after=args.stop_after)
    except EnumerationInterrupted as exc:
        print(f"interrupted: {exc}; resume with --resume {ckpt}", file=sys.stderr)
        return EXIT_BUDGET
    out = res.to_dict()
    out.update({"code_hash": g.digest(), "decoder": cfg.to_dict(), "tool_version": __version__})
    write_json_atomic(args.out, out)
    timing = {"wall_time_s": time.perf_counter() - t0}
    _update_manifest(args, g.digest(), cfg.to_dict(), "enumerate", args.out)
    print(json.dumps({"j_min": res.j_min, "e_j_count": res.e_j_count,
                      "failures_by_class": res.failures_by_class, **timing}))
    if res.j_min is None:
        print(f"no failures up to weight {args.max_weight}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _parse_n_list(text: str, n: int) -> list[int]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(n if tok == "n" else int(tok))
    return out


def cmd_estimate(args) -> int:
    enum = _read_json(args.from_)
    code_hash = enum.get("code_hash")
    res = EnumerationResult.from_dict(enum)
    if res.j_min is None:
        raise ValidationError(f"{args.from_} records no failures; J is undefined")
    n0, m_avg = args.n0, args.m_avg
    for extra in args.calibration or []:
        art = _read_json(extra)
        _require_hash(art, code_hash, extra)
        if n0 is None and "n0" in art and "objective" in art:
            n0 = art["n0"]
        if m_avg is None and "m_avg" in art:
            m_avg = art["m_avg"]
    if n0 is None:
        raise ValidationError("N0 missing: pass --n0 or a calibration report")
    if n0 < res.j_min:
        raise ValidationError(f"N0={n0} is smaller than J={res.j_min}")
    inp = EstimatorInput(res.n, res.j_min, res.e_j_count, n0, m_avg)
    grid = eps_grid(args.eps)
    caps = _parse_n_list(args.n_list, res.n) if args.n_list else [n0]
    out = Path(args.out)
    written = []
    for cap in caps:
        path = out if len(caps) == 1 else out.with_name(f"{out.stem}_N{cap}{out.suffix}")
        _write_csv(path, CSV_HEADER, curve_rows(inp, cap, grid))
        written.append(str(path))
    if code_hash:
        _update_manifest(args, code_hash, enum.get("decoder"), "estimate", written)
    print("\n".join(written))
    return EXIT_OK


def _eps_values(text: str):
    if ":" in text:
        return [float(e) for e in eps_grid(text)]
    vals = [float(t) for t in text.split(",")]
    for v in vals:
        if not 0.0 < v < 1.0:
            raise ValidationError(f"crossover probability {v} outside (0, 1)")
    return vals


def cmd_simulate(args) -> int:
    g = _load_code(args.code)
    cfg = _decoder_config(args, g)
    results = []
    for k, eps in enumerate(_eps_values(args.eps)):
        r = simulate(g, cfg, SimConfig(eps, args.min_frame_errors, args.max_frames, args.seed + k),
                     args.workers)
        log.info("eps=%g frames=%d errors=%d fer=%.3e", eps, r.frames, r.frame_errors, r.fer)
        results.append(r)
    _write_csv(args.out, SIM_CSV_HEADER, [r.csv_row() for r in results])
    if args.json:
        write_json_atomic(args.json, {"code_hash": g.digest(), "decoder": cfg.to_dict(),
                                      "seed": args.seed, "points": [r.to_dict() for r in results]})
    _update_manifest(args, g.digest(), cfg.to_dict(), "simulate", args.out)
    print(args.out)
    short = [r for r in results if r.frame_errors < args.min_frame_errors]
    for r in short:
        print(f"eps={r.epsilon}: {r.note}", file=sys.stderr)
    return EXIT_BUDGET if short else EXIT_OK


def cmd_calibrate_n0(args) -> int:
    g = _load_code(args.code)
    enum = _read_json(args.from_)
    _require_hash(enum, g.digest(), args.from_)
    res = EnumerationResult.from_dict(enum)
    if res.j_min is None:
        raise ValidationError(f"{args.from_} records no failures; J is undefined")
    cfg = DecoderConfig.from_dict(enum["decoder"])
    try:
        report, sims = calibrate_n0(g, cfg, res.j_min, res.e_j_count, _eps_values(args.eps),
                                    args.min_frame_errors, args.max_frames, args.seed,
                                    args.workers)
    except CalibrationError as exc:
        print(f"calibration rejected: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = report.to_dict()
    out.update({"code_hash": g.digest(), "decoder": cfg.to_dict(), "j": res.j_min,
                "e_j_count": res.e_j_count, "simulations": [s.to_dict() for s in sims]})
    write_json_atomic(args.out, out)
    _update_manifest(args, g.digest(), cfg.to_dict(), "calibrate_n0", args.out)
    print(json.dumps({"n0": report.n0}))
    return EXIT_OK


def cmd_estimate_m(args) -> int:
    g = _load_code(args.code)
    cfg = _decoder_config(args, g)
    est = estimate_m_detailed(g, cfg, args.n0, args.trials, args.seed)
    out = est.to_dict()
    out.update({"code_hash": g.digest(), "decoder": cfg.to_dict(), "seed": args.seed})
    write_json_atomic(args.out, out)
    _update_manifest(args, g.digest(), cfg.to_dict(), "estimate_m", args.out)
    print(json.dumps({"m_avg": est.mean_all, "m_avg_failures_only": est.mean_failures}))
    return EXIT_OK


def cmd_check_ts(args) -> int:
    g = _load_code(args.code)
    cfg = _decoder_config(args, g)
    s = [int(t) for t in args.set.split(",") if t.strip()]
    rep = check_theorem1(g, cfg, s)
    out = rep.to_dict()
    if rep.condition_holds and not args.no_certify:
        out["certified"] = certify_trapping_set(g, cfg, s)
    out["code_hash"] = g.digest()
    out["decoder"] = cfg.to_dict()
    text = json.dumps(out, indent=1)
    if args.out:
        write_json_atomic(args.out, out)
    print(text)
    if out.get("certified") is False:
        return EXIT_INVALID
    return EXIT_OK


def _add_decoder_flags(p):
    p.add_argument("--decoder", choices=("ga", "mb"), default="ga")
    p.add_argument("--omega", help="MB order: an integer, or a file with one order per variable")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--no-early-stop", action="store_true",
                   help="always run --max-iter iterations")
    p.add_argument("--decision", choices=DECISION_RULES, default="threshold",
                   help="bit decision rule (threshold: same count as the messages)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hdfer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--manifest", help="run manifest path (default: next to the output)")
    sub = ap.add_subparsers(dest="cmd", required=True)
    workers = dict(type=int, default=_default_workers(),
                   help=f"worker threads (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("info", help="report code structure")
    p.add_argument("--code", required=True)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("generate", help="write a random regular code as alist")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dv", type=int, default=3)
    p.add_argument("--dc", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-4cycles", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("enumerate", help="find J and |E_J| by exhaustive decoding")
    p.add_argument("--code", required=True)
    _add_decoder_flags(p)
    p.add_argument("--max-weight", type=int, required=True)
    p.add_argument("--workers", **workers)
    p.add_argument("--checkpoint", help="checkpoint file to write")
    p.add_argument("--checkpoint-interval", type=int, default=10**7)
    p.add_argument("--resume", help="resume from this checkpoint (also keeps updating it)")
    p.add_argument("--store-cap", type=int, default=10**6)
    p.add_argument("--stop-after", type=int, help=argparse.SUPPRESS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("estimate", help="FER/BER estimate curves as CSV")
    p.add_argument("--from", dest="from_", required=True, help="enumeration result JSON")
    p.add_argument("--calibration", action="append",
                   help="calibrate-n0 / estimate-m JSON supplying N0 and M")
    p.add_argument("--n0", type=int)
    p.add_argument("--m-avg", type=float)
    p.add_argument("--eps", required=True, help="start:stop:points[,log|lin]")
    p.add_argument("--n-list", help="comma list of N values; 'n' means block length")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte Carlo FER/BER on the BSC")
    p.add_argument("--code", required=True)
    _add_decoder_flags(p)
    p.add_argument("--eps", required=True, help="comma list or start:stop:points[,log|lin]")
    p.add_argument("--min-frame-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=10**7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", **workers)
    p.add_argument("--json", help="also write a JSON report with weight histograms")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate-n0", help="choose N0 from simulations at high FER")
    p.add_argument("--code", required=True)
    p.add_argument("--from", dest="from_", required=True, help="enumeration result JSON")
    p.add_argument("--eps", required=True, help="points where the FER is about 0.01-0.1")
    p.add_argument("--min-frame-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", **workers)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate_n0)

    p = sub.add_parser("estimate-m", help="average residual errors at weight N0")
    p.add_argument("--code", required=True)
    _add_decoder_flags(p)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate_m)

    p = sub.add_parser("check-ts", help="test and certify a candidate trapping set")
    p.add_argument("--code", required=True)
    _add_decoder_flags(p)
    p.add_argument("--set", required=True, help="comma list of 0-based variable indices")
    p.add_argument("--no-certify", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_ts)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, AlistError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
