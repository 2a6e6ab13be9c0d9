"""Command line entry point.  Exit codes: 0 ok, 1 failed check, 2 bad configuration."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import harness as hz
from . import layout as lo

OK, FAILED, BAD_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser, distance=True):
    if distance:
        p.add_argument("--distance", "-d", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", "--output", "-o", dest="output", default="out", help="output directory, or a .csv path")
    p.add_argument("--dump-layout", metavar="PATH", help="write the code layout as JSON and continue")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surfflo", description="Surface-code coherent noise simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("storage", "prep", "twirl"):
        p = sub.add_parser(name)
        _common(p)
        p.add_argument("--theta", default="0", help="rotation angle, radians or e.g. 0.08pi")
        p.add_argument("--trials", type=int, default=hz.DEFAULT_TRIALS)
        if name != "twirl":
            p.add_argument("--decoder", choices=("mwpm", "peel"))
            p.add_argument("--angles-file", help="per-qubit angles, one qubit per line")
        if name == "prep":
            p.add_argument("--phi", default="0")
        if name == "twirl":
            p.add_argument("--epsilon", type=float, help="flip probability (default sin^2 theta)")

    p = sub.add_parser("prep-sweep")
    _common(p)
    p.add_argument("--theta-grid", required=True)
    p.add_argument("--phi-grid", default="0")
    p.add_argument("--trials", type=int, default=hz.DEFAULT_SWEEP_TRIALS)
    p.add_argument("--decoder", choices=("mwpm", "peel"), default="peel")

    p = sub.add_parser("threshold-scan")
    _common(p, distance=False)
    p.add_argument("--mode", choices=("storage", "prep", "twirl"), required=True)
    p.add_argument("--distance", "-d", action="append", required=True, help="repeat or comma separate")
    p.add_argument("--grid", required=True, help="start:stop:step or comma list (angles, or epsilon for twirl)")
    p.add_argument("--phi", default="0")
    p.add_argument("--trials", type=int, default=hz.DEFAULT_TRIALS)
    p.add_argument("--decoder", choices=("mwpm", "peel"))

    p = sub.add_parser("oracle-check")
    _common(p)
    p.add_argument("--suite", choices=("engine", "storage", "prep"), required=True)
    p.add_argument("--samples", type=int, help="sampled trials per input (storage, prep)")

    p = sub.add_parser("bench")
    _common(p, distance=False)
    p.add_argument("--mode", choices=("storage", "prep"), required=True)
    p.add_argument("--distance", "-d", action="append", required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--theta", default="0.08pi")
    return ap


def _dump_layout(args):
    if not args.dump_layout:
        return
    dists = hz.parse_distances(args.distance) if isinstance(args.distance, list) else [args.distance]
    for d in dists:
        path = Path(args.dump_layout)
        if len(dists) > 1:
            path = path.with_name(f"{path.stem}_d{d}{path.suffix}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(lo.build(d).to_json(indent=2) + "\n")


def _emit(payload: dict, out: Path, name: str) -> None:
    hz.write_json(out / name, payload)
    print(json.dumps(payload, indent=2, sort_keys=True, default=hz._json_default))


def dispatch(args) -> int:
    out = Path(args.output)
    cmd = args.command
    if cmd in ("storage", "prep", "twirl"):
        cfg = hz.ExperimentConfig(
            mode=cmd,
            distance=args.distance,
            theta=hz.parse_angle(args.theta),
            phi=hz.parse_angle(getattr(args, "phi", 0)),
            epsilon=getattr(args, "epsilon", None),
            angles_file=getattr(args, "angles_file", None),
            trials=args.trials,
            seed=args.seed,
            threads=args.threads,
            output=str(out),
            decoder=getattr(args, "decoder", None),
        )
        _dump_layout(args)
        res = hz.run(cfg)
        print(json.dumps(res["summary"], indent=2, sort_keys=True, default=hz._json_default))
        return OK
    if cmd == "prep-sweep":
        hz.ExperimentConfig(mode=cmd, distance=args.distance, trials=args.trials, seed=args.seed, threads=args.threads)
        _dump_layout(args)
        pts = hz.prep_sweep(
            args.distance, hz.parse_grid(args.theta_grid), hz.parse_grid(args.phi_grid),
            args.trials, args.seed, args.threads, args.decoder,
        )
        hz.write_sweep_csv(out / "prep_sweep.csv", pts)
        _emit({"distance": args.distance, "points": pts}, out, "summary.json")
        return OK
    if cmd == "threshold-scan":
        dists = hz.parse_distances(args.distance)
        for d in dists:
            hz.ExperimentConfig(mode=cmd, distance=d, trials=args.trials, seed=args.seed, threads=args.threads)
        grid = hz.parse_grid(args.grid)
        _dump_layout(args)
        rep = hz.threshold_scan(
            args.mode, dists, grid, args.trials, args.seed, args.threads, hz.parse_angle(args.phi), args.decoder
        )
        _emit(rep.to_dict(), out, "threshold.json")
        return OK
    if cmd == "oracle-check":
        hz.ExperimentConfig(mode=cmd, distance=args.distance, seed=args.seed, threads=args.threads)
        _dump_layout(args)
        kw = {"samples": args.samples} if args.samples and args.suite != "engine" else {}
        res = hz.oracle_check(args.suite, args.seed, args.threads, args.distance, **kw)
        _emit(res, out, f"oracle_{args.suite}.json")
        return OK if res["passed"] else FAILED
    if cmd == "bench":
        dists = hz.parse_distances(args.distance)
        for d in dists:
            hz.ExperimentConfig(mode=cmd, distance=d, trials=args.trials, seed=args.seed)
        _dump_layout(args)
        theta = hz.parse_angle(args.theta)
        results = [hz.bench(args.mode, d, args.trials, args.seed, theta) for d in dists]
        payload = {"results": [asdict(r) for r in results]}
        if len(results) >= 2:
            payload["scaling_exponent"] = hz.scaling_exponent(
                [r.qubits for r in results], [r.median_seconds for r in results]
            )
        _emit(payload, out, f"bench_{args.mode}.json")
        return OK
    raise hz.InvalidConfig(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return dispatch(args)
    except (hz.InvalidConfig, hz.NotEnoughCurves, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
