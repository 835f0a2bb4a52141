"""Command-line front end.

Subcommands cover the whole workflow: grid generation (gen), two-stage
normalization (normalize), single-design forward synthesis (forward),
waypoint-based recovery (inverse), prediction scoring (eval), delimited
trajectory export (export) and figure rendering (report).

Exit codes: 0 success, 1 usage error, 2 I/O or malformed data, 3 no
solution (a rejected design or an infeasible inverse query).  All
angles are radians unless --degrees says otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import dataset, inverse, metrics, normalize, records
from .kinematics import TWO_PI
from .solver import SolverConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NO_SOLUTION = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _c99_value(text: str):
    if text == "auto":
        return None
    return float(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="bennett4r", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a gated trajectory dataset")
    p.add_argument("--na", type=int, required=True, help="grid count along a12")
    p.add_argument("--nalpha", type=int, required=True, help="grid count along alpha12")
    p.add_argument("--frames", type=int, default=360)
    p.add_argument("--fc", type=int, default=72, help="low-pass cutoff harmonic")
    p.add_argument("--eps", type=float, default=1e-6, help="closure residual tolerance")
    p.add_argument("--gate2", type=float, default=0.8, help="converged-fraction threshold")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output dataset JSONL path")

    p = sub.add_parser("normalize", help="two-stage rescale of a dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--c99", type=_c99_value, default="auto",
                   help='workspace radius, or "auto" to estimate from the training split')

    p = sub.add_parser("forward", help="synthesise one design")
    p.add_argument("--a12", type=float, required=True)
    p.add_argument("--alpha12", type=float, required=True)
    p.add_argument("--degrees", action="store_true", help="interpret --alpha12 in degrees")
    p.add_argument("--out", default="-", help="sample JSONL path, - for stdout")

    p = sub.add_parser("inverse", help="recover a design from waypoints")
    p.add_argument("--waypoints", required=True,
                   help="JSON file: 3x7 array, or an object with a waypoints field")
    p.add_argument("--c99", type=float, default=None, help="dataset workspace radius")
    p.add_argument("--manifest", default=None, help="read c99 from this dataset manifest")
    p.add_argument("--coarse-na", type=int, default=48)
    p.add_argument("--coarse-nalpha", type=int, default=96)
    p.add_argument("--phase-steps", type=int, default=64)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--refine-iters", type=int, default=100)
    p.add_argument("--use-velocity", action="store_true")
    p.add_argument("--out", default="-")

    p = sub.add_parser("eval", help="score predictions against a dataset")
    p.add_argument("--pred", required=True, help="prediction JSONL")
    p.add_argument("--gt", required=True, help="ground-truth dataset JSONL")
    p.add_argument("--out", default="-")

    p = sub.add_parser("export", help="write one sample as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sample", required=True, help="sample id, like 17-204")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report",
                       help="render figures plus CSV for selected samples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sample", action="append", default=None,
                   help="sample id; repeat for several (default: first sample)")
    p.add_argument("--outdir", required=True)
    return parser


class UsageError(Exception):
    """Raised by commands for argument problems found after parsing."""


def _write_text(path_or_dash: str, text: str) -> None:
    if path_or_dash == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path_or_dash).write_text(text if text.endswith("\n") else text + "\n",
                                      encoding="utf-8")


def cmd_gen(args) -> int:
    if args.na < 1 or args.nalpha < 1 or args.frames < 64:
        raise UsageError("grid counts must be >= 1 and --frames >= 64")
    if not 0 <= args.fc < args.frames // 2:
        raise UsageError(f"--fc must lie in [0, {args.frames // 2})")
    cfg = dataset.GenerationConfig(
        grid=dataset.GridConfig(n_a=args.na, n_alpha=args.nalpha),
        solver=SolverConfig(eps=args.eps),
        n_frames=args.frames,
        fc=args.fc,
        gate2_threshold=args.gate2,
        workers=args.workers,
    )
    samples, report = dataset.generate(cfg)
    records.write_samples(args.out, samples)
    records.write_manifest(
        records.manifest_path_for(args.out),
        records.generation_manifest(cfg, report),
    )
    print(
        f"accepted {report.accepted}/{report.candidates} "
        f"(gate1 {report.gate1_rejects}, gate2 {report.gate2_rejects}, "
        f"gate3 {report.gate3_rejects}, pass rate {report.pass_rate:.4f}) -> {args.out}"
    )
    return EXIT_OK


def cmd_normalize(args) -> int:
    samples = records.read_samples(args.input)
    if not samples:
        raise ValueError(f"no samples in {args.input}")
    result = normalize.normalize_dataset(samples, args.split_seed, args.c99)
    records.write_samples(args.out, result.samples)
    in_manifest = records.manifest_path_for(args.input)
    base = records.read_manifest(in_manifest) if in_manifest.exists() else None
    records.write_manifest(
        records.manifest_path_for(args.out),
        records.normalization_manifest(base, result),
    )
    print(
        f"normalized {len(result.samples)} samples, c99 {result.c99!r} "
        f"({'auto' if result.c99_auto else 'fixed'}), "
        f"split {len(result.train_indices)}/{len(result.val_indices)} -> {args.out}"
    )
    return EXIT_OK


def cmd_forward(args) -> int:
    alpha12 = math.radians(args.alpha12) if args.degrees else args.alpha12
    if not 0.0 < args.a12 < 1.0:
        raise UsageError("--a12 must lie in (0, 1)")
    if not 0.0 < alpha12 < TWO_PI:
        raise UsageError("--alpha12 must lie in (0, 2*pi) radians")
    result = dataset.run_candidate(args.a12, alpha12, dataset.GenerationConfig())
    if result.outcome != "ok":
        _write_text("-", json.dumps({
            "outcome": result.outcome,
            "a12": args.a12,
            "alpha12": alpha12,
        }))
        return EXIT_NO_SOLUTION
    line = json.dumps(records.sample_to_obj(result.sample), separators=(",", ":"))
    _write_text(args.out, line)
    return EXIT_OK


def _load_waypoints(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        obj = obj.get("waypoints")
        if obj is None:
            raise ValueError("waypoint object lacks a waypoints field")
    wps = np.asarray(obj, dtype=float)
    if wps.shape != (3, 7):
        raise ValueError(f"waypoints must be 3x7, got shape {wps.shape}")
    return wps


def cmd_inverse(args) -> int:
    if args.c99 is not None and args.manifest is not None:
        raise UsageError("give --c99 or --manifest, not both")
    c99 = args.c99
    if args.manifest is not None:
        manifest = records.read_manifest(args.manifest)
        try:
            c99 = float(manifest["normalization"]["c99"])
        except KeyError as exc:
            raise ValueError(f"manifest {args.manifest} has no normalization c99") from exc
    cfg = inverse.InverseConfig(
        coarse_na=args.coarse_na,
        coarse_nalpha=args.coarse_nalpha,
        phase_steps=args.phase_steps,
        top_k=args.top_k,
        refine_iters=args.refine_iters,
        use_velocity=args.use_velocity,
        c99=c99 if c99 is not None else inverse.InverseConfig.c99,
    )
    wps = _load_waypoints(args.waypoints)
    result = inverse.solve_inverse(wps, cfg)
    if isinstance(result, inverse.NoSolution):
        _write_text("-", json.dumps({
            "outcome": "no-solution",
            "reason": result.reason,
            "candidates_evaluated": result.candidates_evaluated,
        }))
        return EXIT_NO_SOLUTION
    _write_text(args.out, json.dumps({
        "a12_hat": result.a12_hat,
        "alpha12_hat": result.alpha12_hat,
        "phase_hat": result.phase_hat,
        "objective": result.objective,
        "candidates_evaluated": result.candidates_evaluated,
        "finalists": [
            {
                "a12_hat": f.a12_hat,
                "alpha12_hat": f.alpha12_hat,
                "phase_hat": f.phase_hat,
                "objective": f.objective,
            }
            for f in result.finalists
        ],
    }))
    return EXIT_OK


def cmd_eval(args) -> int:
    preds = records.read_predictions(args.pred)
    gts = {records.sample_id(s): s for s in records.iter_samples(args.gt)}
    matched = []
    for pred in preds:
        if pred.id not in gts:
            raise ValueError(f"prediction id {pred.id!r} not present in {args.gt}")
        matched.append(gts[pred.id])
    report = metrics.evaluate(preds, matched)
    _write_text(args.out, records.metrics_to_json(report))
    return EXIT_OK


def _find_sample(path: str, wanted: str):
    for sample in records.iter_samples(path):
        if records.sample_id(sample) == wanted:
            return sample
    raise ValueError(f"sample id {wanted!r} not found in {path}")


def cmd_export(args) -> int:
    sample = _find_sample(args.input, args.sample)
    records.write_trajectory_csv(args.out, sample)
    return EXIT_OK


def cmd_report(args) -> int:
    from . import report as report_mod

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.sample:
        picked = [_find_sample(args.input, sid) for sid in args.sample]
    else:
        first = next(iter(records.iter_samples(args.input)), None)
        if first is None:
            raise ValueError(f"no samples in {args.input}")
        picked = [first]
    for sample in picked:
        sid = records.sample_id(sample)
        records.write_trajectory_csv(outdir / f"{sid}.csv", sample)
        report_mod.render_sample_figure(sample, outdir / f"{sid}.png")
        print(f"wrote {outdir / f'{sid}.csv'} and {outdir / f'{sid}.png'}")
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "normalize": cmd_normalize,
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "eval": cmd_eval,
    "export": cmd_export,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bennett4r {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"bennett4r {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
