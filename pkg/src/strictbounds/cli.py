"""Command-line entry point: one subcommand per pipeline stage.

Exit status is 0 on success, 2 when an input or precondition is wrong and
3 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .errors import NumericalError, PreconditionError

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3

# flag -> (section, key) in the manifest configuration
_OVERRIDES = {
    "seed": ("seeds", "train"),
    "level": ("test", "level"),
    "q": ("hm", "q"),
    "N": ("hm", "N"),
    "gamma": ("filter", "gamma"),
    "threshold": ("filter", "threshold"),
    "restarts": ("train", "restarts"),
    "mc_samples": ("hm", "mc_samples"),
    "tests": ("predict", "count"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strictbounds", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in pipeline.STAGES + ("all",):
        p = sub.add_parser(stage, help=f"run the {stage} stage" if stage != "all" else "run every stage in order")
        p.add_argument("manifest", help="run manifest (JSON)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--force", action="store_true", help="recompute and ignore configuration drift upstream")
        p.add_argument("--seed", type=int)
        p.add_argument("--level", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--threshold", type=float)
        p.add_argument("--restarts", type=int)
        p.add_argument("--mc-samples", dest="mc_samples", type=int)
        p.add_argument("--tests", type=int, help="number of test parameter vectors")
    return parser


def apply_overrides(manifest: pipeline.RunManifest, args) -> None:
    for flag, (section, key) in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            manifest.config[section][key] = value
    if getattr(args, "N", None) is not None:
        manifest.config["hm"]["q"] = None
    if args.workers is not None:
        if args.workers < 1:
            raise PreconditionError("--workers must be at least 1")
        manifest.workers = args.workers


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        manifest = pipeline.RunManifest.load(args.manifest)
        apply_overrides(manifest, args)
        stages = [s for s in pipeline.STAGES if s != "synth" or not manifest.ensemble] if args.stage == "all" else [args.stage]
        for stage in stages:
            rec = pipeline.run_stage(stage, manifest, force=args.force)
            status = "cached" if rec.get("cached") else "done"
            print(f"{stage}: {status} {rec['key'][:12]}", file=sys.stderr)
        if stages[-1] == "report":
            sys.stdout.write(pipeline.report(manifest))
    except PreconditionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
