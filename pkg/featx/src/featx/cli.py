"""Command-line interface: ``featx extract`` and ``featx selftest``."""

from __future__ import annotations

import argparse
import sys
import tempfile

from .errors import FeatxError
from .extract import ExtractionJob, extract
from .tensorio import selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featx",
        description="Export convolutional feature maps for RGB-thermal datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="run the backbone over a dataset")
    p_extract.add_argument("--dataset", required=True, help="root with RGB/ and T/")
    p_extract.add_argument("--out", required=True, help="output directory")
    p_extract.add_argument("--layers", default="conv1,conv5",
                           help="comma-separated layer taps")
    p_extract.add_argument("--weights", default="pretrained",
                           help="'pretrained', 'random', or a state-dict path")
    p_extract.add_argument("--seed", type=int, default=0,
                           help="seed for --weights random")
    p_extract.add_argument("--device", default="cpu", help="torch device hint")
    p_extract.add_argument("--batch-size", type=int, default=1)
    p_extract.add_argument("--thermal-mode", default="replicate",
                           choices=("replicate",),
                           help="how one-channel thermal enters the 3-channel net")

    sub.add_parser("selftest", help="verify the tensor file format round trip")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return _run_selftest()
    try:
        job = ExtractionJob(
            dataset=args.dataset,
            out_dir=args.out,
            layers=tuple(layer.strip() for layer in args.layers.split(",") if layer.strip()),
            weights=args.weights,
            seed=args.seed,
            device=args.device,
            batch_size=args.batch_size,
            thermal_mode=args.thermal_mode,
        )
        manifest = extract(job)
    except (FeatxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.files)} tensor files to {args.out}")
    if manifest.errors:
        for entry in manifest.errors:
            print(f"failed {entry['id']}: {entry['error']}", file=sys.stderr)
        return 1
    return 0


def _run_selftest() -> int:
    try:
        with tempfile.TemporaryDirectory() as tmp:
            selftest(tmp)
    except FeatxError as exc:
        print(f"selftest failed: {exc}", file=sys.stderr)
        return 1
    print("selftest passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
