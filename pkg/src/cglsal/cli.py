"""Command-line entry point: detect, eval, segment, print-config."""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import ranking, solver
from .config import Config, load_config
from .errors import CGLError
from .imgcore import ImagePair, load_gray, load_pair, save_gray_png, scan_dataset
from .metrics import (evaluate_dataset, read_attributes, write_pr_csv,
                      write_report_csv, write_report_json)
from .superpixel import slic_segment

_STAGES = ("top", "bottom", "left", "right", "foreground")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (default: $CGL_CONFIG if set)")
    parser.add_argument("--n-superpixels", type=int, dest="n_superpixels")
    parser.add_argument("--compactness", type=float)
    parser.add_argument("--slic-iters", type=int, dest="slic_iters")
    parser.add_argument("--sigma-rgb", type=float, dest="sigma_rgb")
    parser.add_argument("--sigma-t", type=float, dest="sigma_t")
    parser.add_argument("--gamma1", type=float)
    parser.add_argument("--gamma2", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--mu", type=float)
    parser.add_argument("--lambda1", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--max-iters", type=int, dest="max_iters")
    parser.add_argument("--deep-features", choices=("on", "off"), dest="deep_features")
    parser.add_argument("--fixed-graph", choices=("on", "off"), dest="fixed_graph")
    parser.add_argument("--extended-adjacency", choices=("on", "off"),
                        dest="extended_adjacency")
    parser.add_argument("--modalities", choices=("rgbt", "rgb", "t"))
    parser.add_argument("--features-dir", dest="features_dir")


def _config_from_args(args) -> Config:
    overrides = {}
    for name in ("n_superpixels", "compactness", "slic_iters", "sigma_rgb",
                 "sigma_t", "gamma1", "gamma2", "theta", "mu", "lambda1",
                 "epsilon", "max_iters", "deep_features", "fixed_graph",
                 "extended_adjacency", "modalities", "features_dir"):
        value = getattr(args, name, None)
        if value in ("on", "off"):
            value = value == "on"
        overrides[name] = value
    return load_config(args.config, overrides)


def _detect_one(task) -> str:
    pair_paths, config, out_dir, overlay_dir, trace_dir = task
    pair = pair_paths.load() if hasattr(pair_paths, "load") else pair_paths
    started = time.perf_counter()
    states: list[solver.SolverState] | None = [] if trace_dir else None
    saliency = ranking.detect(pair, config, states=states)
    elapsed = time.perf_counter() - started
    save_gray_png(Path(out_dir) / f"{pair.id}.png", saliency.rendered)
    if overlay_dir:
        _save_overlay(Path(overlay_dir) / f"{pair.id}.png", pair, saliency.rendered)
    if trace_dir and states:
        for stage, state in zip(_STAGES, states):
            solver.write_trace_csv(Path(trace_dir) / f"{pair.id}.{stage}.csv", state)
    return f"{pair.id}: {elapsed:.2f} s"


def _save_overlay(path, pair: ImagePair, rendered: np.ndarray) -> None:
    heat = np.zeros_like(pair.rgb)
    heat[..., 0] = rendered
    blended = np.clip(0.5 * pair.rgb + 0.5 * heat, 0.0, 1.0)
    Image.fromarray(np.rint(blended * 255.0).astype(np.uint8)).save(path, format="PNG")


def cmd_detect(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for opt in (args.overlay_dir, args.trace_dir):
        if opt:
            Path(opt).mkdir(parents=True, exist_ok=True)

    if args.dataset:
        entries = scan_dataset(args.dataset)
        if not entries:
            raise CGLError(f"no image pairs found under {args.dataset}")
    else:
        if not (args.rgb and args.t):
            raise CGLError("provide either --dataset or both --rgb and --t")
        entries = [load_pair(args.rgb, args.t, args.gt)]

    tasks = [(e, config, out_dir, args.overlay_dir, args.trace_dir) for e in entries]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for line in pool.map(_detect_one, tasks):
                print(line)
    else:
        for task in tasks:
            print(_detect_one(task))
    return 0


def cmd_eval(args) -> int:
    entries = scan_dataset(args.dataset)
    if not entries:
        raise CGLError(f"no image pairs found under {args.dataset}")
    maps_dir = Path(args.maps)
    saliency_by_id = {}
    for entry in entries:
        path = maps_dir / f"{entry.id}.png"
        if not path.is_file():
            raise CGLError(f"missing saliency map {path}")
        saliency_by_id[entry.id] = load_gray(path)
    attributes = read_attributes(args.attributes) if args.attributes else None
    report = evaluate_dataset(saliency_by_id, (e.load() for e in entries), attributes)
    print(f"mean precision {report.mean_precision:.4f}")
    print(f"mean recall    {report.mean_recall:.4f}")
    print(f"mean F         {report.mean_f:.4f}")
    print(f"max F (curve)  {report.max_f:.4f}")
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        write_report_csv(report_dir / "report.csv", report)
        write_report_json(report_dir / "report.json", report)
        write_pr_csv(report_dir / "pr_curve.csv", report.mean_curve)
    return 0


def cmd_segment(args) -> int:
    config = _config_from_args(args)
    pair = load_pair(args.rgb, args.t)
    smap = slic_segment(pair, n_target=config.n_superpixels,
                        compactness=config.compactness, max_iters=config.slic_iters)
    data = (smap.labels % 256).astype(np.uint8)
    Image.fromarray(data, mode="L").save(args.out, format="PNG")
    print(f"superpixels: {smap.n}")
    print(f"mean size:   {smap.sizes.mean():.1f} px")
    return 0


def cmd_print_config(args) -> int:
    sys.stdout.write(_config_from_args(args).dump())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cglsal",
        description="RGB-thermal salient object detection via collaborative "
                    "graph learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="compute saliency maps")
    p_detect.add_argument("--rgb", help="RGB image path (single-pair mode)")
    p_detect.add_argument("--t", help="thermal image path (single-pair mode)")
    p_detect.add_argument("--gt", help="optional ground-truth path")
    p_detect.add_argument("--dataset", help="dataset root with RGB/ T/ [GT/]")
    p_detect.add_argument("--out", required=True, help="output directory for PNGs")
    p_detect.add_argument("--overlay-dir", help="also write RGB overlays here")
    p_detect.add_argument("--trace-dir", help="write per-solve iteration CSVs here")
    p_detect.add_argument("--jobs", type=int, default=1, help="parallel images")
    _add_config_flags(p_detect)
    p_detect.set_defaults(func=cmd_detect)

    p_eval = sub.add_parser("eval", help="score saliency maps against ground truth")
    p_eval.add_argument("--maps", required=True, help="directory of saliency PNGs")
    p_eval.add_argument("--dataset", required=True, help="dataset root with GT/")
    p_eval.add_argument("--attributes", help="attribute sidecar CSV")
    p_eval.add_argument("--report-dir", help="write report.csv/json and pr_curve.csv")
    p_eval.set_defaults(func=cmd_eval)

    p_seg = sub.add_parser("segment", help="write a superpixel label map")
    p_seg.add_argument("--rgb", required=True)
    p_seg.add_argument("--t", required=True)
    p_seg.add_argument("--out", required=True, help="label PNG path (ids mod 256)")
    _add_config_flags(p_seg)
    p_seg.set_defaults(func=cmd_segment)

    p_cfg = sub.add_parser("print-config", help="print the effective configuration")
    _add_config_flags(p_cfg)
    p_cfg.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CGLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
