"""Command-line entry point.

Exit codes: 0 success, 1 empty or failed work, 2 invalid configuration.
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from . import __version__
from .backends import HttpBackend, MockInpainter, MockSegmenter
from .catalog import catalog_names, load_catalog
from .config import AppConfig, build_job, format_errors, read_config, set_path
from .errors import DegenerateLabels
from .generate import OutputExists, run
from .io import read_label_map, read_score_map
from .metrics import HistogramAccumulator, anomaly_report, histogram_report
from .report import load_report, plot_boxplots, plot_pr_curves, render, write_pr_csv, write_report

log = logging.getLogger("pocsynth")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
PATH_KEYS = ("job.input_dir", "job.output_dir", "eval.scores_dir", "eval.labels_dir", "eval.out_path")


def _get(raw, dotted):
    node = raw
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node:
            return None
        node = node[key]
    return node


def _load_config(path: Optional[Path], overrides: dict) -> AppConfig:
    raw = read_config(path)
    # relative paths in a config file are relative to that file
    if path is not None:
        for key in PATH_KEYS:
            value = _get(raw, key)
            if isinstance(value, str) and not Path(value).is_absolute():
                set_path(raw, key, str(Path(path).parent / value))
    env_url = os.environ.get("POC_BACKEND_URL")
    if env_url:
        set_path(raw, "backends.url", env_url)
    for key, value in overrides.items():
        if value is not None:
            set_path(raw, key, value)
    return AppConfig.model_validate(raw)


def _config_error(exc: Exception) -> int:
    print("invalid configuration:", file=sys.stderr)
    lines = format_errors(exc) if isinstance(exc, ValidationError) else [str(exc)]
    for line in lines:
        print(f"  {line}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_generate(args) -> int:
    overrides = {
        "job.mode": args.mode,
        "job.input_dir": args.input_dir,
        "job.output_dir": args.output_dir,
        "job.global_seed": args.seed,
        "job.concurrency": args.concurrency,
        "job.augmentations_per_image": args.augmentations,
        "job.placement.placement_mode": args.placement_mode,
        "backends.url": args.backend_url,
        "job.compose": True if args.compose else None,
        "job.overwrite": True if args.overwrite else None,
        "job.resume": True if args.resume else None,
        "backends.mock": True if args.mock else None,
    }
    try:
        cfg = _load_config(args.config, overrides)
        if cfg.job is None:
            raise ValueError("job: section is required (needs input_dir and output_dir)")
        job = build_job(cfg)
    except (ValidationError, ValueError, OSError) as exc:
        return _config_error(exc)
    if not args.verbose:
        logging.getLogger().setLevel(cfg.log_level)

    b = cfg.backends
    if b.mock:
        inpainter = MockInpainter()
        segmenter = MockSegmenter(miss=b.mock_miss)
    else:
        if not b.url:
            return _config_error(ValueError("backends.url: required unless backends.mock is set"))
        inpainter = segmenter = HttpBackend(b.url, timeout=b.timeout, retries=b.retries,
                                            backoff=b.backoff, max_in_flight=b.concurrency)

    start = time.perf_counter()
    try:
        entries = run(job, inpainter, segmenter)
    except OutputExists as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    elapsed = max(time.perf_counter() - start, 1e-9)
    accepted = sum(e.accepted for e in entries)
    rejected = len(entries) - accepted
    print(f"accepted {accepted}, rejected {rejected}, {len(entries) / elapsed:.2f} samples/s "
          f"-> {job.output_dir}")
    if accepted == 0:
        print("all samples rejected", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def pair_files(scores_dir: Path, labels_dir: Path):
    scores = {p.stem: p for p in sorted(scores_dir.iterdir()) if p.is_file()}
    labels = {p.stem: p for p in sorted(labels_dir.glob("*.png"))}
    pairs = [(scores[s], labels[s]) for s in sorted(scores.keys() & labels.keys())]
    unpaired = sorted((scores.keys() ^ labels.keys()))
    return pairs, unpaired


def evaluate_dirs(scores_dir: Path, labels_dir: Path, n_bins: int = 0, dataset: str = "",
                  method: str = "", ignore_id: int = 255):
    pairs, unpaired = pair_files(scores_dir, labels_dir)
    for stem in unpaired:
        log.warning("no partner for %s; skipped", stem)
    if not pairs:
        return None, unpaired
    if n_bins > 0:
        lo, hi = np.inf, -np.inf
        for score_path, _ in pairs:
            s = read_score_map(score_path)
            lo, hi = min(lo, float(s.min())), max(hi, float(s.max()))
        if hi <= lo:
            hi = lo + 1.0
        acc = HistogramAccumulator(n_bins, lo, hi, ignore_id)
        for score_path, label_path in pairs:
            acc.update(_checked(score_path, label_path), read_label_map(label_path))
        report = histogram_report(acc, dataset, method)
        mode = "histogram"
    else:
        scores, labels = [], []
        for score_path, label_path in pairs:
            scores.append(_checked(score_path, label_path).ravel())
            labels.append(read_label_map(label_path).ravel())
        report = anomaly_report(np.concatenate(scores), np.concatenate(labels), ignore_id, dataset, method)
        mode = "exact"
    report.header = {"tool": "pocsynth", "version": __version__, "n_images": len(pairs),
                     "sweep": mode, "n_bins": n_bins}
    return report, unpaired


def _checked(score_path: Path, label_path: Path) -> np.ndarray:
    scores = read_score_map(score_path)
    shape = read_label_map(label_path).shape
    if scores.shape != shape:
        raise ValueError(f"{score_path.name}: score map {scores.shape} vs labels {shape}")
    return scores


def cmd_evaluate(args) -> int:
    try:
        cfg = _load_config(args.config, {
            "eval.scores_dir": args.scores_dir, "eval.labels_dir": args.labels_dir,
            "eval.out_path": args.out, "eval.n_bins": args.n_bins,
        })
    except (ValidationError, ValueError, OSError) as exc:
        return _config_error(exc)
    ev = cfg.eval
    missing = [k for k in ("scores_dir", "labels_dir", "out_path") if getattr(ev, k) is None]
    if missing:
        return _config_error(ValueError(", ".join(f"eval.{k}: required" for k in missing)))
    for key in ("scores_dir", "labels_dir"):
        if not getattr(ev, key).is_dir():
            print(f"error: eval.{key} {getattr(ev, key)} is not a directory", file=sys.stderr)
            return EXIT_FAILED
    try:
        report, unpaired = evaluate_dirs(ev.scores_dir, ev.labels_dir, ev.n_bins, args.dataset, args.method)
    except (DegenerateLabels, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if unpaired:
        print(f"warning: skipped unpaired files: {', '.join(unpaired)}", file=sys.stderr)
    if report is None:
        print("error: no score/label pairs found", file=sys.stderr)
        return EXIT_FAILED
    out = Path(ev.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, out)
    if args.plots:
        write_pr_csv(report, out.with_suffix(".pr.csv"))
        plot_pr_curves([report], out.with_suffix(".pr.svg"))
        plot_boxplots([report], out.with_suffix(".box.svg"))
    print(f"F1 {100 * report.max_f1:.2f}  AuPRC {100 * report.auprc:.2f}  "
          f"FPR {100 * report.fpr_at_95tpr:.2f}  -> {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        try:
            reports.append(load_report(path))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            print(f"error: malformed report {path}: {exc}", file=sys.stderr)
            return EXIT_FAILED
    if not reports:
        print("error: no reports given", file=sys.stderr)
        return EXIT_FAILED
    for path in render(reports, args.out_dir):
        print(path)
    return EXIT_OK


def cmd_catalogs(args) -> int:
    names = args.names or catalog_names()
    for name in names:
        try:
            cat = load_catalog(name)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_FAILED
        print(f"{name} ({len(cat)}):")
        for prompt in cat.prompts:
            print(f"  {prompt}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pocsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="insert objects into a dataset")
    g.add_argument("--config", type=Path, help="TOML config file")
    g.add_argument("--mode", choices=["anomaly-test", "ood-finetune", "extend"])
    g.add_argument("--input-dir")
    g.add_argument("--output-dir")
    g.add_argument("--seed", type=int, help="global seed")
    g.add_argument("--concurrency", type=int, help="worker threads")
    g.add_argument("--augmentations", type=int, help="insertions per input image")
    g.add_argument("--placement-mode", choices=["guided", "random"])
    g.add_argument("--backend-url", help="model server base URL (overrides POC_BACKEND_URL)")
    g.add_argument("--mock", action="store_true", help="use the procedural mock backends")
    g.add_argument("--compose", action="store_true", help="stack all insertions onto one image")
    g.add_argument("--overwrite", action="store_true", help="replace existing output")
    g.add_argument("--resume", action="store_true", help="skip samples already accepted")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="pixel-level anomaly metrics for a dataset")
    e.add_argument("--config", type=Path)
    e.add_argument("--scores-dir")
    e.add_argument("--labels-dir")
    e.add_argument("--out", help="report JSON path")
    e.add_argument("--n-bins", type=int, help="histogram bins (0 = exact sweep)")
    e.add_argument("--dataset", default="")
    e.add_argument("--method", default="")
    e.add_argument("--plots", action="store_true", help="also write PR-curve CSV and SVG figures")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="comparison table and figures from report files")
    r.add_argument("reports", nargs="+", type=Path)
    r.add_argument("--out-dir", type=Path, required=True)
    r.set_defaults(func=cmd_report)

    c = sub.add_parser("catalogs", help="print the built-in object lists")
    c.add_argument("names", nargs="*")
    c.set_defaults(func=cmd_catalogs)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
