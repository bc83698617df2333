"""``swdtau`` command line: synth, detect, evaluate, classify, bench.

Exit codes: 0 success, 2 input/config error, 3 template incompatibility,
4 statistical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .classify import (
    KINDS,
    leave_one_out,
    per_class_subsample,
    proportion_ci,
    roc,
)
from .config import load_run_config
from .detector import match_annotations, scan_recording, segment_truth
from .errors import InputError, NoCompatibleTemplate, SingleClass, SwdError, UndefinedMetric
from .formats import (
    detections_document,
    json_float,
    read_annotations,
    read_features,
    read_recording,
    read_scan_report,
    read_template_dir,
    write_annotations,
    write_features,
    write_recording,
    write_roc,
    write_scan_report,
    write_template,
)
from .kendall import count_pairs_bruteforce, count_pairs_fast
from .signal_model import FeaturePoint
from .synthgen import SplitMix64, make_recording, template_set

log = logging.getLogger("swdtau")

DEFAULT_BENCH_SIZES = [64, 256, 1024, 4096]
KIND_ALIASES = {"lda": "lda", "qda": "qda", "svm": "linear_svm"}


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.paths.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _required(value, name: str):
    if value is None:
        raise InputError(f"missing {name} (pass it as an argument or under config paths)")
    return value


def cmd_synth(args) -> int:
    cfg = load_run_config(args.config)
    synth = cfg.synth if args.seed is None else replace(cfg.synth, seed=args.seed)
    out = _out_dir(args, cfg)
    rec, ann = make_recording(synth)
    write_recording(rec, out / "recording.csv")
    write_annotations(ann, out / "annotations.json")
    tpl_dir = out / "templates"
    tpl_dir.mkdir(exist_ok=True)
    for tpl in template_set(synth):
        write_template(tpl, tpl_dir / f"{tpl.id}.csv")
    print(f"channels={rec.num_channels} samples={rec.num_samples} "
          f"rate_hz={rec.sample_rate_hz:g} events={len(ann)}")
    return 0


def cmd_detect(args) -> int:
    cfg = load_run_config(args.config)
    detector = cfg.detector
    if args.patient is not None:
        detector = replace(detector, patient_filter=args.patient)
    rec_path = _required(args.recording or cfg.paths.get("recording"), "recording")
    tpl_dir = _required(args.templates_dir or cfg.paths.get("templates_dir"), "templates_dir")
    rec = read_recording(rec_path)
    templates = read_template_dir(tpl_dir)
    if not templates:
        raise NoCompatibleTemplate(f"no template files in {tpl_dir}")
    report = scan_recording(rec, templates, detector)
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    out = _out_dir(args, cfg)
    write_scan_report(report, out / "scan_report.csv")
    _write_json(out / "detections.json", detections_document(report))
    print(f"scanned={report.segments_scanned} positives={report.positives}")
    return 0


def _metrics_block(kind: str, cm, scores=None, truth=None, level: float = 0.95) -> dict:
    sens, spec = cm.sensitivity, cm.specificity
    lo, hi = proportion_ci(spec, cm.tn + cm.fp, level)
    s_lo, s_hi = proportion_ci(sens, cm.tp + cm.fn, level)
    auc = None
    if scores is not None:
        try:
            auc = json_float(roc(scores, truth).auc)
        except SingleClass:
            auc = None
    return {
        "kind": kind,
        "tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn,
        "sensitivity": json_float(sens),
        "specificity": json_float(spec),
        "ci_lo": json_float(lo),
        "ci_hi": json_float(hi),
        "sensitivity_ci_lo": json_float(s_lo),
        "sensitivity_ci_hi": json_float(s_hi),
        "auc": auc,
        "ci_level": level,
    }


def cmd_evaluate(args) -> int:
    cfg = load_run_config(args.config)
    overlap = cfg.overlap_frac if args.overlap_frac is None else args.overlap_frac
    report_path = _required(args.scan_report or cfg.paths.get("scan_report"), "scan_report")
    ann_path = _required(args.annotations or cfg.paths.get("annotations"), "annotations")
    report = read_scan_report(report_path, cfg.synth.sample_rate_hz)
    truth = read_annotations(ann_path)
    labels = segment_truth(report, truth, overlap)
    cm = match_annotations(report, truth, overlap)
    taus = [r.tau for r in report.results]
    block = _metrics_block("threshold", cm)
    curve = roc(taus, labels)
    block["auc"] = json_float(curve.auc)
    block["overlap_frac"] = overlap
    out = _out_dir(args, cfg)
    _write_json(out / "metrics.json", block)
    write_roc(curve, out / "roc.csv")
    write_features((FeaturePoint(r.tau, r.p, lab) for r, lab in zip(report.results, labels)),
                   out / "features.csv")
    print(f"sensitivity={block['sensitivity']} specificity={block['specificity']} auc={block['auc']}")
    return 0


def cmd_classify(args) -> int:
    cfg = load_run_config(args.config)
    kind = args.kind or cfg.kind
    path = _required(args.features or cfg.paths.get("features"), "features")
    points = read_features(path)
    if args.per_class is not None:
        if args.per_class < 2:
            raise InputError("--per-class must be >= 2")
        points = per_class_subsample(points, args.per_class)
    kinds = list(KINDS) if kind == "all" else [KIND_ALIASES[kind]]
    reports = []
    for k in kinds:
        res = leave_one_out(k, points)
        pairs = [(s, bool(pt.label)) for s, pt in zip(res.scores, points) if s == s]
        block = _metrics_block(k, res.confusion, [s for s, _ in pairs], [t for _, t in pairs])
        block["abstentions"] = list(res.abstentions)
        reports.append(block)
        print(f"{k}: sensitivity={block['sensitivity']} specificity={block['specificity']}")
    out = _out_dir(args, cfg)
    _write_json(out / "loocv_report.json", {"n": len(points), "reports": reports})
    return 0


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_bench(sizes, repeats: int = 5, seed: int = 0) -> dict:
    """Median wall time per call of brute-force vs fast pair counting."""
    rows = []
    speedup = {}
    passed = True
    for n in sizes:
        rng = SplitMix64(seed ^ n)
        x, y = rng.normal(n), rng.normal(n)
        brute = _median_time(lambda: count_pairs_bruteforce(x, y), repeats)
        fast = _median_time(lambda: count_pairs_fast(x, y), repeats)
        for method, secs in (("brute", brute), ("fast", fast)):
            rows.append({"n": n, "method": method, "median_s": json_float(secs),
                         "ns_per_op": json_float(secs * 1e9), "repeats": repeats})
        speedup[str(n)] = json_float(brute / fast) if fast > 0 else float("inf")
        if n >= 1024 and fast > brute:
            passed = False
    return {"rows": rows, "speedup": speedup, "assertion_passed": passed}


def cmd_bench(args) -> int:
    sizes = DEFAULT_BENCH_SIZES if args.sizes is None else args.sizes
    if any(n < 2 for n in sizes):
        raise InputError("bench sizes must be >= 2")
    doc = run_bench(sizes, args.repeats, args.seed or 0)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "bench.json", doc)
    for row in doc["rows"]:
        print(f"n={row['n']} {row['method']} median_s={row['median_s']}")
    if not doc["assertion_passed"]:
        print("error: fast path slower than brute force at n >= 1024", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swdtau", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--out", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, help="override the random seed")

    p = sub.add_parser("synth", help="write a synthetic recording, templates and annotations")
    common(p, seed=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="scan a recording against a template directory")
    p.add_argument("recording", nargs="?")
    p.add_argument("templates_dir", nargs="?")
    p.add_argument("--patient", help="use only templates of this patient id")
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score a scan report against annotations")
    p.add_argument("scan_report", nargs="?")
    p.add_argument("annotations", nargs="?")
    p.add_argument("--overlap-frac", type=float, dest="overlap_frac")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="leave-one-out classification of tau,p features")
    p.add_argument("features", nargs="?")
    p.add_argument("--kind", choices=["lda", "qda", "svm", "all"])
    p.add_argument("--per-class", type=int, dest="per_class",
                   help="use at most this many evenly spaced points of each class")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="time brute-force vs fast Kendall pair counting")
    p.add_argument("--sizes", type=int, nargs="*")
    p.add_argument("--repeats", type=int, default=5)
    common(p, seed=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SwdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
