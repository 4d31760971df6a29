"""Command line entry point: ``semline {detect,evaluate,gen-candidates,label-harmony,render}``.

Exit status is 0 on success, 1 when inputs fail validation and 2 on I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DimensionMismatch, FrameMismatch, ParseError, SemlineError
from .geometry import ImageFrame, Line, to_endpoints
from .hough import DEFAULT_PHI_BINS, DEFAULT_RHO_BINS, generate
from .io import AnnotationRecord, dump_annotations, load_annotations, read_pnm
from .metrics import DEFAULT_TAU_GRID, evaluate
from .mwcs import DEFAULT_KAPPA, MAX_NODES
from .pipeline import DetectionConfig, detect, detect_image
from .render import render_overlay
from .scoring import disturbance, file_scorer, harmony_label
from .selection import DEFAULT_K, DEFAULT_RADIUS

log = logging.getLogger("semline")

REPORT_FORMAT = "semline-report"


def worker_count() -> int:
    raw = os.environ.get("SEMLINE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return os.cpu_count() or 1


def _map(fn, items):
    n = worker_count()
    if n == 1:
        return list(map(fn, items))
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def parse_tau_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            n = int(round((stop - start) / step)) + 1
            return np.round(start + step * np.arange(n), 10)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ParseError(f"bad tau grid {text!r}") from None


def _config(args) -> DetectionConfig:
    if args.k > args.max_k:
        raise SemlineError(f"--k {args.k} exceeds --max-k {args.max_k}")
    return DetectionConfig(
        rho_bins=args.rho_bins or DEFAULT_RHO_BINS,
        phi_bins=args.phi_bins or DEFAULT_PHI_BINS,
        k=args.k,
        removal_radius=args.removal_radius,
        kappa=args.kappa,
        scorer=args.scorer,
        stop_prob=args.stop_prob,
        use_harmony=not args.no_harmony,
        use_offset=not args.no_offset,
    )


def cmd_detect(args) -> int:
    config = _config(args)
    if args.harmony and len(args.inputs) != 1:
        raise SemlineError("--harmony needs exactly one input")
    jobs = []
    for path in args.inputs:
        if args.scorer == "file":
            scores, harmony, grid = file_scorer(path)
            if (args.rho_bins and args.rho_bins != grid.rho_bins) or \
                    (args.phi_bins and args.phi_bins != grid.phi_bins):
                raise DimensionMismatch(
                    f"{path}: score grid {grid.rho_bins}x{grid.phi_bins} does not match "
                    f"--rho-bins/--phi-bins {args.rho_bins}x{args.phi_bins}")
            if scores is None:
                raise ParseError(f"{path}: no [candidates] section")
            if args.harmony:
                _, harmony, _ = file_scorer(args.harmony, grid)
            jobs.append((Path(path).stem, grid, scores, harmony))
        else:
            jobs.append((Path(path).stem, read_pnm(path)))

    def run(job):
        if len(job) == 4:
            image_id, grid, scores, harmony = job
            return detect(grid, scores, harmony, config, image_id)
        image_id, image = job
        return detect_image(image, config, image_id)

    detections = _map(run, jobs)
    records = [AnnotationRecord.from_lines(d.image_id, d.frame, d.lines, **d.summary())
               for d in detections]
    _write(dump_annotations(records, "semline-predictions"), args.out)
    return 0


def cmd_evaluate(args) -> int:
    preds = {r.image_id: r for r in load_annotations(args.pred)}
    gts = {r.image_id: r for r in load_annotations(args.gt)}
    extra = sorted(set(preds) - set(gts))
    if extra:
        raise ParseError(f"predictions for images without ground truth: {extra[:5]}")
    items = []
    for image_id in sorted(gts):
        gt = gts[image_id]
        pred = preds.get(image_id)
        if pred is not None and (pred.width, pred.height) != (gt.width, gt.height):
            raise FrameMismatch(f"{image_id}: prediction frame {pred.width}x{pred.height} vs "
                                f"ground truth {gt.width}x{gt.height}")
        items.append((image_id, gt.frame, pred.lines if pred else [], gt.lines))
    taus = parse_tau_grid(args.tau_grid) if args.tau_grid else DEFAULT_TAU_GRID
    report = evaluate(items, args.metric, taus, args.metric_scale, map_fn=_map)
    lines = [json.dumps({"format": REPORT_FORMAT, "version": 1})]
    lines += [json.dumps({"image_id": k, "hiou": v}) for k, v in report.to_dict()["hiou"].items()]
    summary = report.to_dict()
    del summary["hiou"]
    lines.append(json.dumps({"summary": summary}))
    _write("\n".join(lines) + "\n", args.out)
    if args.curves:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "precision", "recall", "f_measure"])
        for row in zip(report.tau, report.precision, report.recall, report.f_measure):
            w.writerow([repr(float(v)) for v in row])
        Path(args.curves).write_text(buf.getvalue())
    return 0


def cmd_gen_candidates(args) -> int:
    grid = generate(ImageFrame(args.width, args.height), args.rho_bins or DEFAULT_RHO_BINS,
                    args.phi_bins or DEFAULT_PHI_BINS)
    buf = _io.StringIO()
    buf.write(f"#semline-candidates v1 rho_bins={grid.rho_bins} phi_bins={grid.phi_bins} "
              f"width={args.width} height={args.height}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["candidate_index", "rho_index", "phi_index", "rho", "phi", "valid",
                "x1", "y1", "x2", "y2"])
    for k in range(grid.size):
        i, j = grid.unravel(k)
        rho, phi = grid.params(k)
        ends = ["", "", "", ""]
        if grid.valid[k]:
            (x1, y1), (x2, y2) = to_endpoints(Line(rho, phi), grid.frame)
            ends = [repr(x1), repr(y1), repr(x2), repr(y2)]
        w.writerow([k, i, j, repr(rho), repr(phi), int(grid.valid[k]), *ends])
    _write(buf.getvalue(), args.out)
    return 0


def cmd_label_harmony(args) -> int:
    try:
        ds = [float(v) for v in args.disturbances.split(",")]
    except ValueError:
        raise ParseError(f"bad disturbance list {args.disturbances!r}") from None
    if any(d < 0 for d in ds):
        raise ParseError("disturbances must be non-negative")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["image_id", "i", "j", "d_i", "d_j", "rho_i", "phi_i", "rho_j", "phi_j", "label"])
    for rec in sorted(load_annotations(args.gt), key=lambda r: r.image_id):
        grid = generate(rec.frame, args.rho_bins or DEFAULT_RHO_BINS,
                        args.phi_bins or DEFAULT_PHI_BINS)
        lines = rec.lines
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                for di in ds:
                    for dj in ds:
                        li = lines[i].shifted(di * grid.rho_step, 0.0)
                        lj = lines[j].shifted(dj * grid.rho_step, 0.0)
                        label = harmony_label(disturbance(li, lines[i], grid),
                                              disturbance(lj, lines[j], grid))
                        w.writerow([rec.image_id, i, j, repr(di), repr(dj), repr(li.rho),
                                    repr(li.phi), repr(lj.rho), repr(lj.phi), repr(label)])
    _write(buf.getvalue(), args.out)
    return 0


def cmd_render(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in load_annotations(args.pred):
        src = next((p for p in (Path(args.images) / f"{rec.image_id}{ext}"
                                for ext in (".ppm", ".pgm")) if p.exists()), None)
        if src is None:
            raise FileNotFoundError(f"no .ppm/.pgm image for {rec.image_id!r} in {args.images}")
        image = read_pnm(src)
        if image.shape[:2] != (rec.height, rec.width):
            raise FrameMismatch(f"{rec.image_id}: image is {image.shape[1]}x{image.shape[0]}, "
                                f"record says {rec.width}x{rec.height}")
        if image.dtype != np.uint8:
            image = (image >> 8).astype(np.uint8)
        render_overlay(image, rec.lines, out_dir / f"{rec.image_id}.ppm")
    return 0


def _grid_flags(p):
    p.add_argument("--rho-bins", type=int, default=None, help=f"default {DEFAULT_RHO_BINS}")
    p.add_argument("--phi-bins", type=int, default=None, help=f"default {DEFAULT_PHI_BINS}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect lines from images or score files")
    p.add_argument("inputs", nargs="+", help="PGM/PPM images (heuristic) or score files (file)")
    p.add_argument("--scorer", choices=("file", "heuristic"), default="heuristic")
    p.add_argument("--harmony", help="separate harmony score file (single input only)")
    _grid_flags(p)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--max-k", type=int, default=MAX_NODES)
    p.add_argument("--removal-radius", type=int, default=DEFAULT_RADIUS)
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.add_argument("--stop-prob", type=float, default=None)
    p.add_argument("--no-harmony", action="store_true",
                   help="skip graph and clique; keep every selected line (stop-prob 0.5 unless set)")
    p.add_argument("--no-offset", action="store_true", help="skip offset refinement")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--metric", choices=("miou", "ea"), default="miou")
    p.add_argument("--tau-grid", default=None, help="start:stop:step or comma list")
    p.add_argument("--metric-scale", type=float, default=1.0)
    p.add_argument("--curves", default=None, help="write tau,P,R,F CSV here")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-candidates", help="dump the candidate grid as CSV")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    _grid_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_candidates)

    p = sub.add_parser("label-harmony", help="soft harmony labels for disturbed ground-truth pairs")
    p.add_argument("--gt", required=True)
    p.add_argument("--disturbances", default="0,0.5,1,1.5,2",
                   help="comma list of disturbances in Hough bin units")
    _grid_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_label_harmony)

    p = sub.add_parser("render", help="draw predictions onto their images")
    p.add_argument("--pred", required=True)
    p.add_argument("--images", required=True, help="directory holding <image_id>.ppm/.pgm")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SemlineError, ValueError) as e:
        log.error("%s", e)
        return 1
    except OSError as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
