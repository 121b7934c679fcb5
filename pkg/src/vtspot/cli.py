"""Command-line surface: evaluate, track, interpolate, sample, loss, synth.

Exit codes: 0 success, 1 usage error, 2 malformed or unreadable input,
3 mismatched inputs (different videos).  Reports go to stdout unless
``--out`` is given; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .annotations import (
    SampledAnnotation,
    interpolate,
    load_annotation,
    load_detections,
    sample,
    save_annotation,
    save_detections,
    save_trajectories,
)
from .errors import DataError, VideoMismatch
from .geometry import quad_to_rotated, rotated_to_quad
from .linker import LinkerConfig, link
from .matching import (
    CostWeights,
    GroundTruthInstance,
    PredictedInstance,
    match_sets,
    set_loss_terms,
)
from .metrics import MetricsReport, aggregate, evaluate
from .synth import SynthConfig, generate
from .tracker import TrackerConfig
from .tracker import run as run_tracker

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for bad
    input files, so usage problems are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _weights(text: str) -> CostWeights:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            "expected four comma-separated numbers: w_cls,w_l1,w_giou,w_angle"
        )
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return CostWeights(*values)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _default_jobs() -> int:
    raw = os.environ.get("VTSPOT_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _write_json(payload, path: str | None) -> None:
    stream, owned = _open_out(path)
    try:
        json.dump(payload, stream, ensure_ascii=False, indent=1)
        stream.write("\n")
    finally:
        if owned:
            stream.close()


_CSV_RATIOS = ("precision", "recall", "fscore", "mota", "motp",
               "idp", "idr", "idf1")


def _csv_rows(reports: list[MetricsReport], path: str | None) -> None:
    stream, owned = _open_out(path)
    try:
        writer = csv.writer(stream)
        writer.writerow(["video_id", "scenario", "task", *_CSV_RATIOS,
                         "mt", "ml", "degenerate"])
        for r in reports:
            writer.writerow([
                r.video_id if r.video_id is not None else "ALL",
                r.scenario or "",
                r.task,
                *(f"{getattr(r, name):.6f}" for name in _CSV_RATIOS),
                r.mt,
                r.ml,
                ";".join(r.degenerate),
            ])
    finally:
        if owned:
            stream.close()


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _eval_pair(job) -> MetricsReport:
    gt_path, pred_path, task, iou_thresh, iou_floor, case_insensitive = job
    gt = load_annotation(gt_path)
    pred = load_annotation(pred_path)
    return evaluate(gt, pred, task, iou_thresh=iou_thresh,
                    iou_floor=iou_floor, case_insensitive=case_insensitive)


def _corpus_pairs(gt_dir: str, pred_dir: str) -> list[tuple[str, str]]:
    gt_names = {p.name: p for p in sorted(Path(gt_dir).iterdir())
                if p.suffixes and p.suffixes[0] == ".json"}
    pred_names = {p.name: p for p in sorted(Path(pred_dir).iterdir())
                  if p.suffixes and p.suffixes[0] == ".json"}
    missing = sorted(set(gt_names) - set(pred_names))
    extra = sorted(set(pred_names) - set(gt_names))
    if missing or extra:
        detail = []
        if missing:
            detail.append(f"missing predictions for {', '.join(missing)}")
        if extra:
            detail.append(f"predictions without references: {', '.join(extra)}")
        raise DataError("; ".join(detail))
    return [(str(gt_names[n]), str(pred_names[n])) for n in sorted(gt_names)]


def cmd_evaluate(args) -> int:
    if (args.gt_dir is None) != (args.pred_dir is None):
        args.parser.error("--gt-dir and --pred-dir must be used together")
    if args.gt_dir is not None:
        if args.gt is not None or args.pred is not None:
            args.parser.error("give either file paths or --gt-dir/--pred-dir")
        pairs = _corpus_pairs(args.gt_dir, args.pred_dir)
        if not pairs:
            raise DataError(f"no annotation files found in {args.gt_dir}")
    else:
        if args.gt is None or args.pred is None:
            args.parser.error("need a reference and a prediction file")
        pairs = [(args.gt, args.pred)]

    jobs = [(g, p, args.task, args.iou_thresh, args.iou_floor,
             args.case_insensitive) for g, p in pairs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_eval_pair, jobs))
    else:
        reports = [_eval_pair(job) for job in jobs]

    if len(reports) == 1 and args.gt_dir is None:
        if args.format == "json":
            _write_json(reports[0].to_dict(), args.out)
        else:
            _csv_rows(reports, args.out)
        return 0

    summary = aggregate(reports)
    if args.format == "json":
        _write_json(
            {"videos": [r.to_dict() for r in reports],
             "aggregate": summary.to_dict()},
            args.out,
        )
    else:
        _csv_rows(reports + [summary], args.out)
    return 0


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------


def cmd_track(args) -> int:
    dets = load_detections(args.detections)
    if args.method == "transformer-assoc":
        iou_thresh = args.iou_thresh if args.iou_thresh is not None else 0.5
        cfg = TrackerConfig(iou_threshold=iou_thresh, max_age=args.max_age,
                            min_score=args.min_score)
        trajectories = run_tracker(dets.frames, cfg)
    else:
        iou_thresh = args.iou_thresh if args.iou_thresh is not None else 0.3
        cfg = LinkerConfig(window=args.window, iou_threshold=iou_thresh,
                           max_norm_edit=args.max_norm_edit)
        frames = [
            (fd.frame_index,
             [(rotated_to_quad(d.box), d.transcription or "")
              for d in fd.detections if d.score >= args.min_score])
            for fd in dets.frames
        ]
        trajectories = link(frames, cfg)

    stream, owned = _open_out(args.out)
    try:
        save_trajectories(trajectories, dets.video_id, dets.width,
                          dets.height, dets.frame_count, stream)
    finally:
        if owned:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# interpolate / sample
# ---------------------------------------------------------------------------


def cmd_interpolate(args) -> int:
    loaded = load_annotation(args.annotation)
    if args.frames is not None:
        target = args.frames
    else:
        target = (max(loaded.frames) + 1) if loaded.frames else 1
        print(
            f"warning: --frames not given, inferring {target} "
            "(highest sampled index + 1)",
            file=sys.stderr,
        )
    sampled = SampledAnnotation(
        video_id=loaded.video_id, width=loaded.width, height=loaded.height,
        frame_count=target, k=args.k, frames=loaded.frames,
        scenario=loaded.scenario,
    )
    dense = interpolate(sampled, target)
    stream, owned = _open_out(args.out)
    try:
        save_annotation(dense, stream)
    finally:
        if owned:
            stream.close()
    return 0


def cmd_sample(args) -> int:
    dense = load_annotation(args.annotation)
    sampled = sample(dense, args.k)
    stream, owned = _open_out(args.out)
    try:
        save_annotation(sampled, stream)
    finally:
        if owned:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------


def _normalized_box(box, width, height):
    return type(box)(box.cx / width, box.cy / height,
                     box.w / width, box.h / height, box.angle)


def cmd_loss(args) -> int:
    gt = load_annotation(args.gt)
    preds = load_detections(args.pred)
    if gt.video_id != preds.video_id:
        raise VideoMismatch(
            f"video_id differs: {gt.video_id!r} vs {preds.video_id!r}"
        )
    if gt.frame_count != preds.frame_count:
        raise VideoMismatch(
            f"frame_count differs: {gt.frame_count} vs {preds.frame_count}"
        )
    w = args.weights
    frames_out = []
    totals = {"cls": 0.0, "l1": 0.0, "giou": 0.0, "angle": 0.0}
    for fd in preds.frames:
        f = fd.frame_index
        gts = [
            GroundTruthInstance(
                box=_normalized_box(quad_to_rotated(inst.quad),
                                    gt.width, gt.height)
            )
            for inst in gt.frames.get(f, []) if not inst.ignore
        ]
        predicted = [
            PredictedInstance(
                class_prob=d.score,
                box=_normalized_box(d.box, gt.width, gt.height),
            )
            for d in fd.detections
        ]
        while len(gts) < len(predicted):
            gts.append(GroundTruthInstance.padding())
        while len(predicted) < len(gts):
            predicted.append(PredictedInstance(class_prob=0.0,
                                               box=GroundTruthInstance.padding().box))
        assignment = match_sets(gts, predicted, w)
        terms = set_loss_terms(gts, predicted, assignment, w)
        for key in totals:
            totals[key] += terms[key]
        frames_out.append({
            "frame": f,
            "pairs": [list(p) for p in assignment.pairs],
            "match_cost": assignment.total_cost,
            "terms": terms,
            "loss": math.fsum(terms.values()),
        })
    payload = {
        "video_id": gt.video_id,
        "weights": {"w_cls": w.w_cls, "w_l1": w.w_l1, "w_giou": w.w_giou,
                    "w_angle": w.w_angle},
        "frames": frames_out,
        "totals": totals,
        "loss": math.fsum(totals.values()),
    }
    _write_json(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_objects=args.objects, n_frames=args.frames, motion=args.motion,
        noise_sigma=args.noise_sigma, drop_prob=args.drop_prob,
        seed=args.seed,
    )
    gt, dets = generate(cfg)
    save_annotation(gt, args.gt_out)
    save_detections(dets, args.dets_out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="vtspot",
                     description="video text tracking and spotting toolkit")
    parser.add_argument("--version", action="version",
                        version=f"vtspot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_eval = sub.add_parser("evaluate", help="score predictions against a reference")
    p_eval.add_argument("gt", nargs="?", help="reference annotation JSON")
    p_eval.add_argument("pred", nargs="?", help="prediction annotation JSON")
    p_eval.add_argument("--gt-dir", help="directory of reference files")
    p_eval.add_argument("--pred-dir", help="directory of prediction files")
    p_eval.add_argument("--task", choices=("detection", "tracking", "spotting"),
                        default="tracking")
    p_eval.add_argument("--iou-thresh", type=float, default=0.5,
                        help="match gate for detection and CLEAR numbers")
    p_eval.add_argument("--iou-floor", type=float, default=0.0,
                        help="minimum IoU (strict) for identity overlap")
    p_eval.add_argument("--case-insensitive", action="store_true",
                        help="fold case when comparing transcriptions")
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")
    p_eval.add_argument("--out", help="write the report here instead of stdout")
    p_eval.add_argument("--jobs", type=_positive_int, default=_default_jobs(),
                        help="parallel workers for corpus evaluation "
                             "(default: VTSPOT_JOBS or 1)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_track = sub.add_parser("track", help="link detections into trajectories")
    p_track.add_argument("detections", help="detections JSON")
    p_track.add_argument("--method",
                         choices=("transformer-assoc", "linker"),
                         default="transformer-assoc")
    p_track.add_argument("--iou-thresh", type=float, default=None,
                         help="association gate (default 0.5, linker 0.3)")
    p_track.add_argument("--max-age", type=int, default=0,
                         help="frames a track survives unmatched")
    p_track.add_argument("--min-score", type=float, default=0.0)
    p_track.add_argument("--window", type=int, default=3,
                         help="linker: how many past frames to search")
    p_track.add_argument("--max-norm-edit", type=float, default=0.3,
                         help="linker: normalized edit-distance gate")
    p_track.add_argument("--out")
    p_track.set_defaults(func=cmd_track)

    p_interp = sub.add_parser("interpolate",
                              help="densify a sampled annotation")
    p_interp.add_argument("annotation", help="sampled annotation JSON")
    p_interp.add_argument("--frames", type=_positive_int, default=None,
                          help="dense frame count (default: inferred)")
    p_interp.add_argument("--k", type=_positive_int, default=3,
                          help="sampling stride of the input")
    p_interp.add_argument("--out")
    p_interp.set_defaults(func=cmd_interpolate)

    p_sample = sub.add_parser("sample", help="keep every k-th frame")
    p_sample.add_argument("annotation", help="dense annotation JSON")
    p_sample.add_argument("--k", type=_positive_int, default=3)
    p_sample.add_argument("--out")
    p_sample.set_defaults(func=cmd_sample)

    p_loss = sub.add_parser("loss",
                            help="set-prediction loss of detections vs reference")
    p_loss.add_argument("gt", help="reference annotation JSON")
    p_loss.add_argument("pred", help="detections JSON with scores")
    p_loss.add_argument("--weights", type=_weights,
                        default=CostWeights(),
                        help="w_cls,w_l1,w_giou,w_angle (default 1,5,2,2)")
    p_loss.add_argument("--out")
    p_loss.set_defaults(func=cmd_loss)

    p_synth = sub.add_parser("synth", help="generate a synthetic video world")
    p_synth.add_argument("--objects", type=_positive_int, default=4)
    p_synth.add_argument("--frames", type=_positive_int, default=30)
    p_synth.add_argument("--motion",
                         choices=("static", "constant_velocity", "rotate"),
                         default="constant_velocity")
    p_synth.add_argument("--noise-sigma", type=float, default=0.0)
    p_synth.add_argument("--drop-prob", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--gt-out", required=True)
    p_synth.add_argument("--dets-out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    try:
        return args.func(args)
    except VideoMismatch as exc:
        print(f"vtspot: mismatched inputs: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"vtspot: bad input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vtspot: cannot read or write: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"vtspot: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
