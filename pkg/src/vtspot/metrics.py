"""Evaluation stack for video text detection, tracking, and spotting.

Three families of numbers, all computed from two annotation documents
(reference and predictions) over the same video:

* detection quality: per-frame precision / recall / F-score under a
  one-to-one greedy IoU matching,
* CLEAR tracking quality: MOTA (misses, false positives, identity
  mismatches) and MOTP (mean matched IoU),
* identity quality: IDP / IDR / IDF1 from a global trajectory-level
  assignment, plus mostly-tracked / mostly-lost counts; the spotting
  variant additionally requires the transcriptions to agree before two
  boxes may count as the same identity.

Reference instances transcribed with the ignore marker are excluded, and
predictions lying on an ignored region are discarded rather than punished.
Every ratio with a zero denominator is reported as 0 and named in the
report's ``degenerate`` list.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

from .annotations import Instance, VideoAnnotation
from .errors import EmptyInput, MissingTranscription, VideoMismatch
from .geometry import Quad, quad_iou, quad_to_rotated, rotated_to_quad
from .matching import hungarian

__all__ = [
    "DetCounters",
    "MotCounters",
    "IdCounters",
    "MetricsReport",
    "eval_detection",
    "eval_mot",
    "eval_id",
    "eval_spotting",
    "evaluate",
    "aggregate",
    "normalize_transcription",
]

# predictions overlapping an ignored reference region at or above this IoU
# are dropped from identity evaluation (which has no iou_thresh of its own)
IGNORE_GATE = 0.5


# ---------------------------------------------------------------------------
# counters and the report
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class DetCounters:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "DetCounters") -> "DetCounters":
        return DetCounters(self.tp + other.tp, self.fp + other.fp,
                           self.fn + other.fn)


@dataclass(slots=True)
class MotCounters:
    misses: int = 0
    false_positives: int = 0
    mismatches: int = 0
    matches: int = 0
    gt_count: int = 0
    matched_iou_sum: float = 0.0

    def __add__(self, other: "MotCounters") -> "MotCounters":
        return MotCounters(
            self.misses + other.misses,
            self.false_positives + other.false_positives,
            self.mismatches + other.mismatches,
            self.matches + other.matches,
            self.gt_count + other.gt_count,
            self.matched_iou_sum + other.matched_iou_sum,
        )


@dataclass(slots=True)
class IdCounters:
    id_tp: int = 0
    id_fp: int = 0
    id_fn: int = 0
    gt_tracks: int = 0

    def __add__(self, other: "IdCounters") -> "IdCounters":
        return IdCounters(
            self.id_tp + other.id_tp,
            self.id_fp + other.id_fp,
            self.id_fn + other.id_fn,
            self.gt_tracks + other.gt_tracks,
        )


@dataclass(slots=True)
class MetricsReport:
    task: str
    precision: float = 0.0
    recall: float = 0.0
    fscore: float = 0.0
    mota: float = 0.0
    motp: float = 0.0
    idp: float = 0.0
    idr: float = 0.0
    idf1: float = 0.0
    mt: int = 0
    ml: int = 0
    det: DetCounters = field(default_factory=DetCounters)
    mot: MotCounters = field(default_factory=MotCounters)
    ids: IdCounters = field(default_factory=IdCounters)
    degenerate: tuple[str, ...] = ()
    video_id: str | None = None
    scenario: str | None = None

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "video_id": self.video_id,
            "scenario": self.scenario,
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "mota": self.mota,
            "motp": self.motp,
            "idp": self.idp,
            "idr": self.idr,
            "idf1": self.idf1,
            "mt": self.mt,
            "ml": self.ml,
            "degenerate": list(self.degenerate),
            "counters": {
                "detection": {"tp": self.det.tp, "fp": self.det.fp,
                              "fn": self.det.fn},
                "mot": {
                    "misses": self.mot.misses,
                    "false_positives": self.mot.false_positives,
                    "mismatches": self.mot.mismatches,
                    "matches": self.mot.matches,
                    "gt_count": self.mot.gt_count,
                    "matched_iou_sum": self.mot.matched_iou_sum,
                },
                "identity": {
                    "id_tp": self.ids.id_tp,
                    "id_fp": self.ids.id_fp,
                    "id_fn": self.ids.id_fn,
                    "gt_tracks": self.ids.gt_tracks,
                },
            },
        }
        return out


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def normalize_transcription(text: str, case_insensitive: bool = False) -> str:
    """Canonical form used for transcription equality: Unicode NFC plus
    surrounding-whitespace trim, with optional case folding."""
    out = unicodedata.normalize("NFC", text).strip()
    return out.casefold() if case_insensitive else out


def _check_same_video(gt: VideoAnnotation, pred: VideoAnnotation) -> None:
    if gt.video_id != pred.video_id:
        raise VideoMismatch(
            f"video_id differs: {gt.video_id!r} vs {pred.video_id!r}"
        )
    if gt.frame_count != pred.frame_count:
        raise VideoMismatch(
            f"frame_count differs: {gt.frame_count} vs {pred.frame_count}"
        )


def _usable_quad(quad: Quad) -> Quad:
    """Overlap math needs convex input; a non-convex (but simple) quad is
    replaced by its minimum-area enclosing rotated box."""
    return quad if quad.is_convex() else rotated_to_quad(quad_to_rotated(quad))


@dataclass(slots=True)
class _Slot:
    track_id: int
    quad: Quad
    transcription: str | None


def _split_frame(instances: list[Instance]) -> tuple[list[_Slot], list[Quad]]:
    """Active slots and ignored-region quads for one frame."""
    active, ignored = [], []
    for inst in instances:
        if inst.ignore:
            ignored.append(_usable_quad(inst.quad))
        else:
            active.append(
                _Slot(inst.track_id, _usable_quad(inst.quad), inst.transcription)
            )
    return active, ignored


def _on_ignored_region(quad: Quad, ignored: list[Quad], gate: float) -> bool:
    return any(quad_iou(quad, region) >= gate for region in ignored)


def _gated_max_iou_pairs(
    ious: list[list[float]], gate: float
) -> list[tuple[int, int]]:
    """Assignment maximizing total IoU over pairs at or above the gate.

    Cells under the gate are priced like the virtual padding so the solver
    cannot benefit from choosing them; any that still appear in the raw
    solution are discarded.
    """
    n_r = len(ious)
    n_c = len(ious[0]) if n_r else 0
    if n_r == 0 or n_c == 0:
        return []
    n = max(n_r, n_c)
    cost = [[1.0] * n for _ in range(n)]
    for r in range(n_r):
        for c in range(n_c):
            if ious[r][c] >= gate:
                cost[r][c] = 1.0 - ious[r][c]
    return [
        (r, c)
        for r, c in hungarian(cost).pairs
        if r < n_r and c < n_c and ious[r][c] >= gate
    ]


def _ratio(num: float, den: float, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------


def _detection_counts(
    gt: VideoAnnotation, pred: VideoAnnotation, iou_thresh: float
) -> DetCounters:
    _check_same_video(gt, pred)
    counters = DetCounters()
    for f in range(gt.frame_count):
        gt_active, gt_ignored = _split_frame(gt.frames.get(f, []))
        pred_all, _ = _split_frame(pred.frames.get(f, []))
        preds = [
            p for p in pred_all
            if not _on_ignored_region(p.quad, gt_ignored, iou_thresh)
        ]
        pairs = []
        for gi, g in enumerate(gt_active):
            for pi, p in enumerate(preds):
                overlap = quad_iou(g.quad, p.quad)
                if overlap >= iou_thresh:
                    pairs.append((-overlap, gi, pi))
        pairs.sort()
        used_g: set[int] = set()
        used_p: set[int] = set()
        tp = 0
        for _, gi, pi in pairs:
            if gi in used_g or pi in used_p:
                continue
            used_g.add(gi)
            used_p.add(pi)
            tp += 1
        counters.tp += tp
        counters.fn += len(gt_active) - tp
        counters.fp += len(preds) - tp
    return counters


def eval_detection(
    gt: VideoAnnotation, pred: VideoAnnotation, iou_thresh: float = 0.5
) -> tuple[float, float, float]:
    """Per-frame greedy one-to-one matching; returns (precision, recall,
    F-score), each 0 when its denominator is empty."""
    c = _detection_counts(gt, pred, iou_thresh)
    flags: list[str] = []
    p = _ratio(c.tp, c.tp + c.fp, "precision", flags)
    r = _ratio(c.tp, c.tp + c.fn, "recall", flags)
    f = _ratio(2 * p * r, p + r, "fscore", flags)
    return p, r, f


# ---------------------------------------------------------------------------
# CLEAR tracking
# ---------------------------------------------------------------------------


def eval_mot(
    gt: VideoAnnotation, pred: VideoAnnotation, iou_thresh: float = 0.5
) -> tuple[float, float, MotCounters]:
    """CLEAR procedure: correspondences established frame by frame, kept
    while they stay above the gate, mismatches counted the first frame a
    reference track's partner id changes versus its last established one."""
    _check_same_video(gt, pred)
    counters = MotCounters()
    active_corr: dict[int, int] = {}
    last_match: dict[int, int] = {}

    for f in range(gt.frame_count):
        gt_active, gt_ignored = _split_frame(gt.frames.get(f, []))
        pred_all, _ = _split_frame(pred.frames.get(f, []))
        preds = [
            p for p in pred_all
            if not _on_ignored_region(p.quad, gt_ignored, iou_thresh)
        ]
        gt_by_id = {s.track_id: s for s in gt_active}
        pred_by_id = {s.track_id: s for s in preds}

        matches: dict[int, int] = {}
        matched_pred: set[int] = set()
        iou_of: dict[int, float] = {}

        # keep still-valid correspondences from the previous frame
        for gid, pid in active_corr.items():
            if gid in gt_by_id and pid in pred_by_id:
                overlap = quad_iou(gt_by_id[gid].quad, pred_by_id[pid].quad)
                if overlap >= iou_thresh:
                    matches[gid] = pid
                    matched_pred.add(pid)
                    iou_of[gid] = overlap

        # assign the remainder, maximizing total IoU above the gate
        rem_g = [s for s in gt_active if s.track_id not in matches]
        rem_p = [s for s in preds if s.track_id not in matched_pred]
        ious = [[quad_iou(g.quad, p.quad) for p in rem_p] for g in rem_g]
        for gi, pi in _gated_max_iou_pairs(ious, iou_thresh):
            gid, pid = rem_g[gi].track_id, rem_p[pi].track_id
            matches[gid] = pid
            iou_of[gid] = ious[gi][pi]
            if gid in last_match and last_match[gid] != pid:
                counters.mismatches += 1

        for gid, pid in matches.items():
            last_match[gid] = pid

        counters.gt_count += len(gt_active)
        counters.matches += len(matches)
        counters.misses += len(gt_active) - len(matches)
        counters.false_positives += len(preds) - len(matches)
        counters.matched_iou_sum += sum(iou_of.values())
        active_corr = matches

    flags: list[str] = []
    errors = counters.misses + counters.false_positives + counters.mismatches
    mota = (
        1.0 - errors / counters.gt_count if counters.gt_count > 0
        else _ratio(0.0, 0.0, "mota", flags)
    )
    motp = _ratio(counters.matched_iou_sum, counters.matches, "motp", flags)
    return mota, motp, counters


# ---------------------------------------------------------------------------
# identity metrics
# ---------------------------------------------------------------------------


def _identity_tracks(
    ann: VideoAnnotation,
    *,
    is_prediction: bool,
    spotting: bool,
    case_insensitive: bool,
    ignored_by_frame: dict[int, list[Quad]] | None = None,
) -> dict[int, dict[int, tuple[Quad, str | None]]]:
    """Per-track frame slots for identity evaluation.

    Ignored reference instances are dropped; prediction slots sitting on an
    ignored region are dropped.  In spotting mode prediction slots must be
    transcribed, and all transcriptions are normalized once here.
    """
    tracks: dict[int, dict[int, tuple[Quad, str | None]]] = {}
    for f in sorted(ann.frames):
        for inst in ann.frames[f]:
            if inst.ignore:
                continue
            quad = _usable_quad(inst.quad)
            if is_prediction and ignored_by_frame:
                if _on_ignored_region(quad, ignored_by_frame.get(f, []),
                                      IGNORE_GATE):
                    continue
            text = inst.transcription
            if spotting:
                if is_prediction and text is None:
                    raise MissingTranscription(
                        f"prediction track {inst.track_id} frame {f} has no "
                        "transcription"
                    )
                text = normalize_transcription(text or "", case_insensitive)
            tracks.setdefault(inst.track_id, {})[f] = (quad, text)
    return tracks


def _overlap(
    g_frames: dict[int, tuple[Quad, str | None]],
    p_frames: dict[int, tuple[Quad, str | None]],
    iou_floor: float,
    spotting: bool,
) -> int:
    count = 0
    for f in g_frames.keys() & p_frames.keys():
        g_quad, g_text = g_frames[f]
        p_quad, p_text = p_frames[f]
        if spotting and g_text != p_text:
            continue
        if quad_iou(g_quad, p_quad) > iou_floor:
            count += 1
    return count


def eval_id(
    gt: VideoAnnotation,
    pred: VideoAnnotation,
    mode: str = "tracking",
    iou_floor: float = 0.0,
    *,
    case_insensitive: bool = False,
) -> tuple[float, float, float, int, int, IdCounters]:
    """Trajectory-level identity metrics.

    Two frame slots agree when both exist and their IoU strictly exceeds
    ``iou_floor``; in spotting mode the transcriptions must also be equal
    after normalization.  A global assignment between reference and
    predicted trajectories maximizes the total number of agreeing slots
    (id_tp); IDP, IDR, IDF1, MT, and ML all follow from it.
    """
    if mode not in ("tracking", "spotting"):
        raise ValueError(f"mode must be 'tracking' or 'spotting', got {mode!r}")
    _check_same_video(gt, pred)
    spotting = mode == "spotting"

    ignored_by_frame: dict[int, list[Quad]] = {}
    for f, instances in gt.frames.items():
        regions = [_usable_quad(i.quad) for i in instances if i.ignore]
        if regions:
            ignored_by_frame[f] = regions

    gt_tracks = _identity_tracks(
        gt, is_prediction=False, spotting=spotting,
        case_insensitive=case_insensitive,
    )
    pred_tracks = _identity_tracks(
        pred, is_prediction=True, spotting=spotting,
        case_insensitive=case_insensitive, ignored_by_frame=ignored_by_frame,
    )

    g_ids = sorted(gt_tracks)
    p_ids = sorted(pred_tracks)
    overlaps = [
        [_overlap(gt_tracks[g], pred_tracks[p], iou_floor, spotting)
         for p in p_ids]
        for g in g_ids
    ]

    assigned: dict[int, int] = {}
    if g_ids and p_ids:
        n = max(len(g_ids), len(p_ids))
        cost = [[0.0] * n for _ in range(n)]
        for gi in range(len(g_ids)):
            for pi in range(len(p_ids)):
                cost[gi][pi] = -float(overlaps[gi][pi])
        for gi, pi in hungarian(cost).pairs:
            if gi < len(g_ids) and pi < len(p_ids) and overlaps[gi][pi] > 0:
                assigned[gi] = pi

    id_tp = sum(overlaps[gi][pi] for gi, pi in assigned.items())
    total_gt = sum(len(frames) for frames in gt_tracks.values())
    total_pred = sum(len(frames) for frames in pred_tracks.values())

    counters = IdCounters(
        id_tp=id_tp,
        id_fp=total_pred - id_tp,
        id_fn=total_gt - id_tp,
        gt_tracks=len(g_ids),
    )
    flags: list[str] = []
    idp = _ratio(id_tp, total_pred, "idp", flags)
    idr = _ratio(id_tp, total_gt, "idr", flags)
    idf1 = _ratio(2 * id_tp, total_gt + total_pred, "idf1", flags)

    mt = ml = 0
    for gi, g in enumerate(g_ids):
        lifespan = len(gt_tracks[g])
        covered = overlaps[gi][assigned[gi]] if gi in assigned else 0
        coverage = covered / lifespan if lifespan else 0.0
        if coverage >= 0.8:
            mt += 1
        elif coverage < 0.2:
            ml += 1
    return idp, idr, idf1, mt, ml, counters


# ---------------------------------------------------------------------------
# composite reports
# ---------------------------------------------------------------------------


def _ratios_from_counters(report: MetricsReport) -> MetricsReport:
    """Recompute every ratio belonging to the report's task from its raw
    counters; used both for fresh reports and for aggregation."""
    flags: list[str] = []
    task = report.task
    det = report.det
    p = _ratio(det.tp, det.tp + det.fp, "precision", flags)
    r = _ratio(det.tp, det.tp + det.fn, "recall", flags)
    f = _ratio(2 * p * r, p + r, "fscore", flags)
    report.precision, report.recall, report.fscore = p, r, f
    if task != "detection":
        mot = report.mot
        errors = mot.misses + mot.false_positives + mot.mismatches
        report.mota = (
            1.0 - errors / mot.gt_count if mot.gt_count > 0
            else _ratio(0.0, 0.0, "mota", flags)
        )
        report.motp = _ratio(mot.matched_iou_sum, mot.matches, "motp", flags)
        ids = report.ids
        report.idp = _ratio(ids.id_tp, ids.id_tp + ids.id_fp, "idp", flags)
        report.idr = _ratio(ids.id_tp, ids.id_tp + ids.id_fn, "idr", flags)
        report.idf1 = _ratio(
            2 * ids.id_tp, 2 * ids.id_tp + ids.id_fp + ids.id_fn, "idf1", flags
        )
    report.degenerate = tuple(flags)
    return report


def evaluate(
    gt: VideoAnnotation,
    pred: VideoAnnotation,
    task: str = "tracking",
    *,
    iou_thresh: float = 0.5,
    iou_floor: float = 0.0,
    case_insensitive: bool = False,
) -> MetricsReport:
    """One-call evaluation producing a full report for the given task.

    detection: precision / recall / F-score only.  tracking: those plus
    CLEAR (MOTA, MOTP) and identity metrics on geometry alone.  spotting:
    CLEAR on geometry alone plus identity metrics that also require
    transcription agreement.
    """
    if task not in ("detection", "tracking", "spotting"):
        raise ValueError(f"unknown task {task!r}")
    report = MetricsReport(task=task, video_id=gt.video_id,
                           scenario=gt.scenario)
    report.det = _detection_counts(gt, pred, iou_thresh)
    if task != "detection":
        _, _, report.mot = eval_mot(gt, pred, iou_thresh)
        mode = "spotting" if task == "spotting" else "tracking"
        _, _, _, report.mt, report.ml, report.ids = eval_id(
            gt, pred, mode=mode, iou_floor=iou_floor,
            case_insensitive=case_insensitive,
        )
    return _ratios_from_counters(report)


def eval_spotting(
    gt: VideoAnnotation,
    pred: VideoAnnotation,
    *,
    iou_thresh: float = 0.5,
    iou_floor: float = 0.0,
    case_insensitive: bool = False,
) -> MetricsReport:
    """End-to-end spotting report: CLEAR numbers from geometry, identity
    numbers gated on matching transcriptions."""
    return evaluate(
        gt, pred, "spotting", iou_thresh=iou_thresh, iou_floor=iou_floor,
        case_insensitive=case_insensitive,
    )


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Corpus-level report: sum the raw counters of per-video reports and
    recompute every ratio from the sums (never averaging ratios)."""
    if not reports:
        raise EmptyInput("aggregate() needs at least one report")
    tasks = {r.task for r in reports}
    if len(tasks) > 1:
        raise ValueError(f"cannot aggregate mixed tasks: {sorted(tasks)}")
    out = MetricsReport(task=reports[0].task)
    for r in reports:
        out.det = out.det + r.det
        out.mot = out.mot + r.mot
        out.ids = out.ids + r.ids
        out.mt += r.mt
        out.ml += r.ml
    scenarios = {r.scenario for r in reports}
    if len(scenarios) == 1:
        out.scenario = reports[0].scenario
    return _ratios_from_counters(out)
