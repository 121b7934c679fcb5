"""Data model and I/O for video text annotations, detections, and trajectories.

One JSON document describes one video:

    {
      "video_id": "clip_001",
      "width": 1280, "height": 720, "frame_count": 96,
      "frames": {
        "0": [{"id": 3, "points": [x1, y1, ..., x4, y4],
               "transcription": "SALE", "category": "scene"}],
        ...
      }
    }

Frame indices are decimal strings; ``points`` lists the quad's four corners.
A transcription of "###" marks an ignore region. Detection documents use the
same shape with "score" (and optionally "track_box") per entry and no "id".
Files whose name ends in ".gz" are read and written gzip-compressed.

This module also implements the sparse-annotation pipeline: ``sample`` keeps
every k-th frame, and ``interpolate`` rebuilds the dense video by linearly
interpolating each track's quad corners between consecutive sampled
appearances (never extrapolating past the first or last one).
"""

from __future__ import annotations

import enum
import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CornerCorrespondenceError,
    DuplicateTrackIdInFrame,
    OutOfRangeFrameIndex,
    SchemaError,
    SelfIntersectingQuad,
)
from .geometry import Point2, Quad, RotatedBox, quad_to_rotated

IGNORE_MARK = "###"


class TextCategory(enum.Enum):
    CAPTION = "caption"
    TITLE = "title"
    SCENE = "scene"
    OTHERS = "others"

    @classmethod
    def parse(cls, label: str) -> "TextCategory":
        try:
            return cls(label.lower())
        except (ValueError, AttributeError):
            valid = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown category {label!r}; expected one of {valid}") from None


@dataclass(frozen=True, slots=True)
class Instance:
    """One labeled text object in one frame.

    ``ignore`` is derived, never passed: an instance is an ignore region
    exactly when its transcription is the "###" marker.
    """

    track_id: int
    quad: Quad
    transcription: str | None
    category: TextCategory = TextCategory.OTHERS
    ignore: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ignore", self.transcription == IGNORE_MARK)


@dataclass
class VideoAnnotation:
    video_id: str
    width: int
    height: int
    frame_count: int
    frames: dict[int, list[Instance]]
    scenario: str | None = None

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"width/height must be positive, got {self.width}x{self.height}")
        for idx, instances in self.frames.items():
            if not (0 <= idx < self.frame_count):
                raise OutOfRangeFrameIndex(
                    f"frames.{idx}", f"frame index outside [0, {self.frame_count})"
                )
            seen: set[int] = set()
            for i, inst in enumerate(instances):
                if inst.track_id in seen:
                    raise DuplicateTrackIdInFrame(
                        f"frames.{idx}[{i}]", f"track id {inst.track_id} repeated in frame {idx}"
                    )
                seen.add(inst.track_id)

    def instances_at(self, idx: int) -> list[Instance]:
        return self.frames.get(idx, [])


@dataclass
class SampledAnnotation:
    """A VideoAnnotation restricted to the sampled frame lattice {0, k, 2k, ...}."""

    video_id: str
    width: int
    height: int
    frame_count: int
    k: int
    frames: dict[int, list[Instance]]
    scenario: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"sampling frequency must be >= 1, got {self.k}")
        for idx in self.frames:
            if idx % self.k != 0:
                raise ValueError(f"frame {idx} is not on the k={self.k} sampling lattice")


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    quad: Quad
    transcription: str | None = None
    category: TextCategory = TextCategory.OTHERS


@dataclass
class Trajectory:
    """One identity over time: frame index -> where it is and what it reads."""

    track_id: int
    frames: dict[int, TrajectoryPoint]

    def lifespan(self) -> int:
        return len(self.frames)


@dataclass(frozen=True, slots=True)
class Detection:
    """A per-frame detector output; ``track_box`` optionally carries an
    externally predicted next-frame box for the same object."""

    box: RotatedBox
    score: float
    transcription: str | None = None
    track_box: RotatedBox | None = None

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0,1], got {self.score}")


@dataclass
class FrameDetections:
    frame_index: int
    detections: list[Detection]

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass
class DetectionsFile:
    """A whole detections document: video metadata plus one FrameDetections
    per index in [0, frame_count), empty where the file listed none."""

    video_id: str
    width: int
    height: int
    frame_count: int
    frames: list[FrameDetections]


# ---------------------------------------------------------------------------
# sampling and interpolation
# ---------------------------------------------------------------------------


def sample(dense: VideoAnnotation, k: int) -> SampledAnnotation:
    """Keep only frames whose index is a multiple of k."""
    if k < 1:
        raise ValueError(f"sampling frequency must be >= 1, got {k}")
    kept = {idx: list(insts) for idx, insts in dense.frames.items() if idx % k == 0}
    return SampledAnnotation(
        video_id=dense.video_id,
        width=dense.width,
        height=dense.height,
        frame_count=dense.frame_count,
        k=k,
        frames=kept,
        scenario=dense.scenario,
    )


def _lerp_quad(a: Quad, b: Quad, t: float) -> Quad:
    pts = tuple(
        Point2(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y))
        for pa, pb in zip(a.corners, b.corners)
    )
    return Quad(pts)  # type: ignore[arg-type]


def interpolate(sampled: SampledAnnotation, frame_count: int) -> VideoAnnotation:
    """Expand sampled keyframes to a dense annotation.

    Each track's quad corners move linearly between its consecutive sampled
    appearances; transcription, category, and id are copied from the earlier
    keyframe. Sampled frames are carried over untouched, so endpoints are
    preserved bit for bit. Tracks are never extended before their first or
    after their last appearance. If corner-wise interpolation of some segment
    would self-intersect at the midpoint, the keyframes' corner orders do not
    correspond and CornerCorrespondenceError is raised.
    """
    frames: dict[int, list[Instance]] = {
        idx: list(insts) for idx, insts in sorted(sampled.frames.items())
    }

    per_track: dict[int, list[tuple[int, Instance]]] = {}
    for idx in sorted(sampled.frames):
        for inst in sampled.frames[idx]:
            per_track.setdefault(inst.track_id, []).append((idx, inst))

    for track_id in sorted(per_track):
        appearances = per_track[track_id]
        for (f0, inst0), (f1, inst1) in zip(appearances, appearances[1:]):
            span = f1 - f0
            if span <= 1:
                continue
            try:
                _lerp_quad(inst0.quad, inst1.quad, 0.5)
            except SelfIntersectingQuad:
                raise CornerCorrespondenceError(
                    f"track {track_id}: corner order of frames {f0} and {f1} "
                    f"does not correspond (midpoint quad self-intersects)"
                ) from None
            for f in range(f0 + 1, f1):
                t = (f - f0) / span
                try:
                    quad = _lerp_quad(inst0.quad, inst1.quad, t)
                except SelfIntersectingQuad:
                    raise CornerCorrespondenceError(
                        f"track {track_id}: interpolated quad at frame {f} self-intersects"
                    ) from None
                frames.setdefault(f, []).append(
                    Instance(
                        track_id=track_id,
                        quad=quad,
                        transcription=inst0.transcription,
                        category=inst0.category,
                    )
                )

    return VideoAnnotation(
        video_id=sampled.video_id,
        width=sampled.width,
        height=sampled.height,
        frame_count=frame_count,
        frames=dict(sorted(frames.items())),
        scenario=sampled.scenario,
    )


# ---------------------------------------------------------------------------
# trajectory views
# ---------------------------------------------------------------------------


def annotation_to_trajectories(ann: VideoAnnotation, include_ignored: bool = True) -> list[Trajectory]:
    """Group a per-frame annotation into per-identity trajectories."""
    by_id: dict[int, dict[int, TrajectoryPoint]] = {}
    for idx in sorted(ann.frames):
        for inst in ann.frames[idx]:
            if inst.ignore and not include_ignored:
                continue
            by_id.setdefault(inst.track_id, {})[idx] = TrajectoryPoint(
                quad=inst.quad, transcription=inst.transcription, category=inst.category
            )
    return [Trajectory(track_id=tid, frames=by_id[tid]) for tid in sorted(by_id)]


def trajectories_to_annotation(
    trajectories: list[Trajectory],
    video_id: str,
    width: int,
    height: int,
    frame_count: int,
    scenario: str | None = None,
) -> VideoAnnotation:
    frames: dict[int, list[Instance]] = {}
    for traj in sorted(trajectories, key=lambda t: t.track_id):
        for idx in sorted(traj.frames):
            pt = traj.frames[idx]
            frames.setdefault(idx, []).append(
                Instance(
                    track_id=traj.track_id,
                    quad=pt.quad,
                    transcription=pt.transcription,
                    category=pt.category,
                )
            )
    return VideoAnnotation(
        video_id=video_id,
        width=width,
        height=height,
        frame_count=frame_count,
        frames=dict(sorted(frames.items())),
        scenario=scenario,
    )


# ---------------------------------------------------------------------------
# wire format
# ---------------------------------------------------------------------------


def _open_read(source):
    if hasattr(source, "read"):
        return source, False
    path = Path(source)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8"), True
    return open(path, "r", encoding="utf-8"), True


def _open_write(target):
    if hasattr(target, "write"):
        return target, False
    path = Path(target)
    if path.suffix == ".gz":
        return gzip.open(path, "wt", encoding="utf-8"), True
    return open(path, "w", encoding="utf-8"), True


def _load_json(source):
    fh, owned = _open_read(source)
    try:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc}") from None
    finally:
        if owned:
            fh.close()


def _expect(doc, key, kind, path, kind_name=None):
    if key not in doc:
        raise SchemaError(f"{path}.{key}" if path else key, "missing required field")
    value = doc[key]
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{path}.{key}" if path else key, "expected an integer, got a boolean")
    if not isinstance(value, kind):
        name = kind_name or getattr(kind, "__name__", str(kind))
        raise SchemaError(
            f"{path}.{key}" if path else key,
            f"expected {name}, got {type(value).__name__}",
        )
    return value


def _parse_header(doc):
    if not isinstance(doc, dict):
        raise SchemaError("$", f"expected an object, got {type(doc).__name__}")
    video_id = _expect(doc, "video_id", str, "")
    width = _expect(doc, "width", int, "")
    height = _expect(doc, "height", int, "")
    frame_count = _expect(doc, "frame_count", int, "")
    frames = _expect(doc, "frames", dict, "", "object")
    if frame_count < 1:
        raise SchemaError("frame_count", f"must be >= 1, got {frame_count}")
    if width <= 0 or height <= 0:
        raise SchemaError("width", f"dimensions must be positive, got {width}x{height}")
    scenario = doc.get("scenario")
    if scenario is not None and not isinstance(scenario, str):
        raise SchemaError("scenario", f"expected string, got {type(scenario).__name__}")
    return video_id, width, height, frame_count, frames, scenario


def _parse_frame_index(key: str, frame_count: int) -> int:
    if not isinstance(key, str) or not key.lstrip("-").isdigit():
        raise SchemaError(f"frames.{key}", "frame index must be a decimal string")
    idx = int(key)
    if not (0 <= idx < frame_count):
        raise OutOfRangeFrameIndex(
            f"frames.{key}", f"frame index outside [0, {frame_count})"
        )
    return idx


def _parse_points(entry, path: str) -> Quad:
    pts = _expect(entry, "points", list, path)
    if len(pts) != 8:
        raise SchemaError(f"{path}.points", f"expected 8 numbers, got {len(pts)}")
    for i, v in enumerate(pts):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{path}.points[{i}]", f"expected a number, got {type(v).__name__}")
    try:
        return Quad.from_flat(pts)
    except SelfIntersectingQuad:
        raise SchemaError(f"{path}.points", "corners describe a self-intersecting quad") from None
    except ValueError as exc:
        raise SchemaError(f"{path}.points", str(exc)) from None


def _parse_transcription(entry, path: str) -> str | None:
    if "transcription" not in entry:
        raise SchemaError(f"{path}.transcription", "missing required field")
    value = entry["transcription"]
    if value is not None and not isinstance(value, str):
        raise SchemaError(
            f"{path}.transcription", f"expected string or null, got {type(value).__name__}"
        )
    return value


def _parse_category(entry, path: str) -> TextCategory:
    if "category" not in entry:
        return TextCategory.OTHERS
    raw = entry["category"]
    if not isinstance(raw, str):
        raise SchemaError(f"{path}.category", f"expected string, got {type(raw).__name__}")
    try:
        return TextCategory.parse(raw)
    except ValueError as exc:
        raise SchemaError(f"{path}.category", str(exc)) from None


def load_annotation(source) -> VideoAnnotation:
    """Parse an annotation document from a path or an open text stream."""
    doc = _load_json(source)
    video_id, width, height, frame_count, raw_frames, scenario = _parse_header(doc)
    frames: dict[int, list[Instance]] = {}
    for key in sorted(raw_frames, key=_numeric_key):
        idx = _parse_frame_index(key, frame_count)
        entries = raw_frames[key]
        if not isinstance(entries, list):
            raise SchemaError(f"frames.{key}", f"expected a list, got {type(entries).__name__}")
        instances: list[Instance] = []
        seen: set[int] = set()
        for i, entry in enumerate(entries):
            path = f"frames.{key}[{i}]"
            if not isinstance(entry, dict):
                raise SchemaError(path, f"expected an object, got {type(entry).__name__}")
            track_id = _expect(entry, "id", int, path)
            if track_id in seen:
                raise DuplicateTrackIdInFrame(path, f"track id {track_id} repeated in frame {key}")
            seen.add(track_id)
            instances.append(
                Instance(
                    track_id=track_id,
                    quad=_parse_points(entry, path),
                    transcription=_parse_transcription(entry, path),
                    category=_parse_category(entry, path),
                )
            )
        frames[idx] = instances
    return VideoAnnotation(
        video_id=video_id,
        width=width,
        height=height,
        frame_count=frame_count,
        frames=frames,
        scenario=scenario,
    )


def _numeric_key(key) -> tuple:
    s = str(key)
    return (0, int(s)) if s.lstrip("-").isdigit() else (1, 0)


def _annotation_payload(ann: VideoAnnotation) -> dict:
    payload: dict = {
        "video_id": ann.video_id,
        "width": ann.width,
        "height": ann.height,
        "frame_count": ann.frame_count,
    }
    if ann.scenario is not None:
        payload["scenario"] = ann.scenario
    payload["frames"] = {
        str(idx): [
            {
                "id": inst.track_id,
                "points": inst.quad.as_flat(),
                "transcription": inst.transcription,
                "category": inst.category.value,
            }
            for inst in ann.frames[idx]
        ]
        for idx in sorted(ann.frames)
    }
    return payload


def _dump_json(payload: dict, target) -> None:
    fh, owned = _open_write(target)
    try:
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    finally:
        if owned:
            fh.close()


def save_annotation(ann: VideoAnnotation, target) -> None:
    """Write an annotation document; canonical key order, UTF-8."""
    _dump_json(_annotation_payload(ann), target)


def save_trajectories(
    trajectories: list[Trajectory],
    video_id: str,
    width: int,
    height: int,
    frame_count: int,
    target,
) -> None:
    """Write trajectories as an annotation-shaped document (prediction flavor)."""
    ann = trajectories_to_annotation(trajectories, video_id, width, height, frame_count)
    save_annotation(ann, target)


def load_detections(source) -> DetectionsFile:
    """Parse a detections document into per-frame detection lists.

    Every frame index in [0, frame_count) gets an entry; frames the document
    does not mention come back empty.
    """
    doc = _load_json(source)
    video_id, width, height, frame_count, raw_frames, _ = _parse_header(doc)
    per_index: dict[int, list[Detection]] = {}
    for key in sorted(raw_frames, key=_numeric_key):
        idx = _parse_frame_index(key, frame_count)
        entries = raw_frames[key]
        if not isinstance(entries, list):
            raise SchemaError(f"frames.{key}", f"expected a list, got {type(entries).__name__}")
        dets: list[Detection] = []
        for i, entry in enumerate(entries):
            path = f"frames.{key}[{i}]"
            if not isinstance(entry, dict):
                raise SchemaError(path, f"expected an object, got {type(entry).__name__}")
            quad = _parse_points(entry, path)
            if "score" not in entry:
                raise SchemaError(f"{path}.score", "missing required field")
            score = entry["score"]
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise SchemaError(f"{path}.score", f"expected a number, got {type(score).__name__}")
            if not (0.0 <= score <= 1.0):
                raise SchemaError(f"{path}.score", f"must be in [0,1], got {score}")
            transcription = entry.get("transcription")
            if transcription is not None and not isinstance(transcription, str):
                raise SchemaError(
                    f"{path}.transcription",
                    f"expected string or null, got {type(transcription).__name__}",
                )
            track_box = None
            if entry.get("track_box") is not None:
                raw_tb = entry["track_box"]
                if not isinstance(raw_tb, list) or len(raw_tb) != 8:
                    raise SchemaError(f"{path}.track_box", "expected 8 numbers")
                try:
                    track_box = quad_to_rotated(Quad.from_flat(raw_tb))
                except ValueError as exc:
                    raise SchemaError(f"{path}.track_box", str(exc)) from None
            try:
                box = quad_to_rotated(quad)
            except ValueError as exc:
                raise SchemaError(f"{path}.points", str(exc)) from None
            dets.append(
                Detection(
                    box=box, score=float(score), transcription=transcription, track_box=track_box
                )
            )
        per_index[idx] = dets
    frames = [
        FrameDetections(frame_index=i, detections=per_index.get(i, []))
        for i in range(frame_count)
    ]
    return DetectionsFile(
        video_id=video_id, width=width, height=height, frame_count=frame_count, frames=frames
    )


def save_detections(dets: DetectionsFile, target) -> None:
    from .geometry import rotated_to_quad

    payload: dict = {
        "video_id": dets.video_id,
        "width": dets.width,
        "height": dets.height,
        "frame_count": dets.frame_count,
        "frames": {},
    }
    for frame in dets.frames:
        if not frame.detections:
            continue
        entries = []
        for d in frame.detections:
            entry: dict = {
                "points": rotated_to_quad(d.box).as_flat(),
                "score": d.score,
            }
            if d.transcription is not None:
                entry["transcription"] = d.transcription
            if d.track_box is not None:
                entry["track_box"] = rotated_to_quad(d.track_box).as_flat()
            entries.append(entry)
        payload["frames"][str(frame.frame_index)] = entries
    _dump_json(payload, target)
