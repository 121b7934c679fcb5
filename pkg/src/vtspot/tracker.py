"""IoU-gated track/detection association with optimal assignment.

The tracker is a sequential state machine over a stream of per-frame
detections.  Each step it predicts where every live track should be (a
constant-position guess unless an override box is supplied), scores every
track/detection pair by rotated-box IoU, and solves the resulting
assignment problem exactly.  Pairs below the IoU gate never match;
unmatched detections become new tracks and unmatched tracks age out after
``max_age`` missed frames.

Detections may carry a ``track_box``: an externally predicted box for the
same object in the next frame.  When a detection with a ``track_box`` is
matched, that box replaces the constant-position prediction on the
following step.  Explicit per-step overrides take precedence over these
carried boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotations import (
    Detection,
    FrameDetections,
    Trajectory,
    TrajectoryPoint,
)
from .errors import NonMonotonicFrame
from .geometry import RotatedBox, iou, rotated_to_quad
from .matching import hungarian

__all__ = ["TrackerConfig", "TrackState", "Tracker", "run"]

_MISS_COST = 1.0  # cost of leaving a track or detection unmatched (worst IoU)


@dataclass(frozen=True, slots=True)
class TrackerConfig:
    iou_threshold: float = 0.5
    max_age: int = 0
    min_score: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError(
                f"iou_threshold must be in (0,1], got {self.iou_threshold}"
            )
        if self.max_age < 0:
            raise ValueError(f"max_age must be >= 0, got {self.max_age}")
        if not (0.0 <= self.min_score <= 1.0):
            raise ValueError(f"min_score must be in [0,1], got {self.min_score}")


@dataclass(slots=True)
class TrackState:
    """One live identity: where it was, where we expect it, and its record."""

    track_id: int
    last_box: RotatedBox
    predicted_box: RotatedBox
    missed_frames: int = 0
    history: list[tuple[int, RotatedBox, str | None]] = field(default_factory=list)


class Tracker:
    """Sequential association machine.  One instance per video; step() must
    be called with strictly increasing frame indices."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg if cfg is not None else TrackerConfig()
        self.tracks: list[TrackState] = []
        self._retired: list[TrackState] = []
        self._next_id = 0
        self._last_frame: int | None = None
        self._carried_boxes: dict[int, RotatedBox] = {}

    def step(
        self,
        frame: FrameDetections,
        track_box_overrides: dict[int, RotatedBox] | None = None,
    ) -> tuple[list[TrackState], list[int], list[int]]:
        """Associate one frame of detections with the live tracks.

        Returns the live track list after the update, the IDs born this
        frame (in detection order), and the IDs that aged out.
        """
        if self._last_frame is not None and frame.frame_index <= self._last_frame:
            raise NonMonotonicFrame(
                f"frame {frame.frame_index} after frame {self._last_frame}"
            )
        self._last_frame = frame.frame_index

        detections = [d for d in frame.detections if d.score >= self.cfg.min_score]

        overrides = dict(self._carried_boxes)
        if track_box_overrides:
            overrides.update(track_box_overrides)
        for track in self.tracks:
            track.predicted_box = overrides.get(track.track_id, track.last_box)

        matches = self._associate(detections)
        matched_tracks = {t for t, _ in matches}
        matched_dets = {d for _, d in matches}

        self._carried_boxes = {}
        for ti, di in matches:
            track, det = self.tracks[ti], detections[di]
            track.history.append((frame.frame_index, det.box, det.transcription))
            track.last_box = det.box
            track.missed_frames = 0
            if det.track_box is not None:
                self._carried_boxes[track.track_id] = det.track_box

        born: list[int] = []
        for di, det in enumerate(detections):
            if di in matched_dets:
                continue
            track = TrackState(
                track_id=self._next_id,
                last_box=det.box,
                predicted_box=det.box,
                history=[(frame.frame_index, det.box, det.transcription)],
            )
            self._next_id += 1
            born.append(track.track_id)
            self.tracks.append(track)
            if det.track_box is not None:
                self._carried_boxes[track.track_id] = det.track_box

        dead: list[int] = []
        survivors: list[TrackState] = []
        n_prior = len(self.tracks) - len(born)
        for ti, track in enumerate(self.tracks):
            if ti >= n_prior or ti in matched_tracks:
                survivors.append(track)
                continue
            track.missed_frames += 1
            if track.missed_frames > self.cfg.max_age:
                dead.append(track.track_id)
                self._retired.append(track)
                self._carried_boxes.pop(track.track_id, None)
            else:
                survivors.append(track)
        self.tracks = survivors
        return self.tracks, born, dead

    def _associate(self, detections: list[Detection]) -> list[tuple[int, int]]:
        """Gated max-IoU assignment between live tracks and detections.

        Pairs under the gate are priced at the miss cost before solving, so
        the solver can never profit from an inadmissible pair; the accepted
        matching therefore maximizes total IoU among gated matchings.
        """
        n_t, n_d = len(self.tracks), len(detections)
        if n_t == 0 or n_d == 0:
            return []
        n = max(n_t, n_d)
        ious = [
            [iou(track.predicted_box, det.box) for det in detections]
            for track in self.tracks
        ]
        cost = [[_MISS_COST] * n for _ in range(n)]
        for ti in range(n_t):
            for di in range(n_d):
                if ious[ti][di] >= self.cfg.iou_threshold:
                    cost[ti][di] = 1.0 - ious[ti][di]
        assignment = hungarian(cost)
        return [
            (ti, di)
            for ti, di in assignment.pairs
            if ti < n_t and di < n_d and ious[ti][di] >= self.cfg.iou_threshold
        ]

    def trajectories(self) -> list[Trajectory]:
        """Every track ever born, dead or alive, sorted by ID."""
        out = []
        for track in sorted(self._retired + self.tracks, key=lambda t: t.track_id):
            points = {
                fi: TrajectoryPoint(quad=rotated_to_quad(box), transcription=text)
                for fi, box, text in track.history
            }
            out.append(Trajectory(track_id=track.track_id, frames=points))
        return out


def run(
    stream: list[FrameDetections], cfg: TrackerConfig | None = None
) -> list[Trajectory]:
    """Track a whole video: fold step() over the frames and collect every
    trajectory, wiring each matched detection's ``track_box`` into the next
    step's prediction."""
    tracker = Tracker(cfg)
    for frame in stream:
        tracker.step(frame)
    return tracker.trajectories()
