"""Greedy cross-frame linking of text objects by IoU and edit distance.

A deliberately simple baseline for detectors with no tracking head: each
object in the current frame is linked to the best open trajectory whose
latest element is at most ``window`` frames old, provided the boxes
overlap enough and the transcriptions are close in normalized Levenshtein
distance.  Matching is greedy in descending IoU, not globally optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .annotations import Trajectory, TrajectoryPoint
from .errors import NonMonotonicFrame
from .geometry import Quad, iou, quad_to_rotated

__all__ = ["LinkerConfig", "edit_distance", "link"]


@dataclass(frozen=True, slots=True)
class LinkerConfig:
    window: int = 3
    iou_threshold: float = 0.3
    max_norm_edit: float = 0.3

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not (0.0 <= self.max_norm_edit <= 1.0):
            raise ValueError(
                f"max_norm_edit must be in [0,1], got {self.max_norm_edit}"
            )


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            ))
        prev = cur
    return prev[-1]


def _norm_edit(a: str, b: str) -> float:
    return edit_distance(a, b) / max(len(a), len(b), 1)


class _OpenTrajectory:
    __slots__ = ("track_id", "frames", "last_frame", "last_box", "last_text")

    def __init__(self, track_id, frame_index, quad, text):
        self.track_id = track_id
        self.frames: dict[int, TrajectoryPoint] = {}
        self.append(frame_index, quad, text)

    def append(self, frame_index, quad, text):
        self.frames[frame_index] = TrajectoryPoint(quad=quad, transcription=text)
        self.last_frame = frame_index
        self.last_box = quad_to_rotated(quad)
        self.last_text = text


def link(
    frames: list[tuple[int, list[tuple[Quad, str]]]],
    cfg: LinkerConfig | None = None,
) -> list[Trajectory]:
    """Link per-frame (quad, transcription) objects into trajectories.

    ``frames`` holds (frame_index, objects) pairs ordered by frame index.
    Every input object lands in exactly one trajectory.
    """
    cfg = cfg if cfg is not None else LinkerConfig()
    open_trajs: list[_OpenTrajectory] = []
    next_id = 0
    last_index: int | None = None

    for frame_index, objects in frames:
        if last_index is not None and frame_index <= last_index:
            raise NonMonotonicFrame(
                f"frame {frame_index} after frame {last_index}"
            )
        last_index = frame_index

        candidates = [
            t for t in open_trajs
            if frame_index - t.last_frame <= cfg.window
        ]
        boxes = [quad_to_rotated(q) for q, _ in objects]

        # score every admissible (object, trajectory) pair once
        scored: list[list[tuple[float, int]]] = []
        for oi, (quad, text) in enumerate(objects):
            row = []
            for ci, traj in enumerate(candidates):
                overlap = iou(boxes[oi], traj.last_box)
                if overlap < cfg.iou_threshold:
                    continue
                if _norm_edit(text or "", traj.last_text or "") > cfg.max_norm_edit:
                    continue
                row.append((overlap, ci))
            scored.append(row)

        # greedy: objects claim trajectories in descending best-IoU order
        order = sorted(
            range(len(objects)),
            key=lambda oi: (-(max(scored[oi])[0] if scored[oi] else -1.0), oi),
        )
        taken: set[int] = set()
        for oi in order:
            quad, text = objects[oi]
            best = None
            for overlap, ci in scored[oi]:
                if ci in taken:
                    continue
                if best is None or overlap > best[0] or (
                    overlap == best[0] and ci < best[1]
                ):
                    best = (overlap, ci)
            if best is not None:
                ci = best[1]
                taken.add(ci)
                candidates[ci].append(frame_index, quad, text)
            else:
                open_trajs.append(
                    _OpenTrajectory(next_id, frame_index, quad, text)
                )
                next_id += 1

    return [
        Trajectory(track_id=t.track_id, frames=dict(sorted(t.frames.items())))
        for t in sorted(open_trajs, key=lambda t: t.track_id)
    ]
