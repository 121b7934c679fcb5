import gzip
import io
import json
import math
import random

import pytest

from vtspot.annotations import (
    Detection,
    FrameDetections,
    IGNORE_MARK,
    Instance,
    SampledAnnotation,
    TextCategory,
    Trajectory,
    TrajectoryPoint,
    VideoAnnotation,
    annotation_to_trajectories,
    interpolate,
    load_annotation,
    load_detections,
    sample,
    save_annotation,
    save_detections,
    save_trajectories,
    trajectories_to_annotation,
)
from vtspot.annotations import DetectionsFile
from vtspot.errors import (
    CornerCorrespondenceError,
    DuplicateTrackIdInFrame,
    OutOfRangeFrameIndex,
    SchemaError,
)
from vtspot.geometry import Point2, Quad, RotatedBox, rotated_to_quad


def rect(x0, y0, x1, y1) -> Quad:
    return Quad((Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)))


def inst(tid, quad, text="hello", category=TextCategory.SCENE) -> Instance:
    return Instance(track_id=tid, quad=quad, transcription=text, category=category)


def small_video(frames, frame_count=None, video_id="v0") -> VideoAnnotation:
    fc = frame_count if frame_count is not None else (max(frames) + 1 if frames else 1)
    return VideoAnnotation(
        video_id=video_id, width=640, height=480, frame_count=fc, frames=frames
    )


# ---------------------------------------------------------------------------
# model invariants
# ---------------------------------------------------------------------------


def test_category_parse_case_insensitive():
    assert TextCategory.parse("Caption") is TextCategory.CAPTION
    assert TextCategory.parse("SCENE") is TextCategory.SCENE
    assert TextCategory.parse("others") is TextCategory.OTHERS
    with pytest.raises(ValueError):
        TextCategory.parse("subtitle")


def test_ignore_follows_marker():
    a = inst(1, rect(0, 0, 10, 10), IGNORE_MARK)
    b = inst(2, rect(0, 0, 10, 10), "text")
    c = inst(3, rect(0, 0, 10, 10), None)
    assert a.ignore and not b.ignore and not c.ignore


def test_video_rejects_out_of_range_frame():
    with pytest.raises(OutOfRangeFrameIndex):
        small_video({5: []}, frame_count=3)


def test_video_rejects_duplicate_track_in_frame():
    q = rect(0, 0, 5, 5)
    with pytest.raises(DuplicateTrackIdInFrame):
        small_video({0: [inst(7, q), inst(7, q)]})


def test_detection_score_range():
    with pytest.raises(ValueError):
        Detection(box=RotatedBox(0, 0, 1, 1, 0), score=1.2)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def make_linear_video(n_frames=10, n_tracks=2) -> VideoAnnotation:
    """Tracks translating with exactly representable per-frame steps."""
    frames = {}
    for f in range(n_frames):
        items = []
        for t in range(n_tracks):
            x0 = 10.0 * t + 0.25 * f
            y0 = 5.0 * t + 0.5 * f
            items.append(inst(t, rect(x0, y0, x0 + 8.0, y0 + 3.0), f"word{t}"))
        frames[f] = items
    return small_video(frames, frame_count=n_frames)


def test_sample_k1_is_identity():
    dense = make_linear_video()
    s = sample(dense, 1)
    assert sorted(s.frames) == sorted(dense.frames)
    assert s.frames[3] == dense.frames[3]
    assert s.k == 1


def test_sample_k3_keeps_lattice():
    dense = make_linear_video(10)
    s = sample(dense, 3)
    assert sorted(s.frames) == [0, 3, 6, 9]


def test_sample_k_equal_frame_count():
    dense = make_linear_video(10)
    s = sample(dense, 10)
    assert sorted(s.frames) == [0]


def test_sample_rejects_bad_k():
    with pytest.raises(ValueError):
        sample(make_linear_video(), 0)


def test_sampled_annotation_enforces_lattice():
    with pytest.raises(ValueError):
        SampledAnnotation(
            video_id="v", width=10, height=10, frame_count=9, k=3,
            frames={2: []},
        )


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------


def test_interpolate_constant_quad():
    q = rect(10, 10, 30, 20)
    s = SampledAnnotation(
        video_id="v", width=100, height=100, frame_count=4, k=3,
        frames={0: [inst(0, q)], 3: [inst(0, q)]},
    )
    dense = interpolate(s, 4)
    for f in range(4):
        assert dense.frames[f][0].quad == q
        assert dense.frames[f][0].transcription == "hello"


def test_interpolate_linear_x():
    a = rect(10, 0, 12, 2)
    b = rect(16, 0, 18, 2)
    s = SampledAnnotation(
        video_id="v", width=100, height=100, frame_count=4, k=3,
        frames={0: [inst(0, a)], 3: [inst(0, b)]},
    )
    dense = interpolate(s, 4)
    assert dense.frames[1][0].quad.corners[0].x == pytest.approx(12.0, abs=1e-12)
    assert dense.frames[2][0].quad.corners[0].x == pytest.approx(14.0, abs=1e-12)


def test_interpolate_preserves_endpoints_exactly():
    dense = make_linear_video(10)
    s = sample(dense, 3)
    rebuilt = interpolate(s, 10)
    for f in (0, 3, 6, 9):
        assert rebuilt.frames[f] == dense.frames[f]


def test_interpolate_round_trips_linear_motion():
    dense = make_linear_video(10)  # last frame 9 is on the k=3 lattice
    rebuilt = interpolate(sample(dense, 3), 10)
    assert rebuilt.frames.keys() == dense.frames.keys()
    for f in dense.frames:
        assert sorted(rebuilt.frames[f], key=lambda i: i.track_id) == sorted(
            dense.frames[f], key=lambda i: i.track_id
        )


def test_sample_interpolate_sample_idempotent():
    dense = make_linear_video(13)
    s1 = sample(dense, 3)
    s2 = sample(interpolate(s1, 13), 3)
    assert s1.frames.keys() == s2.frames.keys()
    for f in s1.frames:
        assert sorted(s1.frames[f], key=lambda i: i.track_id) == sorted(
            s2.frames[f], key=lambda i: i.track_id
        )


def test_interpolate_never_extrapolates():
    q = rect(0, 0, 5, 5)
    s = SampledAnnotation(
        video_id="v", width=50, height=50, frame_count=13, k=3,
        frames={3: [inst(0, q)], 9: [inst(0, q)]},
    )
    dense = interpolate(s, 13)
    present = sorted(f for f, items in dense.frames.items() if items)
    assert present == list(range(3, 10))


def test_interpolate_translation_keeps_area_constant():
    rng = random.Random(4)
    for _ in range(20):
        w, h = rng.uniform(2, 20), rng.uniform(2, 20)
        x, y = rng.uniform(0, 50), rng.uniform(0, 50)
        dx, dy = rng.uniform(-30, 30), rng.uniform(-30, 30)
        a = rect(x, y, x + w, y + h)
        b = rect(x + dx, y + dy, x + dx + w, y + dy + h)
        s = SampledAnnotation(
            video_id="v", width=200, height=200, frame_count=7, k=6,
            frames={0: [inst(0, a)], 6: [inst(0, b)]},
        )
        dense = interpolate(s, 7)
        for f in range(7):
            area = dense.frames[f][0].quad.area
            assert area == pytest.approx(w * h, abs=1e-9)
            assert math.isfinite(area) and area > 0


def test_interpolate_detects_corner_mismatch():
    # endpoints are valid counter-clockwise quads, but the corner pairing
    # collapses to a bowtie halfway through
    a = Quad((Point2(-5, -5), Point2(5, -5), Point2(5, 5), Point2(-5, 5)))
    b = Quad((Point2(5, 5), Point2(-3, 5), Point2(-5, -3), Point2(7, -3)))
    s = SampledAnnotation(
        video_id="v", width=100, height=100, frame_count=4, k=3,
        frames={0: [Instance(0, a, "x", TextCategory.OTHERS)],
                3: [Instance(0, b, "x", TextCategory.OTHERS)]},
    )
    with pytest.raises(CornerCorrespondenceError):
        interpolate(s, 4)


def test_interpolate_bridges_skipped_sample():
    # a track absent from one middle keyframe is treated as one instance
    q0 = rect(0, 0, 4, 2)
    q6 = rect(6, 0, 10, 2)
    s = SampledAnnotation(
        video_id="v", width=50, height=50, frame_count=7, k=3,
        frames={0: [inst(0, q0)], 3: [], 6: [inst(0, q6)]},
    )
    dense = interpolate(s, 7)
    assert [f for f, items in sorted(dense.frames.items()) if items] == list(range(7))
    assert dense.frames[3][0].quad.corners[0].x == pytest.approx(3.0)


# ---------------------------------------------------------------------------
# wire format
# ---------------------------------------------------------------------------

MINIMAL_DOC = {
    "video_id": "clip",
    "width": 320,
    "height": 240,
    "frame_count": 2,
    "frames": {
        "0": [
            {
                "id": 4,
                "points": [10.0, 10.0, 50.0, 10.0, 50.0, 30.0, 10.0, 30.0],
                "transcription": "OPEN",
                "category": "scene",
            }
        ]
    },
}


def load_from_dict(doc):
    return load_annotation(io.StringIO(json.dumps(doc)))


def test_load_minimal_document():
    ann = load_from_dict(MINIMAL_DOC)
    assert ann.video_id == "clip"
    assert ann.frame_count == 2
    got = ann.frames[0][0]
    assert got == Instance(
        track_id=4, quad=rect(10, 10, 50, 30), transcription="OPEN",
        category=TextCategory.SCENE,
    )
    assert not got.ignore


def test_load_ignore_marker():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["frames"]["0"][0]["transcription"] = IGNORE_MARK
    ann = load_from_dict(doc)
    assert ann.frames[0][0].ignore


def test_round_trip_semantically_identical():
    ann = make_linear_video(7)
    buf = io.StringIO()
    save_annotation(ann, buf)
    again = load_annotation(io.StringIO(buf.getvalue()))
    assert again.video_id == ann.video_id
    assert again.frames == ann.frames


def test_save_is_byte_stable():
    ann = make_linear_video(9)
    first = io.StringIO()
    save_annotation(ann, first)
    second = io.StringIO()
    save_annotation(load_annotation(io.StringIO(first.getvalue())), second)
    assert first.getvalue() == second.getvalue()


def test_gzip_round_trip(tmp_path):
    ann = make_linear_video(5)
    path = tmp_path / "video.json.gz"
    save_annotation(ann, path)
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        raw = json.load(fh)
    assert raw["video_id"] == ann.video_id
    assert load_annotation(path).frames == ann.frames


def test_scenario_survives_round_trip():
    ann = make_linear_video(4)
    ann.scenario = "street view"
    buf = io.StringIO()
    save_annotation(ann, buf)
    assert load_annotation(io.StringIO(buf.getvalue())).scenario == "street view"


@pytest.mark.parametrize(
    "mutate,path_fragment,error",
    [
        (lambda d: d.pop("video_id"), "video_id", SchemaError),
        (lambda d: d.__setitem__("frame_count", 0), "frame_count", SchemaError),
        (lambda d: d["frames"]["0"][0].pop("points"), "frames.0[0].points", SchemaError),
        (
            lambda d: d["frames"]["0"][0].__setitem__("points", [1, 2, 3]),
            "frames.0[0].points",
            SchemaError,
        ),
        (
            lambda d: d["frames"]["0"][0].__setitem__("category", "billboard"),
            "frames.0[0].category",
            SchemaError,
        ),
        (lambda d: d["frames"].__setitem__("9", []), "frames.9", OutOfRangeFrameIndex),
        (lambda d: d["frames"].__setitem__("x1", []), "frames.x1", SchemaError),
        (
            lambda d: d["frames"]["0"].append(dict(d["frames"]["0"][0])),
            "frames.0[1]",
            DuplicateTrackIdInFrame,
        ),
        (lambda d: d["frames"]["0"][0].pop("transcription"), "transcription", SchemaError),
    ],
)
def test_schema_errors_point_at_field(mutate, path_fragment, error):
    doc = json.loads(json.dumps(MINIMAL_DOC))
    mutate(doc)
    with pytest.raises(error) as exc_info:
        load_from_dict(doc)
    assert path_fragment in str(exc_info.value)


def test_not_json_is_schema_error():
    with pytest.raises(SchemaError):
        load_annotation(io.StringIO("not json at all {"))


def test_bowtie_points_rejected():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["frames"]["0"][0]["points"] = [0, 0, 10, 0, 0, 10, 10, 10]
    with pytest.raises(SchemaError) as exc_info:
        load_from_dict(doc)
    assert "points" in str(exc_info.value)


def test_missing_category_defaults_to_others():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["frames"]["0"][0].pop("category")
    ann = load_from_dict(doc)
    assert ann.frames[0][0].category is TextCategory.OTHERS


# ---------------------------------------------------------------------------
# detections flavor
# ---------------------------------------------------------------------------

DETS_DOC = {
    "video_id": "clip",
    "width": 320,
    "height": 240,
    "frame_count": 3,
    "frames": {
        "1": [
            {
                "points": [10.0, 10.0, 50.0, 10.0, 50.0, 30.0, 10.0, 30.0],
                "score": 0.9,
                "transcription": "OPEN",
            }
        ]
    },
}


def test_load_detections_fills_empty_frames():
    df = load_detections(io.StringIO(json.dumps(DETS_DOC)))
    assert df.frame_count == 3
    assert [f.frame_index for f in df.frames] == [0, 1, 2]
    assert df.frames[0].detections == [] and df.frames[2].detections == []
    det = df.frames[1].detections[0]
    assert det.score == 0.9
    assert det.transcription == "OPEN"
    assert det.box.w == pytest.approx(40.0)
    assert det.box.h == pytest.approx(20.0)
    assert det.track_box is None


def test_load_detections_requires_score():
    doc = json.loads(json.dumps(DETS_DOC))
    doc["frames"]["1"][0].pop("score")
    with pytest.raises(SchemaError) as exc_info:
        load_detections(io.StringIO(json.dumps(doc)))
    assert "score" in str(exc_info.value)


def test_load_detections_score_range():
    doc = json.loads(json.dumps(DETS_DOC))
    doc["frames"]["1"][0]["score"] = 1.5
    with pytest.raises(SchemaError):
        load_detections(io.StringIO(json.dumps(doc)))


def test_load_detections_track_box():
    doc = json.loads(json.dumps(DETS_DOC))
    doc["frames"]["1"][0]["track_box"] = [12.0, 10.0, 52.0, 10.0, 52.0, 30.0, 12.0, 30.0]
    df = load_detections(io.StringIO(json.dumps(doc)))
    tb = df.frames[1].detections[0].track_box
    assert tb is not None
    assert tb.cx == pytest.approx(32.0)


def test_save_detections_round_trip():
    boxes = [RotatedBox(50, 40, 30, 10, 0.2), RotatedBox(100, 90, 20, 8, -0.5)]
    df = DetectionsFile(
        video_id="v", width=320, height=240, frame_count=2,
        frames=[
            FrameDetections(0, [Detection(box=boxes[0], score=0.75, transcription="hi")]),
            FrameDetections(1, [Detection(box=boxes[1], score=0.5, track_box=boxes[0])]),
        ],
    )
    buf = io.StringIO()
    save_detections(df, buf)
    again = load_detections(io.StringIO(buf.getvalue()))
    got = again.frames[0].detections[0]
    assert got.score == 0.75 and got.transcription == "hi"
    assert got.box.cx == pytest.approx(50.0, abs=1e-9)
    assert got.box.angle == pytest.approx(0.2, abs=1e-9)
    assert again.frames[1].detections[0].track_box.cx == pytest.approx(50.0, abs=1e-9)


# ---------------------------------------------------------------------------
# trajectory views
# ---------------------------------------------------------------------------


def test_trajectory_round_trip():
    ann = make_linear_video(6, n_tracks=3)
    trajs = annotation_to_trajectories(ann)
    assert [t.track_id for t in trajs] == [0, 1, 2]
    assert all(t.lifespan() == 6 for t in trajs)
    back = trajectories_to_annotation(trajs, ann.video_id, ann.width, ann.height, ann.frame_count)
    for f in ann.frames:
        assert sorted(back.frames[f], key=lambda i: i.track_id) == sorted(
            ann.frames[f], key=lambda i: i.track_id
        )


def test_save_trajectories_writes_annotation_schema():
    q = rect(5, 5, 25, 15)
    traj = Trajectory(track_id=2, frames={0: TrajectoryPoint(quad=q, transcription="go")})
    buf = io.StringIO()
    save_trajectories([traj], "vid", 100, 100, 1, buf)
    ann = load_annotation(io.StringIO(buf.getvalue()))
    assert ann.frames[0][0].track_id == 2
    assert ann.frames[0][0].transcription == "go"
    assert ann.frames[0][0].quad == q
