"""Bipartite set matching between ground-truth and predicted text instances.

A prediction is a rotated box plus the probability it is text; ground truth
is a rotated box or a "no object" padding entry. The pair cost rewards
confident predictions and penalizes L1 box error, the generalized-IoU gap,
and the cosine angle gap. A hand-rolled O(n^3) shortest-augmenting-path
solver finds the minimum-cost one-to-one matching, and the set loss scores a
matched set with log-likelihood class terms plus the same box terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteCost, SizeMismatch
from .geometry import RotatedBox, giou

_PROB_EPS = 1e-12


@dataclass(frozen=True, slots=True)
class PredictedInstance:
    """A predicted rotated box with its text-class probability."""

    class_prob: float
    box: RotatedBox

    def __post_init__(self):
        if not (0.0 <= self.class_prob <= 1.0):
            raise ValueError(f"class_prob must be in [0,1], got {self.class_prob}")


@dataclass(frozen=True, slots=True)
class GroundTruthInstance:
    """A ground-truth box, or a no-object padding entry when is_object is False."""

    box: RotatedBox
    is_object: bool = True

    @classmethod
    def padding(cls) -> "GroundTruthInstance":
        return cls(box=RotatedBox(0.0, 0.0, 1.0, 1.0, 0.0), is_object=False)


@dataclass(frozen=True, slots=True)
class CostWeights:
    w_cls: float = 1.0
    w_l1: float = 5.0
    w_giou: float = 2.0
    w_angle: float = 2.0

    def __post_init__(self):
        for name in ("w_cls", "w_l1", "w_giou", "w_angle"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Assignment:
    """A partial bijection between gt and pred indices with its total cost."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def angle_loss(a_gt: float, a_pred: float) -> float:
    """Cosine angle loss 1 - cos(a_pred - a_gt), in [0, 2].

    Works on the raw difference; callers wanting pi-periodic behavior should
    canonicalize angles first (box constructors already do).
    """
    return 1.0 - math.cos(a_pred - a_gt)


def _l1_box(a: RotatedBox, b: RotatedBox) -> float:
    return abs(a.cx - b.cx) + abs(a.cy - b.cy) + abs(a.w - b.w) + abs(a.h - b.h)


def pair_cost(gt: GroundTruthInstance, pred: PredictedInstance, w: CostWeights) -> float:
    """Matching cost of one (gt, pred) pair; 0 for no-object gt entries."""
    if not gt.is_object:
        return 0.0
    return (
        -w.w_cls * pred.class_prob
        + w.w_l1 * _l1_box(gt.box, pred.box)
        + w.w_giou * (1.0 - giou(gt.box, pred.box))
        + w.w_angle * angle_loss(gt.box.angle, pred.box.angle)
    )


def hungarian(cost) -> Assignment:
    """Exact minimum-cost assignment on a square matrix.

    Shortest-augmenting-path formulation with row/column potentials, O(n^3).
    Ties are broken by the lowest column index at every scan, so the result
    is deterministic for equal-cost optima.
    """
    n = len(cost)
    if n == 0:
        return Assignment((), 0.0)
    for i, row in enumerate(cost):
        if len(row) != n:
            raise ValueError(f"cost matrix must be square, row {i} has {len(row)} entries")
        for j, value in enumerate(row):
            if not math.isfinite(value):
                raise NonFiniteCost(f"cost[{i}][{j}] = {value!r}")

    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    col_to_row = [0] * (n + 1)  # 1-based; 0 means unassigned
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        col_to_row[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = col_to_row[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[col_to_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if col_to_row[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            col_to_row[j0] = col_to_row[j1]
            j0 = j1

    pairs = sorted((col_to_row[j] - 1, j - 1) for j in range(1, n + 1))
    total = math.fsum(cost[r][c] for r, c in pairs)
    return Assignment(tuple(pairs), total)


def match_sets(gts, preds, w: CostWeights = CostWeights()) -> Assignment:
    """Optimal one-to-one matching between equal-size gt and pred sets.

    Callers pad the ground truth with no-object entries up front; unequal
    sizes raise SizeMismatch.
    """
    if len(gts) != len(preds):
        raise SizeMismatch(f"{len(gts)} ground-truth entries vs {len(preds)} predictions")
    cost = [[pair_cost(g, p, w) for p in preds] for g in gts]
    return hungarian(cost)


def _clamp_prob(p: float) -> float:
    return min(max(p, _PROB_EPS), 1.0 - _PROB_EPS)


def set_loss_terms(gts, preds, assignment: Assignment, w: CostWeights) -> dict[str, float]:
    """Per-term breakdown of the set loss over the matched pairs.

    Keys: "cls" (negative log-likelihood, unweighted by construction), and
    the weighted "l1", "giou", "angle" box terms, which only real objects
    contribute to. No-object pairs pay -log of the predicted no-object
    probability instead.
    """
    terms = {"cls": 0.0, "l1": 0.0, "giou": 0.0, "angle": 0.0}
    for gi, pi in assignment.pairs:
        gt = gts[gi]
        pred = preds[pi]
        if gt.is_object:
            terms["cls"] += -math.log(_clamp_prob(pred.class_prob))
            terms["l1"] += w.w_l1 * _l1_box(gt.box, pred.box)
            terms["giou"] += w.w_giou * (1.0 - giou(gt.box, pred.box))
            terms["angle"] += w.w_angle * angle_loss(gt.box.angle, pred.box.angle)
        else:
            terms["cls"] += -math.log(_clamp_prob(1.0 - pred.class_prob))
    return terms


def set_loss(gts, preds, assignment: Assignment, w: CostWeights = CostWeights()) -> float:
    """Total set-prediction loss for an assignment produced by match_sets."""
    return math.fsum(set_loss_terms(gts, preds, assignment, w).values())
