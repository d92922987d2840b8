"""Detection records, location-size prior, IoU matching and average precision."""

from dataclasses import dataclass, replace
from decimal import Decimal, localcontext
import json
import math

import numpy as np

from carcensus import constants as C
from carcensus._io import DataError, atomic_write_text, dumps_json, read_json


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box needs positive width and height, got {self.w}x{self.h}")

    @property
    def area(self):
        return self.w * self.h

    @property
    def center_y(self):
        return self.y + 0.5 * self.h

    def within(self, width, height):
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height

    def as_list(self):
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class Detection:
    image_id: str
    region_id: str
    bbox: BoundingBox
    raw_score: float
    adjusted_score: float | None = None
    calibrated_prob: float | None = None
    class_hypotheses: tuple = ()
    prior_clamped: bool = False

    def __post_init__(self):
        hyps = self.class_hypotheses
        if len(hyps) > C.TOP_K:
            raise ValueError(f"at most {C.TOP_K} class hypotheses allowed, got {len(hyps)}")
        total = 0.0
        prev = math.inf
        for cid, p in hyps:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"hypothesis probability {p} for {cid!r} outside [0, 1]")
            if p > prev:
                raise ValueError("class hypotheses must be sorted by probability, descending")
            prev = p
            total += p
        if total > 1.0 + 1e-6:
            raise ValueError(f"hypothesis probabilities sum to {total} > 1")

    def score(self, use_adjusted=False):
        if use_adjusted:
            if self.adjusted_score is None:
                raise ValueError(f"detection in {self.image_id!r} has no adjusted score")
            return self.adjusted_score
        return self.raw_score


def iou(a, b):
    """Intersection over union of two axis-aligned boxes."""
    if a == b:
        return 1.0
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # rounding in the edge arithmetic can push the ratio just past 1
    return min(1.0, inter / (a.w * a.h + b.w * b.h - inter))


@dataclass(frozen=True)
class LocationSizePrior:
    """Additive score offsets binned by normalized center-y and log box area.

    ``weights[i, j]`` applies to center-y bin ``i`` and log-area bin ``j``.
    """

    y_edges: tuple
    logarea_edges: tuple
    weights: tuple  # tuple of row tuples
    image_width: int = C.IMAGE_WIDTH
    image_height: int = C.IMAGE_HEIGHT

    def __post_init__(self):
        for name in ("y_edges", "logarea_edges"):
            e = getattr(self, name)
            if len(e) < 2 or any(not b > a for a, b in zip(e, e[1:])):
                raise ValueError(f"{name} must be strictly increasing with at least 2 edges")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.y_edges) - 1, len(self.logarea_edges) - 1):
            raise ValueError(f"weights shape {w.shape} does not match bin edges")
        if not np.all(np.isfinite(w)):
            raise ValueError("prior weights must be finite")

    @classmethod
    def uniform(cls, n_y=8, n_area=8, logarea_range=(math.log(50 * 50), math.log(C.IMAGE_WIDTH * C.IMAGE_HEIGHT))):
        y_edges = tuple(np.linspace(0.0, 1.0, n_y + 1).tolist())
        a_edges = tuple(np.linspace(*logarea_range, n_area + 1).tolist())
        return cls(y_edges, a_edges, tuple((0.0,) * n_area for _ in range(n_y)))

    @classmethod
    def fit(cls, boxes, n_y=8, n_area=8, logarea_range=None, smoothing=1.0,
            image_width=C.IMAGE_WIDTH, image_height=C.IMAGE_HEIGHT):
        """Fit log relative frequencies of true boxes; the most common cell gets 0."""
        cy = np.array([b.center_y / image_height for b in boxes], dtype=float)
        la = np.array([math.log(b.area) for b in boxes], dtype=float)
        if logarea_range is None:
            logarea_range = (math.log(50 * 50), math.log(image_width * image_height))
        y_edges = np.linspace(0.0, 1.0, n_y + 1)
        a_edges = np.linspace(logarea_range[0], logarea_range[1], n_area + 1)
        iy = np.clip(np.searchsorted(y_edges, cy, side="right") - 1, 0, n_y - 1)
        ia = np.clip(np.searchsorted(a_edges, la, side="right") - 1, 0, n_area - 1)
        counts = np.zeros((n_y, n_area))
        np.add.at(counts, (iy, ia), 1.0)
        counts += smoothing
        w = np.log(counts / counts.max())
        return cls(tuple(y_edges.tolist()), tuple(a_edges.tolist()),
                   tuple(tuple(r) for r in w.tolist()), image_width, image_height)

    def cell(self, box):
        """Return ``(row, col, clamped)`` for a box."""
        cy = box.center_y / self.image_height
        la = math.log(box.area)
        row, c1 = _bin(self.y_edges, cy)
        col, c2 = _bin(self.logarea_edges, la)
        return row, col, c1 or c2

    def to_json(self):
        return {
            "image_width": self.image_width,
            "image_height": self.image_height,
            "y_edges": list(self.y_edges),
            "logarea_edges": list(self.logarea_edges),
            "weights": [list(r) for r in self.weights],
        }

    @classmethod
    def from_json(cls, d):
        return cls(tuple(d["y_edges"]), tuple(d["logarea_edges"]),
                   tuple(tuple(r) for r in d["weights"]),
                   d.get("image_width", C.IMAGE_WIDTH), d.get("image_height", C.IMAGE_HEIGHT))


def _bin(edges, v):
    n = len(edges) - 1
    if v < edges[0]:
        return 0, True
    if v > edges[-1]:
        return n - 1, True
    i = int(np.searchsorted(edges, v, side="right")) - 1
    return min(i, n - 1), False


def apply_prior(det, prior):
    """Add the prior's log-weight for the detection's cell to its raw score.

    Boxes outside the histogram support use the nearest cell and are flagged
    through ``prior_clamped``.
    """
    row, col, clamped = prior.cell(det.bbox)
    return replace(det, adjusted_score=det.raw_score + prior.weights[row][col], prior_clamped=clamped)


def save_prior(path, prior):
    atomic_write_text(path, dumps_json(prior.to_json()))


def load_prior(path):
    return LocationSizePrior.from_json(read_json(path))


def threshold(dets, tau, use_adjusted=False):
    """Keep detections scoring at least ``tau``, in input order."""
    return [d for d in dets if d.score(use_adjusted) >= tau]


def match_greedy(dets, truths, iou_min=C.IOU_MIN):
    """Label each detection of one image 1 (true positive) or 0.

    ``dets`` must already be sorted by score, descending. Each detection
    claims the unmatched truth with the highest IoU (earlier truth wins ties)
    if that IoU reaches ``iou_min``.
    """
    taken = [False] * len(truths)
    labels = []
    for d in dets:
        best, best_j = -1.0, -1
        for j, t in enumerate(truths):
            if taken[j]:
                continue
            v = iou(d.bbox, t)
            if v > best:
                best, best_j = v, j
        if best_j >= 0 and best >= iou_min:
            taken[best_j] = True
            labels.append(1)
        else:
            labels.append(0)
    return labels


def match_images(dets, truths_by_image, iou_min=C.IOU_MIN, use_adjusted=False):
    """Match a multi-image detection list.

    Returns ``(scores, labels, n_truth)`` with scores/labels sorted by score
    descending across all images (stable on ties).
    """
    by_image = {}
    for d in dets:
        by_image.setdefault(d.image_id, []).append(d)
    scored = []
    for image_id, group in by_image.items():
        group = sorted(group, key=lambda d: -d.score(use_adjusted))
        labels = match_greedy(group, truths_by_image.get(image_id, []), iou_min)
        scored.extend((d.score(use_adjusted), y) for d, y in zip(group, labels))
    scored.sort(key=lambda t: -t[0])
    n_truth = sum(len(v) for v in truths_by_image.values())
    return [s for s, _ in scored], [y for _, y in scored], n_truth


def average_precision(labels, n_truth):
    """Mean of the precision at each true-positive rank over all ``n_truth`` truths.

    Accumulated in 60-digit decimal so the returned float is the correctly
    rounded value of the exact rational for any realistic list length.
    """
    if n_truth < 1:
        raise ValueError("average precision is undefined without ground truth")
    tp = 0
    with localcontext() as ctx:
        ctx.prec = 60
        total = Decimal(0)
        for rank, y in enumerate(labels, start=1):
            if y:
                tp += 1
                total += Decimal(tp) / rank
        if tp > n_truth:
            raise ValueError(f"{tp} positives exceed {n_truth} ground-truth boxes")
        return float(total / n_truth)


def precision_recall(labels, n_truth):
    labels = np.asarray(labels, dtype=float)
    tp = np.cumsum(labels)
    ranks = np.arange(1, len(labels) + 1)
    return tp / ranks, tp / n_truth


# -- JSONL files -----------------------------------------------------------

def _parse_detection(obj):
    bbox = BoundingBox(*[float(v) for v in obj["bbox"]])
    hyps = tuple((str(c), float(p)) for c, p in obj.get("classes", []))
    return Detection(
        image_id=str(obj["image_id"]),
        region_id=str(obj.get("region_id", "")),
        bbox=bbox,
        raw_score=float(obj["score"]),
        adjusted_score=None if obj.get("adjusted_score") is None else float(obj["adjusted_score"]),
        calibrated_prob=None if obj.get("calibrated_prob") is None else float(obj["calibrated_prob"]),
        class_hypotheses=hyps,
    )


def _read_jsonl(path, parse):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(parse(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(str(exc), path, lineno) from None
    return out


def read_detections(path):
    return _read_jsonl(path, _parse_detection)


def read_truths(path):
    """Return ``{image_id: [BoundingBox, ...]}`` in file order."""
    out = {}
    for image_id, box in _read_jsonl(path, lambda o: (str(o["image_id"]), BoundingBox(*[float(v) for v in o["bbox"]]))):
        out.setdefault(image_id, []).append(box)
    return out


def detection_to_json(d):
    obj = {
        "image_id": d.image_id,
        "region_id": d.region_id,
        "bbox": d.bbox.as_list(),
        "score": d.raw_score,
        "classes": [[c, p] for c, p in d.class_hypotheses],
    }
    if d.adjusted_score is not None:
        obj["adjusted_score"] = d.adjusted_score
    if d.calibrated_prob is not None:
        obj["calibrated_prob"] = d.calibrated_prob
    return obj


def write_detections(path, dets):
    atomic_write_text(path, "".join(json.dumps(detection_to_json(d)) + "\n" for d in dets))


def write_truths(path, truths):
    """``truths`` is an iterable of ``(image_id, BoundingBox)`` pairs."""
    atomic_write_text(path, "".join(
        json.dumps({"image_id": i, "bbox": b.as_list()}) + "\n" for i, b in truths
    ))
