"""File-to-report orchestration used by the command line and the demos."""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from carcensus import constants as C
from carcensus._io import DataError, fmt_float, read_csv, write_csv
from carcensus.analytics import evaluate, sedan_truck_conditionals, tally_cities
from carcensus.calibration import calibrate
from carcensus.catalog import county_side, is_eligible
from carcensus.detection import apply_prior, threshold
from carcensus.estimator import cv_train
from carcensus.features import RegionCensus, aggregate_features, resolve_category

RIDGE_TARGETS = ("income", "vote_share")
SOFTMAX_TARGETS = {"race": C.RACE_CLASSES, "education": C.EDU_CLASSES}
_SOFT_PREFIX = {"race": "race_", "education": "edu_"}


@dataclass
class RunConfig:
    """Protocol settings for one run; the defaults are the published constants."""

    detection_threshold: float = C.DETECTION_THRESHOLD
    folds: int = C.FOLDS
    min_population: int = C.MIN_POPULATION
    min_cars: int = C.MIN_CARS
    iou_min: float = C.IOU_MIN
    top_k: int = C.TOP_K
    seed: int = 0
    lambda_grid: tuple = C.LAMBDA_GRID
    weighted: bool = False
    split: str = "county-initial"

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if not self.lambda_grid or min(self.lambda_grid) < 0:
            raise ValueError("lambda grid must be nonempty and nonnegative")

    def to_json(self):
        d = asdict(self)
        d["lambda_grid"] = list(self.lambda_grid)
        d["layout_version"] = C.FEATURE_LAYOUT_VERSION
        return d


def read_images(path):
    """``images.csv`` -> ``{region_id: image_count}``."""
    counts = {}
    seen = set()
    for lineno, row in read_csv(path, ("image_id", "region_id")):
        if row["image_id"] in seen:
            raise DataError(f"duplicate image_id {row['image_id']!r}", path, lineno, "image_id")
        seen.add(row["image_id"])
        counts[row["region_id"]] = counts.get(row["region_id"], 0) + 1
    return counts


def group_by_region(dets):
    out = {}
    for d in dets:
        out.setdefault(d.region_id, []).append(d)
    return out


def select_detections(dets, config, prior=None, calibration=None):
    """Apply the prior (if any), threshold, and attach calibrated probabilities."""
    if prior is not None:
        dets = [apply_prior(d, prior) for d in dets]
    kept = threshold(dets, config.detection_threshold, use_adjusted=prior is not None)
    if calibration is not None:
        kept = [replace(d, calibrated_prob=calibrate(calibration, d.score(prior is not None)))
                for d in kept]
    return kept


@dataclass
class FeaturizeResult:
    rows: list  # (region_id, vector)
    skipped: list  # (region_id, reason)
    car_counts: dict = field(default_factory=dict)


def featurize(catalog, regions, detections, image_counts=None, config=None, prior=None,
              calibration=None):
    """Feature rows for eligible regions, plus the skipped regions and why."""
    config = config or RunConfig()
    kept = group_by_region(select_detections(detections, config, prior, calibration))
    all_images = {}
    for d in detections:
        all_images.setdefault(d.region_id, set()).add(d.image_id)
    known = {r.region_id for r in regions}
    unknown = sorted(set(all_images) - known)
    if unknown:
        raise DataError(f"detections reference unknown region_id {unknown[0]!r}")
    cat = {c.category_id: c for c in catalog}
    rows, skipped, counts = [], [], {}
    for region in regions:
        rid = region.region_id
        dets = kept.get(rid, [])
        counts[rid] = len(dets)
        if not dets:
            skipped.append((rid, "no detections"))
            continue
        if not is_eligible(region, len(dets), config.min_population, config.min_cars):
            skipped.append((rid, f"ineligible (population {region.population}, cars {len(dets)})"))
            continue
        n_img = image_counts.get(rid) if image_counts is not None else len(all_images[rid])
        if not n_img:
            raise DataError(f"region {rid!r} has detections but no images")
        rows.append((rid, aggregate_features(RegionCensus(rid, n_img, tuple(dets)), cat, config.weighted)))
    return FeaturizeResult(rows, skipped, counts)


def write_skipped(path, skipped):
    write_csv(path, ("region_id", "reason"), skipped)


def split_sides(regions, override=None):
    if override is not None:
        missing = [r.region_id for r in regions if r.region_id not in override]
        if missing:
            raise DataError(f"split override lacks region {missing[0]!r}")
        return {r.region_id: override[r.region_id] for r in regions}
    return {r.region_id: county_side(r.county) for r in regions}


def target_value(region, name):
    if name == "income":
        return region.income_median
    if name == "vote_share":
        return region.vote_share
    if name == "race":
        return region.race_shares
    if name == "education":
        return region.edu_shares
    raise KeyError(name)


def train_models(ids, X, regions_by_id, sides, config=None, targets=None):
    """Fit every target on training-side regions that have it.

    Returns ``{target: CVResult}``.
    """
    config = config or RunConfig()
    targets = targets or (*RIDGE_TARGETS, *SOFTMAX_TARGETS)
    train_rows = [i for i, rid in enumerate(ids) if sides[rid] == "train"]
    if not train_rows:
        raise ValueError("the training split is empty (no region in an A-C county)")
    out = {}
    for name in targets:
        rows = [i for i in train_rows if target_value(regions_by_id[ids[i]], name) is not None]
        if len(rows) < config.folds:
            raise ValueError(
                f"target {name!r} has {len(rows)} training regions, fewer than {config.folds} folds"
            )
        T = np.array([target_value(regions_by_id[ids[i]], name) for i in rows], dtype=float)
        kind = "ridge" if name in RIDGE_TARGETS else "softmax"
        labels = SOFTMAX_TARGETS.get(name, ())
        out[name] = cv_train(X[rows], T, kind, config.lambda_grid, config.folds, config.seed,
                             class_labels=labels)
    return out


def output_names(name, model):
    if model.kind == "ridge":
        return [name]
    return [_SOFT_PREFIX.get(name, name + "_") + c for c in model.class_labels]


def predict_rows(models, ids, X):
    rows = []
    preds = {name: m.predict(X) for name, m in models.items()}
    for i, rid in enumerate(ids):
        for name, m in models.items():
            names = output_names(name, m)
            vals = [preds[name][i]] if m.kind == "ridge" else preds[name][i]
            rows.extend((rid, n, fmt_float(v)) for n, v in zip(names, vals))
    return rows


def read_predictions(path):
    out = {}
    for lineno, row in read_csv(path, ("region_id", "target", "predicted_value")):
        try:
            out.setdefault(row["target"], {})[row["region_id"]] = float(row["predicted_value"])
        except ValueError as exc:
            raise DataError(str(exc), path, lineno, "predicted_value") from None
    return out


def actual_values(regions_by_id, target):
    """Ground truth per region for a prediction-level target name."""
    if target in RIDGE_TARGETS:
        return {rid: target_value(r, target) for rid, r in regions_by_id.items()}
    for name, classes in SOFTMAX_TARGETS.items():
        prefix = _SOFT_PREFIX[name]
        if target.startswith(prefix) and target[len(prefix):] in classes:
            k = classes.index(target[len(prefix):])
            return {rid: (None if target_value(r, name) is None else target_value(r, name)[k])
                    for rid, r in regions_by_id.items()}
    raise DataError(f"unknown prediction target {target!r}")


def evaluate_predictions(predictions, regions_by_id, sides, side="test"):
    reports = []
    for target in predictions:
        truth = actual_values(regions_by_id, target)
        pairs = [(p, truth[rid]) for rid, p in predictions[target].items()
                 if rid in truth and truth[rid] is not None and (side == "all" or sides[rid] == side)]
        if len(pairs) < 3:
            raise ValueError(f"target {target!r} has {len(pairs)} evaluable regions; need 3")
        pred, act = (np.array(v) for v in zip(*pairs))
        reports.append(evaluate(target, pred, act, with_accuracy=target == "vote_share"))
    return reports


def city_heuristic(catalog, regions, detections, config=None):
    """Sedan/pickup conditionals over cities built from region detections and votes."""
    config = config or RunConfig()
    kept = group_by_region(threshold(detections, config.detection_threshold))
    cities = {}
    for r in regions:
        if r.obama_votes is None or r.mccain_votes is None:
            continue
        key = f"{r.city}, {r.state}"
        cids, ob, mc = cities.get(key, ([], 0, 0))
        cids.extend(resolve_category(d) for d in kept.get(r.region_id, []))
        cities[key] = (cids, ob + r.obama_votes, mc + r.mccain_votes)
    tallies = tally_cities(cities, catalog)
    return tallies, sedan_truck_conditionals(tallies)
