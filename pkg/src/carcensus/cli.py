"""Command line entry point: ``carcensus <subcommand> ...``.

Exit status is 0 on success, 1 when an input fails validation and 2 on a
usage error.
"""

import argparse
from dataclasses import replace
import json
import os
import sys

import numpy as np

from carcensus import constants as C
from carcensus._io import DataError, write_csv, write_json
from carcensus.analytics import write_report
from carcensus.calibration import fit_isotonic, load_calibration, save_calibration
from carcensus.catalog import (
    load_split_override, parse_catalog, parse_regions, split_by_county, write_regions_json,
)
from carcensus.detection import (
    LocationSizePrior, apply_prior, average_precision, load_prior, match_images, read_detections,
    read_truths, save_prior, write_detections,
)
from carcensus.estimator import load_models, save_models
from carcensus.features import FEATURE_NAMES, read_features, write_features
from carcensus import geo, pipeline
from carcensus.synth import SynthSpec, generate_dataset, write_dataset


def _grid(text):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("lambda grid is empty")
    return vals


def _protocol_args(p, *, threshold=False, eligibility=False, cv=False, weighting=False):
    if threshold:
        p.add_argument("--threshold", type=float, default=C.DETECTION_THRESHOLD,
                       help="minimum detection score kept (inclusive)")
    if eligibility:
        p.add_argument("--min-population", type=int, default=C.MIN_POPULATION)
        p.add_argument("--min-cars", type=int, default=C.MIN_CARS)
    if cv:
        p.add_argument("--lambda-grid", type=_grid, default=C.LAMBDA_GRID,
                       help="comma-separated regularization strengths")
        p.add_argument("--folds", type=int, default=C.FOLDS)
        p.add_argument("--seed", type=int, default=0)
    if weighting:
        p.add_argument("--weighted", action="store_true",
                       help="spread each detection over its class hypotheses")


def _config(args):
    kw = {}
    for attr, field in (("threshold", "detection_threshold"), ("min_population", "min_population"),
                        ("min_cars", "min_cars"), ("lambda_grid", "lambda_grid"),
                        ("folds", "folds"), ("seed", "seed"), ("weighted", "weighted"),
                        ("iou_min", "iou_min")):
        if hasattr(args, attr):
            kw[field] = getattr(args, attr)
    if getattr(args, "override_split", None):
        kw["split"] = "override:" + os.path.basename(args.override_split)
    return pipeline.RunConfig(**kw)


def build_parser():
    parser = argparse.ArgumentParser(prog="carcensus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=C.FEATURE_LAYOUT_VERSION)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    p = sub.add_parser("ingest", help="validate catalog and region files")
    p.add_argument("--catalog", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--acs")
    p.add_argument("--votes")
    p.add_argument("--out-regions", help="joined regions as JSON")
    p.add_argument("--out-split", help="region_id,side CSV")

    p = sub.add_parser("calibrate", help="fit the score-to-probability map")
    p.add_argument("--detections", required=True)
    p.add_argument("--truths", required=True)
    p.add_argument("--out", required=True, help="calibration.json")
    p.add_argument("--prior", help="prior.json; calibrates prior-adjusted scores")
    p.add_argument("--fit-prior", metavar="PATH", help="fit a location-size prior from truths and write it")
    p.add_argument("--iou-min", type=float, default=C.IOU_MIN)
    p.add_argument("--calibrated-out", help="write detections with calibrated probabilities")

    p = sub.add_parser("featurize", help="88-feature vectors per eligible region")
    p.add_argument("--catalog", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--images", help="image_id,region_id CSV (image counts)")
    p.add_argument("--prior")
    p.add_argument("--calibration")
    p.add_argument("--out", required=True, help="features.csv")
    p.add_argument("--skipped", help="skipped.csv (default: next to --out)")
    _protocol_args(p, threshold=True, eligibility=True, weighting=True)

    p = sub.add_parser("train", help="cross-validated ridge and softmax models")
    p.add_argument("--features", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--acs")
    p.add_argument("--votes")
    p.add_argument("--out", required=True, help="model.json")
    p.add_argument("--override-split", help="explicit region_id,side CSV")
    _protocol_args(p, cv=True)

    p = sub.add_parser("predict", help="apply a model bundle to features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="predictions.csv")

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--acs")
    p.add_argument("--votes")
    p.add_argument("--model", help="model.json whose config is echoed into the report")
    p.add_argument("--side", choices=("test", "train", "all"), default="test")
    p.add_argument("--override-split")
    p.add_argument("--out", required=True, help="report.json")
    p.add_argument("--choropleth", help="choropleth.csv of predicted values")
    p.add_argument("--choropleth-target", default="vote_share")

    p = sub.add_parser("heuristic", help="sedan vs pickup voting conditionals")
    p.add_argument("--catalog", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    _protocol_args(p, threshold=True)

    p = sub.add_parser("sample-grid", help="plan GPS sample points")
    p.add_argument("--center-lat", type=float, required=True)
    p.add_argument("--center-lon", type=float, required=True)
    p.add_argument("--side-m", type=float, default=C.GRID_SIDE_M)
    p.add_argument("--spacing-m", type=float, default=C.GRID_SPACING_M)
    p.add_argument("--roads", help="roads.csv segments; without it every point is kept")
    p.add_argument("--max-road-dist", type=float, default=C.MAX_ROAD_DIST_M)
    p.add_argument("--extra-points", help="points.csv merged after filtering")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--spec", help="spec.json with SynthSpec fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    return parser


def _regions(args):
    return parse_regions(args.regions, getattr(args, "acs", None), getattr(args, "votes", None))


def cmd_ingest(args):
    catalog = parse_catalog(args.catalog)
    regions = _regions(args)
    split = split_by_county(regions)
    if args.out_regions:
        write_regions_json(args.out_regions, regions)
    if args.out_split:
        write_csv(args.out_split, ("region_id", "side"), [(s.region_id, s.side) for s in split])
    n_train = sum(s.side == "train" for s in split)
    print(f"{len(catalog)} categories, {len(regions)} regions ({n_train} train, {len(split) - n_train} test)")


def cmd_calibrate(args):
    dets = read_detections(args.detections)
    truths = read_truths(args.truths)
    prior = None
    if args.fit_prior:
        prior = LocationSizePrior.fit([b for boxes in truths.values() for b in boxes])
        save_prior(args.fit_prior, prior)
    if args.prior:
        prior = load_prior(args.prior)
    use_adj = prior is not None
    if use_adj:
        dets = [apply_prior(d, prior) for d in dets]
    scores, labels, n_truth = match_images(dets, truths, args.iou_min, use_adjusted=use_adj)
    imap = fit_isotonic(scores, labels)
    save_calibration(args.out, imap)
    if args.calibrated_out:
        write_detections(args.calibrated_out,
                         [replace(d, calibrated_prob=imap(d.score(use_adj))) for d in dets])
    ap = average_precision(labels, n_truth) if n_truth else float("nan")
    print(f"{len(scores)} detections, {n_truth} truths, AP {ap:.4f}, {len(imap.scores)} knots")


def cmd_featurize(args):
    config = _config(args)
    catalog = parse_catalog(args.catalog)
    regions = parse_regions(args.regions)
    dets = read_detections(args.detections)
    images = pipeline.read_images(args.images) if args.images else None
    prior = load_prior(args.prior) if args.prior else None
    cal = load_calibration(args.calibration) if args.calibration else None
    res = pipeline.featurize(catalog, regions, dets, images, config, prior, cal)
    write_features(args.out, res.rows)
    skipped = args.skipped or os.path.join(os.path.dirname(os.path.abspath(args.out)), "skipped.csv")
    pipeline.write_skipped(skipped, res.skipped)
    print(f"{len(res.rows)} regions featurized, {len(res.skipped)} skipped")


def cmd_train(args):
    config = _config(args)
    ids, X = read_features(args.features)
    regions = _regions(args)
    by_id = {r.region_id: r for r in regions}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise DataError(f"features reference unknown region_id {missing[0]!r}", args.features)
    override = load_split_override(args.override_split) if args.override_split else None
    sides = pipeline.split_sides(regions, override)
    results = pipeline.train_models(ids, X, by_id, sides, config)
    models = {name: r.model for name, r in results.items()}
    doc_config = config.to_json()
    doc_config["selected_lambda"] = {name: r.lam for name, r in results.items()}
    save_models(args.out, models, doc_config, FEATURE_NAMES)
    print(", ".join(f"{n}: lambda={r.lam:g}" for n, r in results.items()))


def cmd_predict(args):
    models, _ = load_models(args.model)
    ids, X = read_features(args.features)
    write_csv(args.out, ("region_id", "target", "predicted_value"), pipeline.predict_rows(models, ids, X))


def cmd_evaluate(args):
    preds = pipeline.read_predictions(args.predictions)
    regions = _regions(args)
    by_id = {r.region_id: r for r in regions}
    override = load_split_override(args.override_split) if args.override_split else None
    sides = pipeline.split_sides(regions, override)
    reports = pipeline.evaluate_predictions(preds, by_id, sides, args.side)
    config = _config(args).to_json()
    if args.model:
        _, doc = load_models(args.model)
        config.update(doc.get("config", {}))
    config["evaluated_side"] = args.side
    write_report(args.out, reports, config)
    if args.choropleth:
        if args.choropleth_target not in preds:
            raise DataError(f"no predictions for target {args.choropleth_target!r}", args.predictions)
        vals = preds[args.choropleth_target]
        write_csv(args.choropleth, ("region_id", "value"), [(rid, repr(v)) for rid, v in vals.items()])
    for r in reports:
        print(f"{r.target}: n={r.n} r={r.pearson_r:.3f} p={r.p_value:.2e} mae={r.mae:.4g}")


def cmd_heuristic(args):
    config = _config(args)
    catalog = parse_catalog(args.catalog)
    regions = parse_regions(args.regions, votes_path=args.votes)
    dets = read_detections(args.detections)
    tallies, res = pipeline.city_heuristic(catalog, regions, dets, config)
    doc = {"config": config.to_json(), **res.__dict__,
           "cities": [t.__dict__ for t in tallies]}
    write_json(args.out, doc)
    print(f"P(Democrat | more sedans) = {res.p_dem_given_sedans:.3f}; "
          f"P(Republican | more pickups) = {res.p_rep_given_trucks:.3f} over {res.counted} cities")


def cmd_sample_grid(args):
    center = geo.GpsPoint(args.center_lat, args.center_lon)
    pts = geo.generate_grid(center, args.side_m, args.spacing_m)
    errors = []
    if args.roads:
        res = geo.filter_near_road(pts, geo.PolylineRoadOracle.from_csv(args.roads), args.max_road_dist)
        pts, errors = res.kept, res.errors
    if args.extra_points:
        pts = geo.merge_points(pts, geo.read_points(args.extra_points))
    geo.write_points(args.out, pts)
    for i, lat, lon, msg in errors:
        print(f"road oracle failed at point {i} ({lat:.7f}, {lon:.7f}): {msg}", file=sys.stderr)
    print(f"{len(pts)} points written")


def cmd_synth(args):
    spec = SynthSpec()
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = SynthSpec.from_json(json.load(fh))
    if args.seed is not None:
        spec.seed = args.seed
    write_dataset(generate_dataset(spec), args.out_dir)
    print(f"synthetic dataset written to {args.out_dir}")


COMMANDS = {
    "ingest": cmd_ingest, "calibrate": cmd_calibrate, "featurize": cmd_featurize,
    "train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate,
    "heuristic": cmd_heuristic, "sample-grid": cmd_sample_grid, "synth": cmd_synth,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (DataError, ValueError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"carcensus {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
