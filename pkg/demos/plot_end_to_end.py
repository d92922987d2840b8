"""
The whole study on synthetic data
=================================

Generate a dataset on disk, then run the command-line steps in order:
calibrate, featurize, train, predict, evaluate, and the sedan/pickup
voting heuristic.
"""

import json
import os
import tempfile

from carcensus.cli import run

work = tempfile.mkdtemp(prefix="carcensus-demo-")
data = os.path.join(work, "data")
p = lambda name: os.path.join(work, name)
d = lambda name: os.path.join(data, name)
truth = ["--regions", d("regions.csv"), "--acs", d("acs.csv"), "--votes", d("votes.csv")]

steps = [
    ["synth", "--seed", "0", "--out-dir", data],
    ["calibrate", "--detections", d("detections.jsonl"), "--truths", d("truths.jsonl"),
     "--out", p("calibration.json")],
    ["featurize", "--catalog", d("catalog.csv"), "--regions", d("regions.csv"),
     "--detections", d("detections.jsonl"), "--images", d("images.csv"),
     "--calibration", p("calibration.json"), "--out", p("features.csv")],
    ["train", "--features", p("features.csv"), *truth, "--out", p("model.json")],
    ["predict", "--model", p("model.json"), "--features", p("features.csv"), "--out", p("predictions.csv")],
    ["evaluate", "--predictions", p("predictions.csv"), *truth, "--model", p("model.json"),
     "--out", p("report.json"), "--choropleth", p("choropleth.csv")],
    ["heuristic", "--catalog", d("catalog.csv"), "--regions", d("regions.csv"), "--votes", d("votes.csv"),
     "--detections", d("detections.jsonl"), "--out", p("heuristic.json")],
]
for argv in steps:
    print(f"$ carcensus {argv[0]}")
    code = run(argv)
    if code != 0:
        raise SystemExit(f"{argv[0]} failed with exit code {code}")

report = json.load(open(p("report.json")))
print("protocol:", {k: report["config"][k] for k in ("detection_threshold", "folds", "min_population",
                                                     "min_cars", "iou_min", "top_k")})
print(f"outputs in {work}")
