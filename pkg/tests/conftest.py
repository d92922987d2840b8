import os

import pytest

from carcensus.catalog import ACS_HEADER, CATALOG_HEADER, REGIONS_HEADER, VOTES_HEADER


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


@pytest.fixture
def csv_writer(tmp_path):
    def write(name, header, rows):
        return write_rows(os.path.join(tmp_path, name), header, rows)
    return write


@pytest.fixture
def small_catalog_rows():
    return [
        ("c1", "Honda", "Accord", "sedan", 1990, 1994, "Japan", 20, 30, 10000, "false", "false"),
        ("c2", "Ford", "F-150", "truck-regular", 2011, 2013, "USA", 15, 20, 30000, "false", "false"),
        ("c3", "Tesla", "Model S", "sedan", 2012, 2014, "USA", "", "", 70000, "false", "true"),
        ("c4", "Toyota", "Prius", "hatchback", 2005, 2009, "Japan", 48, 45, 24000, "true", "false"),
    ]


@pytest.fixture
def catalog_file(csv_writer, small_catalog_rows):
    return csv_writer("catalog.csv", CATALOG_HEADER, small_catalog_rows)


@pytest.fixture
def region_files(csv_writer):
    regions = csv_writer("regions.csv", REGIONS_HEADER, [
        ("z1", "zip", "Boise", "ID", "Ada", 1000),
        ("z2", "zip", "Phoenix", "AZ", "Maricopa", 2000),
        ("p3", "precinct", "Phoenix", "AZ", "Maricopa", 800),
    ])
    acs = csv_writer("acs.csv", ACS_HEADER, [
        ("z1", 52000, 700, 100, 50, 60, 200, 150, 100, 90),
        ("z2", 61000.5, 1200, 300, 200, 100, 300, 300, 400, 300),
    ])
    votes = csv_writer("votes.csv", VOTES_HEADER, [
        ("z1", 300, 200),
        ("p3", 0, 0),
    ])
    return regions, acs, votes


def run_cli_pipeline(workdir, seed=0, spec=None, calibrate=True):
    """synth -> featurize -> train -> predict -> evaluate through the CLI.

    Returns a dict of output paths; raises AssertionError on a nonzero exit.
    """
    import json

    from carcensus.cli import run

    workdir = os.fspath(workdir)
    data = os.path.join(workdir, "data")
    p = lambda name: os.path.join(workdir, name)
    d = lambda name: os.path.join(data, name)
    argv = ["synth", "--out-dir", data, "--seed", str(seed)]
    if spec is not None:
        with open(p("spec.json"), "w", encoding="utf-8") as fh:
            json.dump(spec, fh)
        argv += ["--spec", p("spec.json")]
    steps = [argv]
    featurize = ["featurize", "--catalog", d("catalog.csv"), "--regions", d("regions.csv"),
                 "--detections", d("detections.jsonl"), "--images", d("images.csv"),
                 "--out", p("features.csv")]
    if calibrate:
        steps.append(["calibrate", "--detections", d("detections.jsonl"), "--truths", d("truths.jsonl"),
                      "--out", p("calibration.json")])
        featurize += ["--calibration", p("calibration.json")]
    truth = ["--regions", d("regions.csv"), "--acs", d("acs.csv"), "--votes", d("votes.csv")]
    steps += [
        featurize,
        ["train", "--features", p("features.csv"), *truth, "--seed", str(seed), "--out", p("model.json")],
        ["predict", "--model", p("model.json"), "--features", p("features.csv"), "--out", p("predictions.csv")],
        ["evaluate", "--predictions", p("predictions.csv"), *truth, "--model", p("model.json"),
         "--out", p("report.json")],
    ]
    for argv in steps:
        code = run(argv)
        assert code == 0, f"{argv[0]} exited {code}"
    return {name: p(name) for name in ("features.csv", "model.json", "predictions.csv", "report.json",
                                       "skipped.csv")} | {"data": data}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
