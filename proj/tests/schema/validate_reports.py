"""Runs the mlsvm binary over small synthetic data and validates every JSON
report it writes against the committed schema.

usage: validate_reports.py <mlsvm binary> <schema file>
"""

import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

TIMING_TOLERANCE = 1e-9


def run(binary, *args):
    result = subprocess.run([binary, *map(str, args)], capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"{' '.join(map(str, args))} exited {result.returncode}: {result.stderr}")


def check_runtime(report, points, features):
    seconds = report["runtime"]["seconds"]
    phases = ["graph", "coarsening", "coarsest", "refinement", "other"]
    total = sum(seconds[p] for p in phases)
    assert math.isclose(seconds["total"], total, rel_tol=TIMING_TOLERANCE, abs_tol=TIMING_TOLERANCE), seconds
    expected = seconds["total"] * 1e6 / points
    assert math.isclose(seconds["us_per_point"], expected, rel_tol=TIMING_TOLERANCE), seconds
    assert math.isclose(seconds["us_per_value"], expected / features, rel_tol=TIMING_TOLERANCE), seconds


def main():
    binary, schema_path = sys.argv[1], Path(sys.argv[2])
    schema = json.loads(schema_path.read_text())
    validator = jsonschema.Draft202012Validator(schema)
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        twonorm = tmp / "twonorm.csv"
        mixture = tmp / "mixture.csv"
        run(binary, "gen", "--kind", "twonorm", "--n", 1500, "--seed", 1, "--out", twonorm)
        run(binary, "gen", "--kind", "mixture", "--n", 1200, "--seed", 2, "--minority", 0.1, "--out", mixture)

        runs = {
            "train_default": ["train", "--data", twonorm, "--model-out", tmp / "a.model"],
            "train_iis": ["train", "--data", twonorm, "--model-out", tmp / "b.model", "--coarsening", "iis"],
            "train_ensemble": ["train", "--data", mixture, "--model-out", tmp / "c.model", "--force",
                               "--qt", 150, "--part-size", 100, "--validation", "cs"],
            "train_cckf": ["train", "--data", mixture, "--model-out", tmp / "d.model", "--validation", "cckf",
                           "--val-folds", 3, "--weights", "per_class"],
            "cv": ["cv", "--data", twonorm, "--folds", 3, "--seed", 7],
        }
        reports = {}
        for name, args in runs.items():
            out = tmp / f"{name}.json"
            run(binary, *args, "--report", out)
            reports[name] = json.loads(out.read_text())
        run(binary, "predict", "--model", tmp / "a.model", "--data", twonorm, "--out", tmp / "p.csv",
            "--report", tmp / "predict.json")
        reports["predict"] = json.loads((tmp / "predict.json").read_text())

        run(binary, *runs["cv"], "--report", tmp / "cv_again.json")
        again = json.loads((tmp / "cv_again.json").read_text())
        assert again["report"] == reports["cv"]["report"], "rerun changed the cv report body"

        failures = 0
        for name, report in reports.items():
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for error in errors:
                print(f"FAIL {name}: {'/'.join(map(str, error.path))}: {error.message}")
            failures += len(errors)
            if "runtime" in report:
                body = report["report"]
                points = body["dataset"]["points"]
                if body["kind"] == "cv":
                    # every point trains in all folds but its own
                    points *= (body["folds"] - 1) * body["repeats"]
                check_runtime(report, points, body["dataset"]["features"])
            checked += 1
        if not any(level["ensemble"] for level in reports["train_ensemble"]["report"]["levels"]):
            print("FAIL train_ensemble: no ensemble level was produced")
            failures += 1
        if failures:
            return 1
    print(f"validated {checked} reports")
    return 0


if __name__ == "__main__":
    sys.exit(main())
