"""Runs the command-line tool on the fixtures and validates every JSON report
against the published schema, together with the exit-code contract."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

GRADE_EXIT = {"refuted": 2, "inconclusive": 3}


def run(tool, args, out):
    proc = subprocess.run([tool, *args, "--json", str(out)], capture_output=True, text=True, timeout=300)
    report = json.loads(out.read_text())
    return proc.returncode, report


def expected_exit(report):
    if report["status"] != "ok":
        return 1
    return GRADE_EXIT.get(report.get("grade"), 0)


def main():
    tool, fixtures, schema_path = sys.argv[1:4]
    fixtures = pathlib.Path(fixtures)
    schema = json.loads(pathlib.Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    jsonschema.Draft202012Validator.check_schema(schema)

    cases = [
        ["verify", fixtures / "three-quadratics-split.rsd"],
        ["verify", fixtures / "kkt-two-constraints.rsd"],
        ["verify", fixtures / "parameter-only.rsd"],
        ["verify", fixtures / "square-root-branch.rsd"],
        ["verify", fixtures / "opposed-pair.rsd", "--schedule", "0.1,0.5,3,60"],
        ["verify", fixtures / "three-quadratics-split.rsd", "--mode", "first-order", "--split", "3"],
        ["verify", fixtures / "shift.rsd", "--mode", "kkt"],
        ["estimate", fixtures / "half-shift.rsd", "--schedule", "0.1,0.5,3,40"],
        ["estimate", fixtures / "kkt-two-constraints.rsd", "--schedule", "0.1,0.5,3,40", "--seed", "7"],
        ["cones", fixtures / "graph-normal.rsd", "--point", "0 0"],
        ["cones", fixtures / "cross-union.rsd", "--point", "0 0", "--direction", "1 0"],
        ["cones", fixtures / "cross-union.rsd", "--point", "1 1"],
        ["fixtures", fixtures],
        ["verify", fixtures / "missing.rsd"],
    ]
    failures = 0
    seen_grades = set()
    with tempfile.TemporaryDirectory() as tmp:
        for i, case in enumerate(cases):
            args = [str(a) for a in case]
            code, report = run(tool, args, pathlib.Path(tmp) / f"report{i}.json")
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for e in errors:
                print(f"{' '.join(args)}: {list(e.path)}: {e.message}")
            failures += len(errors)
            if code != expected_exit(report):
                print(f"{' '.join(args)}: exit {code}, contract says {expected_exit(report)}")
                failures += 1
            for check in report.get("checks", []):
                seen_grades.add(check["grade"])
                if not check["grade_note"]:
                    print(f"{' '.join(args)}: check {check['name']} has no grade note")
                    failures += 1
    for grade in ("verified", "verified_numeric", "refuted", "inconclusive"):
        if grade not in seen_grades:
            print(f"grade {grade} never exercised")
            failures += 1
    print(f"{len(cases)} reports checked, {failures} problems")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
