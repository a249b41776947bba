"""Run every subcommand on the shipped scenarios and validate report.json."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

RUNS = [
    ("spectrum", "diag.yaml", [], 0),
    ("bunching", "bunched.yaml", [], 0),
    ("pinching", "hyperbolic.yaml", [], 0),
    ("twisting", "hyperbolic.yaml", [], 2),
    ("twisting", "hyperbolic_transvected.yaml", [], 0),
    ("monotone", "monotone.yaml", [], 0),
    ("perturb", "identity.yaml", [], 0),
    ("sweep", "identity.yaml", [], 0),
    ("spectrum", "diag.yaml", ["--set", "cocycle.alpha=2.0", "--set", "base.matrix=[[1,1],[0,1]]"], 1),
]


def main():
    exe, root = Path(sys.argv[1]), Path(sys.argv[2])
    schema = json.loads((root / "docs" / "report.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for i, (sub, scenario, extra, want) in enumerate(RUNS):
            out = Path(tmp) / f"run{i}"
            cmd = [str(exe), sub, "--scenario", str(root / "scenarios" / scenario), "--out", str(out)] + extra
            rc = subprocess.run(cmd, capture_output=True, text=True).returncode
            report = json.loads((out / "report.json").read_text())
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            ok = rc == want and report["exit_code"] == rc and not errors
            print(f"{'ok  ' if ok else 'FAIL'} {sub} {scenario} {' '.join(extra)} exit={rc} (want {want})")
            for e in errors:
                print("    schema:", "/".join(map(str, e.path)), e.message)
            if rc == 1 and want == 1:
                print("    error:", report["error"].replace("\n", " | "))
            failures += not ok
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
