# Copyright 2026 The pospsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Runs the CLI on every bundled model and validates run_report.json."""

import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    exe, models, schema_path, work = sys.argv[1:5]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    work = pathlib.Path(work)
    failures = 0
    for model in sorted(pathlib.Path(models).glob("*.posp")):
        out = work / model.stem
        out.mkdir(parents=True, exist_ok=True)
        args = [exe, "run", "--model", str(model), "--t1", "0.1", "--dt", "1e-3", "--stride", "10",
                "--n", "50", "--out", str(out), "--allow-truncation"]
        if model.stem == "kerr":
            args += ["--gauge", str(model.with_suffix(".gauge")), "--format", "json"]
        rc = subprocess.run(args, capture_output=True, text=True)
        if rc.returncode not in (0, 2):
            print(f"{model.name}: exit {rc.returncode}\n{rc.stderr}")
            failures += 1
            continue
        report = json.loads((out / "run_report.json").read_text())
        try:
            jsonschema.validate(report, schema)
            print(f"{model.name}: report valid")
        except jsonschema.ValidationError as e:
            print(f"{model.name}: {e.message}")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
