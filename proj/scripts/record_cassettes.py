#!/usr/bin/env python3
"""Re-records fixtures/cassettes/ and fixtures/eval/ from fixtures/scripts/.

usage: record_cassettes.py path/to/kgqa
"""

import json
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIG = ROOT / "fixtures" / "config" / "stub-replay.json"
SCRIPTS = ROOT / "fixtures" / "scripts"


def run(args):
    print("+", " ".join(args))
    result = subprocess.run(args, capture_output=True, text=True)
    sys.stdout.write(result.stdout)
    sys.stderr.write(result.stderr)
    if result.returncode != 0:
        sys.exit(f"command failed with exit code {result.returncode}")


def main():
    kgqa = sys.argv[1]
    for s in json.loads((SCRIPTS / "sessions.json").read_text(encoding="utf-8")):
        args = [kgqa, "record", s["question"], "--config", str(CONFIG),
                "--script", str(SCRIPTS / f"{s['name']}.json")]
        for reply in s["userReplies"]:
            args += ["--reply", reply]
        if not s["execute"]:
            args.append("--no-execute")
        run(args)
    for answerer in ("protocol", "baseline"):
        run([kgqa, "eval", str(ROOT / "data" / "sample_bank.jsonl"), "--config", str(CONFIG),
             "--mode", "record", "--answerer", answerer,
             "--script", str(SCRIPTS / f"eval-{answerer}.json"),
             "--cassettes", str(ROOT / "fixtures" / "eval")])


if __name__ == "__main__":
    main()
