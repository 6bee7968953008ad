"""Run every CLI command against every example spec and tabulate exit codes."""

import json
import subprocess
import sys
from pathlib import Path

from galconn.cli import COMMANDS

ROOT = Path(__file__).resolve().parent.parent


def main():
    specs = sorted((ROOT / "specs").glob("*.spec"))
    width = max(len(s.stem) for s in specs)
    print(" " * (width + 2) + " ".join(f"{c[:6]:>6}" for c in COMMANDS))
    for spec in specs:
        codes = []
        for cmd in COMMANDS:
            proc = subprocess.run([sys.executable, "-m", "galconn.cli", cmd, str(spec)], capture_output=True, text=True)
            mark = {0: "pass", 1: "FAIL", 2: "-"}.get(proc.returncode, "?")
            if proc.returncode == 1:
                worst = json.loads(proc.stdout)["max_residual"]
                mark = f"F{worst:.0e}" if worst is not None else "F"
            codes.append(mark)
        print(f"{spec.stem:<{width}}  " + " ".join(f"{c:>6}" for c in codes))
    print("\npass = exit 0, FAIL = exit 1 (check failure), - = exit 2 (spec lacks the sections the command needs)")


if __name__ == "__main__":
    main()
