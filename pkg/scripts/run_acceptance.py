"""Run the ten acceptance criteria and print one PASS/FAIL line each."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from test_acceptance import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
