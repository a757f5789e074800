"""Print the acceptance report (one line per criterion) and optionally save it.

Usage: python3 scripts/run_acceptance.py [--only 1,5,9] [--out report.txt]
"""

import argparse
import io
import sys
from contextlib import redirect_stdout
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import test_acceptance  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", help="comma-separated criterion numbers")
    ap.add_argument("--out", help="also write the report here")
    args = ap.parse_args()
    keys = sorted(test_acceptance.CRITERIA)
    if args.only:
        keys = [int(k) for k in args.only.split(",")]
    buf = io.StringIO()
    failed = 0
    for k in keys:
        ok, detail = test_acceptance.CRITERIA[k]()
        with redirect_stdout(buf):
            test_acceptance._report(k, ok, detail)
        failed += not ok
    text = buf.getvalue()
    print(text, end="")
    print(f"{len(keys) - failed}/{len(keys)} criteria pass")
    if args.out:
        Path(args.out).write_text(text)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
