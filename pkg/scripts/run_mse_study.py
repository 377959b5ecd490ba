"""Monte-Carlo mean squared error of the MLE over the default (n, d) grid.

    python scripts/run_mse_study.py [--R 100] [--workers 4] [--out results/mse.json]

Writes the JSON report and prints the text table.
"""
import argparse
import sys

from svmreg.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="results/mse.json")
    a = p.parse_args()
    argv = ["simulate", "--study", "mse", "--R", str(a.R), "--out", a.out,
            "--table-out", a.out.replace(".json", ".txt"), "--verbose"]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    code = main(argv)
    if code == 0:
        print(open(a.out.replace(".json", ".txt")).read())
    sys.exit(code)
