"""Test accuracy of the MAP rule, logistic regression and the SVM on mixture data.

    python scripts/run_accuracy_study.py [--R 100] [--workers 4] [--out results/acc.json]
"""
import argparse
import sys

from svmreg.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--R", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="results/acc.json")
    a = p.parse_args()
    table = a.out.replace(".json", ".txt")
    argv = ["simulate", "--study", "acc", "--R", str(a.R), "--out", a.out,
            "--table-out", table, "--verbose"]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    code = main(argv)
    if code == 0:
        print(open(table).read())
    sys.exit(code)
