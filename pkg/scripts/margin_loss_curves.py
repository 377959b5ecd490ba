"""Tabulate the expected negative log-density and its two parts against the margin.

Writes ``t,h,h1,h2`` rows for one class probability ``p`` (default 0.7), for
plotting with any tool.
"""
import argparse
import csv
import sys

import numpy as np

from svmreg.model import expected_neg_log_density

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--p", type=float, default=0.7)
    p.add_argument("--lo", type=float, default=-4.0)
    p.add_argument("--hi", type=float, default=4.0)
    p.add_argument("--points", type=int, default=401)
    a = p.parse_args()
    t = np.linspace(a.lo, a.hi, a.points)
    h, h1, h2 = expected_neg_log_density(a.p, t)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", "h", "h1", "h2"])
    for row in zip(t, h, h1, h2):
        w.writerow([f"{v:.10g}" for v in row])
