"""In-sample and 5-fold cross-validated accuracy on the spam7 data."""
import argparse

import numpy as np

from svmreg.baselines import predict_svm, train_svm
from svmreg.model import predict_map
from svmreg.optimizer import fit_mle
from svmreg.simulate import cv_compare
from svmreg.tabular import read_csv

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default="data/spam7.csv")
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    data = read_csv(a.data).dataset()
    fit = fit_mle(data)
    svm = train_svm(data)
    print(f"in-sample accuracy: svmreg {np.mean(predict_map(data.X, fit.theta_hat) == data.y):.4f}, "
          f"svm {np.mean(predict_svm(data.X, svm) == data.y):.4f}")
    res = cv_compare(data, 5, ["svmreg", "svm"], np.random.default_rng(a.seed))
    for name, r in res.items():
        print(f"5-fold CV {name}: {r['mean']:.4f} ({r['sd']:.4f})")
