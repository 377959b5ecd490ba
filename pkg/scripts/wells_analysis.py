"""Fit the hinge-likelihood model and logistic regression to the wells data.

Prints estimates with robust standard errors and Wald p-values side by side.
Run ``scripts/fetch_data.py`` first.
"""
import argparse
import warnings

from svmreg.baselines import fit_logistic, logistic_sandwich
from svmreg.inference import infer
from svmreg.optimizer import fit_mle
from svmreg.tabular import read_csv

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default="data/wells.csv")
    a = p.parse_args()
    table = read_csv(a.data)
    data = table.dataset()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = fit_mle(data)
    rep = infer(data, fit.theta_hat)
    lfit = fit_logistic(data)
    lrep = logistic_sandwich(data, lfit)
    names = ["(intercept)"] + table.feature_names
    print(f"{'':<12}{'svmreg':>10}{'se':>9}{'p':>10}   {'logistic':>10}{'se':>9}{'p':>10}")
    for j, name in enumerate(names):
        print(f"{name:<12}{fit.theta_hat.vector[j]:>10.4f}{rep.se[j]:>9.4f}{rep.p[j]:>10.3g}   "
              f"{lfit.theta_tilde.vector[j]:>10.4f}{lrep.se[j]:>9.4f}{lrep.p[j]:>10.3g}")
    print(f"total log-likelihood: svmreg {fit.total_loglik:.2f}, logistic {lfit.loglik:.2f}")
