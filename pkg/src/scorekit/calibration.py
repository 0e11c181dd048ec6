"""Affine score calibration by prior-weighted logistic regression.

Calibration maps raw scores to log-likelihood ratios through s -> a*s + b.
The coefficients minimize the convex prior-weighted logistic loss

    C(a, b) = (pi / N_t)     sum_targets    log(1 + exp(-(a s + b + beta0)))
            + ((1-pi) / N_n) sum_nontargets log(1 + exp(  a s + b + beta0 ))

with beta0 = ln(pi / (1 - pi)) the prior log odds, so that a well-calibrated
output scores directly against the Bayes threshold of the detection cost.
The effective prior pi is derived from the cost parameters as
pi = c_miss p / (c_miss p + c_fa (1 - p)); when several operating points are
supplied, their effective priors are averaged.

The problem is smooth and convex, so it is solved exactly with damped Newton
iterations (deterministic initialization, backtracking line search) instead
of a generic optimizer.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import DataError, NoConvergence, OneClassOnly
from .metrics import DcfParams, _as_params_list
from .validation import as_matrix


def training_prior(params):
    """Effective prior for calibration/fusion training (mean over points)."""
    return float(np.mean([p.effective_prior for p in _as_params_list(params)]))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _design(scores):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores.reshape(-1, 1)
    return as_matrix(scores, "scores")


def logistic_loss_and_grad(theta, scores, labels, prior):
    """Prior-weighted logistic loss and its analytic gradient.

    ``theta`` is (w_1..w_k, b) over a (n_trials, k) score matrix.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    w, b = theta[:-1], theta[-1]
    beta0 = math.log(prior / (1.0 - prior))
    z = scores @ w + b + beta0

    n_t = int(labels.sum())
    n_n = labels.size - n_t
    wt = prior / n_t
    wn = (1.0 - prior) / n_n

    loss = wt * np.logaddexp(0.0, -z[labels]).sum() + wn * np.logaddexp(
        0.0, z[~labels]
    ).sum()

    sig = _sigmoid(z)
    coeff = np.where(labels, wt * (sig - 1.0), wn * sig)
    grad = np.empty(theta.size)
    grad[:-1] = coeff @ scores
    grad[-1] = coeff.sum()
    return float(loss), grad


def _logistic_hessian(theta, scores, labels, prior):
    w, b = theta[:-1], theta[-1]
    beta0 = math.log(prior / (1.0 - prior))
    z = scores @ w + b + beta0
    n_t = int(labels.sum())
    n_n = labels.size - n_t
    sample_w = np.where(labels, prior / n_t, (1.0 - prior) / n_n)
    sig = _sigmoid(z)
    d = sample_w * sig * (1.0 - sig)
    x = np.hstack([scores, np.ones((scores.shape[0], 1))])
    return (x * d[:, None]).T @ x


def fit_logistic(scores, labels, prior, tol=1e-9, max_iter=100):
    """Damped Newton on the prior-weighted logistic objective.

    Returns (weights, offset, n_iter).  Raises NoConvergence when the
    gradient norm does not reach ``tol`` (e.g. perfectly separable scores,
    whose optimum lies at infinity).
    """
    scores = _design(scores)
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise OneClassOnly("calibration needs target and nontarget scores")

    k = scores.shape[1]
    theta = np.zeros(k + 1)
    theta[:k] = 1.0 / k
    loss, grad = logistic_loss_and_grad(theta, scores, labels, prior)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(grad) <= tol:
            return theta[:-1].copy(), float(theta[-1]), it - 1
        hess = _logistic_hessian(theta, scores, labels, prior)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, -grad, rcond=None)
        slope = grad @ step
        if slope >= 0:  # not a descent direction; fall back to gradient
            step = -grad
            slope = grad @ step
        t = 1.0
        for _ in range(60):
            new_theta = theta + t * step
            new_loss, new_grad = logistic_loss_and_grad(
                new_theta, scores, labels, prior
            )
            if new_loss <= loss + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break  # line search exhausted; gradient will be re-checked below
        theta, loss, grad = new_theta, new_loss, new_grad
    if np.linalg.norm(grad) <= tol:
        return theta[:-1].copy(), float(theta[-1]), max_iter
    raise NoConvergence(
        f"gradient norm {np.linalg.norm(grad):.3g} > {tol} after {max_iter} "
        "iterations (scores may be separable)",
        iterations=max_iter,
    )


@dataclass(frozen=True)
class AffineCalibration:
    """Fitted scale/offset of the score -> LLR map."""

    a: float
    b: float

    def apply(self, scores):
        return self.a * np.asarray(scores, dtype=np.float64) + self.b


class AffineCalibrator(BaseEstimator):
    """Logistic calibration of one system's scores to LLRs.

    Parameters
    ----------
    params : DcfParams or sequence of DcfParams
        Operating point(s); their effective prior weights the training loss.
    tol : float
        Gradient-norm convergence target.
    max_iter : int
        Newton iteration budget.
    """

    def __init__(self, params=DcfParams(), tol=1e-9, max_iter=100):
        self.params = params
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64)
        prior = training_prior(self.params)
        w, b, n_iter = fit_logistic(
            scores.reshape(-1, 1), labels, prior, self.tol, self.max_iter
        )
        self.a_ = float(w[0])
        self.b_ = b
        self.n_iter_ = n_iter
        if self.a_ <= 0:
            warnings.warn(
                f"calibration scale a={self.a_:.3g} is not positive; "
                "scores may be anti-correlated with the labels",
                stacklevel=2,
            )
        return self

    @property
    def calibration_(self):
        self._check_fitted()
        return AffineCalibration(self.a_, self.b_)

    def _check_fitted(self):
        if not hasattr(self, "a_"):
            raise NotFittedError("AffineCalibrator must be fit first")

    def transform(self, scores):
        self._check_fitted()
        return self.a_ * np.asarray(scores, dtype=np.float64) + self.b_

    def predict(self, scores):
        """Accept/reject decisions at the Bayes threshold of the mean prior."""
        prior = training_prior(self.params)
        beta = math.log((1.0 - prior) / prior)
        return self.transform(scores) >= beta


# --- model files ----------------------------------------------------------------


def write_calibration(cal, fp, system="scores"):
    fp.write(f"# calibration\t{system}\n")
    fp.write(f"{cal.a:.17g}\t{cal.b:.17g}\n")


def read_calibration(fp, path=None):
    lines = [l.rstrip("\n") for l in fp if l.strip() and not l.startswith("#")]
    if len(lines) != 1 or len(lines[0].split("\t")) != 2:
        raise DataError(f"{path or '<model>'}: expected one 'a<TAB>b' line")
    a, b = (float(x) for x in lines[0].split("\t"))
    return AffineCalibration(a, b)
