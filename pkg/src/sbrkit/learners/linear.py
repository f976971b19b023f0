"""L2-regularized logistic regression trained by batch gradient descent.

The solver is full-batch gradient descent with Armijo backtracking, which
is enough for the convex loss at hand. Regularization strength is 1/C on
the sklearn-style scale (the intercept is not penalized). ``verbose``
only controls progress logging; it can never change the fit.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

GRAD_TOL = 1e-6
ARMIJO_C = 1e-4


def _loss_grad(w, b, X, y, lam):
    z = X @ w + b
    # mean log(1 + exp(-s z)) with s = +-1, computed stably
    s = 2.0 * y - 1.0
    loss = float(np.mean(np.logaddexp(0.0, -s * z))) + 0.5 * lam * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-z))
    resid = (p - y) / X.shape[0]
    return loss, X.T @ resid + lam * w, float(np.sum(resid))


def fit(X: np.ndarray, y: np.ndarray, params: dict, seed: int) -> dict:
    C = float(params["C"])
    max_iter = int(params["max_iter"])
    verbose = int(params.get("verbose", 0))

    n, d = X.shape
    lam = 1.0 / (C * n)
    w = np.zeros(d)
    b = 0.0
    yf = y.astype(np.float64)

    loss, gw, gb = _loss_grad(w, b, X, yf, lam)
    step = 1.0
    for epoch in range(1, max_iter + 1):
        g2 = float(gw @ gw) + gb * gb
        if np.sqrt(g2) < GRAD_TOL:
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = _loss_grad(w_new, b_new, X, yf, lam)
            if loss_new <= loss - ARMIJO_C * step * g2 or step < 1e-12:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        if verbose > 0:
            log.info("logreg epoch %d: loss=%.6f step=%.3g", epoch, loss, step)
    return {"w": w, "b": b}


def predict(state: dict, X: np.ndarray) -> np.ndarray:
    z = X @ state["w"] + state["b"]
    return (z >= 0.0).astype(np.int64)
