"""One-hidden-layer perceptron for binary labels.

Minibatch stochastic gradient descent with momentum and an
inverse-scaling step size lr_t = learning_rate_init / t^power_t, where t
is the epoch number. Training stops early once the epoch loss has failed
to improve by more than ``tol`` for ``n_iter_no_change`` epochs in a row.
The hidden width and tol are fixed so the tuning box stays exactly the
six knobs above.
"""

from __future__ import annotations

import numpy as np

HIDDEN_UNITS = 100
TOL = 1e-4
MAX_BATCH = 200


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def fit(X: np.ndarray, y: np.ndarray, params: dict, seed: int) -> dict:
    alpha = float(params["alpha"])
    lr_init = float(params["learning_rate_init"])
    power_t = float(params["power_t"])
    max_iter = int(params["max_iter"])
    momentum = float(params["momentum"])
    n_iter_no_change = int(params["n_iter_no_change"])

    n, d = X.shape
    h = HIDDEN_UNITS
    rng = np.random.default_rng(seed)
    s1 = np.sqrt(6.0 / (d + h))
    s2 = np.sqrt(6.0 / (h + 1))
    W1 = rng.uniform(-s1, s1, (d, h))
    b1 = np.zeros(h)
    W2 = rng.uniform(-s2, s2, h)
    b2 = 0.0
    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = 0.0

    yf = y.astype(np.float64)
    batch = min(MAX_BATCH, n)
    best_loss = np.inf
    stall = 0
    curve: list[float] = []

    for epoch in range(1, max_iter + 1):
        lr = lr_init / epoch**power_t
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            rows = perm[start : start + batch]
            xb, yb = X[rows], yf[rows]
            nb = rows.size

            a1 = xb @ W1 + b1
            h1 = np.maximum(a1, 0.0)
            z = h1 @ W2 + b2
            ce = float(np.sum(np.logaddexp(0.0, z) - yb * z))
            total += ce

            dz = (_sigmoid(z) - yb) / nb
            gW2 = h1.T @ dz + (alpha / nb) * W2
            gb2 = float(np.sum(dz))
            dh = np.outer(dz, W2)
            dh[a1 <= 0.0] = 0.0
            gW1 = xb.T @ dh + (alpha / nb) * W1
            gb1 = dh.sum(axis=0)

            vW1 = momentum * vW1 - lr * gW1
            vb1 = momentum * vb1 - lr * gb1
            vW2 = momentum * vW2 - lr * gW2
            vb2 = momentum * vb2 - lr * gb2
            W1 += vW1
            b1 += vb1
            W2 += vW2
            b2 += vb2

        reg = 0.5 * alpha * (float(np.sum(W1 * W1)) + float(np.sum(W2 * W2))) / n
        loss = total / n + reg
        curve.append(loss)
        if loss > best_loss - TOL:
            stall += 1
        else:
            stall = 0
        best_loss = min(best_loss, loss)
        if stall >= n_iter_no_change:
            break

    return {
        "W1": W1,
        "b1": b1,
        "W2": W2,
        "b2": float(b2),
        "loss_curve": np.asarray(curve),
    }


def predict(state: dict, X: np.ndarray) -> np.ndarray:
    h1 = np.maximum(X @ state["W1"] + state["b1"], 0.0)
    z = h1 @ state["W2"] + state["b2"]
    return (z >= 0.0).astype(np.int64)
