"""Five classifiers behind a uniform fit/predict surface.

Kinds are the lowercase keys "nb", "rf", "lr", "mlp" and "knn"; the order
of LEARNER_ORDER is also the tie-break order used when selecting a
winner. ``fit(kind, None, ...)`` uses the stock defaults (unconstrained
tree growth); an explicit parameter dict is clipped into the tuning box,
with integer knobs rounded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..data import LabeledMatrix
from . import bayes, linear, neighbors, nets, trees
from .spaces import ParamSpace, ParamSpec, param_space

LEARNER_ORDER = ("nb", "rf", "lr", "mlp", "knn")
LEARNER_LABELS = {"nb": "NB", "rf": "RF", "lr": "LR", "mlp": "MP", "knn": "KNN"}

UNTUNED_DEFAULTS: dict[str, dict] = {
    "rf": {
        "n_estimators": 10,
        "min_samples_leaf": 1,
        "min_samples_split": 2,
        "max_leaf_nodes": None,
        "max_features": 1.0,
        "max_depth": None,
    },
    "lr": {"C": 1.0, "max_iter": 100, "verbose": 0},
    "mlp": {
        "alpha": 1e-4,
        "learning_rate_init": 1e-3,
        "power_t": 0.5,
        "max_iter": 200,
        "momentum": 0.9,
        "n_iter_no_change": 10,
    },
    "knn": {"leaf_size": 30, "n_neighbors": 5},
    "nb": {"var_smoothing": 1e-9},
}

_FIT = {
    "nb": bayes.fit,
    "rf": trees.fit,
    "lr": linear.fit,
    "mlp": nets.fit,
    "knn": neighbors.fit,
}
_PREDICT = {
    "nb": bayes.predict,
    "rf": trees.predict,
    "lr": linear.predict,
    "mlp": nets.predict,
    "knn": neighbors.predict,
}

# tree-size knobs that may stay None, meaning unconstrained
_NONEABLE = {"max_depth", "max_leaf_nodes"}


@dataclass
class FittedModel:
    kind: str
    params: dict
    state: dict
    seed: int
    n_features: int


def resolve_params(kind: str, params: dict | None) -> dict:
    """Concrete parameters for ``fit``: given keys override stock defaults."""
    if kind not in _FIT:
        raise ValueError(f"unknown learner kind {kind!r}")
    out = dict(UNTUNED_DEFAULTS[kind])
    if params is None:
        return out
    space = param_space(kind)
    by_name = {s.name: s for s in space.specs}
    for key, value in params.items():
        if key == "bootstrap":
            out[key] = bool(value)
            continue
        spec = by_name.get(key)
        if spec is None:
            raise ValueError(f"unknown parameter {key!r} for learner {kind!r}")
        if value is None:
            if key not in _NONEABLE:
                raise ValueError(f"{key} cannot be None")
            out[key] = None
            continue
        out[key] = space.materialize({**space.defaults(), key: value})[key]
    return out


def fit(kind: str, params: dict | None, train: LabeledMatrix, seed: int = 0) -> FittedModel:
    resolved = resolve_params(kind, params)
    if train.n_rows == 0:
        raise ValueError("cannot fit on an empty training set")
    X, y = train.features, train.labels
    classes = np.unique(y)
    if classes.size == 1:
        state: dict = {"constant": int(classes[0])}
    else:
        state = _FIT[kind](X, y, resolved, seed)
    return FittedModel(
        kind=kind, params=resolved, state=state, seed=seed, n_features=train.n_cols
    )


def predict(model: FittedModel, rows: np.ndarray) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("rows must be a 2-D feature array")
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"column mismatch: model expects {model.n_features}, got {X.shape[1]}"
        )
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if "constant" in model.state:
        return np.full(X.shape[0], model.state["constant"], dtype=np.int64)
    return _PREDICT[model.kind](model.state, X)


def _encode(value):
    if isinstance(value, np.ndarray):
        return {"__kind__": "array", "data": value.tolist(), "dtype": str(value.dtype)}
    if isinstance(value, trees.Tree):
        return {
            "__kind__": "tree",
            "feature": value.feature.tolist(),
            "threshold": value.threshold.tolist(),
            "left": value.left.tolist(),
            "right": value.right.tolist(),
            "label": value.label.tolist(),
        }
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _decode(value):
    if isinstance(value, dict) and value.get("__kind__") == "array":
        return np.asarray(value["data"], dtype=value["dtype"])
    if isinstance(value, dict) and value.get("__kind__") == "tree":
        return trees.Tree(
            feature=np.asarray(value["feature"], dtype=np.int64),
            threshold=np.asarray(value["threshold"], dtype=np.float64),
            left=np.asarray(value["left"], dtype=np.int64),
            right=np.asarray(value["right"], dtype=np.int64),
            label=np.asarray(value["label"], dtype=np.int64),
        )
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def model_to_json(model: FittedModel) -> str:
    """Serialize a fitted model; meant for reproducibility, not speed."""
    state = {k: _encode(v) for k, v in model.state.items() if not k.startswith("_")}
    return json.dumps(
        {
            "kind": model.kind,
            "params": model.params,
            "seed": model.seed,
            "n_features": model.n_features,
            "state": state,
        }
    )


def model_from_json(text: str) -> FittedModel:
    raw = json.loads(text)
    state = {k: _decode(v) for k, v in raw["state"].items()}
    return FittedModel(
        kind=raw["kind"],
        params=raw["params"],
        state=state,
        seed=raw["seed"],
        n_features=raw["n_features"],
    )
