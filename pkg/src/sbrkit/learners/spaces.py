"""Bounded hyperparameter boxes for the five learners.

Each learner exposes exactly the knobs a tuner is allowed to move, with
the stock defaults inside the box. Optimizers work on continuous vectors;
integer dimensions are rounded only when a vector is materialized into
concrete parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INT = "integer"
REAL = "real"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    low: float
    high: float
    default: float

    def __post_init__(self) -> None:
        if self.kind not in (INT, REAL):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not (self.low <= self.default <= self.high):
            raise ValueError(f"{self.name}: default outside [low, high]")


@dataclass(frozen=True)
class ParamSpace:
    specs: tuple[ParamSpec, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def lows(self) -> np.ndarray:
        return np.asarray([s.low for s in self.specs])

    @property
    def highs(self) -> np.ndarray:
        return np.asarray([s.high for s in self.specs])

    def __len__(self) -> int:
        return len(self.specs)

    def defaults(self) -> dict[str, float]:
        return {s.name: s.default for s in self.specs}

    def to_array(self, values: dict[str, float]) -> np.ndarray:
        return np.asarray([float(values[s.name]) for s in self.specs])

    def to_dict(self, arr) -> dict[str, float]:
        return {s.name: float(v) for s, v in zip(self.specs, arr)}

    def clip(self, values: dict[str, float]) -> dict[str, float]:
        return self.to_dict(np.clip(self.to_array(values), self.lows, self.highs))

    def materialize(self, values: dict[str, float]) -> dict[str, float | int]:
        """Concrete parameters: integer dims round half-up, all dims clipped."""
        out: dict[str, float | int] = {}
        for s in self.specs:
            v = min(max(float(values[s.name]), s.low), s.high)
            if s.kind == INT:
                out[s.name] = int(min(max(math.floor(v + 0.5), s.low), s.high))
            else:
                out[s.name] = v
        return out

    def contains(self, values: dict[str, float]) -> bool:
        arr = self.to_array(values)
        return bool(np.all(arr >= self.lows) and np.all(arr <= self.highs))


# Stock defaults of None for tree size limits materialize as the range
# maximum while tuning; the untuned-default path keeps them unconstrained
# (see learners.UNTUNED_DEFAULTS).
_SPACES: dict[str, ParamSpace] = {
    "rf": ParamSpace(
        (
            ParamSpec("n_estimators", INT, 10, 150, 10),
            ParamSpec("min_samples_leaf", INT, 1, 20, 1),
            ParamSpec("min_samples_split", INT, 2, 20, 2),
            ParamSpec("max_leaf_nodes", INT, 2, 50, 50),
            ParamSpec("max_features", REAL, 0.01, 1.0, 1.0),
            ParamSpec("max_depth", INT, 1, 10, 10),
        )
    ),
    "lr": ParamSpace(
        (
            ParamSpec("C", REAL, 1.0, 10.0, 1.0),
            ParamSpec("max_iter", INT, 50, 200, 100),
            ParamSpec("verbose", INT, 0, 10, 0),
        )
    ),
    "mlp": ParamSpace(
        (
            ParamSpec("alpha", REAL, 1e-4, 1e-3, 1e-4),
            ParamSpec("learning_rate_init", REAL, 1e-3, 1e-2, 1e-3),
            ParamSpec("power_t", REAL, 0.1, 1.0, 0.5),
            ParamSpec("max_iter", INT, 50, 300, 200),
            ParamSpec("momentum", REAL, 0.1, 1.0, 0.9),
            ParamSpec("n_iter_no_change", INT, 1, 100, 10),
        )
    ),
    "knn": ParamSpace(
        (
            ParamSpec("leaf_size", INT, 10, 100, 30),
            ParamSpec("n_neighbors", INT, 1, 10, 5),
        )
    ),
    "nb": ParamSpace((ParamSpec("var_smoothing", REAL, 0.0, 1.0, 1e-9),)),
}


def param_space(kind: str) -> ParamSpace:
    try:
        return _SPACES[kind]
    except KeyError:
        raise ValueError(f"unknown learner kind {kind!r}") from None
