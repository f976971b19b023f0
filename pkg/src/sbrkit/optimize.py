"""Differential evolution over a bounded parameter box.

rand/1/bin with a greedy selection that keeps the incumbent on ties, and
a lives counter: the search starts with one life, spends one per
generation and earns one back every time the global best improves, so it
stops after a full generation without progress or at the generation cap,
whichever comes first. With ``early_stop`` disabled the lives counter is
still tracked and reported but only the generation cap terminates the
run, which is how long benchmark runs are replayed.

Every random draw for frontier member i in generation g comes from a
generator seeded with (seed, g, i), so results do not depend on how
evaluations are scheduled. There is no forced all-donor crossover index:
a trial can equal its parent, in which case selection keeps the parent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import atomic_writer
from .learners.spaces import ParamSpace

Fitness = Callable[[dict], float]

HistoryRow = tuple[int, float, int]  # generation, best fitness, evaluations so far


class FitnessError(ValueError):
    """A fitness evaluation returned a non-finite value."""


@dataclass(frozen=True)
class DeConfig:
    np: int
    f: float = 0.8
    cr: float = 0.9
    iter_cap: int = 10
    seed: int = 0
    early_stop: bool = True

    def __post_init__(self) -> None:
        if self.np < 4:
            raise ValueError("np must be >= 4 (three distinct peers plus self)")
        if self.f <= 0:
            raise ValueError("f must be positive")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError("cr must lie in [0, 1]")
        if self.iter_cap < 1:
            raise ValueError("iter_cap must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class Candidate:
    values: dict[str, float]
    fitness: float


@dataclass
class DeState:
    frontier: list[Candidate]
    best: Candidate
    lives: int
    generation: int
    evaluations: int


# per-learner population sizes: ten times the number of tuned knobs
NP_BY_LEARNER = {"rf": 60, "lr": 30, "mlp": 60, "knn": 20, "nb": 10}


def default_de_config(kind: str, iters: int, seed: int = 0) -> DeConfig:
    if kind not in NP_BY_LEARNER:
        raise ValueError(f"unknown learner kind {kind!r}")
    return DeConfig(np=NP_BY_LEARNER[kind], f=0.8, cr=0.9, iter_cap=iters, seed=seed)


def _evaluate(fitness: Fitness, values: dict[str, float]) -> float:
    v = float(fitness(values))
    if not math.isfinite(v):
        raise FitnessError(f"non-finite fitness {v!r} for vector {values}")
    return v


def initialize(space: ParamSpace, cfg: DeConfig, fitness: Fitness) -> DeState:
    rng = np.random.default_rng((cfg.seed, 0))
    lows, highs = space.lows, space.highs
    frontier = []
    for _ in range(cfg.np):
        vec = space.to_dict(lows + rng.random(len(space)) * (highs - lows))
        frontier.append(Candidate(vec, _evaluate(fitness, vec)))
    best_i = max(range(cfg.np), key=lambda i: (frontier[i].fitness, -i))
    return DeState(
        frontier=frontier,
        best=frontier[best_i],
        lives=1,
        generation=0,
        evaluations=cfg.np,
    )


def mutate(x: dict, y: dict, z: dict, f: float, space: ParamSpace) -> dict:
    """Donor vector x + f * (z - y), clipped into the box."""
    donor = space.to_array(x) + f * (space.to_array(z) - space.to_array(y))
    return space.to_dict(np.clip(donor, space.lows, space.highs))


def crossover_select(
    old: Candidate,
    donor: dict,
    cr: float,
    fitness: Fitness,
    space: ParamSpace,
    rng: np.random.Generator,
) -> Candidate:
    """Binomial crossover then greedy selection; ties keep the incumbent."""
    u = rng.random(len(space))
    old_arr = space.to_array(old.values)
    donor_arr = space.to_array(donor)
    trial = space.to_dict(np.where(u < cr, donor_arr, old_arr))
    trial_fitness = _evaluate(fitness, trial)
    if trial_fitness > old.fitness:
        return Candidate(trial, trial_fitness)
    return old


def run_de(
    space: ParamSpace,
    cfg: DeConfig,
    fitness: Fitness,
    observer: Callable[[DeState], None] | None = None,
) -> tuple[Candidate, list[HistoryRow]]:
    """Best candidate found, plus the per-generation best-fitness history.

    ``observer`` (when given) is invoked with the state after
    initialization and after every completed generation; tests use it to
    check bounds and frontier-size invariants.
    """
    state = initialize(space, cfg, fitness)
    history: list[HistoryRow] = [(0, state.best.fitness, state.evaluations)]
    if observer is not None:
        observer(state)

    peers = np.arange(cfg.np)
    while state.generation < cfg.iter_cap and (
        not cfg.early_stop or state.lives > 0
    ):
        state.lives = max(state.lives - 1, 0)
        gen = state.generation + 1
        frontier = state.frontier
        new_frontier: list[Candidate] = []
        for i, old in enumerate(frontier):
            rng = np.random.default_rng((cfg.seed, gen, i))
            others = np.delete(peers, i)
            xi, yi, zi = rng.choice(others, size=3, replace=False)
            donor = mutate(
                frontier[xi].values, frontier[yi].values, frontier[zi].values,
                cfg.f, space,
            )
            cand = crossover_select(old, donor, cfg.cr, fitness, space, rng)
            new_frontier.append(cand)
            if cand.fitness > state.best.fitness:
                state.best = cand
                state.lives += 1  # progress buys one more generation
        state.frontier = new_frontier
        state.generation = gen
        state.evaluations += cfg.np
        history.append((gen, state.best.fitness, state.evaluations))
        if observer is not None:
            observer(state)
    return state.best, history


def write_history_csv(history: Sequence[HistoryRow], path) -> None:
    with atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best_fitness", "evaluations_so_far"])
        for gen, best, evals in history:
            w.writerow([gen, repr(float(best)), evals])
