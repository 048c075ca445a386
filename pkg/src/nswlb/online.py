"""Greedy online assignment and its competitive ratio."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGameError, ValidationError
from .game import LOAD_BALANCING, AtomicGame, log_nsw
from .latency import g_log
from .optima import PROFILE_CAP, optimum

TIE_TOL = 1e-9


@dataclass(frozen=True)
class OnlineInstance:
    game: AtomicGame
    arrival_order: tuple

    def __post_init__(self):
        order = tuple(int(i) for i in self.arrival_order)
        object.__setattr__(self, "arrival_order", order)
        if self.game.mode != LOAD_BALANCING:
            raise InvalidGameError("online instances must be load balancing games")
        if sorted(order) != list(range(self.game.n)):
            raise InvalidGameError("arrival order is not a permutation of the players")

    @classmethod
    def in_index_order(cls, game: AtomicGame) -> "OnlineInstance":
        return cls(game, tuple(range(game.n)))

    def to_dict(self):
        d = self.game.to_dict()
        d["arrivalOrder"] = list(self.arrival_order)
        return d

    @classmethod
    def from_dict(cls, d):
        game = AtomicGame.from_dict(d)
        return cls(game, tuple(d.get("arrivalOrder", range(game.n))))


def shuffled(game: AtomicGame, seed: int) -> OnlineInstance:
    """Instance with a seeded random arrival order."""
    order = np.random.default_rng(seed).permutation(game.n)
    return OnlineInstance(game, tuple(int(i) for i in order))


def greedy_step_cost(game: AtomicGame, loads, i: int, j: int) -> float:
    """Increase of ``sum_j k_j ln l_j(k_j)`` when client ``i`` joins resource index ``j``."""
    if j not in game.singleton_resources[i]:
        raise ValidationError(f"resource {game.resources[j].id} is not admissible for client {i}")
    f = game.resources[j].latency
    k = float(loads[j])
    w = game.weights[i]
    return float(g_log(f, k + w) - g_log(f, k))


def _pick(values: np.ndarray) -> int:
    best = values.min()
    return int(np.flatnonzero(values <= best + TIE_TOL * max(1.0, abs(best)))[0])


@dataclass
class GreedyResult:
    profile: tuple
    steps: list  # (client, resource id, increment)


def greedy_assign(instance: OnlineInstance) -> GreedyResult:
    """Each arriving client takes the admissible resource with the smallest increment.

    Near-ties (relative 1e-9) go to the resource listed first in the client's
    strategy list.
    """
    game = instance.game
    loads = np.zeros(game.m)
    profile = [0] * game.n
    steps = []
    for i in instance.arrival_order:
        res = game.singleton_resources[i]
        incs = np.array([greedy_step_cost(game, loads, i, j) for j in res])
        s = _pick(incs)
        profile[i] = s
        loads[res[s]] += game.weights[i]
        steps.append((i, game.resources[res[s]].id, float(incs[s])))
    return GreedyResult(tuple(profile), steps)


def total_rule_choices(instance: OnlineInstance):
    """Per step, the argmin set and choice of the *total* logNsw rule.

    The revealed partial instance is scored by its full log-NSW numerator,
    not by increments.  Used to check that both formulations agree.
    """
    game = instance.game
    loads = np.zeros(game.m)
    out = []
    for i in instance.arrival_order:
        res = game.singleton_resources[i]
        totals = []
        for j in res:
            trial = loads.copy()
            trial[j] += game.weights[i]
            totals.append(float(game.g_values(trial).sum()))
        totals = np.array(totals)
        best = totals.min()
        ties = set(np.flatnonzero(totals <= best + TIE_TOL * max(1.0, abs(best))).tolist())
        s = _pick(totals)
        out.append((i, ties, s))
        loads[res[s]] += game.weights[i]
    return out


def increment_rule_choices(instance: OnlineInstance):
    game = instance.game
    loads = np.zeros(game.m)
    out = []
    for i in instance.arrival_order:
        res = game.singleton_resources[i]
        incs = np.array([greedy_step_cost(game, loads, i, j) for j in res])
        best = incs.min()
        ties = set(np.flatnonzero(incs <= best + TIE_TOL * max(1.0, abs(best))).tolist())
        s = _pick(incs)
        out.append((i, ties, s))
        loads[res[s]] += game.weights[i]
    return out


def competitive_ratio(instance: OnlineInstance, cap: int = PROFILE_CAP) -> float:
    """NSW of the greedy assignment over the optimal NSW."""
    game = instance.game
    greedy = greedy_assign(instance).profile
    opt = optimum(game, cap=cap)
    return math.exp(log_nsw(game, greedy).value - opt.log_nsw.value)
