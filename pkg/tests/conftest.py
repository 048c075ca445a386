import itertools
import math

import numpy as np
import pytest

from nswlb import monomial
from nswlb.game import load_balancing_game
from nswlb.latency import LatencyFunction


def naive_nsw(game, profile):
    """Direct weighted geometric mean of player costs, no logs."""
    loads = {}
    for p, s in zip(game.players, profile):
        for r in p.strategies[s]:
            loads[r] = loads.get(r, 0.0) + p.weight
    lat = {r.id: r.latency for r in game.resources}
    prod = 1.0
    for p, s in zip(game.players, profile):
        cost = sum(float(lat[r](loads[r])) for r in p.strategies[s])
        prod *= cost ** p.weight
    return prod ** (1.0 / sum(p.weight for p in game.players))


def naive_is_pne(game, profile, tol=1e-9):
    def cost(i, prof):
        loads = {}
        for p, s in zip(game.players, prof):
            for r in p.strategies[s]:
                loads[r] = loads.get(r, 0.0) + p.weight
        lat = {r.id: r.latency for r in game.resources}
        return sum(float(lat[r](loads[r])) for r in game.players[i].strategies[prof[i]])

    for i, p in enumerate(game.players):
        cur = cost(i, profile)
        for s in range(len(p.strategies)):
            alt = list(profile)
            alt[i] = s
            if cost(i, alt) < cur - tol * cur:
                return False
    return True


def all_profiles(game):
    return itertools.product(*[range(len(p.strategies)) for p in game.players])


@pytest.fixture
def two_identical():
    return load_balancing_game([monomial(1), monomial(1)], weights=[1, 1])


@pytest.fixture
def x_and_2x():
    return load_balancing_game([monomial(1), monomial(1, 2)], weights=[1, 1])


class Ramp(LatencyFunction):
    """1 up to load 1, a ramp to e at load 2, flat afterwards.

    Positive and non-decreasing, but x ln l(x) bends down at 2, so slot
    prices 0, 2, 1 drop at the third slot.
    """

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + (math.e - 1.0) * np.clip(x - 1.0, 0.0, 1.0)

    @property
    def degree(self):
        return 1

    def to_dict(self):
        return {"family": "ramp"}
