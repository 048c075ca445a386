"""Seeded random small games for property checks and experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import NonAtomicGame, PlayerType, Resource, load_balancing_game
from .latency import Polynomial


@dataclass(frozen=True)
class SampleConfig:
    max_players: int = 6
    max_resources: int = 4
    max_degree: int = 3
    weighted: bool = False
    restricted: bool = True  # random admissible sets; False gives everyone every resource
    weight_range: tuple = (0.5, 4.0)


def random_polynomial(rng: np.random.Generator, max_degree: int) -> Polynomial:
    deg = int(rng.integers(0, max_degree + 1))
    coeffs = rng.uniform(0.0, 3.0, size=deg + 1)
    coeffs[rng.random(deg + 1) < 0.4] = 0.0
    coeffs[deg] = rng.uniform(0.2, 3.0)
    return Polynomial(tuple(float(c) for c in coeffs))


def _admissible(rng, m, restricted):
    if not restricted:
        return list(range(m))
    size = int(rng.integers(1, m + 1))
    return [int(j) for j in rng.choice(m, size=size, replace=False)]


def random_game(seed: int, cfg: SampleConfig = SampleConfig()):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, cfg.max_players + 1))
    m = int(rng.integers(1, cfg.max_resources + 1))
    lats = [random_polynomial(rng, cfg.max_degree) for _ in range(m)]
    adm = [_admissible(rng, m, cfg.restricted) for _ in range(n)]
    if cfg.weighted:
        weights = [float(np.round(rng.uniform(*cfg.weight_range), 3)) for _ in range(n)]
    else:
        weights = [1.0] * n
    return load_balancing_game(lats, adm, weights)


def random_symmetric_nonatomic(seed: int, max_resources: int = 3, max_degree: int = 3) -> NonAtomicGame:
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, max_resources + 1))
    res = tuple(Resource(f"r{j + 1}", random_polynomial(rng, max_degree)) for j in range(m))
    rate = float(np.round(rng.uniform(0.2, 5.0), 3))
    return NonAtomicGame((PlayerType(rate, tuple(r.id for r in res)),), res)
