"""Atomic and non-atomic load balancing games and their NSW evaluation.

A profile is a tuple of strategy indices, one per player, each indexing into
that player's strategy list.  Loads, costs and the log Nash social welfare
are computed from it.  Everything involving the NSW stays in natural-log
space: ``l(k)**k`` overflows a double for quite ordinary instances.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import latency as lat
from .errors import DomainError, InvalidGameError, InvalidProfileError, ValidationError

LOAD_BALANCING = "loadBalancing"
CONGESTION = "congestion"

Profile = tuple  # tuple[int, ...]


def _columns(resources, loads, fn):
    loads = np.asarray(loads, dtype=float)
    out = np.empty_like(loads)
    for j, r in enumerate(resources):
        out[..., j] = fn(r.latency, loads[..., j])
    return out


@dataclass(frozen=True)
class Resource:
    id: str
    latency: lat.LatencyFunction


@dataclass(frozen=True)
class Player:
    weight: float
    strategies: tuple  # tuple of tuples of resource ids

    def __post_init__(self):
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "strategies", tuple(tuple(s) for s in self.strategies))


@dataclass(frozen=True)
class LogNsw:
    """Natural log of the NSW together with the total weight it averages over."""

    value: float
    total_weight: float

    @property
    def nsw(self) -> float:
        return math.exp(self.value)


@dataclass(frozen=True)
class AtomicGame:
    players: tuple[Player, ...]
    resources: tuple[Resource, ...]
    mode: str = LOAD_BALANCING

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "resources", tuple(self.resources))
        if self.mode not in (LOAD_BALANCING, CONGESTION):
            raise InvalidGameError(f"unknown mode {self.mode!r}")
        ids = [r.id for r in self.resources]
        if len(set(ids)) != len(ids):
            raise InvalidGameError("duplicate resource ids")
        known = set(ids)
        for i, p in enumerate(self.players):
            if not (p.weight > 0 and math.isfinite(p.weight)):
                raise InvalidGameError(f"player {i} has non-positive weight {p.weight}")
            if not p.strategies:
                raise InvalidGameError(f"player {i} has no strategies")
            for s in p.strategies:
                if not s:
                    raise InvalidGameError(f"player {i} has an empty strategy")
                if len(set(s)) != len(s):
                    raise InvalidGameError(f"player {i} repeats a resource inside a strategy")
                missing = set(s) - known
                if missing:
                    raise InvalidGameError(f"player {i} references unknown resources {sorted(missing)}")
                if self.mode == LOAD_BALANCING and len(s) != 1:
                    raise InvalidGameError(f"player {i}: load balancing strategies must be single resources")

    # -- derived arrays -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return len(self.resources)

    @cached_property
    def index(self) -> dict:
        return {r.id: j for j, r in enumerate(self.resources)}

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([p.weight for p in self.players], dtype=float)
        w.setflags(write=False)
        return w

    @cached_property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def strategy_masks(self) -> tuple:
        """Per player, a bool matrix (num_strategies x m) of resource membership."""
        out = []
        for p in self.players:
            mask = np.zeros((len(p.strategies), self.m), dtype=bool)
            for s, strat in enumerate(p.strategies):
                mask[s, [self.index[r] for r in strat]] = True
            mask.setflags(write=False)
            out.append(mask)
        return tuple(out)

    @cached_property
    def strategy_counts(self) -> tuple:
        return tuple(len(p.strategies) for p in self.players)

    @cached_property
    def singleton_resources(self) -> tuple:
        """Load balancing only: resource index of each strategy, per player."""
        return tuple(np.array([self.index[s[0]] for s in p.strategies]) for p in self.players)

    @property
    def is_unweighted(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    @property
    def max_degree(self) -> int:
        return max(r.latency.degree for r in self.resources)

    def latencies(self, loads):
        """Evaluate each resource's latency on the matching column of ``loads``."""
        return _columns(self.resources, loads, lambda f, x: f(x))

    def log_latencies(self, loads):
        return _columns(self.resources, loads, lambda f, x: f.log(x))

    def g_values(self, loads):
        """``k * ln l(k)`` per resource column, zero where the load is zero."""
        return _columns(self.resources, loads, lat.g_log)

    def with_latencies(self, fn) -> "AtomicGame":
        """Copy of the game with every latency replaced by ``fn(latency)``."""
        res = tuple(Resource(r.id, fn(r.latency)) for r in self.resources)
        return AtomicGame(self.players, res, self.mode)

    def num_profiles(self) -> int:
        return math.prod(self.strategy_counts)

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "resources": [{"id": r.id, "latency": r.latency.to_dict()} for r in self.resources],
            "players": [{"weight": p.weight, "strategies": [list(s) for s in p.strategies]} for p in self.players],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AtomicGame":
        try:
            resources = tuple(Resource(str(r["id"]), lat.from_dict(r["latency"])) for r in d["resources"])
            players = tuple(Player(p.get("weight", 1.0), tuple(tuple(map(str, s)) for s in p["strategies"]))
                            for p in d["players"])
        except (KeyError, TypeError) as exc:
            raise InvalidGameError(f"malformed game: {exc!r}") from exc
        return cls(players, resources, d.get("mode", LOAD_BALANCING))


def load_balancing_game(latencies: Sequence, admissible: Sequence[Sequence[int]] | None = None,
                        weights: Sequence[float] | None = None, ids: Sequence[str] | None = None) -> AtomicGame:
    """Convenience constructor using resource indices.

    ``admissible[i]`` lists the resource indices player ``i`` may use, in
    preference order for tie-breaking.  Defaults: every player may use every
    resource, unit weights.
    """
    m = len(latencies)
    ids = list(ids) if ids is not None else [f"r{j + 1}" for j in range(m)]
    if weights is None:
        n = len(admissible) if admissible is not None else 1
        weights = [1.0] * n
    if admissible is None:
        admissible = [list(range(m))] * len(weights)
    if len(admissible) != len(weights):
        raise InvalidGameError("admissible and weights differ in length")
    resources = tuple(Resource(ids[j], f) for j, f in enumerate(latencies))
    players = tuple(Player(w, tuple((ids[j],) for j in adm)) for w, adm in zip(weights, admissible))
    return AtomicGame(players, resources, LOAD_BALANCING)


# -- profiles -------------------------------------------------------------

def check_profile(game: AtomicGame, profile) -> tuple:
    profile = tuple(int(s) for s in profile)
    if len(profile) != game.n:
        raise InvalidProfileError(f"profile has {len(profile)} entries for {game.n} players")
    for i, (s, c) in enumerate(zip(profile, game.strategy_counts)):
        if not 0 <= s < c:
            raise InvalidProfileError(f"player {i}: strategy index {s} out of range [0, {c})")
    return profile


def profile_from_resources(game: AtomicGame, chosen: Sequence) -> tuple:
    """Profile picking, for each player, the strategy equal to ``chosen[i]``.

    ``chosen[i]`` is a resource id, or an iterable of ids for congestion mode.
    """
    out = []
    for i, (p, c) in enumerate(zip(game.players, chosen)):
        target = {c} if isinstance(c, str) else set(c)
        for s, strat in enumerate(p.strategies):
            if set(strat) == target:
                out.append(s)
                break
        else:
            raise InvalidProfileError(f"player {i} has no strategy {sorted(target)}")
    return tuple(out)


def load_vector(game: AtomicGame, profile) -> np.ndarray:
    profile = check_profile(game, profile)
    loads = np.zeros(game.m)
    for w, mask, s in zip(game.weights, game.strategy_masks, profile):
        loads += w * mask[s]
    return loads


def congestion(game: AtomicGame, profile) -> dict:
    """Total weight on each resource, keyed by resource id."""
    loads = load_vector(game, profile)
    return {r.id: float(x) for r, x in zip(game.resources, loads)}


def player_cost(game: AtomicGame, profile, i: int) -> float:
    loads = load_vector(game, profile)
    mask = game.strategy_masks[i][profile[i]]
    return float(game.latencies(loads)[mask].sum())


def player_costs(game: AtomicGame, profile) -> np.ndarray:
    loads = load_vector(game, profile)
    lats = game.latencies(loads)
    return np.array([lats[mask[s]].sum() for mask, s in zip(game.strategy_masks, profile)])


def log_nsw(game: AtomicGame, profile) -> LogNsw:
    """Log of the weighted geometric mean of player costs.

    Load balancing games use the resource form ``sum_j k_j ln l_j(k_j) / W``
    over loaded resources; congestion games use ``sum_i w_i ln cost_i / W``.
    """
    loads = load_vector(game, profile)
    W = game.total_weight
    if game.mode == LOAD_BALANCING:
        used = loads > 0
        lats = game.latencies(loads)
        if np.any(lats[used] <= 0):
            raise DomainError("non-positive latency at a positive load")
        total = float(game.g_values(loads)[used].sum())
    else:
        costs = player_costs(game, profile)
        if np.any(costs <= 0):
            raise DomainError("non-positive player cost")
        total = float(np.dot(game.weights, np.log(costs)))
    return LogNsw(total / W if W > 0 else 0.0, W)


# -- batch evaluation over many profiles ----------------------------------

def batch_loads(game: AtomicGame, profiles: np.ndarray) -> np.ndarray:
    """Loads for a (P, n) array of profiles, shape (P, m)."""
    profiles = np.asarray(profiles)
    loads = np.zeros((profiles.shape[0], game.m))
    for i, (w, mask) in enumerate(zip(game.weights, game.strategy_masks)):
        loads += w * mask[profiles[:, i]]
    return loads


def batch_log_nsw_numerator(game: AtomicGame, profiles: np.ndarray, loads=None) -> np.ndarray:
    """``W * log NSW`` for each row of ``profiles``."""
    if loads is None:
        loads = batch_loads(game, profiles)
    if game.mode == LOAD_BALANCING:
        return game.g_values(loads).sum(axis=1)
    lats = game.latencies(loads)
    total = np.zeros(loads.shape[0])
    for i, (w, mask) in enumerate(zip(game.weights, game.strategy_masks)):
        total += w * np.log((mask[profiles[:, i]] * lats).sum(axis=1))
    return total


def iter_profile_chunks(game: AtomicGame, chunk: int = 1 << 16):
    """Yield (start, block) with all profiles in lexicographic order."""
    counts = game.strategy_counts
    total = math.prod(counts)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        if counts:
            block = np.stack(np.unravel_index(idx, counts), axis=1)
        else:
            block = np.zeros((len(idx), 0), dtype=np.intp)
        yield start, block


# -- non-atomic games -----------------------------------------------------

@dataclass(frozen=True)
class PlayerType:
    rate: float
    admissible: tuple  # resource ids

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "admissible", tuple(self.admissible))


@dataclass(frozen=True)
class NonAtomicGame:
    types: tuple[PlayerType, ...]
    resources: tuple[Resource, ...]

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "resources", tuple(self.resources))
        ids = [r.id for r in self.resources]
        if len(set(ids)) != len(ids):
            raise InvalidGameError("duplicate resource ids")
        for i, t in enumerate(self.types):
            if not (t.rate >= 0 and math.isfinite(t.rate)):
                raise InvalidGameError(f"type {i} has invalid rate {t.rate}")
            if not t.admissible:
                raise InvalidGameError(f"type {i} has no admissible resources")
            if set(t.admissible) - set(ids):
                raise InvalidGameError(f"type {i} references unknown resources")

    @property
    def m(self) -> int:
        return len(self.resources)

    @cached_property
    def index(self) -> dict:
        return {r.id: j for j, r in enumerate(self.resources)}

    @cached_property
    def rates(self) -> np.ndarray:
        return np.array([t.rate for t in self.types])

    @cached_property
    def admissible_mask(self) -> np.ndarray:
        mask = np.zeros((len(self.types), self.m), dtype=bool)
        for i, t in enumerate(self.types):
            mask[i, [self.index[r] for r in t.admissible]] = True
        mask.setflags(write=False)
        return mask

    @property
    def total_rate(self) -> float:
        return float(self.rates.sum())

    @property
    def is_symmetric(self) -> bool:
        return len(self.types) == 1 and bool(self.admissible_mask.all())

    def latencies(self, loads):
        return _columns(self.resources, loads, lambda f, x: f(x))

    def g_values(self, loads):
        return _columns(self.resources, loads, lat.g_log)

    def to_dict(self) -> dict:
        return {
            "mode": "nonAtomic",
            "resources": [{"id": r.id, "latency": r.latency.to_dict()} for r in self.resources],
            "types": [{"rate": t.rate, "admissible": list(t.admissible)} for t in self.types],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NonAtomicGame":
        try:
            resources = tuple(Resource(str(r["id"]), lat.from_dict(r["latency"])) for r in d["resources"])
            types = tuple(PlayerType(t["rate"], tuple(map(str, t["admissible"]))) for t in d["types"])
        except (KeyError, TypeError) as exc:
            raise InvalidGameError(f"malformed non-atomic game: {exc!r}") from exc
        return cls(types, resources)


@dataclass(frozen=True)
class FlowProfile:
    """``amounts[i, j]``: mass of type ``i`` on resource ``j`` (resource order of the game)."""

    amounts: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.amounts, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "amounts", a)

    @property
    def loads(self) -> np.ndarray:
        return self.amounts.sum(axis=0)


def check_flow(game: NonAtomicGame, flow: FlowProfile, rtol: float = 1e-9) -> FlowProfile:
    a = flow.amounts
    if a.shape != (len(game.types), game.m):
        raise InvalidProfileError(f"flow has shape {a.shape}, expected {(len(game.types), game.m)}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise InvalidProfileError("flow amounts must be finite and non-negative")
    if np.any(a[~game.admissible_mask] != 0):
        raise InvalidProfileError("flow on an inadmissible resource")
    sums = a.sum(axis=1)
    if not np.allclose(sums, game.rates, rtol=rtol, atol=rtol * max(1.0, game.total_rate)):
        raise InvalidProfileError(f"flow sums {sums} do not match rates {game.rates}")
    return flow


def log_nsw_flow(game: NonAtomicGame, flow: FlowProfile) -> LogNsw:
    check_flow(game, flow)
    loads = flow.loads
    used = loads > 0
    if np.any(game.latencies(loads)[used] <= 0):
        raise DomainError("non-positive latency at a positive load")
    total = float(game.g_values(loads)[used].sum())
    W = float(loads.sum())
    return LogNsw(total / W if W > 0 else 0.0, W)


# -- JSON helpers ---------------------------------------------------------

def game_from_json(text_or_dict):
    d = json.loads(text_or_dict) if isinstance(text_or_dict, str) else text_or_dict
    if not isinstance(d, dict):
        raise ValidationError("game JSON must be an object")
    if d.get("mode") == "nonAtomic" or "types" in d:
        return NonAtomicGame.from_dict(d)
    return AtomicGame.from_dict(d)
