"""Best responses, best-response dynamics and pure Nash equilibria."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceTooLargeError, NswError, ValidationError
from .game import (LOAD_BALANCING, AtomicGame, batch_loads, batch_log_nsw_numerator, check_profile,
                   iter_profile_chunks, load_vector)

PROFILE_CAP = 2_000_000
REL_TOL = 1e-9

SCHEDULES = ("roundRobin", "maxWeightFirst", "seededRandom")


def _strategy_costs(game: AtomicGame, loads: np.ndarray, profile, i: int) -> np.ndarray:
    """Cost player ``i`` would pay under each of her strategies, others fixed."""
    w = game.weights[i]
    masks = game.strategy_masks[i]
    others = loads - w * masks[profile[i]]
    trial = others[None, :] + w * masks
    return (masks * game.latencies(trial)).sum(axis=1)


def _improves(new, old, tol):
    return new < old - tol * abs(old)


def best_response(game: AtomicGame, profile, i: int, tol: float = REL_TOL) -> int:
    """Index of a cheapest strategy for player ``i``; lowest index among near-ties."""
    profile = check_profile(game, profile)
    costs = _strategy_costs(game, load_vector(game, profile), profile, i)
    best = costs.min()
    return int(np.flatnonzero(costs <= best + tol * abs(best))[0])


def is_pne(game: AtomicGame, profile, tol: float = REL_TOL) -> bool:
    """True iff no player can lower her cost by more than ``tol`` (relative)."""
    profile = check_profile(game, profile)
    loads = load_vector(game, profile)
    for i in range(game.n):
        costs = _strategy_costs(game, loads, profile, i)
        if np.any(_improves(costs, costs[profile[i]], tol)):
            return False
    return True


def improving_players(game: AtomicGame, profile, tol: float = REL_TOL) -> list:
    """Players with a strictly improving deviation (diagnostics for failed checks)."""
    profile = check_profile(game, profile)
    loads = load_vector(game, profile)
    out = []
    for i in range(game.n):
        costs = _strategy_costs(game, loads, profile, i)
        if np.any(_improves(costs, costs[profile[i]], tol)):
            out.append(i)
    return out


@dataclass
class DynamicsResult:
    """Outcome of best-response dynamics.

    ``converged`` is False when ``max_sweeps`` sweeps all contained a move;
    ``profile`` is then the last profile reached, not an equilibrium.
    """

    profile: tuple
    converged: bool
    sweeps: int
    trace: list = field(default_factory=list)  # (sweep, player, from, to, cost_before, cost_after)


def best_response_dynamics(game: AtomicGame, start, schedule: str = "maxWeightFirst",
                           max_sweeps: int = 1000, seed: int | None = None,
                           tol: float = REL_TOL) -> DynamicsResult:
    if game.mode != LOAD_BALANCING:
        raise ValidationError("best-response dynamics is only supported for load balancing games")
    if schedule not in SCHEDULES:
        raise ValidationError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    profile = list(check_profile(game, start))
    loads = load_vector(game, profile)
    rng = np.random.default_rng(seed)
    if schedule == "maxWeightFirst":
        fixed_order = sorted(range(game.n), key=lambda i: (-game.weights[i], i))
    else:
        fixed_order = list(range(game.n))
    trace = []
    for sweep in range(1, max_sweeps + 1):
        order = rng.permutation(game.n) if schedule == "seededRandom" else fixed_order
        moved = False
        for i in order:
            i = int(i)
            costs = _strategy_costs(game, loads, profile, i)
            cur = profile[i]
            best = costs.min()
            if not _improves(best, costs[cur], tol):
                continue
            new = int(np.flatnonzero(costs <= best + tol * abs(best))[0])
            masks = game.strategy_masks[i]
            loads = loads + game.weights[i] * (masks[new].astype(float) - masks[cur])
            profile[i] = new
            trace.append((sweep, i, cur, new, float(costs[cur]), float(costs[new])))
            moved = True
        if not moved:
            return DynamicsResult(tuple(profile), True, sweep, trace)
    return DynamicsResult(tuple(profile), False, max_sweeps, trace)


# -- exhaustive enumeration ------------------------------------------------

def _check_cap(game: AtomicGame, cap: int):
    total = game.num_profiles()
    if total > cap:
        raise InstanceTooLargeError(f"{total} profiles exceed the cap of {cap}")


def pne_mask(game: AtomicGame, profiles: np.ndarray, loads=None, tol: float = REL_TOL) -> np.ndarray:
    """Boolean mask over rows of ``profiles`` marking pure Nash equilibria."""
    profiles = np.asarray(profiles)
    if loads is None:
        loads = batch_loads(game, profiles)
    lats = game.latencies(loads)
    ok = np.ones(len(profiles), dtype=bool)
    for i, (w, masks) in enumerate(zip(game.weights, game.strategy_masks)):
        cur_mask = masks[profiles[:, i]]
        cur = (cur_mask * lats).sum(axis=1)
        for s in range(masks.shape[0]):
            dev = np.zeros(len(profiles))
            for j in np.flatnonzero(masks[s]):
                x = loads[:, j] + w * (~cur_mask[:, j])
                dev += game.resources[j].latency(x)
            ok &= ~_improves(dev, cur, tol)
    return ok


def enumerate_pne(game: AtomicGame, cap: int = PROFILE_CAP, tol: float = REL_TOL) -> list:
    """All pure Nash equilibria, in lexicographic order."""
    _check_cap(game, cap)
    out = []
    for _, block in iter_profile_chunks(game):
        mask = pne_mask(game, block, tol=tol)
        out.extend(tuple(int(v) for v in row) for row in block[mask])
    return out


@dataclass
class NpoaReport:
    ratio: float
    worst_pne: tuple
    optimum: tuple
    num_pne: int
    log_worst: float
    log_opt: float


def npoa_report(game: AtomicGame, cap: int = PROFILE_CAP, tol: float = REL_TOL) -> NpoaReport:
    """One exhaustive pass computing the worst PNE and the optimum together."""
    _check_cap(game, cap)
    W = game.total_weight
    best_val, best_prof = math.inf, None
    worst_val, worst_prof, count = -math.inf, None, 0
    for _, block in iter_profile_chunks(game):
        loads = batch_loads(game, block)
        vals = batch_log_nsw_numerator(game, block, loads) / W
        k = int(np.argmin(vals))
        # strict improvement only, so the lexicographically first optimum survives
        if best_prof is None or vals[k] < best_val - tol * max(1.0, abs(best_val)):
            best_val, best_prof = float(vals[k]), tuple(int(v) for v in block[k])
        mask = pne_mask(game, block, loads, tol)
        count += int(mask.sum())
        if mask.any():
            idx = np.flatnonzero(mask)
            k = idx[int(np.argmax(vals[idx]))]
            if worst_prof is None or vals[k] > worst_val + tol * max(1.0, abs(worst_val)):
                worst_val, worst_prof = float(vals[k]), tuple(int(v) for v in block[k])
    if worst_prof is None:
        raise NswError("no pure Nash equilibrium found (anomaly for a load balancing game)")
    return NpoaReport(math.exp(worst_val - best_val), worst_prof, best_prof, count, worst_val, best_val)


def empirical_npoa(game: AtomicGame, cap: int = PROFILE_CAP) -> float:
    """Worst-PNE NSW over optimal NSW, by exhaustive search."""
    return npoa_report(game, cap).ratio
