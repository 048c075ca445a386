"""NSW-optimal profiles of atomic games.

Weighted games get exhaustive search (finding the optimum is NP-hard there).
Unweighted load balancing games reduce to a min-cost assignment of players to
priced (resource, slot) pairs, which is exact whenever the slot prices of each
resource are non-decreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibria import PROFILE_CAP, REL_TOL, _check_cap
from .errors import ConvexityError, ValidationError
from .game import (LOAD_BALANCING, AtomicGame, LogNsw, batch_log_nsw_numerator, iter_profile_chunks,
                   log_nsw)


@dataclass(frozen=True)
class OptResult:
    profile: tuple
    log_nsw: LogNsw
    method: str  # "brute", "matching" or "bruteFallback"


def brute_force_opt(game: AtomicGame, cap: int = PROFILE_CAP) -> OptResult:
    """Minimum-logNsw profile by exhaustive search; the lexicographically first wins ties."""
    _check_cap(game, cap)
    best_val, best = math.inf, None
    for _, block in iter_profile_chunks(game):
        vals = batch_log_nsw_numerator(game, block)
        k = int(np.argmin(vals))
        if best is None or vals[k] < best_val - REL_TOL * max(1.0, abs(best_val)):
            best_val, best = float(vals[k]), tuple(int(v) for v in block[k])
    return OptResult(best, log_nsw(game, best), "brute")


class SlotCostTable:
    """Marginal log-NSW-numerator prices ``delta[j, t-1] = g_j(t) - g_j(t-1)``.

    ``g_j(k) = k ln l_j(k)``.  With ``check=True`` the prices of every resource
    must be non-decreasing in ``t``; otherwise ``ConvexityError`` names the
    first offending resource and slot.
    """

    def __init__(self, game: AtomicGame, slots: int | None = None, check: bool = True, tol: float = 1e-12):
        self.game = game
        self.slots = game.n if slots is None else slots
        t = np.arange(0, self.slots + 1, dtype=float)
        g = game.g_values(np.repeat(t[:, None], game.m, axis=1))  # (slots+1, m)
        self.delta = np.diff(g, axis=0).T  # (m, slots)
        if check:
            self.check(tol)

    def check(self, tol=1e-12):
        d = self.delta
        drops = d[:, 1:] < d[:, :-1] - tol * np.maximum(1.0, np.abs(d[:, :-1]))
        if drops.any():
            j, t = map(int, np.argwhere(drops)[0])
            rid = self.game.resources[j].id
            raise ConvexityError(
                f"slot prices of resource {rid} decrease from slot {t + 1} to {t + 2}: "
                f"{d[j, t]:.6g} > {d[j, t + 1]:.6g}", resource=rid, slot=t + 2)


def min_cost_assignment(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Assign each row to a distinct column at minimum total cost.

    Successive shortest augmenting paths with vertex potentials (the
    Hungarian method); ``cost`` is rows x cols with rows <= cols, and
    ``inf`` marks forbidden pairs.  Returns the column of each row and the
    total cost.
    """
    n, m = cost.shape
    if n > m:
        raise ValidationError("more rows than columns")
    INF = math.inf
    # 1-based arrays with a virtual column 0, as in the classic formulation
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)  # owner[col] = row (1-based), 0 = free
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            if not math.isfinite(delta):
                raise ValidationError(f"row {i0 - 1} cannot be assigned")
            u[owner[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    cols = np.empty(n, dtype=int)
    for j in range(1, m + 1):
        if owner[j]:
            cols[owner[j] - 1] = j - 1
    total = float(cost[np.arange(n), cols].sum())
    return cols, total


def unweighted_opt_matching(game: AtomicGame) -> OptResult:
    """Exact optimum of an unweighted load balancing game via slot matching.

    Falls back to exhaustive search (``method="bruteFallback"``) when some
    latency does not carry the quasi-log-convex flag.
    """
    if game.mode != LOAD_BALANCING:
        raise ValidationError("slot matching needs a load balancing game")
    if not game.is_unweighted:
        raise ValidationError("slot matching needs unit weights")
    if not all(r.latency.quasi_log_convex for r in game.resources):
        res = brute_force_opt(game)
        return OptResult(res.profile, res.log_nsw, "bruteFallback")
    profile, _ = _match(game)
    return OptResult(profile, log_nsw(game, profile), "matching")


def _match(game: AtomicGame):
    n = game.n
    table = SlotCostTable(game)
    # column (j, t) for t < n; resource j's slot t+1 costs delta[j, t]
    cost = np.full((n, game.m * n), math.inf)
    for i, res in enumerate(game.singleton_resources):
        for j in res:
            cost[i, j * n:(j + 1) * n] = table.delta[j]
    cols, total = min_cost_assignment(cost)
    chosen = cols // n
    profile = []
    for i, res in enumerate(game.singleton_resources):
        profile.append(int(np.flatnonzero(res == chosen[i])[0]))
    return tuple(profile), total


def matching_total_cost(game: AtomicGame) -> tuple[tuple, float]:
    """Profile from the matching together with the raw matching cost (for consistency checks)."""
    return _match(game)


def optimum(game: AtomicGame, method: str = "auto", cap: int = PROFILE_CAP) -> OptResult:
    """Dispatch: ``matching`` for unweighted load balancing, else exhaustive search."""
    if method == "brute":
        return brute_force_opt(game, cap)
    if method == "matching":
        return unweighted_opt_matching(game)
    if method != "auto":
        raise ValidationError(f"unknown method {method!r}")
    if game.mode == LOAD_BALANCING and game.is_unweighted:
        return unweighted_opt_matching(game)
    return brute_force_opt(game, cap)
