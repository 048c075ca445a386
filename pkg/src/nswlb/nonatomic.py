"""Wardrop equilibria and NSW ratios for non-atomic load balancing games."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, ValidationError
from .game import FlowProfile, NonAtomicGame, check_flow, log_nsw_flow

EPS = 1e-6
BISECTION_STEPS = 200


def resource_costs(game: NonAtomicGame, loads) -> np.ndarray:
    # empty resources are priced at their value at 0, comparison only
    return game.latencies(np.asarray(loads, dtype=float))


def wardrop_gap(game: NonAtomicGame, flow: FlowProfile, eps: float = EPS) -> float:
    """Largest excess of a used resource's cost over the cheapest admissible one.

    A resource counts as used by type ``i`` when it carries more than
    ``eps * r_i`` of that type's mass.
    """
    a = flow.amounts
    c = resource_costs(game, flow.loads)
    gap = 0.0
    for i, t in enumerate(game.types):
        adm = game.admissible_mask[i]
        used = a[i] > eps * t.rate
        if used.any():
            gap = max(gap, float(c[used].max() - c[adm].min()))
    return gap


def wardrop_check(game: NonAtomicGame, flow: FlowProfile, eps: float = EPS) -> bool:
    check_flow(game, flow)
    return wardrop_gap(game, flow, eps) <= eps


def _pseudo_inverse(game: NonAtomicGame, lam: float, cap: float) -> np.ndarray:
    """Per resource, the largest ``x`` in ``[0, cap]`` with ``l_j(x) <= lam``."""
    m = game.m
    if game.latencies(np.full(m, cap)).max() <= lam:
        return np.full(m, cap)
    lo, hi = np.zeros(m), np.full(m, cap)
    at_cap = game.latencies(hi) <= lam
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = game.latencies(mid) <= lam
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
        if np.all(hi - lo <= 1e-15 * cap):
            break
    return np.where(at_cap, cap, lo)


def symmetric_waterfill(game: NonAtomicGame, total_rate: float | None = None) -> FlowProfile:
    """Equal-cost split of a single type that may use every resource.

    Bisects a common cost level ``lam``; each resource gets the most mass it
    can take without its cost exceeding ``lam``.  Jumps in the mass-vs-level
    curve (flat latencies) are closed by interpolating the two bracketing
    allocations.
    """
    if not game.is_symmetric:
        raise ValidationError("water-filling needs one type that may use every resource")
    r = game.total_rate if total_rate is None else float(total_rate)
    if r == 0:
        return FlowProfile(np.zeros((1, game.m)))
    lo, hi = 0.0, float(game.latencies(np.full(game.m, r)).max())
    x_lo, x_hi = np.zeros(game.m), _pseudo_inverse(game, hi, r)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        x = _pseudo_inverse(game, mid, r)
        if x.sum() >= r:
            hi, x_hi = mid, x
        else:
            lo, x_lo = mid, x
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    else:
        raise ConvergenceError("water-filling bisection did not converge", gap=hi - lo)
    s_lo, s_hi = x_lo.sum(), x_hi.sum()
    theta = 1.0 if s_hi == s_lo else (r - s_lo) / (s_hi - s_lo)
    x = x_lo + theta * (x_hi - x_lo)
    x *= r / x.sum()
    if abs(x.sum() - r) > 1e-9 * r:
        raise ConvergenceError("water-filling mass mismatch", gap=abs(x.sum() - r))
    return FlowProfile(x[None, :])


def _all_or_nothing(game: NonAtomicGame, costs) -> np.ndarray:
    y = np.zeros((len(game.types), game.m))
    for i, t in enumerate(game.types):
        adm = np.flatnonzero(game.admissible_mask[i])
        y[i, adm[int(np.argmin(costs[adm]))]] = t.rate
    return y


def _line_search(fa, fb, ka, kb, amount):
    """Largest useful shift ``d`` in [0, amount] from resource a (load ka) to b (load kb).

    The potential's derivative along the move, ``l_b(kb + d) - l_a(ka - d)``,
    is non-decreasing, so its root is bracketed by bisection.
    """
    def slope(d):
        return float(fb(kb + d) - fa(ka - d))

    if slope(amount) <= 0:
        return amount
    lo, hi = 0.0, amount
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if slope(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, amount):
            break
    return lo


def potential_minimize(game: NonAtomicGame, max_iters: int = 100_000, eps: float = EPS,
                       step: str = "pairwise") -> FlowProfile:
    """Wardrop flow by conditional-gradient descent on the Beckmann potential.

    ``step="pairwise"`` moves mass of one type from its costliest used
    resource to its cheapest admissible one with an exact line search.
    ``step="diminishing"`` is the textbook all-or-nothing update with step
    size ``2 / (t + 2)``; it converges, but slowly.
    """
    if step not in ("pairwise", "diminishing"):
        raise ValidationError(f"unknown step rule {step!r}")
    x = _all_or_nothing(game, resource_costs(game, np.zeros(game.m)))
    lats = [r.latency for r in game.resources]
    gap = math.inf
    for t in range(max_iters):
        flow = FlowProfile(x)
        gap = wardrop_gap(game, flow, eps)
        if gap <= eps:
            return flow
        loads = x.sum(axis=0)
        if step == "diminishing":
            y = _all_or_nothing(game, resource_costs(game, loads))
            x = x + 2.0 / (t + 2.0) * (y - x)
            continue
        c = resource_costs(game, loads)
        for i in range(len(game.types)):
            held = np.flatnonzero(x[i] > 0)
            if held.size == 0:
                continue
            adm = np.flatnonzero(game.admissible_mask[i])
            a = held[int(np.argmax(c[held]))]
            b = adm[int(np.argmin(c[adm]))]
            if c[a] <= c[b]:
                continue
            d = _line_search(lats[a], lats[b], loads[a], loads[b], x[i, a])
            x[i, a] -= d
            x[i, b] += d
            loads[a] -= d
            loads[b] += d
            c[a] = lats[a](loads[a])
            c[b] = lats[b](loads[b])
    raise ConvergenceError(f"no Wardrop flow within {max_iters} iterations", state=FlowProfile(x), gap=gap)


def equilibrium(game: NonAtomicGame, eps: float = EPS) -> FlowProfile:
    if game.is_symmetric:
        return symmetric_waterfill(game)
    return potential_minimize(game, eps=eps)


# -- optimum (desk scale) -------------------------------------------------

def _simplex_grid(m: int, steps: int) -> np.ndarray:
    if m == 1:
        return np.ones((1, 1))
    pts = [c for c in itertools.product(range(steps + 1), repeat=m - 1) if sum(c) <= steps]
    pts = np.array(pts, dtype=float).reshape(-1, m - 1)
    return np.hstack([pts, steps - pts.sum(axis=1, keepdims=True)]) / steps


def optimal_flow(game: NonAtomicGame, grid: int | None = None, max_resources: int = 3) -> FlowProfile:
    """Minimum-NSW flow by grid search followed by SLSQP refinement.

    Only meant for a handful of resources: the objective is not convex in
    general, so the grid supplies the starting point and the refinement
    polishes it.
    """
    if game.m > max_resources:
        raise ValidationError(f"optimal flow search supports at most {max_resources} resources")
    T, m = len(game.types), game.m
    rates = game.rates
    adm = game.admissible_mask
    if grid is None:
        grid = {1: 1, 2: 400, 3: 80}[m] if T == 1 else 20

    def objective(z):
        loads = z.reshape(T, m).sum(axis=0)
        return float(game.g_values(np.maximum(loads, 0.0)).sum())

    # grid over each type's simplex, restricted to admissible resources
    per_type = []
    for i in range(T):
        cols = np.flatnonzero(adm[i])
        pts = _simplex_grid(len(cols), grid) * rates[i]
        full = np.zeros((len(pts), m))
        full[:, cols] = pts
        per_type.append(full)
    if math.prod(len(p) for p in per_type) > 2_000_000:
        raise ValidationError("optimal flow grid too large; lower the resolution")
    best_val, best = math.inf, None
    for combo in itertools.product(*[range(len(p)) for p in per_type]):
        z = np.stack([per_type[i][c] for i, c in enumerate(combo)])
        v = objective(z.ravel())
        if v < best_val:
            best_val, best = v, z
    bounds = [(0.0, rates[i] if adm[i, j] else 0.0) for i in range(T) for j in range(m)]
    cons = [{"type": "eq", "fun": (lambda z, i=i: z.reshape(T, m)[i].sum() - rates[i])} for i in range(T)]
    res = minimize(objective, best.ravel(), method="SLSQP", bounds=bounds, constraints=cons,
                   options={"ftol": 1e-15, "maxiter": 500})
    z = best
    if res.success:
        cand = np.clip(res.x.reshape(T, m), 0.0, None)
        cand[~adm] = 0.0
        sums = cand.sum(axis=1, keepdims=True)
        cand = np.where(sums > 0, cand * (rates[:, None] / np.where(sums > 0, sums, 1.0)), cand)
        if objective(cand.ravel()) <= best_val:
            z = cand
    return FlowProfile(z)


def nonatomic_ratio(game: NonAtomicGame, eq: FlowProfile, opt: FlowProfile) -> float:
    return math.exp(log_nsw_flow(game, eq).value - log_nsw_flow(game, opt).value)
