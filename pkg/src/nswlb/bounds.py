"""Tight bounds for polynomial latencies and numeric sups of the general formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import latency as lat

GRID_POINTS = 512
REFINE_ROUNDS = 3
GOLDEN = (math.sqrt(5) - 1) / 2


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log(safe), 0.0)


def f_weighted(k, h):
    """(k+1)^((1-h)/(k-h)) (h+1)^((k-1)/(k-h)); at most 2, with equality at k = 1."""
    k, h = np.asarray(k, dtype=float), np.asarray(h, dtype=float)
    val = np.exp((1 - h) / (k - h) * np.log1p(k) + (k - 1) / (k - h) * np.log1p(h))
    return val if val.ndim else float(val)


def f_greedy(k, h):
    """((k+1)^(k+1)/k^k)^((1-h)/(k-h)) ((h+1)^(h+1)/h^h)^((k-1)/(k-h)), with 0^0 = 1."""
    k, h = np.asarray(k, dtype=float), np.asarray(h, dtype=float)
    a = _xlogx(k + 1) - _xlogx(k)
    b = _xlogx(h + 1) - _xlogx(h)
    val = np.exp((1 - h) / (k - h) * a + (k - 1) / (k - h) * b)
    return val if val.ndim else float(val)


def poly_bounds(p: float) -> dict:
    return {
        "weightedNpoa": 2.0**p,
        "unweightedNpoa": 2.0**p,
        "nonatomicNpoa": math.exp(p / math.e),
        "greedyCr": 4.0**p,
    }


@dataclass
class SupResult:
    value: float
    argmax: tuple
    trajectory: list = field(default_factory=list)  # incumbent value after the grid and each refinement round


def _family(fs) -> list:
    if isinstance(fs, lat.LatencyFunction):
        return [fs]
    return list(fs)


def _log(f, x):
    return np.asarray(f.log(np.asarray(x, dtype=float)), dtype=float)


def sup_unweighted(family, k_max: int = 50) -> SupResult:
    """max of (f(k+1)/f(o))^(o/k) over integers 1 <= o <= k <= k_max."""
    k = np.arange(1, k_max + 1, dtype=float)
    K, O = np.meshgrid(k, k, indexing="ij")
    valid = O <= K
    best = SupResult(-math.inf, ())
    for idx, f in enumerate(_family(family)):
        vals = np.where(valid, O / K * (_log(f, K + 1) - _log(f, O)), -np.inf)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        kk, oo = float(K[i, j]), float(O[i, j])
        # report the ratio itself rather than exp(log) to keep integer cases exact
        v = (float(f(kk + 1)) / float(f(oo))) ** (oo / kk)
        if v > best.value:
            best = SupResult(v, (idx, int(kk), int(oo)), [v])
    return best


def _golden(fun, lo, hi, iters=80):
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc > fd else (d, fd)


def _grid_refine(fun, xs: np.ndarray, ys: np.ndarray, rounds: int = REFINE_ROUNDS):
    """Maximise ``fun(x, y)`` (vectorised, log-valued) on a grid, then polish.

    Each refinement round runs a golden-section search along each axis over
    the grid cells adjacent to the incumbent, keeping a move only if it
    improves.
    """
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = fun(X, Y)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x, y, v = float(xs[i]), float(ys[j]), float(vals[i, j])
    trajectory = [v]
    for _ in range(rounds):
        for axis in (0, 1):
            grid, pos = (xs, i) if axis == 0 else (ys, j)
            lo, hi = grid[max(pos - 1, 0)], grid[min(pos + 1, len(grid) - 1)]
            if hi <= lo:
                continue
            if axis == 0:
                t, fv = _golden(lambda t: float(fun(np.array(t), np.array(y))), lo, hi)
                if fv > v:
                    x, v = t, fv
            else:
                t, fv = _golden(lambda t: float(fun(np.array(x), np.array(t))), lo, hi)
                if fv > v:
                    y, v = t, fv
        trajectory.append(v)
    return x, y, v, trajectory


def sup_nonatomic(family, o_range=(1e-3, 1e3), t_max: float = 1e3, points: int = GRID_POINTS) -> SupResult:
    """sup of (f(k)/f(o))^(o/k) over k >= o > 0, with k = t*o and t >= 1."""
    os_ = np.logspace(math.log10(o_range[0]), math.log10(o_range[1]), points)
    ts = np.logspace(0, math.log10(t_max), points)
    best = SupResult(-math.inf, ())
    for idx, f in enumerate(_family(family)):
        def fun(o, t, f=f):
            return (_log(f, t * o) - _log(f, o)) / t

        o, t, v, traj = _grid_refine(fun, os_, ts)
        if math.exp(v) > best.value:
            best = SupResult(math.exp(v), (idx, float(t * o), float(o)), [math.exp(u) for u in traj])
    return best


def _general_sup(family_f, family_g, term_f, term_g, k_max, points):
    ks = np.logspace(0, math.log10(k_max), points)
    hs = np.linspace(0.0, 1.0, points, endpoint=False)
    best = SupResult(-math.inf, ())
    for a, f in enumerate(_family(family_f)):
        for b, g in enumerate(_family(family_g)):
            def fun(k, h, f=f, g=g):
                k = np.maximum(k, 1.0)
                h = np.clip(h, 0.0, 1.0 - 1e-12)
                return (1 - h) / (k - h) * term_f(f, k) + (k - 1) / (k - h) * term_g(g, h)

            k, h, v, traj = _grid_refine(fun, ks, hs)
            if math.exp(v) > best.value:
                best = SupResult(math.exp(v), (a, b, float(k), float(h)), [math.exp(u) for u in traj])
    return best


def _g_term(g, h):
    # h ln g(h) with the 0 * ln g(0) = 0 convention
    h = np.asarray(h, dtype=float)
    safe = np.where(h > 0, h, 1.0)
    return np.where(h > 0, h * _log(g, safe), 0.0)


def sup_weighted_general(family_f, family_g=None, k_max: float = 1e3, points: int = GRID_POINTS) -> SupResult:
    """sup over f, g, k >= 1, 0 <= h < 1 of
    (f(k+1)/f(1))^((1-h)/(k-h)) (g(h+1)/g(1))^((k-1)/(k-h))."""
    family_g = family_f if family_g is None else family_g
    return _general_sup(
        family_f, family_g,
        lambda f, k: _log(f, k + 1) - _log(f, 1.0),
        lambda g, h: _log(g, h + 1) - _log(g, 1.0),
        k_max, points)


def sup_greedy_general(family_f, family_g=None, k_max: float = 1e3, points: int = GRID_POINTS) -> SupResult:
    """Same sup for the greedy ratio, with f(k+1)^(k+1)/(f(k)^k f(1)) and g(h+1)^(h+1)/(g(h)^h g(1))."""
    family_g = family_f if family_g is None else family_g
    return _general_sup(
        family_f, family_g,
        lambda f, k: (k + 1) * _log(f, k + 1) - k * _log(f, k) - _log(f, 1.0),
        lambda g, h: (h + 1) * _log(g, h + 1) - _g_term(g, h) - _log(g, 1.0),
        k_max, points)


def monomial_family(ps: Sequence[int]) -> list:
    return [lat.monomial(p) for p in ps]
