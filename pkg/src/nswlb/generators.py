"""Worst-case instance families with their designated profiles and predicted ratios.

Each generator returns a :class:`GeneratedInstance`: the game, a designated
equilibrium (or greedy outcome), a designated cheap profile, and the closed
form of the NSW ratio between the two at the given finite parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import latency as lat
from .equilibria import is_pne
from .errors import InstanceTooLargeError, ValidationError
from .game import (CONGESTION, LOAD_BALANCING, AtomicGame, FlowProfile, NonAtomicGame, Player, PlayerType,
                   Resource, log_nsw, log_nsw_flow)
from .nonatomic import wardrop_check
from .online import OnlineInstance

MAX_PLAYERS = 10**6
MAX_UNIVERSAL_DEPTH = 16


@dataclass
class GeneratedInstance:
    family: str
    params: dict
    game: object  # AtomicGame or NonAtomicGame
    equilibrium: object  # Profile or FlowProfile (the greedy outcome for online families)
    opt_candidate: object
    predicted_ratio: float
    arrival_order: tuple | None = None
    notes: dict = field(default_factory=dict)

    @property
    def online(self) -> OnlineInstance:
        if self.arrival_order is None:
            raise ValidationError(f"{self.family} is not an online family")
        return OnlineInstance(self.game, self.arrival_order)

    def log_values(self):
        if isinstance(self.game, NonAtomicGame):
            return (log_nsw_flow(self.game, self.equilibrium).value,
                    log_nsw_flow(self.game, self.opt_candidate).value)
        return log_nsw(self.game, self.equilibrium).value, log_nsw(self.game, self.opt_candidate).value

    def measured_ratio(self) -> float:
        eq, opt = self.log_values()
        return math.exp(eq - opt)

    def metadata(self) -> dict:
        def enc(p):
            return p.amounts.tolist() if isinstance(p, FlowProfile) else list(p)

        meta = {
            "family": self.family,
            "params": self.params,
            "predictedRatio": self.predicted_ratio,
            "designatedEquilibrium": enc(self.equilibrium),
            "designatedOptCandidate": enc(self.opt_candidate),
        }
        if self.arrival_order is not None:
            meta["arrivalOrder"] = list(self.arrival_order)
        if self.notes:
            meta["notes"] = self.notes
        return meta

    def to_dict(self) -> dict:
        d = self.game.to_dict()
        if self.arrival_order is not None:
            d["arrivalOrder"] = list(self.arrival_order)
        d["metadata"] = self.metadata()
        return d


def check_pne(inst: GeneratedInstance, tol: float = 1e-9) -> bool:
    """Does the designated equilibrium pass the equilibrium test of its game?"""
    if isinstance(inst.game, NonAtomicGame):
        return wardrop_check(inst.game, inst.equilibrium)
    return is_pne(inst.game, inst.equilibrium, tol)


def _v(f, x) -> float:
    return float(f(x))


def _pw(base: float, e: float) -> float:
    # 0**0 == 1, matching the f(0)^0 := 1 convention
    return 1.0 if e == 0 else base ** e


def _identity():
    return lat.monomial(1)


def _spec(f) -> str:
    try:
        return f.to_spec()
    except ValidationError:
        return repr(f.to_dict())


def _chain_exponents(m, k, h):
    A = sum(k**j for j in range(1, m - 1))
    B = sum(_pw(h, j + 1 - m) * k ** (m - 1) for j in range(m - 1, 2 * m - 1))
    tail = _pw(h, m) * k ** (m - 1)
    return A, B, tail


# -- weighted load balancing ----------------------------------------------

def weighted_lb(m: int, s: int = 1, k: float = 1.0, h: float = 0.0, f=None, g=None,
                variant: str = "restricted") -> GeneratedInstance:
    """Weighted chain family LB(m, s) with groups of resources R_1, R_2, ...

    ``variant="restricted"`` lets group N_j use only R_j and R_{j+1};
    ``"symmetric"`` lets everyone use every resource (then ``s`` must be large
    enough for the designated profile to be an equilibrium; see
    :func:`check_pne`).  ``h = 0`` keeps only R_1..R_m and N_1..N_{m-1}.
    """
    f = f or _identity()
    g = g or _identity()
    if m < 3 or s < 1 or k < 1 or not 0 <= h < 1:
        raise ValidationError("need m >= 3, s >= 1, k >= 1 and 0 <= h < 1")
    if variant not in ("restricted", "symmetric"):
        raise ValidationError(f"unknown variant {variant!r}")
    groups = 2 * m if h > 0 else m
    players_total = sum(s**j for j in range(1, groups))
    if players_total > MAX_PLAYERS:
        raise InstanceTooLargeError(f"{players_total} players exceed {MAX_PLAYERS}")
    fk, fk1, gh1, g1 = _v(f, k), _v(f, k + 1), _v(g, h + 1), _v(g, 1)
    gh = _v(g, h)

    def beta(j):
        if j <= m - 1:
            return (s / k) ** (j - 1)
        return (1.0 if j == m else (s / h) ** (j - m)) * (s / k) ** (m - 1)

    def alpha(j):
        if j <= m - 1:
            return (fk / fk1) ** (j - 1)
        base = (fk / gh1) * (fk / fk1) ** (m - 2)
        if j <= 2 * m - 1:
            return _pw(gh / gh1, j - m) * base
        return (gh / g1) * (gh / gh1) ** (m - 1) * base

    resources, group_ids = [], []
    for j in range(1, groups + 1):
        fhat = f if j <= m - 1 else g
        ell = lat.scaled(fhat, alpha(j), beta(j))
        ids = [f"R{j}_{t}" for t in range(s ** (j - 1))]
        resources.extend(Resource(rid, ell) for rid in ids)
        group_ids.append(ids)

    all_ids = tuple((r.id,) for r in resources)
    players, sigma, sigma_star = [], [], []
    for j in range(1, groups):
        w = 1.0 / beta(j + 1)
        if variant == "restricted":
            strategies = tuple((rid,) for rid in group_ids[j - 1] + group_ids[j])
            own = {rid: t for t, rid in enumerate(group_ids[j - 1] + group_ids[j])}
        else:
            strategies = all_ids
            own = {rid: t for t, (rid,) in enumerate(all_ids)}
        for q in range(s**j):
            players.append(Player(w, strategies))
            sigma.append(own[group_ids[j - 1][q // s]])
            sigma_star.append(own[group_ids[j][q]])
    game = AtomicGame(tuple(players), tuple(resources), LOAD_BALANCING)

    A, B, tail = _chain_exponents(m, k, h)
    log_pred = (A * math.log(fk1 / _v(f, 1)) + B * math.log(gh1 / g1)) / (A + B + tail)
    params = {"m": m, "s": s, "k": k, "h": h, "f": _spec(f), "g": _spec(g), "variant": variant}
    return GeneratedInstance("weightedLB", params, game, tuple(sigma), tuple(sigma_star), math.exp(log_pred))


def identical_resources_lb(m: int, p: int = 1) -> GeneratedInstance:
    """The weighted chain at s=2, k=1, h=0 with f = g = x^p.

    Groups R_1..R_{m-1} all end up with latency x^p; the last group carries
    an extra factor 2^p (see ``notes``).
    """
    f = lat.monomial(p)
    inst = weighted_lb(m, s=2, k=1, h=0, f=f, g=f, variant="restricted")
    inst.family = "identicalResourcesLB"
    inst.params = {"m": m, "p": p}
    inst.notes = {"lastGroupFactor": 2.0**p}
    return inst


# -- unweighted load balancing --------------------------------------------

def unweighted_lb(m: int, k: int = 1, o: int = 1, f=None) -> GeneratedInstance:
    f = f or _identity()
    if m < 1 or k < 1 or not 1 <= o <= k or int(k) != k or int(o) != o:
        raise ValidationError("need m >= 1, integer k >= 1 and integer o in [1, k]")
    k, o = int(k), int(o)
    if m * k > MAX_PLAYERS:
        raise InstanceTooLargeError(f"{m * k} players exceed {MAX_PLAYERS}")
    fk, fk1, f1 = _v(f, k), _v(f, k + 1), _v(f, 1)

    def alpha(j, h):
        base = (fk / fk1) ** (j - 1)
        return base if h == 0 else (fk / f1) * base

    resources, ids = [], {}
    for j in range(1, m + 1):
        top = k if j == m else k - o
        for h in range(top + 1):
            rid = f"r{j}_{h}"
            ids[j, h] = rid
            resources.append(Resource(rid, lat.scaled(f, alpha(j, h), 1.0)))

    players, sigma, sigma_star = [], [], []
    for j in range(1, m + 1):
        top = k if j == m else k - o
        strat = [ids[j, h] for h in range(top + 1)]
        if j < m:
            strat.append(ids[j + 1, 0])
        pos = {rid: t for t, rid in enumerate(strat)}
        for q in range(k):
            players.append(Player(1.0, tuple((rid,) for rid in strat)))
            sigma.append(pos[ids[j, 0]])
            if j == m:
                sigma_star.append(pos[ids[j, q + 1]])
            elif q < o:
                sigma_star.append(pos[ids[j + 1, 0]])
            else:
                sigma_star.append(pos[ids[j, q - o + 1]])
    game = AtomicGame(tuple(players), tuple(resources), LOAD_BALANCING)
    log_pred = o * (m - 1) / (k * m) * math.log(fk1 / _v(f, o))
    params = {"m": m, "k": k, "o": o, "f": _spec(f)}
    return GeneratedInstance("unweightedLB", params, game, tuple(sigma), tuple(sigma_star), math.exp(log_pred))


# -- non-atomic -----------------------------------------------------------

def nonatomic(k: float = math.e, o: float = 1.0, f=None) -> GeneratedInstance:
    """One type of rate ``k`` choosing between ``f`` and the constant ``f(k)``."""
    f = f or _identity()
    if not k >= o > 0:
        raise ValidationError("need k >= o > 0")
    fk = _v(f, k)
    res = (Resource("r1", f), Resource("r2", lat.Constant(fk)))
    game = NonAtomicGame((PlayerType(k, ("r1", "r2")),), res)
    eq = FlowProfile(np.array([[k, 0.0]]))
    opt = FlowProfile(np.array([[o, k - o]]))
    pred = math.exp(o / k * math.log(fk / _v(f, o)))
    return GeneratedInstance("nonAtomic", {"k": k, "o": o, "f": _spec(f)}, game, eq, opt, pred)


# -- online ---------------------------------------------------------------

def online_greedy_lb(m: int, k: float = 1.0, h: float = 0.0, f=None, g=None) -> GeneratedInstance:
    """Chain of resources r_1, r_2, ... where client j picks r_j or r_{j+1}.

    Clients arrive in decreasing j; with first-listed tie-breaking greedy
    puts every client j on r_j.
    """
    f = f or _identity()
    g = g or _identity()
    if m < 3 or k < 1 or not 0 <= h < 1:
        raise ValidationError("need m >= 3, k >= 1 and 0 <= h < 1")
    size = 2 * m if h > 0 else m
    fk, fk1, gh1, g1, gh = _v(f, k), _v(f, k + 1), _v(g, h + 1), _v(g, 1), _v(g, h)
    a_f = fk ** (k + 1) / fk1 ** (k + 1)
    a_g = _pw(gh, h + 1) / gh1 ** (h + 1)

    def beta(j):
        if j <= m - 1:
            return (1 / k) ** (j - 1)
        return (1.0 if j == m else (1 / h) ** (j - m)) * (1 / k) ** (m - 1)

    def alpha(j):
        if j <= m - 1:
            return a_f ** (j - 1)
        base = (fk * _pw(gh, h) / gh1 ** (h + 1)) * a_f ** (m - 2)
        if j <= 2 * m - 1:
            return _pw(a_g, j - m) * base
        return (gh / g1) * a_g ** (m - 1) * base

    resources = tuple(Resource(f"r{j}", lat.scaled(f if j <= m - 1 else g, alpha(j), beta(j)))
                      for j in range(1, size + 1))
    players = tuple(Player(1.0 / beta(j + 1), ((f"r{j}",), (f"r{j + 1}",))) for j in range(1, size))
    game = AtomicGame(players, resources, LOAD_BALANCING)
    n = len(players)
    order = tuple(range(n - 1, -1, -1))

    A, B, tail = _chain_exponents(m, k, h)
    lf = (k + 1) * math.log(fk1) - k * math.log(fk) - math.log(_v(f, 1))
    lg = (h + 1) * math.log(gh1) - (h * math.log(gh) if h > 0 else 0.0) - math.log(g1)
    pred = math.exp((A * lf + B * lg) / (A + B + tail))
    params = {"m": m, "k": k, "h": h, "f": _spec(f), "g": _spec(g)}
    return GeneratedInstance("onlineGreedyLB", params, game, (0,) * n, (1,) * n, pred, order)


def _universal_counts(m: int) -> dict:
    """Number of sub-instances of each exact type I(i) inside I(m), i < m, plus I(m) itself."""
    counts = {m: 1}
    for i in range(m - 1, -1, -1):
        counts[i] = 2 ** (m - i - 1)
    return counts


def universal_ratio(m: int, p: float = 1.0) -> float:
    """NSW ratio between 'all on first' and 'all on second' resources of I(m).

    Root of a type-i sub-instance carries 2^i - 1 in the first profile; in
    the second, the root of a type-i sub-instance with i < m carries 2^i.
    """
    if m == 0:
        return 1.0
    c = _universal_counts(m)
    W = sum(c[i] * (2**i - 1) for i in range(1, m + 1))
    first = sum(c[i] * (2**i - 1) * math.log(2**i - 1) for i in range(1, m + 1))
    second = sum(c[i] * 2**i * math.log(2**i) for i in range(0, m))
    return math.exp(p * (first - second) / W)


def universal_ratio_displayed(m: int, p: float = 1.0) -> float:
    """Same ratio using 2^{m-i-1} roots of type i for every i in [m], including i = m.

    That count is 1/2 for i = m, so the value differs from the ratio of the
    actual instance; kept for comparison.
    """
    if m == 0:
        return 1.0
    num = sum((2**i - 1) * math.log(2**i - 1) * 2.0 ** (m - i - 1) for i in range(1, m + 1))
    den = sum((i * 2**i - 2 * (2**i - 1)) * math.log(2) * 2.0 ** (m - i - 1) for i in range(1, m + 1))
    W = sum((2**i - 1) * 2.0 ** (m - i - 1) for i in range(1, m + 1))
    return math.exp(p * (num - den) / W)


def online_universal(m: int, p: float = 1.0) -> GeneratedInstance:
    """Recursive instance I(m) on identical x^p resources.

    I(m) holds one copy of I(i-1) for each i in [m], a root resource, and m
    clients; client i weighs 2^{i-1} and chooses between the root (listed
    first) and the root of the I(i-1) copy.  Clients of shallower copies
    arrive first, and inside a copy by increasing weight, so at each arrival
    both options carry the same load.
    """
    if not 0 <= m <= MAX_UNIVERSAL_DEPTH:
        raise InstanceTooLargeError(f"depth {m} outside [0, {MAX_UNIVERSAL_DEPTH}]")
    if p < 0 or not float(p).is_integer():
        raise ValidationError("p must be a non-negative integer")
    ell = lat.monomial(int(p))
    resources, clients = [], []  # clients: (level, copy id, weight, first, second)
    counter = [0]

    def build(level):
        copy_id = counter[0]
        counter[0] += 1
        subs = [build(i - 1) for i in range(1, level + 1)]
        root = f"u{len(resources)}"
        resources.append(Resource(root, ell))
        for i in range(1, level + 1):
            clients.append((level, copy_id, 2.0 ** (i - 1), root, subs[i - 1]))
        return root

    build(m)
    players = tuple(Player(w, ((a,), (b,))) for _, _, w, a, b in clients)
    game = AtomicGame(players, tuple(resources), LOAD_BALANCING)
    order = tuple(sorted(range(len(clients)), key=lambda c: clients[c][:3]))
    n = len(players)
    inst = GeneratedInstance("onlineUniversal", {"m": m, "p": int(p)}, game, (0,) * n, (1,) * n,
                             universal_ratio(m, p), order)
    inst.notes = {"displayedProductRatio": universal_ratio_displayed(m, p)}
    return inst


# -- linear congestion game -----------------------------------------------

def linear_cg(n: int, eps: float, literal_slopes: bool = False) -> GeneratedInstance:
    """Linear congestion game whose NSW price of anarchy grows like n^{1-eps}.

    With m = ceil(n eps): groups R_1, R_2 of n - m resources with slopes m+1
    and 1, group R_3 of m resources.  R_3's slope is m(n - m), the value at
    which an N_2 player is indifferent between all of R_2 and her R_3
    resource; ``literal_slopes=True`` uses slope m instead, for which the
    designated profile is not an equilibrium once n - m >= 2.
    """
    if n < 2 or not 0 < eps < 0.5:
        raise ValidationError("need n >= 2 and 0 < eps < 1/2")
    m = math.ceil(round(n * eps, 9))
    if m >= n:
        raise ValidationError("ceil(n eps) must be below n")
    slope3 = m if literal_slopes else m * (n - m)
    res = ([Resource(f"a{h}", lat.monomial(1, m + 1)) for h in range(n - m)]
           + [Resource(f"b{h}", lat.monomial(1)) for h in range(n - m)]
           + [Resource(f"c{h}", lat.monomial(1, slope3)) for h in range(m)])
    r2 = tuple(f"b{h}" for h in range(n - m))
    players = ([Player(1.0, ((f"a{h}",), (f"b{h}",))) for h in range(n - m)]
               + [Player(1.0, (r2, (f"c{h}",))) for h in range(m)])
    game = AtomicGame(tuple(players), tuple(res), CONGESTION)
    pred = math.exp((n - m) / n * math.log(m + 1))
    params = {"n": n, "eps": eps, "m": m, "literalSlopes": literal_slopes}
    return GeneratedInstance("linearCG", params, game, (0,) * n, (1,) * n, pred)


def _latency_arg(v):
    if v is None or isinstance(v, lat.LatencyFunction):
        return v
    return lat.parse_spec(v)


GENERATORS = {
    "weightedLB": weighted_lb,
    "identicalResourcesLB": identical_resources_lb,
    "unweightedLB": unweighted_lb,
    "nonAtomic": nonatomic,
    "onlineGreedyLB": online_greedy_lb,
    "onlineUniversal": online_universal,
    "linearCG": linear_cg,
}


def generate(family: str, **params) -> GeneratedInstance:
    """Build a family by name.

    Latency parameters ``f``/``g`` may be spec strings.  For the families
    parameterised by latencies, ``p`` is shorthand for ``f = g = x^p``.
    """
    if family not in GENERATORS:
        raise ValidationError(f"unknown family {family!r}; choose from {sorted(GENERATORS)}")
    if family in ("weightedLB", "onlineGreedyLB", "unweightedLB", "nonAtomic") and "p" in params:
        f = lat.monomial(int(params.pop("p")))
        params.setdefault("f", f)
        if family in ("weightedLB", "onlineGreedyLB"):
            params.setdefault("g", f)
    if family == "unweightedLB":
        for key in ("k", "o"):
            if key in params and float(params[key]).is_integer():
                params[key] = int(params[key])
    for key in ("f", "g"):
        if key in params:
            params[key] = _latency_arg(params[key])
    try:
        return GENERATORS[family](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {family}: {exc}") from exc
