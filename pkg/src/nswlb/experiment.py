"""Batch experiments: generator reproductions and random bound checks, one CSV row each."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .bounds import poly_bounds
from .equilibria import empirical_npoa
from .errors import ValidationError
from .generators import generate
from .online import competitive_ratio, shuffled
from .optima import brute_force_opt, unweighted_opt_matching
from .sampling import SampleConfig, random_game

COLUMNS = ["family", "params", "n", "m_resources", "predicted_ratio", "measured_ratio", "bound", "abs_err", "pass"]
REL_TOL = 1e-9

# which polynomial bound applies to each generated family
FAMILY_BOUND = {
    "weightedLB": "weightedNpoa",
    "identicalResourcesLB": "weightedNpoa",
    "unweightedLB": "unweightedNpoa",
    "nonAtomic": "nonatomicNpoa",
    "onlineGreedyLB": "greedyCr",
    "onlineUniversal": "greedyCr",
}

RANDOM_KINDS = ("unweightedNpoa", "weightedNpoa", "greedyCr", "optMatching")


@dataclass
class Plan:
    seed: int = 0
    instances: list = field(default_factory=list)  # {"family": ..., "params": {...}}
    random: list = field(default_factory=list)  # {"kind": ..., "count": N, "seed": s}

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        if not isinstance(d, dict):
            raise ValidationError("plan must be a JSON object")
        plan = cls(int(d.get("seed", 0)), list(d.get("instances", [])), list(d.get("random", [])))
        for spec in plan.random:
            if spec.get("kind") not in RANDOM_KINDS:
                raise ValidationError(f"unknown random kind {spec.get('kind')!r}; choose from {RANDOM_KINDS}")
        for spec in plan.instances:
            if "family" not in spec:
                raise ValidationError("instance rows need a 'family'")
        return plan


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.12g}"
    return str(x)


def _degree(inst) -> int | None:
    try:
        return inst.game.max_degree
    except AttributeError:
        return max(r.latency.degree for r in inst.game.resources)


def run_instance(spec: dict) -> dict:
    inst = generate(spec["family"], **dict(spec.get("params", {})))
    measured = inst.measured_ratio()
    predicted = inst.predicted_ratio
    key = FAMILY_BOUND.get(inst.family)
    bound = poly_bounds(_degree(inst))[key] if key else math.inf
    err = abs(measured - predicted)
    ok = err <= REL_TOL * predicted and measured <= bound * (1 + REL_TOL)
    n = getattr(inst.game, "n", len(getattr(inst.game, "types", ())))
    return {
        "family": inst.family,
        "params": json.dumps(spec.get("params", {}), sort_keys=True, separators=(",", ":")),
        "n": n, "m_resources": inst.game.m,
        "predicted_ratio": predicted, "measured_ratio": measured,
        "bound": bound, "abs_err": err, "pass": ok,
    }


def run_random(kind: str, seed: int) -> dict:
    if kind == "optMatching":
        game = random_game(seed, SampleConfig(weighted=False))
        a = brute_force_opt(game).log_nsw.value
        b = unweighted_opt_matching(game).log_nsw.value
        measured, bound, predicted = math.exp(b - a), 1.0, 1.0
        err = abs(b - a)
        ok = err <= REL_TOL * max(1.0, abs(a))
    else:
        game = random_game(seed, SampleConfig(weighted=kind != "unweightedNpoa"))
        p = game.max_degree
        if kind == "greedyCr":
            measured = competitive_ratio(shuffled(game, seed))
            bound = 4.0**p
        else:
            measured = empirical_npoa(game)
            bound = 2.0**p
        predicted = None
        err = max(0.0, measured - bound)
        ok = measured <= bound + REL_TOL
    return {
        "family": kind, "params": json.dumps({"seed": seed}, separators=(",", ":")),
        "n": game.n, "m_resources": game.m,
        "predicted_ratio": predicted, "measured_ratio": measured,
        "bound": bound, "abs_err": err, "pass": ok,
    }


def _task(args):
    what, payload = args
    if what == "instance":
        return run_instance(payload)
    return run_random(*payload)


def plan_tasks(plan: Plan) -> list:
    tasks = [("instance", spec) for spec in plan.instances]
    for spec in plan.random:
        base = plan.seed * 1_000_003 + int(spec.get("seed", 0))
        tasks.extend(("random", (spec["kind"], base + j)) for j in range(int(spec.get("count", 1))))
    return tasks


def run_plan(plan: Plan, jobs: int = 1) -> list:
    tasks = plan_tasks(plan)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_task(t) for t in tasks]
    # pool.map already preserves task order; the output does not depend on jobs
    return rows


def to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def summary(rows: list) -> dict:
    failed = [i for i, r in enumerate(rows) if not r["pass"]]
    return {"rows": len(rows), "failed": len(failed), "failedRows": failed, "pass": not failed}
