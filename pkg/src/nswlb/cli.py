"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 instance too large, 3 a solver
did not converge.  Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, experiment
from .equilibria import (PROFILE_CAP, SCHEDULES, best_response_dynamics, improving_players, is_pne,
                         npoa_report)
from .errors import ConvergenceError, InstanceTooLargeError, NswError, ValidationError
from .game import (AtomicGame, FlowProfile, NonAtomicGame, check_profile, game_from_json, log_nsw,
                   log_nsw_flow, player_costs)
from .generators import generate
from .latency import monomial
from .nonatomic import (equilibrium, nonatomic_ratio, optimal_flow, potential_minimize, symmetric_waterfill,
                        wardrop_check, wardrop_gap)
from .online import OnlineInstance, competitive_ratio, greedy_assign
from .optima import optimum


def _read_json(path):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_game(path):
    d = _read_json(path)
    return game_from_json(d), d


def _profile_arg(path, meta_key, doc):
    if path:
        p = _read_json(path)
        return p["profile"] if isinstance(p, dict) else p
    meta = doc.get("metadata", {})
    return meta.get(meta_key)


# -- subcommands ----------------------------------------------------------

def cmd_analyze(args):
    game, doc = _load_game(args.game)
    out = {}
    if isinstance(game, NonAtomicGame):
        flow = _profile_arg(args.profile, "designatedEquilibrium", doc)
        if flow is None:
            raise ValidationError("non-atomic analysis needs a flow (--profile)")
        flow = FlowProfile(np.asarray(flow, dtype=float))
        out["nsw"] = log_nsw_flow(game, flow).nsw
        out["wardrop"] = wardrop_check(game, flow)
        out["wardropGap"] = wardrop_gap(game, flow)
        opt = doc.get("metadata", {}).get("designatedOptCandidate")
        if opt is not None:
            out["ratio"] = nonatomic_ratio(game, flow, FlowProfile(np.asarray(opt, dtype=float)))
        _emit(out)
        return 0
    prof = _profile_arg(args.profile, "designatedEquilibrium", doc)
    if prof is None:
        prof = [0] * game.n
    prof = check_profile(game, prof)
    ln = log_nsw(game, prof)
    out.update({"profile": list(prof), "logNsw": ln.value, "nsw": ln.nsw,
                "costs": [float(c) for c in player_costs(game, prof)], "isPne": is_pne(game, prof)})
    if not out["isPne"]:
        out["improvingPlayers"] = improving_players(game, prof)
    opt = doc.get("metadata", {}).get("designatedOptCandidate")
    if opt is not None:
        out["ratio"] = math.exp(ln.value - log_nsw(game, check_profile(game, opt)).value)
    if game.num_profiles() <= args.cap:
        rep = npoa_report(game, args.cap)
        out["empiricalNpoa"] = rep.ratio
        out["numPne"] = rep.num_pne
    _emit(out)
    return 0


def cmd_dynamics(args):
    game, doc = _load_game(args.game)
    if not isinstance(game, AtomicGame):
        raise ValidationError("dynamics needs an atomic game")
    start = _profile_arg(args.start, "designatedEquilibrium", doc) if args.start else [0] * game.n
    res = best_response_dynamics(game, start, args.schedule, args.max_sweeps, args.seed)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep", "player", "from", "to", "cost_before", "cost_after"])
            for row in res.trace:
                w.writerow([row[0], row[1], row[2], row[3], f"{row[4]:.12g}", f"{row[5]:.12g}"])
    if not res.converged:
        raise ConvergenceError(f"no equilibrium after {res.sweeps} sweeps", state=list(res.profile))
    _emit({"converged": True, "profile": list(res.profile), "sweeps": res.sweeps, "moves": len(res.trace),
           "nsw": log_nsw(game, res.profile).nsw, "isPne": is_pne(game, res.profile)})
    return 0


def cmd_opt(args):
    game, _ = _load_game(args.game)
    if isinstance(game, NonAtomicGame):
        flow = optimal_flow(game)
        _emit({"flow": flow.amounts.tolist(), "nsw": log_nsw_flow(game, flow).nsw, "method": "grid+slsqp"})
        return 0
    res = optimum(game, args.method, args.cap)
    _emit({"profile": list(res.profile), "logNsw": res.log_nsw.value, "nsw": res.log_nsw.nsw,
           "method": res.method})
    return 0


def cmd_greedy(args):
    doc = _read_json(args.instance)
    inst = OnlineInstance.from_dict(doc)
    res = greedy_assign(inst)
    out = {"profile": list(res.profile), "nsw": log_nsw(inst.game, res.profile).nsw,
           "steps": [{"client": c, "resource": r, "increment": inc} for c, r, inc in res.steps]}
    try:
        out["competitiveRatio"] = competitive_ratio(inst, args.cap)
    except InstanceTooLargeError:
        out["competitiveRatio"] = None
    _emit(out)
    return 0


def cmd_nonatomic(args):
    game, _ = _load_game(args.game)
    if not isinstance(game, NonAtomicGame):
        raise ValidationError("expected a non-atomic game (with 'types')")
    if args.method == "waterfill":
        flow = symmetric_waterfill(game)
    elif args.method == "potential":
        flow = potential_minimize(game, args.max_iters, args.eps)
    else:
        flow = equilibrium(game, args.eps)
    out = {"flow": flow.amounts.tolist(), "loads": flow.loads.tolist(),
           "wardropGap": wardrop_gap(game, flow, args.eps), "nsw": log_nsw_flow(game, flow).nsw}
    if game.m <= 3:
        opt = optimal_flow(game)
        out["optNsw"] = log_nsw_flow(game, opt).nsw
        out["ratio"] = nonatomic_ratio(game, flow, opt)
    _emit(out)
    return 0


GEN_PARAMS = {
    "m": int, "s": int, "k": float, "h": float, "o": float, "p": int, "n": int, "eps": float,
    "f": str, "g": str, "variant": str,
}


def cmd_generate(args):
    params = {k: getattr(args, k) for k in GEN_PARAMS if getattr(args, k, None) is not None}
    if args.literal_slopes:
        params["literal_slopes"] = True
    inst = generate(args.family, **params)
    _emit(inst.to_dict(), args.out)
    return 0


def cmd_verify_bounds(args):
    ps = [args.p] if args.p is not None else [0, 1, 2, 3]
    lines = ["p  weighted  unweighted  nonatomic  online"]
    checks = []
    for p in ps:
        b = bounds.poly_bounds(p)
        lines.append(f"{p:<2} {b['weightedNpoa']:<9.6g} {b['unweightedNpoa']:<11.6g} "
                     f"{b['nonatomicNpoa']:<10.6g} {b['greedyCr']:.6g}")
        fam = [monomial(p)]
        sups = {
            "weighted": bounds.sup_weighted_general(fam).value,
            "unweighted": bounds.sup_unweighted(fam).value,
            "nonatomic": bounds.sup_nonatomic(fam).value,
            "online": bounds.sup_greedy_general(fam).value,
        }
        closed = dict(zip(sups, (b["weightedNpoa"], b["unweightedNpoa"], b["nonatomicNpoa"], b["greedyCr"])))
        for name, v in sups.items():
            ok = abs(v - closed[name]) <= 1e-6 * closed[name]
            checks.append(ok)
            lines.append(f"   grid sup {name:<10} {v:.9g}  closed form {closed[name]:.9g}  {'ok' if ok else 'MISMATCH'}")
    if args.p is not None:
        b = bounds.poly_bounds(args.p)
        lines.append(f"weighted {b['weightedNpoa']:.6g}, unweighted {b['unweightedNpoa']:.6g}, "
                     f"nonatomic {b['nonatomicNpoa']:.6g}, online {b['greedyCr']:.6g}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if all(checks) else 1


def cmd_experiment(args):
    plan = experiment.Plan.from_dict(_read_json(args.plan))
    if args.seed is not None:
        plan.seed = args.seed
    rows = experiment.run_plan(plan, args.jobs)
    text = experiment.to_csv(rows)
    summ = experiment.summary(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(text)
        (out / "summary.json").write_text(json.dumps(summ, indent=2) + "\n")
        _emit(summ)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ---------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="nswlb", description="Nash social welfare in load balancing games")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="NSW, costs and PNE verdict of a profile")
    p.add_argument("game")
    p.add_argument("--profile")
    p.add_argument("--cap", type=int, default=PROFILE_CAP)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("dynamics", help="best-response dynamics")
    p.add_argument("game")
    p.add_argument("--schedule", choices=SCHEDULES, default="maxWeightFirst")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--start", help="JSON profile to start from (default: everyone on strategy 0)")
    p.add_argument("--trace", help="write the move trace as CSV here")
    p.set_defaults(fn=cmd_dynamics)

    p = sub.add_parser("opt", help="optimal profile")
    p.add_argument("game")
    p.add_argument("--method", choices=("auto", "brute", "matching"), default="auto")
    p.add_argument("--cap", type=int, default=PROFILE_CAP)
    p.set_defaults(fn=cmd_opt)

    p = sub.add_parser("greedy", help="greedy online assignment")
    p.add_argument("instance")
    p.add_argument("--cap", type=int, default=PROFILE_CAP)
    p.set_defaults(fn=cmd_greedy)

    p = sub.add_parser("nonatomic", help="Wardrop equilibrium of a non-atomic game")
    p.add_argument("game")
    p.add_argument("--method", choices=("auto", "waterfill", "potential"), default="auto")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.set_defaults(fn=cmd_nonatomic)

    p = sub.add_parser("generate", help="emit a worst-case instance")
    p.add_argument("family")
    for name, typ in GEN_PARAMS.items():
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--literal-slopes", action="store_true", help="linearCG: use slope m on the third group")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("verify-bounds", help="tight bounds for polynomial latencies")
    p.add_argument("--p", type=int)
    p.add_argument("--family", choices=("poly",), default="poly")
    p.set_defaults(fn=cmd_verify_bounds)

    p = sub.add_parser("experiment", help="run a batch plan and write CSV")
    p.add_argument("plan")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NswError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
