"""Acceptance criteria 1-11.  Each test prints one PASS/FAIL line."""
import json
import math
import subprocess
import sys
from contextlib import contextmanager

import numpy as np
import pytest

from nswlb import bounds
from nswlb.equilibria import empirical_npoa, enumerate_pne, is_pne, npoa_report
from nswlb.errors import ConvexityError
from nswlb.game import log_nsw
from nswlb.generators import check_pne, generate
from nswlb.latency import monomial
from nswlb.nonatomic import nonatomic_ratio, optimal_flow, potential_minimize, wardrop_gap
from nswlb.online import competitive_ratio, increment_rule_choices, shuffled, total_rule_choices
from nswlb.optima import SlotCostTable, brute_force_opt, unweighted_opt_matching
from nswlb.sampling import SampleConfig, random_game

TOL = 1e-9


@contextmanager
def criterion(capsys, label):
    try:
        yield
    except BaseException as exc:
        with capsys.disabled():
            print(f"\nFAIL  criterion {label}: {type(exc).__name__}")
        raise
    with capsys.disabled():
        print(f"\nPASS  criterion {label}")


def rel_close(a, b, tol=TOL):
    return abs(a - b) <= tol * abs(b)


def test_1_weighted_chain_trajectory(capsys):
    with criterion(capsys, "1 weighted chain ratio trajectory"):
        for p in (1, 2):
            for m in (3, 5, 10, 20):
                inst = generate("weightedLB", m=m, s=1, k=1, h=0, p=p, variant="restricted")
                got = inst.measured_ratio()
                assert rel_close(got, 2 ** (p * (m - 2) / (m - 1))), (m, p, got)
                assert is_pne(inst.game, inst.equilibrium), (m, p)
        assert generate("weightedLB", m=20, p=1).measured_ratio() >= 1.92


def test_2_identical_resources(capsys):
    with criterion(capsys, "2 identical resources"):
        for m in (3, 8):
            inst = generate("identicalResourcesLB", m=m, p=1)
            assert rel_close(inst.measured_ratio(), 2 ** ((m - 2) / (m - 1))), m
        assert inst.measured_ratio() >= 1.8


def test_3_unweighted_tightness(capsys):
    with criterion(capsys, "3 unweighted tightness"):
        for p in (1, 2):
            inst = generate("unweightedLB", m=40, k=1, o=1, p=p)
            got = inst.measured_ratio()
            f = monomial(p)
            assert rel_close(got, (float(f(2)) / float(f(1))) ** (39 / 40)), (p, got)
            assert rel_close(got, 2 ** (p * 39 / 40))
            assert is_pne(inst.game, inst.equilibrium)
        small = generate("unweightedLB", m=2, k=1, o=1, p=1)
        rep = npoa_report(small.game)
        assert rel_close(rep.log_worst, log_nsw(small.game, small.equilibrium).value)
        assert tuple(small.equilibrium) in enumerate_pne(small.game)


def test_4_npoa_ceilings(capsys):
    with criterion(capsys, "4 weighted/unweighted NPoA ceilings"):
        violations = []
        for weighted in (False, True):
            cfg = SampleConfig(max_players=6, max_resources=4, max_degree=3, weighted=weighted)
            for seed in range(500):
                g = random_game(seed, cfg)
                r = empirical_npoa(g)
                if r > 2.0**g.max_degree + TOL:
                    violations.append((weighted, seed, r))
        assert violations == []


def test_5a_greedy_chain(capsys):
    with criterion(capsys, "5a greedy chain competitive ratio"):
        for m in range(3, 11):
            inst = generate("onlineGreedyLB", m=m, k=1, h=0, p=1)
            assert rel_close(inst.measured_ratio(), 4 ** ((m - 2) / (m - 1))), m
        assert inst.measured_ratio() >= 3.2


def test_5b_universal_instance(capsys):
    with criterion(capsys, "5b universal online instance m=2"):
        inst = generate("onlineUniversal", m=2, p=1)
        measured = competitive_ratio(inst.online)
        opt = brute_force_opt(inst.game)
        assert rel_close(math.exp(log_nsw(inst.game, (0,) * inst.game.n).value - opt.log_nsw.value), measured)
        assert rel_close(measured, 3**0.6 / 2**0.4), measured


def test_5c_greedy_ceiling(capsys):
    with criterion(capsys, "5c greedy ratio ceiling"):
        violations = []
        for seed in range(500):
            g = random_game(seed, SampleConfig(weighted=True))
            r = competitive_ratio(shuffled(g, seed))
            if r > 4.0**g.max_degree + TOL:
                violations.append((seed, r))
        assert violations == []


def test_6_nonatomic_tightness(capsys):
    with criterion(capsys, "6 non-atomic tightness"):
        for p in (1, 2):
            inst = generate("nonAtomic", k=math.e, o=1, p=p)
            flow = potential_minimize(inst.game)
            assert wardrop_gap(inst.game, flow) <= 1e-6
            assert np.allclose(flow.amounts, [[math.e, 0.0]], atol=1e-12)
            r = nonatomic_ratio(inst.game, flow, optimal_flow(inst.game))
            assert abs(r - math.exp(p / math.e)) <= 1e-6 * math.exp(p / math.e), (p, r)
        assert round(math.exp(1 / math.e), 6) == 1.444668


def test_7_matching_oracle(capsys):
    with criterion(capsys, "7 matching vs brute force"):
        refusals, mismatches = 0, []
        for seed in range(300):
            g = random_game(seed, SampleConfig(max_players=6, max_resources=4, weighted=False))
            try:
                SlotCostTable(g)
            except ConvexityError:
                refusals += 1
                continue
            res = unweighted_opt_matching(g)
            a = brute_force_opt(g).log_nsw.value
            if res.method != "matching" or abs(res.log_nsw.value - a) > TOL * max(1.0, abs(a)):
                mismatches.append(seed)
        assert refusals == 0 and mismatches == []


def test_8_step_rule_equivalence(capsys):
    with criterion(capsys, "8 greedy step-rule equivalence"):
        bad = []
        for seed in range(500):
            g = random_game(seed, SampleConfig(weighted=seed % 2 == 1))
            inst = shuffled(g, seed)
            if increment_rule_choices(inst) != total_rule_choices(inst):
                bad.append(seed)
        assert bad == []


def test_9_bound_evaluators(capsys):
    with criterion(capsys, "9 bound evaluators"):
        k = np.logspace(0, 3, 512)
        h = np.linspace(0, 1, 512, endpoint=False)
        K, H = np.meshgrid(k, h, indexing="ij")
        for fn, bound in ((bounds.f_weighted, 2.0), (bounds.f_greedy, 4.0)):
            vals = fn(K, H)
            i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
            assert abs(vals[i, j] - bound) <= TOL * bound
            assert (K[i, j], H[i, j]) == (1.0, 0.0)
            assert vals.max() <= bound + 1e-12
        for p in (1, 2, 3):
            sn = bounds.sup_nonatomic(monomial(p)).value
            assert abs(sn - math.exp(p / math.e)) <= 1e-6 * math.exp(p / math.e), p
            su = bounds.sup_unweighted(monomial(p))
            assert su.value == 2.0**p and su.argmax[1:] == (1, 1)


def test_10_linear_congestion_growth(capsys):
    with criterion(capsys, "10 linear congestion growth"):
        # 4^0.7 ~ 2.639 at (10, 0.3)
        for n, eps, approx in ((4, 0.4, 1.732), (10, 0.3, 2.639), (100, 0.2, 11.43)):
            inst = generate("linearCG", n=n, eps=eps)
            m = math.ceil(round(n * eps, 9))
            assert check_pne(inst), (n, eps)
            got = inst.measured_ratio()
            assert rel_close(got, (m + 1) ** ((n - m) / n)), (n, eps, got)
            assert abs(got - approx) < 1e-2
        assert got > 2.0


PLAN = {
    "seed": 11,
    "instances": [
        {"family": "weightedLB", "params": {"m": 5, "p": 2}},
        {"family": "unweightedLB", "params": {"m": 10, "k": 1, "o": 1, "p": 1}},
        {"family": "nonAtomic", "params": {"p": 1}},
        {"family": "onlineGreedyLB", "params": {"m": 6, "k": 1, "h": 0, "p": 1}},
        {"family": "linearCG", "params": {"n": 10, "eps": 0.3}},
    ],
    "random": [
        {"kind": "unweightedNpoa", "count": 20},
        {"kind": "weightedNpoa", "count": 20, "seed": 1},
        {"kind": "greedyCr", "count": 20, "seed": 2},
        {"kind": "optMatching", "count": 20, "seed": 3},
    ],
}


def test_11_experiment_determinism(capsys, tmp_path):
    with criterion(capsys, "11 experiment determinism"):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps(PLAN))
        cmd = [sys.executable, "-m", "nswlb.cli", "experiment", str(plan)]
        a = subprocess.run(cmd, capture_output=True, check=True).stdout
        b = subprocess.run(cmd + ["--jobs", "2"], capture_output=True, check=True).stdout
        assert a == b
        assert len(a.splitlines()) == 1 + 5 + 80
