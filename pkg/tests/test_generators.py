import json
import math

import numpy as np
import pytest

from nswlb.equilibria import empirical_npoa, is_pne
from nswlb.errors import InstanceTooLargeError, ValidationError
from nswlb.game import game_from_json, load_vector
from nswlb.generators import (check_pne, generate, universal_ratio, universal_ratio_displayed)
from nswlb.online import greedy_assign
from nswlb.optima import brute_force_opt


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=tol)


@pytest.mark.parametrize("m", [3, 5, 10])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_weighted_chain_closed_form(m, p):
    inst = generate("weightedLB", m=m, p=p)
    assert close(inst.predicted_ratio, 2 ** (p * (m - 2) / (m - 1)))
    assert close(inst.measured_ratio(), inst.predicted_ratio)
    assert check_pne(inst)


@pytest.mark.parametrize("k,h", [(2.0, 0.0), (1.0, 0.5), (3.0, 0.3)])
def test_weighted_chain_general_parameters(k, h):
    inst = generate("weightedLB", m=4, k=k, h=h, p=1)
    assert close(inst.measured_ratio(), inst.predicted_ratio)
    assert check_pne(inst)


def test_weighted_chain_symmetric_needs_copies():
    assert not check_pne(generate("weightedLB", m=3, s=1, p=1, variant="symmetric"))
    inst = generate("weightedLB", m=3, s=4, p=1, variant="symmetric")
    assert check_pne(inst)
    assert close(inst.measured_ratio(), 2**0.5)


@pytest.mark.parametrize("m", [3, 8])
def test_identical_resources(m):
    inst = generate("identicalResourcesLB", m=m, p=1)
    assert close(inst.measured_ratio(), 2 ** ((m - 2) / (m - 1)))
    assert check_pne(inst)
    assert inst.notes["lastGroupFactor"] == 2.0
    xs = np.linspace(0, 10, 21)
    for r in inst.game.resources:
        # every group evaluates to x, the last one to 2x
        factor = 2.0 if r.id.startswith(f"R{m}_") else 1.0
        assert np.allclose(r.latency(xs), factor * xs, rtol=1e-12)


@pytest.mark.parametrize("m,p", [(2, 1), (5, 1), (10, 2), (40, 1)])
def test_unweighted_closed_form(m, p):
    inst = generate("unweightedLB", m=m, k=1, o=1, p=p)
    assert close(inst.measured_ratio(), 2 ** (p * (m - 1) / m))
    assert check_pne(inst)


def test_unweighted_general_k_o():
    inst = generate("unweightedLB", m=3, k=3, o=2, p=2)
    assert close(inst.measured_ratio(), inst.predicted_ratio)
    assert check_pne(inst)


def test_unweighted_m2_worst_pne_is_designated():
    inst = generate("unweightedLB", m=2, k=1, o=1, p=1)
    assert close(empirical_npoa(inst.game), inst.measured_ratio())


@pytest.mark.parametrize("m", [3, 4, 6, 10])
def test_online_greedy_chain(m):
    inst = generate("onlineGreedyLB", m=m, k=1, h=0, p=1)
    assert close(inst.predicted_ratio, 4 ** ((m - 2) / (m - 1)))
    assert close(inst.measured_ratio(), inst.predicted_ratio)
    assert greedy_assign(inst.online).profile == tuple(inst.equilibrium)


def test_online_greedy_chain_h_positive():
    inst = generate("onlineGreedyLB", m=4, k=2, h=0.5, p=1)
    assert close(inst.measured_ratio(), inst.predicted_ratio)
    assert greedy_assign(inst.online).profile == tuple(inst.equilibrium)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_online_universal_against_brute_force(m):
    inst = generate("onlineUniversal", m=m, p=1)
    assert greedy_assign(inst.online).profile == tuple(inst.equilibrium)
    opt = brute_force_opt(inst.game)
    assert close(math.exp(inst.log_values()[1]), opt.log_nsw.nsw)
    assert close(inst.measured_ratio(), universal_ratio(m))


def test_online_universal_sizes():
    inst = generate("onlineUniversal", m=3, p=1)
    assert inst.game.m == 2**3 and inst.game.n == 2**3 - 1
    assert universal_ratio(0) == 1.0
    with pytest.raises(InstanceTooLargeError):
        generate("onlineUniversal", m=40)


def test_displayed_products_differ_from_instance():
    assert close(universal_ratio_displayed(2), 3**0.6 / 2**0.4)
    # loads 3 and 1 against 2, 1 and 1 on total weight 4
    assert close(universal_ratio(2), 3**0.75 / 2**0.5)


@pytest.mark.parametrize("p", [1, 2])
def test_nonatomic_family(p):
    inst = generate("nonAtomic", p=p)
    assert close(inst.measured_ratio(), math.exp(p / math.e))
    assert check_pne(inst)


@pytest.mark.parametrize("n,eps,m", [(2, 0.1, 1), (4, 0.4, 2), (10, 0.3, 3), (100, 0.2, 20)])
def test_linear_cg(n, eps, m):
    inst = generate("linearCG", n=n, eps=eps)
    assert inst.params["m"] == m
    assert close(inst.measured_ratio(), (m + 1) ** ((n - m) / n))
    assert check_pne(inst)


def test_linear_cg_literal_slopes_break_equilibrium():
    inst = generate("linearCG", n=10, eps=0.3, literal_slopes=True)
    assert not is_pne(inst.game, inst.equilibrium)


def test_generator_json_round_trip():
    inst = generate("weightedLB", m=3, p=1)
    d = json.loads(json.dumps(inst.to_dict()))
    assert game_from_json(d) == inst.game
    assert d["metadata"]["designatedEquilibrium"] == list(inst.equilibrium)


@pytest.mark.parametrize("family,params", [
    ("nope", {}),
    ("weightedLB", {"m": 1}),
    ("unweightedLB", {"m": 2, "k": 1, "o": 2}),
    ("onlineGreedyLB", {"m": 2}),
    ("linearCG", {"n": 4, "eps": 0.7}),
])
def test_bad_parameters(family, params):
    with pytest.raises(ValidationError):
        generate(family, **params)


def test_designated_loads_of_weighted_chain():
    inst = generate("weightedLB", m=3, p=1)
    assert np.all(load_vector(inst.game, inst.equilibrium) >= 0)
