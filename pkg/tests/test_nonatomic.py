import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nswlb import monomial
from nswlb.errors import ConvergenceError, ValidationError
from nswlb.game import FlowProfile, NonAtomicGame, PlayerType, Resource, log_nsw_flow
from nswlb.generators import generate
from nswlb.nonatomic import (equilibrium, nonatomic_ratio, optimal_flow, potential_minimize,
                             symmetric_waterfill, wardrop_check, wardrop_gap)
from nswlb.sampling import random_symmetric_nonatomic


def sym(rate, *lats):
    res = tuple(Resource(f"r{j + 1}", f) for j, f in enumerate(lats))
    return NonAtomicGame((PlayerType(rate, tuple(r.id for r in res)),), res)


def test_wardrop_examples():
    assert wardrop_check(sym(1.5, monomial(1)), FlowProfile([[1.5]]))
    g = sym(2, monomial(1), monomial(1))
    assert wardrop_check(g, FlowProfile([[1.0, 1.0]]))
    assert not wardrop_check(g, FlowProfile([[2.0, 0.0]]))
    assert math.isclose(wardrop_gap(g, FlowProfile([[2.0, 0.0]])), 2.0)


@pytest.mark.parametrize("lats,rate,expected", [
    ((monomial(1), monomial(1)), 2.0, [1.0, 1.0]),
    ((monomial(1), monomial(1, 2)), 3.0, [2.0, 1.0]),
    ((monomial(2),), 1.7, [1.7]),
])
def test_waterfill(lats, rate, expected):
    g = sym(rate, *lats)
    flow = symmetric_waterfill(g)
    assert np.allclose(flow.loads, expected, rtol=1e-9)
    assert wardrop_check(g, flow)


def test_waterfill_flat_latency():
    # a constant resource absorbs whatever the linear one leaves over
    from nswlb.latency import Constant

    g = sym(3.0, monomial(1), Constant(1.0))
    flow = symmetric_waterfill(g)
    assert math.isclose(flow.loads.sum(), 3.0, rel_tol=1e-12)
    assert math.isclose(flow.loads[0], 1.0, rel_tol=1e-9)
    assert wardrop_check(g, flow)


def test_waterfill_needs_symmetric():
    res = (Resource("a", monomial(1)), Resource("b", monomial(1)))
    g = NonAtomicGame((PlayerType(1, ("a",)),), res)
    with pytest.raises(ValidationError):
        symmetric_waterfill(g)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_potential_agrees_with_waterfill(seed):
    g = random_symmetric_nonatomic(seed)
    a = symmetric_waterfill(g)
    b = potential_minimize(g)
    assert np.allclose(a.loads, b.loads, atol=1e-4)
    assert math.isclose(b.amounts.sum(), g.total_rate, rel_tol=1e-12)
    assert wardrop_check(g, b)


def test_singleton_type_stays_put():
    res = (Resource("a", monomial(1)), Resource("b", monomial(1)))
    g = NonAtomicGame((PlayerType(2.0, ("a",)), PlayerType(1.0, ("a", "b"))), res)
    flow = potential_minimize(g)
    assert flow.amounts[0, 0] == 2.0
    assert wardrop_check(g, flow)
    assert np.allclose(flow.loads, [2.0, 1.0], atol=1e-6)


def test_diminishing_step():
    g = sym(2.0, monomial(1), monomial(1, 3))
    flow = potential_minimize(g, step="diminishing", eps=1e-3)
    assert np.allclose(flow.loads, [1.5, 0.5], atol=1e-2)


def test_potential_non_convergence():
    g = sym(2.0, monomial(1), monomial(1, 3))
    with pytest.raises(ConvergenceError) as err:
        potential_minimize(g, max_iters=3, step="diminishing")
    assert err.value.gap > 1e-6
    assert "lastState" not in err.value.to_dict() or err.value.to_dict()["lastState"]


@pytest.mark.parametrize("p", [1, 2])
def test_generated_equilibrium_all_on_first(p):
    inst = generate("nonAtomic", p=p)
    flow = potential_minimize(inst.game)
    assert np.allclose(flow.amounts, inst.equilibrium.amounts, atol=1e-9)
    assert wardrop_gap(inst.game, flow) <= 1e-6


@pytest.mark.parametrize("k,o,p,expected", [
    (math.e, 1.0, 1, math.exp(1 / math.e)),
    (2.0, 1.0, 2, 2.0),
    (1.5, 1.5, 1, 1.0),
])
def test_ratio_closed_forms(k, o, p, expected):
    inst = generate("nonAtomic", k=k, o=o, p=p)
    assert math.isclose(inst.measured_ratio(), expected, rel_tol=1e-9)


@pytest.mark.parametrize("k", [1.0, 2.0, math.e, 5.0])
@pytest.mark.parametrize("p", [1, 2])
def test_true_optimum_puts_k_over_e_first(k, p):
    # x p ln x + (k - x) p ln k is minimised at x = k / e
    inst = generate("nonAtomic", k=k, o=1.0, p=p)
    opt = optimal_flow(inst.game)
    assert math.isclose(opt.loads[0], k / math.e, rel_tol=1e-5)
    assert math.isclose(nonatomic_ratio(inst.game, inst.equilibrium, opt), math.exp(p / math.e), rel_tol=1e-6)


def test_ratio_of_equal_flows():
    g = sym(2, monomial(1), monomial(1))
    f = FlowProfile([[1.0, 1.0]])
    assert nonatomic_ratio(g, f, f) == 1.0


def test_optimal_flow_not_worse_than_equilibrium():
    for seed in range(30):
        g = random_symmetric_nonatomic(seed)
        opt = optimal_flow(g)
        eq = equilibrium(g)
        assert log_nsw_flow(g, opt).value <= log_nsw_flow(g, eq).value + 1e-9


def test_optimal_flow_too_many_resources():
    g = sym(1.0, *[monomial(1)] * 4)
    with pytest.raises(ValidationError):
        optimal_flow(g)
