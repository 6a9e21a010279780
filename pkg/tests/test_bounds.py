import math

import numpy as np
import pytest

from bankplan import bounds as B
from bankplan import config as cfgmod
from bankplan.measures import MarketParams
from bankplan.scenario import LoanSpec
from bankplan.stage0 import Stage0Decision
from bankplan.stage1 import node_state

CFG1 = cfgmod.example1()
CFG2 = cfgmod.example2()
TREE1 = CFG1.tree()
TREE2 = CFG2.tree()
D0_1 = Stage0Decision(x=(0.0, 0.5904, 0.4096), e=0.04)
D0_2 = Stage0Decision(x=(0.0, 0.5401, 0.4599), e=0.04)

NS1 = {n: node_state(D0_1, TREE1.node_t1(n), TREE1, CFG1.params) for n in (1, 2, 3)}
NS2 = {n: node_state(D0_2, TREE2.node_t1(n), TREE2, CFG2.params) for n in (1, 2, 3)}


def _rand_params(rng) -> MarketParams:
    r = rng.uniform(0.01, 0.08)
    return MarketParams(
        beta_st=rng.uniform(0.1, 0.9),
        r=r,
        r_d=rng.uniform(0.0, r),
        r_e=rng.uniform(0.02, 0.2),
        delta=rng.uniform(0.01, 1.5),
        phi_e=rng.uniform(0.01, 0.3),
        phi_d=rng.uniform(0.01, 0.3),
        k_lev=rng.uniform(0.01, 0.1),
        theta1=0.012,
        theta2=0.010,
        cap_e=rng.uniform(0.01, 0.5),
        cap_d=rng.uniform(0.01, 0.5),
    )


def _rand_state(rng, params, e):
    """A synthetic node state: only z1/z1lt matter for the bounds."""
    z1 = rng.uniform(0.05, 1.2)
    ltd2 = params.beta_lt * (1.0 - e) * (1.0 + params.r_d) ** 2
    ns = NS1[1]
    from bankplan.stage1 import NodeState

    return NodeState(node=ns.node, r1=z1 + params.beta_st * (1.0 - e), z1=z1,
                     z1lt=z1 - ltd2 / (1.0 + params.r), survivors=(0,),
                     prices=ns.prices)


def _lev(ns, params, e, ve, vd):
    ltd = params.beta_lt * (1.0 - e) * (1.0 + params.r_d)
    return (ns.z1 + (1 - params.phi_e) * ve + (1 - params.phi_d) * vd - vd - ltd) / (
        ns.z1 + vd + ve
    )


def _v_lin(ns, params, e, ve, vd):
    lt2 = params.beta_lt * (1.0 - e) * (1.0 + params.r_d) ** 2
    return (ns.z1 + (1 - params.phi_e) * ve + (1 - params.phi_d) * vd
            - (vd + lt2) / (1 + params.r)) / (e + ve)


def test_survival_beta_bound_examples():
    assert B.survival_beta_bound(Stage0Decision((1.0, 0.0, 0.0), 0.04), CFG1.loans) \
        == pytest.approx(1.03 / 0.96)
    assert B.survival_beta_bound(D0_1, CFG1.loans) == pytest.approx(0.904096 / 0.96)
    lossy = (CFG1.loans[0], CFG1.loans[1], LoanSpec(0.2, 0.5, 1.0))
    assert B.survival_beta_bound(Stage0Decision((0.0, 0.0, 1.0), 0.0), lossy) == 0.0


def test_safe_floor_x0_examples():
    assert B.safe_floor_x0(0.0, 0.0, 0.04, CFG1.params, CFG1.loans) == 0.0
    assert B.safe_floor_x0(0.5904, 0.4096, 0.04, CFG1.params, CFG1.loans) == 0.0
    # with total loss and full short-term funding the floor becomes positive
    hard = MarketParams(beta_st=1.0, r=0.03, r_d=0.01, r_e=0.1, delta=0.05,
                        phi_e=0.1, phi_d=0.07, k_lev=0.04, theta1=1.0,
                        theta2=1.0, cap_e=0.1, cap_d=0.1)
    lossy = (CFG1.loans[0], LoanSpec(0.09, 0.061, 1.0), LoanSpec(0.132, 0.122, 1.0))
    got = B.safe_floor_x0(0.5, 0.5, 0.0, hard, lossy)
    assert got == pytest.approx(max(0.0, (0.5 + 0.5 + 1.0 - 1.0) / 0.03))


def test_roe_t0_derivative_matches_finite_difference():
    ratio, deriv = B.roe_t0(D0_1, TREE1, CFG1.params)
    h = 1e-6
    up, _ = B.roe_t0(Stage0Decision(D0_1.x, D0_1.e + h), TREE1, CFG1.params)
    dn, _ = B.roe_t0(Stage0Decision(D0_1.x, D0_1.e - h), TREE1, CFG1.params)
    fd = (up - dn) / (2 * h)
    assert deriv == pytest.approx(fd, rel=1e-4)
    assert deriv < 0.0  # more equity dilutes a profitable book


def test_vd_regime_threshold():
    p = CFG1.params  # phi_d = 0.07 > 0.03/1.03
    assert B.vd_regime(p) == "decreasing"
    cheap = MarketParams(**{**p.__dict__, "phi_d": 0.02})
    assert B.vd_regime(cheap) == "increasing"
    boundary = MarketParams(**{**p.__dict__, "phi_d": 0.03 / 1.03})
    assert B.vd_regime(boundary) == "increasing"  # weak inequality


def test_cap_ve_equityholder_golden():
    b = B.cap_ve_equityholder(NS1[2], CFG1.params, 0.04, 0.01, B.BELOW_TARGET)
    assert b.cap_value == pytest.approx(0.0120501781870472, abs=1e-10)
    b = B.cap_ve_equityholder(NS2[2], CFG2.params, 0.04, 0.20, B.BELOW_TARGET)
    assert b.cap_value == pytest.approx(0.007721003125311956, abs=1e-10)
    # distressed node: denominator flips sign, no cap from this constraint
    b = B.cap_ve_equityholder(NS1[3], CFG1.params, 0.04, 0.0, B.BELOW_TARGET)
    assert b.regime == B.NOT_APPLICABLE


def test_cap_vd_leverage_golden():
    b = B.cap_vd_leverage(NS2[3], CFG2.params, 0.04, v_e=0.2994)
    assert b.cap_value == pytest.approx(1.6390821818181809, abs=1e-9)
    b = B.cap_vd_leverage(NS2[3], CFG2.params, 0.04, v_e=0.30)
    assert b.cap_value == pytest.approx(1.64377309090909, abs=1e-9)
    b = B.cap_vd_leverage(NS1[3], CFG1.params, 0.04, v_e=0.0)
    assert b.regime == B.NOT_APPLICABLE  # leverage already violated at v_d = 0
    # degenerate case reduces to available capital headroom
    p0 = MarketParams(**{**CFG1.params.__dict__, "k_lev": 0.0, "phi_d": 0.0})
    with pytest.raises(ZeroDivisionError):
        B.cap_vd_leverage(NS1[1], p0, 0.04, v_e=0.0)


def test_min_ve_for_leverage_golden():
    assert B.min_ve_for_leverage(NS1[3], CFG1.params, 0.04) == pytest.approx(
        0.07914865116279066, abs=1e-10
    )
    assert B.min_ve_for_leverage(NS1[1], CFG1.params, 0.04) == 0.0
    blocked = MarketParams(**{**CFG1.params.__dict__, "phi_e": 0.97})
    assert B.min_ve_for_leverage(NS1[3], blocked, 0.04) == math.inf


def test_leverage_ve_threshold_golden():
    got = B.leverage_ve_threshold(NS1[3], CFG1.params, 0.04)
    assert got == pytest.approx(0.29088 / 0.232096)
    assert CFG1.params.phi_e < got  # so equity issuance raises leverage here


def test_regimes_on_example_nodes():
    assert B.ve_regime(NS2[1], CFG2.params, 0.04) == "decreasing"
    assert B.ve_regime(NS2[3], CFG2.params, 0.04) == "increasing"
    assert B.leverage_vd_monotone(NS2[1], CFG2.params, 0.04) == -1


def test_verify_bruteforce_trivial():
    na = B.BoundReport("x", -1.0, B.NOT_APPLICABLE, {})
    assert B.verify_bound_bruteforce(na, lambda v: np.zeros(len(v), bool), 1e-3)
    zero_cap = B.BoundReport("x", 0.0, B.UNCONDITIONAL, {})
    assert B.verify_bound_bruteforce(zero_cap, lambda v: v <= 0.0, 1e-3)
    inf_cap = B.BoundReport("x", math.inf, B.UNCONDITIONAL, {})
    assert B.verify_bound_bruteforce(inf_cap, lambda v: np.ones(len(v), bool), 1e-2)
    with pytest.raises(ValueError):
        B.verify_bound_bruteforce(zero_cap, lambda v: v <= 0.0, 0.0)


def test_caps_nest_in_the_other_issuance():
    # the leverage debt cap grows with v_e while 1 - phi_e - k_lev >= 0
    caps = [B.cap_vd_leverage(NS2[1], CFG2.params, 0.04, v_e=v).cap_value
            for v in np.linspace(0.0, 0.3, 7)]
    assert all(b >= a for a, b in zip(caps, caps[1:]))
    # the equity cap grows with v_d only when debt is cheap enough
    cheap = MarketParams(**{**CFG2.params.__dict__, "phi_d": 0.02})
    caps = [B.cap_ve_equityholder(NS2[2], cheap, 0.04, v, B.BELOW_TARGET).cap_value
            for v in np.linspace(0.0, 0.2, 7)]
    assert all(b >= a for a, b in zip(caps, caps[1:]))


def test_random_states_scan_agreement():
    """Seeded random parameterizations: closed forms match dense scans."""
    rng = np.random.default_rng(42)
    step = 1e-4
    for _ in range(25):
        params = _rand_params(rng)
        e = rng.uniform(0.02, 0.2)
        ns = _rand_state(rng, params, e)
        ltd = params.beta_lt * (1.0 - e) * (1.0 + params.r_d)
        current = (ns.z1 - ltd) / e
        target = 1.0 + params.r_e

        b = B.cap_vd_leverage(ns, params, e, v_e=0.0)
        assert B.verify_bound_bruteforce(
            b, lambda v: _lev(ns, params, e, 0.0, v) >= params.k_lev - 1e-12, step)

        b = B.cap_ve_equityholder(ns, params, e, 0.0, B.BELOW_TARGET)
        assert B.verify_bound_bruteforce(
            b, lambda v: _v_lin(ns, params, e, v, 0.0) >= current - 1e-12, step)

        b = B.cap_vd_equityholder(ns, params, e, B.ABOVE_TARGET)
        assert B.verify_bound_bruteforce(
            b, lambda v: _v_lin(ns, params, e, 0.0, v) >= target - 1e-12, step)
