import math
import warnings

import pytest

from slotless.errors import InfeasibleEta, RangesEmpty
from slotless.latency import worst_case_bound, worst_case_closed_form
from slotless.model import INFINITE, PiConfig, RadioParams, Variant, duty_cycle
from slotless.optimizer import (
    EtaAdjWarning,
    OptimizerRequest,
    apply_skew_guards,
    derive_best,
    derive_pi0m,
    derive_pik1,
    derive_pik2,
    eta_limits,
    one_way_split,
    pi0m_bounds,
    pik1_bounds,
    pik2_bounds,
    skew_guard,
)

MS = 1_000_000
TICK = 30_518
RADIO = RadioParams()


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EtaAdjWarning)
        yield


def req(eta, **kw):
    return OptimizerRequest(eta_target=eta, **kw)


def test_pi0m_one_percent():
    sol = derive_pi0m(req(0.01))
    cfg = sol.config
    assert (sol.variant, sol.k, sol.M) == (Variant.PI0M, 1, 199)
    assert cfg.d_s == pytest.approx(74.336 * MS, abs=1_000)
    assert cfg.t_a == pytest.approx(73.968 * MS, abs=1_000)
    assert cfg.t_s == 200 * cfg.t_a - TICK
    assert sol.d_m == pytest.approx(14.72e9, rel=1e-4)
    assert sol.d_m == 14_720_030_646  # confirmed by the brute-force oracle
    assert sol.clamped == ()


def test_pi0m_near_limit_clamps_m_max():
    sol = derive_pi0m(req(0.23))
    _, _, m_max = pi0m_bounds(0.23, RADIO)
    assert "M_max" in sol.clamped
    assert sol.M == math.floor(m_max)


def test_pi0m_infeasible():
    with pytest.raises(InfeasibleEta) as exc:
        derive_pi0m(req(0.5))
    assert exc.value.limit == pytest.approx(0.2374, abs=5e-4)


def test_pi0m_eta_adj_warning():
    limits = eta_limits(Variant.PI0M)
    with pytest.warns(EtaAdjWarning):
        derive_pi0m(req(limits.eta_adj * 1.05))


def test_eta_adj_is_where_optimum_meets_clamp():
    eta_adj = eta_limits(Variant.PI0M).eta_adj
    m_opt, _, m_max = pi0m_bounds(eta_adj, RADIO)
    assert m_opt == pytest.approx(m_max, rel=1e-9)


def test_pik1_one_percent():
    sol = derive_pik1(req(0.01))
    assert (sol.k, sol.M) == (101, 1)
    k_opt, _, _ = pik1_bounds(0.01, RADIO)
    assert k_opt == pytest.approx(100.745, abs=1e-3)
    # Scan window from the construction's own duty-cycle (see ledger on the d_s factor).
    assert sol.config.d_s == pytest.approx(37.35 * MS, abs=0.01 * MS)
    truth = worst_case_bound(sol.config).d_m
    assert truth >= sol.d_m - TICK


@pytest.mark.parametrize("side", [0.999, 1.001])
def test_pik1_at_constraint_flip(side):
    eta = RADIO.d_a / (2 * (RADIO.d_s_min - RADIO.d_a)) * side
    sol = derive_pik1(req(eta))
    assert sol.config.d_s >= RADIO.d_s_min


def test_pik1_infeasible():
    with pytest.raises(InfeasibleEta):
        derive_pik1(req(0.2))
    assert eta_limits(Variant.PIK1P).eta_max == pytest.approx(0.0849, abs=1e-4)


def test_pik2_one_percent():
    sol = derive_pik2(req(0.01))
    k_opt, k_min, k_max = pik2_bounds(0.01, RADIO)
    assert sol.M == 2 and sol.variant is Variant.PIK2P
    assert sol.k == round(k_opt)
    ref = derive_pi0m(req(0.01)).d_m
    assert abs(sol.d_m - ref) / ref <= 0.05


def test_pik2_infeasible():
    limit = eta_limits(Variant.PIK2P).eta_max
    assert limit == pytest.approx(0.0566, abs=1e-4)
    with pytest.raises(InfeasibleEta):
        derive_pik2(req(limit * 1.01))


def test_best_prefers_pi0m_at_one_percent():
    best = derive_best(req(0.01))
    assert best.variant is Variant.PI0M
    others = [f(req(0.01)).d_m for f in (derive_pi0m, derive_pik1, derive_pik2)]
    assert best.d_m <= min(others)


def test_best_pointwise_minimum():
    for i in range(1, 21):
        eta = i / 100
        best = derive_best(req(eta))
        for f in (derive_pi0m, derive_pik1, derive_pik2):
            try:
                assert best.d_m <= f(req(eta)).d_m
            except (InfeasibleEta, RangesEmpty):
                pass


def test_best_infeasible():
    with pytest.raises(InfeasibleEta):
        derive_best(req(0.5))


@pytest.mark.parametrize("eta", [0.005, 0.01, 0.02, 0.04, 0.05])
@pytest.mark.parametrize("derive", [derive_pi0m, derive_pik1, derive_pik2])
def test_solution_invariants(eta, derive):
    sol = derive(req(eta))
    cfg = sol.config
    assert sol.eta_achieved == duty_cycle(cfg)
    assert sol.eta_achieved <= eta
    assert abs(sol.eta_achieved - eta) / eta <= 1e-3
    assert sol.d_m == worst_case_closed_form(sol.variant, sol.k, sol.M, cfg.d_s, RADIO, sol.eps)
    assert cfg.d_s >= RADIO.d_s_min
    assert cfg.t_a > cfg.d_a
    bound = worst_case_bound(cfg)
    assert bound.order == (0 if sol.variant is Variant.PI0M else 1)


@pytest.mark.parametrize("eta", [0.01, 0.05, 0.1, 0.2])
def test_pareto_placement_pi0m(eta):
    sol = derive_pi0m(req(eta))
    cfg = sol.config
    base = worst_case_bound(cfg).d_m

    def with_ts(t_s):
        return worst_case_bound(PiConfig(cfg.t_a, t_s, cfg.d_s, cfg.d_a)).d_m

    # One tick up lands exactly on the flip boundary; one ns beyond it flips.
    assert with_ts(cfg.t_s + TICK) == base
    assert with_ts(cfg.t_s + TICK + 1) > base
    assert with_ts(cfg.t_s - TICK) >= base


def test_skew_guard_landmark():
    radio = RadioParams(skew_ppm=20)
    assert abs(skew_guard(15_000_000_000, radio) - 600_000) <= TICK
    sol = derive_pi0m(req(0.01))
    guarded = apply_skew_guards(sol, radio)
    assert abs(guarded.eps - 2 * 20e-6 * guarded.config.t_s) <= TICK
    assert guarded.eps == guarded.eps_ta
    assert guarded.config.t_a == guarded.config.d_s - guarded.config.d_a - guarded.eps_ta
    assert guarded.d_m == worst_case_bound(guarded.config).d_m
    assert abs(guarded.eta_achieved - 0.01) / 0.01 <= 1e-3


def test_skew_guard_zero_ppm():
    sol = derive_pi0m(req(0.01))
    guarded = apply_skew_guards(sol, RadioParams(skew_ppm=0))
    assert guarded.eps == TICK and guarded.eps_ta == 0
    assert guarded.config == sol.config
    assert guarded.d_m == sol.d_m


def test_guarded_best_close_to_unguarded():
    for i in range(1, 21):
        sol = derive_best(req(i / 100))
        guarded = apply_skew_guards(sol, RADIO)
        assert guarded.d_m <= 1.02 * sol.d_m


def test_one_way_split():
    sol = derive_pi0m(req(0.01))
    adv, scan = one_way_split(sol)
    assert adv.t_s is INFINITE and scan.t_a is INFINITE
    assert abs(duty_cycle(adv) + duty_cycle(scan) - 0.01) <= 1e-9


def test_request_validation():
    with pytest.raises(ValueError):
        OptimizerRequest(eta_target=0)
    with pytest.raises(ValueError):
        OptimizerRequest(eta_target=1.2)
