import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from slotless.baselines import (
    BASELINE_ORDER,
    GAIN_CSV_COLUMNS,
    UtilizationKind,
    channel_utilization,
    eta_grid,
    gain_series,
    gain_table,
    granularity_study,
    lightning_n,
    nihao_duty_cycle,
    nihao_m,
    searchlight_utilization,
    slotted_collision_probability,
    slotted_latency,
    write_gain_csv,
)
from slotless.errors import EtaOutOfRange, SlotTooShort
from slotless.model import Protocol, RadioParams, SlottedSpec
from slotless.optimizer import OptimizerRequest, derive_best

MS = 1_000_000
S = 1_000_000_000
D_A = 368_000


def spec(p, d_sl=10 * MS):
    return SlottedSpec(p, d_sl=d_sl)


def test_table_examples():
    assert slotted_latency(spec(Protocol.DISCO), 0.01) == 400 * S
    assert slotted_latency(spec(Protocol.OPT_DIFFCODES), 0.01) == 50 * S
    u = slotted_latency(spec(Protocol.UCONNECT), 0.01)
    assert u == pytest.approx((math.sqrt(50 + 5625) + 75) ** 2 * 10 * MS, rel=1e-12)
    assert u == pytest.approx(226 * S, rel=2e-3)


def test_searchlight_forms():
    # Striped bound: t * ceil(t/4) slots with t = floor(2/eta).
    assert slotted_latency(spec(Protocol.SEARCHLIGHT_S), 0.01) == 200 * 50 * 10 * MS
    # Literal one-period entry kept for auditing.
    assert slotted_latency(spec(Protocol.SEARCHLIGHT_S), 0.01, searchlight_literal=True) == 50 * 10 * MS


def test_lightning_n_rounding():
    assert lightning_n(0.01) == round((0.0021 * math.sqrt(256 + 2109) + 0.095) / 0.01)
    assert lightning_n(0.5) >= 1


@pytest.mark.parametrize("p", BASELINE_ORDER)
@given(st.floats(0.005, 0.2))
def test_latency_decreasing(p, eta):
    hi = slotted_latency(spec(p), eta)
    lo = slotted_latency(spec(p), min(eta * 1.2, 0.2) if eta < 0.2 else eta)
    assert lo <= hi


@pytest.mark.parametrize("p", BASELINE_ORDER)
def test_latency_strictly_decreasing_on_grid(p):
    grid = eta_grid(0.01, 0.2, 0.01)
    vals = [slotted_latency(spec(p), e) for e in grid]
    if p is Protocol.SEARCHLIGHT_S:
        # Integer period floor(2/eta): constant between period changes.
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[0] > vals[-1]
    else:
        assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", BASELINE_ORDER)
def test_latency_linear_in_slot_length(p):
    if p is Protocol.G_NIHAO:
        pytest.skip("G-Nihao depends on d_a/d_sl, not only on d_sl")
    a = slotted_latency(spec(p, 10 * MS), 0.03)
    b = slotted_latency(spec(p, 20 * MS), 0.03)
    assert abs(b - 2 * a) <= 2


def test_eta_out_of_range():
    with pytest.raises(EtaOutOfRange):
        slotted_latency(spec(Protocol.DISCO), 0)
    with pytest.raises(EtaOutOfRange):
        slotted_latency(spec(Protocol.DISCO), 1.5)


def test_collision_probability():
    assert slotted_collision_probability(D_A, 27 * D_A) == Fraction(1, 10)
    assert float(slotted_collision_probability(D_A, 10 * MS)) == pytest.approx(0.0994, abs=1e-4)
    assert slotted_collision_probability(D_A, 10**18) < 1e-11
    with pytest.raises(SlotTooShort):
        slotted_collision_probability(D_A, 2 * D_A)


def test_utilization_simple():
    assert channel_utilization("PI_SYMMETRIC", t_a=10 * MS, d_a=D_A) == pytest.approx(0.0368)
    assert channel_utilization(UtilizationKind.SLOTTED, active=2, period=200, d_a=D_A, d_sl=10 * MS) == pytest.approx(
        2 * 2 * D_A / (200 * 10 * MS))


def test_searchlight_utilization_matches_schedule_enumeration():
    """Count beacons in an explicit Searchlight-S hyper-period."""
    t = 40
    eta = 2 / t
    slots = [0] * (t * t)
    for period in range(t):
        slots[period * t] = 1  # anchor
        probe = 1 + (period % (t // 2))
        slots[period * t + probe] = 1
    airtime = 2 * D_A * sum(slots)
    expected = airtime / (len(slots) * 10 * MS)
    assert searchlight_utilization(eta, D_A, 10 * MS) == pytest.approx(expected)


def test_pi_utilization_below_four_percent_and_above_searchlight():
    for eta in eta_grid(0.01, 0.2, 0.01):
        sol = derive_best(OptimizerRequest(eta))
        u = channel_utilization("PI_SYMMETRIC", config=sol.config)
        assert u < 0.04
        assert u > searchlight_utilization(eta, D_A, 10 * MS)


def test_nihao_rounding():
    m = nihao_m(0.01, D_A, 10 * MS)
    assert m == round((1 + 2 * D_A / (10 * MS)) / 0.02)
    assert nihao_duty_cycle(m, D_A, 10 * MS) == pytest.approx(0.01, rel=0.01)
    u = channel_utilization("G_NIHAO", eta=0.01, d_a=D_A, d_sl=10 * MS)
    assert u == pytest.approx(D_A / (m * 10 * MS))


def test_self_gain_is_one():
    grid = eta_grid(0.01, 0.05, 0.01)

    def pi(eta):
        return derive_best(OptimizerRequest(eta)).d_m

    assert gain_series(grid, pi, pi) == [1.0] * len(grid)


def test_gain_table_single_point_and_csv():
    table = gain_table([0.02])
    assert len(table.rows) == len(BASELINE_ORDER)
    assert {r.protocol for r in table.rows} == set(BASELINE_ORDER)
    buf = io.StringIO()
    write_gain_csv(table, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(GAIN_CSV_COLUMNS)
    assert len([l for l in lines[1:] if l.startswith("0.02,")]) == 6
    disco = next(r for r in table.rows if r.protocol is Protocol.DISCO)
    assert disco.gain == pytest.approx(disco.d_m_slotted / disco.d_m_pikm)
    assert disco.gain_guarded <= disco.gain


def test_gain_table_doubling_slot_length():
    a = gain_table([0.03], guarded=False)
    b = gain_table([0.03], d_sl=20 * MS, guarded=False)
    for ra, rb in zip(a.rows, b.rows):
        if ra.protocol is not Protocol.G_NIHAO:
            assert abs(rb.d_m_slotted - 2 * ra.d_m_slotted) <= 2


def test_eta_grid():
    g = eta_grid(0.01, 0.2, 0.001)
    assert len(g) == 191 and g[0] == 0.01 and g[-1] == 0.2
    assert eta_grid(0.05, 0.05, 0.001) == [0.05]


def test_granularity_degenerate():
    pi, nihao = granularity_study(0.02, 0.02, 0.001)
    assert len(pi) == 1 and len(nihao) == 1


def test_granularity_small_sweep():
    pi, nihao = granularity_study(0.001, 0.2, 0.005, radio=RadioParams())
    grid = eta_grid(0.001, 0.2, 0.005)
    assert all(abs(a - t) / t <= 1e-3 for a, t in zip(pi, grid))
    assert len(set(nihao)) == len(nihao) < len(grid)
