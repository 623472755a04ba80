"""Slotted baselines: worst-case latency bounds, collision probability,
channel utilization, and the gain / granularity comparisons against the
best slotless family.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TextIO

from .errors import EtaOutOfRange, SlotTooShort, UnsupportedProtocol
from .model import NS_PER_MS, PiConfig, Protocol, RadioParams, SlottedSpec, round_half_away
from .optimizer import OptimizerRequest, apply_skew_guards, derive_best

DEFAULT_D_SL = 10 * NS_PER_MS
BASELINE_ORDER = (
    Protocol.DISCO,
    Protocol.UCONNECT,
    Protocol.SEARCHLIGHT_S,
    Protocol.OPT_DIFFCODES,
    Protocol.LIGHTNING,
    Protocol.G_NIHAO,
)


def _check_eta(eta: float) -> None:
    if not 0 < eta < 1:
        raise EtaOutOfRange(f"duty-cycle {eta} outside (0, 1)")


def lightning_n(eta: float) -> int:
    """Lightning's period parameter from its published approximation."""
    return max(1, round_half_away((0.0021 * math.sqrt(25600 * eta + 2109) + 0.095) / eta))


def searchlight_period(eta: float) -> int:
    """Slots per Searchlight-S period: two active slots give ``eta = 2/t``."""
    return max(2, math.floor(2 / eta))


def slotted_latency_slots(spec: SlottedSpec, eta: float, searchlight_literal: bool = False) -> float:
    """Worst-case latency in slots (``d_m / d_sl``)."""
    _check_eta(eta)
    p = spec.protocol
    if p is Protocol.DISCO:
        # Both primes idealized to the same value.
        return 4 / eta**2
    if p is Protocol.UCONNECT:
        return (math.sqrt(1 / (2 * eta) + 9 / (16 * eta**2)) + 3 / (4 * eta)) ** 2
    if p is Protocol.SEARCHLIGHT_S:
        if searchlight_literal:
            return math.ceil(math.floor(1 / eta) / 2)
        t = searchlight_period(eta)
        # Striped probing covers half a period per hyper-period: about t^2/4 slots.
        return t * math.ceil(t / 4)
    if p is Protocol.OPT_DIFFCODES:
        return 1 / (2 * eta**2)
    if p is Protocol.LIGHTNING:
        beta, delta = spec.param("beta"), spec.param("delta")
        n = lightning_n(eta)
        num = n * (1 + delta) + (n - 1) * delta * beta + 1 + 2 * delta
        den = (
            eta
            - ((1 - delta) * beta + delta) / (2 * n * (n + 1))
            - (delta + beta * (1 - delta)) / (2 * (n + 1))
        )
        if den <= 0:
            raise EtaOutOfRange(f"Lightning bound undefined at eta={eta}")
        return num / den
    if p is Protocol.G_NIHAO:
        g = spec.param("gamma_ratio")
        beta = _beta(spec)
        a = (1 + beta * g) / (2 * g * eta)
        return (a + math.sqrt(a - beta)) ** 2 * g
    raise UnsupportedProtocol(str(p))  # pragma: no cover - enum is closed


# Beacon duration used for G-Nihao when a spec carries no ``d_a`` parameter.
_DEFAULT_D_A = RadioParams().d_a


def _beta(spec: SlottedSpec) -> float:
    d_a = spec.params.get("d_a", _DEFAULT_D_A)
    return d_a / spec.d_sl


def slotted_latency(spec: SlottedSpec, eta: float, searchlight_literal: bool = False) -> int:
    """Worst-case discovery latency in ns (rounded up)."""
    if not isinstance(spec.protocol, Protocol):
        raise UnsupportedProtocol(str(spec.protocol))
    return math.ceil(slotted_latency_slots(spec, eta, searchlight_literal) * spec.d_sl)


def slotted_collision_probability(d_a: int, d_sl: int) -> Fraction:
    """Chance that a beacon overlaps a foreign beacon in a slot of length ``d_sl``."""
    if d_sl < 3 * d_a:
        raise SlotTooShort(f"slot {d_sl} ns shorter than 3 beacons ({3 * d_a} ns)")
    return Fraction(3 * d_a, 3 * d_a + d_sl)


# --------------------------------------------------------------------------
# channel utilization

class UtilizationKind(str, enum.Enum):
    PI_SYMMETRIC = "PI_SYMMETRIC"
    SLOTTED = "SLOTTED"
    G_NIHAO = "G_NIHAO"


def nihao_m(eta: float, d_a: int, d_sl: int, gamma_ratio: float = 2.0) -> int:
    """G-Nihao beacon spacing ``m`` (slots) realizing ``eta``, rounded.

    Per period of ``gamma_ratio * m`` slots a device listens one full slot and
    sends ``gamma_ratio`` beacons, one every ``m`` slots.
    """
    beta = d_a / d_sl
    return max(1, round_half_away((1 + gamma_ratio * beta) / (gamma_ratio * eta)))


def nihao_duty_cycle(m: int, d_a: int, d_sl: int, gamma_ratio: float = 2.0) -> float:
    beta = d_a / d_sl
    return (1 + gamma_ratio * beta) / (gamma_ratio * m)


def channel_utilization(kind: UtilizationKind | str, **params) -> float:
    """Transmit airtime fraction of one device.

    * ``PI_SYMMETRIC``: ``config`` (a PiConfig) or ``t_a`` and ``d_a``.
    * ``SLOTTED``: ``active`` slots per ``period`` slots, ``d_a``, ``d_sl``;
      every active slot carries two beacons.
    * ``G_NIHAO``: ``eta``, ``d_a``, ``d_sl`` and optional ``gamma_ratio``.
    """
    kind = UtilizationKind(kind)
    if kind is UtilizationKind.PI_SYMMETRIC:
        cfg: PiConfig | None = params.get("config")
        t_a = cfg.t_a if cfg is not None else params["t_a"]
        d_a = cfg.d_a if cfg is not None else params["d_a"]
        return d_a / t_a
    if kind is UtilizationKind.SLOTTED:
        return 2 * params["active"] * params["d_a"] / (params["period"] * params["d_sl"])
    m = nihao_m(params["eta"], params["d_a"], params["d_sl"], params.get("gamma_ratio", 2.0))
    return params["d_a"] / (m * params["d_sl"])


def searchlight_utilization(eta: float, d_a: int, d_sl: int) -> float:
    return channel_utilization(
        UtilizationKind.SLOTTED, active=2, period=searchlight_period(eta), d_a=d_a, d_sl=d_sl
    )


# --------------------------------------------------------------------------
# gain table

@dataclass(frozen=True)
class GainRow:
    eta: float
    protocol: Protocol
    d_m_slotted: int
    d_m_pikm: int
    gain: float
    d_m_pikm_guarded: int | None = None
    gain_guarded: float | None = None


@dataclass(frozen=True)
class GainSummary:
    mean_gain: float
    max_gain: float
    mean_gain_guarded: float | None = None
    max_gain_guarded: float | None = None


@dataclass
class GainTable:
    rows: list[GainRow] = field(default_factory=list)
    summary: dict[Protocol, GainSummary] = field(default_factory=dict)


def gain_series(grid: Sequence[float], slotted: Callable[[float], float],
                reference: Callable[[float], float]) -> list[float]:
    """``slotted(eta) / reference(eta)`` over ``grid``."""
    return [slotted(e) / reference(e) for e in grid]


def eta_grid(eta_min: float, eta_max: float, step: float) -> list[float]:
    """Inclusive grid built from integer step counts (no accumulated drift)."""
    if step <= 0:
        raise ValueError("step must be positive")
    if eta_max < eta_min:
        raise ValueError("eta_max below eta_min")
    n = int(math.floor((eta_max - eta_min) / step + 1e-9))
    return [round(eta_min + i * step, 12) for i in range(n + 1)]


def gain_table(grid: Iterable[float], radio: RadioParams = RadioParams(), d_sl: int = DEFAULT_D_SL,
               guarded: bool = True, searchlight_literal: bool = False,
               protocols: Sequence[Protocol] = BASELINE_ORDER) -> GainTable:
    """Gains of every baseline over the best slotless family per duty-cycle."""
    table = GainTable()
    per: dict[Protocol, list[GainRow]] = {p: [] for p in protocols}
    for eta in grid:
        sol = derive_best(OptimizerRequest(eta_target=eta, radio=radio))
        d_pi = sol.d_m
        d_pi_g = apply_skew_guards(sol, radio).d_m if guarded else None
        for p in protocols:
            spec = SlottedSpec(p, d_sl=d_sl, params={"d_a": radio.d_a} if p is Protocol.G_NIHAO else {})
            d_sl_lat = slotted_latency(spec, eta, searchlight_literal)
            row = GainRow(
                eta=eta, protocol=p, d_m_slotted=d_sl_lat, d_m_pikm=d_pi, gain=d_sl_lat / d_pi,
                d_m_pikm_guarded=d_pi_g, gain_guarded=(d_sl_lat / d_pi_g) if d_pi_g else None,
            )
            table.rows.append(row)
            per[p].append(row)
    for p, rows in per.items():
        if not rows:
            continue
        gains = [r.gain for r in rows]
        g_star = [r.gain_guarded for r in rows if r.gain_guarded is not None]
        table.summary[p] = GainSummary(
            mean_gain=sum(gains) / len(gains),
            max_gain=max(gains),
            mean_gain_guarded=sum(g_star) / len(g_star) if g_star else None,
            max_gain_guarded=max(g_star) if g_star else None,
        )
    return table


GAIN_CSV_COLUMNS = ("eta", "protocol", "d_m_slotted_ns", "d_m_pikm_ns", "gain",
                    "d_m_pikm_guarded_ns", "gain_guarded")


def write_gain_csv(table: GainTable, fh: TextIO, summary: bool = True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(GAIN_CSV_COLUMNS)
    for r in table.rows:
        w.writerow([
            repr(r.eta), r.protocol.value, r.d_m_slotted, r.d_m_pikm, f"{r.gain:.6f}",
            "" if r.d_m_pikm_guarded is None else r.d_m_pikm_guarded,
            "" if r.gain_guarded is None else f"{r.gain_guarded:.6f}",
        ])
    if summary:
        w.writerow([])
        w.writerow(["protocol", "mean_gain", "max_gain", "mean_gain_guarded", "max_gain_guarded"])
        for p, s in table.summary.items():
            w.writerow([
                p.value, f"{s.mean_gain:.4f}", f"{s.max_gain:.4f}",
                "" if s.mean_gain_guarded is None else f"{s.mean_gain_guarded:.4f}",
                "" if s.max_gain_guarded is None else f"{s.max_gain_guarded:.4f}",
            ])


# --------------------------------------------------------------------------
# duty-cycle granularity

def granularity_study(eta_min: float, eta_max: float, step: float,
                      radio: RadioParams = RadioParams(), d_sl: int = DEFAULT_D_SL,
                      gamma_ratio: float = 2.0) -> tuple[list[float], list[float]]:
    """(achieved slotless duty-cycles per target, sorted distinct G-Nihao duty-cycles)."""
    if not 0 < eta_min <= eta_max < 1:
        raise EtaOutOfRange("need 0 < eta_min <= eta_max < 1")
    grid = [eta_min] if eta_min == eta_max else eta_grid(eta_min, eta_max, step)
    pi = [derive_best(OptimizerRequest(eta_target=e, radio=radio)).eta_achieved for e in grid]
    ms = {nihao_m(e, radio.d_a, d_sl, gamma_ratio) for e in grid}
    nihao = sorted(nihao_duty_cycle(m, radio.d_a, d_sl, gamma_ratio) for m in ms)
    return pi, nihao
