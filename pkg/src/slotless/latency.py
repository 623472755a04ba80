"""Closed-form worst-case discovery latency of slotless schedules.

A beacon train of period ``t_a`` meets scan windows of period ``t_s``. Between
two scan events the beacon nearest a window edge moves by a constant amount,
which makes the offset a *process*:

* order 0: ``t_a <= d_s - d_a``; some beacon of every train lands in the first
  window it reaches.
* order 1: ``t_a > d_s - d_a`` but the per-scan drift ``gamma`` still fits in
  the slack ``d_s - d_a``. The offset shrinks (left neighbour closer) or grows
  (right neighbour closer) by ``gamma`` per scan until a beacon is caught.

Every ceiling is evaluated on integer nanoseconds, so an exact integer
quotient never rounds up.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import InvalidConfig, OrderViolation, WrongDirection
from .model import INFINITE, PiConfig, RadioParams, Variant, ceil_div


class Direction(str, enum.Enum):
    SHRINK = "SHRINK"
    GROW = "GROW"
    NONE = "NONE"


class Source(str, enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    SWEEP_ORACLE = "SWEEP_ORACLE"


@dataclass(frozen=True)
class LatencyBound:
    d_m: int
    order: int
    direction: Direction
    source: Source = Source.CLOSED_FORM


def _finite(cfg: PiConfig) -> tuple[int, int, int, int]:
    if cfg.t_a is INFINITE or cfg.t_s is INFINITE:
        raise InvalidConfig("symmetric latency needs finite t_a and t_s")
    return cfg.t_a, cfg.t_s, cfg.d_s, cfg.d_a


def worst_case_order0(cfg: PiConfig) -> LatencyBound:
    t_a, t_s, d_s, d_a = _finite(cfg)
    if t_a > d_s - d_a:
        raise OrderViolation(f"order 0 needs t_a <= d_s - d_a ({t_a} > {d_s - d_a})")
    d_m = ceil_div(t_s - d_s + d_a, t_a) * t_a + d_a
    return LatencyBound(d_m=d_m, order=0, direction=Direction.NONE)


def classify_direction(cfg: PiConfig) -> Direction:
    """Shrinking iff the left neighbour (distance ``t_s mod t_a``) is not
    farther than the right one (``t_a - t_s mod t_a``).

    Returns NONE for order-0 schedules. This is a geometric rule; for
    arbitrary schedules the offset sweep remains the authority.
    """
    t_a, t_s, d_s, d_a = _finite(cfg)
    if t_a <= d_s - d_a:
        return Direction.NONE
    rho = t_s % t_a
    return Direction.SHRINK if rho <= t_a - rho else Direction.GROW


def _order1_gamma(cfg: PiConfig, direction: Direction) -> int:
    t_a, t_s, d_s, d_a = _finite(cfg)
    slack = d_s - d_a
    if t_a <= slack:
        raise OrderViolation("schedule is order 0; use worst_case_order0")
    if t_a > t_s:
        raise OrderViolation("order-1 formulas need t_a <= t_s")
    rho = t_s % t_a
    if rho == 0:
        raise OrderViolation("t_s is a multiple of t_a: beacons never drift across windows")
    actual = classify_direction(cfg)
    if actual is not direction:
        raise WrongDirection(f"schedule is of {actual.value} type, not {direction.value}")
    g = rho if direction is Direction.SHRINK else t_a - rho
    if g > slack:
        raise OrderViolation(f"drift per scan {g} exceeds slack {slack}: higher-order process")
    return g


def worst_case_order1_shrink(cfg: PiConfig) -> LatencyBound:
    t_a, t_s, d_s, d_a = _finite(cfg)
    g = _order1_gamma(cfg, Direction.SHRINK)
    d_m = (
        ceil_div(t_s - t_a, t_a) * t_a
        + ceil_div(t_a - (d_s - d_a), g) * (t_s // t_a) * t_a
        + d_a
    )
    return LatencyBound(d_m=d_m, order=1, direction=Direction.SHRINK)


def worst_case_order1_grow(cfg: PiConfig) -> LatencyBound:
    t_a, t_s, d_s, d_a = _finite(cfg)
    g = _order1_gamma(cfg, Direction.GROW)
    d_m = (
        (ceil_div(t_s + d_s - d_a, t_a) - 1) * t_a
        + ceil_div(t_a - d_s + d_a, g) * ceil_div(t_s, t_a) * t_a
        + d_a
    )
    return LatencyBound(d_m=d_m, order=1, direction=Direction.GROW)


def worst_case_bound(cfg: PiConfig) -> LatencyBound:
    """Pick the applicable order-0 / order-1 formula for ``cfg``."""
    direction = classify_direction(cfg)
    if direction is Direction.NONE:
        return worst_case_order0(cfg)
    if direction is Direction.SHRINK:
        return worst_case_order1_shrink(cfg)
    return worst_case_order1_grow(cfg)


def _d_a(radio: RadioParams | int) -> int:
    return radio.d_a if isinstance(radio, RadioParams) else int(radio)


def pi_km_closed_form(k: int, M: int, d_s: int, radio: RadioParams | int, eps: int) -> int:
    """Worst-case latency of the constructed PI-kM schedules.

    Construction: ``t_s = (k(M+1) - 1)(d_s - d_a) - eps`` and
    ``t_a = (t_s + d_s - d_a) / k``. The result is rounded up to the next
    whole nanosecond.
    """
    d_a = _d_a(radio)
    if k < 1 or M < 1:
        raise InvalidConfig("k and M must be positive integers")
    if d_s <= d_a:
        raise InvalidConfig("d_s must exceed d_a")
    if eps < 0:
        raise InvalidConfig("eps must be non-negative")
    slack = d_s - d_a
    if k == 1:
        return (M - 1) * ((M + 1) * slack - eps) + d_a
    n = k * (M + 1)
    return ceil_div((n * slack - eps) * (n - 2), k) + d_a


def pi0m_closed_form(M: int, d_s: int, radio: RadioParams | int) -> int:
    """``M (d_s - d_a) + d_a``: the order-0 bound of ``t_a = d_s - d_a``,
    ``t_s = (M+1)(d_s - d_a) - eps``."""
    d_a = _d_a(radio)
    if M < 1:
        raise InvalidConfig("M must be a positive integer")
    if d_s <= d_a:
        raise InvalidConfig("d_s must exceed d_a")
    return M * (d_s - d_a) + d_a


def worst_case_closed_form(variant: Variant, k: int, M: int, d_s: int,
                           radio: RadioParams | int, eps: int) -> int:
    if variant is Variant.PI0M:
        return pi0m_closed_form(M, d_s, radio)
    return pi_km_closed_form(k, M, d_s, radio, eps)


def construct_pikm(k: int, M: int, d_s: int, d_a: int, eps: int) -> PiConfig:
    """Build the PI-kM schedule for integer ``k, M`` (``t_a`` floored to ns)."""
    slack = d_s - d_a
    t_s = (k * (M + 1) - 1) * slack - eps
    t_a = (t_s + slack) // k
    # Flooring t_a shifts the per-scan drift by up to k-1 ns. For large k that
    # tips one of the ceilings the family relies on, so t_s is pulled back to
    # restore the unrounded construction's margin.
    c = (M + 1) * slack - t_a
    rho = t_s % t_a
    if M == 1 and rho > slack:
        t_s -= rho - (slack - c)
    elif M >= 2 and M * (t_a - rho) < t_a - slack:
        t_s -= (slack - c // M) - (t_a - rho)
    return PiConfig(t_a=t_a, t_s=t_s, d_s=d_s, d_a=d_a)


def construct_pi0m(M: int, d_s: int, d_a: int, eps: int) -> PiConfig:
    slack = d_s - d_a
    return PiConfig(t_a=slack, t_s=(M + 1) * slack - eps, d_s=d_s, d_a=d_a)
