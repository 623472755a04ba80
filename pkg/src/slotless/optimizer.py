"""Latency-optimal parameters for a target duty-cycle.

Each family fixes the schedule shape through integers ``k`` (beacons per scan
interval) and ``M`` (ceiling index) so that ``t_s`` sits one ``eps`` below a
ceiling flip. What remains is choosing ``k``/``M`` near the analytic optimum
of the latency-duty-cycle product, subject to ``d_s >= d_s_min``, and then
finding the scan window that realizes the target duty-cycle.

The scan window is solved on the exact integer schedule (``eps`` included),
as the smallest ``d_s`` whose exact duty-cycle does not exceed the target.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

from .errors import GuardExceedsWindow, InfeasibleEta, InvalidConfig, OrderViolation, RangesEmpty
from .latency import (
    construct_pi0m,
    construct_pikm,
    pi0m_closed_form,
    pi_km_closed_form,
    worst_case_bound,
)
from .model import (
    INFINITE,
    VARIANT_ORDER,
    PiConfig,
    RadioParams,
    Variant,
    VariantSolution,
    ceil_div,
    ceil_to,
    duty_cycle,
    duty_cycle_exact,
    round_half_away,
)

BEST = "BEST"


class EtaAdjWarning(UserWarning):
    """PI0M requested above the duty-cycle where the ``M_max`` clamp starts to
    cost latency; the solution is still returned."""


@dataclass(frozen=True)
class OptimizerRequest:
    eta_target: float
    radio: RadioParams = RadioParams()
    eps: int | None = None
    variant: Variant | str = BEST

    def __post_init__(self) -> None:
        if not 0 < self.eta_target < 1:
            raise InvalidConfig("eta_target must lie in (0, 1)")

    @property
    def eps_ns(self) -> int:
        return self.radio.tick if self.eps is None else self.eps


@dataclass(frozen=True)
class EtaLimits:
    eta_max: float
    eta_adj: float | None = None


# --------------------------------------------------------------------------
# limits

def _eta_max_pi0m(d_a: float, d_sl: float) -> float:
    return (d_a + math.sqrt(d_a * d_sl)) / (d_sl - d_a)


def _eta_adj_pi0m(d_a: float, d_sl: float) -> float:
    # Duty-cycle at which the unconstrained optimum M_opt meets M_max.
    root = math.sqrt(d_a * d_a - 6 * d_a * d_sl + d_sl * d_sl)
    return (d_sl + d_a - root) / (2 * (d_sl - d_a))


def _eta_max_kM(d_a: float, d_sl: float, M: int) -> float:
    base = 3 * d_a + math.sqrt(d_a * (d_a + 8 * d_sl))
    return base / (4 * (M + 1) * (d_sl - d_a))


LIMIT_FORMULAS = {
    Variant.PI0M: "eta_max = (d_a + sqrt(d_a d_sl)) / (d_sl - d_a)",
    Variant.PIK1P: "eta_max = (3 d_a + sqrt(d_a (d_a + 8 d_sl))) / (8 (d_sl - d_a))",
    Variant.PIK2P: "eta_max = (3 d_a + sqrt(d_a (d_a + 8 d_sl))) / (12 (d_sl - d_a))",
}


def eta_limits(variant: Variant | str, radio: RadioParams = RadioParams()) -> EtaLimits:
    variant = Variant(variant)
    d_a, d_sl = float(radio.d_a), float(radio.d_s_min)
    if variant is Variant.PI0M:
        return EtaLimits(_eta_max_pi0m(d_a, d_sl), _eta_adj_pi0m(d_a, d_sl))
    M = 1 if variant is Variant.PIK1P else 2
    return EtaLimits(_eta_max_kM(d_a, d_sl, M))


def _check_limit(variant: Variant, eta: float, radio: RadioParams) -> None:
    limit = eta_limits(variant, radio).eta_max
    if eta > limit:
        raise InfeasibleEta(
            f"{variant.value} cannot realize eta={eta:.4%}: limit is {limit:.4%} "
            f"({LIMIT_FORMULAS[variant]})",
            limit=limit,
            formula=LIMIT_FORMULAS[variant],
        )


# --------------------------------------------------------------------------
# scan-window solve

def d_s_closed_form(variant: Variant, k: int, M: int, eta: float, d_a: int) -> float:
    """Scan window realizing ``eta`` with ``eps = 0`` (continuous form)."""
    if variant is Variant.PI0M:
        return d_a + d_a * (M + 2) / (eta * (M + 1) - 1)
    x = k * (M + 1) - 1
    return x * d_a * (1 + eta * (M + 1)) / ((M + 1) * (eta * x - 1))


def _solve_d_s(build: Callable[[int], PiConfig], target: Fraction, start: int, d_a: int) -> int:
    """Smallest integer ``d_s`` whose exact duty-cycle is ``<= target``.

    The duty-cycle is non-increasing in ``d_s`` for every family here, so an
    exponential search followed by bisection is enough.
    """

    def ok(d_s: int) -> bool:
        try:
            cfg = build(d_s)
        except InvalidConfig:
            return False
        return duty_cycle_exact(cfg) <= target

    lo = max(d_a + 1, start - 1)
    # Walk down until infeasible so that ``lo`` is a strict lower bound.
    step = 1
    while lo > d_a + 1 and ok(lo):
        lo = max(d_a + 1, lo - step)
        step *= 2
    if ok(lo):
        return lo
    hi = max(lo + 1, start)
    step = 1
    while not ok(hi):
        lo = hi
        hi += step
        step *= 2
        if hi > 10**15:
            raise RangesEmpty("no scan window realizes the target duty-cycle")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _builder(variant: Variant, k: int, M: int, d_a: int, eps: int, eps_ta: int = 0):
    if variant is Variant.PI0M:
        def build(d_s: int) -> PiConfig:
            slack = d_s - d_a
            t_a = slack - eps_ta
            if t_a <= d_a:
                raise InvalidConfig("guard leaves no advertising interval")
            return PiConfig(t_a=t_a, t_s=slack + M * t_a - eps, d_s=d_s, d_a=d_a)
    else:
        def build(d_s: int) -> PiConfig:
            cfg = construct_pikm(k, M, d_s, d_a, eps)
            if eps_ta:
                t_a = cfg.t_a - ceil_div(eps_ta, k)
                cfg = PiConfig(t_a=t_a, t_s=cfg.t_s, d_s=d_s, d_a=d_a)
            return cfg
    return build


def _finish(variant: Variant, k: int, M: int, eta: float, radio: RadioParams,
            eps: int, clamped: list[str]) -> VariantSolution:
    d_a = radio.d_a
    start = math.ceil(d_s_closed_form(variant, k, M, eta, d_a))
    build = _builder(variant, k, M, d_a, eps)
    d_s = _solve_d_s(build, Fraction(eta), start, d_a)
    if d_s < radio.d_s_min:
        raise RangesEmpty(f"solved scan window {d_s} ns is below d_s_min")
    cfg = build(d_s)
    if variant is Variant.PI0M:
        d_m = pi0m_closed_form(M, d_s, radio)
    else:
        d_m = pi_km_closed_form(k, M, d_s, radio, eps)
    return VariantSolution(
        variant=variant, k=k, M=M, config=cfg, eta_achieved=duty_cycle(cfg), d_m=d_m,
        clamped=tuple(clamped), eps=eps, eps_ta=0, eta_target=eta,
    )


# --------------------------------------------------------------------------
# families

def pi0m_bounds(eta: float, radio: RadioParams) -> tuple[float, float, float]:
    """(M_opt, M_min, M_max) for PI0M; ``M_max`` is ``inf`` below the
    duty-cycle where the scan-window floor starts to bind."""
    d_a, d_sl = float(radio.d_a), float(radio.d_s_min)
    m_opt = (math.sqrt(1 - eta * eta) + 1) / eta - 1
    m_min = 1 / eta - 1
    if eta > d_a / (d_sl - d_a):
        m_max = (d_sl * (eta - 1) - d_a * (eta + 1)) / (d_a * (eta + 1) - eta * d_sl)
    else:
        m_max = math.inf
    return m_opt, m_min, m_max


def derive_pi0m(req: OptimizerRequest, warn: bool = True) -> VariantSolution:
    eta, radio = req.eta_target, req.radio
    _check_limit(Variant.PI0M, eta, radio)
    limits = eta_limits(Variant.PI0M, radio)
    if warn and limits.eta_adj is not None and eta > limits.eta_adj:
        warnings.warn(
            f"eta={eta:.4%} is above eta_adj={limits.eta_adj:.4%}; M is clamped and "
            "latency grows faster than the duty-cycle",
            EtaAdjWarning,
            stacklevel=2,
        )
    m_opt, m_min, m_max = pi0m_bounds(eta, radio)
    clamped: list[str] = []
    if m_opt <= m_max:
        M = round_half_away(m_opt)
    else:
        M = math.floor(m_max)
        clamped.append("M_max")
    if M <= m_min:
        M = math.floor(m_min) + 1
        clamped.append("M_min")
    if M > m_max or M < 1:
        raise RangesEmpty(f"no integer M in ({m_min:.3f}, {m_max:.3f}]")
    return _finish(Variant.PI0M, 1, M, eta, radio, req.eps_ns, clamped)


def pik1_bounds(eta: float, radio: RadioParams) -> tuple[float, float, float]:
    """(k_opt, k_min, k_l) for PI-k1+; ``k`` must satisfy ``k_min < k <= k_l``."""
    d_a, d_sl = float(radio.d_a), float(radio.d_s_min)
    k_opt = (1 + math.sqrt((1 - eta) * (1 + 2 * eta))) / (2 * eta) + 0.5
    k_min = 1 / (2 * eta) + 0.5
    if eta > d_a / (2 * (d_sl - d_a)):
        k_l = (2 * d_sl * (1 + eta) - d_a * (1 + 2 * eta)) / (4 * eta * d_sl - 2 * d_a * (1 + 2 * eta))
    else:
        k_l = math.inf
    return k_opt, k_min, k_l


def pik2_bounds(eta: float, radio: RadioParams, M: int = 2) -> tuple[float, float, float]:
    """(k_opt, k_min, k_max) for PI-k2+; ``k`` must satisfy ``k_min < k <= k_max``."""
    d_a, d_sl = float(radio.d_a), float(radio.d_s_min)
    m1 = M + 1
    k_opt = 1 / m1 + (math.sqrt((1 - eta) * (eta * m1 + 1)) + 1) / (eta * m1)
    k_min = (eta + 1) / (eta * m1)
    denom = m1 * eta * d_sl - (m1 * eta + 1) * d_a
    k_max = d_sl / denom + 1 / m1 if denom > 0 else math.inf
    return k_opt, k_min, k_max


def _pick_k(k_opt: float, k_min: float, k_hi: float, hi_name: str) -> tuple[int, list[str]]:
    clamped: list[str] = []
    k = round_half_away(k_opt)
    if k <= k_min:
        k = math.floor(k_min) + 1
        clamped.append("k_min")
    if k > k_hi:
        k = math.floor(k_hi)
        clamped.append(hi_name)
    if k <= k_min or k > k_hi or k < 2:
        raise RangesEmpty(f"no integer k in ({k_min:.3f}, {k_hi:.3f}]")
    return k, clamped


def derive_pik1(req: OptimizerRequest) -> VariantSolution:
    eta, radio = req.eta_target, req.radio
    _check_limit(Variant.PIK1P, eta, radio)
    k_opt, k_min, k_l = pik1_bounds(eta, radio)
    k, clamped = _pick_k(k_opt, k_min, k_l, "k_l")
    return _finish(Variant.PIK1P, k, 1, eta, radio, req.eps_ns, clamped)


def derive_pik2(req: OptimizerRequest) -> VariantSolution:
    eta, radio = req.eta_target, req.radio
    _check_limit(Variant.PIK2P, eta, radio)
    k_opt, k_min, k_max = pik2_bounds(eta, radio)
    k, clamped = _pick_k(k_opt, k_min, k_max, "k_max")
    return _finish(Variant.PIK2P, k, 2, eta, radio, req.eps_ns, clamped)


_DERIVERS = {
    Variant.PI0M: lambda req: derive_pi0m(req, warn=False),
    Variant.PIK1P: derive_pik1,
    Variant.PIK2P: derive_pik2,
}


def derive_best(req: OptimizerRequest) -> VariantSolution:
    """Lowest-latency feasible family; ties go to the earlier family."""
    best: VariantSolution | None = None
    errors: list[Exception] = []
    for variant in VARIANT_ORDER:
        try:
            sol = _DERIVERS[variant](req)
        except (InfeasibleEta, RangesEmpty) as exc:
            errors.append(exc)
            continue
        if best is None or sol.d_m < best.d_m:
            best = sol
    if best is None:
        first = next((e for e in errors if isinstance(e, InfeasibleEta)), None)
        limit = max((e.limit for e in errors if isinstance(e, InfeasibleEta) and e.limit), default=None)
        raise InfeasibleEta(
            f"no family realizes eta={req.eta_target:.4%}"
            + (f"; largest limit is {limit:.4%} ({first.formula})" if first and limit else ""),
            limit=limit,
            formula=LIMIT_FORMULAS[Variant.PI0M],
        )
    return best


def derive(req: OptimizerRequest) -> VariantSolution:
    if req.variant == BEST:
        return derive_best(req)
    variant = Variant(req.variant)
    if variant is Variant.PI0M:
        return derive_pi0m(req)
    return _DERIVERS[variant](req)


# --------------------------------------------------------------------------
# clock-skew guards

def skew_guard(t_s: int, radio: RadioParams) -> int:
    """``2 psi t_s`` rounded up to whole ticks (both clocks may drift apart)."""
    raw = Fraction(2) * Fraction(radio.skew_ppm) * t_s / 10**6
    if raw == 0:
        return 0
    return ceil_to(math.ceil(raw), radio.tick)


def apply_skew_guards(sol: VariantSolution, radio: RadioParams = RadioParams()) -> VariantSolution:
    """Rebuild ``sol`` with ``t_s`` shortened by ``eps = max(tick, eps_ta)`` and
    the advertising interval shortened by ``eps_ta = 2 psi t_s``.

    The scan window is re-solved for the original target duty-cycle, which
    changes ``t_s`` and hence the guard, so the guard is iterated until it no
    longer grows.
    """
    target = sol.eta_target if sol.eta_target is not None else sol.eta_achieved
    d_a = radio.d_a
    t_s = sol.config.t_s
    if t_s is INFINITE:
        raise InvalidConfig("guards need a finite scan interval")
    eps_ta = skew_guard(t_s, radio)
    for _ in range(64):
        eps = max(radio.tick, eps_ta)
        if eps_ta >= sol.config.d_s - d_a:
            raise GuardExceedsWindow(
                f"skew guard {eps_ta} ns is not smaller than the slack {sol.config.d_s - d_a} ns"
            )
        build = _builder(sol.variant, sol.k, sol.M, d_a, eps, eps_ta)
        start = math.ceil(d_s_closed_form(sol.variant, sol.k, sol.M, target, d_a))
        d_s = _solve_d_s(build, Fraction(target), start, d_a)
        cfg = build(d_s)
        needed = skew_guard(cfg.t_s, radio)
        if needed <= eps_ta:
            break
        eps_ta = needed
    else:  # pragma: no cover - the guard grows monotonically and converges fast
        raise GuardExceedsWindow("skew guard did not converge")
    if eps_ta >= d_s - d_a:
        raise GuardExceedsWindow(f"skew guard {eps_ta} ns is not smaller than the slack {d_s - d_a} ns")
    if sol.variant is Variant.PI0M:
        d_m = sol.M * cfg.t_a + d_a
    else:
        try:
            d_m = worst_case_bound(cfg).d_m
        except OrderViolation as exc:
            raise GuardExceedsWindow(f"guarded schedule leaves order 1: {exc}") from exc
    return replace(
        sol, config=cfg, eta_achieved=duty_cycle(cfg), d_m=d_m, eps=eps, eps_ta=eps_ta,
        eta_target=target,
    )


# --------------------------------------------------------------------------
# one-way discovery

def one_way_split(sol: VariantSolution) -> tuple[PiConfig, PiConfig]:
    """(advertiser, scanner): the same parameters with the unused role removed.

    Their duty-cycles add up to the symmetric one.
    """
    cfg = sol.config
    advertiser = PiConfig(t_a=cfg.t_a, t_s=INFINITE, d_s=cfg.d_s, d_a=cfg.d_a)
    scanner = PiConfig(t_a=INFINITE, t_s=cfg.t_s, d_s=cfg.d_s, d_a=cfg.d_a)
    return advertiser, scanner


__all__ = [
    "BEST", "EtaAdjWarning", "OptimizerRequest", "EtaLimits", "eta_limits", "derive",
    "derive_pi0m", "derive_pik1", "derive_pik2", "derive_best", "apply_skew_guards",
    "one_way_split", "skew_guard", "d_s_closed_form", "pi0m_bounds", "pik1_bounds",
    "pik2_bounds", "construct_pi0m",
]
