"""Time base and the value types every other module works with.

All durations are plain ``int`` nanoseconds. The only non-integer time value is
the :data:`INFINITE` sentinel, used for the interval of a role a device never
performs (an advertiser-only or scanner-only device).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .errors import InvalidConfig

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

# One period of a 32768 Hz sleep crystal.
CRYSTAL_TICK_NS = 30_518


class _Infinite(enum.Enum):
    INFINITE = "INFINITE"

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = _Infinite.INFINITE
Interval = "int | _Infinite"


def is_infinite(value: object) -> bool:
    return value is INFINITE


_UNITS = {"ns": 1, "us": NS_PER_US, "µs": NS_PER_US, "ms": NS_PER_MS, "s": NS_PER_S}
_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?|\.[0-9]+)\s*(ns|us|µs|ms|s)\s*$")


def parse_duration(text: str) -> int:
    """Parse ``"368us"``, ``"10ms"``, ``"1.5s"`` into integer nanoseconds.

    Bare numbers are rejected on purpose; the unit must always be spelled out.
    """
    m = _DURATION_RE.match(text)
    if not m:
        raise ValueError(f"not a duration with unit (ns/us/ms/s): {text!r}")
    try:
        value = Decimal(m.group(1)) * _UNITS[m.group(2)]
    except InvalidOperation as exc:  # pragma: no cover - regex guards this
        raise ValueError(text) from exc
    if value != value.to_integral_value():
        raise ValueError(f"{text!r} is not a whole number of nanoseconds")
    return int(value)


def format_duration(ns: int | _Infinite) -> str:
    if ns is INFINITE:
        return "inf"
    for unit, scale in (("s", NS_PER_S), ("ms", NS_PER_MS), ("us", NS_PER_US)):
        if abs(ns) >= scale:
            return f"{Fraction(ns, scale).__float__():.6g}{unit}"
    return f"{ns}ns"


def ceil_div(a: int, b: int) -> int:
    """Exact integer ceiling of a/b for b > 0."""
    return -((-a) // b)


def ceil_to(value: int, quantum: int) -> int:
    return ceil_div(value, quantum) * quantum


@dataclass(frozen=True)
class RadioParams:
    """Hardware description: beacon airtime, shortest scan window, clock."""

    d_a: int = 368 * NS_PER_US
    d_s_min: int = 10 * NS_PER_MS
    tick: int = CRYSTAL_TICK_NS
    skew_ppm: float = 20.0
    n_bytes: int | None = 46
    bitrate: int | None = 1_000_000

    def __post_init__(self) -> None:
        if self.d_a <= 0:
            raise InvalidConfig("d_a must be positive")
        if self.d_s_min <= self.d_a:
            raise InvalidConfig("d_s_min must exceed d_a")
        if self.tick <= 0:
            raise InvalidConfig("tick must be positive")
        if self.skew_ppm < 0:
            raise InvalidConfig("skew_ppm must be non-negative")

    @classmethod
    def from_payload(cls, n_bytes: int, bitrate: int, **kwargs: Any) -> "RadioParams":
        d_a = ceil_div(8 * n_bytes * NS_PER_S, bitrate)
        return cls(d_a=d_a, n_bytes=n_bytes, bitrate=bitrate, **kwargs)


@dataclass(frozen=True)
class PiConfig:
    """One device's slotless schedule.

    ``t_a`` and ``t_s`` may be :data:`INFINITE` (never advertises / never
    scans) but not both.
    """

    t_a: int | _Infinite
    t_s: int | _Infinite
    d_s: int
    d_a: int

    def __post_init__(self) -> None:
        validate_config(self)

    @property
    def slack(self) -> int:
        """``d_s - d_a``: the span of beacon start positions a window accepts."""
        return self.d_s - self.d_a

    @property
    def advertises(self) -> bool:
        return self.t_a is not INFINITE

    @property
    def scans(self) -> bool:
        return self.t_s is not INFINITE


def validate_config(cfg: PiConfig) -> None:
    for name in ("t_a", "t_s"):
        v = getattr(cfg, name)
        if v is INFINITE:
            continue
        if isinstance(v, bool) or not isinstance(v, int):
            raise InvalidConfig(f"{name} must be integer nanoseconds, got {v!r}")
        if v <= 0:
            raise InvalidConfig(f"{name} must be positive")
    if cfg.t_a is INFINITE and cfg.t_s is INFINITE:
        raise InvalidConfig("a device must advertise or scan")
    if not isinstance(cfg.d_a, int) or not isinstance(cfg.d_s, int):
        raise InvalidConfig("d_s and d_a must be integer nanoseconds")
    if cfg.d_a <= 0:
        raise InvalidConfig("d_a must be positive")
    if cfg.d_s <= cfg.d_a:
        raise InvalidConfig("scan window must be longer than one beacon")
    if cfg.t_s is not INFINITE and cfg.d_s > cfg.t_s:
        raise InvalidConfig("scan window longer than scan interval")
    if cfg.t_a is not INFINITE and cfg.t_a <= cfg.d_a:
        raise InvalidConfig("advertising interval must exceed beacon duration")


def duty_cycle_exact(cfg: PiConfig) -> Fraction:
    if cfg.t_s is INFINITE:
        return Fraction(cfg.d_a, cfg.t_a)
    if cfg.t_a is INFINITE:
        return Fraction(cfg.d_s, cfg.t_s)
    return Fraction(cfg.t_a * cfg.d_s + cfg.t_s * cfg.d_a, cfg.t_a * cfg.t_s)


def duty_cycle(cfg: PiConfig) -> float:
    """Fraction of time the radio is on (advertising plus scanning)."""
    eta = duty_cycle_exact(cfg)
    if eta > 1:
        raise InvalidConfig(f"duty-cycle {float(eta):.4f} exceeds 1")
    return float(eta)


def gamma(t_a: int, t_s: int) -> int:
    """Distance from a scan event to the next beacon of an aligned train."""
    if t_a is INFINITE or t_s is INFINITE:
        raise InvalidConfig("gamma needs finite intervals")
    if not 0 < t_a <= t_s:
        raise InvalidConfig("gamma requires 0 < t_a <= t_s")
    return ceil_div(t_s, t_a) * t_a - t_s


class Variant(str, enum.Enum):
    PI0M = "PI0M"
    PIK1P = "PIK1P"
    PIK2P = "PIK2P"


VARIANT_ORDER = (Variant.PI0M, Variant.PIK1P, Variant.PIK2P)


@dataclass(frozen=True)
class VariantSolution:
    variant: Variant
    k: int
    M: int
    config: PiConfig
    eta_achieved: float
    d_m: int
    clamped: tuple[str, ...] = ()
    eps: int = CRYSTAL_TICK_NS
    eps_ta: int = 0
    eta_target: float | None = None

    @property
    def guarded(self) -> bool:
        return self.eps_ta > 0


class Protocol(str, enum.Enum):
    DISCO = "DISCO"
    UCONNECT = "UCONNECT"
    SEARCHLIGHT_S = "SEARCHLIGHT_S"
    OPT_DIFFCODES = "OPT_DIFFCODES"
    LIGHTNING = "LIGHTNING"
    G_NIHAO = "G_NIHAO"


DEFAULT_SLOTTED_PARAMS: dict[Protocol, dict[str, float]] = {
    Protocol.LIGHTNING: {"beta": 0.1, "delta": 0.1},
    Protocol.G_NIHAO: {"gamma_ratio": 2.0},
}


@dataclass(frozen=True)
class SlottedSpec:
    protocol: Protocol
    d_sl: int = 10 * NS_PER_MS
    params: dict[str, float] = field(default_factory=dict)

    def param(self, name: str) -> float:
        if name in self.params:
            return self.params[name]
        return DEFAULT_SLOTTED_PARAMS[self.protocol][name]


@dataclass(frozen=True)
class CdfCurve:
    """Discrete latency distribution: ``points`` are (latency_ns, P[L <= latency])."""

    points: tuple[tuple[int, float], ...]
    worst_case: int
    mean: float

    @classmethod
    def from_weighted(cls, latencies: Iterable[int], weights: Iterable[int | float]) -> "CdfCurve":
        acc: dict[int, float] = {}
        for lat, w in zip(latencies, weights):
            acc[int(lat)] = acc.get(int(lat), 0) + w
        if not acc:
            raise ValueError("empty latency sample")
        total = sum(acc.values())
        running = 0
        points = []
        mean = 0.0
        for lat in sorted(acc):
            running += acc[lat]
            mean += lat * acc[lat]
            points.append((lat, running / total))
        lat_last = points[-1][0]
        points[-1] = (lat_last, 1.0)
        return cls(points=tuple(points), worst_case=lat_last, mean=mean / total)

    def max_linear_deviation(self, d_m: int | None = None) -> float:
        """Largest vertical gap between the CDF and the line (0,0)-(d_m,1).

        Both sides of every step are checked, since the CDF jumps there.
        """
        end = d_m if d_m is not None else self.worst_case
        prev = 0.0
        dev = 0.0
        for lat, p in self.points:
            line = min(lat / end, 1.0)
            dev = max(dev, abs(p - line), abs(prev - line))
            prev = p
        return dev


# --------------------------------------------------------------------------
# JSON schema

def _interval_to_json(v: int | _Infinite) -> int | None:
    return None if v is INFINITE else int(v)


def _interval_from_json(v: Any) -> int | _Infinite:
    if v is None:
        return INFINITE
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidConfig(f"durations are integer nanoseconds, got {v!r}")
    return v


def config_to_json(cfg: PiConfig) -> dict[str, Any]:
    return {
        "t_a_ns": _interval_to_json(cfg.t_a),
        "t_s_ns": _interval_to_json(cfg.t_s),
        "d_s_ns": cfg.d_s,
        "d_a_ns": cfg.d_a,
    }


def config_from_json(obj: dict[str, Any]) -> PiConfig:
    return PiConfig(
        t_a=_interval_from_json(obj["t_a_ns"]),
        t_s=_interval_from_json(obj["t_s_ns"]),
        d_s=_interval_from_json(obj["d_s_ns"]),
        d_a=_interval_from_json(obj["d_a_ns"]),
    )


def radio_to_json(radio: RadioParams) -> dict[str, Any]:
    return {
        "d_a_ns": radio.d_a,
        "d_s_min_ns": radio.d_s_min,
        "tick_ns": radio.tick,
        "skew_ppm": radio.skew_ppm,
        "n_bytes": radio.n_bytes,
        "bitrate": radio.bitrate,
    }


def radio_from_json(obj: dict[str, Any]) -> RadioParams:
    """Missing keys fall back to the defaults; a payload without ``d_a_ns``
    derives the beacon duration from ``n_bytes`` and ``bitrate``."""
    base = RadioParams()
    kwargs = {
        "d_s_min": obj.get("d_s_min_ns", base.d_s_min),
        "tick": obj.get("tick_ns", base.tick),
        "skew_ppm": obj.get("skew_ppm", base.skew_ppm),
    }
    if "d_a_ns" not in obj and "n_bytes" in obj and "bitrate" in obj:
        return RadioParams.from_payload(obj["n_bytes"], obj["bitrate"], **kwargs)
    return RadioParams(
        d_a=obj.get("d_a_ns", base.d_a),
        n_bytes=obj.get("n_bytes", base.n_bytes),
        bitrate=obj.get("bitrate", base.bitrate),
        **kwargs,
    )


def slotted_to_json(spec: SlottedSpec) -> dict[str, Any]:
    return {"protocol": spec.protocol.value, "d_sl_ns": spec.d_sl, "params": dict(spec.params)}


def slotted_from_json(obj: dict[str, Any]) -> SlottedSpec:
    return SlottedSpec(
        protocol=Protocol(obj["protocol"]),
        d_sl=int(obj["d_sl_ns"]),
        params=dict(obj.get("params", {})),
    )


def solution_to_json(sol: VariantSolution) -> dict[str, Any]:
    return {
        "variant": sol.variant.value,
        "k": sol.k,
        "M": sol.M,
        "config": config_to_json(sol.config),
        "eta_achieved": sol.eta_achieved,
        "eta_target": sol.eta_target,
        "d_m_ns": sol.d_m,
        "eps_ns": sol.eps,
        "eps_ta_ns": sol.eps_ta,
        "clamped": list(sol.clamped),
    }


def solution_from_json(obj: dict[str, Any]) -> VariantSolution:
    return VariantSolution(
        variant=Variant(obj["variant"]),
        k=int(obj["k"]),
        M=int(obj["M"]),
        config=config_from_json(obj["config"]),
        eta_achieved=float(obj["eta_achieved"]),
        d_m=int(obj["d_m_ns"]),
        clamped=tuple(obj.get("clamped", ())),
        eps=int(obj.get("eps_ns", CRYSTAL_TICK_NS)),
        eps_ta=int(obj.get("eps_ta_ns", 0)),
        eta_target=obj.get("eta_target"),
    )


def round_half_away(x: float) -> int:
    """Round to nearest integer; exact halves go away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def as_ns_list(values: Sequence[int]) -> list[int]:
    return [int(v) for v in values]
