"""Brute-force continuous-time oracle for a pair of slotless devices.

Two tools live here:

* ``simulate_pair`` / ``monte_carlo`` build explicit beacon and scan-window
  timelines for two devices (optionally skewed, with collisions and
  half-duplex interruption) and look for the first successful reception in
  each direction.
* ``sweep_offsets`` computes the clean one-direction latency for *every*
  integer initial offset of a symmetric pair. Latency is piecewise constant in
  the offset, with breakpoints where some beacon crosses a window edge, so the
  sweep evaluates one offset per piece and weights it by the piece length.

A device that starts at ``offset`` sends its k-th beacon and opens its k-th
scan window at ``offset + k * interval`` (scaled by its clock skew).
Latencies are measured from the instant both devices are active and end when
the received beacon is complete.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import InvalidConfig, InvalidOffset, OrderViolation, StepTooCoarse, SweepTimeout
from .latency import worst_case_bound
from .model import INFINITE, CdfCurve, PiConfig

DEFAULT_STEP_NS = 1_000
MAX_SKEW_PPM = 500.0


class _Timeout(enum.Enum):
    TIMEOUT = "TIMEOUT"

    def __repr__(self) -> str:
        return "TIMEOUT"


TIMEOUT = _Timeout.TIMEOUT


@dataclass(frozen=True)
class Timeline:
    beacons: np.ndarray  # int64 transmit start times
    windows: np.ndarray  # int64 array of shape (n, 2): [start, end]
    skew_applied: float
    d_a: int


@dataclass(frozen=True)
class SimOutcome:
    latency_ab: int | _Timeout
    latency_ba: int | _Timeout
    collisions: int
    offset_a: int
    offset_b: int

    @property
    def both_active(self) -> int:
        return max(self.offset_a, self.offset_b)

    @property
    def latency(self) -> int | _Timeout:
        """Time until the first of the two directions succeeds."""
        vals = [v for v in (self.latency_ab, self.latency_ba) if v is not TIMEOUT]
        return min(vals) if vals else TIMEOUT

    def from_first_start(self, latency: int | _Timeout) -> int | _Timeout:
        """Re-reference a latency to the instant the *first* device started."""
        if latency is TIMEOUT:
            return TIMEOUT
        return latency + self.both_active - min(self.offset_a, self.offset_b)

    def to_json(self) -> dict:
        def enc(v):
            return None if v is TIMEOUT else int(v)

        return {
            "latency_ab_ns": enc(self.latency_ab),
            "latency_ba_ns": enc(self.latency_ba),
            "collisions": self.collisions,
            "offset_a_ns": self.offset_a,
            "offset_b_ns": self.offset_b,
        }


# --------------------------------------------------------------------------
# timelines

def _event_times(offset: int, interval: int, count: int, skew_ppm: float) -> np.ndarray:
    k = np.arange(count, dtype=np.int64)
    base = k * np.int64(interval)
    if skew_ppm:
        # Multiplicative drift, rounded per event, so errors never accumulate.
        base = base + np.rint(base.astype(np.float64) * (skew_ppm * 1e-6)).astype(np.int64)
    return base + np.int64(offset)


def _count_before(offset: int, interval: int, horizon: int, skew_ppm: float) -> int:
    if horizon <= offset:
        return 0
    scale = 1 + skew_ppm * 1e-6
    n = math.ceil((horizon - offset) / (interval * scale)) + 1
    return max(n, 0)


def build_timeline(cfg: PiConfig, offset: int, skew_ppm: float = 0.0, horizon: int = 0) -> Timeline:
    """Beacons and scan windows of one device from ``offset`` up to ``horizon``."""
    if abs(skew_ppm) > MAX_SKEW_PPM:
        raise InvalidConfig(f"|skew| must be at most {MAX_SKEW_PPM} ppm")
    if horizon <= 0:
        raise InvalidConfig("horizon must be positive")
    period = cfg.t_s if cfg.t_s is not INFINITE else cfg.t_a
    if not 0 <= offset < period:
        raise InvalidOffset(f"offset {offset} outside [0, {period})")
    if cfg.t_a is INFINITE:
        beacons = np.zeros(0, dtype=np.int64)
    else:
        b = _event_times(offset, cfg.t_a, _count_before(offset, cfg.t_a, horizon, skew_ppm), skew_ppm)
        beacons = b[b < horizon]
    if cfg.t_s is INFINITE:
        windows = np.zeros((0, 2), dtype=np.int64)
    else:
        s = _event_times(offset, cfg.t_s, _count_before(offset, cfg.t_s, horizon, skew_ppm), skew_ppm)
        s = s[s < horizon]
        windows = np.stack([s, s + np.int64(cfg.d_s)], axis=1)
    return Timeline(beacons=beacons, windows=windows, skew_applied=skew_ppm, d_a=cfg.d_a)


def _overlaps(t: np.ndarray, d_t: int, other: np.ndarray, d_o: int) -> np.ndarray:
    """For each interval [t, t+d_t] whether it overlaps some [u, u+d_o]."""
    if other.size == 0 or t.size == 0:
        return np.zeros(t.shape, dtype=bool)
    # The overlapping candidates are the last ``u`` before ``t + d_t``.
    idx = np.searchsorted(other, t + d_t, side="left") - 1
    hit = np.zeros(t.shape, dtype=bool)
    # Two candidates suffice while beacon spacing exceeds the beacon duration.
    for back in (0, 1):
        j = idx - back
        u = other[np.clip(j, 0, None)]
        hit |= (j >= 0) & (u + d_o > t)
    return hit


def _received(tx: Timeline, rx: Timeline, block_rx_beacons: bool) -> np.ndarray:
    """Mask of tx beacons fully inside one of rx's windows (and, if requested,
    not overlapping any rx transmission)."""
    t = tx.beacons
    if t.size == 0 or rx.windows.shape[0] == 0:
        return np.zeros(t.shape, dtype=bool)
    starts = rx.windows[:, 0]
    idx = np.searchsorted(starts, t, side="right") - 1
    valid = idx >= 0
    ends = rx.windows[np.clip(idx, 0, None), 1]
    ok = valid & (t + tx.d_a <= ends)
    if block_rx_beacons:
        ok &= ~_overlaps(t, tx.d_a, rx.beacons, rx.d_a)
    return ok


def default_horizon(cfg: PiConfig) -> int:
    """Twice the closed-form bound plus one scan interval (one extra interval
    for the start offset)."""
    period = cfg.t_s if cfg.t_s is not INFINITE else cfg.t_a
    try:
        bound = worst_case_bound(cfg).d_m
    except (OrderViolation, InvalidConfig):
        bound = 50 * period
    return 2 * bound + 2 * period


def simulate_pair(cfg_a: PiConfig, cfg_b: PiConfig, offset_b: int, offset_a: int = 0,
                  skew_a: float = 0.0, skew_b: float = 0.0, collisions: bool = True,
                  half_duplex: bool = True, horizon: int | None = None) -> SimOutcome:
    """First successful reception in each direction for one pair of offsets.

    ``collisions``: a beacon overlapping any foreign transmission is lost,
    and every overlapping pair before both directions succeed is counted.
    ``half_duplex``: a receiver cannot hear while it transmits itself. In a
    two-device setting both rules block the same beacons.
    """
    if horizon is None:
        horizon = max(default_horizon(cfg_a), default_horizon(cfg_b)) + max(offset_a, offset_b)
    tl_a = build_timeline(cfg_a, offset_a, skew_a, horizon)
    tl_b = build_timeline(cfg_b, offset_b, skew_b, horizon)
    start = max(offset_a, offset_b)
    block = collisions or half_duplex

    def first(tx: Timeline, rx: Timeline) -> int | _Timeout:
        ok = _received(tx, rx, block)
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            return TIMEOUT
        return int(tx.beacons[hits[0]]) + tx.d_a - start

    lat_ab = first(tl_a, tl_b)
    lat_ba = first(tl_b, tl_a)
    n_coll = 0
    if collisions:
        ends = [v + start for v in (lat_ab, lat_ba) if v is not TIMEOUT]
        done = max(ends) if len(ends) == 2 else horizon
        mask = _overlaps(tl_a.beacons, tl_a.d_a, tl_b.beacons, tl_b.d_a) & (tl_a.beacons < done)
        n_coll = int(mask.sum())
    return SimOutcome(lat_ab, lat_ba, n_coll, offset_a, offset_b)


def sweep_pair(cfg_a: PiConfig, cfg_b: PiConfig, offsets: Iterable[int], **opts) -> list[SimOutcome]:
    """``simulate_pair`` for every ``offset_b`` in order."""
    return [simulate_pair(cfg_a, cfg_b, int(o), **opts) for o in offsets]


# --------------------------------------------------------------------------
# clean offset sweep

def _finite(cfg: PiConfig) -> tuple[int, int, int, int]:
    if cfg.t_a is INFINITE or cfg.t_s is INFINITE:
        raise InvalidConfig("the offset sweep needs a symmetric schedule")
    return cfg.t_a, cfg.t_s, cfg.d_s, cfg.d_a


def _beacon_budget(cfg: PiConfig, horizon: int | None) -> int:
    t_a, t_s = cfg.t_a, cfg.t_s
    if horizon is None:
        horizon = default_horizon(cfg)
    return max(1, horizon // t_a + 1)


def offset_latencies(cfg: PiConfig, offsets: np.ndarray, n_max: int) -> np.ndarray:
    """Clean one-direction latency for each offset (``-1`` if undiscovered).

    The later device starts ``offset`` after the earlier one; its n-th beacon
    at ``offset + n t_a`` is caught iff it starts at most ``d_s - d_a`` after
    the beginning of a scan window of the earlier device.
    """
    t_a, t_s, d_s, d_a = _finite(cfg)
    slack = d_s - d_a
    offsets = np.asarray(offsets, dtype=np.int64)
    out = np.full(offsets.shape, -1, dtype=np.int64)
    pending = np.arange(offsets.size)
    for n in range(n_max):
        if pending.size == 0:
            break
        pos = (offsets[pending] + np.int64(n) * t_a) % t_s
        hit = pos <= slack
        out[pending[hit]] = n * t_a + d_a
        pending = pending[~hit]
    return out


def offset_pieces(cfg: PiConfig, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Start and length of every constant-latency offset interval in [0, t_s)."""
    t_a, t_s, d_s, d_a = _finite(cfg)
    slack = d_s - d_a
    n = np.arange(n_max, dtype=np.int64)
    edges = np.concatenate([(-n * t_a) % t_s, (slack + 1 - n * t_a) % t_s, [0]])
    starts = np.unique(edges)
    lengths = np.diff(np.append(starts, t_s))
    return starts, lengths


def sweep_offsets(cfg: PiConfig, step: int = DEFAULT_STEP_NS, exact: bool = True,
                  horizon: int | None = None) -> CdfCurve:
    """Latency distribution over initial offsets uniform on [0, t_s).

    ``exact`` evaluates one offset per constant-latency piece, which covers
    every integer offset; otherwise a uniform grid of ``step`` is used.
    Collisions and half-duplex losses are excluded (clean worst case).
    """
    t_a, t_s, d_s, d_a = _finite(cfg)
    if step < 1:
        raise StepTooCoarse("step must be at least 1 ns")
    if step > d_a:
        raise StepTooCoarse(f"step {step} ns exceeds the beacon duration {d_a} ns")
    n_max = _beacon_budget(cfg, horizon)
    if exact:
        offsets, weights = offset_pieces(cfg, n_max)
    else:
        offsets = np.arange(0, t_s, step, dtype=np.int64)
        weights = np.ones(offsets.shape, dtype=np.int64)
    lat = offset_latencies(cfg, offsets, n_max)
    if (lat < 0).any():
        bad = int(offsets[np.argmax(lat < 0)])
        raise SweepTimeout(f"offset {bad} ns undiscovered within {n_max} beacons")
    return CdfCurve.from_weighted(lat.tolist(), weights.tolist())


# --------------------------------------------------------------------------
# Monte Carlo

def _trial(cfg: PiConfig, seed: int, i: int, collisions: bool, half_duplex: bool,
           skew_range: float, horizon: int | None) -> SimOutcome:
    rng = np.random.default_rng([seed, i])
    period = cfg.t_s if cfg.t_s is not INFINITE else cfg.t_a
    off_a, off_b = (int(x) for x in rng.integers(0, period, size=2))
    skew_a, skew_b = (float(x) for x in rng.uniform(-skew_range, skew_range, size=2)) if skew_range else (0.0, 0.0)
    return simulate_pair(cfg, cfg, off_b, offset_a=off_a, skew_a=skew_a, skew_b=skew_b,
                         collisions=collisions, half_duplex=half_duplex, horizon=horizon)


def monte_carlo(cfg: PiConfig, trials: int, seed: int, collisions: bool = True,
                half_duplex: bool = True, skew_ppm_range: float = 0.0,
                horizon: int | None = None, workers: int = 1) -> list[SimOutcome]:
    """Symmetric pair with both start offsets uniform on [0, t_s).

    Trial ``i`` draws from its own generator seeded with ``(seed, i)``, so the
    result does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if horizon is None:
        horizon = default_horizon(cfg) + (cfg.t_s if cfg.t_s is not INFINITE else cfg.t_a)
    args = (collisions, half_duplex, skew_ppm_range, horizon)
    if workers <= 1:
        return [_trial(cfg, seed, i, *args) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _trial(cfg, seed, i, *args), range(trials)))


def collision_affected_fraction(outcomes: Sequence[SimOutcome]) -> float:
    return sum(1 for o in outcomes if o.collisions > 0) / len(outcomes)


# --------------------------------------------------------------------------
# export

def write_cdf_csv(curve: CdfCurve, fh: TextIO) -> None:
    fh.write("latency_ns,cum_prob\n")
    for lat, p in curve.points:
        fh.write(f"{lat},{p!r}\n")


def write_outcomes_jsonl(outcomes: Iterable[SimOutcome], fh: TextIO) -> None:
    for o in outcomes:
        fh.write(json.dumps(o.to_json(), sort_keys=True) + "\n")
