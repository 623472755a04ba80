"""Independent brute-force references used by the tests.

Pure Python and deliberately naive: no numpy, no code shared with the package.
"""

from __future__ import annotations


def one_way_latency(phi: int, t_a: int, t_s: int, d_s: int, d_a: int, n_max: int) -> int | None:
    """Latency of beacons at ``phi + n t_a`` into windows ``[j t_s, j t_s + d_s]``.

    Walks beacons one by one and checks the enclosing window explicitly.
    """
    for n in range(n_max):
        t = phi + n * t_a
        j = t // t_s
        if t + d_a <= j * t_s + d_s:
            return n * t_a + d_a
    return None


def worst_case(t_a: int, t_s: int, d_s: int, d_a: int, n_max: int) -> int | None:
    """Maximum of ``one_way_latency`` over all integer offsets in [0, t_s).

    Latency only changes where a beacon crosses a window edge, so it suffices
    to probe those offsets together with their neighbours.
    """
    candidates = {0, t_s - 1}
    for n in range(n_max):
        for edge in (0, d_s - d_a, d_s - d_a + 1):
            base = (edge - n * t_a) % t_s
            for delta in (-1, 0, 1):
                candidates.add((base + delta) % t_s)
    worst = 0
    for phi in candidates:
        lat = one_way_latency(phi, t_a, t_s, d_s, d_a, n_max)
        if lat is None:
            return None
        worst = max(worst, lat)
    return worst


def received(beacon: int, d_a: int, windows: list[tuple[int, int]], own_beacons: list[int], d_a_rx: int) -> bool:
    """Interval-overlap check: beacon inside a window and clear of the
    receiver's own transmissions."""
    inside = any(s <= beacon and beacon + d_a <= e for s, e in windows)
    clash = any(u < beacon + d_a and beacon < u + d_a_rx for u in own_beacons)
    return inside and not clash
