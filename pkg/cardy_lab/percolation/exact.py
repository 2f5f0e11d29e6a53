"""Exhaustive enumeration over all colorings of tiny domains, and brute-force oracles
that the fast engine routines are compared against."""

from __future__ import annotations
from collections import deque
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from cardy_lab.lattice.domain import DiscreteDomain
from cardy_lab.lattice.geometry import NEIGHBOR_OFFSETS, positions as _positions
from cardy_lab.models.exceptions import TooManySites, WrongMarkedPointCount
from cardy_lab.models.structures import ArmSpec, Color
from cardy_lab.percolation.engine import (
    Configuration,
    separation_arcs,
)


MAX_ENUMERATED_SITES = 24


def _check_size(dd: DiscreteDomain, limit: int = MAX_ENUMERATED_SITES) -> None:
    if dd.n_sites > limit:
        raise TooManySites(
            f"Enumeration is limited to {limit} sites, the domain has {dd.n_sites}."
        )


def configurations(dd: DiscreteDomain, limit: int = MAX_ENUMERATED_SITES) -> Iterator[Configuration]:
    """All 2^n configurations; bit s of the configuration number is the color of site s."""
    _check_size(dd, limit)
    n = dd.n_sites
    bits = np.arange(n, dtype=np.int64)
    for number in range(1 << n):
        yield Configuration(dd, (number >> bits) & 1)


def enumerate_exact(
    dd: DiscreteDomain,
    event: Callable[[Configuration], bool],
    limit: int = MAX_ENUMERATED_SITES,
) -> Fraction:
    """Exact probability of `event` under the critical measure."""
    hits = sum(1 for cfg in configurations(dd, limit) if event(cfg))
    return Fraction(hits, 1 << dd.n_sites)


# oracles


def bfs_labels(cfg: Configuration, color: Color) -> np.ndarray:
    """Cluster labels by breadth-first search, -1 for sites of the other color."""
    dd = cfg.domain
    wanted = cfg.colors if color == Color.OPEN else ~cfg.colors
    labels = np.full(dd.n_sites, -1, dtype=np.int64)
    current = 0
    for start in range(dd.n_sites):
        if not wanted[start] or labels[start] >= 0:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            s = queue.popleft()
            for t in dd.neighbors[s]:
                if t >= 0 and wanted[t] and labels[t] < 0:
                    labels[t] = current
                    queue.append(t)
        current += 1
    return labels


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two labelings describe the same clusters, up to renaming."""
    if not np.array_equal(a < 0, b < 0):
        return False
    pairs = set(zip(a[a >= 0].tolist(), b[b >= 0].tolist()))
    return len(pairs) == len({p for p, _ in pairs}) == len({q for _, q in pairs})


def simple_paths(
    dd: DiscreteDomain, allowed: np.ndarray, starts: np.ndarray, is_end: np.ndarray, stop_at_end: bool = False
) -> Iterator[tuple[int, ...]]:
    """Simple paths through allowed sites from a start site to a site flagged by `is_end`."""
    for start in starts:
        start = int(start)
        if not allowed[start]:
            continue
        stack = [(start, (start,))]
        while stack:
            s, path = stack.pop()
            if is_end[s]:
                yield path
                if stop_at_end:
                    continue
            visited = set(path)
            for t in dd.neighbors[s]:
                t = int(t)
                if t >= 0 and allowed[t] and t not in visited:
                    stack.append((t, path + (t,)))


def separating_oracle(cfg: Configuration, k: int) -> np.ndarray:
    """Separating indicators from every simple open path between the two arcs.

    Each path is tried alone on the domain padded with its exterior ring. It blocks the
    lattice edges between its consecutive sites, the edges from its first site to the ring
    part of the start arc and from its last site to the ring part of the end arc; the ring
    parts of those two arcs are walls. A dual vertex is separated when it cannot reach a
    face touching the ring part of the far arc.
    """
    dd = cfg.domain
    if dd.n_arcs != 3:
        raise WrongMarkedPointCount("Separating events need exactly 3 marked points.")
    start, end, far = separation_arcs(k)
    ring = dd.exterior
    padded = ring.domain
    labels = ring.labels
    p, q = padded.face_edges[:, 2], padded.face_edges[:, 3]
    codes = np.minimum(p, q) * padded.n_sites + np.maximum(p, q)
    walls = np.isin(labels, (start, end))
    walled = walls[p] & walls[q]
    seeds = (labels[padded.face_corners] == far).any(axis=1)
    result = np.zeros(dd.n_faces, dtype=bool)
    starts = np.flatnonzero(ring.touch[:, start] & cfg.colors)
    for path in simple_paths(dd, cfg.colors, starts, ring.touch[:, end]):
        ids = ring.inner[list(path)]
        first, last = ids[0], ids[-1]
        steps = np.minimum(ids[:-1], ids[1:]) * padded.n_sites + np.maximum(ids[:-1], ids[1:])
        blocked_edge = walled | np.isin(codes, steps)
        blocked_edge |= ((p == first) & (labels[q] == start)) | ((q == first) & (labels[p] == start))
        blocked_edge |= ((p == last) & (labels[q] == end)) | ((q == last) & (labels[p] == end))
        result |= _unreached_by_edges(padded, blocked_edge, seeds)[ring.faces]
        if result.all():
            break
    return result


def _unreached_by_edges(dd: DiscreteDomain, blocked_edge: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    reached = seeds.copy()
    queue = deque(np.flatnonzero(seeds).tolist())
    adjacency: dict[int, list[int]] = {}
    for (fa, fb, _, _), blocked in zip(dd.face_edges, blocked_edge):
        if not blocked:
            adjacency.setdefault(int(fa), []).append(int(fb))
            adjacency.setdefault(int(fb), []).append(int(fa))
    while queue:
        f = queue.popleft()
        for g in adjacency.get(f, ()):
            if not reached[g]:
                reached[g] = True
                queue.append(g)
    return ~reached


def arm_oracle(cfg: Configuration, spec: ArmSpec) -> bool:
    """Search for `spec.k` pairwise disjoint monochromatic crossings of alternating colors,
    ordered counter-clockwise by the angle of their inner end."""
    dd = cfg.domain
    inside, inner, outer, key = _sector_sites(dd, spec)
    crossings: list[tuple[float, float, Color, frozenset[int]]] = []
    for color in (Color.OPEN, Color.CLOSED):
        allowed = inside & (cfg.colors if color == Color.OPEN else ~cfg.colors)
        for path in simple_paths(dd, allowed, np.flatnonzero(inner & allowed), outer, stop_at_end=True):
            s = path[0]
            crossings.append((key[s, 0], key[s, 1], color, frozenset(path)))
    crossings.sort(key=lambda c: (c[0], c[1]))
    if not spec.full_turn:
        return _alternating(crossings, [], spec)
    # around a full turn any crossing may come first
    return any(
        _alternating(crossings[shift:] + crossings[:shift], [], spec) for shift in range(len(crossings))
    )


def _sector_sites(dd: DiscreteDomain, spec: ArmSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sector membership from polar coordinates of the site centers; inner and outer sites
    have a lattice neighbor strictly inside radius r or strictly beyond radius R."""
    tolerance = 1e-9 * max(spec.outer_radius, 1.0)
    w = dd.positions - spec.center
    radius = np.abs(w)
    turn = np.mod(np.angle(w) - spec.start_angle, 2 * np.pi)
    # sites on the start ray may land just below 2π
    turn[turn > 2 * np.pi - tolerance] = 0.0
    inside = (radius >= spec.inner_radius - tolerance) & (radius <= spec.outer_radius + tolerance)
    if not spec.full_turn:
        on_end_ray = np.abs(turn - spec.angle) <= tolerance
        inside &= (turn <= spec.angle) | on_end_ray
    inner = np.zeros(dd.n_sites, dtype=bool)
    outer = np.zeros(dd.n_sites, dtype=bool)
    for di, dj in NEIGHBOR_OFFSETS:
        reach = np.abs(_positions(dd.i + di, dd.j + dj, dd.mesh) - spec.center)
        inner |= reach < spec.inner_radius
        outer |= reach > spec.outer_radius
    return inside, inner & inside, outer & inside, np.column_stack((turn, radius))


def _alternating(crossings: list, chosen: list, spec: ArmSpec) -> bool:
    if len(chosen) == spec.k:
        return True
    used = frozenset().union(*(c[3] for c in chosen))
    for index, candidate in enumerate(crossings):
        if candidate[3] & used:
            continue
        if chosen and candidate[2] == chosen[-1][2]:
            continue
        if not chosen and spec.start_color is not None and candidate[2] != spec.start_color:
            continue
        if _alternating(crossings[index + 1:], chosen + [candidate], spec):
            return True
    return False
