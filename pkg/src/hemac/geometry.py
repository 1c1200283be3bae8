"""Planar geometry primitives and the seeded deterministic random stream.

Everything downstream (map generation, dynamics, sensing, policies) builds on
the small vocabulary defined here: 2D vectors, axis-aligned boxes, sector
fields of view, and an explicitly specified PRNG so that two runs with the
same seed are bit-identical across machines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
TWO_PI = 2.0 * math.pi


@dataclass(slots=True)
class Vec2:
    """A point or displacement in metres. Components must stay finite."""

    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(slots=True)
class Aabb:
    """Axis-aligned box with min <= max on both axes."""

    min: Vec2
    max: Vec2

    def contains(self, p: Vec2) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.min.x, self.min.y, self.max.x, self.max.y)


@dataclass(slots=True)
class SectorFov:
    """Range-limited angular sensor. half_angle == pi means full 360 degrees."""

    range: float
    half_angle: float


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = (a + math.pi) % TWO_PI - math.pi
    if w == -math.pi:
        return math.pi
    return w


def bearing(origin: Vec2, point: Vec2) -> float:
    """Bearing from origin to point in (-pi, pi]; 0 when the points coincide."""
    dx = point.x - origin.x
    dy = point.y - origin.y
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap_angle(math.atan2(dy, dx))


def in_sector(origin: Vec2, heading: float, fov: SectorFov, point: Vec2) -> bool:
    """True iff point is within range and angular aperture; origin always is."""
    dx = point.x - origin.x
    dy = point.y - origin.y
    if dx == 0.0 and dy == 0.0:
        return True
    if dx * dx + dy * dy > fov.range * fov.range:
        return False
    diff = wrap_angle(math.atan2(dy, dx) - heading)
    return abs(diff) <= fov.half_angle


def aabb_closest_point(box: Aabb, p: Vec2) -> Vec2:
    """Closest point of the box (boundary or interior) to p."""
    return Vec2(
        min(max(p.x, box.min.x), box.max.x),
        min(max(p.y, box.min.y), box.max.y),
    )


def aabb_point_distance(box: Aabb, p: Vec2) -> float:
    """Distance from p to the box; 0 when p lies inside."""
    dx = max(box.min.x - p.x, 0.0, p.x - box.max.x)
    dy = max(box.min.y - p.y, 0.0, p.y - box.max.y)
    return math.hypot(dx, dy)


def aabb_aabb_distance(a: Aabb, b: Aabb) -> float:
    """Separation distance between two boxes; 0 when they touch or overlap."""
    dx = max(a.min.x - b.max.x, 0.0, b.min.x - a.max.x)
    dy = max(a.min.y - b.max.y, 0.0, b.min.y - a.max.y)
    return math.hypot(dx, dy)


def circle_aabb_overlap(center: Vec2, radius: float, box: Aabb) -> bool:
    """True iff the disc of given radius touches or overlaps the box."""
    dx = max(box.min.x - center.x, 0.0, center.x - box.max.x)
    dy = max(box.min.y - center.y, 0.0, center.y - box.max.y)
    return dx * dx + dy * dy <= radius * radius


def segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> float:
    """Distance from p to the closest point of segment [a, b]."""
    abx = b.x - a.x
    aby = b.y - a.y
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return math.hypot(p.x - a.x, p.y - a.y)
    t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / denom
    t = min(max(t, 0.0), 1.0)
    return math.hypot(p.x - (a.x + t * abx), p.y - (a.y + t * aby))


def _segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool:
    def orient(a: Vec2, b: Vec2, c: Vec2) -> float:
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)

    def on_seg(a: Vec2, b: Vec2, c: Vec2) -> bool:
        return (
            min(a.x, b.x) <= c.x <= max(a.x, b.x)
            and min(a.y, b.y) <= c.y <= max(a.y, b.y)
        )

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4):
        return True
    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


def segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> float:
    """Minimum distance between two segments."""
    if _segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        segment_point_distance(p1, p2, q1),
        segment_point_distance(p1, p2, q2),
        segment_point_distance(q1, q2, p1),
        segment_point_distance(q1, q2, p2),
    )


def segment_aabb_distance(a: Vec2, b: Vec2, box: Aabb) -> float:
    """Minimum distance between segment [a, b] and the box; 0 on contact."""
    if box.contains(a) or box.contains(b):
        return 0.0
    c0 = Vec2(box.min.x, box.min.y)
    c1 = Vec2(box.max.x, box.min.y)
    c2 = Vec2(box.max.x, box.max.y)
    c3 = Vec2(box.min.x, box.max.y)
    best = math.inf
    for e0, e1 in ((c0, c1), (c1, c2), (c2, c3), (c3, c0)):
        d = segment_segment_distance(a, b, e0, e1)
        if d == 0.0:
            return 0.0
        if d < best:
            best = d
    return best


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class RngStream:
    """xoshiro256++ stream seeded through SplitMix64 expansion.

    The draw sequence for a given seed is part of the engine contract:
    replays and remote sessions rely on it being identical everywhere.
    Never share one stream between concurrently stepping environments.
    """

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        sm = seed & _MASK64
        sm, self.s0 = _splitmix64(sm)
        sm, self.s1 = _splitmix64(sm)
        sm, self.s2 = _splitmix64(sm)
        sm, self.s3 = _splitmix64(sm)

    def next_u64(self) -> int:
        s0 = self.s0
        s1 = self.s1
        s2 = self.s2
        s3 = self.s3
        tmp = (s0 + s3) & _MASK64
        result = (((tmp << 23) | (tmp >> 41)) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self.s0 = s0
        self.s1 = s1
        self.s2 = s2
        self.s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        s0 = self.s0
        s1 = self.s1
        s2 = self.s2
        s3 = self.s3
        tmp = (s0 + s3) & _MASK64
        result = (((tmp << 23) | (tmp >> 41)) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self.s0 = s0
        self.s1 = s1
        self.s2 = s2
        self.s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        return (result >> 11) * 1.1102230246251565e-16  # 2**-53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + self.uniform() * (hi - lo)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.uniform() * n)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def state(self) -> tuple[int, int, int, int]:
        return (self.s0, self.s1, self.s2, self.s3)


def rng_seed(seed: int) -> RngStream:
    """Construct the deterministic stream for a 64-bit seed."""
    return RngStream(seed)
