"""Procedural per-episode maps: road network, base area, obstacles, targets.

Generation is a pure function of (seed, scenario): draws happen in a frozen
order (roads, then base, then obstacles) so replays can rebuild the exact map
from the episode header. Degenerate sampling never aborts an episode; the map
is emitted with fewer obstacles and a diagnostic flag instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    Aabb,
    RngStream,
    Vec2,
    aabb_aabb_distance,
    aabb_point_distance,
    bearing,
    segment_aabb_distance,
)
from .scenarios import Challenge, ScenarioConfig

ARENA_SIZE = 1000.0

ROAD_GRID_N = 5
ROAD_GRID_PITCH = 200.0
ROAD_NODE_JITTER = 40.0
ROAD_EDGE_KEEP_PROB = 0.5

OBSTACLE_COUNTS = {
    Challenge.SIMPLE_FLEET: 0,
    Challenge.FLEET: 8,
    Challenge.COMPLEX_FLEET: 15,
}
OBSTACLE_SIDE_MIN = 40.0
OBSTACLE_SIDE_MAX = 120.0
OBSTACLE_CLEARANCE = 25.0
ROAD_CLEARANCE = 10.0
OBSTACLE_MAX_ATTEMPTS = 200

BASE_HALF_EXTENT = 50.0

TARGET_CLEARANCE = 10.0
TARGET_MAX_ATTEMPTS = 500

FLAG_OBSTACLES_DROPPED = "obstacle_sampling_exhausted"
FLAG_TARGET_UNCHECKED = "target_sampling_exhausted"


@dataclass(slots=True)
class RoadGraph:
    """Connected road network; provisioners may only move along its edges."""

    nodes: list[Vec2]
    edges: list[tuple[int, int, float]]  # (node a, node b, length), a < b
    # Per node: edge indices sorted by outgoing bearing, ascending.
    adjacency: list[list[int]] = field(default_factory=list)

    def edge_other(self, edge_idx: int, node: int) -> int:
        a, b, _ = self.edges[edge_idx]
        return b if node == a else a

    def outgoing_bearing(self, edge_idx: int, node: int) -> float:
        return bearing(self.nodes[node], self.nodes[self.edge_other(edge_idx, node)])

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def rebuild_adjacency(self) -> None:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for idx, (a, b, _) in enumerate(self.edges):
            adj[a].append(idx)
            adj[b].append(idx)
        for node, edge_ids in enumerate(adj):
            edge_ids.sort(key=lambda e: (self.outgoing_bearing(e, node), e))
        self.adjacency = adj


@dataclass(slots=True)
class BaseArea:
    """Square recharge/deposit area."""

    center: Vec2
    half_extent: float

    def footprint(self) -> Aabb:
        h = self.half_extent
        return Aabb(
            Vec2(self.center.x - h, self.center.y - h),
            Vec2(self.center.x + h, self.center.y + h),
        )

    def contains(self, p: Vec2) -> bool:
        return (
            abs(p.x - self.center.x) <= self.half_extent
            and abs(p.y - self.center.y) <= self.half_extent
        )


@dataclass(slots=True)
class ObstacleSet:
    boxes: list[Aabb]

    def __iter__(self):
        return iter(self.boxes)

    def __len__(self) -> int:
        return len(self.boxes)

    def clearance(self, p: Vec2) -> float:
        """Distance from p to the nearest box; inf when there are none."""
        if not self.boxes:
            return math.inf
        return min(aabb_point_distance(box, p) for box in self.boxes)


@dataclass(slots=True)
class ScenarioMap:
    arena: Aabb
    base: BaseArea | None
    obstacles: ObstacleSet
    roads: RoadGraph | None
    flags: list[str] = field(default_factory=list)


def _union_find_root(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def generate_road_graph(rng: RngStream, arena: Aabb) -> RoadGraph:
    """Jittered 5x5 grid: a random spanning tree plus coin-flip extra edges.

    Draw order: node jitter (x then y, node index ascending), candidate-edge
    shuffle, then one retention draw per non-tree candidate.
    """
    n = ROAD_GRID_N
    width = arena.max.x - arena.min.x
    height = arena.max.y - arena.min.y
    ox = arena.min.x + (width - (n - 1) * ROAD_GRID_PITCH) / 2.0
    oy = arena.min.y + (height - (n - 1) * ROAD_GRID_PITCH) / 2.0

    nodes: list[Vec2] = []
    for k in range(n * n):
        col = k % n
        row = k // n
        jx = rng.uniform_range(-ROAD_NODE_JITTER, ROAD_NODE_JITTER)
        jy = rng.uniform_range(-ROAD_NODE_JITTER, ROAD_NODE_JITTER)
        nodes.append(Vec2(ox + col * ROAD_GRID_PITCH + jx, oy + row * ROAD_GRID_PITCH + jy))

    candidates: list[tuple[int, int]] = []
    for k in range(n * n):
        col = k % n
        row = k // n
        if col < n - 1:
            candidates.append((k, k + 1))
        if row < n - 1:
            candidates.append((k, k + n))
    rng.shuffle(candidates)

    parent = list(range(n * n))
    edges: list[tuple[int, int, float]] = []
    for a, b in candidates:
        ra = _union_find_root(parent, a)
        rb = _union_find_root(parent, b)
        if ra != rb:
            parent[ra] = rb
        elif rng.uniform() >= ROAD_EDGE_KEEP_PROB:
            continue
        edges.append((a, b, nodes[a].distance_to(nodes[b])))

    graph = RoadGraph(nodes=nodes, edges=edges)
    graph.rebuild_adjacency()
    return graph


def _obstacle_ok(box: Aabb, accepted: list[Aabb], base: BaseArea | None, roads: RoadGraph | None) -> bool:
    for other in accepted:
        if aabb_aabb_distance(box, other) < OBSTACLE_CLEARANCE:
            return False
    if base is not None and aabb_aabb_distance(box, base.footprint()) < OBSTACLE_CLEARANCE:
        return False
    if roads is not None:
        for a, b, _ in roads.edges:
            if segment_aabb_distance(roads.nodes[a], roads.nodes[b], box) < ROAD_CLEARANCE:
                return False
    return True


def generate_map(rng: RngStream, scenario: ScenarioConfig) -> ScenarioMap:
    """Build the episode map; draw order is roads, base, obstacles."""
    arena = Aabb(Vec2(0.0, 0.0), Vec2(ARENA_SIZE, ARENA_SIZE))
    challenge = scenario.challenge

    roads = generate_road_graph(rng, arena) if challenge is Challenge.COMPLEX_FLEET else None

    base = None
    if challenge in (Challenge.FLEET, Challenge.COMPLEX_FLEET):
        cx = rng.uniform_range(BASE_HALF_EXTENT, ARENA_SIZE - BASE_HALF_EXTENT)
        cy = rng.uniform_range(BASE_HALF_EXTENT, ARENA_SIZE - BASE_HALF_EXTENT)
        base = BaseArea(center=Vec2(cx, cy), half_extent=BASE_HALF_EXTENT)

    flags: list[str] = []
    boxes: list[Aabb] = []
    for _ in range(OBSTACLE_COUNTS[challenge]):
        placed = False
        for _attempt in range(OBSTACLE_MAX_ATTEMPTS):
            w = rng.uniform_range(OBSTACLE_SIDE_MIN, OBSTACLE_SIDE_MAX)
            h = rng.uniform_range(OBSTACLE_SIDE_MIN, OBSTACLE_SIDE_MAX)
            x = rng.uniform_range(0.0, ARENA_SIZE - w)
            y = rng.uniform_range(0.0, ARENA_SIZE - h)
            box = Aabb(Vec2(x, y), Vec2(x + w, y + h))
            if _obstacle_ok(box, boxes, base, roads):
                boxes.append(box)
                placed = True
                break
        if not placed and FLAG_OBSTACLES_DROPPED not in flags:
            flags.append(FLAG_OBSTACLES_DROPPED)

    return ScenarioMap(
        arena=arena,
        base=base,
        obstacles=ObstacleSet(boxes),
        roads=roads,
        flags=flags,
    )


def spawn_target(rng: RngStream, scenario_map: ScenarioMap, flags: list[str] | None = None) -> Vec2:
    """Uniform arena point, resampled until clear of obstacles and base.

    After TARGET_MAX_ATTEMPTS the last sample is accepted regardless and a
    diagnostic flag is appended; spawning never fails.
    """
    arena = scenario_map.arena
    base = scenario_map.base
    boxes = scenario_map.obstacles.boxes
    p = Vec2(0.0, 0.0)
    for _ in range(TARGET_MAX_ATTEMPTS):
        p = Vec2(
            rng.uniform_range(arena.min.x, arena.max.x),
            rng.uniform_range(arena.min.y, arena.max.y),
        )
        if base is not None and base.contains(p):
            continue
        ok = True
        for box in boxes:
            if aabb_point_distance(box, p) < TARGET_CLEARANCE:
                ok = False
                break
        if ok:
            return p
    if flags is not None and FLAG_TARGET_UNCHECKED not in flags:
        flags.append(FLAG_TARGET_UNCHECKED)
    return p
