"""Dynamic obstacles: trajectories, occupation intervals, safe intervals and
the earliest collision-free transition query.

Time semantics used throughout the package: occupation intervals are closed,
safe intervals are the closed complement of the merged occupations within
[0, +inf), and interval membership is tested with an absolute tolerance of
``TIME_EPS``.  Departing exactly at the end of a safe interval is legal, and
a move window may touch a blocked edge interval at a single endpoint.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .grid import Cell, Connectivity, GridMap, neighbors, traversal_cells

TIME_EPS = 1e-9
INF = math.inf


@dataclass(frozen=True)
class Interval:
    """Closed time interval [start, end]; end may be +inf."""

    start: float
    end: float

    def contains(self, t: float) -> bool:
        return self.start - TIME_EPS <= t <= self.end + TIME_EPS

    def __repr__(self) -> str:
        return f"[{self.start}, {self.end}]"


FREE = (Interval(0.0, INF),)


def merge_intervals(intervals) -> tuple[Interval, ...]:
    """Merge overlapping or touching closed intervals into a sorted disjoint list."""
    items = sorted(intervals, key=lambda iv: (iv.start, iv.end))
    merged: list[Interval] = []
    for iv in items:
        if merged and iv.start <= merged[-1].end + TIME_EPS:
            if iv.end > merged[-1].end:
                merged[-1] = Interval(merged[-1].start, iv.end)
        else:
            merged.append(iv)
    return tuple(merged)


def complement(occupied) -> tuple[Interval, ...]:
    """Safe intervals over [0, +inf): the closed complement of the occupations.

    Zero-length occupations (instantaneous touches) are dropped; they carry no
    physical meaning and would otherwise split a safe interval at a point.
    """
    merged = merge_intervals(iv for iv in occupied if iv.end - iv.start > TIME_EPS or iv.end == INF)
    safe: list[Interval] = []
    cursor = 0.0
    for iv in merged:
        if iv.end < 0:
            continue
        start = max(iv.start, 0.0)
        if start > cursor + TIME_EPS:
            safe.append(Interval(cursor, start))
        cursor = max(cursor, iv.end)
        if cursor == INF:
            return tuple(safe)
    safe.append(Interval(cursor, INF))
    return tuple(safe)


class SafeIntervalTable:
    """Immutable per-vertex safe intervals plus optional per-directed-edge
    blocked intervals.  Vertices absent from the table are free forever."""

    def __init__(self, vertex_intervals=None, edge_blocked=None):
        self._vertices = dict(vertex_intervals or {})
        self._edges = dict(edge_blocked or {})

    def vertex(self, v) -> tuple[Interval, ...]:
        return self._vertices.get(v, FREE)

    def edge(self, u, v) -> tuple[Interval, ...]:
        return self._edges.get((u, v), ())

    @property
    def constrained_vertices(self):
        return self._vertices.keys()


@dataclass(frozen=True)
class Waypoint:
    cell: Cell
    arrival: float
    departure: float


@dataclass(frozen=True)
class Trajectory:
    """Timed waypoint sequence of one obstacle.  Consecutive waypoints are
    joined by a legal move whose duration is the arrival/departure gap; the
    last departure may be +inf (the obstacle parks forever)."""

    waypoints: tuple[Waypoint, ...]


def occupation_intervals(traj: Trajectory) -> dict[Cell, tuple[Interval, ...]]:
    """Cells occupied by an obstacle, merged per cell.

    While dwelling, the waypoint cell is occupied over [arrival, departure].
    While moving, the source cell, the target cell and every swept cell of
    the move are all occupied for the whole move window (a conservative rule
    that also rules out swap conflicts without separate edge constraints).
    """
    raw: dict[Cell, list[Interval]] = defaultdict(list)
    wps = traj.waypoints
    for i, wp in enumerate(wps):
        raw[wp.cell].append(Interval(wp.arrival, wp.departure))
        if i + 1 < len(wps):
            nxt = wps[i + 1]
            window = Interval(wp.departure, nxt.arrival)
            raw[wp.cell].append(window)
            raw[nxt.cell].append(window)
            for mid in traversal_cells(wp.cell, nxt.cell):
                raw[mid].append(window)
    return {cell: merge_intervals(ivs) for cell, ivs in raw.items()}


def build_safe_intervals(grid: GridMap, obstacles) -> SafeIntervalTable:
    """Safe-interval table for every vertex touched by the given trajectories;
    untouched vertices implicitly keep the single interval [0, +inf)."""
    occupied: dict[Cell, list[Interval]] = defaultdict(list)
    for traj in obstacles:
        for cell, ivs in occupation_intervals(traj).items():
            occupied[cell].extend(ivs)
    return SafeIntervalTable({cell: complement(ivs) for cell, ivs in occupied.items()})


def earliest_transition(
    depart_ready: float,
    source_interval: Interval,
    move_cost: float,
    edge_blocked,
    target_interval: Interval,
) -> float | None:
    """Minimal arrival time for a move, or None if no departure works.

    The departure is pushed later than ``depart_ready`` only as far as needed:
    first to make the arrival reach the target interval, then past any blocked
    edge interval the move window would overlap.  The departure must not leave
    the source interval and the arrival must not overshoot the target one.
    """
    t_dep = depart_ready
    if target_interval.start - move_cost > t_dep:
        t_dep = target_interval.start - move_cost
    for blk in edge_blocked:
        if blk.start >= t_dep + move_cost - TIME_EPS:
            break  # blocked intervals are sorted; later ones start even later
        if t_dep < blk.end - TIME_EPS:
            t_dep = blk.end
    if t_dep > source_interval.end + TIME_EPS:
        return None
    t_arr = t_dep + move_cost
    if t_arr > target_interval.end + TIME_EPS:
        return None
    return t_arr


# ---------------------------------------------------------------------------
# Random obstacle generation
# ---------------------------------------------------------------------------

def generate_obstacles(
    grid: GridMap,
    count: int,
    conn: Connectivity,
    seed: int,
    *,
    speed: float = 1.0,
    horizon: float = 1000.0,
) -> list[Trajectory]:
    """Deterministically generate ``count`` wandering obstacles.

    Each obstacle starts at a random passable cell and repeatedly walks a
    shortest static path to a random passable goal until the time horizon is
    reached, then parks forever.  Unreachable goals are re-sampled.
    """
    cells = list(grid.passable_cells())
    if not cells:
        raise ValueError("map has no passable cells")
    rng = random.Random(seed)
    trajectories = []
    for _ in range(count):
        cur = rng.choice(cells)
        visits: list[tuple[Cell, float]] = [(cur, 0.0)]
        t = 0.0
        attempts = 0
        while t < horizon and attempts < 100:
            goal = rng.choice(cells)
            if goal == cur:
                attempts += 1
                continue
            path = _static_path(grid, cur, goal, conn, speed)
            if path is None:
                attempts += 1
                continue
            attempts = 0
            for cell, cost in path:
                t += cost
                visits.append((cell, t))
            cur = goal
        waypoints = [
            Waypoint(cell, arrival, arrival) for cell, arrival in visits[:-1]
        ]
        last_cell, last_arrival = visits[-1]
        waypoints.append(Waypoint(last_cell, last_arrival, INF))
        trajectories.append(Trajectory(tuple(waypoints)))
    return trajectories


def _static_path(
    grid: GridMap, start: Cell, goal: Cell, conn: Connectivity, speed: float
) -> list[tuple[Cell, float]] | None:
    """A* on the static grid; returns [(cell, incoming move cost), ...]
    excluding the start cell, or None if unreachable."""
    counter = itertools.count()
    open_heap = [(0.0, next(counter), start)]
    best = {start: 0.0}
    parent: dict[Cell, tuple[Cell, float]] = {}
    while open_heap:
        f, _, cell = heapq.heappop(open_heap)
        g = best[cell]
        if f > g + math.hypot(cell[0] - goal[0], cell[1] - goal[1]) / speed + TIME_EPS:
            continue
        if cell == goal:
            path: list[tuple[Cell, float]] = []
            while cell != start:
                prev, cost = parent[cell]
                path.append((cell, cost))
                cell = prev
            path.reverse()
            return path
        for nxt, cost in neighbors(grid, cell, conn, speed):
            g2 = g + cost
            if g2 < best.get(nxt, INF) - TIME_EPS:
                best[nxt] = g2
                parent[nxt] = (cell, cost)
                h = math.hypot(nxt[0] - goal[0], nxt[1] - goal[1]) / speed
                heapq.heappush(open_heap, (g2 + h, next(counter), nxt))
    return None


# ---------------------------------------------------------------------------
# Trajectory files
# ---------------------------------------------------------------------------
#
# JSON schema (round-trips bit-exactly; +inf departure encoded as null):
#   {"format": "sipp-obstacles-v1",
#    "obstacles": [{"waypoints": [[row, col, arrival, departure|null], ...]}]}

_TRAJ_FORMAT = "sipp-obstacles-v1"


def save_trajectories(path: str | Path, trajectories) -> None:
    doc = {
        "format": _TRAJ_FORMAT,
        "obstacles": [
            {
                "waypoints": [
                    [wp.cell[0], wp.cell[1], wp.arrival,
                     None if wp.departure == INF else wp.departure]
                    for wp in traj.waypoints
                ]
            }
            for traj in trajectories
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_trajectories(path: str | Path) -> list[Trajectory]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != _TRAJ_FORMAT:
        raise ValueError(f"{path}: not a {_TRAJ_FORMAT} file")
    out = []
    for rec in doc["obstacles"]:
        waypoints = tuple(
            Waypoint((int(r), int(c)), float(arr), INF if dep is None else float(dep))
            for r, c, arr, dep in rec["waypoints"]
        )
        out.append(Trajectory(waypoints))
    return out
