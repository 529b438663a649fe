"""Heuristics: speed-scaled Euclidean distance (admissible and consistent for
both action models) and the static hop field used as the focal-search
secondary rank."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .grid import Cell, Connectivity, GridMap, neighbors


def euclidean_h(cell: Cell, goal: Cell, speed: float = 1.0) -> float:
    """Straight-line distance between cell centers divided by agent speed."""
    return math.hypot(cell[0] - goal[0], cell[1] - goal[1]) / speed


@dataclass(frozen=True)
class HopField:
    """Per-cell hop count to the goal over the static move graph, ignoring
    edge costs and dynamic obstacles.  Unreachable cells map to +inf."""

    goal: Cell
    hops: dict[Cell, int] = field(repr=False)

    def hop(self, cell: Cell) -> float:
        return self.hops.get(cell, math.inf)


def build_hop_field(grid: GridMap, goal: Cell, conn: Connectivity) -> HopField:
    """Breadth-first hop distances computed backward from the goal.

    The move sets are symmetric, so searching forward from the goal yields
    the hops-to-goal field directly.
    """
    hops: dict[Cell, int] = {goal: 0}
    frontier = deque([goal])
    while frontier:
        cell = frontier.popleft()
        nxt_hop = hops[cell] + 1
        for nxt, _ in neighbors(grid, cell, conn):
            if nxt not in hops:
                hops[nxt] = nxt_hop
                frontier.append(nxt)
    return HopField(goal=goal, hops=hops)
