"""SIPP state space over abstract timed graphs.

A search state is (vertex, safe-interval index) plus a heading when the
rotation action model is active.  ``g`` is the earliest time the agent can
occupy the vertex within that interval; successor generation commits each
move at the earliest collision-free departure (minimal wait).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional

from .grid import Cell, Connectivity, GridMap, neighbors
from .heuristics import build_hop_field, euclidean_h
from .obstacles import FREE, INF, TIME_EPS, Interval, SafeIntervalTable, earliest_transition

Vertex = Hashable
Heading = Optional[tuple[int, int]]
NodeKey = tuple  # (vertex, interval index, heading)

_QUARTER_TURN = math.pi / 2


class TimedGraph:
    """Abstract timed graph consumed by the planners.

    Implementations supply safe intervals, outgoing timed edges, per-edge
    blocked intervals, a consistent admissible heuristic, and optionally a
    hop count (secondary focal rank) and heading semantics.  Instances must
    be immutable so concurrent planner runs can share them.
    """

    uses_headings: bool = False
    initial_heading: Heading = None  # None = free: the first move costs no rotation

    def safe_intervals(self, v: Vertex) -> tuple[Interval, ...]:
        raise NotImplementedError

    def edges_from(self, v: Vertex) -> Iterable[tuple[Vertex, float]]:
        raise NotImplementedError

    def edge_cost(self, u: Vertex, v: Vertex) -> float:
        for target, cost in self.edges_from(u):
            if target == v:
                return cost
        raise KeyError((u, v))

    def edge_blocked(self, u: Vertex, v: Vertex) -> tuple[Interval, ...]:
        return ()

    def heuristic(self, v: Vertex) -> float:
        raise NotImplementedError

    def hops(self, v: Vertex) -> float:
        return 0.0

    def move_heading(self, u: Vertex, v: Vertex) -> Heading:
        return None

    def rotation_time(self, h_from: Heading, h_to: Heading) -> float:
        return 0.0


@dataclass
class SearchNode:
    """Mutable per-identity search record owned by a single planner run."""

    vertex: Vertex
    interval: int
    heading: Heading
    g: float
    h: float
    parent: Optional["SearchNode"] = None
    kind: str = "plain"  # duplicate-copy tag used by the dual-copy planner

    @property
    def key(self) -> NodeKey:
        return (self.vertex, self.interval, self.heading)


def get_successors(node: SearchNode, graph: TimedGraph) -> list[tuple[NodeKey, float]]:
    """All reachable (vertex, interval, heading) identities with their
    earliest arrival times, per the minimal-wait rule.

    In the rotation model the agent first turns in place (the turn must fit
    inside the source safe interval), then waits as little as needed, then
    translates.  Every reachable safe interval of each move target yields one
    successor, so the successor set is maximal.
    """
    src_iv = graph.safe_intervals(node.vertex)[node.interval]
    out: list[tuple[NodeKey, float]] = []
    for target, cost in graph.edges_from(node.vertex):
        heading = graph.move_heading(node.vertex, target)
        ready = node.g + graph.rotation_time(node.heading, heading)
        if ready > src_iv.end + TIME_EPS:
            continue
        blocked = graph.edge_blocked(node.vertex, target)
        for idx, tgt_iv in enumerate(graph.safe_intervals(target)):
            if tgt_iv.end + TIME_EPS < ready + cost:
                continue
            if tgt_iv.start - cost > src_iv.end + TIME_EPS:
                break  # no departure inside the source interval reaches this or later intervals
            arrival = earliest_transition(ready, src_iv, cost, blocked, tgt_iv)
            if arrival is not None:
                out.append(((target, idx, heading), arrival))
    return out


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Wait:
    vertex: Vertex
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Rotate:
    vertex: Vertex
    heading_from: Heading
    heading_to: Heading
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Move:
    source: Vertex
    target: Vertex
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


Action = Wait | Rotate | Move


@dataclass(frozen=True)
class Plan:
    """Time-contiguous action sequence; cost is the final arrival time minus
    the start time."""

    actions: tuple[Action, ...]
    cost: float


def reconstruct_plan(goal_node: SearchNode, graph: TimedGraph) -> Plan:
    """Rebuild the timed action sequence from the goal node's parent chain."""
    chain: list[SearchNode] = []
    node = goal_node
    while node.parent is not None:
        chain.append(node)
        node = node.parent
    start = node
    chain.reverse()

    actions: list[Action] = []
    t = start.g
    vertex, heading = start.vertex, start.heading
    for step in chain:
        cost = graph.edge_cost(vertex, step.vertex)
        rot = graph.rotation_time(heading, step.heading)
        depart = step.g - cost
        if rot > TIME_EPS:
            actions.append(Rotate(vertex, heading, step.heading, t, t + rot))
            t += rot
        wait = depart - t
        if wait > TIME_EPS:
            actions.append(Wait(vertex, t, depart))
        elif wait < -TIME_EPS:
            raise RuntimeError(f"broken parent chain at {vertex!r}: negative wait {wait}")
        actions.append(Move(vertex, step.vertex, depart, step.g))
        t = step.g
        vertex, heading = step.vertex, step.heading
    return Plan(actions=tuple(actions), cost=goal_node.g - start.g)


# ---------------------------------------------------------------------------
# Graph implementations
# ---------------------------------------------------------------------------

class ExplicitTimedGraph(TimedGraph):
    """Timed graph over named vertices with explicit directed edges, a
    heuristic table and explicit safe/blocked intervals."""

    def __init__(self, edges, heuristic, safe=None, edge_blocked=None, goal=None, vertices=()):
        self._adj: dict[Vertex, list[tuple[Vertex, float]]] = {}
        self._costs: dict[tuple[Vertex, Vertex], float] = {}
        for (u, v), cost in dict(edges).items():
            self._adj.setdefault(u, []).append((v, cost))
            self._costs[(u, v)] = cost
        self._h = dict(heuristic)
        self._safe = {v: tuple(ivs) for v, ivs in (safe or {}).items()}
        self._blocked = {e: tuple(ivs) for e, ivs in (edge_blocked or {}).items()}
        self._vertices = set(self._h) | set(self._adj) | set(vertices)
        for u, v in self._costs:
            self._vertices.update((u, v))
        self.goal = goal
        self._hops = self._hop_table(goal) if goal is not None else {}

    def _hop_table(self, goal: Vertex) -> dict[Vertex, int]:
        reverse: dict[Vertex, list[Vertex]] = {}
        for u, v in self._costs:
            reverse.setdefault(v, []).append(u)
        hops = {goal: 0}
        frontier = deque([goal])
        while frontier:
            v = frontier.popleft()
            for u in reverse.get(v, ()):
                if u not in hops:
                    hops[u] = hops[v] + 1
                    frontier.append(u)
        return hops

    def vertices(self) -> set[Vertex]:
        return set(self._vertices)

    def safe_intervals(self, v: Vertex) -> tuple[Interval, ...]:
        return self._safe.get(v, FREE)

    def edges_from(self, v: Vertex):
        return self._adj.get(v, ())

    def edge_cost(self, u: Vertex, v: Vertex) -> float:
        return self._costs[(u, v)]

    def edge_blocked(self, u: Vertex, v: Vertex) -> tuple[Interval, ...]:
        return self._blocked.get((u, v), ())

    def heuristic(self, v: Vertex) -> float:
        return self._h[v]

    def hops(self, v: Vertex) -> float:
        return self._hops.get(v, math.inf)


class GridTimedGraph(TimedGraph):
    """Timed graph over a grid map with a shared safe-interval table.

    The heuristic is the speed-scaled Euclidean distance to the goal; the hop
    field for focal search is built eagerly at construction so planner
    runtimes never include heuristic precomputation.  With ``rotations`` the
    agent's heading is part of the state and turning costs one time unit per
    quarter turn.
    """

    def __init__(
        self,
        grid: GridMap,
        table: SafeIntervalTable,
        goal: Cell,
        conn: Connectivity = Connectivity(8),
        speed: float = 1.0,
        rotations: bool = False,
        initial_heading: Heading = None,
        with_hops: bool = True,
    ):
        self.grid = grid
        self.table = table
        self.goal = goal
        self.conn = conn
        self.speed = speed
        self.uses_headings = rotations
        self.initial_heading = initial_heading if rotations else None
        self._adj: dict[Cell, list[tuple[Cell, float]]] = {}
        self._angles: dict[tuple[int, int], float] = {
            move: math.atan2(move[0], move[1]) for move in conn.moves
        }
        self._rotation: dict[tuple[Heading, Heading], float] = {}
        self._hop_field = build_hop_field(grid, goal, conn) if with_hops else None

    def safe_intervals(self, v: Cell) -> tuple[Interval, ...]:
        return self.table.vertex(v)

    def edges_from(self, v: Cell):
        adj = self._adj.get(v)
        if adj is None:
            adj = neighbors(self.grid, v, self.conn, self.speed)
            self._adj[v] = adj
        return adj

    def heuristic(self, v: Cell) -> float:
        return euclidean_h(v, self.goal, self.speed)

    def hops(self, v: Cell) -> float:
        return self._hop_field.hop(v) if self._hop_field is not None else 0.0

    def move_heading(self, u: Cell, v: Cell) -> Heading:
        if not self.uses_headings:
            return None
        return (v[0] - u[0], v[1] - u[1])

    def rotation_time(self, h_from: Heading, h_to: Heading) -> float:
        if h_from is None or h_to is None or h_from == h_to:
            return 0.0
        cached = self._rotation.get((h_from, h_to))
        if cached is None:
            spread = abs(self._angles[h_from] - self._angles[h_to])
            angle = min(spread, 2 * math.pi - spread)
            cached = angle / _QUARTER_TURN
            self._rotation[(h_from, h_to)] = cached
        return cached


# ---------------------------------------------------------------------------
# Worked-example fixture
# ---------------------------------------------------------------------------

def closing_window_graph() -> ExplicitTimedGraph:
    """Seven-vertex example where the only safe window at B closes at t=10.

    An obstacle travels from A to B arriving at time 10 and parking there, so
    B is safe only over [0, 10].  The route Start-E-C reaches C at time 8,
    too late to cross C-B (8 + 3 > 10); the route Start-D-C reaches C at 6
    and makes the window.  An inflated-heuristic search that refuses to
    revisit C therefore dead-ends, which is exactly what the dual-copy and
    re-expansion planners exist to handle.  Optimal cost is 13 via
    Start-D-C-B-Goal.  A is only the obstacle's origin; the agent never
    enters it.
    """
    edges = {
        ("Start", "D"): 3.0,
        ("Start", "E"): 4.0,
        ("D", "C"): 3.0,
        ("E", "C"): 4.0,
        ("C", "B"): 3.0,
        ("B", "Goal"): 4.0,
    }
    heuristic = {"Start": 11.0, "A": 0.0, "B": 4.0, "C": 5.0, "D": 8.0, "E": 7.0, "Goal": 0.0}
    safe = {"B": (Interval(0.0, 10.0),)}
    return ExplicitTimedGraph(edges, heuristic, safe=safe, goal="Goal", vertices=("A",))
