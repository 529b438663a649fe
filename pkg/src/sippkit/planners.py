"""The four planners over the SIPP state space.

* ``plan_sipp``      -- optimal A*-style search (priority g+h).
* ``plan_wsipp_r``   -- weighted search (priority g+w*h) that reopens closed
                        states whenever a strictly smaller g is found.
* ``plan_wsipp_d``   -- weighted search over duplicated states: an "optimal"
                        copy ranked by w*(g+h) and a "suboptimal" copy ranked
                        by g+w*h; no copy is ever expanded twice.
* ``plan_focal``     -- focal search: extract from {n : g+h <= w*f_min} the
                        node with the fewest static hops to the goal.

All planners share tie-breaking (larger g first, then FIFO), lazy-deletion
open lists, and the statistics conventions: an expansion is an extraction
that passes staleness and closed checks (the terminal goal extraction
counts); a re-expansion is an expansion of an identity expanded before.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .obstacles import TIME_EPS, Interval
from .search import (
    NodeKey,
    Plan,
    SearchNode,
    TimedGraph,
    Vertex,
    get_successors,
    reconstruct_plan,
)

FOUND = "found"
FAILURE = "failure"
TIMEOUT = "timeout"


@dataclass
class ProblemInstance:
    """One planning query: timed graph, endpoints, bound and goal condition.

    ``goal_mode`` selects when a state counts as a goal: ``"any"`` accepts the
    goal vertex in any safe interval; ``"parked"`` requires the last interval,
    which must be unbounded (the agent can stay forever).
    """

    graph: TimedGraph
    start: Vertex
    goal: Vertex
    w: float = 1.0
    algorithm: str = "sipp"
    goal_mode: str = "any"

    def __post_init__(self) -> None:
        if self.w < 1.0:
            raise ValueError(f"suboptimality bound must be >= 1, got {self.w}")
        if self.goal_mode not in ("any", "parked"):
            raise ValueError(f"unknown goal mode {self.goal_mode!r}")


@dataclass
class SearchStats:
    expansions: int = 0
    reexpansions: int = 0
    generated: int = 0
    open_max: int = 0
    runtime: float = 0.0
    expanded_f: list[float] = field(default_factory=list, repr=False)


@dataclass
class Solution:
    outcome: str  # FOUND | FAILURE | TIMEOUT
    plan: Optional[Plan]
    cost: Optional[float]
    stats: SearchStats

    @property
    def found(self) -> bool:
        return self.outcome == FOUND


class OpenList:
    """Binary heap with lazy deletion.

    Entries are (priority, -g, insertion#, g, key): ties on priority prefer
    larger g, then FIFO.  Staleness is decided by the caller-supplied
    ``is_live(key, g)`` predicate at pop/peek time.
    """

    def __init__(self) -> None:
        self._heap: list[tuple] = []
        self._counter = itertools.count()

    def push(self, priority: float, g: float, key) -> None:
        heapq.heappush(self._heap, (priority, -g, next(self._counter), g, key))

    def pop(self, is_live: Callable) -> Optional[tuple[float, float, object]]:
        while self._heap:
            priority, _, _, g, key = heapq.heappop(self._heap)
            if is_live(key, g):
                return priority, g, key
        return None

    def peek_priority(self, is_live: Callable) -> Optional[float]:
        while self._heap:
            priority, _, _, g, key = self._heap[0]
            if is_live(key, g):
                return priority
            heapq.heappop(self._heap)
        return None

    def __len__(self) -> int:
        return len(self._heap)


class _Bookkeeping:
    """Shared node store: records, closed set and live-entry accounting."""

    def __init__(self, stats: SearchStats):
        self.records: dict = {}
        self.closed: set = set()
        self.ever_expanded: set = set()
        self.stats = stats
        self._in_open = 0

    def is_live(self, key, g) -> bool:
        return key not in self.closed and self.records[key].g == g

    def entered_open(self) -> None:
        self._in_open += 1
        if self._in_open > self.stats.open_max:
            self.stats.open_max = self._in_open

    def left_open(self) -> None:
        self._in_open -= 1


def _start_node(p: ProblemInstance) -> Optional[SearchNode]:
    """The initial state: the start vertex's safe interval containing t=0."""
    for idx, iv in enumerate(p.graph.safe_intervals(p.start)):
        if iv.contains(0.0):
            return SearchNode(
                vertex=p.start,
                interval=idx,
                heading=p.graph.initial_heading,
                g=0.0,
                h=p.graph.heuristic(p.start),
            )
    return None


def _goal_test(p: ProblemInstance) -> Callable[[SearchNode], bool]:
    if p.goal_mode == "any":
        return lambda node: node.vertex == p.goal
    intervals = p.graph.safe_intervals(p.goal)
    last = len(intervals) - 1
    parked_ok = bool(intervals) and intervals[-1].end == float("inf")

    def test(node: SearchNode) -> bool:
        return node.vertex == p.goal and parked_ok and node.interval == last

    return test


def _finish(outcome: str, plan, cost, stats: SearchStats, t0: float) -> Solution:
    stats.runtime = time.perf_counter() - t0
    return Solution(outcome, plan, cost, stats)


# ---------------------------------------------------------------------------
# Optimal SIPP and weighted SIPP with re-expansions
# ---------------------------------------------------------------------------

def plan_sipp(
    p: ProblemInstance, *, debug: bool = False, time_limit: Optional[float] = None
) -> Solution:
    """Optimal SIPP: A* over the safe-interval space with priority g+h.

    With the consistent heuristics used here every state is expanded with its
    earliest possible arrival time, so no re-expansions occur and the returned
    plan is optimal.
    """
    return _weighted_search(p, weight=1.0, reopen=True, debug=debug, time_limit=time_limit)


def plan_wsipp_r(
    p: ProblemInstance,
    *,
    reopen: bool = True,
    debug: bool = False,
    time_limit: Optional[float] = None,
) -> Solution:
    """Weighted SIPP with re-expansions: priority g+w*h; a closed state
    generated with a strictly lower g is reopened.

    ``reopen=False`` is a diagnostic switch demonstrating why plain heuristic
    inflation is incomplete in this state space; with it the search may fail
    on solvable instances.
    """
    return _weighted_search(p, weight=p.w, reopen=reopen, debug=debug, time_limit=time_limit)


def _weighted_search(
    p: ProblemInstance,
    weight: float,
    reopen: bool,
    debug: bool,
    time_limit: Optional[float],
) -> Solution:
    t0 = time.perf_counter()
    graph = p.graph
    stats = SearchStats()
    book = _Bookkeeping(stats)
    is_goal = _goal_test(p)

    start = _start_node(p)
    if start is None:
        return _finish(FAILURE, None, None, stats, t0)
    book.records[start.key] = start
    open_list = OpenList()
    open_list.push(start.g + weight * start.h, start.g, start.key)
    book.entered_open()
    stats.generated += 1
    h_cache: dict[Vertex, float] = {p.start: start.h}

    while True:
        popped = open_list.pop(book.is_live)
        if popped is None:
            return _finish(FAILURE, None, None, stats, t0)
        priority, _, key = popped
        node = book.records[key]
        book.closed.add(key)
        book.left_open()
        stats.expansions += 1
        stats.expanded_f.append(priority)
        if key in book.ever_expanded:
            stats.reexpansions += 1
        else:
            book.ever_expanded.add(key)

        if is_goal(node):
            return _finish(FOUND, reconstruct_plan(node, graph), node.g, stats, t0)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return _finish(TIMEOUT, None, None, stats, t0)

        for succ_key, g2 in get_successors(node, graph):
            if debug:
                assert graph.safe_intervals(succ_key[0])[succ_key[1]].contains(g2)
            rec = book.records.get(succ_key)
            if rec is None:
                h = h_cache.get(succ_key[0])
                if h is None:
                    h = h_cache[succ_key[0]] = graph.heuristic(succ_key[0])
                rec = SearchNode(succ_key[0], succ_key[1], succ_key[2], g2, h, parent=node)
                book.records[succ_key] = rec
            elif g2 < rec.g - TIME_EPS:
                if succ_key in book.closed:
                    if not reopen:
                        continue
                    book.closed.discard(succ_key)
                else:
                    book.left_open()  # the previous entry becomes stale
                rec.g = g2
                rec.parent = node
            else:
                continue
            open_list.push(rec.g + weight * rec.h, rec.g, succ_key)
            book.entered_open()
            stats.generated += 1


# ---------------------------------------------------------------------------
# Weighted SIPP with duplicate states
# ---------------------------------------------------------------------------

_OPT = "optimal"
_SUB = "suboptimal"


def plan_wsipp_d(
    p: ProblemInstance, *, debug: bool = False, time_limit: Optional[float] = None
) -> Solution:
    """Weighted SIPP with duplicate states, never re-expanding any copy.

    Every generated identity exists as two copies: an optimal copy ranked by
    w*(g+h) and a suboptimal copy ranked by g+w*h.  Expanding the start or an
    optimal copy generates/updates both copies of each successor; expanding a
    suboptimal copy touches only suboptimal copies.  A copy already closed is
    never reopened, though a copy still in OPEN may have its g lowered.  The
    search stops when any copy of a goal state is expanded.

    The re-expansion statistic counts identities whose two copies were both
    expanded.
    """
    t0 = time.perf_counter()
    graph = p.graph
    w = p.w
    stats = SearchStats()
    book = _Bookkeeping(stats)
    is_goal = _goal_test(p)

    start = _start_node(p)
    if start is None:
        return _finish(FAILURE, None, None, stats, t0)
    start_key = (start.key, "plain")
    book.records[start_key] = start
    open_list = OpenList()
    open_list.push(start.g + w * start.h, start.g, start_key)
    book.entered_open()
    stats.generated += 1
    h_cache: dict[Vertex, float] = {p.start: start.h}
    expanded_by_kind: dict[str, set[NodeKey]] = {_OPT: set(), _SUB: set()}

    while True:
        popped = open_list.pop(book.is_live)
        if popped is None:
            return _finish(FAILURE, None, None, stats, t0)
        priority, _, copy_key = popped
        base_key, kind = copy_key
        node = book.records[copy_key]
        if debug:
            assert copy_key not in book.ever_expanded, "a copy was expanded twice"
        book.closed.add(copy_key)
        book.ever_expanded.add(copy_key)
        book.left_open()
        stats.expansions += 1
        stats.expanded_f.append(priority)
        if kind in (_OPT, _SUB):
            expanded_by_kind[kind].add(base_key)
            other = _SUB if kind == _OPT else _OPT
            if base_key in expanded_by_kind[other]:
                stats.reexpansions += 1

        if is_goal(node):
            return _finish(FOUND, reconstruct_plan(node, graph), node.g, stats, t0)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return _finish(TIMEOUT, None, None, stats, t0)

        kinds = (_OPT, _SUB) if kind != _SUB else (_SUB,)
        for succ_key, g2 in get_successors(node, graph):
            h = h_cache.get(succ_key[0])
            if h is None:
                h = h_cache[succ_key[0]] = graph.heuristic(succ_key[0])
            for new_kind in kinds:
                copy2 = (succ_key, new_kind)
                if copy2 in book.closed:
                    continue
                rec = book.records.get(copy2)
                if rec is None:
                    rec = SearchNode(
                        succ_key[0], succ_key[1], succ_key[2], g2, h, parent=node, kind=new_kind
                    )
                    book.records[copy2] = rec
                elif g2 < rec.g - TIME_EPS:
                    rec.g = g2
                    rec.parent = node
                    book.left_open()
                else:
                    continue
                priority2 = w * (rec.g + h) if new_kind == _OPT else rec.g + w * h
                open_list.push(priority2, rec.g, copy2)
                book.entered_open()
                stats.generated += 1


# ---------------------------------------------------------------------------
# Focal SIPP
# ---------------------------------------------------------------------------

def plan_focal(
    p: ProblemInstance, *, debug: bool = False, time_limit: Optional[float] = None
) -> Solution:
    """Focal SIPP with unlimited re-expansions.

    OPEN is ordered by f=g+h and supplies f_min; FOCAL holds the live entries
    with f <= w*f_min, ordered by (hops to goal, f, larger g, FIFO).  Each
    iteration expands the FOCAL minimum; the search stops when a goal state is
    extracted from FOCAL.  Because g improvements can lower f_min, FOCAL
    entries are re-validated against the current bound at extraction time and
    demoted back to the pending pool when they no longer qualify.
    """
    t0 = time.perf_counter()
    graph = p.graph
    w = p.w
    stats = SearchStats()
    book = _Bookkeeping(stats)
    is_goal = _goal_test(p)

    start = _start_node(p)
    if start is None:
        return _finish(FAILURE, None, None, stats, t0)

    open_list = OpenList()  # f-ordered view of all live entries (f_min source)
    pending = OpenList()  # live entries not currently in FOCAL, f-ordered
    focal: list[tuple] = []  # (hops, f, -g, seq, g, key)
    seq = itertools.count()
    h_cache: dict[Vertex, float] = {}
    hop_cache: dict[Vertex, float] = {}

    def lookup_h(vertex) -> float:
        h = h_cache.get(vertex)
        if h is None:
            h = h_cache[vertex] = graph.heuristic(vertex)
        return h

    def lookup_hops(vertex) -> float:
        hf = hop_cache.get(vertex)
        if hf is None:
            hf = hop_cache[vertex] = graph.hops(vertex)
        return hf

    def push(rec: SearchNode) -> None:
        f = rec.g + rec.h
        open_list.push(f, rec.g, rec.key)
        pending.push(f, rec.g, rec.key)
        stats.generated += 1

    book.records[start.key] = start
    start.h = lookup_h(p.start)
    push(start)
    book.entered_open()

    while True:
        f_min = open_list.peek_priority(book.is_live)
        if f_min is None:
            return _finish(FAILURE, None, None, stats, t0)
        bound = w * f_min + TIME_EPS

        # Promote every pending entry inside the bound into FOCAL.
        while True:
            head = pending.pop(lambda key, g: book.is_live(key, g) and book.records[key].g + book.records[key].h <= bound)
            if head is None:
                break
            f, g, key = head
            rec = book.records[key]
            if rec.g + rec.h > bound:  # f improved since push; entry is stale
                continue
            heapq.heappush(focal, (lookup_hops(key[0]), rec.g + rec.h, -rec.g, next(seq), rec.g, key))

        # Extract the FOCAL minimum, demoting entries the bound left behind.
        selected = None
        while focal:
            _, f, _, _, g, key = heapq.heappop(focal)
            if not book.is_live(key, g):
                continue
            current_f = book.records[key].g + book.records[key].h
            if current_f > bound:
                pending.push(current_f, g, key)
                continue
            selected = key
            break
        if selected is None:
            continue  # bound moved; recompute f_min and refill FOCAL

        node = book.records[selected]
        if debug:
            live_min = open_list.peek_priority(book.is_live)
            assert live_min is None or node.g + node.h <= w * live_min + TIME_EPS
        book.closed.add(selected)
        book.left_open()
        stats.expansions += 1
        stats.expanded_f.append(node.g + node.h)
        if selected in book.ever_expanded:
            stats.reexpansions += 1
        else:
            book.ever_expanded.add(selected)

        if is_goal(node):
            return _finish(FOUND, reconstruct_plan(node, graph), node.g, stats, t0)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return _finish(TIMEOUT, None, None, stats, t0)

        for succ_key, g2 in get_successors(node, graph):
            rec = book.records.get(succ_key)
            if rec is None:
                rec = SearchNode(
                    succ_key[0], succ_key[1], succ_key[2], g2, lookup_h(succ_key[0]), parent=node
                )
                book.records[succ_key] = rec
            elif g2 < rec.g - TIME_EPS:
                if succ_key in book.closed:
                    book.closed.discard(succ_key)
                else:
                    book.left_open()
                rec.g = g2
                rec.parent = node
            else:
                continue
            push(rec)
            book.entered_open()


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

PLANNERS: dict[str, Callable[..., Solution]] = {
    "sipp": plan_sipp,
    "wsipp-d": plan_wsipp_d,
    "wsipp-r": plan_wsipp_r,
    "focal": plan_focal,
}


def solve(p: ProblemInstance, **kwargs) -> Solution:
    """Run the planner named by ``p.algorithm``."""
    try:
        planner = PLANNERS[p.algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {p.algorithm!r}") from None
    return planner(p, **kwargs)
