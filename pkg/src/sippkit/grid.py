"""Static grid worlds: movingai map parsing, 2^k move sets, swept-cell geometry.

Coordinates are (row, col) with row 0 at the top, matching the file order of
movingai .map files.  All operations here are pure and ignore time; dynamic
obstacles live in :mod:`sippkit.obstacles`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator

Cell = tuple[int, int]

# movingai glyph alphabet.  '.' and 'G' are passable ground; trees, swamp,
# water and out-of-bounds markers are blocked.  Anything else is a parse error.
PASSABLE_GLYPHS = frozenset(".G")
BLOCKED_GLYPHS = frozenset("@OTSW")

_MOVES_8 = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)
_MOVES_16 = _MOVES_8 + (
    (-2, -1), (-2, 1), (-1, -2), (-1, 2),
    (1, -2), (1, 2), (2, -1), (2, 1),
)
_MOVES_32 = _MOVES_16 + (
    (-3, -1), (-3, 1), (-1, -3), (1, -3), (-1, 3), (1, 3), (3, -1), (3, 1),
    (-3, -2), (-3, 2), (-2, -3), (2, -3), (-2, 3), (2, 3), (3, -2), (3, 2),
)
_MOVE_SETS = {8: _MOVES_8, 16: _MOVES_16, 32: _MOVES_32}

# Absolute offset shapes that belong to some supported move set.
_SUPPORTED_SHAPES = frozenset({(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)})


class MapParseError(ValueError):
    """Raised when a .map text does not follow the movingai format."""


@dataclass(frozen=True)
class Connectivity:
    """Branching degree of the grid move set: 8, 16 or 32 moves per cell."""

    k: int = 8

    def __post_init__(self) -> None:
        if self.k not in _MOVE_SETS:
            raise ValueError(f"unsupported connectivity {self.k}; expected 8, 16 or 32")

    @property
    def moves(self) -> tuple[Cell, ...]:
        return _MOVE_SETS[self.k]


@dataclass(frozen=True)
class GridMap:
    """Immutable rectangular grid with per-cell blocked flags (row-major)."""

    width: int
    height: int
    blocked: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.blocked) != self.width * self.height:
            raise ValueError("blocked length does not match width*height")

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def passable(self, cell: Cell) -> bool:
        r, c = cell
        if not (0 <= r < self.height and 0 <= c < self.width):
            return False
        return not self.blocked[r * self.width + c]

    def passable_cells(self) -> Iterator[Cell]:
        for r in range(self.height):
            base = r * self.width
            for c in range(self.width):
                if not self.blocked[base + c]:
                    yield (r, c)


def parse_map(text: str) -> GridMap:
    """Parse movingai .map text (LF or CRLF) into a :class:`GridMap`.

    The format is four header lines (``type octile``, ``height H``,
    ``width W``, ``map``) followed by exactly H rows of W glyphs each.
    Malformed headers, row mismatches and glyphs outside the movingai
    alphabet raise :class:`MapParseError` naming the offending line.
    """
    lines = text.splitlines()
    # Drop trailing blank lines so a final newline does not count as a row.
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 4:
        raise MapParseError("line 1: truncated header (need 4 header lines)")
    if lines[0].strip() != "type octile":
        raise MapParseError(f"line 1: expected 'type octile', got {lines[0]!r}")
    height = _header_int(lines[1], "height", 2)
    width = _header_int(lines[2], "width", 3)
    if lines[3].strip() != "map":
        raise MapParseError(f"line 4: expected 'map', got {lines[3]!r}")
    rows = lines[4:]
    if len(rows) != height:
        raise MapParseError(
            f"line {4 + len(rows) + 1}: header says height {height} but {len(rows)} rows follow"
        )
    blocked: list[bool] = []
    for i, row in enumerate(rows):
        lineno = 5 + i
        if len(row) != width:
            raise MapParseError(
                f"line {lineno}: row has {len(row)} glyphs, header says width {width}"
            )
        for glyph in row:
            if glyph in PASSABLE_GLYPHS:
                blocked.append(False)
            elif glyph in BLOCKED_GLYPHS:
                blocked.append(True)
            else:
                raise MapParseError(f"line {lineno}: unknown glyph {glyph!r}")
    return GridMap(width=width, height=height, blocked=tuple(blocked))


def _header_int(line: str, key: str, lineno: int) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
        raise MapParseError(f"line {lineno}: expected '{key} <N>', got {line!r}")
    value = int(parts[1])
    if value <= 0:
        raise MapParseError(f"line {lineno}: {key} must be positive")
    return value


def load_map(path: str | Path) -> GridMap:
    return parse_map(Path(path).read_text())


def map_to_text(grid: GridMap) -> str:
    """Serialize a GridMap back to movingai .map text ('.' / '@' glyphs)."""
    rows = []
    for r in range(grid.height):
        base = r * grid.width
        rows.append("".join("@" if grid.blocked[base + c] else "." for c in range(grid.width)))
    return f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n" + "\n".join(rows) + "\n"


def move_cost(offset: Cell, speed: float = 1.0) -> float:
    """Duration of a single move: Euclidean offset length divided by speed."""
    return math.hypot(offset[0], offset[1]) / speed


def traversal_cells(source: Cell, target: Cell) -> list[Cell]:
    """Cells swept by the center-to-center segment, endpoints excluded.

    A cell counts as swept only if the segment crosses its interior for a
    positive length, so king moves (including diagonals, which touch the
    shared corner point only) return an empty list.  Raises ValueError for
    offsets outside the supported 8/16/32 move sets.
    """
    dr, dc = target[0] - source[0], target[1] - source[1]
    shape = (min(abs(dr), abs(dc)), max(abs(dr), abs(dc)))
    if shape not in _SUPPORTED_SHAPES:
        raise ValueError(f"offset {(dr, dc)} is not a supported 2^k move")
    if max(abs(dr), abs(dc)) <= 1:
        return []
    # Work in doubled coordinates: cell centers sit at odd integers and cell
    # boundaries at even integers, so crossing parameters are exact Fractions.
    r0, c0 = 2 * source[0] + 1, 2 * source[1] + 1
    r1, c1 = 2 * target[0] + 1, 2 * target[1] + 1
    params = {Fraction(0), Fraction(1)}
    for lo, hi, delta, origin in ((min(r0, r1), max(r0, r1), r1 - r0, r0),
                                  (min(c0, c1), max(c0, c1), c1 - c0, c0)):
        for boundary in range(lo + 1, hi):
            if boundary % 2 == 0:
                params.add(Fraction(boundary - origin, delta))
    cells: list[Cell] = []
    ordered = sorted(params)
    for t0, t1 in zip(ordered, ordered[1:]):
        tm = (t0 + t1) / 2
        cell = (math.floor((r0 + tm * (r1 - r0)) / 2), math.floor((c0 + tm * (c1 - c0)) / 2))
        if cell != source and cell != target:
            cells.append(cell)
    return cells


def neighbors(
    grid: GridMap, cell: Cell, conn: Connectivity, speed: float = 1.0
) -> list[tuple[Cell, float]]:
    """Legal moves from ``cell``: in-bounds, unblocked targets whose swept
    cells are all unblocked.  Returns (target, duration) pairs."""
    out: list[tuple[Cell, float]] = []
    r, c = cell
    for dr, dc in conn.moves:
        nxt = (r + dr, c + dc)
        if not grid.passable(nxt):
            continue
        if max(abs(dr), abs(dc)) > 1 and not all(
            grid.passable(mid) for mid in traversal_cells(cell, nxt)
        ):
            continue
        out.append((nxt, move_cost((dr, dc), speed)))
    return out
