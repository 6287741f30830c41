"""Tile catalogs and Wave Function Collapse map generation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels

AXES = ("x", "y")
# Direction order shared with the kernels: +x, -x, +y, -y.
_DIRS = ((1, 0, "x"), (-1, 0, "x"), (0, 1, "y"), (0, -1, "y"))
MAX_RESTARTS = 100
_TIE_NOISE = 1e-6

EXAMPLES_DIR = Path(__file__).parent / "data" / "examples"


class Category(str, enum.Enum):
    STAIR_X = "StairX"
    STAIR_Y = "StairY"
    FLOOR0 = "Floor0"
    FLOOR1 = "Floor1"
    OBSTACLE = "Obstacle"

    @property
    def is_stair(self) -> bool:
        return self in (Category.STAIR_X, Category.STAIR_Y)

    @property
    def is_floor(self) -> bool:
        return self in (Category.FLOOR0, Category.FLOOR1)


class WorldgenError(Exception):
    pass


class EmptyExample(WorldgenError):
    pass


class PatternTooLarge(WorldgenError):
    pass


class UnknownKindId(WorldgenError):
    pass


class ContradictionAfterRetries(WorldgenError):
    def __init__(self, attempts: int):
        super().__init__(f"every attempt hit a contradiction ({attempts} attempts)")
        self.attempts = attempts


@dataclass(frozen=True)
class TileKind:
    id: int
    category: Category
    params_slot: int = 0


DEFAULT_KINDS = (
    TileKind(0, Category.FLOOR0),
    TileKind(1, Category.FLOOR1),
    TileKind(2, Category.STAIR_X),
    TileKind(3, Category.STAIR_Y),
    TileKind(4, Category.OBSTACLE),
)
FLOOR0, FLOOR1, STAIR_X, STAIR_Y, OBSTACLE = range(5)


@dataclass
class TileCatalog:
    """Kinds, their allowed neighbours per axis, and the solver patterns.

    ``adjacency`` holds unordered pairs per axis, stored as
    ``(min_id, max_id, axis)``. ``patterns`` are the units the solver places:
    single kinds for the adjacent-pair model, N x N windows otherwise.
    """

    kinds: list[TileKind]
    adjacency: set[tuple[int, int, str]]
    pattern_size: int
    weights: list[int]
    patterns: list[tuple[tuple[int, ...], ...]] = field(default_factory=list)

    def __post_init__(self):
        ids = [k.id for k in self.kinds]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate tile kind ids")
        self._by_id = {k.id: k for k in self.kinds}
        if not self.patterns:
            self.patterns = [((k.id,),) for k in self.kinds]

    @property
    def kind_ids(self) -> list[int]:
        return [k.id for k in self.kinds]

    def kind(self, kind_id: int) -> TileKind:
        try:
            return self._by_id[int(kind_id)]
        except KeyError:
            raise UnknownKindId(f"unknown tile kind id {kind_id}") from None

    def allows(self, a: int, b: int, axis: str) -> bool:
        return (min(a, b), max(a, b), axis) in self.adjacency

    def dead_kinds(self) -> list[tuple[int, str]]:
        """Kinds with no permitted neighbour along some axis."""
        dead = []
        for k in self.kinds:
            for axis in AXES:
                if not any(self.allows(k.id, o.id, axis) for o in self.kinds):
                    dead.append((k.id, axis))
        return dead

    def pattern_kind(self, p: int) -> int:
        return self.patterns[p][0][0]

    def compatibility(self) -> list[list[int]]:
        """Per-direction bitmasks of patterns allowed next to each pattern."""
        n = len(self.patterns)
        allowed = [[0] * n for _ in range(4)]
        if self.pattern_size <= 2:
            for d, (_, _, axis) in enumerate(_DIRS):
                for p in range(n):
                    a = self.pattern_kind(p)
                    mask = 0
                    for q in range(n):
                        if self.allows(a, self.pattern_kind(q), axis):
                            mask |= 1 << q
                    allowed[d][p] = mask
            return allowed
        for d, (dx, dy, _) in enumerate(_DIRS):
            for p in range(n):
                mask = 0
                for q in range(n):
                    if _overlap_agrees(self.patterns[p], self.patterns[q], dx, dy):
                        mask |= 1 << q
                allowed[d][p] = mask
        return allowed


def _overlap_agrees(p, q, dx, dy) -> bool:
    """True if ``q`` placed at offset (dx, dy) from ``p`` agrees on the overlap."""
    n = len(p)
    for y in range(max(0, dy), min(n, n + dy)):
        for x in range(max(0, dx), min(n, n + dx)):
            if p[y][x] != q[y - dy][x - dx]:
                return False
    return True


@dataclass
class TileMap:
    width: int
    height: int
    cells: np.ndarray
    seed: int

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int64).reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, TileMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.seed == other.seed
            and np.array_equal(self.cells, other.cells)
        )


def load_example_grid(path) -> np.ndarray:
    """Read a whitespace-separated grid of kind ids, one row per line."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([int(tok) for tok in line.split()])
    if not rows:
        raise EmptyExample(f"{path} holds no rows")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.int64)


def bundled_examples() -> dict[str, np.ndarray]:
    return {p.stem: load_example_grid(p) for p in sorted(EXAMPLES_DIR.glob("*.txt"))}


def build_tile_catalog(
    example,
    pattern_size: int = 2,
    kinds: Sequence[TileKind] = DEFAULT_KINDS,
    extra_rules: Iterable[tuple[int, int, str]] = (),
    periodic: bool = False,
) -> TileCatalog:
    """Learn adjacency and pattern weights from an example grid.

    ``pattern_size`` 1 or 2 selects the adjacent-pair model (each cell is a
    pattern, adjacency is the set of observed neighbour pairs). Larger values
    use overlapping N x N windows of the example. With ``periodic`` the
    example wraps around at its edges, for both windows and neighbour pairs.
    """
    grid = np.asarray(example, dtype=np.int64)
    if grid.ndim != 2 or grid.size == 0:
        raise EmptyExample("example grid is empty")
    if pattern_size < 1:
        raise ValueError("pattern_size must be >= 1")
    if pattern_size > 2 and pattern_size > min(grid.shape):
        raise PatternTooLarge(f"pattern size {pattern_size} exceeds example dims {grid.shape}")

    by_id = {k.id: k for k in kinds}
    for v in np.unique(grid):
        if int(v) not in by_id:
            raise UnknownKindId(f"example uses unknown kind id {int(v)}")
    used = [by_id[i] for i in sorted(by_id) if i in set(grid.ravel().tolist())]

    adjacency: set[tuple[int, int, str]] = set()
    h, w = grid.shape
    for y in range(h):
        for x in range(w):
            a = int(grid[y, x])
            if x + 1 < w or (periodic and w > 1):
                b = int(grid[y, (x + 1) % w])
                adjacency.add((min(a, b), max(a, b), "x"))
            if y + 1 < h or (periodic and h > 1):
                b = int(grid[(y + 1) % h, x])
                adjacency.add((min(a, b), max(a, b), "y"))
    for a, b, axis in extra_rules:
        if axis not in AXES:
            raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
        for k in (a, b):
            if k not in by_id:
                raise UnknownKindId(f"rule references unknown kind id {k}")
        if by_id[a] not in used:
            used.append(by_id[a])
        if by_id[b] not in used:
            used.append(by_id[b])
        adjacency.add((min(a, b), max(a, b), axis))
    used.sort(key=lambda k: k.id)

    if pattern_size <= 2:
        counts = {k.id: 0 for k in used}
        for v in grid.ravel():
            counts[int(v)] += 1
        weights = [max(counts[k.id], 1) for k in used]
        return TileCatalog(list(used), adjacency, pattern_size, weights)

    n = pattern_size
    seen: dict[tuple, int] = {}
    order: list[tuple] = []
    span_y = h if periodic else h - n + 1
    span_x = w if periodic else w - n + 1
    for y in range(span_y):
        for x in range(span_x):
            pat = tuple(tuple(int(grid[(y + j) % h, (x + i) % w]) for i in range(n)) for j in range(n))
            if pat not in seen:
                seen[pat] = 0
                order.append(pat)
            seen[pat] += 1
    return TileCatalog(list(used), adjacency, n, [seen[p] for p in order], order)


def validate_adjacency(tile_map: TileMap, catalog: TileCatalog) -> list[tuple[tuple[int, int], tuple[int, int], str]]:
    """List every neighbouring cell pair the catalog forbids.

    Cells are ``(row, col)``; an unknown kind id raises ``UnknownKindId``.
    """
    cells = tile_map.cells
    for v in np.unique(cells):
        catalog.kind(int(v))
    out = []
    h, w = cells.shape
    for y in range(h):
        for x in range(w):
            a = int(cells[y, x])
            if x + 1 < w and not catalog.allows(a, int(cells[y, x + 1]), "x"):
                out.append(((y, x), (y, x + 1), "x"))
            if y + 1 < h and not catalog.allows(a, int(cells[y + 1, x]), "y"):
                out.append(((y, x), (y + 1, x), "y"))
    return out


def _derive_seed(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), attempt]))


def wfc_generate(
    catalog: TileCatalog,
    width: int,
    height: int,
    seed: int,
    max_restarts: int = MAX_RESTARTS,
) -> TileMap:
    """Fill a ``width`` x ``height`` grid consistent with the catalog.

    A contradiction triggers a full restart from a derived seed; after
    ``max_restarts`` restarts ``ContradictionAfterRetries`` is raised.
    The result depends only on (catalog, dims, seed).
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    allowed = catalog.compatibility()
    weights = np.asarray(catalog.weights, dtype=np.float64)
    wlogw = weights * np.log(weights)
    ncell = width * height
    attempts = 0
    for attempt in range(max_restarts + 1):
        attempts += 1
        rng = _derive_seed(seed, attempt)
        noise = rng.random(ncell) * _TIE_NOISE
        uniforms = rng.random(ncell)
        result = kernels.wfc_solve(width, height, allowed, weights, wlogw, noise, uniforms)
        if result is not None:
            cells = [catalog.pattern_kind(p) for p in result]
            return TileMap(width, height, np.array(cells, dtype=np.int64), seed)
    raise ContradictionAfterRetries(attempts)


def restarts_used(catalog: TileCatalog, width: int, height: int, seed: int,
                  max_restarts: int = MAX_RESTARTS) -> int | None:
    """Number of restarts ``wfc_generate`` needs for this seed, or None on failure."""
    allowed = catalog.compatibility()
    weights = np.asarray(catalog.weights, dtype=np.float64)
    wlogw = weights * np.log(weights)
    for attempt in range(max_restarts + 1):
        rng = _derive_seed(seed, attempt)
        noise = rng.random(width * height) * _TIE_NOISE
        uniforms = rng.random(width * height)
        if kernels.wfc_solve(width, height, allowed, weights, wlogw, noise, uniforms) is not None:
            return attempt
    return None


def corridor_map(length: int, seed: int = 0) -> TileMap:
    """A straight one-tile-wide Floor0 corridor walled by obstacles."""
    cells = np.full((3, length + 2), OBSTACLE, dtype=np.int64)
    cells[1, 1:-1] = FLOOR0
    return TileMap(length + 2, 3, cells, seed)


def catalog_to_dict(catalog: TileCatalog) -> dict:
    return {
        "kinds": [
            {"id": k.id, "category": k.category.value, "params_slot": k.params_slot}
            for k in catalog.kinds
        ],
        "adjacency": [list(t) for t in sorted(catalog.adjacency)],
        "pattern_size": catalog.pattern_size,
        "weights": list(catalog.weights),
        "patterns": [[list(r) for r in p] for p in catalog.patterns],
    }


def catalog_from_dict(doc: dict) -> TileCatalog:
    kinds = [TileKind(int(k["id"]), Category(k["category"]), int(k.get("params_slot", 0)))
             for k in doc["kinds"]]
    adjacency = {(int(a), int(b), str(ax)) for a, b, ax in doc["adjacency"]}
    patterns = [tuple(tuple(int(v) for v in r) for r in p) for p in doc.get("patterns", [])]
    return TileCatalog(kinds, adjacency, int(doc["pattern_size"]),
                       [int(w) for w in doc["weights"]], patterns)


def tilemap_to_dict(tile_map: TileMap) -> dict:
    return {
        "width": tile_map.width,
        "height": tile_map.height,
        "seed": int(tile_map.seed),
        "cells": tile_map.cells.tolist(),
    }


def tilemap_from_dict(doc: dict) -> TileMap:
    return TileMap(int(doc["width"]), int(doc["height"]), np.array(doc["cells"]), int(doc["seed"]))
