"""Height-field synthesis from tile maps, plus raster file IO."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import kernels
from .worldgen import Category, TileCatalog, TileMap

DEFAULT_TILE_SIZE = 2.0
DEFAULT_RESOLUTION = 0.1
WALL_HEIGHT = 1.0


class TerrainError(Exception):
    pass


class ResolutionMismatch(TerrainError):
    pass


class EmptySpace(TerrainError):
    pass


class OutOfField(TerrainError):
    pass


@dataclass(frozen=True)
class TerrainParams:
    """Terrain parameters grouped per tile category.

    Stairs use (step_height, step_depth); floors use (roughness,
    correlation_length, friction); ``slope`` tilts the whole world along x.
    """

    step_height: float = 0.10
    step_depth: float = 0.40
    roughness: float = 0.0
    correlation_length: float = 1.0
    friction: float = 0.8
    slope: float = 0.0

    def __post_init__(self):
        for name in ("step_height", "step_depth", "roughness", "correlation_length"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.friction <= 2.0:
            raise ValueError("friction must lie in (0, 2]")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")

    @property
    def by_category(self) -> dict[str, dict[str, float]]:
        return {
            "stair": {"step_height": self.step_height, "step_depth": self.step_depth},
            "floor": {
                "roughness": self.roughness,
                "correlation_length": self.correlation_length,
                "friction": self.friction,
            },
            "global": {"slope": self.slope},
        }

    def stair_rise(self, tile_size: float = DEFAULT_TILE_SIZE) -> float:
        """Elevation gap between Floor0 and Floor1: one full staircase."""
        if self.step_depth <= 0.0:
            return 0.0
        return n_steps(tile_size, self.step_depth) * self.step_height

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TerrainParams":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown terrain parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})


PARAM_NAMES = tuple(f.name for f in fields(TerrainParams))

# Stair inclination stays under the proxy's default slope limit at these bounds.
DEFAULT_PARAM_SPACE = {
    "step_height": (0.05, 0.30),
    "step_depth": (0.25, 0.50),
    "roughness": (0.0, 0.08),
    "correlation_length": (0.5, 2.0),
    "friction": (0.4, 1.2),
    "slope": (0.0, 0.0),
}


def n_steps(tile_size: float, step_depth: float) -> int:
    return max(1, int(round(tile_size / step_depth)))


@dataclass
class HeightField:
    """Row-major elevation raster; cell (0, 0) is centred at ``origin``."""

    resolution: float
    origin: tuple[float, float]
    data: np.ndarray
    friction: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("height data must be 2-D")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("height data must be finite")
        if self.friction is None:
            self.friction = np.ones_like(self.data)
        self.friction = np.ascontiguousarray(self.friction, dtype=np.float32)
        if self.friction.shape != self.data.shape:
            raise ValueError("friction raster must match height raster")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the cell-centre hull."""
        ny, nx = self.data.shape
        ox, oy = self.origin
        return ox, ox + (nx - 1) * self.resolution, oy, oy + (ny - 1) * self.resolution

    def contains(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.extent
        return xmin <= x <= xmax and ymin <= y <= ymax

    def sample(self, xs, ys, strict: bool = False):
        """Bilinear heights at world points (edge-clamped)."""
        h, out = kernels.bilinear_sample(self.data, self.resolution, self.origin[0],
                                         self.origin[1], xs, ys)
        if strict and out:
            raise OutOfField("sample point outside the height field")
        return h

    def height_at(self, x: float, y: float) -> float:
        return float(self.sample(np.array([x]), np.array([y]))[0])

    def friction_at(self, x: float, y: float) -> float:
        ny, nx = self.data.shape
        i = min(max(int(math.floor((x - self.origin[0]) / self.resolution + 0.5)), 0), nx - 1)
        j = min(max(int(math.floor((y - self.origin[1]) / self.resolution + 0.5)), 0), ny - 1)
        return float(self.friction[j, i])

    def shifted(self, dx: float, dy: float) -> "HeightField":
        return HeightField(self.resolution, (self.origin[0] + dx, self.origin[1] + dy),
                           self.data.copy(), self.friction.copy(), self.seed)

    def with_offset(self, dz: float) -> "HeightField":
        return HeightField(self.resolution, self.origin, self.data + np.float32(dz),
                           self.friction.copy(), self.seed)


def _value_noise(shape, resolution, corr_len, rng) -> np.ndarray:
    """Smooth noise in [-1, 1] with lattice spacing ``corr_len``."""
    ny, nx = shape
    if corr_len <= 0:
        return rng.uniform(-1.0, 1.0, size=shape)
    gx = int(math.ceil(nx * resolution / corr_len)) + 2
    gy = int(math.ceil(ny * resolution / corr_len)) + 2
    lattice = rng.uniform(-1.0, 1.0, size=(gy, gx))
    u = (np.arange(nx) + 0.5) * resolution / corr_len
    v = (np.arange(ny) + 0.5) * resolution / corr_len
    iu = np.floor(u).astype(int)
    iv = np.floor(v).astype(int)
    fu = u - iu
    fv = v - iv
    su = fu * fu * (3.0 - 2.0 * fu)
    sv = fv * fv * (3.0 - 2.0 * fv)
    a = lattice[np.ix_(iv, iu)]
    b = lattice[np.ix_(iv, iu + 1)]
    c = lattice[np.ix_(iv + 1, iu)]
    d = lattice[np.ix_(iv + 1, iu + 1)]
    top = a + (b - a) * su[None, :]
    bot = c + (d - c) * su[None, :]
    return top + (bot - top) * sv[:, None]


def floor_level(category: Category) -> int | None:
    if category == Category.FLOOR0:
        return 0
    if category == Category.FLOOR1:
        return 1
    return None


def stair_levels(tile_map: TileMap, catalog: TileCatalog, row: int, col: int) -> tuple[int, int]:
    """Floor levels (0 or 1) at the low-coordinate and high-coordinate ends of a stair.

    The stair starts at its low-side floor neighbour's level if there is one,
    otherwise it ends at its high-side neighbour's level; with no floor
    neighbours it rises from level 0 to level 1.
    """
    cat = catalog.kind(int(tile_map.cells[row, col])).category
    if cat == Category.STAIR_X:
        lo = (row, col - 1)
        hi = (row, col + 1)
    elif cat == Category.STAIR_Y:
        lo = (row - 1, col)
        hi = (row + 1, col)
    else:
        raise ValueError("not a stair tile")

    def level(rc):
        r, c = rc
        if 0 <= r < tile_map.height and 0 <= c < tile_map.width:
            return floor_level(catalog.kind(int(tile_map.cells[r, c])).category)
        return None

    lo_level = level(lo)
    if lo_level is not None:
        return lo_level, 1 - lo_level
    hi_level = level(hi)
    if hi_level is not None:
        return 1 - hi_level, hi_level
    return 0, 1


def synthesize_height_field(
    tile_map: TileMap,
    catalog: TileCatalog,
    params: TerrainParams,
    resolution: float = DEFAULT_RESOLUTION,
    tile_size: float = DEFAULT_TILE_SIZE,
    wall_height: float = WALL_HEIGHT,
) -> HeightField:
    """Rasterise a tile map into a metric height field.

    Floor1 sits one full staircase above Floor0. Stairs step monotonically
    between the levels of their axis neighbours. Floor roughness is value
    noise bounded by ``params.roughness``; obstacles are walls
    ``wall_height`` above the upper floor level.
    """
    per_tile = tile_size / resolution
    k = int(round(per_tile))
    if k < 1 or abs(per_tile - k) > 1e-9:
        raise ResolutionMismatch(f"resolution {resolution} does not divide tile size {tile_size}")
    rise = params.stair_rise(tile_size)
    steps = n_steps(tile_size, params.step_depth) if params.step_depth > 0 else 1
    h, w = tile_map.height, tile_map.width
    data = np.zeros((h * k, w * k), dtype=np.float64)
    floor_mask = np.zeros_like(data, dtype=bool)

    local = (np.arange(k) + 0.5) * resolution
    step_idx = np.minimum((local / tile_size * steps).astype(int), steps - 1)
    for r in range(h):
        for c in range(w):
            cat = catalog.kind(int(tile_map.cells[r, c])).category
            block = (slice(r * k, (r + 1) * k), slice(c * k, (c + 1) * k))
            lvl = floor_level(cat)
            if lvl is not None:
                data[block] = lvl * rise
                floor_mask[block] = True
            elif cat == Category.OBSTACLE:
                data[block] = rise + wall_height
            else:
                lo, hi = stair_levels(tile_map, catalog, r, c)
                profile = (step_idx + 1) * params.step_height
                if lo > hi:
                    profile = profile[::-1]
                if cat == Category.STAIR_X:
                    data[block] = profile[None, :]
                else:
                    data[block] = profile[:, None]

    rng = np.random.default_rng(np.random.SeedSequence([int(tile_map.seed) & (2**64 - 1), 0x7E44]))
    if params.roughness > 0.0:
        noise = _value_noise(data.shape, resolution, params.correlation_length, rng)
        data = data + np.where(floor_mask, np.clip(noise, -1.0, 1.0) * params.roughness, 0.0)
    if params.slope != 0.0:
        xs = (np.arange(w * k) + 0.5) * resolution
        data = data + math.tan(params.slope) * xs[None, :]
    friction = np.full(data.shape, params.friction, dtype=np.float32)
    return HeightField(resolution, (resolution / 2, resolution / 2), data, friction, int(tile_map.seed))


def sample_terrain_params(space: dict[str, tuple[float, float]], rng: np.random.Generator) -> TerrainParams:
    """Draw each parameter uniformly from its bounds.

    Parameters absent from ``space`` keep their defaults.
    """
    if not space:
        raise EmptySpace("parameter space is empty")
    values = {}
    for name in PARAM_NAMES:
        if name not in space:
            continue
        lo, hi = space[name]
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise EmptySpace(f"bad bounds for {name}: ({lo}, {hi})")
        values[name] = float(lo) if lo == hi else float(rng.uniform(lo, hi))
    unknown = set(space) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown terrain parameters: {sorted(unknown)}")
    return TerrainParams(**values)


def write_height_field(field: HeightField, path) -> None:
    """Write ``<path>.f32`` (heights), ``<path>.friction.f32`` and a JSON sidecar."""
    path = Path(path)
    base = path.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    field.data.astype("<f4").tofile(base.with_suffix(".f32"))
    field.friction.astype("<f4").tofile(base.with_name(base.name + ".friction.f32"))
    ny, nx = field.data.shape
    sidecar = {
        "resolution": field.resolution,
        "origin": list(field.origin),
        "dims": [ny, nx],
        "seed": int(field.seed),
        "data": base.with_suffix(".f32").name,
        "friction": base.name + ".friction.f32",
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_height_field(path) -> HeightField:
    base = Path(path).with_suffix("")
    meta = json.loads(base.with_suffix(".json").read_text())
    ny, nx = meta["dims"]
    data = np.fromfile(base.parent / meta["data"], dtype="<f4").reshape(ny, nx)
    friction = np.fromfile(base.parent / meta["friction"], dtype="<f4").reshape(ny, nx)
    return HeightField(float(meta["resolution"]), tuple(meta["origin"]), data, friction,
                       int(meta["seed"]))
