"""World construction from a run config and the on-disk world bundle."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import RunConfig
from .episode import World
from .navgraph import NavGraph, build_nav_graph, graph_from_dict, graph_to_dict
from .terrain import HeightField, read_height_field, synthesize_height_field, write_height_field
from .worldgen import (
    EXAMPLES_DIR,
    TileCatalog,
    TileMap,
    build_tile_catalog,
    catalog_from_dict,
    catalog_to_dict,
    corridor_map,
    load_example_grid,
    tilemap_from_dict,
    tilemap_to_dict,
    validate_adjacency,
    wfc_generate,
)

BUNDLE_FILES = ("tilemap.json", "catalog.json", "heightfield.json", "heightfield.f32",
                "heightfield.friction.f32", "graph.json")


class BundleError(Exception):
    pass


@dataclass
class WorldBundle:
    tile_map: TileMap
    catalog: TileCatalog
    field: HeightField
    graph: NavGraph
    tile_size: float = 2.0

    def world(self) -> World:
        return World(self.field, self.graph, self.tile_size, int(self.tile_map.seed))


def load_catalog_source(cfg: RunConfig) -> TileCatalog:
    w = cfg.world
    if w.catalog:
        with open(w.catalog, encoding="utf-8") as fh:
            return catalog_from_dict(json.load(fh))
    path = Path(w.example)
    if not path.suffix:
        path = EXAMPLES_DIR / f"{w.example}.txt"
    return build_tile_catalog(load_example_grid(path), w.pattern_size, periodic=w.periodic)


def build_world(cfg: RunConfig, seed: int | None = None) -> WorldBundle:
    seed = cfg.seed if seed is None else seed
    w = cfg.world
    if w.kind == "corridor":
        tile_map = corridor_map(w.corridor_length, seed)
        catalog = build_tile_catalog(tile_map.cells)
    else:
        catalog = load_catalog_source(cfg)
        tile_map = wfc_generate(catalog, w.width, w.height, seed)
    field = synthesize_height_field(tile_map, catalog, cfg.terrain, w.resolution, w.tile_size)
    graph = build_nav_graph(tile_map, catalog, w.tile_size, field)
    return WorldBundle(tile_map, catalog, field, graph, w.tile_size)


def _dump(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_bundle(bundle: WorldBundle, out_dir, cfg: RunConfig, seed: int) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "tilemap.json", tilemap_to_dict(bundle.tile_map))
    _dump(out / "catalog.json", catalog_to_dict(bundle.catalog))
    write_height_field(bundle.field, out / "heightfield")
    _dump(out / "graph.json", graph_to_dict(bundle.graph))
    manifest = {
        "tool": "wfcnav",
        "version": __version__,
        "seed": int(seed),
        "config_sha256": cfg.sha256(),
        "config": cfg.to_dict(),
        "tile_size": bundle.tile_size,
        "files": {name: _sha256(out / name) for name in BUNDLE_FILES},
    }
    _dump(out / "manifest.json", manifest)
    return manifest


def read_bundle(path) -> WorldBundle:
    d = Path(path)
    for name in BUNDLE_FILES + ("manifest.json",):
        if not (d / name).exists():
            raise FileNotFoundError(f"bundle file missing: {d / name}")
    with open(d / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for name, digest in manifest.get("files", {}).items():
        if _sha256(d / name) != digest:
            raise BundleError(f"{name} does not match its manifest checksum")
    with open(d / "tilemap.json", encoding="utf-8") as fh:
        tile_map = tilemap_from_dict(json.load(fh))
    with open(d / "catalog.json", encoding="utf-8") as fh:
        catalog = catalog_from_dict(json.load(fh))
    bad = validate_adjacency(tile_map, catalog)
    if bad:
        raise BundleError(f"tile map violates its catalog at {bad[0]}")
    field = read_height_field(d / "heightfield")
    with open(d / "graph.json", encoding="utf-8") as fh:
        graph = graph_from_dict(json.load(fh))
    return WorldBundle(tile_map, catalog, field, graph, float(manifest.get("tile_size", 2.0)))

