from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wfcnav.bundle import build_world
from wfcnav.config import config_from_dict
from wfcnav.episode import World
from wfcnav.navgraph import build_nav_graph
from wfcnav.terrain import HeightField, TerrainParams, synthesize_height_field
from wfcnav.worldgen import build_tile_catalog, corridor_map

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def flat_field(nx: int = 60, ny: int = 60, res: float = 0.1, z: float = 0.0, friction: float = 0.8) -> HeightField:
    return HeightField(res, (res / 2, res / 2), np.full((ny, nx), z), np.full((ny, nx), friction))


def step_field(edge_x: float, height: float, nx: int = 60, ny: int = 30, res: float = 0.1) -> HeightField:
    """Flat ground with a vertical step of ``height`` at world x = ``edge_x``."""
    xs = res / 2 + np.arange(nx) * res
    data = np.where(xs[None, :] >= edge_x, height, 0.0) * np.ones((ny, 1))
    return HeightField(res, (res / 2, res / 2), data)


def corridor_world(length: int = 12, seed: int = 0) -> World:
    tmap = corridor_map(length, seed)
    cat = build_tile_catalog(tmap.cells)
    field = synthesize_height_field(tmap, cat, TerrainParams())
    return World(field, build_nav_graph(tmap, cat, 2.0, field), 2.0, seed)


@pytest.fixture(scope="session")
def wfc_world() -> World:
    cfg = config_from_dict({"schema_version": 1, "seed": 7})
    return build_world(cfg).world()


@pytest.fixture
def flat():
    return flat_field()


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
