from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from wfcnav.terrain import (
    DEFAULT_PARAM_SPACE,
    EmptySpace,
    HeightField,
    ResolutionMismatch,
    TerrainParams,
    read_height_field,
    sample_terrain_params,
    synthesize_height_field,
    write_height_field,
)
from wfcnav.worldgen import FLOOR0, FLOOR1, OBSTACLE, STAIR_X, STAIR_Y, TileMap, build_tile_catalog

CAT = build_tile_catalog([[FLOOR0, STAIR_X, FLOOR1], [OBSTACLE, STAIR_Y, OBSTACLE], [FLOOR0, FLOOR1, FLOOR1]])


def tmap(rows, seed=0):
    cells = np.array(rows)
    return TileMap(cells.shape[1], cells.shape[0], cells, seed)


def test_flat_floor_is_constant():
    hf = synthesize_height_field(tmap([[FLOOR0] * 4] * 3), CAT, TerrainParams(roughness=0.0))
    assert hf.data.shape == (60, 80)
    assert np.all(hf.data == hf.data[0, 0])


def test_stair_step_count_and_rise():
    p = TerrainParams(step_height=0.12, step_depth=0.25)
    hf = synthesize_height_field(tmap([[FLOOR0, STAIR_X, FLOOR1]]), CAT, p)
    row = hf.data[10].astype(float)
    stair = row[20:40]
    assert len(np.unique(stair)) == 8
    assert np.all(np.diff(stair) >= 0)
    assert stair[-1] == pytest.approx(8 * 0.12, abs=1e-6)
    assert row[45] == pytest.approx(8 * 0.12, abs=1e-6)
    assert row[5] == 0.0


def test_descending_stair_joins_neighbours():
    p = TerrainParams(step_height=0.1, step_depth=0.5)
    hf = synthesize_height_field(tmap([[FLOOR1, STAIR_X, FLOOR0]]), CAT, p)
    stair = hf.data[10, 20:40].astype(float)
    assert np.all(np.diff(stair) <= 0)
    assert stair[0] == pytest.approx(0.4, abs=1e-6)
    assert stair[-1] == pytest.approx(0.1, abs=1e-6)


def test_y_stair_varies_along_rows():
    p = TerrainParams(step_height=0.1, step_depth=0.5)
    hf = synthesize_height_field(tmap([[FLOOR0], [STAIR_Y], [FLOOR1]]), CAT, p)
    col = hf.data[20:40, 10].astype(float)
    assert np.all(np.diff(col) >= 0) and col[-1] > col[0]
    assert np.all(hf.data[20:40] == hf.data[20:40, :1])


@given(st.floats(0.0, 0.2), st.floats(0.2, 3.0), st.integers(0, 10**6))
def test_roughness_is_bounded(a, corr, seed):
    m = tmap([[FLOOR0, FLOOR1], [FLOOR1, FLOOR0]], seed)
    p = TerrainParams(roughness=a, correlation_length=corr)
    base = synthesize_height_field(m, CAT, TerrainParams(correlation_length=corr))
    hf = synthesize_height_field(m, CAT, p)
    assert np.max(np.abs(hf.data.astype(float) - base.data.astype(float))) <= a + 1e-6


def test_synthesis_is_deterministic():
    m = tmap([[FLOOR0, STAIR_X, FLOOR1]], seed=5)
    p = TerrainParams(roughness=0.05)
    a = synthesize_height_field(m, CAT, p)
    b = synthesize_height_field(m, CAT, p)
    assert np.array_equal(a.data, b.data) and np.array_equal(a.friction, b.friction)


def test_resolution_must_divide_tile():
    with pytest.raises(ResolutionMismatch):
        synthesize_height_field(tmap([[FLOOR0]]), CAT, TerrainParams(), resolution=0.3)


def test_params_validation():
    with pytest.raises(ValueError):
        TerrainParams(friction=0.0)
    with pytest.raises(ValueError):
        TerrainParams(step_height=-0.1)
    with pytest.raises(ValueError):
        TerrainParams.from_dict({"bogus": 1})


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 10**6))
def test_shift_translates_samples(dx, dy, seed):
    rng = np.random.default_rng(seed)
    hf = HeightField(0.1, (0.05, 0.05), rng.normal(size=(20, 30)))
    moved = hf.shifted(dx, dy)
    xs = rng.uniform(0.05, 2.95, 50)
    ys = rng.uniform(0.05, 1.95, 50)
    assert np.allclose(hf.sample(xs, ys), moved.sample(xs + dx, ys + dy), atol=1e-9, rtol=0)


def test_sample_bounds_equal_to_single_value():
    space = dict(DEFAULT_PARAM_SPACE, step_height=(0.2, 0.2))
    p = sample_terrain_params(space, np.random.default_rng(0))
    assert p.step_height == 0.2
    q = sample_terrain_params(space, np.random.default_rng(0))
    assert p == q


def test_samples_are_uniform():
    rng = np.random.default_rng(123)
    draws = [sample_terrain_params(DEFAULT_PARAM_SPACE, rng) for _ in range(10_000)]
    for name in ("step_height", "friction", "roughness"):
        lo, hi = DEFAULT_PARAM_SPACE[name]
        vals = np.array([getattr(d, name) for d in draws])
        assert stats.kstest(vals, "uniform", args=(lo, hi - lo)).pvalue > 0.01


def test_sample_errors():
    with pytest.raises(EmptySpace):
        sample_terrain_params({}, np.random.default_rng(0))
    with pytest.raises(EmptySpace):
        sample_terrain_params({"step_height": (0.3, 0.1)}, np.random.default_rng(0))


def test_file_round_trip_is_byte_stable(tmp_path):
    m = tmap([[FLOOR0, STAIR_X, FLOOR1]], seed=9)
    hf = synthesize_height_field(m, CAT, TerrainParams(roughness=0.03))
    write_height_field(hf, tmp_path / "a" / "field")
    back = read_height_field(tmp_path / "a" / "field")
    assert np.array_equal(back.data, hf.data) and back.origin == hf.origin and back.seed == 9
    write_height_field(back, tmp_path / "b" / "field")
    for suffix in (".f32", ".friction.f32", ".json"):
        a = (tmp_path / "a" / f"field{suffix}").read_bytes()
        b = (tmp_path / "b" / f"field{suffix}").read_bytes()
        assert a == b
    raw = np.fromfile(tmp_path / "a" / "field.f32", dtype="<f4")
    assert raw.size == hf.data.size
