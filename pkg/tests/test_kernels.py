"""The compiled kernels must agree bit for bit with the reference implementation."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wfcnav import _kernels_py, kernels
from wfcnav.worldgen import bundled_examples, build_tile_catalog

compiled = pytest.importorskip("wfcnav._kernels")


def _field(seed, ny=24, nx=31):
    rng = np.random.default_rng(seed)
    data = rng.normal(0.0, 0.15, size=(ny, nx)).astype(np.float32)
    data[:, nx // 2:] += np.float32(0.25)
    fr = rng.uniform(0.3, 1.2, size=(ny, nx)).astype(np.float32)
    return data, fr


def test_backend_is_selected():
    assert kernels.BACKEND in ("cython", "python")


@given(st.integers(0, 2**32 - 1))
def test_bilinear_sample_matches(seed):
    data, _ = _field(seed)
    rng = np.random.default_rng(seed + 1)
    xs = rng.uniform(-0.5, 3.6, 200)
    ys = rng.uniform(-0.5, 2.8, 200)
    h_py, out_py = _kernels_py.bilinear_sample(data, 0.1, 0.05, 0.05, xs, ys)
    h_c, out_c = compiled.bilinear_sample(data, 0.1, 0.05, 0.05, xs, ys)
    assert out_py == out_c
    assert np.array_equal(np.asarray(h_py), np.asarray(h_c))


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2.5))
def test_traversal_codes_match(seed, speed):
    data, fr = _field(seed)
    rng = np.random.default_rng(seed + 2)
    ax, ay = rng.uniform(0.2, 2.9), rng.uniform(0.2, 2.2)
    bx = ax + rng.uniform(-0.6, 0.6, 64)
    by = ay + rng.uniform(-0.6, 0.6, 64)
    h_up, h_down = 0.2 * (1 - speed / 5), 0.35 * (1 - speed / 5)
    args = (data, fr, 0.1, 0.05, 0.05, ax, ay, bx, by, h_up, h_down, np.tan(0.45), 0.5)
    assert np.array_equal(_kernels_py.traversal_codes(*args), np.asarray(compiled.traversal_codes(*args)))


@pytest.mark.parametrize("name", sorted(bundled_examples()))
@pytest.mark.parametrize("n", [2, 3])
def test_wfc_solve_matches(name, n):
    cat = build_tile_catalog(bundled_examples()[name], n)
    allowed = cat.compatibility()
    w = np.asarray(cat.weights, dtype=float)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        width, height = 9, 7
        noise = rng.random(width * height) * 1e-6
        uni = rng.random(width * height)
        a = _kernels_py.wfc_solve(width, height, allowed, w, w * np.log(w), noise, uni)
        b = compiled.wfc_solve(width, height, allowed, w, w * np.log(w), noise, uni)
        assert a == (None if b is None else list(b))
