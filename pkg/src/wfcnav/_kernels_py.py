"""Pure-Python reference kernels.

Every function here has a twin in ``_kernels.pyx`` that must return
bit-identical results; keep the arithmetic order in sync when editing.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

TRAVERSABLE = 0
BLOCKED = 1
OUT_OF_FIELD = 2


def bilinear_sample(data, res, ox, oy, xs, ys):
    """Sample a raster at world points with edge clamping.

    Returns ``(heights, out_of_field)`` where the flag is set when any point
    fell outside the cell-centre hull and had to be clamped.
    """
    data = np.asarray(data)
    ny, nx = data.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    fx = (xs - ox) / res
    fy = (ys - oy) / res
    out = bool(np.any((fx < 0.0) | (fx > nx - 1) | (fy < 0.0) | (fy > ny - 1)))
    fx = np.minimum(np.maximum(fx, 0.0), float(nx - 1))
    fy = np.minimum(np.maximum(fy, 0.0), float(ny - 1))
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    ix = np.minimum(ix, max(nx - 2, 0))
    iy = np.minimum(iy, max(ny - 2, 0))
    ix1 = np.minimum(ix + 1, nx - 1)
    iy1 = np.minimum(iy + 1, ny - 1)
    tx = fx - ix
    ty = fy - iy
    d = data.astype(np.float64, copy=False)
    h = (1.0 - ty) * ((1.0 - tx) * d[iy, ix] + tx * d[iy, ix1]) + ty * (
        (1.0 - tx) * d[iy1, ix] + tx * d[iy1, ix1]
    )
    return h, out


def _inside(nx, ny, res, ox, oy, x, y):
    fx = (x - ox) / res
    fy = (y - oy) / res
    return not (fx < 0.0 or fx > nx - 1 or fy < 0.0 or fy > ny - 1)


def traversal_codes(data, friction, res, ox, oy, ax, ay, bxs, bys,
                    h_up, h_down, tan_slope_max, window):
    """Classify straight moves from ``(ax, ay)`` to each ``(bx, by)``.

    Step height is read from a two-cell stencil around the target, so a
    raster edge counts in full no matter where the target sits on the
    interpolation ramp. Increments steeper than twice the slope limit are
    treated as discrete steps and excluded from the incline estimate.
    """
    data = np.asarray(data)
    ny, nx = data.shape
    bxs = np.atleast_1d(np.asarray(bxs, dtype=np.float64))
    bys = np.atleast_1d(np.asarray(bys, dtype=np.float64))
    n = bxs.shape[0]
    codes = np.zeros(n, dtype=np.int8)
    if not _inside(nx, ny, res, ox, oy, ax, ay):
        codes[:] = OUT_OF_FIELD
        return codes

    delta = res * 0.5
    k_steps = int(math.ceil(window / delta - 1e-9))
    if k_steps < 1:
        k_steps = 1
    half = k_steps * delta * 0.5
    step_thr = 2.0 * delta * tan_slope_max

    live = []
    ux_l = []
    uy_l = []
    for j in range(n):
        bx = float(bxs[j])
        by = float(bys[j])
        if not _inside(nx, ny, res, ox, oy, bx, by):
            codes[j] = OUT_OF_FIELD
            continue
        dx = bx - ax
        dy = by - ay
        dist = math.sqrt(dx * dx + dy * dy)
        if dist == 0.0:
            continue
        live.append(j)
        ux_l.append(dx / dist)
        uy_l.append(dy / dist)
    if not live:
        return codes

    m = len(live)
    npts = k_steps + 3
    px = np.empty((m, npts))
    py = np.empty((m, npts))
    for r, j in enumerate(live):
        bx = float(bxs[j])
        by = float(bys[j])
        ux = ux_l[r]
        uy = uy_l[r]
        px[r, 0] = bx + res * ux
        py[r, 0] = by + res * uy
        px[r, 1] = bx - res * ux
        py[r, 1] = by - res * uy
        for k in range(k_steps + 1):
            t = -half + k * delta
            px[r, 2 + k] = bx + t * ux
            py[r, 2 + k] = by + t * uy
    hs, _ = bilinear_sample(data, res, ox, oy, px.ravel(), py.ravel())
    hs = hs.reshape(m, npts)

    fr = np.asarray(friction)
    for r, j in enumerate(live):
        step = hs[r, 0] - hs[r, 1]
        if step > h_up or -step > h_down:
            codes[j] = BLOCKED
            continue
        smooth = 0.0
        for k in range(k_steps):
            inc = hs[r, 3 + k] - hs[r, 2 + k]
            if -step_thr <= inc <= step_thr:
                smooth += inc
        ci = int(math.floor((float(bxs[j]) - ox) / res + 0.5))
        cj = int(math.floor((float(bys[j]) - oy) / res + 0.5))
        ci = min(max(ci, 0), nx - 1)
        cj = min(max(cj, 0), ny - 1)
        mu = float(fr[cj, ci])
        limit = tan_slope_max if tan_slope_max < mu else mu
        if abs(smooth) / (k_steps * delta) > limit:
            codes[j] = BLOCKED
    return codes


def wfc_solve(width, height, allowed, weights, wlogw, noise, uniforms):
    """Run one observe/propagate pass of Wave Function Collapse.

    ``allowed[d][p]`` is an int bitmask of patterns permitted in direction
    ``d`` (0:+x, 1:-x, 2:+y, 3:-y) next to pattern ``p``. Returns a list of
    pattern indices in row-major order, or ``None`` on contradiction.
    """
    n_pat = len(weights)
    ncell = width * height
    full = (1 << n_pat) - 1
    dom = [full] * ncell
    weights = [float(w) for w in weights]
    wlogw = [float(v) for v in wlogw]
    noise = [float(v) for v in noise]
    uniforms = [float(v) for v in uniforms]

    count = [0] * ncell
    sum_w = [0.0] * ncell
    sum_wl = [0.0] * ncell

    def refresh(c):
        m = dom[c]
        cnt = 0
        sw = 0.0
        swl = 0.0
        p = 0
        while m:
            if m & 1:
                cnt += 1
                sw += weights[p]
                swl += wlogw[p]
            m >>= 1
            p += 1
        count[c] = cnt
        sum_w[c] = sw
        sum_wl[c] = swl

    def key(c):
        return math.log(sum_w[c]) - sum_wl[c] / sum_w[c] + noise[c]

    def propagate(stack):
        while stack:
            c = stack.pop()
            cx = c % width
            cy = c // width
            for d, (nx_, ny_) in enumerate(
                ((cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1))
            ):
                if nx_ < 0 or nx_ >= width or ny_ < 0 or ny_ >= height:
                    continue
                nb = ny_ * width + nx_
                row = allowed[d]
                mask = 0
                m = dom[c]
                p = 0
                while m:
                    if m & 1:
                        mask |= row[p]
                    m >>= 1
                    p += 1
                new = dom[nb] & mask
                if new != dom[nb]:
                    dom[nb] = new
                    if new == 0:
                        return False
                    refresh(nb)
                    stack.append(nb)
                    if count[nb] > 1:
                        heapq.heappush(heap, (key(nb), nb))
        return True

    for c in range(ncell):
        refresh(c)
    heap = [(key(c), c) for c in range(ncell) if count[c] > 1]
    heapq.heapify(heap)
    if not propagate(list(range(ncell))):
        return None

    step = 0
    while True:
        chosen = -1
        while heap:
            val, c = heapq.heappop(heap)
            if count[c] > 1 and val == key(c):
                chosen = c
                break
        if chosen < 0:
            break
        r = uniforms[step] * sum_w[chosen]
        step += 1
        m = dom[chosen]
        pick = -1
        p = 0
        while m:
            if m & 1:
                pick = p
                r -= weights[p]
                if r < 0.0:
                    break
            m >>= 1
            p += 1
        dom[chosen] = 1 << pick
        refresh(chosen)
        if not propagate([chosen]):
            return None

    out = []
    for c in range(ncell):
        m = dom[c]
        if m == 0 or m & (m - 1):
            return None
        out.append(m.bit_length() - 1)
    return out
