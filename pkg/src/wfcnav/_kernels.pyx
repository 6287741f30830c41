# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; bit-identical twins of ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, log, fabs, ceil
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    TRAVERSABLE = 0
    BLOCKED = 1
    OUT_OF_FIELD = 2


cdef inline double _sample(const float[:, ::1] d, int nx, int ny, double res,
                           double ox, double oy, double x, double y, int* out) noexcept nogil:
    cdef double fx = (x - ox) / res
    cdef double fy = (y - oy) / res
    cdef int ix, iy, ix1, iy1
    cdef double tx, ty
    if fx < 0.0 or fx > nx - 1 or fy < 0.0 or fy > ny - 1:
        out[0] = 1
    if fx < 0.0:
        fx = 0.0
    if fx > nx - 1:
        fx = nx - 1
    if fy < 0.0:
        fy = 0.0
    if fy > ny - 1:
        fy = ny - 1
    ix = <int>floor(fx)
    iy = <int>floor(fy)
    if ix > nx - 2:
        ix = nx - 2 if nx >= 2 else 0
    if iy > ny - 2:
        iy = ny - 2 if ny >= 2 else 0
    ix1 = ix + 1 if ix + 1 < nx else nx - 1
    iy1 = iy + 1 if iy + 1 < ny else ny - 1
    tx = fx - ix
    ty = fy - iy
    return (1.0 - ty) * ((1.0 - tx) * <double>d[iy, ix] + tx * <double>d[iy, ix1]) + ty * (
        (1.0 - tx) * <double>d[iy1, ix] + tx * <double>d[iy1, ix1])


def bilinear_sample(data, double res, double ox, double oy, xs, ys):
    cdef const float[:, ::1] d = np.ascontiguousarray(data, dtype=np.float32)
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    cdef int ny = d.shape[0], nx = d.shape[1]
    cdef int out = 0
    res_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] h = res_arr
    with nogil:
        for i in range(n):
            h[i] = _sample(d, nx, ny, res, ox, oy, xv[i], yv[i], &out)
    shape = np.shape(xs)
    return res_arr.reshape(shape), bool(out)


cdef inline bint _inside(int nx, int ny, double res, double ox, double oy,
                         double x, double y) noexcept nogil:
    cdef double fx = (x - ox) / res
    cdef double fy = (y - oy) / res
    return not (fx < 0.0 or fx > nx - 1 or fy < 0.0 or fy > ny - 1)


def traversal_codes(data, friction, double res, double ox, double oy,
                    double ax, double ay, bxs, bys, double h_up, double h_down,
                    double tan_slope_max, double window):
    cdef const float[:, ::1] d = np.ascontiguousarray(data, dtype=np.float32)
    cdef const float[:, ::1] fr = np.ascontiguousarray(friction, dtype=np.float32)
    cdef const double[::1] bx = np.ascontiguousarray(np.atleast_1d(bxs), dtype=np.float64).ravel()
    cdef const double[::1] by = np.ascontiguousarray(np.atleast_1d(bys), dtype=np.float64).ravel()
    cdef Py_ssize_t n = bx.shape[0], j
    cdef int ny = d.shape[0], nx = d.shape[1]
    codes_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] codes = codes_arr
    cdef double delta = res * 0.5
    cdef int k_steps = <int>ceil(window / delta - 1e-9)
    cdef int k, ci, cj, dummy = 0
    cdef double half, step_thr, dx, dy, dist, ux, uy, hf, hb, step, smooth, prev, cur, t, mu, limit
    if k_steps < 1:
        k_steps = 1
    half = k_steps * delta * 0.5
    step_thr = 2.0 * delta * tan_slope_max
    if not _inside(nx, ny, res, ox, oy, ax, ay):
        codes_arr[:] = OUT_OF_FIELD
        return codes_arr
    with nogil:
        for j in range(n):
            if not _inside(nx, ny, res, ox, oy, bx[j], by[j]):
                codes[j] = OUT_OF_FIELD
                continue
            dx = bx[j] - ax
            dy = by[j] - ay
            dist = sqrt(dx * dx + dy * dy)
            if dist == 0.0:
                continue
            ux = dx / dist
            uy = dy / dist
            hf = _sample(d, nx, ny, res, ox, oy, bx[j] + res * ux, by[j] + res * uy, &dummy)
            hb = _sample(d, nx, ny, res, ox, oy, bx[j] - res * ux, by[j] - res * uy, &dummy)
            step = hf - hb
            if step > h_up or -step > h_down:
                codes[j] = BLOCKED
                continue
            smooth = 0.0
            t = -half
            prev = _sample(d, nx, ny, res, ox, oy, bx[j] + t * ux, by[j] + t * uy, &dummy)
            for k in range(k_steps):
                t = -half + (k + 1) * delta
                cur = _sample(d, nx, ny, res, ox, oy, bx[j] + t * ux, by[j] + t * uy, &dummy)
                if -step_thr <= cur - prev <= step_thr:
                    smooth += cur - prev
                prev = cur
            ci = <int>floor((bx[j] - ox) / res + 0.5)
            cj = <int>floor((by[j] - oy) / res + 0.5)
            if ci < 0:
                ci = 0
            if ci > nx - 1:
                ci = nx - 1
            if cj < 0:
                cj = 0
            if cj > ny - 1:
                cj = ny - 1
            mu = <double>fr[cj, ci]
            limit = tan_slope_max if tan_slope_max < mu else mu
            if fabs(smooth) / (k_steps * delta) > limit:
                codes[j] = BLOCKED
    return codes_arr


cdef inline double _key(double sw, double swl, double nz) noexcept nogil:
    return log(sw) - swl / sw + nz


cdef struct HeapItem:
    double key
    int cell


cdef inline bint _less(HeapItem a, HeapItem b) noexcept nogil:
    return a.key < b.key or (a.key == b.key and a.cell < b.cell)


cdef inline void _heap_push(HeapItem* h, Py_ssize_t* n, double key, int cell) noexcept nogil:
    cdef Py_ssize_t i = n[0]
    cdef Py_ssize_t parent
    cdef HeapItem item
    item.key = key
    item.cell = cell
    n[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if not _less(item, h[parent]):
            break
        h[i] = h[parent]
        i = parent
    h[i] = item


cdef inline HeapItem _heap_pop(HeapItem* h, Py_ssize_t* n) noexcept nogil:
    cdef HeapItem top = h[0]
    cdef HeapItem last
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t child
    n[0] -= 1
    if n[0] > 0:
        last = h[n[0]]
        while True:
            child = 2 * i + 1
            if child >= n[0]:
                break
            if child + 1 < n[0] and _less(h[child + 1], h[child]):
                child += 1
            if not _less(h[child], last):
                break
            h[i] = h[child]
            i = child
        h[i] = last
    return top


def wfc_solve(int width, int height, allowed, weights, wlogw, noise, uniforms):
    cdef int n_pat = len(weights)
    cdef int nw = (n_pat + 63) // 64
    cdef int ncell = width * height
    cdef Py_ssize_t c, nb, p, w, d
    cdef cnp.ndarray[uint64_t, ndim=3] al = np.zeros((4, n_pat, nw), dtype=np.uint64)
    for d in range(4):
        for p in range(n_pat):
            m = int(allowed[d][p])
            for w in range(nw):
                al[d, p, w] = (m >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    cdef const double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] wl = np.ascontiguousarray(wlogw, dtype=np.float64)
    cdef const double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef const double[::1] un = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef uint64_t[:, :, ::1] alv = al
    dom_arr = np.zeros((ncell, nw), dtype=np.uint64)
    cdef uint64_t[:, ::1] dom = dom_arr
    cnt_arr = np.zeros(ncell, dtype=np.int64)
    cdef int64_t[::1] cnt = cnt_arr
    sw_arr = np.zeros(ncell, dtype=np.float64)
    swl_arr = np.zeros(ncell, dtype=np.float64)
    cdef double[::1] sw = sw_arr
    cdef double[::1] swl = swl_arr
    cdef uint64_t[::1] mask = np.zeros(nw, dtype=np.uint64)
    cdef int* stack = <int*>malloc(sizeof(int) * (ncell * (n_pat + 1) + 8))
    # each cell enters once up front and at most once per strict domain shrink
    cdef HeapItem* heap = <HeapItem*>malloc(sizeof(HeapItem) * (ncell * (n_pat + 1) + 8))
    cdef Py_ssize_t hn = 0
    cdef HeapItem item
    if stack == NULL or heap == NULL:
        free(stack)
        free(heap)
        raise MemoryError()
    cdef int top = 0
    cdef int chosen, pick, step = 0
    cdef bint ok = True
    cdef double r

    for c in range(ncell):
        for w in range(nw):
            if w == nw - 1 and n_pat % 64 != 0:
                dom[c, w] = ((<uint64_t>1) << (n_pat % 64)) - 1
            else:
                dom[c, w] = <uint64_t>0xFFFFFFFFFFFFFFFF
    try:
        with nogil:
            for c in range(ncell):
                _refresh(dom, c, nw, n_pat, wt, wl, cnt, sw, swl)
                stack[top] = <int>c
                top += 1
            for c in range(ncell):
                if cnt[c] > 1:
                    _heap_push(heap, &hn, _key(sw[c], swl[c], nz[c]), <int>c)
            ok = _propagate(dom, alv, stack, &top, width, height, nw, n_pat, wt, wl, cnt, sw, swl, mask,
                            nz, heap, &hn)
            while ok:
                chosen = -1
                while hn > 0:
                    item = _heap_pop(heap, &hn)
                    if cnt[item.cell] > 1 and item.key == _key(sw[item.cell], swl[item.cell], nz[item.cell]):
                        chosen = item.cell
                        break
                if chosen < 0:
                    break
                r = un[step] * sw[chosen]
                step += 1
                pick = -1
                for p in range(n_pat):
                    if (dom[chosen, p // 64] >> (p % 64)) & 1:
                        pick = <int>p
                        r -= wt[p]
                        if r < 0.0:
                            break
                for w in range(nw):
                    dom[chosen, w] = 0
                dom[chosen, pick // 64] = (<uint64_t>1) << (pick % 64)
                _refresh(dom, chosen, nw, n_pat, wt, wl, cnt, sw, swl)
                top = 0
                stack[top] = chosen
                top += 1
                ok = _propagate(dom, alv, stack, &top, width, height, nw, n_pat, wt, wl, cnt, sw, swl, mask,
                                nz, heap, &hn)
    finally:
        free(stack)
        free(heap)
    if not ok:
        return None
    out = []
    for c in range(ncell):
        if cnt[c] != 1:
            return None
        for p in range(n_pat):
            if (dom[c, p // 64] >> (p % 64)) & 1:
                out.append(p)
                break
    return out


cdef void _refresh(uint64_t[:, ::1] dom, Py_ssize_t c, int nw, int n_pat,
                   const double[::1] wt, const double[::1] wl, int64_t[::1] cnt,
                   double[::1] sw, double[::1] swl) noexcept nogil:
    cdef Py_ssize_t p
    cdef int64_t k = 0
    cdef double a = 0.0, b = 0.0
    for p in range(n_pat):
        if (dom[c, p // 64] >> (p % 64)) & 1:
            k += 1
            a += wt[p]
            b += wl[p]
    cnt[c] = k
    sw[c] = a
    swl[c] = b


cdef bint _propagate(uint64_t[:, ::1] dom, uint64_t[:, :, ::1] al, int* stack, int* top,
                     int width, int height, int nw, int n_pat,
                     const double[::1] wt, const double[::1] wl, int64_t[::1] cnt,
                     double[::1] sw, double[::1] swl, uint64_t[::1] mask,
                     const double[::1] nz, HeapItem* heap, Py_ssize_t* hn) noexcept nogil:
    cdef int c, cx, cy, d, nxx, nyy, nb
    cdef Py_ssize_t p, w
    cdef bint changed, empty
    cdef uint64_t newv
    while top[0] > 0:
        top[0] -= 1
        c = stack[top[0]]
        cx = c % width
        cy = c // width
        for d in range(4):
            if d == 0:
                nxx = cx + 1
                nyy = cy
            elif d == 1:
                nxx = cx - 1
                nyy = cy
            elif d == 2:
                nxx = cx
                nyy = cy + 1
            else:
                nxx = cx
                nyy = cy - 1
            if nxx < 0 or nxx >= width or nyy < 0 or nyy >= height:
                continue
            nb = nyy * width + nxx
            for w in range(nw):
                mask[w] = 0
            for p in range(n_pat):
                if (dom[c, p // 64] >> (p % 64)) & 1:
                    for w in range(nw):
                        mask[w] |= al[d, p, w]
            changed = False
            empty = True
            for w in range(nw):
                newv = dom[nb, w] & mask[w]
                if newv != dom[nb, w]:
                    changed = True
                    dom[nb, w] = newv
                if newv != 0:
                    empty = False
            if changed:
                if empty:
                    return False
                _refresh(dom, nb, nw, n_pat, wt, wl, cnt, sw, swl)
                stack[top[0]] = nb
                top[0] += 1
                if cnt[nb] > 1:
                    _heap_push(heap, hn, _key(sw[nb], swl[nb], nz[nb]), nb)
    return True
