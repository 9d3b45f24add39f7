# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Tiled compositing kernels.

Splat data arrives depth-sorted; binning appends splats to each covered tile
in that order so every per-tile list stays depth-sorted. Per-contribution
math runs in float64; forward tiles are independent (disjoint pixels) and may
run in parallel, the backward accumulates per-splat gradients serially in a
fixed order so results do not depend on thread count.
"""

from cython.parallel import parallel, prange
from libc.math cimport exp
from libc.stdlib cimport free, malloc

import numpy as np


def bin_splats(int[:, ::1] rects, int width, int height, int tile_size):
    """CSR tile lists: (offsets (T+1,), entries (K,)) with entries in depth order."""
    cdef int tiles_x = (width + tile_size - 1) // tile_size
    cdef int tiles_y = (height + tile_size - 1) // tile_size
    cdef int ntiles = tiles_x * tiles_y
    cdef int m = rects.shape[0]
    cdef int s, tx, ty, tx0, tx1, ty0, ty1, t

    offsets_np = np.zeros(ntiles + 1, dtype=np.int64)
    cdef long[::1] offsets = offsets_np
    for s in range(m):
        tx0 = rects[s, 0] // tile_size
        ty0 = rects[s, 1] // tile_size
        tx1 = (rects[s, 2] - 1) // tile_size
        ty1 = (rects[s, 3] - 1) // tile_size
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                offsets[ty * tiles_x + tx + 1] += 1
    for t in range(ntiles):
        offsets[t + 1] += offsets[t]

    entries_np = np.empty(offsets[ntiles], dtype=np.int32)
    cdef int[::1] entries = entries_np
    fill_np = offsets_np[:ntiles].copy()
    cdef long[::1] fill = fill_np
    for s in range(m):
        tx0 = rects[s, 0] // tile_size
        ty0 = rects[s, 1] // tile_size
        tx1 = (rects[s, 2] - 1) // tile_size
        ty1 = (rects[s, 3] - 1) // tile_size
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                t = ty * tiles_x + tx
                entries[fill[t]] = s
                fill[t] += 1
    return offsets_np, entries_np


def forward(double[:, ::1] means2d, double[:, ::1] conics, double[:, ::1] colors,
            double[::1] alphas, int[:, ::1] rects,
            long[::1] tile_offsets, int[::1] tile_entries,
            int height, int width, int tile_size,
            double stop_t, double cutoff, double taper_start, double sigma_clamp,
            int num_threads):
    """Composite into fresh buffers; returns (rgb, T, ncontrib, last_entry)."""
    cdef int tiles_x = (width + tile_size - 1) // tile_size
    cdef int tiles_y = (height + tile_size - 1) // tile_size
    cdef int ntiles = tiles_x * tiles_y

    rgb_np = np.zeros((height, width, 3), dtype=np.float64)
    t_np = np.ones((height, width), dtype=np.float64)
    nc_np = np.zeros((height, width), dtype=np.int32)
    last_np = np.zeros((height, width), dtype=np.int32)
    cdef double[:, :, ::1] out_rgb = rgb_np
    cdef double[:, ::1] out_t = t_np
    cdef int[:, ::1] out_nc = nc_np
    cdef int[:, ::1] out_last = last_np

    cdef double inv_taper = 1.0 / (cutoff - taper_start)
    cdef int t, tx, ty, px0, py0, px1, py1, npx, n_done
    cdef int k, s, sx0, sx1, sy0, sy1, px, py
    cdef long klo, khi
    cdef double mx, my, a, b, c, al, cr, cg, cb
    cdef double dx, dy, u, g, w, ss, sig, tcur, tnew

    with nogil, parallel(num_threads=num_threads):
        for t in prange(ntiles, schedule='static'):
            tx = t % tiles_x
            ty = t // tiles_x
            px0 = tx * tile_size
            py0 = ty * tile_size
            px1 = min(px0 + tile_size, width)
            py1 = min(py0 + tile_size, height)
            npx = (px1 - px0) * (py1 - py0)
            n_done = 0
            klo = tile_offsets[t]
            khi = tile_offsets[t + 1]
            for k in range(klo, khi):
                if n_done == npx:
                    break
                s = tile_entries[k]
                sx0 = max(rects[s, 0], px0)
                sy0 = max(rects[s, 1], py0)
                sx1 = min(rects[s, 2], px1)
                sy1 = min(rects[s, 3], py1)
                mx = means2d[s, 0]
                my = means2d[s, 1]
                a = conics[s, 0]
                b = conics[s, 1]
                c = conics[s, 2]
                al = alphas[s]
                cr = colors[s, 0]
                cg = colors[s, 1]
                cb = colors[s, 2]
                for py in range(sy0, sy1):
                    dy = (py + 0.5) - my
                    for px in range(sx0, sx1):
                        tcur = out_t[py, px]
                        if tcur < stop_t:
                            continue
                        dx = (px + 0.5) - mx
                        u = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
                        if u >= cutoff or u < 0.0:
                            continue
                        g = exp(-0.5 * u)
                        if u > taper_start:
                            ss = (cutoff - u) * inv_taper
                            w = ss * ss * (3.0 - 2.0 * ss)
                        else:
                            w = 1.0
                        sig = al * g * w
                        if sig > sigma_clamp:
                            sig = sigma_clamp
                        out_rgb[py, px, 0] += cr * sig * tcur
                        out_rgb[py, px, 1] += cg * sig * tcur
                        out_rgb[py, px, 2] += cb * sig * tcur
                        tnew = tcur * (1.0 - sig)
                        out_t[py, px] = tnew
                        out_nc[py, px] += 1
                        out_last[py, px] = k + 1
                        if tnew < stop_t:
                            n_done = n_done + 1
    return rgb_np, t_np, nc_np, last_np


def backward(double[:, ::1] means2d, double[:, ::1] conics, double[:, ::1] colors,
             double[::1] alphas, int[:, ::1] rects,
             long[::1] tile_offsets, int[::1] tile_entries,
             int height, int width, int tile_size,
             double[:, ::1] final_t, int[:, ::1] last_entry,
             double[:, :, ::1] grad_rgb, double[::1] bg,
             double cutoff, double taper_start, double sigma_clamp):
    """Per-splat gradients of <grad_rgb, image>: (gmean, gcov, gcolor, galpha).

    gcov is packed (xx, xy, yy) with the xy entry carrying the tied
    off-diagonal derivative. Reverse traversal recovers each splat's incoming
    transmittance by dividing the running product by (1 - sigma); the sigma
    clamp bounds every division.
    """
    cdef int m = means2d.shape[0]
    gmean_np = np.zeros((m, 2), dtype=np.float64)
    gcov_np = np.zeros((m, 3), dtype=np.float64)
    gcol_np = np.zeros((m, 3), dtype=np.float64)
    galpha_np = np.zeros(m, dtype=np.float64)
    cdef double[:, ::1] gmean = gmean_np
    cdef double[:, ::1] gcov = gcov_np
    cdef double[:, ::1] gcol = gcol_np
    cdef double[::1] galpha = galpha_np

    cdef int tiles_x = (width + tile_size - 1) // tile_size
    cdef int tiles_y = (height + tile_size - 1) // tile_size
    cdef int ntiles = tiles_x * tiles_y
    cdef double inv_taper = 1.0 / (cutoff - taper_start)

    cdef double *t_run = <double *> malloc(tile_size * tile_size * sizeof(double))
    cdef double *acc = <double *> malloc(tile_size * tile_size * 3 * sizeof(double))
    cdef double *g_bg = <double *> malloc(tile_size * tile_size * sizeof(double))
    if t_run == NULL or acc == NULL or g_bg == NULL:
        free(t_run); free(acc); free(g_bg)
        raise MemoryError()

    cdef int t, tx, ty, px0, py0, px1, py1, tile_w
    cdef long k
    cdef int s, sx0, sx1, sy0, sy1, px, py, pl
    cdef double mx, my, a, b, c, al, cr, cg, cb
    cdef double dx, dy, u, g, w, wp, ss, sig, one_minus, tprev
    cdef double gp0, gp1, gp2, dot_c, dsig, gd2, ux, uy, gw

    try:
        with nogil:
            for t in range(ntiles):
                tx = t % tiles_x
                ty = t // tiles_x
                px0 = tx * tile_size
                py0 = ty * tile_size
                px1 = min(px0 + tile_size, width)
                py1 = min(py0 + tile_size, height)
                tile_w = px1 - px0
                for py in range(py0, py1):
                    for px in range(px0, px1):
                        pl = (py - py0) * tile_w + (px - px0)
                        t_run[pl] = final_t[py, px]
                        acc[3 * pl] = 0.0
                        acc[3 * pl + 1] = 0.0
                        acc[3 * pl + 2] = 0.0
                        g_bg[pl] = final_t[py, px] * (
                            grad_rgb[py, px, 0] * bg[0]
                            + grad_rgb[py, px, 1] * bg[1]
                            + grad_rgb[py, px, 2] * bg[2])
                for k in range(tile_offsets[t + 1] - 1, tile_offsets[t] - 1, -1):
                    s = tile_entries[k]
                    sx0 = max(rects[s, 0], px0)
                    sy0 = max(rects[s, 1], py0)
                    sx1 = min(rects[s, 2], px1)
                    sy1 = min(rects[s, 3], py1)
                    mx = means2d[s, 0]
                    my = means2d[s, 1]
                    a = conics[s, 0]
                    b = conics[s, 1]
                    c = conics[s, 2]
                    al = alphas[s]
                    cr = colors[s, 0]
                    cg = colors[s, 1]
                    cb = colors[s, 2]
                    for py in range(sy0, sy1):
                        dy = (py + 0.5) - my
                        for px in range(sx0, sx1):
                            if k >= last_entry[py, px]:
                                continue
                            dx = (px + 0.5) - mx
                            u = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
                            if u >= cutoff or u < 0.0:
                                continue
                            g = exp(-0.5 * u)
                            if u > taper_start:
                                ss = (cutoff - u) * inv_taper
                                w = ss * ss * (3.0 - 2.0 * ss)
                                wp = -6.0 * ss * (1.0 - ss) * inv_taper
                            else:
                                w = 1.0
                                wp = 0.0
                            gw = g * w
                            sig = al * gw
                            if sig > sigma_clamp:
                                sig = sigma_clamp
                            one_minus = 1.0 - sig
                            pl = (py - py0) * tile_w + (px - px0)
                            tprev = t_run[pl] / one_minus
                            gp0 = grad_rgb[py, px, 0]
                            gp1 = grad_rgb[py, px, 1]
                            gp2 = grad_rgb[py, px, 2]
                            dot_c = gp0 * cr + gp1 * cg + gp2 * cb
                            dsig = dot_c * tprev - (
                                gp0 * acc[3 * pl] + gp1 * acc[3 * pl + 1]
                                + gp2 * acc[3 * pl + 2] + g_bg[pl]) / one_minus
                            gcol[s, 0] += gp0 * sig * tprev
                            gcol[s, 1] += gp1 * sig * tprev
                            gcol[s, 2] += gp2 * sig * tprev
                            if sig < sigma_clamp:
                                galpha[s] += dsig * gw
                                gd2 = dsig * al * (g * wp - 0.5 * gw)
                                ux = a * dx + b * dy
                                uy = b * dx + c * dy
                                gmean[s, 0] += gd2 * (-2.0 * ux)
                                gmean[s, 1] += gd2 * (-2.0 * uy)
                                gcov[s, 0] -= gd2 * ux * ux
                                gcov[s, 1] -= 2.0 * gd2 * ux * uy
                                gcov[s, 2] -= gd2 * uy * uy
                            acc[3 * pl] += cr * sig * tprev
                            acc[3 * pl + 1] += cg * sig * tprev
                            acc[3 * pl + 2] += cb * sig * tprev
                            t_run[pl] = tprev
    finally:
        free(t_run)
        free(acc)
        free(g_bg)
    return gmean_np, gcov_np, gcol_np, galpha_np
