"""Pure-numpy compositing kernels, the fallback when the extension is absent.

Per-pixel semantics match the compiled path exactly: the composite at a pixel
depends only on the depth-ordered subsequence of splats whose support covers
it, so this backend walks splats globally (no tile lists) and vectorizes over
each splat's support rectangle. last_entry stores sorted-splat positions
rather than tile-entry positions; the bookkeeping is private to the backend.
"""

from __future__ import annotations

import numpy as np

from splatforge.rasterizer.common import CUTOFF_D2, SIGMA_CLAMP, taper, taper_deriv


def _splat_sigma(proj, s, x0, x1, y0, y1):
    """sigma, gaussian*taper value, d2 over a rect; support mask u < cutoff."""
    mx, my = proj.means2d[s]
    a, b, c = proj.conics[s]
    xs = np.arange(x0, x1, dtype=np.float64) + 0.5 - mx
    ys = np.arange(y0, y1, dtype=np.float64) + 0.5 - my
    dx = xs[None, :]
    dy = ys[:, None]
    u = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
    support = (u < CUTOFF_D2) & (u >= 0.0)
    g = np.exp(-0.5 * u) * taper(u)
    sig = np.minimum(SIGMA_CLAMP, proj.alphas[s] * g)
    return sig, g, u, support, dx, dy


def forward(proj, stop_t, num_threads=1):
    h, w = proj.height, proj.width
    rgb = np.zeros((h, w, 3), dtype=np.float64)
    trans = np.ones((h, w), dtype=np.float64)
    ncontrib = np.zeros((h, w), dtype=np.int32)
    last = np.zeros((h, w), dtype=np.int32)

    for s in range(proj.num_splats):
        x0, y0, x1, y1 = proj.rects[s]
        sig, _, _, support, _, _ = _splat_sigma(proj, s, x0, x1, y0, y1)
        tview = trans[y0:y1, x0:x1]
        active = support & (tview >= stop_t)
        if not active.any():
            continue
        contrib = np.where(active, sig * tview, 0.0)
        rgb[y0:y1, x0:x1] += contrib[:, :, None] * proj.colors[s]
        trans[y0:y1, x0:x1] = np.where(active, tview * (1.0 - sig), tview)
        ncontrib[y0:y1, x0:x1] += active
        last[y0:y1, x0:x1] = np.where(active, s + 1, last[y0:y1, x0:x1])
    return rgb, trans, ncontrib, last


def backward(proj, final_t, last, grad_rgb, bg):
    m = proj.num_splats
    gmean = np.zeros((m, 2), dtype=np.float64)
    gcov = np.zeros((m, 3), dtype=np.float64)
    gcol = np.zeros((m, 3), dtype=np.float64)
    galpha = np.zeros(m, dtype=np.float64)

    t_run = final_t.copy()
    acc = np.zeros_like(grad_rgb)
    g_bg = final_t * (grad_rgb @ bg)

    for s in range(m - 1, -1, -1):
        x0, y0, x1, y1 = proj.rects[s]
        sig, g, u, support, dx, dy = _splat_sigma(proj, s, x0, x1, y0, y1)
        active = support & (s < last[y0:y1, x0:x1])
        if not active.any():
            continue
        one_minus = np.where(active, 1.0 - sig, 1.0)
        tprev = t_run[y0:y1, x0:x1] / one_minus
        gp = grad_rgb[y0:y1, x0:x1]
        dot_c = gp @ proj.colors[s]
        suffix = np.einsum("ijk,ijk->ij", gp, acc[y0:y1, x0:x1]) + g_bg[y0:y1, x0:x1]
        dsig = np.where(active, dot_c * tprev - suffix / one_minus, 0.0)

        weight = np.where(active, sig * tprev, 0.0)
        gcol[s] = np.einsum("ij,ijk->k", weight, gp)

        unclamped = active & (sig < SIGMA_CLAMP)
        alpha = proj.alphas[s]
        galpha[s] = np.sum(dsig * g, where=unclamped)
        wp = taper_deriv(u)
        gexp = np.exp(-0.5 * u)
        gd2 = np.where(unclamped, dsig * alpha * (gexp * wp - 0.5 * g), 0.0)
        a, b, c = proj.conics[s]
        ux = a * dx + b * dy
        uy = b * dx + c * dy
        gmean[s, 0] = np.sum(gd2 * (-2.0 * ux))
        gmean[s, 1] = np.sum(gd2 * (-2.0 * uy))
        gcov[s, 0] = -np.sum(gd2 * ux * ux)
        gcov[s, 1] = -2.0 * np.sum(gd2 * ux * uy)
        gcov[s, 2] = -np.sum(gd2 * uy * uy)

        acc[y0:y1, x0:x1] += weight[:, :, None] * proj.colors[s]
        t_run[y0:y1, x0:x1] = np.where(active, tprev, t_run[y0:y1, x0:x1])
    return gmean, gcov, gcol, galpha
