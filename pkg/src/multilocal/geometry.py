"""Vectorized distance primitives between segments, spheres and boxes.

All functions broadcast over leading dimensions; the last axis holds xyz.
Gradients are returned with respect to the two segment endpoints and follow
from the envelope theorem at the closest segment parameter.
"""

import numpy as np

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_ITERS = 48


def point_segment(p, a, b):
    """Closest-point parameter and distance from ``p`` to segment ``[a, b]``.

    Returns
    -------
    dist, s, q
        Distance, parameter in ``[0, 1]`` and the closest point on the segment.
    """
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, np.sum((p - a) * ab, axis=-1) / denom, 0.0)
    s = np.clip(s, 0.0, 1.0)
    q = a + s[..., None] * ab
    return np.linalg.norm(p - q, axis=-1), s, q


def box_sd(p, lo, hi):
    """Signed distance from points ``p`` to the axis-aligned box ``[lo, hi]``."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    q = np.abs(p - c) - h
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def box_sd_grad(p, lo, hi):
    """Gradient of :func:`box_sd` with respect to ``p``."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    rel = p - c
    q = np.abs(rel) - h
    qpos = np.maximum(q, 0.0)
    n_out = np.linalg.norm(qpos, axis=-1)
    sign = np.where(rel >= 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_out = sign * qpos / n_out[..., None]
    axis = np.argmax(q, axis=-1)
    g_in = np.zeros(np.broadcast_shapes(p.shape, lo.shape))
    np.put_along_axis(g_in, axis[..., None], 1.0, axis=-1)
    g_in = g_in * sign
    return np.where((n_out > 0)[..., None], g_out, g_in)


def segment_box(a, b, lo, hi):
    """Minimum signed distance from segment ``[a, b]`` to a box.

    The signed distance of a convex set is convex, so its restriction to the
    segment is a convex function of the parameter and golden-section search
    finds the global minimum.

    Returns
    -------
    dist, s
        Minimum signed distance and the minimizing parameter.
    """
    shape = np.broadcast_shapes(a.shape, b.shape, lo.shape, hi.shape)
    a = np.broadcast_to(a, shape)
    ab = np.broadcast_to(b, shape) - a
    lo = np.broadcast_to(lo, shape)
    hi = np.broadcast_to(hi, shape)

    def f(s):
        return box_sd(a + s[..., None] * ab, lo, hi)

    left = np.zeros(shape[:-1])
    right = np.ones(shape[:-1])
    x1 = right - _GOLDEN * (right - left)
    x2 = left + _GOLDEN * (right - left)
    f1, f2 = f(x1), f(x2)
    for _ in range(_GOLDEN_ITERS):
        go_left = f1 < f2
        right = np.where(go_left, x2, right)
        left = np.where(go_left, left, x1)
        x2n = np.where(go_left, x1, left + _GOLDEN * (right - left))
        x1n = np.where(go_left, right - _GOLDEN * (right - left), x2)
        new = np.where(go_left, x1n, x2n)
        fnew = f(new)
        f1, f2 = np.where(go_left, fnew, f2), np.where(go_left, f1, fnew)
        x1, x2 = x1n, x2n
    s = 0.5 * (left + right)
    best = f(s)
    for edge in (0.0, 1.0):
        se = np.full_like(s, edge)
        fe = f(se)
        better = fe < best
        s = np.where(better, se, s)
        best = np.where(better, fe, best)
    return best, s


def segment_box_grad(a, b, lo, hi, delta=1e-7):
    """Distance and endpoint gradients of :func:`segment_box`, exact at kinks.

    Inside the box the signed distance along the segment is piecewise linear,
    so its minimum often sits where two faces tie.  There the minimizer is
    snapped onto the intersection of the two linear pieces, and the gradient
    is the convex combination of the piece gradients whose slope along the
    segment vanishes.  ``delta`` is the parameter offset used to sample each
    piece.
    """
    d, s = segment_box(a, b, lo, hi)
    ab = b - a
    q = a + s[..., None] * ab
    g = box_sd_grad(q, lo, hi)

    sm = np.clip(s - delta, 0.0, 1.0)
    sp = np.clip(s + delta, 0.0, 1.0)
    qm = a + sm[..., None] * ab
    qp = a + sp[..., None] * ab
    gm = box_sd_grad(qm, lo, hi)
    gp = box_sd_grad(qp, lo, hi)
    fm = box_sd(qm, lo, hi)
    fp = box_sd(qp, lo, hi)
    slope_m = np.sum(gm * ab, axis=-1)
    slope_p = np.sum(gp * ab, axis=-1)
    tiny = 1e-9 * (1.0 + np.linalg.norm(ab, axis=-1))
    kink = (d < 0) & (s > 0) & (s < 1) & (slope_m < -tiny) & (slope_p > tiny) \
        & (fm < 0) & (fp < 0)
    if np.any(kink):
        with np.errstate(divide="ignore", invalid="ignore"):
            den = slope_p - slope_m
            s_new = sm + (fp - fm - slope_p * (sp - sm)) / (-den)
            # the two lines  fm + slope_m (x - sm)  and  fp + slope_p (x - sp)  meet at s_new
            d_new = fm + slope_m * (s_new - sm)
            lam = slope_p / den
        ok = kink & (s_new >= sm) & (s_new <= sp) & (d_new <= d + 1e-12)
        s = np.where(ok, s_new, s)
        d = np.where(ok, d_new, d)
        with np.errstate(invalid="ignore"):
            mixed = lam[..., None] * gm + (1.0 - lam)[..., None] * gp
        g = np.where(ok[..., None], mixed, g)
    return d, (1.0 - s)[..., None] * g, s[..., None] * g


def segment_sphere_grad(a, b, center):
    """Distance from segment to a sphere center, with endpoint gradients."""
    d, s, q = point_segment(center, a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        n = np.where((d > 0)[..., None], (q - center) / d[..., None], 0.0)
    return d, (1.0 - s)[..., None] * n, s[..., None] * n
