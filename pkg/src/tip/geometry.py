"""Reference (NumPy) implementation of the hot geometry kernels.

The planner's inner loop reduces every (trajectory, world) pair to:

* per-step minimum distance between the ego rectangle and each object
  rectangle (objects move at constant velocity, heading fixed);
* the first step at which any rectangles overlap (collision);
* the accumulated proximity hinge  sum_t max(0, d_safe - d(t))^2 * dt  over
  the steps *strictly before* the first overlap (the collision term subsumes
  everything after).

Rectangle overlap uses the separating-axis test on the four face normals
(exact for oriented rectangles); distance between disjoint rectangles is the
minimum corner-to-edge distance taken both ways (exact for disjoint convex
polygons).

`tip._speedups` implements the same contract in Cython; `tip.kernels`
selects between them at import time. The two backends agree to float
round-off (not bit-for-bit: summation order differs).

Object row layout (float64, shape (K, 8)):
    [cx, cy, cos_heading, sin_heading, vx, vy, half_length, half_width]
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "pack_objects",
    "traj_world_metrics_numpy",
    "corridor_frame",
    "rect_pair_distance",
]


def pack_objects(objects) -> np.ndarray:
    """Pack WorldObject-likes into the (K, 8) kernel layout."""
    rows = np.empty((len(objects), 8), dtype=np.float64)
    for i, o in enumerate(objects):
        ch, sh = math.cos(o.heading), math.sin(o.heading)
        rows[i] = (
            o.center[0],
            o.center[1],
            ch,
            sh,
            o.speed * ch,
            o.speed * sh,
            0.5 * o.size[0],
            0.5 * o.size[1],
        )
    return rows


def _corners(cx, cy, ch, sh, hl, hw):
    """Corner coordinates of oriented rectangles; broadcasts over leading dims."""
    # u = (ch, sh) is the long axis, v = (-sh, ch) the lateral axis.
    cx, cy, ch, sh, hl, hw = np.broadcast_arrays(
        np.asarray(cx, dtype=np.float64), cy, ch, sh, hl, hw
    )
    signs = np.array(
        [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]]
    )  # (4, 2): (su, sv) per corner, in perimeter order
    ux = (ch * hl)[..., None]
    uy = (sh * hl)[..., None]
    vx = (-sh * hw)[..., None]
    vy = (ch * hw)[..., None]
    # broadcast: leading dims x 4
    x = cx[..., None] + signs[:, 0] * ux + signs[:, 1] * vx
    y = cy[..., None] + signs[:, 0] * uy + signs[:, 1] * vy
    return np.stack([x, y], axis=-1)  # (..., 4, 2)


def _point_segment_sqdist(points, seg_a, seg_b):
    """Squared distances point-to-segment.

    points: (..., P, 1, 2); seg_a/seg_b: (..., 1, S, 2) -> result (..., P, S).
    """
    d = seg_b - seg_a
    len_sq = np.sum(d * d, axis=-1)
    ap = points - seg_a
    t = np.sum(ap * d, axis=-1) / np.where(len_sq > 0, len_sq, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = seg_a + t[..., None] * d
    diff = points - closest
    return np.sum(diff * diff, axis=-1)


def rect_pair_distance(
    c1, h1, size1, c2, h2, size2
) -> float:
    """Distance between two static oriented rectangles (0 if they overlap).

    Convenience scalar wrapper used by tests and diagnostics.
    """
    xyh = np.array([[c1[0], c1[1], h1]])
    ch, sh = math.cos(h2), math.sin(h2)
    obj = np.array(
        [[c2[0], c2[1], ch, sh, 0.0, 0.0, 0.5 * size2[0], 0.5 * size2[1]]]
    )
    first, _, mind = traj_world_metrics_numpy(
        xyh, 0.5 * size1[0], 0.5 * size1[1], obj, 1.0, 0.0
    )
    return 0.0 if first == 0 else float(mind)


def traj_world_metrics_numpy(
    xyh: np.ndarray,
    half_len: float,
    half_wid: float,
    objs: np.ndarray,
    dt: float,
    d_safe: float,
):
    """(first_collision_step, pre-impact hinge sum, min distance seen).

    ``first_collision_step`` is -1 when no step overlaps. The hinge sum runs
    over steps strictly before the first overlap; ``min distance`` is over
    the same range (0.0 when a collision occurs).
    """
    xyh = np.asarray(xyh, dtype=np.float64)
    objs = np.asarray(objs, dtype=np.float64)
    T = xyh.shape[0]
    K = objs.shape[0]
    if K == 0:
        return -1, 0.0, math.inf

    t = np.arange(T) * dt

    ex, ey, eh = xyh[:, 0], xyh[:, 1], xyh[:, 2]
    ech, esh = np.cos(eh), np.sin(eh)

    ocx = objs[None, :, 0] + objs[None, :, 4] * t[:, None]  # (T, K)
    ocy = objs[None, :, 1] + objs[None, :, 5] * t[:, None]
    och = np.broadcast_to(objs[None, :, 2], (T, K))
    osh = np.broadcast_to(objs[None, :, 3], (T, K))
    ohl = np.broadcast_to(objs[None, :, 6], (T, K))
    ohw = np.broadcast_to(objs[None, :, 7], (T, K))

    # --- separating-axis overlap test on the 4 face normals ---------------
    dx = ocx - ex[:, None]
    dy = ocy - ey[:, None]

    def separated(ax, ay):
        # extent of each rect along the axis (unit axes assumed)
        ext_e = half_len * np.abs(ech[:, None] * ax + esh[:, None] * ay) + half_wid * np.abs(
            -esh[:, None] * ax + ech[:, None] * ay
        )
        ext_o = ohl * np.abs(och * ax + osh * ay) + ohw * np.abs(-osh * ax + och * ay)
        return np.abs(dx * ax + dy * ay) > ext_e + ext_o

    e_u = (np.broadcast_to(ech[:, None], (T, K)), np.broadcast_to(esh[:, None], (T, K)))
    e_v = (np.broadcast_to(-esh[:, None], (T, K)), np.broadcast_to(ech[:, None], (T, K)))
    o_u = (och, osh)
    o_v = (-osh, och)
    sep = separated(*e_u) | separated(*e_v) | separated(*o_u) | separated(*o_v)
    overlap = ~sep  # (T, K)

    # --- distances for disjoint pairs --------------------------------------
    ce = _corners(ex, ey, ech, esh, half_len, half_wid)  # (T, 4, 2)
    co = _corners(ocx, ocy, och, osh, ohl, ohw)  # (T, K, 4, 2)

    ce_b = ce[:, None, :, :]  # (T, 1, 4, 2) -> broadcast over K
    seg_o_a = co  # (T, K, 4, 2)
    seg_o_b = np.roll(co, -1, axis=2)
    d1 = _point_segment_sqdist(
        ce_b[..., :, None, :], seg_o_a[..., None, :, :], seg_o_b[..., None, :, :]
    )  # (T, K, 4, 4)

    seg_e_a = ce[:, None, :, :]
    seg_e_b = np.roll(ce, -1, axis=1)[:, None, :, :]
    d2 = _point_segment_sqdist(
        co[..., :, None, :], seg_e_a[..., None, :, :], seg_e_b[..., None, :, :]
    )

    sq = np.minimum(d1.min(axis=(2, 3)), d2.min(axis=(2, 3)))  # (T, K)
    dist = np.sqrt(np.maximum(sq, 0.0))
    dist = np.where(overlap, 0.0, dist)

    dmin = dist.min(axis=1)  # (T,)
    hit = overlap.any(axis=1)

    if hit.any():
        first = int(np.argmax(hit))
    else:
        first = -1

    upto = T if first < 0 else first
    if upto == 0:
        hinge = 0.0
        mind = 0.0
    else:
        gap = d_safe - dmin[:upto]
        hinge = float(np.sum(np.square(np.maximum(gap, 0.0))) * dt)
        mind = float(dmin[:upto].min())
    if first >= 0:
        mind = 0.0
    return first, hinge, mind


def corridor_frame(points: np.ndarray, centerline: np.ndarray):
    """Project points onto a polyline: (arclength s, signed lateral l, tangent angle).

    points: (N, 2); centerline: (P, 2) with strictly positive segment lengths.
    Projection clamps to the polyline's ends.
    """
    pts = np.asarray(points, dtype=np.float64)
    cl = np.asarray(centerline, dtype=np.float64)
    seg_vec = np.diff(cl, axis=0)  # (P-1, 2)
    seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
    seg_dir = seg_vec / seg_len[:, None]
    s0 = np.concatenate([[0.0], np.cumsum(seg_len)])

    rel = pts[:, None, :] - cl[None, :-1, :]  # (N, P-1, 2)
    t = np.einsum("nps,ps->np", rel, seg_dir)
    t = np.clip(t, 0.0, seg_len[None, :])
    proj = cl[None, :-1, :] + t[..., None] * seg_dir[None, :, :]
    diff = pts[:, None, :] - proj
    d2 = np.sum(diff * diff, axis=-1)
    best = np.argmin(d2, axis=1)  # (N,)

    n = np.arange(len(pts))
    tb = t[n, best]
    s = s0[best] + tb
    dirb = seg_dir[best]
    relb = pts - (cl[best] + tb[:, None] * dirb)
    lateral = dirb[:, 0] * relb[:, 1] - dirb[:, 1] * relb[:, 0]
    tangent = np.arctan2(dirb[:, 1], dirb[:, 0])
    return s, lateral, tangent
