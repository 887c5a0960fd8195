# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``tip.geometry.traj_world_metrics_numpy``.

Same contract, same math, sequential accumulation. See tip/geometry.py for
the reference semantics and the object row layout.
"""

from libc.math cimport cos, sin, fabs, sqrt

import numpy as np


cdef inline double point_seg_sq(double px, double py,
                                double ax, double ay,
                                double bx, double by) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double len_sq = dx * dx + dy * dy
    cdef double t = 0.0
    if len_sq > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / len_sq
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    cdef double qx = ax + t * dx
    cdef double qy = ay + t * dy
    dx = px - qx
    dy = py - qy
    return dx * dx + dy * dy


cdef inline bint axis_separates(double ax, double ay,
                                double dx, double dy,
                                double ech, double esh, double ehl, double ehw,
                                double och, double osh, double ohl, double ohw) nogil:
    cdef double ext_e = ehl * fabs(ech * ax + esh * ay) + ehw * fabs(-esh * ax + ech * ay)
    cdef double ext_o = ohl * fabs(och * ax + osh * ay) + ohw * fabs(-osh * ax + och * ay)
    return fabs(dx * ax + dy * ay) > ext_e + ext_o


def traj_world_metrics(double[:, ::1] xyh, double half_len, double half_wid,
                       double[:, ::1] objs, double dt, double d_safe):
    """(first_collision_step, pre-impact hinge sum, min distance seen)."""
    cdef Py_ssize_t T = xyh.shape[0]
    cdef Py_ssize_t K = objs.shape[0]
    if K == 0:
        return -1, 0.0, float("inf")

    cdef double hinge = 0.0
    cdef double mind = float("inf")
    cdef Py_ssize_t first = -1

    cdef Py_ssize_t t_i, k, i, j
    cdef double tt, ex, ey, eh, ech, esh
    cdef double ocx, ocy, och, osh, ohl, ohw
    cdef double dx, dy, sq, best_sq, gap, dmin
    cdef bint hit, overlap
    cdef double[8] exs
    cdef double[8] oxs
    # corner sign patterns (su, sv) in perimeter order
    cdef double[4] su
    cdef double[4] sv
    su[0] = 1.0; su[1] = 1.0; su[2] = -1.0; su[3] = -1.0
    sv[0] = 1.0; sv[1] = -1.0; sv[2] = -1.0; sv[3] = 1.0

    for t_i in range(T):
        tt = t_i * dt
        ex = xyh[t_i, 0]
        ey = xyh[t_i, 1]
        eh = xyh[t_i, 2]
        ech = cos(eh)
        esh = sin(eh)
        for i in range(4):
            exs[2 * i] = ex + su[i] * ech * half_len - sv[i] * esh * half_wid
            exs[2 * i + 1] = ey + su[i] * esh * half_len + sv[i] * ech * half_wid

        hit = False
        dmin = float("inf")
        for k in range(K):
            ocx = objs[k, 0] + objs[k, 4] * tt
            ocy = objs[k, 1] + objs[k, 5] * tt
            och = objs[k, 2]
            osh = objs[k, 3]
            ohl = objs[k, 6]
            ohw = objs[k, 7]
            dx = ocx - ex
            dy = ocy - ey

            overlap = True
            if axis_separates(ech, esh, dx, dy, ech, esh, half_len, half_wid, och, osh, ohl, ohw):
                overlap = False
            elif axis_separates(-esh, ech, dx, dy, ech, esh, half_len, half_wid, och, osh, ohl, ohw):
                overlap = False
            elif axis_separates(och, osh, dx, dy, ech, esh, half_len, half_wid, och, osh, ohl, ohw):
                overlap = False
            elif axis_separates(-osh, och, dx, dy, ech, esh, half_len, half_wid, och, osh, ohl, ohw):
                overlap = False

            if overlap:
                hit = True
                break

            for i in range(4):
                oxs[2 * i] = ocx + su[i] * och * ohl - sv[i] * osh * ohw
                oxs[2 * i + 1] = ocy + su[i] * osh * ohl + sv[i] * och * ohw

            best_sq = float("inf")
            for i in range(4):
                for j in range(4):
                    # ego corner i vs object edge (j, j+1)
                    sq = point_seg_sq(exs[2 * i], exs[2 * i + 1],
                                      oxs[2 * j], oxs[2 * j + 1],
                                      oxs[2 * ((j + 1) % 4)], oxs[2 * ((j + 1) % 4) + 1])
                    if sq < best_sq:
                        best_sq = sq
                    # object corner i vs ego edge (j, j+1)
                    sq = point_seg_sq(oxs[2 * i], oxs[2 * i + 1],
                                      exs[2 * j], exs[2 * j + 1],
                                      exs[2 * ((j + 1) % 4)], exs[2 * ((j + 1) % 4) + 1])
                    if sq < best_sq:
                        best_sq = sq
            if best_sq < dmin * dmin:
                dmin = sqrt(best_sq)

        if hit:
            first = t_i
            break
        if dmin < mind:
            mind = dmin
        gap = d_safe - dmin
        if gap > 0.0:
            hinge += gap * gap * dt

    if first >= 0:
        mind = 0.0
    return first, hinge, mind
