"""Low-level intersection/distance kernels (numba-compiled).

Everything here works on raw float64 arrays so the hot paths (triangle pair
tests, BVH pair traversal) run at native speed.  Higher-level modules wrap
these in friendlier APIs; tests exercise them both directly and through
brute-force oracles built from the same triangle primitives.

Triangle-triangle intersection follows Moller's interval test with the
coplanar cases handled by 2D edge/containment tests; touching (shared point)
counts as intersecting.  Distances between disjoint triangles are exact: the
minimum over the 9 edge-edge and 6 vertex-face feature pairs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EPS = 1e-14


@njit(cache=True, inline="always")
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@njit(cache=True)
def _closest_pt_tri(p, a, b, c):
    """Closest point on triangle abc to p (Ericson, Real-Time Collision Detection)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ab[0] * ap[0] + ab[1] * ap[1] + ab[2] * ap[2]
    d2 = ac[0] * ap[0] + ac[1] * ap[1] + ac[2] * ap[2]
    if d1 <= 0.0 and d2 <= 0.0:
        return a.copy()
    bp = p - b
    d3 = ab[0] * bp[0] + ab[1] * bp[1] + ab[2] * bp[2]
    d4 = ac[0] * bp[0] + ac[1] * bp[1] + ac[2] * bp[2]
    if d3 >= 0.0 and d4 <= d3:
        return b.copy()
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return a + v * ab
    cp = p - c
    d5 = ab[0] * cp[0] + ab[1] * cp[1] + ab[2] * cp[2]
    d6 = ac[0] * cp[0] + ac[1] * cp[1] + ac[2] * cp[2]
    if d6 >= 0.0 and d5 <= d6:
        return c.copy()
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return a + w * ac
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return a + ab * v + ac * w


@njit(cache=True)
def _seg_seg(p1, q1, p2, q2):
    """Closest points between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    if a <= _EPS and e <= _EPS:
        return p1.copy(), p2.copy()
    if a <= _EPS:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
        if e <= _EPS:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - b * b
            if denom > _EPS:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    return p1 + s * d1, p2 + t * d2


@njit(cache=True)
def _isect_interval(vv0, vv1, vv2, d0, d1, d2):
    i0 = vv0 + (vv1 - vv0) * d0 / (d0 - d1)
    i1 = vv0 + (vv2 - vv0) * d0 / (d0 - d2)
    if i0 > i1:
        i0, i1 = i1, i0
    return i0, i1


@njit(cache=True)
def _compute_intervals(vv0, vv1, vv2, d0, d1, d2, d0d1, d0d2):
    """Returns (coplanar, lo, hi)."""
    if d0d1 > 0.0:
        lo, hi = _isect_interval(vv2, vv0, vv1, d2, d0, d1)
    elif d0d2 > 0.0:
        lo, hi = _isect_interval(vv1, vv0, vv2, d1, d0, d2)
    elif d1 * d2 > 0.0 or d0 != 0.0:
        lo, hi = _isect_interval(vv0, vv1, vv2, d0, d1, d2)
    elif d1 != 0.0:
        lo, hi = _isect_interval(vv1, vv0, vv2, d1, d0, d2)
    elif d2 != 0.0:
        lo, hi = _isect_interval(vv2, vv0, vv1, d2, d0, d1)
    else:
        return True, 0.0, 0.0
    return False, lo, hi


@njit(cache=True)
def _edge_edge_2d(v0x, v0y, v1x, v1y, u0x, u0y, u1x, u1y):
    ax = v1x - v0x
    ay = v1y - v0y
    bx = u0x - u1x
    by = u0y - u1y
    cx = v0x - u0x
    cy = v0y - u0y
    f = ay * bx - ax * by
    d = by * cx - bx * cy
    if (f > 0.0 and 0.0 <= d <= f) or (f < 0.0 and f <= d <= 0.0):
        e = ax * cy - ay * cx
        if f > 0.0:
            if 0.0 <= e <= f:
                return True
        else:
            if f <= e <= 0.0:
                return True
    return False


@njit(cache=True)
def _point_in_tri_2d(px, py, ax, ay, bx, by, cx, cy):
    d1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    d2 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
    d3 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
    has_neg = d1 < 0.0 or d2 < 0.0 or d3 < 0.0
    has_pos = d1 > 0.0 or d2 > 0.0 or d3 > 0.0
    return not (has_neg and has_pos)


@njit(cache=True)
def _coplanar_tri_tri(nx, ny, nz, v0, v1, v2, u0, u1, u2):
    anx, any_, anz = abs(nx), abs(ny), abs(nz)
    if anx > any_ and anx > anz:
        i0, i1 = 1, 2
    elif any_ > anz:
        i0, i1 = 0, 2
    else:
        i0, i1 = 0, 1
    for k in range(3):
        if k == 0:
            e0, e1 = v0, v1
        elif k == 1:
            e0, e1 = v1, v2
        else:
            e0, e1 = v2, v0
        for m in range(3):
            if m == 0:
                f0, f1 = u0, u1
            elif m == 1:
                f0, f1 = u1, u2
            else:
                f0, f1 = u2, u0
            if _edge_edge_2d(e0[i0], e0[i1], e1[i0], e1[i1],
                             f0[i0], f0[i1], f1[i0], f1[i1]):
                return True
    if _point_in_tri_2d(v0[i0], v0[i1], u0[i0], u0[i1], u1[i0], u1[i1], u2[i0], u2[i1]):
        return True
    if _point_in_tri_2d(u0[i0], u0[i1], v0[i0], v0[i1], v1[i0], v1[i1], v2[i0], v2[i1]):
        return True
    return False


@njit(cache=True)
def tri_tri_intersect(v0, v1, v2, u0, u1, u2):
    """True iff the closed triangles share at least one point."""
    n1x, n1y, n1z = _cross(v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2],
                           v2[0] - v0[0], v2[1] - v0[1], v2[2] - v0[2])
    d1 = -(n1x * v0[0] + n1y * v0[1] + n1z * v0[2])
    du0 = n1x * u0[0] + n1y * u0[1] + n1z * u0[2] + d1
    du1 = n1x * u1[0] + n1y * u1[1] + n1z * u1[2] + d1
    du2 = n1x * u2[0] + n1y * u2[1] + n1z * u2[2] + d1
    du0du1 = du0 * du1
    du0du2 = du0 * du2
    if du0du1 > 0.0 and du0du2 > 0.0:
        return False
    n2x, n2y, n2z = _cross(u1[0] - u0[0], u1[1] - u0[1], u1[2] - u0[2],
                           u2[0] - u0[0], u2[1] - u0[1], u2[2] - u0[2])
    d2 = -(n2x * u0[0] + n2y * u0[1] + n2z * u0[2])
    dv0 = n2x * v0[0] + n2y * v0[1] + n2z * v0[2] + d2
    dv1 = n2x * v1[0] + n2y * v1[1] + n2z * v1[2] + d2
    dv2 = n2x * v2[0] + n2y * v2[1] + n2z * v2[2] + d2
    dv0dv1 = dv0 * dv1
    dv0dv2 = dv0 * dv2
    if dv0dv1 > 0.0 and dv0dv2 > 0.0:
        return False
    dx, dy, dz = _cross(n1x, n1y, n1z, n2x, n2y, n2z)
    adx, ady, adz = abs(dx), abs(dy), abs(dz)
    if adx >= ady and adx >= adz:
        idx = 0
    elif ady >= adz:
        idx = 1
    else:
        idx = 2
    vp0, vp1, vp2 = v0[idx], v1[idx], v2[idx]
    up0, up1, up2 = u0[idx], u1[idx], u2[idx]
    cop1, a0, a1 = _compute_intervals(vp0, vp1, vp2, dv0, dv1, dv2, dv0dv1, dv0dv2)
    cop2, b0, b1 = _compute_intervals(up0, up1, up2, du0, du1, du2, du0du1, du0du2)
    if cop1 or cop2:
        return _coplanar_tri_tri(n1x, n1y, n1z, v0, v1, v2, u0, u1, u2)
    return not (a1 < b0 or b1 < a0)


@njit(cache=True)
def _point_in_tri_3d(p, a, b, c, slack):
    """Barycentric containment of a point assumed near the triangle plane."""
    ab = b - a
    ac = c - a
    ap = p - a
    d00 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
    d01 = ab[0] * ac[0] + ab[1] * ac[1] + ab[2] * ac[2]
    d11 = ac[0] * ac[0] + ac[1] * ac[1] + ac[2] * ac[2]
    d20 = ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]
    d21 = ap[0] * ac[0] + ap[1] * ac[1] + ap[2] * ac[2]
    denom = d00 * d11 - d01 * d01
    if denom <= 0.0:
        return False
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    return v >= -slack and w >= -slack and v + w <= 1.0 + slack


@njit(cache=True)
def _tri_contact_point(v0, v1, v2, u0, u1, u2):
    """A point common to two intersecting triangles.  Returns (found, point)."""
    out = np.zeros(3)
    for swap in range(2):
        if swap == 0:
            a0, a1, a2, b0, b1, b2 = v0, v1, v2, u0, u1, u2
        else:
            a0, a1, a2, b0, b1, b2 = u0, u1, u2, v0, v1, v2
        e1 = b1 - b0
        e2 = b2 - b0
        nx, ny, nz = _cross(e1[0], e1[1], e1[2], e2[0], e2[1], e2[2])
        d = -(nx * b0[0] + ny * b0[1] + nz * b0[2])
        for k in range(3):
            if k == 0:
                p, q = a0, a1
            elif k == 1:
                p, q = a1, a2
            else:
                p, q = a2, a0
            dp = nx * p[0] + ny * p[1] + nz * p[2] + d
            dq = nx * q[0] + ny * q[1] + nz * q[2] + d
            if dp == 0.0 and dq == 0.0:
                continue
            if dp * dq <= 0.0:
                t = dp / (dp - dq)
                x = p + t * (q - p)
                if _point_in_tri_3d(x, b0, b1, b2, 1e-9):
                    out[:] = x
                    return True, out
    # coplanar fallbacks: vertex containment
    for k in range(3):
        p = v0 if k == 0 else (v1 if k == 1 else v2)
        if _point_in_tri_3d(p, u0, u1, u2, 1e-9):
            out[:] = p
            return True, out
    for k in range(3):
        p = u0 if k == 0 else (u1 if k == 1 else u2)
        if _point_in_tri_3d(p, v0, v1, v2, 1e-9):
            out[:] = p
            return True, out
    return False, out


@njit(cache=True)
def _tri_tri_feature_dist(v0, v1, v2, u0, u1, u2):
    best = 1e300
    bp = np.zeros(3)
    bq = np.zeros(3)
    for k in range(3):
        if k == 0:
            p1, q1 = v0, v1
        elif k == 1:
            p1, q1 = v1, v2
        else:
            p1, q1 = v2, v0
        for m in range(3):
            if m == 0:
                p2, q2 = u0, u1
            elif m == 1:
                p2, q2 = u1, u2
            else:
                p2, q2 = u2, u0
            cp, cq = _seg_seg(p1, q1, p2, q2)
            dv = cp - cq
            d2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]
            if d2 < best:
                best = d2
                bp[:] = cp
                bq[:] = cq
    for k in range(3):
        p = v0 if k == 0 else (v1 if k == 1 else v2)
        cq = _closest_pt_tri(p, u0, u1, u2)
        dv = p - cq
        d2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]
        if d2 < best:
            best = d2
            bp[:] = p
            bq[:] = cq
    for k in range(3):
        q = u0 if k == 0 else (u1 if k == 1 else u2)
        cp = _closest_pt_tri(q, v0, v1, v2)
        dv = cp - q
        d2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]
        if d2 < best:
            best = d2
            bp[:] = cp
            bq[:] = q
    return np.sqrt(best), bp, bq


@njit(cache=True)
def tri_tri_distance(v0, v1, v2, u0, u1, u2):
    """Minimum distance plus witness points; (0, c, c) when intersecting."""
    if tri_tri_intersect(v0, v1, v2, u0, u1, u2):
        found, c = _tri_contact_point(v0, v1, v2, u0, u1, u2)
        if found:
            return 0.0, c, c.copy()
        d, p, q = _tri_tri_feature_dist(v0, v1, v2, u0, u1, u2)
        return 0.0, p, q
    return _tri_tri_feature_dist(v0, v1, v2, u0, u1, u2)


# ---------------------------------------------------------------------------
# Allocation-free squared-distance variants for the BVH leaf loops.  Identical
# feature math to the witness-producing versions above, returning only d^2 so
# the hot path never touches the heap allocator.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _seg_seg_d2(p1, q1, p2, q2):
    d1x = q1[0] - p1[0]
    d1y = q1[1] - p1[1]
    d1z = q1[2] - p1[2]
    d2x = q2[0] - p2[0]
    d2y = q2[1] - p2[1]
    d2z = q2[2] - p2[2]
    rx = p1[0] - p2[0]
    ry = p1[1] - p2[1]
    rz = p1[2] - p2[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    if a <= _EPS and e <= _EPS:
        s = 0.0
        t = 0.0
    elif a <= _EPS:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= _EPS:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > _EPS:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    wx = rx + s * d1x - t * d2x
    wy = ry + s * d1y - t * d2y
    wz = rz + s * d1z - t * d2z
    return wx * wx + wy * wy + wz * wz


@njit(cache=True)
def _pt_tri_d2(p, a, b, c):
    abx = b[0] - a[0]
    aby = b[1] - a[1]
    abz = b[2] - a[2]
    acx = c[0] - a[0]
    acy = c[1] - a[1]
    acz = c[2] - a[2]
    apx = p[0] - a[0]
    apy = p[1] - a[1]
    apz = p[2] - a[2]
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx = p[0] - b[0]
    bpy = p[1] - b[1]
    bpz = p[2] - b[2]
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        wx = apx - v * abx
        wy = apy - v * aby
        wz = apz - v * abz
        return wx * wx + wy * wy + wz * wz
    cpx = p[0] - c[0]
    cpy = p[1] - c[1]
    cpz = p[2] - c[2]
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        wx = apx - w * acx
        wy = apy - w * acy
        wz = apz - w * acz
        return wx * wx + wy * wy + wz * wz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        wx = bpx - w * (c[0] - b[0])
        wy = bpy - w * (c[1] - b[1])
        wz = bpz - w * (c[2] - b[2])
        return wx * wx + wy * wy + wz * wz
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    wx = apx - abx * v - acx * w
    wy = apy - aby * v - acy * w
    wz = apz - abz * v - acz * w
    return wx * wx + wy * wy + wz * wz


@njit(cache=True)
def tri_tri_d2(v0, v1, v2, u0, u1, u2, may_touch=True):
    """Squared minimum distance between two triangles (0 when intersecting).

    ``may_touch=False`` skips the intersection test; callers pass it when the
    triangles' bounding boxes are already known to be disjoint.
    """
    if may_touch and tri_tri_intersect(v0, v1, v2, u0, u1, u2):
        return 0.0
    best = _seg_seg_d2(v0, v1, u0, u1)
    d = _seg_seg_d2(v0, v1, u1, u2)
    if d < best:
        best = d
    d = _seg_seg_d2(v0, v1, u2, u0)
    if d < best:
        best = d
    d = _seg_seg_d2(v1, v2, u0, u1)
    if d < best:
        best = d
    d = _seg_seg_d2(v1, v2, u1, u2)
    if d < best:
        best = d
    d = _seg_seg_d2(v1, v2, u2, u0)
    if d < best:
        best = d
    d = _seg_seg_d2(v2, v0, u0, u1)
    if d < best:
        best = d
    d = _seg_seg_d2(v2, v0, u1, u2)
    if d < best:
        best = d
    d = _seg_seg_d2(v2, v0, u2, u0)
    if d < best:
        best = d
    d = _pt_tri_d2(v0, u0, u1, u2)
    if d < best:
        best = d
    d = _pt_tri_d2(v1, u0, u1, u2)
    if d < best:
        best = d
    d = _pt_tri_d2(v2, u0, u1, u2)
    if d < best:
        best = d
    d = _pt_tri_d2(u0, v0, v1, v2)
    if d < best:
        best = d
    d = _pt_tri_d2(u1, v0, v1, v2)
    if d < best:
        best = d
    d = _pt_tri_d2(u2, v0, v1, v2)
    if d < best:
        best = d
    return best


# ---------------------------------------------------------------------------
# BVH pair traversal.  Mesh B is mapped into A's frame by (R, t); B's boxes
# are transformed conservatively (AABB of the rotated box) which only weakens
# pruning, never correctness.
# ---------------------------------------------------------------------------

_STACK = 1 << 16


@njit(cache=True, inline="always")
def _transformed_box(bmin, bmax, i, R, t):
    cx = 0.5 * (bmin[i, 0] + bmax[i, 0])
    cy = 0.5 * (bmin[i, 1] + bmax[i, 1])
    cz = 0.5 * (bmin[i, 2] + bmax[i, 2])
    ex = 0.5 * (bmax[i, 0] - bmin[i, 0])
    ey = 0.5 * (bmax[i, 1] - bmin[i, 1])
    ez = 0.5 * (bmax[i, 2] - bmin[i, 2])
    mx = R[0, 0] * cx + R[0, 1] * cy + R[0, 2] * cz + t[0]
    my = R[1, 0] * cx + R[1, 1] * cy + R[1, 2] * cz + t[1]
    mz = R[2, 0] * cx + R[2, 1] * cy + R[2, 2] * cz + t[2]
    fx = abs(R[0, 0]) * ex + abs(R[0, 1]) * ey + abs(R[0, 2]) * ez
    fy = abs(R[1, 0]) * ex + abs(R[1, 1]) * ey + abs(R[1, 2]) * ez
    fz = abs(R[2, 0]) * ex + abs(R[2, 1]) * ey + abs(R[2, 2]) * ez
    return mx - fx, my - fy, mz - fz, mx + fx, my + fy, mz + fz


@njit(cache=True, inline="always")
def _box_pair_dist2(aminx, aminy, aminz, amaxx, amaxy, amaxz,
                    bminx, bminy, bminz, bmaxx, bmaxy, bmaxz):
    dx = max(max(aminx - bmaxx, bminx - amaxx), 0.0)
    dy = max(max(aminy - bmaxy, bminy - amaxy), 0.0)
    dz = max(max(aminz - bmaxz, bminz - amaxz), 0.0)
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def _tf_pt(p, R, t):
    out = np.empty(3)
    out[0] = R[0, 0] * p[0] + R[0, 1] * p[1] + R[0, 2] * p[2] + t[0]
    out[1] = R[1, 0] * p[0] + R[1, 1] * p[1] + R[1, 2] * p[2] + t[1]
    out[2] = R[2, 0] * p[0] + R[2, 1] * p[1] + R[2, 2] * p[2] + t[2]
    return out


@njit(cache=True)
def bvh_pair_intersect(bminA, bmaxA, leftA, rightA, firstA, countA,
                       cA, axA, eA, tvA,
                       bminB, bmaxB, leftB, rightB, firstB, countB,
                       cB, axB, eB, tvB, R, t):
    """First intersecting triangle pair (rowA, rowB) or (-1, -1)."""
    ub = np.empty((3, 3))          # scratch: one B triangle in A's frame
    stack = np.empty((_STACK, 2), np.int64)
    top = 0
    stack[top, 0] = 0
    stack[top, 1] = 0
    top += 1
    while top > 0:
        top -= 1
        ia = stack[top, 0]
        ib = stack[top, 1]
        b0, b1, b2, b3, b4, b5 = _transformed_box(bminB, bmaxB, ib, R, t)
        if (_box_pair_dist2(bminA[ia, 0], bminA[ia, 1], bminA[ia, 2],
                            bmaxA[ia, 0], bmaxA[ia, 1], bmaxA[ia, 2],
                            b0, b1, b2, b3, b4, b5) > 0.0):
            continue
        if _obb_gap(cA, axA, eA, ia, cB, axB, eB, ib, R, t) > 0.0:
            continue
        la = countA[ia] > 0
        lb = countB[ib] > 0
        if la and lb:
            for j in range(firstB[ib], firstB[ib] + countB[ib]):
                for k in range(3):
                    px = tvB[j, k, 0]
                    py = tvB[j, k, 1]
                    pz = tvB[j, k, 2]
                    ub[k, 0] = R[0, 0] * px + R[0, 1] * py + R[0, 2] * pz + t[0]
                    ub[k, 1] = R[1, 0] * px + R[1, 1] * py + R[1, 2] * pz + t[1]
                    ub[k, 2] = R[2, 0] * px + R[2, 1] * py + R[2, 2] * pz + t[2]
                for i in range(firstA[ia], firstA[ia] + countA[ia]):
                    if tri_tri_intersect(tvA[i, 0], tvA[i, 1], tvA[i, 2],
                                         ub[0], ub[1], ub[2]):
                        return i, j
            continue
        # split the node with the larger extent (or the non-leaf one)
        ext_a = -1.0
        if not la:
            ext_a = ((bmaxA[ia, 0] - bminA[ia, 0]) + (bmaxA[ia, 1] - bminA[ia, 1])
                     + (bmaxA[ia, 2] - bminA[ia, 2]))
        ext_b = -1.0
        if not lb:
            ext_b = (b3 - b0) + (b4 - b1) + (b5 - b2)
        if ext_a >= ext_b:
            stack[top, 0] = leftA[ia]
            stack[top, 1] = ib
            top += 1
            stack[top, 0] = rightA[ia]
            stack[top, 1] = ib
            top += 1
        else:
            stack[top, 0] = ia
            stack[top, 1] = leftB[ib]
            top += 1
            stack[top, 0] = ia
            stack[top, 1] = rightB[ib]
            top += 1
    return -1, -1


@njit(cache=True, inline="always")
def _inv_transformed_box(bmin, bmax, i, R, t):
    """Box i mapped by the inverse of (R, t): center R^T(c - t), extents |R^T|e."""
    cx = 0.5 * (bmin[i, 0] + bmax[i, 0]) - t[0]
    cy = 0.5 * (bmin[i, 1] + bmax[i, 1]) - t[1]
    cz = 0.5 * (bmin[i, 2] + bmax[i, 2]) - t[2]
    ex = 0.5 * (bmax[i, 0] - bmin[i, 0])
    ey = 0.5 * (bmax[i, 1] - bmin[i, 1])
    ez = 0.5 * (bmax[i, 2] - bmin[i, 2])
    mx = R[0, 0] * cx + R[1, 0] * cy + R[2, 0] * cz
    my = R[0, 1] * cx + R[1, 1] * cy + R[2, 1] * cz
    mz = R[0, 2] * cx + R[1, 2] * cy + R[2, 2] * cz
    fx = abs(R[0, 0]) * ex + abs(R[1, 0]) * ey + abs(R[2, 0]) * ez
    fy = abs(R[0, 1]) * ex + abs(R[1, 1]) * ey + abs(R[2, 1]) * ez
    fz = abs(R[0, 2]) * ex + abs(R[1, 2]) * ey + abs(R[2, 2]) * ez
    return mx - fx, my - fy, mz - fz, mx + fx, my + fy, mz + fz


@njit(cache=True)
def _obb_gap(cA, axA, eA, ia, cB, axB, eB, ib, R, t):
    """Largest separating-axis gap between two node OBBs (negative = overlap
    on every tested axis).  Axes tested: the three of each box (B's mapped by
    R).  Any single-axis gap is a valid distance lower bound."""
    # B's center and axis rows in A's frame
    cbx = R[0, 0] * cB[ib, 0] + R[0, 1] * cB[ib, 1] + R[0, 2] * cB[ib, 2] + t[0]
    cby = R[1, 0] * cB[ib, 0] + R[1, 1] * cB[ib, 1] + R[1, 2] * cB[ib, 2] + t[1]
    cbz = R[2, 0] * cB[ib, 0] + R[2, 1] * cB[ib, 1] + R[2, 2] * cB[ib, 2] + t[2]
    dx = cbx - cA[ia, 0]
    dy = cby - cA[ia, 1]
    dz = cbz - cA[ia, 2]
    b0x = R[0, 0] * axB[ib, 0, 0] + R[0, 1] * axB[ib, 0, 1] + R[0, 2] * axB[ib, 0, 2]
    b0y = R[1, 0] * axB[ib, 0, 0] + R[1, 1] * axB[ib, 0, 1] + R[1, 2] * axB[ib, 0, 2]
    b0z = R[2, 0] * axB[ib, 0, 0] + R[2, 1] * axB[ib, 0, 1] + R[2, 2] * axB[ib, 0, 2]
    b1x = R[0, 0] * axB[ib, 1, 0] + R[0, 1] * axB[ib, 1, 1] + R[0, 2] * axB[ib, 1, 2]
    b1y = R[1, 0] * axB[ib, 1, 0] + R[1, 1] * axB[ib, 1, 1] + R[1, 2] * axB[ib, 1, 2]
    b1z = R[2, 0] * axB[ib, 1, 0] + R[2, 1] * axB[ib, 1, 1] + R[2, 2] * axB[ib, 1, 2]
    b2x = R[0, 0] * axB[ib, 2, 0] + R[0, 1] * axB[ib, 2, 1] + R[0, 2] * axB[ib, 2, 2]
    b2y = R[1, 0] * axB[ib, 2, 0] + R[1, 1] * axB[ib, 2, 1] + R[1, 2] * axB[ib, 2, 2]
    b2z = R[2, 0] * axB[ib, 2, 0] + R[2, 1] * axB[ib, 2, 1] + R[2, 2] * axB[ib, 2, 2]
    eb0 = eB[ib, 0]
    eb1 = eB[ib, 1]
    eb2 = eB[ib, 2]
    best = -1e300
    for k in range(3):
        ux = axA[ia, k, 0]
        uy = axA[ia, k, 1]
        uz = axA[ia, k, 2]
        rb = (abs(ux * b0x + uy * b0y + uz * b0z) * eb0
              + abs(ux * b1x + uy * b1y + uz * b1z) * eb1
              + abs(ux * b2x + uy * b2y + uz * b2z) * eb2)
        gap = abs(ux * dx + uy * dy + uz * dz) - eA[ia, k] - rb
        if gap > best:
            best = gap
    for k in range(3):
        if k == 0:
            ux, uy, uz, rb = b0x, b0y, b0z, eb0
        elif k == 1:
            ux, uy, uz, rb = b1x, b1y, b1z, eb1
        else:
            ux, uy, uz, rb = b2x, b2y, b2z, eb2
        ra = (abs(ux * axA[ia, 0, 0] + uy * axA[ia, 0, 1] + uz * axA[ia, 0, 2]) * eA[ia, 0]
              + abs(ux * axA[ia, 1, 0] + uy * axA[ia, 1, 1] + uz * axA[ia, 1, 2]) * eA[ia, 1]
              + abs(ux * axA[ia, 2, 0] + uy * axA[ia, 2, 1] + uz * axA[ia, 2, 2]) * eA[ia, 2])
        gap = abs(ux * dx + uy * dy + uz * dz) - ra - rb
        if gap > best:
            best = gap
    return best


@njit(cache=True)
def _child_bound(bminA, bmaxA, cA, axA, eA, ia,
                 bminB, bmaxB, cB, axB, eB, ib, R, t, cap):
    """Squared lower bound on the mesh-mesh distance within a node pair.

    Combines three valid bounds: axis-aligned box distance evaluated in A's
    frame, the same in B's frame, and the OBB separating-axis gap.  ``cap``
    (current best squared distance) short-circuits the costlier OBB test when
    the pair is already prunable or hopelessly close.
    """
    b0, b1, b2, b3, b4, b5 = _transformed_box(bminB, bmaxB, ib, R, t)
    d_a = _box_pair_dist2(bminA[ia, 0], bminA[ia, 1], bminA[ia, 2],
                          bmaxA[ia, 0], bmaxA[ia, 1], bmaxA[ia, 2],
                          b0, b1, b2, b3, b4, b5)
    if d_a >= cap:
        return d_a
    a0, a1, a2, a3, a4, a5 = _inv_transformed_box(bminA, bmaxA, ia, R, t)
    d_b = _box_pair_dist2(a0, a1, a2, a3, a4, a5,
                          bminB[ib, 0], bminB[ib, 1], bminB[ib, 2],
                          bmaxB[ib, 0], bmaxB[ib, 1], bmaxB[ib, 2])
    d = max(d_a, d_b)
    if d >= cap:
        return d
    gap = _obb_gap(cA, axA, eA, ia, cB, axB, eB, ib, R, t)
    if gap > 0.0:
        d = max(d, gap * gap)
    return d


@njit(cache=True)
def _heap_push(keys, va, vb, n, key, a, b):
    """Binary min-heap push; grows the arrays by doubling when full."""
    if n == keys.shape[0]:
        nk = np.empty(2 * n)
        nk[:n] = keys
        keys = nk
        na = np.empty(2 * n, np.int64)
        na[:n] = va
        va = na
        nb = np.empty(2 * n, np.int64)
        nb[:n] = vb
        vb = nb
    i = n
    keys[i] = key
    va[i] = a
    vb[i] = b
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] <= keys[i]:
            break
        keys[p], keys[i] = keys[i], keys[p]
        va[p], va[i] = va[i], va[p]
        vb[p], vb[i] = vb[i], vb[p]
        i = p
    return keys, va, vb, n + 1


@njit(cache=True)
def _heap_pop(keys, va, vb, n):
    """Move the last element to the root and sift down; returns the new size."""
    n -= 1
    keys[0] = keys[n]
    va[0] = va[n]
    vb[0] = vb[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and keys[r] < keys[l]:
            m = r
        if keys[i] <= keys[m]:
            break
        keys[i], keys[m] = keys[m], keys[i]
        va[i], va[m] = va[m], va[i]
        vb[i], vb[m] = vb[m], vb[i]
        i = m
    return n


@njit(cache=True)
def bvh_pair_distance(bminA, bmaxA, leftA, rightA, firstA, countA,
                      cA, axA, eA, tvA,
                      bminB, bmaxB, leftB, rightB, firstB, countB,
                      cB, axB, eB, tvB, R, t):
    """Exact minimum distance between the meshes plus witness points (A frame).

    Best-first traversal: node pairs are expanded in order of their box-pair
    lower bound, so the search terminates as soon as the smallest outstanding
    bound reaches the best triangle distance found.  The leaf loops track only
    the squared distance and the winning triangle pair; witness points are
    recovered with one full feature test at the end.
    """
    best2 = 1e300
    bi = -1
    bj = -1
    ub = np.empty((3, 3))          # scratch: one B triangle in A's frame
    keys = np.empty(1 << 12)
    va = np.empty(1 << 12, np.int64)
    vb = np.empty(1 << 12, np.int64)
    keys[0] = _child_bound(bminA, bmaxA, cA, axA, eA, 0,
                           bminB, bmaxB, cB, axB, eB, 0, R, t, 1e300)
    va[0] = 0
    vb[0] = 0
    n = 1
    while n > 0:
        lb2 = keys[0]
        ia = va[0]
        ib = vb[0]
        n = _heap_pop(keys, va, vb, n)
        if lb2 >= best2:
            break
        la = countA[ia] > 0
        leafb = countB[ib] > 0
        if la and leafb:
            for j in range(firstB[ib], firstB[ib] + countB[ib]):
                bminx = 1e300
                bminy = 1e300
                bminz = 1e300
                bmaxx = -1e300
                bmaxy = -1e300
                bmaxz = -1e300
                for k in range(3):
                    px = tvB[j, k, 0]
                    py = tvB[j, k, 1]
                    pz = tvB[j, k, 2]
                    x = R[0, 0] * px + R[0, 1] * py + R[0, 2] * pz + t[0]
                    y = R[1, 0] * px + R[1, 1] * py + R[1, 2] * pz + t[1]
                    z = R[2, 0] * px + R[2, 1] * py + R[2, 2] * pz + t[2]
                    ub[k, 0] = x
                    ub[k, 1] = y
                    ub[k, 2] = z
                    bminx = min(bminx, x)
                    bminy = min(bminy, y)
                    bminz = min(bminz, z)
                    bmaxx = max(bmaxx, x)
                    bmaxy = max(bmaxy, y)
                    bmaxz = max(bmaxz, z)
                for i in range(firstA[ia], firstA[ia] + countA[ia]):
                    # triangle-AABB reject before the 15-feature test
                    aminx = min(tvA[i, 0, 0], min(tvA[i, 1, 0], tvA[i, 2, 0]))
                    amaxx = max(tvA[i, 0, 0], max(tvA[i, 1, 0], tvA[i, 2, 0]))
                    aminy = min(tvA[i, 0, 1], min(tvA[i, 1, 1], tvA[i, 2, 1]))
                    amaxy = max(tvA[i, 0, 1], max(tvA[i, 1, 1], tvA[i, 2, 1]))
                    aminz = min(tvA[i, 0, 2], min(tvA[i, 1, 2], tvA[i, 2, 2]))
                    amaxz = max(tvA[i, 0, 2], max(tvA[i, 1, 2], tvA[i, 2, 2]))
                    db2 = _box_pair_dist2(aminx, aminy, aminz, amaxx, amaxy, amaxz,
                                          bminx, bminy, bminz,
                                          bmaxx, bmaxy, bmaxz)
                    if db2 >= best2:
                        continue
                    d2 = tri_tri_d2(tvA[i, 0], tvA[i, 1], tvA[i, 2],
                                    ub[0], ub[1], ub[2], db2 == 0.0)
                    if d2 < best2:
                        best2 = d2
                        bi = i
                        bj = j
                        if best2 == 0.0:
                            n = 0
            continue
        ext_a = -1.0
        if not la:
            ext_a = ((bmaxA[ia, 0] - bminA[ia, 0]) + (bmaxA[ia, 1] - bminA[ia, 1])
                     + (bmaxA[ia, 2] - bminA[ia, 2]))
        ext_b = -1.0
        if not leafb:
            b0, b1, b2, b3, b4, b5 = _transformed_box(bminB, bmaxB, ib, R, t)
            ext_b = (b3 - b0) + (b4 - b1) + (b5 - b2)
        if ext_a >= ext_b:
            for c in (leftA[ia], rightA[ia]):
                d2 = _child_bound(bminA, bmaxA, cA, axA, eA, c,
                                  bminB, bmaxB, cB, axB, eB, ib, R, t, best2)
                if d2 < best2:
                    keys, va, vb, n = _heap_push(keys, va, vb, n, d2, c, ib)
        else:
            for c in (leftB[ib], rightB[ib]):
                d2 = _child_bound(bminA, bmaxA, cA, axA, eA, ia,
                                  bminB, bmaxB, cB, axB, eB, c, R, t, best2)
                if d2 < best2:
                    keys, va, vb, n = _heap_push(keys, va, vb, n, d2, ia, c)
    if bi < 0:
        return 1e300, np.zeros(3), np.zeros(3)
    u0 = _tf_pt(tvB[bj, 0], R, t)
    u1 = _tf_pt(tvB[bj, 1], R, t)
    u2 = _tf_pt(tvB[bj, 2], R, t)
    return tri_tri_distance(tvA[bi, 0], tvA[bi, 1], tvA[bi, 2], u0, u1, u2)


# ---------------------------------------------------------------------------
# Brute-force all-pairs queries (the oracle side of the dual-route checks)
# ---------------------------------------------------------------------------

@njit(cache=True)
def brute_intersect(tvA, tvB):
    for i in range(tvA.shape[0]):
        for j in range(tvB.shape[0]):
            if tri_tri_intersect(tvA[i, 0], tvA[i, 1], tvA[i, 2],
                                 tvB[j, 0], tvB[j, 1], tvB[j, 2]):
                return True
    return False


@njit(cache=True)
def brute_distance(tvA, tvB):
    best = 1e300
    bp = np.zeros(3)
    bq = np.zeros(3)
    for i in range(tvA.shape[0]):
        for j in range(tvB.shape[0]):
            d, p, q = tri_tri_distance(tvA[i, 0], tvA[i, 1], tvA[i, 2],
                                       tvB[j, 0], tvB[j, 1], tvB[j, 2])
            if d < best:
                best = d
                bp[:] = p
                bq[:] = q
                if best == 0.0:
                    return 0.0, bp, bq
    return best, bp, bq


def warmup() -> None:
    """Trigger JIT compilation of the hot kernels on tiny inputs."""
    tv = np.array([[[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]])
    one_node = (np.zeros((1, 3)), np.ones((1, 3)), np.zeros(1, np.int32),
                np.zeros(1, np.int32), np.zeros(1, np.int32), np.ones(1, np.int32),
                np.zeros((1, 3)), np.eye(3)[None, :, :].copy(), np.ones((1, 3)))
    r = np.eye(3)
    t = np.zeros(3)
    bvh_pair_intersect(*one_node, tv, *one_node, tv, r, t)
    bvh_pair_distance(*one_node, tv, *one_node, tv, r, t)
    brute_intersect(tv, tv)
    brute_distance(tv, tv)
