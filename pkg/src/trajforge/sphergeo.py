"""Low-level spherical geometry shared by the lift, closure, and carve stages.

All functions work on unit vectors unless a radius argument says otherwise;
distances are returned in length units (radius * angle).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInput


def normalize_rows(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def angle_between(u, v):
    """Robust angle between unit vectors (vectorized)."""
    cr = np.cross(u, v)
    return np.arctan2(np.linalg.norm(cr, axis=-1), np.sum(u * v, axis=-1))


def geodesic_distance(p, q, r=1.0):
    return r * angle_between(np.asarray(p) / r, np.asarray(q) / r)


def frame_of(x, t, r):
    """Right-handed orthonormal frame [x/r, t, x x t / r] as columns."""
    e0 = np.asarray(x) / r
    e1 = np.asarray(t)
    e2 = np.cross(e0, e1)
    return np.column_stack([e0, e1, e2])


def rotation_angle_axis(m):
    """(angle in [0, pi], unit axis) of a rotation matrix.

    The axis is meaningful only when the angle exceeds ~1e-12; for smaller
    angles a zero vector is returned.
    """
    from scipy.spatial.transform import Rotation

    rv = Rotation.from_matrix(m).as_rotvec()
    ang = float(np.linalg.norm(rv))
    if ang < 1e-12:
        return ang, np.zeros(3)
    return ang, rv / ang


def arc_tangent_at_start(a, b):
    return normalize_rows(np.cross(np.cross(a, b), a))


def arc_tangent_at_end(a, b):
    return normalize_rows(np.cross(np.cross(a, b), b))


# ---------------------------------------------------------------------------
# arc-pair proximity


def _point_to_arc_angle(p, a, b, n):
    """Angular distance from unit points p to great-circle arcs (a, b) with
    unit normals n (all arrays broadcast along axis 0)."""
    q = p - np.sum(p * n, axis=-1, keepdims=True) * n
    qn = np.linalg.norm(q, axis=-1, keepdims=True)
    ok = qn[..., 0] > 1e-15
    q = np.where(ok[..., None], q / np.where(qn == 0, 1.0, qn), a)
    inside = (np.sum(np.cross(a, q) * n, axis=-1) >= -1e-12) \
        & (np.sum(np.cross(q, b) * n, axis=-1) >= -1e-12) & ok
    d_arc = angle_between(p, q)
    d_end = np.minimum(angle_between(p, a), angle_between(p, b))
    return np.where(inside, np.minimum(d_arc, d_end), d_end)


def arc_pair_min_angle(a1, b1, a2, b2):
    """Minimum angular distance between two great-circle arcs (vectorized)."""
    n1 = np.cross(a1, b1)
    l1 = np.linalg.norm(n1, axis=-1, keepdims=True)
    n1 = n1 / np.where(l1 == 0, 1.0, l1)
    n2 = np.cross(a2, b2)
    l2 = np.linalg.norm(n2, axis=-1, keepdims=True)
    n2 = n2 / np.where(l2 == 0, 1.0, l2)

    w = np.cross(n1, n2)
    wn = np.linalg.norm(w, axis=-1, keepdims=True)
    w = w / np.where(wn < 1e-14, 1.0, wn)
    cross_ok = wn[..., 0] >= 1e-14

    def in_arc(p, a, b, n):
        return (np.sum(np.cross(a, p) * n, axis=-1) >= -1e-12) \
            & (np.sum(np.cross(p, b) * n, axis=-1) >= -1e-12)

    hit = np.zeros(a1.shape[0], dtype=bool)
    for sign in (1.0, -1.0):
        p = sign * w
        hit |= cross_ok & in_arc(p, a1, b1, n1) & in_arc(p, a2, b2, n2)

    d = np.minimum(
        np.minimum(_point_to_arc_angle(a1, a2, b2, n2),
                   _point_to_arc_angle(b1, a2, b2, n2)),
        np.minimum(_point_to_arc_angle(a2, a1, b1, n1),
                   _point_to_arc_angle(b2, a1, b1, n1)),
    )
    return np.where(hit, 0.0, d)


def _candidate_pairs(mid, cell, n_seg):
    """Index pairs of segments whose midpoints fall in neighboring hash cells."""
    # keep quantized indices within 20 bits so three of them pack into int64
    cell = max(cell, 3.0 / (1 << 20))
    q = np.floor((mid + 2.0) / cell).astype(np.int64)

    def pack(qq):
        return qq[:, 0] + (qq[:, 1] << 21) + (qq[:, 2] << 42)

    keys = pack(q)
    order = np.argsort(keys, kind="stable")
    skeys = keys[order]

    pairs_i = []
    pairs_j = []
    base = np.arange(n_seg)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                tq = q + np.array([dx, dy, dz], dtype=np.int64)
                tk = pack(tq)
                lo = np.searchsorted(skeys, tk, side="left")
                hi = np.searchsorted(skeys, tk, side="right")
                cnt = hi - lo
                tot = int(cnt.sum())
                if tot == 0:
                    continue
                ii = np.repeat(base, cnt)
                inner = np.arange(tot) - np.repeat(np.cumsum(cnt) - cnt, cnt)
                jj = order[np.repeat(lo, cnt) + inner]
                keep = ii < jj
                pairs_i.append(ii[keep])
                pairs_j.append(jj[keep])
    if not pairs_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ii = np.concatenate(pairs_i)
    jj = np.concatenate(pairs_j)
    packed = ii * np.int64(n_seg) + jj
    packed, idx = np.unique(packed, return_index=True)
    return ii[idx], jj[idx]


def polyline_min_clearance(points, r, tol, closed=False, exclude_window=None,
                           return_witness=True):
    """Proximity scan of a spherical polyline against itself.

    Returns (min_distance, witness) where the witness is the first
    offending non-adjacent segment pair within ``tol`` (or None).  The
    reported minimum is exact for pairs within the broad-phase cutoff and
    ``inf`` otherwise.  ``exclude_window`` suppresses pairs closer than
    that many indices along the curve (default: ceil(tol/ds) + 2).
    """
    u = normalize_rows(np.asarray(points, dtype=float) / r)
    n_pts = u.shape[0]
    if closed:
        segs_a = u
        segs_b = np.roll(u, -1, axis=0)
        n_seg = n_pts
    else:
        segs_a = u[:-1]
        segs_b = u[1:]
        n_seg = n_pts - 1
    if n_seg < 2:
        return math.inf, None

    seg_chord = np.linalg.norm(segs_b - segs_a, axis=1)
    max_chord = float(seg_chord.max())
    tol_ang = tol / r
    if exclude_window is None:
        med = float(np.median(seg_chord))
        exclude_window = int(math.ceil(tol_ang / max(med, 1e-300))) + 2
    cell = (max_chord + 2.0 * math.sin(min(tol_ang, math.pi) / 2.0)) * 1.01
    cell = max(cell, 1e-9)

    mid = normalize_rows(0.5 * (segs_a + segs_b))
    ii, jj = _candidate_pairs(mid, cell, n_seg)
    if ii.size == 0:
        return math.inf, None

    gap = jj - ii
    if closed:
        keep = np.minimum(gap, n_seg - gap) > exclude_window
    else:
        keep = gap > exclude_window
    ii, jj = ii[keep], jj[keep]
    if ii.size == 0:
        return math.inf, None

    d = arc_pair_min_angle(segs_a[ii], segs_b[ii], segs_a[jj], segs_b[jj]) * r
    min_d = float(d.min())
    witness = None
    if return_witness:
        offending = d < tol
        if np.any(offending):
            oi, oj, od = ii[offending], jj[offending], d[offending]
            ordr = np.lexsort((oj, oi))
            k = ordr[0]
            mid_pt = normalize_rows(0.5 * (segs_a[oi[k]] + segs_a[oj[k]])) * r
            witness = (int(oi[k]), int(oj[k]), mid_pt, float(od[k]))
    return min_d, witness


def polyline_self_intersects(points, r, tol, closed=False, exclude_window=None):
    min_d, witness = polyline_min_clearance(points, r, tol, closed, exclude_window)
    return (witness is not None), witness


def point_to_polyline_angle(queries, loop_points, k_near=8, closed=True):
    """Angular distance from unit query directions to a unit polyline.

    Broad phase by KD-tree over loop samples, narrow phase with exact
    point-to-arc distances on segments neighbouring the k nearest samples.
    Fully vectorized over queries.
    """
    loop = np.asarray(loop_points, dtype=float)
    qs = np.atleast_2d(np.asarray(queries, dtype=float))
    n = loop.shape[0]
    n_seg = n if closed else n - 1
    k = min(k_near, n)
    tree = cKDTree(loop)
    _, idx = tree.query(qs, k=k)
    idx = np.asarray(idx).reshape(qs.shape[0], k)

    cand = idx[:, :, None] + np.array([-2, -1, 0, 1])[None, None, :]
    if closed:
        cand %= n_seg
    else:
        cand = np.clip(cand, 0, n_seg - 1)
    cand = cand.reshape(qs.shape[0], -1)
    a = loop[cand]
    b = loop[(cand + 1) % n]
    nrm = np.cross(a, b)
    nl = np.linalg.norm(nrm, axis=-1, keepdims=True)
    nrm = nrm / np.where(nl == 0, 1.0, nl)
    p = np.broadcast_to(qs[:, None, :], a.shape)
    return _point_to_arc_angle(p, a, b, nrm).min(axis=1)


# ---------------------------------------------------------------------------
# spherical polygon areas


def polygon_area_turning(points, r):
    """Enclosed area of a closed geodesic polygon from its turning angles
    (Gauss-Bonnet: area = (2 pi - sum of exterior angles) r^2), reduced to
    the smaller side of the curve."""
    u = normalize_rows(np.asarray(points, dtype=float) / r)
    if np.linalg.norm(u[0] - u[-1]) < 1e-12:
        u = u[:-1]
    nxt = np.roll(u, -1, axis=0)
    prv = np.roll(u, 1, axis=0)
    t_out = arc_tangent_at_start(u, nxt)
    t_in = arc_tangent_at_end(prv, u)
    turning = np.arctan2(np.sum(u * np.cross(t_in, t_out), axis=1),
                         np.sum(t_in * t_out, axis=1))
    raw = (2.0 * math.pi - float(turning.sum())) * r * r
    full = 4.0 * math.pi * r * r
    raw %= full
    return min(raw, full - raw)


def polygon_area_fan(points, r):
    """Independent area computation: fan of signed spherical triangles from
    the first vertex (van Oosterom-Strackee solid angles)."""
    u = normalize_rows(np.asarray(points, dtype=float) / r)
    if np.linalg.norm(u[0] - u[-1]) < 1e-12:
        u = u[:-1]
    a = u[0]
    b = u[1:-1]
    c = u[2:]
    det = np.einsum("ij,ij->i", np.broadcast_to(a, b.shape), np.cross(b, c))
    denom = 1.0 + b @ a + np.einsum("ij,ij->i", b, c) + c @ a
    omega = 2.0 * np.arctan2(det, denom)
    raw = abs(float(omega.sum())) * r * r
    full = 4.0 * math.pi * r * r
    raw %= full
    return min(raw, full - raw)


def fibonacci_directions(n, rng=None):
    """Quasi-uniform unit directions (Fibonacci lattice), optionally jittered."""
    i = np.arange(n) + 0.5
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / n
    if rng is not None:
        z = np.clip(z + rng.uniform(-0.5, 0.5, n) / n, -1.0, 1.0)
        phi = phi + rng.uniform(0, 2 * math.pi)
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
