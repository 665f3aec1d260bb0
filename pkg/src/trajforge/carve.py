"""Carving: star-shaped grooved bodies from a certified spherical loop.

The groove is a local plane truncation: at depth h the cutting plane sits
at distance r-h from the center, producing a flat contact strip of chordal
half-width b along the loop, with a C^1 relief fillet (a quintic in the
transverse angle) joining the flat to the sphere just past the natural cut
edge.  The relief is carved slightly deeper than the plane so that the flat
is the support surface: S(psi) <= (1-h/r)/cos(psi) wherever the plane is
inside the sphere, with equality exactly on the flat.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree, ConvexHull

from . import sphergeo
from .errors import GrooveOverlap, InvalidInput, MeshInvalid, ResolutionExceeded
from .lift import SphericalCurve

STL_HEADER = b"trajectoid-forge v1"


def cap_volume(h: float, r: float) -> float:
    """Volume pi h^2 (3r - h) / 3 of a spherical cap of height h."""
    if not (0.0 <= h <= 2.0 * r):
        raise InvalidInput(f"cap height must lie in [0, 2r], got h={h}, r={r}")
    return math.pi * h * h * (3.0 * r - h) / 3.0


def groove_depth_window(r: float, b: float, margin: float = 0.2):
    """Feasible carve depths for flat half-width b: deep enough that the
    plane cut is at least b wide, shallow enough that the relief fillet
    (angular width margin*b/r past the flat) can rejoin the sphere."""
    if not 0.0 < b < r:
        raise InvalidInput("need 0 < b < r")
    psi_a = math.asin(b / r)
    lo = r - math.sqrt(r * r - b * b)
    hi = r * (1.0 - math.cos(psi_a + margin * b / r))
    return lo, hi


@dataclass(frozen=True)
class GrooveSpec:
    """Groove geometry: ball radius r, flat contact half-width b, carve
    depth h, relative-depth bound eps (shape range is (1-eps, 1])."""

    r: float
    b: float
    h: Optional[float] = None
    eps: Optional[float] = None
    margin: float = 0.2

    def __post_init__(self):
        r, b = self.r, self.b
        if r <= 0 or not 0.0 < b < r:
            raise InvalidInput("need r > 0 and 0 < b < r")
        lo, hi = groove_depth_window(r, b, self.margin)
        h = self.h
        if h is None:
            h = r * (1.0 - math.cos(math.asin(b / r) + 0.5 * self.margin * b / r))
        if not (lo <= h < hi):
            raise InvalidInput(
                f"depth h={h:.6g} outside feasible window [{lo:.6g}, {hi:.6g}) "
                f"for b={b:.6g} (plane-cut width vs relief margin)")
        object.__setattr__(self, "h", float(h))
        w = math.sqrt(h * (2.0 * r - h))
        if w < b * (1.0 - 1e-12):
            raise InvalidInput("cut width smaller than flat half-width")
        eps = self.eps
        if eps is None:
            eps = 1.02 * max(b / r, h / r)
        if h / r >= eps:
            raise InvalidInput("depth exceeds the codomain bound (h >= eps*r)")
        if b / r >= eps:
            raise InvalidInput("contact half-width delta=b must stay below eps*r")
        object.__setattr__(self, "eps", float(eps))

    @property
    def psi_flat(self):
        return math.asin(self.b / self.r)

    @property
    def psi_out(self):
        return self.psi_flat + self.margin * self.b / self.r

    @property
    def psi_cut(self):
        return math.acos(1.0 - self.h / self.r)

    @property
    def delta(self):
        """Contact half-width: the flat spans exactly +-b."""
        return self.b

    def to_dict(self):
        return {"r": self.r, "b": self.b, "h": self.h, "epsilon": self.eps,
                "margin": self.margin}


class GrooveProfile:
    """Radial fraction as a function of transverse angle psi from the loop."""

    def __init__(self, spec: GrooveSpec):
        self.spec = spec
        r, h = spec.r, spec.h
        self.depth_frac = 1.0 - h / r
        pa, po = spec.psi_flat, spec.psi_out
        self.psi_a, self.psi_out = pa, po
        w = po - pa
        plane_out = self.depth_frac / math.cos(po)
        dplane_out = self.depth_frac * math.sin(po) / math.cos(po) ** 2
        d2plane_out = self.depth_frac * (1.0 + math.sin(po) ** 2) / math.cos(po) ** 3
        # quintic relief depth D(tau), tau in [0,1]: zero value/slope/curvature
        # at the flat edge, full C^2 contact with the sphere at psi_out
        rhs = np.array([plane_out - 1.0, w * dplane_out, w * w * d2plane_out])
        mat = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
        self.c3, self.c4, self.c5 = np.linalg.solve(mat, rhs)
        self._validate()

    def plane(self, psi):
        return self.depth_frac / np.cos(psi)

    def relief(self, tau):
        return ((self.c5 * tau + self.c4) * tau + self.c3) * tau ** 3

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=float)
        out = np.ones_like(psi)
        flat = psi <= self.psi_a
        ramp = (psi > self.psi_a) & (psi < self.psi_out)
        out[flat] = self.plane(psi[flat])
        tau = (psi[ramp] - self.psi_a) / (self.psi_out - self.psi_a)
        out[ramp] = np.minimum(self.plane(psi[ramp]) - self.relief(tau), 1.0)
        return out

    def _validate(self):
        psi = np.linspace(0.0, self.psi_out, 4001)
        v = self(psi)
        plane = self.plane(psi)
        if np.any(v > plane + 1e-12):
            raise InvalidInput("groove profile rises above the cutting plane; "
                               "the flat would not be the support surface")
        if np.any(v > 1.0 + 1e-12):
            raise InvalidInput("groove profile exceeds the sphere")
        if np.min(v) < 1.0 - self.spec.eps:
            raise InvalidInput("groove profile dips below 1 - eps")

    def cross_section_area(self, n=20001):
        """Area removed in a transverse polar section: r^2 int (1 - S^2)."""
        psi = np.linspace(0.0, self.psi_out, n)
        v = self(psi)
        return self.spec.r ** 2 * float(np.trapezoid(1.0 - v * v, psi))


class ShapeFunction:
    """S: S^2 -> (1-eps, 1], radial fraction of the carved body."""

    def __init__(self, spec: Optional[GrooveSpec], loop_unit_points=None,
                 profile: Optional[GrooveProfile] = None):
        self.spec = spec
        self.loop = None if loop_unit_points is None else np.asarray(loop_unit_points)
        self.profile = profile
        if self.loop is not None and profile is None:
            raise InvalidInput("loop without profile")
        if self.loop is not None:
            self._tree = cKDTree(self.loop)
            seg = np.linalg.norm(np.roll(self.loop, -1, axis=0) - self.loop, axis=1)
            self._max_seg_ang = float(2.0 * np.arcsin(np.clip(seg / 2.0, 0, 1)).max())
        else:
            self._tree = None
            self._max_seg_ang = 0.0

    @classmethod
    def ball(cls):
        return cls(None)

    @property
    def radius(self):
        return self.spec.r if self.spec is not None else None

    def angular_distance(self, dirs):
        if self.loop is None:
            return np.full(np.atleast_2d(dirs).shape[0], np.inf)
        return sphergeo.point_to_polyline_angle(dirs, self.loop, closed=True)

    def __call__(self, dirs, chunk=200_000):
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if self.loop is None:
            return np.ones(dirs.shape[0])
        out = np.ones(dirs.shape[0])
        cutoff_chord = 2.0 * math.sin(
            min((self.profile.psi_out + self._max_seg_ang) / 2.0, math.pi / 2))
        for lo in range(0, dirs.shape[0], chunk):
            sl = slice(lo, min(lo + chunk, dirs.shape[0]))
            block = dirs[sl]
            d1, _ = self._tree.query(block, k=1,
                                     distance_upper_bound=cutoff_chord * 1.05)
            near = np.isfinite(d1) & (d1 <= cutoff_chord)
            if not np.any(near):
                continue
            psi = sphergeo.point_to_polyline_angle(block[near], self.loop,
                                                   k_near=6, closed=True)
            vals = np.ones(psi.shape[0])
            inner = psi < self.profile.psi_out
            vals[inner] = self.profile(psi[inner])
            seg = out[sl]
            seg[near] = vals
            out[sl] = seg
        return out


def shape_function(loop: SphericalCurve, spec: GrooveSpec,
                   min_clearance: Optional[float] = None) -> ShapeFunction:
    """Carved shape for a groove of flat half-width b along the loop.

    ``min_clearance`` is the loop's minimum non-adjacent arc distance (from
    the closure certificate); the groove must fit twice inside it.
    """
    if abs(loop.radius - spec.r) > 1e-9 * spec.r:
        raise InvalidInput("loop radius does not match groove spec")
    footprint = 2.0 * spec.r * math.sin(spec.psi_out)
    if min_clearance is not None and footprint >= min_clearance:
        raise GrooveOverlap(
            f"groove footprint {footprint:.6g} exceeds loop clearance "
            f"{min_clearance:.6g}; grooves of neighbouring strands would merge")
    pts = loop.points
    if np.linalg.norm(pts[-1] - pts[0]) < loop.ds:
        pts = pts[:-1]
    return ShapeFunction(spec, pts / loop.radius, GrooveProfile(spec))


# ---------------------------------------------------------------------------
# meshing


def icosphere(level: int):
    """Subdivided icosahedron on the unit sphere: (vertices, faces)."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts = sphergeo.normalize_rows(verts)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return verts, faces


def _subdivide(verts, faces):
    vlist = [verts]
    offset = verts.shape[0]
    cache = {}
    new_pts = []

    def midpoint(i, j):
        nonlocal offset
        key = (i, j) if i < j else (j, i)
        if key in cache:
            return cache[key]
        p = verts[i] + verts[j]
        p /= np.linalg.norm(p)
        new_pts.append(p)
        cache[key] = offset
        offset += 1
        return cache[key]

    new_faces = np.empty((faces.shape[0] * 4, 3), dtype=np.int64)
    for fi, (a, b, c) in enumerate(faces):
        ab = midpoint(a, b)
        bc = midpoint(b, c)
        ca = midpoint(c, a)
        new_faces[4 * fi + 0] = (a, ab, ca)
        new_faces[4 * fi + 1] = (b, bc, ab)
        new_faces[4 * fi + 2] = (c, ca, bc)
        new_faces[4 * fi + 3] = (ab, bc, ca)
    if new_pts:
        vlist.append(np.array(new_pts))
    return np.vstack(vlist), new_faces


def check_watertight(n_vertices, faces):
    """Raise MeshInvalid unless every edge is shared by exactly two faces
    with consistent orientation and the Euler characteristic is 2."""
    faces = np.asarray(faces)
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    directed = edges[:, 0] * np.int64(n_vertices) + edges[:, 1]
    if np.unique(directed).size != directed.size:
        raise MeshInvalid("duplicated directed edge (inconsistent orientation)")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    und = lo * np.int64(n_vertices) + hi
    _, counts = np.unique(und, return_counts=True)
    if np.any(counts != 2):
        raise MeshInvalid("edge not shared by exactly two faces")
    n_edges = und.size // 2
    euler = n_vertices - n_edges + faces.shape[0]
    if euler != 2:
        raise MeshInvalid(f"Euler characteristic {euler} != 2")


def mesh_moments(verts, faces):
    """(volume, barycenter, inertia about origin) of the solid bounded by
    the mesh, by signed tetrahedra against the origin.  Exact for
    polyhedra; homogeneous unit density."""
    v0 = verts[faces[:, 0]]
    v1 = verts[faces[:, 1]]
    v2 = verts[faces[:, 2]]
    det = np.einsum("ij,ij->i", v0, np.cross(v1, v2))
    vol = det.sum() / 6.0
    bary = ((v0 + v1 + v2) * det[:, None]).sum(axis=0) / 24.0 / vol
    s = v0 + v1 + v2
    cov = np.einsum("i,ijk->jk", det / 120.0,
                    (np.einsum("ij,ik->ijk", v0, v0)
                     + np.einsum("ij,ik->ijk", v1, v1)
                     + np.einsum("ij,ik->ijk", v2, v2)
                     + np.einsum("ij,ik->ijk", s, s)))
    inertia = np.trace(cov) * np.eye(3) - cov
    return float(vol), bary, inertia


@dataclass(frozen=True)
class GroovedBody:
    """Watertight star-shaped triangle mesh of the carved ball."""

    radius: float
    vertices: np.ndarray
    faces: np.ndarray
    volume: float
    barycenter: np.ndarray
    inertia: np.ndarray          # about the origin (= ball center)
    uncarved_volume: float
    uncarved_barycenter: np.ndarray
    shape: Optional[ShapeFunction] = field(default=None, compare=False)
    spec: Optional[GrooveSpec] = None

    @property
    def groove_volume(self):
        return self.uncarved_volume - self.volume

    @property
    def delta(self):
        return self.spec.delta if self.spec is not None else 0.0

    def sidecar(self):
        d = {"r": float(self.radius)}
        if self.spec is not None:
            d.update({"b": float(self.spec.b), "h": float(self.spec.h),
                      "epsilon": float(self.spec.eps)})
        else:
            d.update({"b": 0.0, "h": 0.0, "epsilon": 0.0})
        d.update({
            "delta": float(self.delta),
            "volume": float(self.volume),
            "barycenter": [float(v) for v in self.barycenter],
        })
        return d


def mesh_body(shape: ShapeFunction, resolution: int = 5, r: Optional[float] = None,
              band_cross: int = 24, band_span: float = 1.3) -> GroovedBody:
    """Mesh the star-shaped body K_S by radially displacing a sphere mesh.

    Without a groove: a plain subdivided icosahedron.  With a groove: a
    structured band of points along the loop (band_cross vertices across
    ``band_span`` groove widths) unioned with the base sphere points and
    triangulated by their convex hull (points on a sphere: watertight
    Delaunay by construction), then displaced radially by S.
    """
    radius = r if r is not None else shape.radius
    if radius is None:
        raise InvalidInput("no radius available: pass r=")
    if resolution < 2:
        raise ResolutionExceeded("resolution level must be >= 2")

    base_v, base_f = icosphere(resolution)
    if shape.loop is None:
        unit_v, faces = base_v, base_f
    else:
        if band_cross < 4:
            raise ResolutionExceeded(
                "fewer than 4 vertices across the groove cannot represent it")
        prof = shape.profile
        psi_out = prof.psi_out
        loop = shape.loop
        # cross-section angles: flat interior, exact flat edges, relief, outside
        n_flat = max(4, band_cross // 2)
        n_ramp = max(3, band_cross // 4)
        half = np.concatenate([
            np.linspace(0.0, prof.psi_a, n_flat, endpoint=False),
            [prof.psi_a],
            np.linspace(prof.psi_a, psi_out, n_ramp + 1, endpoint=False)[1:],
            [psi_out, band_span * psi_out],
        ])
        psis = np.concatenate([-half[::-1], half[1:]])
        spacing = max(np.median(np.diff(half)), psi_out / band_cross)

        # decimate loop samples to roughly the cross spacing
        seg_ang = np.linalg.norm(np.diff(loop, axis=0), axis=1)
        stride = max(1, int(round(spacing / max(seg_ang.mean(), 1e-12))))
        idx = np.arange(0, loop.shape[0], stride)
        pts_l = loop[idx]
        nxt = loop[(idx + 1) % loop.shape[0]]
        tan_l = sphergeo.normalize_rows(nxt - pts_l)
        # project tangents to the tangent plane of the sphere
        tan_l = sphergeo.normalize_rows(
            tan_l - np.einsum("ij,ij->i", tan_l, pts_l)[:, None] * pts_l)
        side = np.cross(pts_l, tan_l)
        band = (pts_l[:, None, :] * np.cos(psis)[None, :, None]
                + side[:, None, :] * np.sin(psis)[None, :, None]).reshape(-1, 3)

        # base vertices too close to the band would wrinkle the hull
        keep = sphergeo.point_to_polyline_angle(base_v, loop, closed=True) \
            > band_span * psi_out + 2.0 * spacing
        unit_v = np.vstack([base_v[keep], sphergeo.normalize_rows(band)])
        unit_v = np.unique(np.round(unit_v / 1e-9) * 1e-9, axis=0)
        unit_v = sphergeo.normalize_rows(unit_v)
        hull = ConvexHull(unit_v, qhull_options="Qt")
        faces = hull.simplices.astype(np.int64)
        used = np.unique(faces)
        remap = -np.ones(unit_v.shape[0], dtype=np.int64)
        remap[used] = np.arange(used.size)
        unit_v = unit_v[used]
        faces = remap[faces]
        # orient all faces outward
        det = np.einsum("ij,ij->i", unit_v[faces[:, 0]],
                        np.cross(unit_v[faces[:, 1]], unit_v[faces[:, 2]]))
        flip = det < 0
        faces[flip] = faces[flip][:, [0, 2, 1]]

    check_watertight(unit_v.shape[0], faces)
    scale = shape(unit_v)
    verts = unit_v * (radius * scale)[:, None]
    vol, bary, inertia = mesh_moments(verts, faces)
    verts0 = unit_v * radius
    vol0, bary0, _ = mesh_moments(verts0, faces)
    return GroovedBody(radius=radius, vertices=verts, faces=faces, volume=vol,
                       barycenter=bary, inertia=inertia, uncarved_volume=vol0,
                       uncarved_barycenter=bary0, shape=shape,
                       spec=shape.spec)


def ball_body(r: float, resolution: int = 3, exact_moments: bool = True) -> GroovedBody:
    """Ungrooved reference ball.  With ``exact_moments`` the volume,
    barycenter and inertia are the closed-form ball values (the mesh is
    kept only for contact geometry), so dynamics oracles are not polluted
    by mesh quadrature error."""
    shape = ShapeFunction.ball()
    body = mesh_body(shape, resolution=resolution, r=r)
    if not exact_moments:
        return body
    vol = 4.0 / 3.0 * math.pi * r ** 3
    inertia = 0.4 * vol * r * r * np.eye(3)
    return GroovedBody(radius=r, vertices=body.vertices, faces=body.faces,
                       volume=vol, barycenter=np.zeros(3), inertia=inertia,
                       uncarved_volume=vol, uncarved_barycenter=np.zeros(3),
                       shape=shape, spec=None)


def barycenter_wedge_check(body: GroovedBody, segment_center, segment_dir,
                           beta: float, up=None):
    """Homogeneous-density barycenter, its carving drift, and whether it
    lies inside the wedge of opening angle beta over the contact segment.

    ``up`` is the outward plane normal (defaults to +z for a body resting
    on a horizontal plane below it)."""
    check_watertight(body.vertices.shape[0], body.faces)
    bary = body.barycenter
    drift = float(np.linalg.norm(bary - body.uncarved_barycenter))
    if up is None:
        up = np.array([0.0, 0.0, 1.0])
    u = np.asarray(segment_dir, dtype=float)
    u = u / np.linalg.norm(u)
    v = bary - np.asarray(segment_center, dtype=float)
    v_perp = v - np.dot(v, u) * u
    nv = np.linalg.norm(v_perp)
    if nv < 1e-15:
        inside = True
    else:
        ang = math.acos(max(-1.0, min(1.0, float(np.dot(v_perp / nv, up)))))
        inside = ang <= beta / 2.0
    return bary, drift, inside


# ---------------------------------------------------------------------------
# binary STL


def export_mesh(body_or_mesh, path):
    """Binary little-endian STL; header 'trajectoid-forge v1' zero-padded."""
    if isinstance(body_or_mesh, GroovedBody):
        verts, faces = body_or_mesh.vertices, body_or_mesh.faces
    else:
        verts, faces = body_or_mesh
    tri = verts[faces]  # (F, 3, 3)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    ln = np.linalg.norm(n, axis=1, keepdims=True)
    n = n / np.where(ln == 0, 1.0, ln)
    rec = np.zeros(faces.shape[0],
                   dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)),
                                   ("attr", "<u2")]))
    rec["n"] = n.astype("<f4")
    rec["v"] = tri.astype("<f4")
    header = STL_HEADER + b"\x00" * (80 - len(STL_HEADER))
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", faces.shape[0]))
            fh.write(rec.tobytes())
    except OSError as exc:
        raise OSError(f"failed writing STL to {path}: {exc}") from exc


def import_mesh(path):
    """Read a binary STL back as (header bytes, triangle soup (F,3,3))."""
    try:
        with open(path, "rb") as fh:
            header = fh.read(80)
            (count,) = struct.unpack("<I", fh.read(4))
            raw = fh.read(count * 50)
    except OSError as exc:
        raise OSError(f"failed reading STL from {path}: {exc}") from exc
    rec = np.frombuffer(raw, dtype=np.dtype(
        [("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]), count=count)
    return header, rec["v"].astype(float)


def mc_groove_volume(shape: ShapeFunction, n_samples: int, rng,
                     r: Optional[float] = None) -> float:
    """Monte-Carlo estimate of the carved-away volume (oracle for tests).

    Samples uniformly in the spherical shell rho in (r(1-eps), r] that
    fully contains the groove, so every sample is informative; the result
    is reweighted by the exact shell volume.
    """
    radius = r if r is not None else shape.radius
    eps = shape.spec.eps if shape.spec is not None else 1.0
    dirs = rng.normal(size=(n_samples, 3))
    dirs = sphergeo.normalize_rows(dirs)
    lo3 = (1.0 - eps) ** 3
    rho = radius * np.cbrt(rng.uniform(lo3, 1.0, n_samples))
    s_vals = shape(dirs)
    outside = rho > radius * s_vals
    shell = 4.0 / 3.0 * math.pi * radius ** 3 * (1.0 - lo3)
    return shell * float(outside.mean())
