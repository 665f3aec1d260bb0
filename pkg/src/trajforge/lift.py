"""Spherical lifts: the trace of a ball rolling along a planar curve.

The lift of an arclength-parametrized planar curve c onto the sphere of
radius r is the unit-speed spherical curve with the same signed (geodesic)
curvature, started at (r,0,0) with tangent (0,1,0).  It solves

    x'' = kappa_c(s) (x x x') / r - x / r^2

which encodes rolling without slipping or pivoting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels, sphergeo
from .curves import FunctionSpec, PlanarCurve, arclength_reparam
from .errors import InvalidInput, InvalidRadius, NotC1Periodic, ResolutionExceeded

MAX_STEPS = 20_000_000
# geodesic-curvature transfer tolerance, scaled by max |kappa| (see lift())
TOL_LIFT = 1e-7


@dataclass(frozen=True)
class SphericalCurve:
    """Unit-speed curve on the sphere of radius ``radius`` with its tangent
    frame and the geodesic curvature it was integrated with."""

    radius: float
    s: np.ndarray         # (n+1,) arclength grid
    points: np.ndarray    # (n+1, 3), |x_i| = radius
    tangents: np.ndarray  # (n+1, 3) unit tangents, orthogonal to points
    kappa_g: np.ndarray   # (n+1,) geodesic curvature samples
    source: Optional[PlanarCurve] = None

    def __post_init__(self):
        r = self.radius
        pts, tan = self.points, self.tangents
        if np.max(np.abs(np.linalg.norm(pts, axis=1) - r)) > 1e-9 * r:
            raise InvalidInput("points not on the sphere to 1e-9 r")
        if np.max(np.abs(np.einsum("ij,ij->i", pts, tan))) > 1e-9 * r:
            raise InvalidInput("tangents not orthogonal to radius")
        if np.max(np.abs(np.linalg.norm(tan, axis=1) - 1.0)) > 1e-9:
            raise InvalidInput("tangents not unit length")

    @property
    def n_segments(self):
        return self.s.size - 1

    @property
    def ds(self):
        return float(self.s[1] - self.s[0])

    @property
    def length(self):
        return float(self.s[-1] - self.s[0])

    def start_frame(self):
        return sphergeo.frame_of(self.points[0], self.tangents[0], self.radius)

    def end_frame(self):
        return sphergeo.frame_of(self.points[-1], self.tangents[-1], self.radius)

    def closure_gap(self):
        """Geodesic distance between endpoint and start point."""
        return float(sphergeo.geodesic_distance(
            self.points[-1], self.points[0], self.radius))

    def measured_geodesic_curvature(self):
        """5-point finite-difference estimate of the geodesic curvature from
        the stored frames (interior samples only; 4th-order accurate)."""
        t = self.tangents
        ds = self.ds
        dt = (-t[4:] + 8.0 * t[3:-1] - 8.0 * t[1:-3] + t[:-4]) / (12.0 * ds)
        u = np.cross(self.points[2:-2], t[2:-2]) / self.radius
        return np.einsum("ij,ij->i", dt, u)

    def self_intersects(self, tol=None):
        """Proximity self-test; tol defaults to 3 grid steps."""
        if tol is None:
            tol = 3.0 * self.ds
        return sphergeo.polyline_self_intersects(
            self.points, self.radius, tol, closed=False)

    def to_csv(self, path_or_buf):
        rows = ["s,x,y,z,tx,ty,tz,kappa_g"]
        for i in range(self.s.size):
            vals = (self.s[i], *self.points[i], *self.tangents[i], self.kappa_g[i])
            rows.append(",".join("%.17g" % v for v in vals))
        data = "\n".join(rows) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(data)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(data)

    @classmethod
    def from_csv(cls, path_or_buf, radius=None):
        import io as _io

        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf, "r", encoding="utf-8") as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "s,x,y,z,tx,ty,tz,kappa_g":
            raise InvalidInput("expected header 's,x,y,z,tx,ty,tz,kappa_g'")
        data = np.loadtxt(_io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        pts = data[:, 1:4]
        r = radius if radius is not None else float(np.mean(np.linalg.norm(pts, axis=1)))
        return cls(r, data[:, 0], pts, data[:, 4:7], data[:, 7])


@dataclass(frozen=True)
class Monodromy:
    """Rotation carrying the lift frame at s=0 to the frame at s=T."""

    matrix: np.ndarray
    angle: float
    axis: np.ndarray
    period: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        if np.max(np.abs(m.T @ m - np.eye(3))) > 1e-12:
            raise InvalidInput("monodromy matrix not orthogonal to 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise InvalidInput("monodromy determinant differs from 1")
        if abs(math.cos(self.angle) - (np.trace(m) - 1.0) / 2.0) > 1e-12:
            raise InvalidInput("angle inconsistent with trace")

    @classmethod
    def from_matrix(cls, m, period):
        ang, axis = sphergeo.rotation_angle_axis(m)
        return cls(np.asarray(m, dtype=float), ang, axis, float(period))

    def power(self, j):
        return np.linalg.matrix_power(self.matrix, j)

    def apply(self, points):
        return np.asarray(points) @ self.matrix.T

    def fixed_points(self, radius):
        """The two antipodal fixed points of the rotation on the sphere."""
        if self.angle < 1e-12:
            raise InvalidInput("identity rotation has no distinguished axis")
        return np.array([self.axis * radius, -self.axis * radius])

    def to_json(self, path_or_buf=None):
        obj = {
            "matrix": [float(v) for v in self.matrix.reshape(-1)],
            "angle": float(self.angle),
            "axis": [float(v) for v in self.axis],
            "period": float(self.period),
        }
        text = json.dumps(obj, indent=2) + "\n"
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, path_or_buf):
        if hasattr(path_or_buf, "read"):
            obj = json.load(path_or_buf)
        elif isinstance(path_or_buf, str) and path_or_buf.lstrip().startswith("{"):
            obj = json.loads(path_or_buf)
        else:
            with open(path_or_buf, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        m = np.array(obj["matrix"], dtype=float).reshape(3, 3)
        return cls(m, float(obj["angle"]), np.array(obj["axis"], dtype=float),
                   float(obj.get("period", 0.0)))


def lift(curve: PlanarCurve, r: float, substeps: int = 1) -> SphericalCurve:
    """Roll a ball of radius r along ``curve`` and return the contact trace."""
    if r <= 0:
        raise InvalidRadius(f"radius must be positive, got {r}")
    steps = curve.n_segments * max(1, substeps)
    if steps > MAX_STEPS:
        raise ResolutionExceeded(f"{steps} integration steps exceed limit {MAX_STEPS}")
    pts, tan = _kernels.lift_rk4(curve.kappa, curve.ds, r, substeps)
    return SphericalCurve(r, curve.s.copy(), pts, tan, curve.kappa.copy(), source=curve)


def closure_defect(obj: Union[FunctionSpec, PlanarCurve], r: float,
                   n: int = 2048, substeps: int = 1) -> float:
    """Geodesic distance between lift endpoint and lift start (in [0, pi r])."""
    curve = arclength_reparam(obj, n) if isinstance(obj, FunctionSpec) else obj
    sph = lift(curve, r, substeps)
    return sph.closure_gap()


def monodromy(curve: PlanarCurve, r: float, substeps: int = 1) -> Monodromy:
    """Rotation relating the lift frame after one period to the start frame."""
    if not curve.periodic_compatible:
        raise NotC1Periodic("curve seam is not C1; monodromy undefined")
    sph = lift(curve, r, substeps)
    m = sph.end_frame() @ sph.start_frame().T
    return Monodromy.from_matrix(m, curve.length)


def circle_lift_closed_form(r: float, big_r: float):
    """Latitude angle and loop length of the lift of a planar circle.

    The lift of a circle of radius R is a circle of constant latitude
    theta = arctan(r/R) (measured from the equator plane of its axis) whose
    circumference 2 pi / sqrt(1/r^2 + 1/R^2) is strictly below 2 pi R.
    """
    if r <= 0 or big_r <= 0:
        raise InvalidInput("radii must be positive")
    theta = math.atan2(r, big_r)
    loop_len = 2.0 * math.pi / math.sqrt(1.0 / r ** 2 + 1.0 / big_r ** 2)
    return theta, loop_len


def injectivity_threshold_constant() -> float:
    """The constant a = pi sqrt((sqrt(17)-1)/2) ~ 3.9258.

    Function-like curves of length T lifted at any r < T/a are never
    injective; A = (a/pi)^2 is the positive root of A^2 + A - 4 = 0.
    """
    return math.pi * math.sqrt((math.sqrt(17.0) - 1.0) / 2.0)


def latitude_loop_fit(sph: SphericalCurve):
    """Best-fit axis (unit vector) and per-sample latitude of a lift that is
    expected to lie on a circle of constant latitude; latitude is measured
    from the equator plane orthogonal to the axis."""
    pts = sph.points
    center = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - center, full_matrices=False)
    axis = vt[-1]
    if np.dot(axis, center) < 0:
        axis = -axis
    lat = np.arcsin(np.clip(pts @ axis / sph.radius, -1.0, 1.0))
    return axis, lat


def first_return_length(sph: SphericalCurve, min_steps: int = 8):
    """Arclength at which the lift first returns to its start point,
    located by a parabolic fit of the squared distance at the first local
    minimum that comes close to zero."""
    pts = sph.points
    d2 = np.sum((pts - pts[0]) ** 2, axis=1)
    ds = sph.ds
    thresh = (10.0 * ds) ** 2
    for i in range(min_steps, d2.size - 1):
        if d2[i] < thresh and d2[i] <= d2[i - 1] and d2[i] <= d2[i + 1]:
            a, b, c = d2[i - 1], d2[i], d2[i + 1]
            denom = a - 2.0 * b + c
            delta = 0.5 * (a - c) / denom if denom != 0 else 0.0
            return float(sph.s[i] + delta * ds)
    raise InvalidInput("lift does not return to its start within its length")


def flat_limit_embedding(curve: PlanarCurve, r: float):
    """The planar curve embedded in the lift's initial tangent plane at
    (r,0,0): the limit shape of the recentered lift as r grows."""
    p0 = curve.points[0]
    t0 = curve.tangents[0]
    n0 = np.array([-t0[1], t0[0]])
    q = (curve.points - p0) @ np.column_stack([t0, n0])
    out = np.empty((q.shape[0], 3))
    out[:, 0] = r
    out[:, 1] = q[:, 0]
    out[:, 2] = q[:, 1]
    return out
