"""Closing radii: find r such that n rotated copies of a one-period lift
join into a simple closed spherical loop.

The closure criterion is the monodromy angle: the n-copy concatenation
closes exactly when the one-period monodromy rotation has angle 2 pi / n
(the copies then tile once around the rotation axis).  Interior targets
are bracketed by a sign change and refined by bisection; the folded
targets 0 and pi (n = 1, 2) are located as extrema of the angle curve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sphergeo
from .curves import PlanarCurve
from .errors import (InvalidInput, NoClosureInBracket, NoSimpleClosure,
                     NotC1Periodic, RequiresSimpleLoop, SeamMismatch)
from .lift import Monodromy, SphericalCurve, lift, monodromy

BISECT_TOL = 1e-12
AXIS_STATIONARITY_TOL = 1e-6
SEAM_GAP_FRACTION = 1e-6


def smallest_copy_count(a: float) -> int:
    """Smallest n with 2 pi / n in [a/3, a]; exists for every a in (0, pi]."""
    if not 0.0 < a <= math.pi:
        raise InvalidInput("angle must lie in (0, pi]")
    n = int(math.ceil(2.0 * math.pi / a))
    if not (a / 3.0 <= 2.0 * math.pi / n <= a):
        raise InvalidInput(f"no integer subdivision found for a={a}")
    return n


def concatenate_rotated(piece: SphericalCurve, mono: Monodromy, n: int) -> SphericalCurve:
    """Concatenation of M^j applied to the piece, j = 0..n-1.

    The returned curve includes the final endpoint M^n x(0); for a certified
    radius it nearly coincides with the start.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    e0 = piece.start_frame()
    e1 = piece.end_frame()
    seam = np.max(np.abs(mono.matrix @ e0 - e1))
    if seam > 1e-6:
        raise SeamMismatch(f"rotation does not map start frame to end frame "
                           f"(max entry gap {seam:.3g})")
    npts = piece.points.shape[0]
    pts = [piece.points]
    tans = [piece.tangents]
    m = np.eye(3)
    for _ in range(1, n):
        m = mono.matrix @ m
        pts.append(piece.points[1:] @ m.T)
        tans.append(piece.tangents[1:] @ m.T)
    points = np.vstack(pts)
    tangents = np.vstack(tans)
    kappa = np.concatenate([piece.kappa_g] + [piece.kappa_g[1:]] * (n - 1))
    s = np.arange(points.shape[0]) * piece.ds
    return SphericalCurve(piece.radius, s, points, tangents, kappa,
                          source=piece.source)


def is_simple(loop: SphericalCurve, tol: Optional[float] = None):
    """True iff no two non-adjacent arcs of the loop pass within ``tol``.

    The loop is treated as closed (the duplicate endpoint, if present
    within tol, is dropped).  Returns (bool, witness) where the witness is
    (arc_i, arc_j, midpoint, distance) for the first offending pair.
    """
    if tol is None:
        tol = 3.0 * loop.ds
    pts = loop.points
    closed = loop.closure_gap() <= max(tol, 1e-6 * loop.radius)
    if closed and np.linalg.norm(pts[-1] - pts[0]) < loop.ds:
        pts = pts[:-1]
    hit, witness = sphergeo.polyline_self_intersects(
        pts, loop.radius, tol, closed=closed)
    return (not hit), witness


def enclosed_area(loop: SphericalCurve, assume_simple: bool = False) -> float:
    """Spherical area of the smaller region enclosed by a simple closed loop
    (via the turning-angle form of the Gauss-Bonnet identity)."""
    gap = loop.closure_gap()
    if gap > max(3.0 * loop.ds, SEAM_GAP_FRACTION * loop.radius):
        raise RequiresSimpleLoop(f"loop is not closed (gap {gap:.3g})")
    if not assume_simple:
        ok, witness = is_simple(loop)
        if not ok:
            raise RequiresSimpleLoop(f"loop self-intersects near arcs "
                                     f"{witness[0]}, {witness[1]}")
    pts = loop.points
    if np.linalg.norm(pts[-1] - pts[0]) < loop.ds:
        pts = pts[:-1]
    return sphergeo.polygon_area_turning(pts, loop.radius)


def enclosed_area_fan(loop: SphericalCurve) -> float:
    """Independent area evaluation by fan triangulation (oracle cross-check)."""
    pts = loop.points
    if np.linalg.norm(pts[-1] - pts[0]) < loop.ds:
        pts = pts[:-1]
    return sphergeo.polygon_area_fan(pts, loop.radius)


def strand_clearance(loop: SphericalCurve, period_length: float,
                     max_subsamples: int = 3000) -> float:
    """Lower bound on the minimum distance between loop points whose
    along-loop separation exceeds a tenth of one period."""
    pts = loop.points
    n = pts.shape[0]
    stride = max(1, n // max_subsamples)
    sub = pts[::stride]
    m = sub.shape[0]
    u = sub / loop.radius
    dots = np.clip(u @ u.T, -1.0, 1.0)
    ang = np.arccos(dots)
    idx = np.arange(m)
    sep = np.abs(idx[:, None] - idx[None, :])
    sep = np.minimum(sep, m - sep) * stride * loop.ds
    mask = sep > 0.1 * period_length
    if not np.any(mask):
        return math.inf
    min_sub = float(np.min(ang[mask])) * loop.radius
    return max(0.0, min_sub - stride * loop.ds)


@dataclass(frozen=True)
class ClosureCertificate:
    """Result of a successful closing-radius search."""

    r: float
    n: int
    seam_gap: float
    simple: bool
    b_r: float
    a_r: float
    apex: np.ndarray
    witnesses: list
    min_arc_clearance: float
    method: str
    bracket: tuple
    phi_residual: float
    samples: int
    lipschitz_phi: float
    mono: Optional[Monodromy] = field(default=None, compare=False)
    loop: Optional[SphericalCurve] = field(default=None, compare=False)

    def to_json(self, path_or_buf=None):
        obj = {
            "r": float(self.r),
            "n": int(self.n),
            "seam_gap": float(self.seam_gap),
            "simple": bool(self.simple),
            "b_r": float(self.b_r),
            "a_r": float(self.a_r),
            "apex": [float(v) for v in self.apex],
            "witnesses": [
                [int(w[0]), int(w[1]), [float(v) for v in w[2]], float(w[3])]
                for w in self.witnesses
            ],
            "min_arc_clearance": float(self.min_arc_clearance),
            "method": self.method,
            "bracket": [float(self.bracket[0]), float(self.bracket[1])],
            "phi_residual": float(self.phi_residual),
            "samples": int(self.samples),
            "lipschitz_phi": float(self.lipschitz_phi),
            "monodromy": ([float(v) for v in self.mono.matrix.reshape(-1)]
                          if self.mono is not None else None),
            "period": (float(self.mono.period) if self.mono is not None else None),
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
        mono = None
        if obj.get("monodromy") is not None:
            m = np.array(obj["monodromy"], dtype=float).reshape(3, 3)
            mono = Monodromy.from_matrix(m, obj.get("period") or 0.0)
        return cls(
            r=float(obj["r"]), n=int(obj["n"]), seam_gap=float(obj["seam_gap"]),
            simple=bool(obj["simple"]), b_r=float(obj["b_r"]), a_r=float(obj["a_r"]),
            apex=np.array(obj["apex"], dtype=float),
            witnesses=[(int(w[0]), int(w[1]), np.array(w[2]), float(w[3]))
                       for w in obj["witnesses"]],
            min_arc_clearance=float(obj["min_arc_clearance"]),
            method=obj["method"], bracket=tuple(obj["bracket"]),
            phi_residual=float(obj["phi_residual"]), samples=int(obj["samples"]),
            lipschitz_phi=float(obj["lipschitz_phi"]), mono=mono,
        )


def _apex_clearance(loop_pts, r, axis):
    """(apex point, min geodesic distance to the loop) over both fixed points."""
    best = None
    for sgn in (1.0, -1.0):
        p = sgn * axis
        ang = sphergeo.angle_between(np.broadcast_to(p, loop_pts.shape),
                                     loop_pts / r)
        i = int(np.argmin(ang))
        lo = max(0, i - 1)
        hi = min(ang.size - 1, i + 1)
        if hi - lo == 2:
            a, b, c = ang[lo], ang[i], ang[hi]
            denom = a - 2.0 * b + c
            val = b - 0.125 * (a - c) ** 2 / denom if denom > 0 else b
        else:
            val = ang[i]
        d = float(val) * r
        if best is None or d < best[1]:
            best = (p * r, d)
    return best


def find_closing_radius(k: PlanarCurve, r_bracket, n_max: int, *,
                        samples: int = 2048, scan_points: int = 160,
                        substeps: int = 1, simple_tol: Optional[float] = None,
                        threads: int = 1) -> ClosureCertificate:
    """Search ``r_bracket`` for the largest radius whose n-copy lift loop
    (n <= n_max) is simple and closed; ties broken toward smaller n.

    Scans the monodromy angle phi(r) on a log-spaced grid, brackets the
    solutions of phi = 2 pi / n, refines by bisection (fold targets 0 and
    pi by golden-section), verifies axis stationarity across the final
    bracket, then assembles the loop and tests simplicity.
    """
    r_lo, r_hi = float(r_bracket[0]), float(r_bracket[1])
    if not (0.0 < r_lo < r_hi):
        raise InvalidInput("bracket must satisfy 0 < lo < hi")
    if n_max < 1:
        raise InvalidInput("n_max must be >= 1")
    if not k.periodic_compatible:
        raise NotC1Periodic("curve seam is not C1-periodic")
    curve = k if k.n_segments == samples else k.resample(samples)

    def mono_at(r):
        return monodromy(curve, r, substeps)

    rs = np.geomspace(r_lo, r_hi, scan_points)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            monos = list(ex.map(mono_at, rs))
    else:
        monos = [mono_at(r) for r in rs]
    phis = np.array([m.angle for m in monos])
    lipschitz = float(np.max(np.abs(np.diff(phis)) / np.diff(rs)))

    candidates = []
    for n in range(1, n_max + 1):
        target = 2.0 * math.pi / n
        if n >= 3:
            f = phis - target
            sign_change = np.where(f[:-1] * f[1:] <= 0.0)[0]
            for i in sign_change:
                if f[i] == 0.0 and f[i + 1] == 0.0:
                    continue
                candidates.append((n, "bisection", rs[i], rs[i + 1]))
        else:
            fold = 0.0 if n == 1 else math.pi
            g = np.abs(phis - fold)
            grid_slack = np.median(np.abs(np.diff(phis))) * 4 + 1e-9
            for i in range(1, scan_points - 1):
                if g[i] <= g[i - 1] and g[i] <= g[i + 1] and g[i] < grid_slack:
                    candidates.append((n, "fold-min", rs[i - 1], rs[i + 1]))

    if not candidates:
        raise NoClosureInBracket(
            f"no monodromy angle 2*pi/n (n <= {n_max}) bracketed; "
            f"phi ranged over [{phis.min():.6g}, {phis.max():.6g}]",
            phi_range=(float(phis.min()), float(phis.max())))

    refined = []
    for n, method, a, b in candidates:
        target = 2.0 * math.pi / n if n >= 3 else (0.0 if n == 1 else math.pi)
        if method == "bisection":
            lo, hi = a, b
            m_lo = mono_at(lo)
            f_lo = m_lo.angle - target
            r_mid, m_mid = lo, m_lo
            for _ in range(120):
                r_mid = 0.5 * (lo + hi)
                m_mid = mono_at(r_mid)
                f_mid = m_mid.angle - target
                if abs(f_mid) <= BISECT_TOL or (hi - lo) < 1e-15 * r_mid:
                    break
                if f_lo * f_mid <= 0.0:
                    hi = r_mid
                else:
                    lo, f_lo = r_mid, f_mid
            m_a, m_b = mono_at(lo), mono_at(hi)
            axis_move = _axis_line_angle(m_a.axis, m_b.axis)
            if axis_move > AXIS_STATIONARITY_TOL:
                continue
            residual = abs(m_mid.angle - target)
            if residual > BISECT_TOL:
                continue
            refined.append((r_mid, n, method, (lo, hi), residual, m_mid))
        else:
            # golden-section minimization of |phi - fold target|
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            lo, hi = a, b
            c = hi - invphi * (hi - lo)
            d = lo + invphi * (hi - lo)
            fc = abs(mono_at(c).angle - target)
            fd = abs(mono_at(d).angle - target)
            for _ in range(200):
                if (hi - lo) < 1e-14 * hi:
                    break
                if fc < fd:
                    hi, d, fd = d, c, fc
                    c = hi - invphi * (hi - lo)
                    fc = abs(mono_at(c).angle - target)
                else:
                    lo, c, fc = c, d, fd
                    d = lo + invphi * (hi - lo)
                    fd = abs(mono_at(d).angle - target)
            r_best = 0.5 * (lo + hi)
            m_best = mono_at(r_best)
            residual = abs(m_best.angle - target)
            if n == 1:
                residual = min(residual, abs(m_best.angle))
            if residual > 1e-8:
                continue
            refined.append((r_best, n, method, (lo, hi), residual, m_best))

    if not refined:
        raise NoClosureInBracket(
            f"bracketed candidates failed refinement; phi range "
            f"[{phis.min():.6g}, {phis.max():.6g}]",
            phi_range=(float(phis.min()), float(phis.max())))

    refined.sort(key=lambda t: (-t[0], t[1]))
    all_witnesses = []
    for r_star, n, method, brk, residual, m_star in refined:
        piece = lift(curve, r_star, substeps)
        loop = concatenate_rotated(piece, m_star, n)
        gap = loop.closure_gap()
        if gap > SEAM_GAP_FRACTION * r_star:
            continue
        tol = simple_tol if simple_tol is not None else 3.0 * loop.ds
        simple, witness = is_simple(loop, tol)
        if not simple:
            all_witnesses.append(witness)
            continue
        if n >= 2:
            apex, b_r = _apex_clearance(loop.points, r_star, m_star.axis)
            a_r = m_star.angle
        else:
            apex, b_r = _apex_clearance(
                loop.points, r_star,
                sphergeo.normalize_rows(np.cross(loop.points[0], loop.tangents[0])))
            a_r = 0.0
        clearance = strand_clearance(loop, curve.length)
        return ClosureCertificate(
            r=r_star, n=n, seam_gap=gap, simple=True, b_r=b_r, a_r=a_r,
            apex=apex, witnesses=[], min_arc_clearance=clearance,
            method=method, bracket=brk, phi_residual=residual,
            samples=samples, lipschitz_phi=lipschitz, mono=m_star, loop=loop)

    raise NoSimpleClosure(
        f"{len(refined)} closing radii found but no loop was simple",
        witnesses=all_witnesses)


def _axis_line_angle(a1, a2):
    """Angle between rotation axes treated as undirected lines."""
    if np.linalg.norm(a1) < 0.5 or np.linalg.norm(a2) < 0.5:
        return 0.0
    ang = sphergeo.angle_between(a1, a2)
    return float(min(ang, math.pi - ang))
