"""Planar target curves: construction, reparametrization, differentiation.

A :class:`PlanarCurve` is always sampled on a uniform arclength grid.  The
sign convention for curvature is counterclockwise-positive throughout.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateCurve, InvalidInput, NotC1Periodic, NotFunctionLike

# absolute tolerance on unit-tangent components for seam/periodicity checks
TOL_DERIV = 1e-8
# |f'| beyond this is treated as a vertical tangent
VERTICAL_GUARD = 1e6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def _tangent_of_slope(dy):
    denom = math.hypot(1.0, dy)
    return np.array([1.0 / denom, dy / denom])


@dataclass(frozen=True)
class FunctionSpec:
    """Sampled graph y = f(x) on [x[0], x[-1]], optionally with callables
    for oracle-grade evaluation of f, f', f''."""

    x: np.ndarray
    y: np.ndarray
    dy_start: float
    dy_end: float
    tag: Optional[str] = None
    func: Optional[Callable] = None
    dfunc: Optional[Callable] = None
    d2func: Optional[Callable] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape:
            raise InvalidInput("x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInput("non-finite samples")
        if x.size < 16:
            raise InvalidInput(f"need at least 16 samples, got {x.size}")
        if np.any(np.diff(x) <= 0):
            raise InvalidInput("x grid must be strictly increasing")

    @classmethod
    def from_samples(cls, x, y, tag=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pch = PchipInterpolator(x, y)
        dp = pch.derivative()
        return cls(x, y, float(dp(x[0])), float(dp(x[-1])), tag=tag)

    @classmethod
    def from_callable(cls, func, a, b, m=4097, df=None, d2f=None, tag=None):
        x = np.linspace(a, b, m)
        y = np.asarray([func(v) for v in x], dtype=float) if not _vectorized(func) \
            else np.asarray(func(x), dtype=float)
        if df is not None:
            d0, d1 = float(df(a)), float(df(b))
        else:
            pch = PchipInterpolator(x, y)
            dp = pch.derivative()
            d0, d1 = float(dp(a)), float(dp(b))
        return cls(x, y, d0, d1, tag=tag, func=func, dfunc=df, d2func=d2f)

    @property
    def domain_length(self):
        return float(self.x[-1] - self.x[0])

    @property
    def periodic_compatible(self):
        t0 = _tangent_of_slope(self.dy_start)
        t1 = _tangent_of_slope(self.dy_end)
        return bool(np.max(np.abs(t0 - t1)) < TOL_DERIV)

    def c1_bound(self):
        """sup |f'| over a dense grid (the wedge-angle bound of the carve step)."""
        _, df, _ = self._evaluators()
        xs = _dense_grid(self.x, 8)
        return float(np.max(np.abs(df(xs))))

    def c2_bound(self):
        """max(sup|f|, sup|f'|, sup|f''|) over a dense grid."""
        f, df, d2f = self._evaluators()
        xs = _dense_grid(self.x, 8)
        vals = [np.max(np.abs(f(xs))), np.max(np.abs(df(xs)))]
        if d2f is not None:
            vals.append(np.max(np.abs(d2f(xs))))
        else:
            pch = PchipInterpolator(self.x, self.y)
            vals.append(np.max(np.abs(pch.derivative(2)(xs))))
        return float(max(vals))

    def _evaluators(self):
        if self.func is not None and self.dfunc is not None:
            f = _as_vectorized(self.func)
            df = _as_vectorized(self.dfunc)
            d2f = _as_vectorized(self.d2func) if self.d2func is not None else None
            return f, df, d2f
        pch = PchipInterpolator(self.x, self.y)
        return pch, pch.derivative(), None


def _vectorized(func):
    try:
        out = func(np.array([0.0, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def _as_vectorized(func):
    if _vectorized(func):
        return func
    return np.vectorize(func, otypes=[float])


def _dense_grid(x, factor):
    pieces = [np.linspace(x[i], x[i + 1], factor + 1)[:-1] for i in range(len(x) - 1)]
    return np.concatenate(pieces + [x[-1:]])


@dataclass(frozen=True)
class PlanarCurve:
    """Uniform-arclength sampled planar curve with signed curvature."""

    s: np.ndarray          # (n+1,) arclength grid
    points: np.ndarray     # (n+1, 2)
    tangents: np.ndarray   # (n+1, 2) unit tangents
    kappa: np.ndarray      # (n+1,) signed curvature
    knots: tuple = ()      # sample indices where curvature may jump
    source: Optional[FunctionSpec] = None
    regen: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("s", "points", "tangents", "kappa"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.s.size < 2:
            raise InvalidInput("curve needs at least 2 samples")
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        if np.any(seg == 0.0):
            raise DegenerateCurve("repeated points")

    @property
    def n_segments(self):
        return self.s.size - 1

    @property
    def ds(self):
        return float(self.s[1] - self.s[0])

    @property
    def length(self):
        return float(self.s[-1] - self.s[0])

    @property
    def translation(self):
        """v = endpoint - start point (the period translation of an extendable curve)."""
        return self.points[-1] - self.points[0]

    @property
    def periodic_compatible(self):
        return bool(np.max(np.abs(self.tangents[0] - self.tangents[-1])) < TOL_DERIV)

    def resample(self, n):
        if self.regen is None:
            raise InvalidInput("curve has no generator attached; cannot resample")
        return self.regen(n)

    def tangent_angles(self):
        return np.unwrap(np.arctan2(self.tangents[:, 1], self.tangents[:, 0]))

    def to_csv(self, path_or_buf):
        rows = ["s,x,y,kappa"]
        for i in range(self.s.size):
            rows.append("%.17g,%.17g,%.17g,%.17g" % (
                self.s[i], self.points[i, 0], self.points[i, 1], self.kappa[i]))
        data = "\n".join(rows) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(data)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(data)

    @classmethod
    def from_csv(cls, path_or_buf):
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf, "r", encoding="utf-8") as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "s,x,y,kappa":
            raise InvalidInput("expected header 's,x,y,kappa'")
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        s, x, y, kap = data[:, 0], data[:, 1], data[:, 2], data[:, 3]
        pts = np.column_stack([x, y])
        tan = _tangents_from_points(pts, s)
        return cls(s, pts, tan, kap)


def _tangents_from_points(pts, s):
    # 2nd-order finite differences; used only for curves loaded from CSV
    t = np.gradient(pts, s, axis=0)
    norms = np.linalg.norm(t, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateCurve("repeated points")
    return t / norms


def arclength_reparam(fspec: FunctionSpec, n: int) -> PlanarCurve:
    """Arclength parametrization of the graph of f, sampled at n segments.

    Cumulative arclength is accumulated with 5-point Gauss-Legendre panels
    on a dense x grid and inverted with a monotone cubic, so kinks of
    piecewise inputs cannot produce overshoot.
    """
    if n < 16:
        raise InvalidInput("need n >= 16 output segments")
    f, df, d2f = fspec._evaluators()
    x_dense = _dense_grid(fspec.x, max(2, int(np.ceil(4 * n / (fspec.x.size - 1)))))
    slopes = df(x_dense)
    if not np.all(np.isfinite(slopes)):
        raise NotFunctionLike("derivative not finite; input is not function-like")
    if np.max(np.abs(slopes)) > VERTICAL_GUARD:
        raise NotFunctionLike("vertical tangent detected")

    # cumulative arclength, one Gauss panel per dense interval
    a = x_dense[:-1]
    b = x_dense[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xs = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    sp = np.sqrt(1.0 + df(xs.ravel()) ** 2).reshape(xs.shape)
    panel = half * (sp @ _GL_WEIGHTS)
    s_dense = np.concatenate([[0.0], np.cumsum(panel)])
    ell = float(s_dense[-1])

    s_grid = np.linspace(0.0, ell, n + 1)
    inv = PchipInterpolator(s_dense, x_dense)
    x_s = inv(s_grid)
    x_s[0], x_s[-1] = x_dense[0], x_dense[-1]
    y_s = f(x_s)
    dy = df(x_s)
    speed = np.sqrt(1.0 + dy ** 2)
    tangents = np.column_stack([1.0 / speed, dy / speed])
    if d2f is not None:
        kap = d2f(x_s) / speed ** 3
    else:
        theta = np.unwrap(np.arctan2(tangents[:, 1], tangents[:, 0]))
        kap = _angle_derivative(theta, ell / n)
    pts = np.column_stack([x_s, y_s])
    return PlanarCurve(
        s_grid, pts, tangents, kap,
        knots=(0, n), source=fspec,
        regen=lambda m, _f=fspec: arclength_reparam(_f, m),
    )


def _angle_derivative(theta, ds, knots=()):
    """d(theta)/ds by central differences, one-sided at ends and knots."""
    n = theta.size
    kap = np.empty(n)
    kap[1:-1] = (theta[2:] - theta[:-2]) / (2.0 * ds)
    kap[0] = (-3.0 * theta[0] + 4.0 * theta[1] - theta[2]) / (2.0 * ds)
    kap[-1] = (3.0 * theta[-1] - 4.0 * theta[-2] + theta[-3]) / (2.0 * ds)
    for k in knots:
        # curvature may jump at a knot; the central stencil there would
        # straddle the jump, so use the one-sided right-hand value instead
        if 0 < k < n - 1 and k + 2 < n:
            kap[k] = (-3.0 * theta[k] + 4.0 * theta[k + 1] - theta[k + 2]) / (2.0 * ds)
    return kap


def signed_curvature(curve: PlanarCurve) -> np.ndarray:
    """Signed curvature estimate from the unit tangents (CCW positive)."""
    if curve.s.size < 3:
        raise DegenerateCurve("need at least 3 samples")
    theta = curve.tangent_angles()
    return _angle_derivative(theta, curve.ds, knots=curve.knots)


def periodic_extend(k: PlanarCurve, copies: int) -> PlanarCurve:
    """Concatenate ``copies`` translates of one period by v = k(end) - k(0)."""
    if copies < 1:
        raise InvalidInput("copies must be >= 1")
    if not k.periodic_compatible:
        raise NotC1Periodic(
            "seam tangents differ by %.3g (tol %.1g)"
            % (float(np.max(np.abs(k.tangents[0] - k.tangents[-1]))), TOL_DERIV))
    n = k.n_segments
    v = k.translation
    pts = [k.points]
    for j in range(1, copies):
        pts.append(k.points[1:] + j * v)
    points = np.vstack(pts)
    tangents = np.vstack([k.tangents] + [k.tangents[1:]] * (copies - 1))
    kappa = np.concatenate([k.kappa] + [k.kappa[1:]] * (copies - 1))
    s = np.arange(points.shape[0]) * k.ds
    seams = tuple(j * n for j in range(copies + 1))
    inner = tuple(j * n + kk for j in range(copies) for kk in k.knots if 0 < kk < n)
    return PlanarCurve(s, points, tangents, kappa,
                       knots=tuple(sorted(set(seams + inner))),
                       regen=lambda m, _k=k, _c=copies: periodic_extend(_k.resample(m // _c), _c))


# ---------------------------------------------------------------------------
# curve families used by the CLI and the verification corpus


def line_curve(length, n=1024):
    s = np.linspace(0.0, length, n + 1)
    pts = np.column_stack([s, np.zeros_like(s)])
    tan = np.tile([1.0, 0.0], (n + 1, 1))
    return PlanarCurve(s, pts, tan, np.zeros(n + 1), knots=(0, n),
                       regen=lambda m: line_curve(length, m))


def circle_curve(radius, n=2048, clockwise=False, turns=1.0):
    """Arclength-parametrized circle (one period = ``turns`` revolutions)."""
    total = 2.0 * math.pi * radius * turns
    s = np.linspace(0.0, total, n + 1)
    sign = -1.0 if clockwise else 1.0
    ang = sign * s / radius
    pts = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    tan = np.column_stack([-sign * np.sin(ang), sign * np.cos(ang)])
    kap = np.full(n + 1, sign / radius)
    return PlanarCurve(s, pts, tan, kap, knots=(0, n),
                       regen=lambda m: circle_curve(radius, m, clockwise, turns))


def arc_curve(radius, arc_length, n=2048, clockwise=True):
    """Arclength-parametrized circular arc starting at the top heading +x.

    With ``clockwise=True`` this is the curve of the graph of
    f(x) = sqrt(radius^2 - x^2): signed curvature -1/radius.
    """
    s = np.linspace(0.0, arc_length, n + 1)
    ang = s / radius
    if clockwise:
        pts = radius * np.column_stack([np.sin(ang), np.cos(ang)])
        tan = np.column_stack([np.cos(ang), -np.sin(ang)])
        kap = np.full(n + 1, -1.0 / radius)
    else:
        pts = radius * np.column_stack([np.sin(ang), -np.cos(ang)])
        tan = np.column_stack([np.cos(ang), np.sin(ang)])
        kap = np.full(n + 1, 1.0 / radius)
    return PlanarCurve(s, pts, tan, kap, knots=(0, n),
                       regen=lambda m: arc_curve(radius, arc_length, m, clockwise))


def semicircle_curve(rho=1.0, n=2048):
    return arc_curve(rho, math.pi * rho, n=n, clockwise=True)


def sine_arch_spec(amplitude, m=4097):
    """One smooth arch with zero end slopes: f(x) = A sin^2(pi x) on [0, 1].

    The canonical periodic-compatible corpus member: f'(0) = f'(1) = 0 and
    f'' matches at the seam, so the periodic extension is C^2.
    """
    a = float(amplitude)
    return FunctionSpec.from_callable(
        lambda x: a * np.sin(math.pi * x) ** 2, 0.0, 1.0, m=m,
        df=lambda x: a * math.pi * np.sin(2.0 * math.pi * x),
        d2f=lambda x: 2.0 * a * math.pi ** 2 * np.cos(2.0 * math.pi * x),
        tag=f"sine-arch:{a}",
    )


def sine_graph_spec(amplitude, cycles=1.0, m=4097):
    """f(x) = A sin(2 pi cycles x) on [0, 1] with analytic derivatives."""
    a, c = float(amplitude), float(cycles)
    w = 2.0 * math.pi * c
    return FunctionSpec.from_callable(
        lambda x: a * np.sin(w * x), 0.0, 1.0, m=m,
        df=lambda x: a * w * np.cos(w * x),
        d2f=lambda x: -a * w * w * np.sin(w * x),
        tag=f"sine:{a}x{c}",
    )


def semicircle_graph_spec(rho=1.0, m=4097):
    """Graph samples of f(x) = sqrt(rho^2 - x^2); near-vertical at the ends."""
    r = float(rho)
    x = np.linspace(-r, r, m)
    y = np.sqrt(np.maximum(r * r - x * x, 0.0))
    return FunctionSpec.from_samples(x, y, tag=f"semicircle:{r}")


def random_c2_spec(rng, n_modes=4, amplitude=0.15, m=2049):
    """Random smooth graph via a short sine series (f(0) = f(1) = 0)."""
    coeff = rng.normal(0.0, 1.0, n_modes) / (1.0 + np.arange(n_modes)) ** 2
    coeff *= amplitude / max(1e-12, np.sum(np.abs(coeff)))
    ks = np.arange(1, n_modes + 1) * math.pi

    def f(x):
        return sum(c * np.sin(k * x) for c, k in zip(coeff, ks))

    def df(x):
        return sum(c * k * np.cos(k * x) for c, k in zip(coeff, ks))

    def d2f(x):
        return sum(-c * k * k * np.sin(k * x) for c, k in zip(coeff, ks))

    return FunctionSpec.from_callable(f, 0.0, 1.0, m=m, df=df, d2f=d2f, tag="random-c2")


def scaled_to_unit_length(fspec: FunctionSpec, n=2048):
    """Rescale a graph (domain and values jointly) so that the arclength
    of its curve equals exactly 1, and return the rescaled curve."""
    base = arclength_reparam(fspec, n)
    scale = 1.0 / base.length
    f, df, d2f = fspec._evaluators()
    a, b = fspec.x[0], fspec.x[-1]

    def f2(u):
        return scale * f(u / scale)

    def df2(u):
        return df(u / scale)

    d2f2 = (lambda u: d2f(u / scale) / scale) if d2f is not None else None
    spec2 = FunctionSpec.from_callable(
        f2, a * scale, b * scale, m=fspec.x.size, df=df2, d2f=d2f2, tag=fspec.tag)
    return arclength_reparam(spec2, n)
