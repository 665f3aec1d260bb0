"""Pure-Python reference implementations of the integration kernels.

These mirror the compiled versions in ``_native.pyx`` step for step; the
backend is chosen in ``__init__``.  All three integrators are classical
fixed-step RK4 with scalar inner loops.  Curvature/coefficient samples are
interpolated inside a grid interval with a 4-point Lagrange cubic so the
overall scheme stays 4th order for smooth data.
"""

import math

import numpy as np

BACKEND = "pure"


def _kappa_weights(u):
    # interior stencil at local nodes (-1, 0, 1, 2), target offset u in [0, 1]
    return (
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u * u - 1.0) * (u - 2.0) / 2.0,
        -u * (u + 1.0) * (u - 2.0) / 2.0,
        u * (u * u - 1.0) / 6.0,
    )


def _kappa_eval(kap, i, u, nseg):
    """Cubic interpolation of the sample array ``kap`` at offset u in interval i."""
    if nseg < 3:
        return kap[i] * (1.0 - u) + kap[i + 1] * u
    if i == 0:
        base, x = 0, u
    elif i >= nseg - 1:
        base, x = nseg - 3, u + (i - (nseg - 3))
    else:
        base, x = i - 1, u + 1.0
        # local nodes 0..3, target x in [1, 2] for interior
    n0, n1, n2, n3 = kap[base], kap[base + 1], kap[base + 2], kap[base + 3]
    w0 = (x - 1.0) * (x - 2.0) * (x - 3.0) / -6.0
    w1 = x * (x - 2.0) * (x - 3.0) / 2.0
    w2 = x * (x - 1.0) * (x - 3.0) / -2.0
    w3 = x * (x - 1.0) * (x - 2.0) / 6.0
    return w0 * n0 + w1 * n1 + w2 * n2 + w3 * n3


def lift_rk4(kappa, ds, r, substeps=1):
    """Integrate the sphere-rolling trace for prescribed planar curvature.

    Solves x'' = kappa(s) * (x cross x') / r - x / r^2 on the sphere of
    radius ``r`` from x(0) = (r,0,0), x'(0) = (0,1,0), with per-step
    projection back onto {|x| = r, <x,x'> = 0, |x'| = 1}.

    Returns (points, tangents), each of shape (n+1, 3), sampled at the
    same arclength grid as ``kappa``.
    """
    kap = np.ascontiguousarray(kappa, dtype=np.float64)
    nseg = kap.shape[0] - 1
    out_x = np.empty((nseg + 1, 3))
    out_t = np.empty((nseg + 1, 3))
    inv_r = 1.0 / r
    inv_r2 = inv_r * inv_r

    x0, x1, x2 = r, 0.0, 0.0
    t0, t1, t2 = 0.0, 1.0, 0.0
    out_x[0] = (x0, x1, x2)
    out_t[0] = (t0, t1, t2)

    h = ds / substeps
    for i in range(nseg):
        for j in range(substeps):
            u0 = j / substeps
            um = (j + 0.5) / substeps
            u1 = (j + 1.0) / substeps
            k_a = _kappa_eval(kap, i, u0, nseg)
            k_m = _kappa_eval(kap, i, um, nseg)
            k_b = _kappa_eval(kap, i, u1, nseg)

            # k1
            c0 = (x1 * t2 - x2 * t1) * inv_r
            c1 = (x2 * t0 - x0 * t2) * inv_r
            c2 = (x0 * t1 - x1 * t0) * inv_r
            ax1, ay1, az1 = t0, t1, t2
            bx1 = k_a * c0 - x0 * inv_r2
            by1 = k_a * c1 - x1 * inv_r2
            bz1 = k_a * c2 - x2 * inv_r2
            # k2
            px = x0 + 0.5 * h * ax1
            py = x1 + 0.5 * h * ay1
            pz = x2 + 0.5 * h * az1
            qx = t0 + 0.5 * h * bx1
            qy = t1 + 0.5 * h * by1
            qz = t2 + 0.5 * h * bz1
            c0 = (py * qz - pz * qy) * inv_r
            c1 = (pz * qx - px * qz) * inv_r
            c2 = (px * qy - py * qx) * inv_r
            ax2, ay2, az2 = qx, qy, qz
            bx2 = k_m * c0 - px * inv_r2
            by2 = k_m * c1 - py * inv_r2
            bz2 = k_m * c2 - pz * inv_r2
            # k3
            px = x0 + 0.5 * h * ax2
            py = x1 + 0.5 * h * ay2
            pz = x2 + 0.5 * h * az2
            qx = t0 + 0.5 * h * bx2
            qy = t1 + 0.5 * h * by2
            qz = t2 + 0.5 * h * bz2
            c0 = (py * qz - pz * qy) * inv_r
            c1 = (pz * qx - px * qz) * inv_r
            c2 = (px * qy - py * qx) * inv_r
            ax3, ay3, az3 = qx, qy, qz
            bx3 = k_m * c0 - px * inv_r2
            by3 = k_m * c1 - py * inv_r2
            bz3 = k_m * c2 - pz * inv_r2
            # k4
            px = x0 + h * ax3
            py = x1 + h * ay3
            pz = x2 + h * az3
            qx = t0 + h * bx3
            qy = t1 + h * by3
            qz = t2 + h * bz3
            c0 = (py * qz - pz * qy) * inv_r
            c1 = (pz * qx - px * qz) * inv_r
            c2 = (px * qy - py * qx) * inv_r
            ax4, ay4, az4 = qx, qy, qz
            bx4 = k_b * c0 - px * inv_r2
            by4 = k_b * c1 - py * inv_r2
            bz4 = k_b * c2 - pz * inv_r2

            x0 += h * (ax1 + 2.0 * (ax2 + ax3) + ax4) / 6.0
            x1 += h * (ay1 + 2.0 * (ay2 + ay3) + ay4) / 6.0
            x2 += h * (az1 + 2.0 * (az2 + az3) + az4) / 6.0
            t0 += h * (bx1 + 2.0 * (bx2 + bx3) + bx4) / 6.0
            t1 += h * (by1 + 2.0 * (by2 + by3) + by4) / 6.0
            t2 += h * (bz1 + 2.0 * (bz2 + bz3) + bz4) / 6.0

            # project back onto the constraint manifold
            scale = r / math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
            x0 *= scale
            x1 *= scale
            x2 *= scale
            dot = (t0 * x0 + t1 * x1 + t2 * x2) * inv_r2
            t0 -= dot * x0
            t1 -= dot * x1
            t2 -= dot * x2
            tn = 1.0 / math.sqrt(t0 * t0 + t1 * t1 + t2 * t2)
            t0 *= tn
            t1 *= tn
            t2 *= tn
        out_x[i + 1] = (x0, x1, x2)
        out_t[i + 1] = (t0, t1, t2)
    return out_x, out_t


def parageodesic_rk4(kappa, dt, theta0, dtheta0, dphi0, pole_tol=1e-8):
    """Integrate a unit-sphere curve of prescribed geodesic curvature in
    spherical coordinates (theta = colatitude, phi = longitude).

        theta'' = sin(theta)cos(theta) phi'^2 - kappa sin(theta) phi'
        phi''   = -2 cot(theta) theta' phi' + kappa theta' / sin(theta)

    ``kappa`` is sampled uniformly in arclength (n+1 values for n steps of
    size ``dt``).  Returns (theta, phi, dtheta, dphi, fail_index) where
    fail_index is -1 on success or the step index at which sin(theta)
    dropped below ``pole_tol``.
    """
    kap = np.ascontiguousarray(kappa, dtype=np.float64)
    nseg = kap.shape[0] - 1
    th = np.empty(nseg + 1)
    ph = np.empty(nseg + 1)
    dth = np.empty(nseg + 1)
    dph = np.empty(nseg + 1)
    th[0], ph[0], dth[0], dph[0] = theta0, 0.0, dtheta0, dphi0

    a, b, c, d = theta0, 0.0, dtheta0, dphi0
    for i in range(nseg):
        if abs(math.sin(a)) < pole_tol:
            return th, ph, dth, dph, i
        k_a = kap[i]
        k_m = _kappa_eval(kap, i, 0.5, nseg)
        k_b = kap[i + 1]

        def rhs(thv, dthv, dphv, k):
            s = math.sin(thv)
            co = math.cos(thv)
            if abs(s) < pole_tol:
                raise ZeroDivisionError
            ddth = s * co * dphv * dphv - k * s * dphv
            ddph = -2.0 * (co / s) * dthv * dphv + k * dthv / s
            return ddth, ddph

        try:
            f1t, f1p = rhs(a, c, d, k_a)
            a2 = a + 0.5 * dt * c
            c2 = c + 0.5 * dt * f1t
            d2 = d + 0.5 * dt * f1p
            b2 = b + 0.5 * dt * d
            f2t, f2p = rhs(a2, c2, d2, k_m)
            a3 = a + 0.5 * dt * c2
            c3 = c + 0.5 * dt * f2t
            d3 = d + 0.5 * dt * f2p
            f3t, f3p = rhs(a3, c3, d3, k_m)
            a4 = a + dt * c3
            c4 = c + dt * f3t
            d4 = d + dt * f3p
            f4t, f4p = rhs(a4, c4, d4, k_b)
        except ZeroDivisionError:
            return th, ph, dth, dph, i

        b += dt * (d + 2.0 * (d2 + d3) + d4) / 6.0
        a += dt * (c + 2.0 * (c2 + c3) + c4) / 6.0
        cn = c + dt * (f1t + 2.0 * (f2t + f3t) + f4t) / 6.0
        dn = d + dt * (f1p + 2.0 * (f2p + f3p) + f4p) / 6.0
        c, d = cn, dn
        th[i + 1], ph[i + 1], dth[i + 1], dph[i + 1] = a, b, c, d
    return th, ph, dth, dph, -1


def roll_rk4(force, me, mep, ds_grid, period, s0, v0, dt, n_steps,
             f_const, v_tab=None, f_tab=None):
    """Integrate the 1-DoF groove-constrained rolling equation.

        s' = v
        v' = (-force(s) - 0.5 mep(s) v^2 - F_res(v) sgn(v)) / me(s)

    ``force``/``me``/``mep`` are sampled on a uniform s-grid of spacing
    ``ds_grid`` covering one period of length ``period`` (wrap-around
    linear interpolation).  Resistance is the constant ``f_const`` unless
    a (v_tab, f_tab) table is supplied.  Returns (s, v, stall_index);
    stall_index is -1 if the run completed.
    """
    frc = np.ascontiguousarray(force, dtype=np.float64)
    mea = np.ascontiguousarray(me, dtype=np.float64)
    mpa = np.ascontiguousarray(mep, dtype=np.float64)
    npts = frc.shape[0]
    use_tab = v_tab is not None
    if use_tab:
        v_tab = np.ascontiguousarray(v_tab, dtype=np.float64)
        f_tab = np.ascontiguousarray(f_tab, dtype=np.float64)

    s_out = np.empty(n_steps + 1)
    v_out = np.empty(n_steps + 1)
    s_out[0], v_out[0] = s0, v0

    def coef(arr, s):
        x = (s % period) / ds_grid
        i = int(x)
        u = x - i
        j = i + 1
        if j >= npts:
            j = 0
        return arr[i] * (1.0 - u) + arr[j] * u

    def fres(v):
        if not use_tab:
            return f_const
        av = abs(v)
        if av <= v_tab[0]:
            return f_tab[0]
        if av >= v_tab[-1]:
            return f_tab[-1]
        k = int(np.searchsorted(v_tab, av)) - 1
        u = (av - v_tab[k]) / (v_tab[k + 1] - v_tab[k])
        return f_tab[k] * (1.0 - u) + f_tab[k + 1] * u

    def acc(s, v):
        sgn = 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)
        return (-coef(frc, s) - 0.5 * coef(mpa, s) * v * v - fres(v) * sgn) / coef(mea, s)

    s, v = s0, v0
    for i in range(n_steps):
        a1 = acc(s, v)
        s2 = s + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        a2 = acc(s2, v2)
        s3 = s + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        a3 = acc(s3, v3)
        s4 = s + dt * v3
        v4 = v + dt * a3
        a4 = acc(s4, v4)
        s += dt * (v + 2.0 * (v2 + v3) + v4) / 6.0
        v += dt * (a1 + 2.0 * (a2 + a3) + a4) / 6.0
        if v <= 0.0:
            # restart only if net downhill force exceeds resistance at rest
            if -coef(frc, s) - fres(0.0) > 0.0:
                v = 0.0
            else:
                s_out[i + 1], v_out[i + 1] = s, v
                return s_out, v_out, i + 1
        s_out[i + 1], v_out[i + 1] = s, v
    return s_out, v_out, -1
