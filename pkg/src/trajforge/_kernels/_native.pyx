# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled integration kernels.  Math mirrors _pure.py exactly."""

from libc.math cimport sqrt, sin, cos, fabs

import numpy as np

BACKEND = "native"


cdef inline double _kappa_eval(double[::1] kap, Py_ssize_t i, double u,
                               Py_ssize_t nseg) nogil:
    cdef Py_ssize_t base
    cdef double x, n0, n1, n2, n3, w0, w1, w2, w3
    if nseg < 3:
        return kap[i] * (1.0 - u) + kap[i + 1] * u
    if i == 0:
        base = 0
        x = u
    elif i >= nseg - 1:
        base = nseg - 3
        x = u + (i - (nseg - 3))
    else:
        base = i - 1
        x = u + 1.0
    n0 = kap[base]
    n1 = kap[base + 1]
    n2 = kap[base + 2]
    n3 = kap[base + 3]
    w0 = (x - 1.0) * (x - 2.0) * (x - 3.0) / -6.0
    w1 = x * (x - 2.0) * (x - 3.0) / 2.0
    w2 = x * (x - 1.0) * (x - 3.0) / -2.0
    w3 = x * (x - 1.0) * (x - 2.0) / 6.0
    return w0 * n0 + w1 * n1 + w2 * n2 + w3 * n3


def lift_rk4(kappa, double ds, double r, int substeps=1):
    kap_arr = np.ascontiguousarray(kappa, dtype=np.float64)
    cdef double[::1] kap = kap_arr
    cdef Py_ssize_t nseg = kap.shape[0] - 1
    out_x_arr = np.empty((nseg + 1, 3))
    out_t_arr = np.empty((nseg + 1, 3))
    cdef double[:, ::1] out_x = out_x_arr
    cdef double[:, ::1] out_t = out_t_arr
    cdef double inv_r = 1.0 / r
    cdef double inv_r2 = inv_r * inv_r
    cdef double h = ds / substeps

    cdef double x0 = r, x1 = 0.0, x2 = 0.0
    cdef double t0 = 0.0, t1 = 1.0, t2 = 0.0
    cdef double c0, c1, c2, k_a, k_m, k_b, u0, um, u1
    cdef double ax1, ay1, az1, bx1, by1, bz1
    cdef double ax2, ay2, az2, bx2, by2, bz2
    cdef double ax3, ay3, az3, bx3, by3, bz3
    cdef double ax4, ay4, az4, bx4, by4, bz4
    cdef double px, py, pz, qx, qy, qz, scale, dot, tn
    cdef Py_ssize_t i, j

    out_x[0, 0] = x0; out_x[0, 1] = x1; out_x[0, 2] = x2
    out_t[0, 0] = t0; out_t[0, 1] = t1; out_t[0, 2] = t2

    with nogil:
        for i in range(nseg):
            for j in range(substeps):
                u0 = (<double> j) / substeps
                um = (j + 0.5) / substeps
                u1 = (j + 1.0) / substeps
                k_a = _kappa_eval(kap, i, u0, nseg)
                k_m = _kappa_eval(kap, i, um, nseg)
                k_b = _kappa_eval(kap, i, u1, nseg)

                c0 = (x1 * t2 - x2 * t1) * inv_r
                c1 = (x2 * t0 - x0 * t2) * inv_r
                c2 = (x0 * t1 - x1 * t0) * inv_r
                ax1 = t0; ay1 = t1; az1 = t2
                bx1 = k_a * c0 - x0 * inv_r2
                by1 = k_a * c1 - x1 * inv_r2
                bz1 = k_a * c2 - x2 * inv_r2

                px = x0 + 0.5 * h * ax1
                py = x1 + 0.5 * h * ay1
                pz = x2 + 0.5 * h * az1
                qx = t0 + 0.5 * h * bx1
                qy = t1 + 0.5 * h * by1
                qz = t2 + 0.5 * h * bz1
                c0 = (py * qz - pz * qy) * inv_r
                c1 = (pz * qx - px * qz) * inv_r
                c2 = (px * qy - py * qx) * inv_r
                ax2 = qx; ay2 = qy; az2 = qz
                bx2 = k_m * c0 - px * inv_r2
                by2 = k_m * c1 - py * inv_r2
                bz2 = k_m * c2 - pz * inv_r2

                px = x0 + 0.5 * h * ax2
                py = x1 + 0.5 * h * ay2
                pz = x2 + 0.5 * h * az2
                qx = t0 + 0.5 * h * bx2
                qy = t1 + 0.5 * h * by2
                qz = t2 + 0.5 * h * bz2
                c0 = (py * qz - pz * qy) * inv_r
                c1 = (pz * qx - px * qz) * inv_r
                c2 = (px * qy - py * qx) * inv_r
                ax3 = qx; ay3 = qy; az3 = qz
                bx3 = k_m * c0 - px * inv_r2
                by3 = k_m * c1 - py * inv_r2
                bz3 = k_m * c2 - pz * inv_r2

                px = x0 + h * ax3
                py = x1 + h * ay3
                pz = x2 + h * az3
                qx = t0 + h * bx3
                qy = t1 + h * by3
                qz = t2 + h * bz3
                c0 = (py * qz - pz * qy) * inv_r
                c1 = (pz * qx - px * qz) * inv_r
                c2 = (px * qy - py * qx) * inv_r
                ax4 = qx; ay4 = qy; az4 = qz
                bx4 = k_b * c0 - px * inv_r2
                by4 = k_b * c1 - py * inv_r2
                bz4 = k_b * c2 - pz * inv_r2

                x0 += h * (ax1 + 2.0 * (ax2 + ax3) + ax4) / 6.0
                x1 += h * (ay1 + 2.0 * (ay2 + ay3) + ay4) / 6.0
                x2 += h * (az1 + 2.0 * (az2 + az3) + az4) / 6.0
                t0 += h * (bx1 + 2.0 * (bx2 + bx3) + bx4) / 6.0
                t1 += h * (by1 + 2.0 * (by2 + by3) + by4) / 6.0
                t2 += h * (bz1 + 2.0 * (bz2 + bz3) + bz4) / 6.0

                scale = r / sqrt(x0 * x0 + x1 * x1 + x2 * x2)
                x0 *= scale; x1 *= scale; x2 *= scale
                dot = (t0 * x0 + t1 * x1 + t2 * x2) * inv_r2
                t0 -= dot * x0
                t1 -= dot * x1
                t2 -= dot * x2
                tn = 1.0 / sqrt(t0 * t0 + t1 * t1 + t2 * t2)
                t0 *= tn; t1 *= tn; t2 *= tn
            out_x[i + 1, 0] = x0; out_x[i + 1, 1] = x1; out_x[i + 1, 2] = x2
            out_t[i + 1, 0] = t0; out_t[i + 1, 1] = t1; out_t[i + 1, 2] = t2
    return out_x_arr, out_t_arr


def parageodesic_rk4(kappa, double dt, double theta0, double dtheta0,
                     double dphi0, double pole_tol=1e-8):
    kap_arr = np.ascontiguousarray(kappa, dtype=np.float64)
    cdef double[::1] kap = kap_arr
    cdef Py_ssize_t nseg = kap.shape[0] - 1
    th_arr = np.empty(nseg + 1)
    ph_arr = np.empty(nseg + 1)
    dth_arr = np.empty(nseg + 1)
    dph_arr = np.empty(nseg + 1)
    cdef double[::1] th = th_arr
    cdef double[::1] ph = ph_arr
    cdef double[::1] dth = dth_arr
    cdef double[::1] dph = dph_arr

    cdef double a = theta0, b = 0.0, c = dtheta0, d = dphi0
    cdef double k_a, k_m, k_b, s, co
    cdef double f1t, f1p, f2t, f2p, f3t, f3p, f4t, f4p
    cdef double a2, b2, c2, d2, a3, c3, d3, a4, c4, d4
    cdef Py_ssize_t i, fail = -1

    th[0] = a; ph[0] = b; dth[0] = c; dph[0] = d

    with nogil:
        for i in range(nseg):
            if fabs(sin(a)) < pole_tol:
                fail = i
                break
            k_a = kap[i]
            k_m = _kappa_eval(kap, i, 0.5, nseg)
            k_b = kap[i + 1]

            s = sin(a); co = cos(a)
            f1t = s * co * d * d - k_a * s * d
            f1p = -2.0 * (co / s) * c * d + k_a * c / s

            a2 = a + 0.5 * dt * c
            c2 = c + 0.5 * dt * f1t
            d2 = d + 0.5 * dt * f1p
            b2 = b + 0.5 * dt * d
            s = sin(a2); co = cos(a2)
            if fabs(s) < pole_tol:
                fail = i
                break
            f2t = s * co * d2 * d2 - k_m * s * d2
            f2p = -2.0 * (co / s) * c2 * d2 + k_m * c2 / s

            a3 = a + 0.5 * dt * c2
            c3 = c + 0.5 * dt * f2t
            d3 = d + 0.5 * dt * f2p
            s = sin(a3); co = cos(a3)
            if fabs(s) < pole_tol:
                fail = i
                break
            f3t = s * co * d3 * d3 - k_m * s * d3
            f3p = -2.0 * (co / s) * c3 * d3 + k_m * c3 / s

            a4 = a + dt * c3
            c4 = c + dt * f3t
            d4 = d + dt * f3p
            s = sin(a4); co = cos(a4)
            if fabs(s) < pole_tol:
                fail = i
                break
            f4t = s * co * d4 * d4 - k_b * s * d4
            f4p = -2.0 * (co / s) * c4 * d4 + k_b * c4 / s

            b += dt * (d + 2.0 * (d2 + d3) + d4) / 6.0
            a += dt * (c + 2.0 * (c2 + c3) + c4) / 6.0
            c += dt * (f1t + 2.0 * (f2t + f3t) + f4t) / 6.0
            d += dt * (f1p + 2.0 * (f2p + f3p) + f4p) / 6.0
            th[i + 1] = a; ph[i + 1] = b; dth[i + 1] = c; dph[i + 1] = d
    return th_arr, ph_arr, dth_arr, dph_arr, fail


cdef inline double _coef(double[::1] arr, Py_ssize_t npts, double ds_grid,
                         double period, double s) nogil:
    cdef double x = s % period
    if x < 0:
        x += period
    x /= ds_grid
    cdef Py_ssize_t i = <Py_ssize_t> x
    cdef double u = x - i
    cdef Py_ssize_t j = i + 1
    if j >= npts:
        j = 0
    return arr[i] * (1.0 - u) + arr[j] * u


cdef inline double _fres(bint use_tab, double f_const, double[::1] v_tab,
                         double[::1] f_tab, Py_ssize_t ntab, double v) nogil:
    cdef double av = fabs(v)
    cdef Py_ssize_t k
    cdef double u
    if not use_tab:
        return f_const
    if av <= v_tab[0]:
        return f_tab[0]
    if av >= v_tab[ntab - 1]:
        return f_tab[ntab - 1]
    k = 0
    while k + 1 < ntab and v_tab[k + 1] < av:
        k += 1
    u = (av - v_tab[k]) / (v_tab[k + 1] - v_tab[k])
    return f_tab[k] * (1.0 - u) + f_tab[k + 1] * u


def roll_rk4(force, me, mep, double ds_grid, double period, double s0,
             double v0, double dt, Py_ssize_t n_steps, double f_const,
             v_tab=None, f_tab=None):
    frc_arr = np.ascontiguousarray(force, dtype=np.float64)
    mea_arr = np.ascontiguousarray(me, dtype=np.float64)
    mpa_arr = np.ascontiguousarray(mep, dtype=np.float64)
    cdef double[::1] frc = frc_arr
    cdef double[::1] mea = mea_arr
    cdef double[::1] mpa = mpa_arr
    cdef Py_ssize_t npts = frc.shape[0]

    cdef bint use_tab = v_tab is not None
    cdef double[::1] vt
    cdef double[::1] ft
    cdef Py_ssize_t ntab = 0
    if use_tab:
        vt_arr = np.ascontiguousarray(v_tab, dtype=np.float64)
        ft_arr = np.ascontiguousarray(f_tab, dtype=np.float64)
        vt = vt_arr
        ft = ft_arr
        ntab = vt.shape[0]
    else:
        vt_arr = np.zeros(1)
        ft_arr = np.zeros(1)
        vt = vt_arr
        ft = ft_arr

    s_out_arr = np.empty(n_steps + 1)
    v_out_arr = np.empty(n_steps + 1)
    cdef double[::1] s_out = s_out_arr
    cdef double[::1] v_out = v_out_arr

    cdef double s = s0, v = v0
    cdef double a1, a2, a3, a4, s2, v2, s3, v3, s4, v4, sgn
    cdef Py_ssize_t i, stall = -1

    s_out[0] = s; v_out[0] = v

    with nogil:
        for i in range(n_steps):
            sgn = 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)
            a1 = (-_coef(frc, npts, ds_grid, period, s)
                  - 0.5 * _coef(mpa, npts, ds_grid, period, s) * v * v
                  - _fres(use_tab, f_const, vt, ft, ntab, v) * sgn) \
                 / _coef(mea, npts, ds_grid, period, s)
            s2 = s + 0.5 * dt * v
            v2 = v + 0.5 * dt * a1
            sgn = 1.0 if v2 > 0 else (-1.0 if v2 < 0 else 0.0)
            a2 = (-_coef(frc, npts, ds_grid, period, s2)
                  - 0.5 * _coef(mpa, npts, ds_grid, period, s2) * v2 * v2
                  - _fres(use_tab, f_const, vt, ft, ntab, v2) * sgn) \
                 / _coef(mea, npts, ds_grid, period, s2)
            s3 = s + 0.5 * dt * v2
            v3 = v + 0.5 * dt * a2
            sgn = 1.0 if v3 > 0 else (-1.0 if v3 < 0 else 0.0)
            a3 = (-_coef(frc, npts, ds_grid, period, s3)
                  - 0.5 * _coef(mpa, npts, ds_grid, period, s3) * v3 * v3
                  - _fres(use_tab, f_const, vt, ft, ntab, v3) * sgn) \
                 / _coef(mea, npts, ds_grid, period, s3)
            s4 = s + dt * v3
            v4 = v + dt * a3
            sgn = 1.0 if v4 > 0 else (-1.0 if v4 < 0 else 0.0)
            a4 = (-_coef(frc, npts, ds_grid, period, s4)
                  - 0.5 * _coef(mpa, npts, ds_grid, period, s4) * v4 * v4
                  - _fres(use_tab, f_const, vt, ft, ntab, v4) * sgn) \
                 / _coef(mea, npts, ds_grid, period, s4)
            s += dt * (v + 2.0 * (v2 + v3) + v4) / 6.0
            v += dt * (a1 + 2.0 * (a2 + a3) + a4) / 6.0
            if v <= 0.0:
                if -_coef(frc, npts, ds_grid, period, s) \
                        - _fres(use_tab, f_const, vt, ft, ntab, 0.0) > 0.0:
                    v = 0.0
                else:
                    s_out[i + 1] = s
                    v_out[i + 1] = v
                    stall = i + 1
                    break
            s_out[i + 1] = s
            v_out[i + 1] = v
    return s_out_arr, v_out_arr, stall
