# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython leapfrog kernel for the power-family potential.

Same contract as latscat._flow_np.leapfrog_power; selected at import by
latscat.flow_kernels when compiled.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, pow, sin

cnp.import_array()


def leapfrog_power(x0, xi0, u0, double c, double mu, double h,
                   long n_steps, long rec_every):
    x_arr = np.array(x0, dtype=np.float64, order="C", copy=True)
    xi_arr = np.array(xi0, dtype=np.float64, order="C", copy=True)
    u_arr = np.array(u0, dtype=np.float64, order="C", copy=True)

    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] xi = xi_arr
    cdef double[::1] u = u_arr
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]

    if n_steps % rec_every != 0:
        raise ValueError("n_steps must be a multiple of rec_every")
    cdef Py_ssize_t n_rec = n_steps // rec_every + 1

    xs_arr = np.empty((n_rec, m, d))
    xis_arr = np.empty((n_rec, m, d))
    us_arr = np.empty((n_rec, m))
    es_arr = np.empty((n_rec, m))
    cdef double[:, :, ::1] xs = xs_arr
    cdef double[:, :, ::1] xis = xis_arr
    cdef double[:, ::1] us = us_arr
    cdef double[:, ::1] es = es_arr

    g_arr = np.empty((m, d))
    f_arr = np.empty(m)
    e0_arr = np.empty(m)
    cdef double[:, ::1] g = g_arr
    cdef double[::1] f = f_arr
    cdef double[::1] e0 = e0_arr

    cdef Py_ssize_t i, j, rec
    cdef long step
    cdef double r2, pref, vval, band, e, xg, f_new, drift, xih
    cdef double half_h = 0.5 * h
    cdef double max_drift = 0.0

    # initial force, energy, integrand, and record 0
    for i in range(m):
        r2 = 0.0
        band = 0.0
        xg = 0.0
        for j in range(d):
            r2 += x[i, j] * x[i, j]
            band -= cos(xi[i, j])
        vval = c * pow(1.0 + r2, -mu / 2.0)
        pref = -c * mu * pow(1.0 + r2, -(mu + 2.0) / 2.0)
        for j in range(d):
            g[i, j] = pref * x[i, j]
            xg += x[i, j] * g[i, j]
        e = band + vval
        e0[i] = e
        f[i] = e - xg
        es[0, i] = e
        us[0, i] = u[i]
        for j in range(d):
            xs[0, i, j] = x[i, j]
            xis[0, i, j] = xi[i, j]

    rec = 1
    for step in range(1, n_steps + 1):
        for i in range(m):
            r2 = 0.0
            for j in range(d):
                xih = xi[i, j] - half_h * g[i, j]
                xi[i, j] = xih
                x[i, j] += h * sin(xih)
                r2 += x[i, j] * x[i, j]
            vval = c * pow(1.0 + r2, -mu / 2.0)
            pref = -c * mu * pow(1.0 + r2, -(mu + 2.0) / 2.0)
            band = 0.0
            xg = 0.0
            for j in range(d):
                g[i, j] = pref * x[i, j]
                xg += x[i, j] * g[i, j]
                xi[i, j] -= half_h * g[i, j]
                band -= cos(xi[i, j])
            e = band + vval
            f_new = e - xg
            u[i] += half_h * (f[i] + f_new)
            f[i] = f_new
            drift = e - e0[i]
            if drift < 0.0:
                drift = -drift
            if drift > max_drift:
                max_drift = drift
            if step % rec_every == 0:
                es[rec, i] = e
                us[rec, i] = u[i]
                for j in range(d):
                    xs[rec, i, j] = x[i, j]
                    xis[rec, i, j] = xi[i, j]
        if step % rec_every == 0:
            rec += 1

    return xs_arr, xis_arr, us_arr, es_arr, max_drift
