# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot numeric kernels.

Mirrors cecap._kernels._ref function for function; see that module for the
contracts. Selected automatically at import when the build succeeded.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, exp, log, sqrt

cnp.import_array()

__all__ = [
    "mixture_log_pdf_grid",
    "entropy_profile",
    "grid_entropy",
    "sphere_log_pdf_2",
    "sphere_log_pdf_3",
]

cdef double _LN_FLOOR = 1e-300
cdef double _TWO_PI = 2.0 * M_PI


def mixture_log_pdf_grid(u, psi, thetas, probs, double lam, double radius):
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] pp = np.ascontiguousarray(probs, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    base_np = -0.5 * (lam * lam - 1.0) * radius * radius * cos_t**2 - 0.5 * radius * radius
    coef_np = radius * (lam * np.outer(cos_t, np.cos(psi)) + np.outer(sin_t, np.sin(psi)))
    cdef const double[::1] base = np.ascontiguousarray(base_np)
    cdef const double[:, ::1] coef = np.ascontiguousarray(coef_np)
    cdef Py_ssize_t nu = uu.shape[0], npsi = coef.shape[1], natoms = pp.shape[0]
    f_np = np.zeros((nu, npsi))
    logf_np = np.empty((nu, npsi))
    cdef double[:, ::1] f = f_np
    cdef double[:, ::1] logf = logf_np
    cdef Py_ssize_t i, j, k
    cdef double ui, e0, pk, v
    with nogil:
        # atom-major accumulation keeps the inner loop contiguous in coef
        for k in range(natoms):
            pk = pp[k] / _TWO_PI
            for i in range(nu):
                ui = uu[i]
                e0 = base[k] - 0.5 * ui * ui
                for j in range(npsi):
                    f[i, j] += pk * exp(e0 + ui * coef[k, j])
        for i in range(nu):
            for j in range(npsi):
                v = f[i, j]
                if v < _LN_FLOOR:
                    v = _LN_FLOOR
                logf[i, j] = log(v)
    return f_np, logf_np


def entropy_profile(u, w_radial, psi, w_psi, logf, thetas, double lam, double radius):
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] wr = np.ascontiguousarray(w_radial, dtype=np.float64)
    cdef const double[::1] wp = np.ascontiguousarray(w_psi, dtype=np.float64)
    cdef const double[:, ::1] lf = np.ascontiguousarray(logf, dtype=np.float64)
    thetas_np = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    psi = np.asarray(psi, dtype=np.float64)
    cos_t = np.cos(thetas_np)
    sin_t = np.sin(thetas_np)
    base_np = -0.5 * (lam * lam - 1.0) * radius * radius * cos_t**2 - 0.5 * radius * radius
    coef_np = radius * (lam * np.outer(cos_t, np.cos(psi)) + np.outer(sin_t, np.sin(psi)))
    cdef const double[::1] base = np.ascontiguousarray(base_np)
    cdef const double[:, ::1] coef = np.ascontiguousarray(coef_np)
    cdef Py_ssize_t nt = base.shape[0], nu = uu.shape[0], npsi = wp.shape[0]
    out_np = np.empty(nt)
    cdef double[::1] out = out_np
    cdef Py_ssize_t k, i, j
    cdef double ui, e0, acc, row
    with nogil:
        for k in range(nt):
            acc = 0.0
            for i in range(nu):
                ui = uu[i]
                e0 = base[k] - 0.5 * ui * ui
                row = 0.0
                for j in range(npsi):
                    row += wp[j] * exp(e0 + ui * coef[k, j]) * lf[i, j]
                acc += wr[i] * row
            out[k] = -acc / _TWO_PI
    return out_np


def grid_entropy(w_radial, w_psi, f, logf):
    cdef const double[::1] wr = np.ascontiguousarray(w_radial, dtype=np.float64)
    cdef const double[::1] wp = np.ascontiguousarray(w_psi, dtype=np.float64)
    cdef const double[:, ::1] ff = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[:, ::1] lf = np.ascontiguousarray(logf, dtype=np.float64)
    cdef Py_ssize_t nu = wr.shape[0], npsi = wp.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    with nogil:
        for i in range(nu):
            row = 0.0
            for j in range(npsi):
                row += wp[j] * ff[i, j] * lf[i, j]
            acc += wr[i] * row
    return float(-acc)


def sphere_log_pdf_2(y1, y2, double s1, double s2, double radius, Py_ssize_t n_theta):
    cdef const double[::1] yy1 = np.ascontiguousarray(y1, dtype=np.float64)
    cdef const double[::1] yy2 = np.ascontiguousarray(y2, dtype=np.float64)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    a_np = s1 * radius * np.cos(theta)
    b_np = s2 * radius * np.sin(theta)
    cdef const double[::1] a = np.ascontiguousarray(a_np)
    cdef const double[::1] b = np.ascontiguousarray(b_np)
    cdef const double[::1] c = np.ascontiguousarray(-0.5 * (a_np * a_np + b_np * b_np))
    cdef Py_ssize_t n = yy1.shape[0]
    out_np = np.empty(n)
    cdef double[::1] out = out_np
    scratch_np = np.empty(n_theta)
    cdef double[::1] scratch = scratch_np
    cdef Py_ssize_t i, j
    cdef double m, s, e, ln2pi = log(_TWO_PI)
    with nogil:
        for i in range(n):
            m = -1e308
            for j in range(n_theta):
                e = yy1[i] * a[j] + yy2[i] * b[j] + c[j]
                scratch[j] = e
                if e > m:
                    m = e
            s = 0.0
            for j in range(n_theta):
                s += exp(scratch[j] - m)
            out[i] = m + log(s / n_theta) - ln2pi - 0.5 * (yy1[i] * yy1[i] + yy2[i] * yy2[i])
    return out_np


def sphere_log_pdf_3(y, svals, double radius, mu_nodes, mu_weights, Py_ssize_t n_beta):
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] yy = y
    beta = 2.0 * np.pi * np.arange(n_beta) / n_beta
    mu = np.asarray(mu_nodes, dtype=np.float64)
    sin_a = np.sqrt(np.maximum(0.0, 1.0 - mu**2))
    ux = np.outer(sin_a, np.cos(beta)).ravel()
    uy = np.outer(sin_a, np.sin(beta)).ravel()
    uz = np.outer(mu, np.ones_like(beta)).ravel()
    a1_np = svals[0] * radius * ux
    a2_np = svals[1] * radius * uy
    a3_np = svals[2] * radius * uz
    w_np = np.outer(np.asarray(mu_weights, dtype=np.float64), np.ones_like(beta)).ravel()
    w_np = w_np / (2.0 * n_beta)
    cdef const double[::1] a1 = np.ascontiguousarray(a1_np)
    cdef const double[::1] a2 = np.ascontiguousarray(a2_np)
    cdef const double[::1] a3 = np.ascontiguousarray(a3_np)
    cdef const double[::1] c = np.ascontiguousarray(
        -0.5 * (a1_np * a1_np + a2_np * a2_np + a3_np * a3_np)
    )
    cdef const double[::1] w = np.ascontiguousarray(w_np)
    cdef Py_ssize_t n = yy.shape[0], ng = a1.shape[0]
    out_np = np.empty(n)
    cdef double[::1] out = out_np
    scratch_np = np.empty(ng)
    cdef double[::1] scratch = scratch_np
    cdef Py_ssize_t i, j
    cdef double m, s, e, ln2pi = log(_TWO_PI)
    with nogil:
        for i in range(n):
            m = -1e308
            for j in range(ng):
                e = yy[i, 0] * a1[j] + yy[i, 1] * a2[j] + yy[i, 2] * a3[j] + c[j]
                scratch[j] = e
                if e > m:
                    m = e
            s = 0.0
            for j in range(ng):
                s += w[j] * exp(scratch[j] - m)
            out[i] = (
                m
                + log(s)
                - 1.5 * ln2pi
                - 0.5 * (yy[i, 0] * yy[i, 0] + yy[i, 1] * yy[i, 1] + yy[i, 2] * yy[i, 2])
            )
    return out_np
