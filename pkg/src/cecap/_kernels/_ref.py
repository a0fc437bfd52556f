"""NumPy reference implementation of the hot numeric kernels.

All functions here operate on raw arrays; the public modules wrap them with
typed containers. `w_radial` always includes the dv = u du Jacobian of the
v = u^2/2 substitution, so a plain weighted sum over the (u, psi) tensor grid
integrates dv dpsi.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "mixture_log_pdf_grid",
    "entropy_profile",
    "grid_entropy",
    "sphere_log_pdf_2",
    "sphere_log_pdf_3",
]

_LN_FLOOR = 1e-300
_TWO_PI = 2.0 * np.pi


def mixture_log_pdf_grid(u, psi, thetas, probs, lam, radius):
    """Mixture output density and its log on the (u, psi) tensor grid.

    Returns (f, logf), each of shape (len(u), len(psi)). The density is
    f(v, psi) = sum_k p_k * Ktilde(v, psi, theta_k) with v = u^2/2; the log is
    floored at 1e-300 so tail nodes stay finite.
    """
    u = np.asarray(u, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    # exponent: base_k + u * coef_k(psi) - u^2/2, always <= 0
    base = -0.5 * (lam * lam - 1.0) * radius * radius * cos_t**2 - 0.5 * radius * radius
    coef = radius * (lam * np.outer(cos_t, np.cos(psi)) + np.outer(sin_t, np.sin(psi)))
    half_u2 = 0.5 * u * u
    f = np.zeros((u.size, psi.size))
    for k in range(len(probs)):
        f += probs[k] * np.exp(base[k] - half_u2[:, None] + u[:, None] * coef[k][None, :])
    f /= _TWO_PI
    return f, np.log(np.maximum(f, _LN_FLOOR))


def entropy_profile(u, w_radial, psi, w_psi, logf, thetas, lam, radius):
    """Marginal entropy density -int Ktilde(theta) log f at each theta.

    logf is the precomputed grid from mixture_log_pdf_grid; the kernel for each
    evaluation angle is recomputed on the fly.
    """
    u = np.asarray(u, dtype=np.float64)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    base = -0.5 * (lam * lam - 1.0) * radius * radius * cos_t**2 - 0.5 * radius * radius
    coef = radius * (lam * np.outer(cos_t, np.cos(psi)) + np.outer(sin_t, np.sin(psi)))
    half_u2 = 0.5 * u * u
    weighted_logf = (w_radial[:, None] * w_psi[None, :]) * logf
    out = np.empty(thetas.size)
    for k in range(thetas.size):
        kern = np.exp(base[k] - half_u2[:, None] + u[:, None] * coef[k][None, :])
        out[k] = -np.sum(kern * weighted_logf) / _TWO_PI
    return out


def grid_entropy(w_radial, w_psi, f, logf):
    """Output entropy -int f log f over the tensor grid."""
    return float(-np.sum((w_radial[:, None] * w_psi[None, :]) * f * logf))


def sphere_log_pdf_2(y1, y2, s1, s2, radius, n_theta):
    """log f_Y at sample points for X uniform on the radius-R circle, n=2.

    f_Y(y) = (1/2pi) E_theta[ N(y; (s1 R cos theta, s2 R sin theta), I) ] with
    theta uniform; the angular average uses an n_theta-point periodic rule with
    a log-sum-exp stabilized accumulation.
    """
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    a = s1 * radius * np.cos(theta)
    b = s2 * radius * np.sin(theta)
    c = -0.5 * (a * a + b * b)
    out = np.empty(y1.size)
    chunk = max(1, int(4e6) // n_theta)
    for lo in range(0, y1.size, chunk):
        hi = min(lo + chunk, y1.size)
        e = y1[lo:hi, None] * a[None, :] + y2[lo:hi, None] * b[None, :] + c[None, :]
        m = e.max(axis=1)
        mean = np.exp(e - m[:, None]).mean(axis=1)
        out[lo:hi] = m + np.log(mean)
    return out - np.log(_TWO_PI) - 0.5 * (y1 * y1 + y2 * y2)


def sphere_log_pdf_3(y, svals, radius, mu_nodes, mu_weights, n_beta):
    """log f_Y at sample points for X uniform on the radius-R sphere, n=3.

    The spherical average uses Gauss-Legendre nodes in mu = cos(polar angle)
    (weights given on [-1, 1]) crossed with an n_beta-point periodic rule in
    the azimuth.
    """
    y = np.asarray(y, dtype=np.float64)
    beta = 2.0 * np.pi * np.arange(n_beta) / n_beta
    sin_a = np.sqrt(np.maximum(0.0, 1.0 - mu_nodes**2))
    # unit sphere points, flattened (n_mu * n_beta,)
    ux = np.outer(sin_a, np.cos(beta)).ravel()
    uy = np.outer(sin_a, np.sin(beta)).ravel()
    uz = np.outer(mu_nodes, np.ones_like(beta)).ravel()
    a1 = svals[0] * radius * ux
    a2 = svals[1] * radius * uy
    a3 = svals[2] * radius * uz
    c = -0.5 * (a1 * a1 + a2 * a2 + a3 * a3)
    w = np.outer(mu_weights, np.ones_like(beta)).ravel() / (2.0 * n_beta)
    out = np.empty(y.shape[0])
    chunk = max(1, int(4e6) // ux.size)
    for lo in range(0, y.shape[0], chunk):
        hi = min(lo + chunk, y.shape[0])
        e = (
            y[lo:hi, 0:1] * a1[None, :]
            + y[lo:hi, 1:2] * a2[None, :]
            + y[lo:hi, 2:3] * a3[None, :]
            + c[None, :]
        )
        m = e.max(axis=1)
        avg = (np.exp(e - m[:, None]) * w[None, :]).sum(axis=1)
        out[lo:hi] = m + np.log(avg)
    return out - 1.5 * np.log(_TWO_PI) - 0.5 * np.sum(y * y, axis=1)
