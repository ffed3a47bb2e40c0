"""Brute-force reference integrals over the squared-gain axes (test-only)."""

import numpy as np

from fasris.bler import linearize_psi, linearize_secure, sinr_set
from fasris.channel import pdf_sq_gain, sq_gain_support


def riemann_grid(stats, n, tail=1e-12):
    lo, hi = sq_gain_support(stats, tail=tail)
    z = np.linspace(0.0, hi, n + 1)
    mid = 0.5 * (z[1:] + z[:-1])
    return mid, pdf_sq_gain(mid, stats) * (z[1] - z[0])


def surrogate_products(params, gains_C, gamma_EC):
    """Psi^, Phi^, Xi^ on the CU grid for each eavesdropper SINR (rows)."""
    s = sinr_set(gains_C, 0.0 * gains_C, params)
    psi = linearize_psi(params)(s.gamma_CE)
    sec = linearize_secure(np.atleast_1d(gamma_EC), params)
    bt = np.asarray(sec.alpha_th)[:, None]
    k = np.asarray(sec.kappa)[:, None]
    phi = np.clip(0.5 - k * (s.gamma_CC[None, :] - bt), 0.0, 1.0)
    xi = np.clip(0.5 - k * (s.gamma_CCE[None, :] - bt), 0.0, 1.0)
    return psi[None, :], phi, xi


def conditional_riemann(params, stats_C, gamma_EC, n=200_000):
    """(E[Phi^|g], E[Psi^ Phi^|g], E[Psi^ Xi^|g]) by a midpoint sum over |gamma_O^(C)|^2."""
    zc, wc = riemann_grid(stats_C, n)
    psi, phi, xi = surrogate_products(params, zc, gamma_EC)
    return float((phi @ wc)[0]), float(((psi * phi) @ wc)[0]), float(((psi * xi) @ wc)[0])


def double_riemann(params, stats_C, stats_E, n=2000):
    """2-D midpoint sums of the three surrogate expectations."""
    zc, wc = riemann_grid(stats_C, n)
    ze, we = riemann_grid(stats_E, n)
    gec = sinr_set(0.0 * ze, ze, params).gamma_EC
    psi, phi, xi = surrogate_products(params, zc, gec)
    return float(we @ phi @ wc), float(we @ (psi * phi) @ wc), float(we @ (psi * xi) @ wc)


def close(got, ref, rel, floor=1e-8):
    """Relative agreement, with an absolute floor for components that are numerically zero."""
    return abs(got - ref) <= max(rel * abs(ref), floor)
