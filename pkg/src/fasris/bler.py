"""
Finite-blocklength BLER with hardware impairments
=================================================

Instantaneous SINR maps of the SIC receiver at the CU and of the eavesdropping
EU, the normal-approximation BLERs

  Psi  - CU fails to decode the EU message x_E
  Phi  - CU fails to decode x_C securely after SIC
  Xi   - CU fails to decode x_C securely with x_E still present

their piecewise-linear surrogates, and the SIC-propagated secure BLER
eps = 1 - [(1-Psi)(1-Phi) + Psi(1-Xi)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import q_func
from .params import SystemParams

__all__ = [
    "LOG2E_SQ",
    "SinrSet",
    "PiecewiseBler",
    "sinr_set",
    "dispersion",
    "bler_psi_exact",
    "beta_tilde",
    "bler_phi_exact",
    "bler_xi_exact",
    "linearize_psi",
    "linearize_secure",
    "secure_bler_instantaneous",
]

LOG2E_SQ = math.log2(math.e) ** 2


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


# ============================================================================
#  SINRs
# ============================================================================

@dataclass(frozen=True)
class SinrSet:
    """The five SINRs produced by one pair of squared selected-port gains."""

    gamma_CE: float | np.ndarray
    gamma_CC: float | np.ndarray
    gamma_CCE: float | np.ndarray
    gamma_EE: float | np.ndarray
    gamma_EC: float | np.ndarray
    gain_sq_C: float | np.ndarray
    gain_sq_E: float | np.ndarray


def _sinr(signal, interference, x, sigma2):
    return signal * x / (interference * x + sigma2)


def sinr_set(gain_sq_C, gain_sq_E, params: SystemParams) -> SinrSet:
    """SINRs for squared selected-port amplitudes |gamma_O^(C)|^2, |gamma_O^(E)|^2."""
    gC = np.asarray(gain_sq_C, dtype=float)
    gE = np.asarray(gain_sq_E, dtype=float)
    xC = params.gain_scale_C * gC
    xE = params.gain_scale_E * gE
    s2 = params.sigma2
    return SinrSet(
        gamma_CE=_out(_sinr(params.a_E, params.a_C + params.rho2_C, xC, s2)),
        gamma_CC=_out(_sinr(params.a_C, params.c_cc, xC, s2)),
        gamma_CCE=_out(_sinr(params.a_C, params.a_E + params.rho2_C, xC, s2)),
        gamma_EE=_out(_sinr(params.a_E, params.a_C + params.rho2_E, xE, s2)),
        gamma_EC=_out(_sinr(params.a_C, params.rho2_E, xE, s2)),
        gain_sq_C=_out(gC),
        gain_sq_E=_out(gE),
    )


def gamma_ec_of_gain(gain_sq_E, params: SystemParams):
    return _out(_sinr(params.a_C, params.rho2_E, params.gain_scale_E * np.asarray(gain_sq_E, dtype=float), params.sigma2))


# ============================================================================
#  Exact normal-approximation BLERs
# ============================================================================

def dispersion(gamma):
    """Channel dispersion V(gamma) = (log2 e)^2 (1 - (1+gamma)^-2)."""
    g = np.asarray(gamma, dtype=float)
    return _out(LOG2E_SQ * (1.0 - (1.0 + g) ** -2))


def bler_psi_exact(gamma_CE, params: SystemParams):
    """Q((log2(1+g) - N_e/m) / sqrt(V(g)/m)), with value 1 at g = 0."""
    g = np.asarray(gamma_CE, dtype=float)
    m = params.m_block
    pos = g > 0
    gs = np.where(pos, g, 1.0)
    arg = (np.log2(1.0 + gs) - params.N_e / m) / np.sqrt(dispersion(gs) / m)
    return _out(np.where(pos, q_func(arg), 1.0))


def beta_tilde(gamma_EC, params: SystemParams):
    """Secure decoding threshold on the CU SINR given the eavesdropper SINR.

    (1 + g) 2^(mu sqrt(V(g)/m) + N_c/m) - 1; strictly increasing in g for mu >= 0.
    """
    g = np.asarray(gamma_EC, dtype=float)
    m = params.m_block
    expo = params.mu * np.sqrt(dispersion(g)) / math.sqrt(m) + params.N_c / m
    return _out((1.0 + g) * np.exp2(expo) - 1.0)


def _secure_exact(gamma, gamma_EC, params: SystemParams):
    g = np.asarray(gamma, dtype=float)
    ge = np.asarray(gamma_EC, dtype=float)
    m = params.m_block
    win = g > ge
    gs = np.where(win, g, ge + 1.0)
    arg = (math.sqrt(m) / np.sqrt(dispersion(gs))) * (
        np.log2((1.0 + gs) / (1.0 + ge))
        - params.mu * np.sqrt(dispersion(ge)) / math.sqrt(m)
        - params.N_c / m
    )
    return _out(np.where(win, q_func(arg), 1.0))


def bler_phi_exact(gamma_CC, gamma_EC, params: SystemParams):
    """Secure BLER of x_C after SIC; 1 whenever gamma_CC <= gamma_EC."""
    return _secure_exact(gamma_CC, gamma_EC, params)


def bler_xi_exact(gamma_CCE, gamma_EC, params: SystemParams):
    """Secure BLER of x_C decoded with x_E as interference."""
    return _secure_exact(gamma_CCE, gamma_EC, params)


# ============================================================================
#  Piecewise-linear surrogates
# ============================================================================

@dataclass(frozen=True)
class PiecewiseBler:
    """1 below alpha_low, 0 above alpha_up, 1/2 - kappa (x - alpha_th) between."""

    alpha_th: float | np.ndarray
    kappa: float | np.ndarray

    @property
    def alpha_low(self):
        return self.alpha_th - 0.5 / self.kappa

    @property
    def alpha_up(self):
        return self.alpha_th + 0.5 / self.kappa

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ramp = np.clip(0.5 - self.kappa * (x - self.alpha_th), 0.0, 1.0)
        # pin the corners so rounding in alpha_low / alpha_up cannot leak through
        return _out(np.where(x <= self.alpha_low, 1.0, np.where(x >= self.alpha_up, 0.0, ramp)))


def linearize_psi(params: SystemParams) -> PiecewiseBler:
    """Psi surrogate: threshold beta = 2^(N_e/m) - 1, slope k = (2 pi (2^(2N_e/m) - 1)/m)^-1/2."""
    m = params.m_block
    beta = 2.0 ** (params.N_e / m) - 1.0
    k = (2.0 * math.pi * (2.0 ** (2.0 * params.N_e / m) - 1.0) / m) ** -0.5
    return PiecewiseBler(beta, k)


def secure_slope(bt, m):
    """k~ = sqrt(m) (2 pi bt (bt + 2))^-1/2 for threshold ``bt``."""
    bt = np.asarray(bt, dtype=float)
    return _out(math.sqrt(m) / np.sqrt(2.0 * math.pi * bt * (bt + 2.0)))


def linearize_secure(gamma_EC, params: SystemParams) -> PiecewiseBler:
    """Phi / Xi surrogate around beta~(gamma_EC) with slope k~."""
    bt = beta_tilde(gamma_EC, params)
    return PiecewiseBler(bt, secure_slope(bt, params.m_block))


# ============================================================================
#  Secure BLER with SIC error propagation
# ============================================================================

def secure_bler_instantaneous(gain_sq_C, gain_sq_E, params: SystemParams, use_linear: bool = False):
    s = sinr_set(gain_sq_C, gain_sq_E, params)
    if use_linear:
        psi = linearize_psi(params)(s.gamma_CE)
        sec = linearize_secure(s.gamma_EC, params)
        phi = sec(s.gamma_CC)
        xi = sec(s.gamma_CCE)
    else:
        psi = bler_psi_exact(s.gamma_CE, params)
        phi = bler_phi_exact(s.gamma_CC, s.gamma_EC, params)
        xi = bler_xi_exact(s.gamma_CCE, s.gamma_EC, params)
    psi, phi, xi = (np.asarray(v, dtype=float) for v in (psi, phi, xi))
    eps = 1.0 - ((1.0 - psi) * (1.0 - phi) + psi * (1.0 - xi))
    return _out(np.clip(eps, 0.0, 1.0))
