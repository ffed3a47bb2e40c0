"""System parameters of the FAS-RIS NOMA downlink."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .numerics import q_inv, sinc

__all__ = ["ParameterError", "SystemParams", "default_params"]


class ParameterError(ValueError):
    """A SystemParams field violates its invariant."""


@dataclass(frozen=True)
class SystemParams:
    """All physical and protocol parameters of the link.

    Powers are in mW, distances in metres, message sizes in bits and the
    blocklength in channel uses. ``b_quant=None`` means continuous RIS phases,
    ``rician_K=None`` means Rayleigh BS-RIS links (Monte Carlo only).
    """

    P: float = 100.0
    a_C: float = 0.2
    a_E: float = 0.8
    rho2_C: float = 0.05
    rho2_E: float = 0.05
    sigma2: float = 1e-3
    alpha: float = 2.0
    d_SR1: float = 20.0
    d_R1C: float = 10.0
    d_SR2: float = 40.0
    d_R2E: float = 20.0
    eps1_C: float = 0.5
    eps2_C: float = 0.5
    eps1_E: float = 0.5
    eps2_E: float = 0.05
    M: int = 20
    L: int = 5
    W: float = 5.0
    N_c: float = 300.0
    N_e: float = 150.0
    m_block: int = 200
    delta: float = 0.01
    zeta: float = 0.0
    b_quant: Optional[int] = None
    rician_K: Optional[float] = None

    def __post_init__(self):
        for name in ("P", "sigma2", "alpha", "d_SR1", "d_R1C", "d_SR2", "d_R2E",
                     "eps1_C", "eps2_C", "eps1_E", "eps2_E", "W", "N_c", "N_e"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
        if not (0.0 < self.a_C < self.a_E < 1.0):
            raise ParameterError(f"need 0 < a_C < a_E < 1, got a_C={self.a_C}, a_E={self.a_E}")
        if abs(self.a_C + self.a_E - 1.0) > 1e-9:
            raise ParameterError(f"a_C + a_E must equal 1, got {self.a_C + self.a_E}")
        for name in ("rho2_C", "rho2_E"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be >= 0, got {value!r}")
        # 0.5 is admitted: the mu = 0 limit used by the relaxed-security scenarios
        if not (0.0 < self.delta <= 0.5):
            raise ParameterError(f"delta must lie in (0, 0.5], got {self.delta}")
        if not (0.0 <= self.zeta <= 1.0):
            raise ParameterError(f"zeta must lie in [0, 1], got {self.zeta}")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"M must be a positive integer, got {self.M}")
        if int(self.L) != self.L or self.L < 1:
            raise ParameterError(f"L must be a positive integer, got {self.L}")
        if int(self.m_block) != self.m_block or self.m_block < 2:
            raise ParameterError(f"m_block must be an integer >= 2, got {self.m_block}")
        if self.b_quant is not None and (int(self.b_quant) != self.b_quant or self.b_quant < 1):
            raise ParameterError(f"b_quant must be an integer >= 1, got {self.b_quant}")
        if self.rician_K is not None and not (math.isfinite(self.rician_K) and self.rician_K >= 0):
            raise ParameterError(f"rician_K must be >= 0, got {self.rician_K}")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    # ------------------------------------------------------------------
    #  Derived quantities
    # ------------------------------------------------------------------

    @property
    def mu(self) -> float:
        """Leakage penalty Q^-1(delta)."""
        return 0.0 if self.delta == 0.5 else q_inv(self.delta)

    @property
    def kappa_b2(self) -> float:
        """Power loss sinc(pi/2^b)^2 from b-bit RIS phases (1 when continuous)."""
        if self.b_quant is None:
            return 1.0
        return float(sinc(math.pi / 2 ** self.b_quant)) ** 2

    @property
    def gain_scale_C(self) -> float:
        """Factor P (d_SR1 d_R1C)^-alpha kappa_b^2 multiplying |gamma_O^(C)|^2."""
        return self.P * (self.d_SR1 * self.d_R1C) ** (-self.alpha) * self.kappa_b2

    @property
    def gain_scale_E(self) -> float:
        return self.P * (self.d_SR2 * self.d_R2E) ** (-self.alpha) * self.kappa_b2

    @property
    def c_cc(self) -> float:
        """Distortion-plus-residual coefficient of the post-SIC CU link."""
        return self.zeta * self.a_E + self.rho2_C


def default_params(**overrides) -> SystemParams:
    """Numerical-results defaults (L=5, M=20, N_c=300, delta=0.01, P=100 mW)."""
    return SystemParams(**overrides)
