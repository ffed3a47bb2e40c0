"""
Numerical primitives
====================

Gaussian tail function and its inverse, sinc, fixed-order Gauss-Chebyshev
quadrature, a stable quadratic solver and a monotone bisection root finder.
Everything here is pure and works on floats or numpy arrays where noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc, erfcinv

__all__ = [
    "NumericsError",
    "DomainError",
    "IntegrationError",
    "BracketError",
    "q_func",
    "q_inv",
    "sinc",
    "ChebyshevRule",
    "chebyshev_rule",
    "integrate_chebyshev",
    "solve_quadratic_increasing_roots",
    "bisect_monotone",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NumericsError(ArithmeticError):
    """Base class for numerical failures raised by this package."""


class DomainError(NumericsError, ValueError):
    """Argument outside the mathematical domain of a function."""


class IntegrationError(NumericsError):
    """Quadrature hit a non-finite integrand value."""

    def __init__(self, message: str, node: float):
        super().__init__(f"{message} (node x={node!r})")
        self.node = node


class BracketError(NumericsError, ValueError):
    """Root-finding bracket does not contain the target."""


# ============================================================================
#  Special functions
# ============================================================================

def q_func(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def q_inv(p):
    """Inverse of :func:`q_func` on (0, 1).

    Initial guess from erfc^-1, then one Newton step on Q(x) - p.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError(f"q_inv requires p in (0, 1), got {p!r}")
    x = _SQRT2 * erfcinv(2.0 * p_arr)
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    x = x + (q_func(x) - p_arr) / pdf
    return float(x) if np.ndim(x) == 0 else x


def sinc(x):
    """Unnormalised sinc, sin(x)/x, equal to 1 at x = 0."""
    # numpy's sinc is the normalised sin(pi x)/(pi x)
    return np.sinc(np.asarray(x, dtype=float) / math.pi)


# ============================================================================
#  Gauss-Chebyshev quadrature
# ============================================================================

@dataclass(frozen=True)
class ChebyshevRule:
    """Chebyshev nodes t_p = cos((2p-1)pi/(2U)) with weights (pi/U) sqrt(1-t_p^2).

    The weights fold in the sqrt(1-t^2) factor so that
    ``sum(weights * g(nodes))`` approximates the plain integral of g on [-1, 1].
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def chebyshev_rule(order: int) -> ChebyshevRule:
    if int(order) != order or order < 1:
        raise DomainError(f"quadrature order must be a positive integer, got {order!r}")
    order = int(order)
    p = np.arange(1, order + 1)
    nodes = np.cos((2 * p - 1) * math.pi / (2 * order))
    weights = (math.pi / order) * np.sqrt(1.0 - nodes * nodes)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return ChebyshevRule(order, nodes, weights)


def integrate_chebyshev(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rule: ChebyshevRule,
) -> float:
    """Integrate a vectorised ``f`` over [a, b] with a fixed Chebyshev rule."""
    if b < a:
        raise DomainError(f"integration bounds reversed: a={a!r} > b={b!r}")
    if a == b:
        return 0.0
    half = 0.5 * (b - a)
    x = half * rule.nodes + 0.5 * (a + b)
    fx = np.asarray(f(x), dtype=float)
    bad = ~np.isfinite(fx)
    if np.any(bad):
        raise IntegrationError("non-finite integrand", float(x[np.argmax(bad)]))
    return float(half * np.dot(rule.weights, fx))


# ============================================================================
#  Root finding
# ============================================================================

def solve_quadratic_increasing_roots(a2: float, a1: float, a0: float) -> list[float]:
    """Real roots of a2 r^2 + a1 r + a0 in ascending order.

    Uses the citardauq pairing to avoid cancellation; falls back to the
    linear root when a2 == 0.
    """
    if a2 == 0.0:
        if a1 == 0.0:
            raise DomainError("degenerate polynomial: a2 = a1 = 0")
        return [-a0 / a1]
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (a1 + math.copysign(sq, a1))
    if q == 0.0:
        # a1 == 0 and a0 == 0: double root at the origin
        return [0.0, 0.0]
    roots = sorted((q / a2, a0 / q))
    return roots


def bisect_monotone(
    g: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Solve g(y) = target for non-decreasing g on [lo, hi] by bisection."""
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo <= target <= g_hi):
        raise BracketError(
            f"target {target!r} not bracketed: g({lo!r})={g_lo!r}, g({hi!r})={g_hi!r}"
        )
    if g_lo == target:
        return lo
    if g_hi == target:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == target:
            return mid
        if g_mid < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)
