"""
Analytical average secure BLER
==============================

E[eps] = E[Phi^] - E[Psi^ Phi^] + E[Psi^ Xi^], each term an expectation of the
piecewise-linear surrogates over the selected-port gains of the CU and the EU.

The inner (CU) expectations are split at the critical gains where a surrogate
changes segment. The outer (EU) integral is split into panels at the critical
points where the ordering of those gains changes; each panel uses a fixed
Gauss-Chebyshev rule and every node is classified on its own, so a panel
boundary that is slightly off costs accuracy but never mislabels a node.

All gain integrals are carried out over the amplitude gamma_O rather than
|gamma_O|^2 (the change of variables z = a^2 is exact); the amplitude law is
close to Gaussian, which keeps a fixed-order rule accurate over the whole
support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bler import (
    beta_tilde,
    linearize_psi,
    secure_slope,
    _secure_exact,
    bler_psi_exact,
)
from .channel import (
    DEFAULT_BCA_MU,
    DEFAULT_CDF_ORDER,
    CltStats,
    cdf_opt_gain,
    pdf_opt_gain,
    user_stats,
)
from .numerics import (
    BracketError,
    DomainError,
    NumericsError,
    bisect_monotone,
    chebyshev_rule,
    solve_quadratic_increasing_roots,
)
from .params import SystemParams

__all__ = [
    "ClassificationError",
    "CASE_ORDERINGS",
    "CriticalValues",
    "CaseInterval",
    "CrossingPoint",
    "CaseLayout",
    "AnalyticSetup",
    "AverageBler",
    "analytic_setup",
    "critical_values",
    "critical_points",
    "classify",
    "cond_exp_psi_phi",
    "cond_exp_psi_xi",
    "expected_phi",
    "expected_psi_phi",
    "expected_psi_xi",
    "average_secure_bler",
    "hi_ceiling",
]

DEFAULT_ORDER = 30
SUPPORT_TAIL = 1e-9
_REL_TOL = 1e-9


class ClassificationError(NumericsError):
    """A case id does not match the ordering of the critical values."""


# Orderings of the four critical gains, lowest first. "vt"/"ut" are the
# secure-surrogate points, "v"/"u" the Psi-surrogate points. Cases 7-12 reuse
# the same orderings for the interference-limited family.
CASE_ORDERINGS: dict[int, tuple[str, str, str, str]] = {
    1: ("vt", "ut", "v", "u"),
    2: ("vt", "v", "ut", "u"),
    3: ("vt", "v", "u", "ut"),
    4: ("v", "vt", "ut", "u"),
    5: ("v", "vt", "u", "ut"),
    6: ("v", "u", "vt", "ut"),
}


# ============================================================================
#  Setup
# ============================================================================

@dataclass(frozen=True)
class AnalyticSetup:
    """Parameters with the CLT laws of both users and the quadrature orders."""

    params: SystemParams
    stats_C: CltStats
    stats_E: CltStats
    order_inner: int = DEFAULT_ORDER
    order_outer: int = DEFAULT_ORDER
    order_cdf: int = DEFAULT_CDF_ORDER

    @property
    def support_C(self) -> tuple[float, float]:
        return _amplitude_support(self.stats_C, self.order_cdf)

    @property
    def support_E(self) -> tuple[float, float]:
        return _amplitude_support(self.stats_E, self.order_cdf)

    def F_C(self, a):
        return cdf_opt_gain(a, self.stats_C, self.order_cdf)

    def f_C(self, a):
        return pdf_opt_gain(a, self.stats_C, self.order_cdf)

    def f_E(self, a):
        return pdf_opt_gain(a, self.stats_E, self.order_cdf)


@lru_cache(maxsize=256)
def _amplitude_support(stats: CltStats, order: int, tail: float = SUPPORT_TAIL) -> tuple[float, float]:
    F = lambda y: float(cdf_opt_gain(y, stats, order))
    lo_a = max(stats.mean - 12.0 * stats.std, 0.0)
    hi_a = stats.mean + 12.0 * stats.std
    lo = bisect_monotone(F, tail, lo_a, stats.mean, tol=1e-10) if F(lo_a) < tail else lo_a
    hi = bisect_monotone(F, 1.0 - tail, stats.mean, hi_a, tol=1e-10) if F(hi_a) > 1.0 - tail else hi_a
    return lo, hi


@lru_cache(maxsize=128)
def analytic_setup(
    params: SystemParams,
    order_inner: int = DEFAULT_ORDER,
    order_outer: int = DEFAULT_ORDER,
    order_cdf: int = DEFAULT_CDF_ORDER,
    bca_mu: float = DEFAULT_BCA_MU,
) -> AnalyticSetup:
    return AnalyticSetup(
        params,
        user_stats(params, "C", bca_mu),
        user_stats(params, "E", bca_mu),
        order_inner,
        order_outer,
        order_cdf,
    )


@lru_cache(maxsize=32)
def _rule(order: int):
    return chebyshev_rule(order)


# ============================================================================
#  Critical values
# ============================================================================

def _gamma_ec(gain_sq_E, params: SystemParams):
    x = params.gain_scale_E * np.asarray(gain_sq_E, dtype=float)
    return params.a_C * x / (params.rho2_E * x + params.sigma2)


def _critical_gain(t, b, c, scale, sigma2):
    """Squared gain at which b x / (c x + sigma2) reaches t (x = scale * gain); +inf if never."""
    t = np.asarray(t, dtype=float)
    finite = b - c * t > 0
    tt = np.clip(t, 0.0, None)
    denom = np.where(finite, (b - c * tt) * scale, 1.0)
    return np.where(finite, sigma2 * tt / denom, np.inf)


def _family_coeffs(params: SystemParams, family: str) -> tuple[float, float]:
    if family == "phi":
        return params.a_C, params.c_cc
    if family == "xi":
        return params.a_C, params.a_E + params.rho2_C
    raise DomainError(f"family must be 'phi' or 'xi', got {family!r}")


def _psi_coeffs(params: SystemParams) -> tuple[float, float]:
    return params.a_E, params.a_C + params.rho2_C


@dataclass(frozen=True)
class CriticalValues:
    """CU squared gains where the surrogates change segment (+inf when never reached)."""

    phi_vt: float | np.ndarray
    phi_ut: float | np.ndarray
    phi_v: float
    phi_u: float
    phibar_vt: float | np.ndarray
    phibar_ut: float | np.ndarray

    def family(self, family: str) -> dict[str, float | np.ndarray]:
        if family == "phi":
            return {"vt": self.phi_vt, "ut": self.phi_ut, "v": self.phi_v, "u": self.phi_u}
        return {"vt": self.phibar_vt, "ut": self.phibar_ut, "v": self.phi_v, "u": self.phi_u}


def _secure_points(gamma_EC, params: SystemParams):
    bt = np.asarray(beta_tilde(gamma_EC, params), dtype=float)
    half = 0.5 / np.asarray(secure_slope(bt, params.m_block), dtype=float)
    return bt, bt - half, bt + half


def critical_values(gamma_EC, params: SystemParams) -> CriticalValues:
    _, vt, ut = _secure_points(gamma_EC, params)
    psi = linearize_psi(params)
    scale, s2 = params.gain_scale_C, params.sigma2
    b, c = _family_coeffs(params, "phi")
    bb, cb = _family_coeffs(params, "xi")
    be, ce = _psi_coeffs(params)

    def out(x):
        x = np.asarray(x, dtype=float)
        return float(x) if x.ndim == 0 else x

    return CriticalValues(
        phi_vt=out(_critical_gain(vt, b, c, scale, s2)),
        phi_ut=out(_critical_gain(ut, b, c, scale, s2)),
        phi_v=float(_critical_gain(psi.alpha_low, be, ce, scale, s2)),
        phi_u=float(_critical_gain(psi.alpha_up, be, ce, scale, s2)),
        phibar_vt=out(_critical_gain(vt, bb, cb, scale, s2)),
        phibar_ut=out(_critical_gain(ut, bb, cb, scale, s2)),
    )


def _case_ids(values: dict[str, np.ndarray]) -> np.ndarray:
    """Lowest case id whose ordering holds (ties allowed), per element."""
    shape = np.broadcast(*values.values()).shape
    ids = np.zeros(shape, dtype=int)
    for case, order in CASE_ORDERINGS.items():
        ok = _ordering_holds(values, order)
        ids = np.where((ids == 0) & ok, case, ids)
    return ids


def _ordering_holds(values, order) -> np.ndarray:
    ok = True
    for lo_name, hi_name in zip(order, order[1:]):
        lo = np.asarray(values[lo_name], dtype=float)
        hi = np.asarray(values[hi_name], dtype=float)
        with np.errstate(invalid="ignore"):
            ok = ok & ((lo <= hi) | (lo - hi <= _REL_TOL * np.abs(hi)))
    return np.asarray(ok)


def classify(gamma_EC, params: SystemParams, family: str = "phi"):
    """Case id (1-6 for the Phi family, 7-12 for the Xi family) at ``gamma_EC``."""
    _family_coeffs(params, family)
    ids = _case_ids(critical_values(gamma_EC, params).family(family))
    if family == "xi":
        ids = ids + 6
    return int(ids) if ids.ndim == 0 else ids


# ============================================================================
#  Conditional expectations over the CU gain
# ============================================================================

def _product_given_ec(gamma_EC: np.ndarray, setup: AnalyticSetup, family: str) -> np.ndarray:
    """E[Psi^ S^ | gamma_EC] for S = Phi (family 'phi') or Xi ('xi'); vectorised."""
    p = setup.params
    g_ec = np.atleast_1d(np.asarray(gamma_EC, dtype=float))
    bt, vt, ut = _secure_points(g_ec, p)
    kt = np.asarray(secure_slope(bt, p.m_block), dtype=float)
    cv = critical_values(g_ec, p).family(family)
    n = g_ec.size

    gains = np.stack([np.broadcast_to(np.asarray(cv[k], dtype=float), (n,)) for k in ("vt", "ut", "v", "u")])
    amps = np.sqrt(gains)
    s = np.sort(amps, axis=0)
    end = np.minimum(amps[1], amps[3])  # min(ut, u): the product vanishes above it
    lead = np.asarray(setup.F_C(np.where(np.isfinite(s[0]), s[0], np.inf)), dtype=float)
    lead = np.where(np.isinf(s[0]), 1.0, lead)

    a_lo, a_hi = setup.support_C
    edges = np.stack([s[0], s[1], end])
    edges = np.clip(np.where(np.isinf(edges), a_hi, edges), a_lo, a_hi)
    edges = np.maximum.accumulate(edges, axis=0)
    lo, hi = edges[:-1], edges[1:]  # (2, n)

    rule = _rule(setup.order_inner)
    half = 0.5 * (hi - lo)
    x = half[..., None] * rule.nodes + (0.5 * (hi + lo))[..., None]  # (2, n, U)
    gain = p.gain_scale_C * x * x
    psi = linearize_psi(p)
    b, c = _family_coeffs(p, family)
    be, ce = _psi_coeffs(p)
    g_psi = be * gain / (ce * gain + p.sigma2)
    g_sec = b * gain / (c * gain + p.sigma2)
    h = np.clip(0.5 - psi.kappa * (g_psi - psi.alpha_th), 0.0, 1.0)
    h = h * np.clip(0.5 - kt[None, :, None] * (g_sec - bt[None, :, None]), 0.0, 1.0)
    dens = np.asarray(setup.f_C(x.reshape(-1)), dtype=float).reshape(x.shape)
    body = np.einsum("snu,u->n", h * dens * half[..., None], rule.weights)
    return np.clip(lead + body, 0.0, 1.0)


def _cond_exp(gamma_EC, case_id, params, stats_C, order, family, offset):
    if int(case_id) != case_id or not (offset + 1 <= case_id <= offset + 6):
        raise ClassificationError(f"case id {case_id!r} outside {offset + 1}..{offset + 6}")
    order_C = CASE_ORDERINGS[int(case_id) - offset]
    cv = critical_values(gamma_EC, params).family(family)
    if not bool(np.all(_ordering_holds(cv, order_C))):
        actual = classify(gamma_EC, params, family)
        raise ClassificationError(
            f"case {case_id} does not match the critical-value ordering at gamma_EC={gamma_EC!r} (actual case {actual})"
        )
    setup = AnalyticSetup(params, stats_C, user_stats(params, "E"), order_inner=order)
    return float(_product_given_ec(np.asarray([gamma_EC], dtype=float), setup, family)[0])


def cond_exp_psi_phi(gamma_EC: float, case_id: int, params: SystemParams, stats_C: CltStats,
                     order: int = DEFAULT_ORDER) -> float:
    """E[Psi^ Phi^ | gamma_EC] after checking that ``case_id`` (1-6) is the true case."""
    return _cond_exp(gamma_EC, case_id, params, stats_C, order, "phi", 0)


def cond_exp_psi_xi(gamma_EC: float, case_id: int, params: SystemParams, stats_C: CltStats,
                    order: int = DEFAULT_ORDER) -> float:
    """E[Psi^ Xi^ | gamma_EC] after checking that ``case_id`` (7-12) is the true case."""
    return _cond_exp(gamma_EC, case_id, params, stats_C, order, "xi", 6)


def _phi_given_ec(gamma_EC: np.ndarray, setup: AnalyticSetup, midpoint: bool = False) -> np.ndarray:
    """E[Phi^ | gamma_EC] = k~ * integral of F_gamma_CC over [v~, u~]."""
    p = setup.params
    g_ec = np.atleast_1d(np.asarray(gamma_EC, dtype=float))
    bt, vt, ut = _secure_points(g_ec, p)
    kt = np.asarray(secure_slope(bt, p.m_block), dtype=float)
    b, c = _family_coeffs(p, "phi")
    ceiling = b / c if c > 0 else np.inf

    def F_cc(x):
        gain = _critical_gain(x, b, c, p.gain_scale_C, p.sigma2)
        out = np.asarray(setup.F_C(np.sqrt(np.where(np.isfinite(gain), gain, 0.0))), dtype=float)
        out = np.where(np.isfinite(gain), out, 1.0)
        return np.where(x <= 0, 0.0, out)

    if midpoint:
        return np.clip(F_cc(bt), 0.0, 1.0)

    lo = np.maximum(vt, 0.0)
    hi = np.maximum(np.minimum(ut, ceiling), lo)
    rule = _rule(setup.order_inner)
    half = 0.5 * (hi - lo)
    x = half[:, None] * rule.nodes + (0.5 * (hi + lo))[:, None]
    body = (F_cc(x.reshape(-1)).reshape(x.shape) * half[:, None]) @ rule.weights
    above = np.clip(ut - np.maximum(vt, ceiling), 0.0, None)
    return np.clip(kt * (body + above), 0.0, 1.0)


# ============================================================================
#  Critical points and the outer layout
# ============================================================================

@dataclass(frozen=True)
class CaseInterval:
    """One panel of the EU squared-gain axis with its midpoint case ids."""

    lo: float
    hi: float
    case_phi: int
    case_xi: int


@dataclass(frozen=True)
class CrossingPoint:
    """EU squared gain at which ``point`` ('vt' or 'ut') of ``family`` meets ``level``.

    ``level`` names the event: 'v' / 'u' (ties with the Psi-surrogate gains),
    'saturation' (the secure gain jumps to +inf) or 'zero'.
    """

    gain_sq: float
    family: str
    level: str
    point: str
    beta_tilde: float


@dataclass(frozen=True)
class CaseLayout:
    breakpoints: tuple[float, ...]
    intervals: tuple[CaseInterval, ...]
    crossings: tuple[CrossingPoint, ...] = ()
    unreached: tuple[str, ...] = ()


def _crossing_levels(params: SystemParams, family: str) -> dict[str, float]:
    """SINR levels of v~ (or u~) at which the family's gains change order or saturate."""
    psi = linearize_psi(params)
    b, c = _family_coeffs(params, family)
    be, ce = _psi_coeffs(params)
    levels = {"zero": 0.0}
    if c > 0:
        levels["saturation"] = b / c
    for name, t in (("v", psi.alpha_low), ("u", psi.alpha_up)):
        denom = be - ce * t + c * t
        if be - ce * t > 0 and denom > 0:
            # b t / (b_e - (c_e - c) t) levels the two critical gains
            levels[name] = b * t / denom
    return levels


def _beta_tilde_roots(level: float, m: int) -> list[float]:
    """beta~ values at which u~ (smaller root) or v~ (larger root) equals ``level``."""
    return solve_quadratic_increasing_roots(
        2.0 * m - math.pi, -(4.0 * m * level + 2.0 * math.pi), 2.0 * m * level * level
    )


def critical_points(params: SystemParams, stats_E: CltStats, order_cdf: int = DEFAULT_CDF_ORDER) -> CaseLayout:
    """Breakpoints on the EU squared-gain axis and the case id of each panel."""
    a_lo, a_hi = _amplitude_support(stats_E, order_cdf)
    z_lo, z_hi = a_lo * a_lo, a_hi * a_hi
    bt_of_z = lambda z: float(beta_tilde(_gamma_ec(z, params), params))
    bt_lo, bt_hi = bt_of_z(0.0), bt_of_z(z_hi)

    points = {0.0, z_lo, z_hi}
    crossings, unreached = [], []
    for family in ("phi", "xi"):
        for name, level in _crossing_levels(params, family).items():
            roots = _beta_tilde_roots(level, params.m_block)
            # the quadratic is negative at beta~ = level, so its roots straddle it:
            # the smaller one is where u~ = level, the larger where v~ = level
            for root, point in zip(roots, ("ut", "vt")):
                tag = f"{family}:{point}={name}@{root:.6g}"
                if not (bt_lo <= root <= bt_hi) or (point == "ut" and root <= 0):
                    unreached.append(tag)
                    continue
                try:
                    z = bisect_monotone(bt_of_z, root, 0.0, z_hi, tol=1e-13)
                except BracketError:
                    unreached.append(tag)
                    continue
                points.add(z)
                crossings.append(CrossingPoint(z, family, name, point, root))
    inner = sorted(z for z in points if z_lo <= z <= z_hi)
    breakpoints = tuple(sorted(points))

    intervals = []
    for lo, hi in zip(inner, inner[1:]):
        if hi <= lo:
            continue
        g = float(_gamma_ec(0.5 * (lo + hi), params))
        intervals.append(CaseInterval(lo, hi, classify(g, params, "phi"), classify(g, params, "xi")))
    return CaseLayout(breakpoints, tuple(intervals), tuple(crossings), tuple(unreached))


def _outer_nodes(setup: AnalyticSetup) -> tuple[np.ndarray, np.ndarray, CaseLayout]:
    """EU amplitude nodes and weights (density included) over every layout panel."""
    layout = critical_points(setup.params, setup.stats_E, setup.order_cdf)
    rule = _rule(setup.order_outer)
    lo = np.sqrt([iv.lo for iv in layout.intervals])
    hi = np.sqrt([iv.hi for iv in layout.intervals])
    half = 0.5 * (hi - lo)
    a = (half[:, None] * rule.nodes + (0.5 * (hi + lo))[:, None]).reshape(-1)
    w = (half[:, None] * rule.weights).reshape(-1) * np.asarray(setup.f_E(a), dtype=float)
    return a, w, layout


def _outer(setup: AnalyticSetup, inner) -> float:
    a, w, _ = _outer_nodes(setup)
    g_ec = _gamma_ec(a * a, setup.params)
    vals = inner(g_ec)
    if not np.all(np.isfinite(vals)):
        raise NumericsError("non-finite conditional expectation in the outer integral")
    return float(np.clip(w @ vals, 0.0, 1.0))


def _coerce_setup(params_or_setup) -> AnalyticSetup:
    if isinstance(params_or_setup, AnalyticSetup):
        return params_or_setup
    return analytic_setup(params_or_setup)


def expected_phi(params_or_setup, midpoint: bool = False) -> float:
    """E[Phi^]; ``midpoint=True`` replaces the ramp average by F_gamma_CC(beta~)."""
    setup = _coerce_setup(params_or_setup)
    return _outer(setup, lambda g: _phi_given_ec(g, setup, midpoint))


def expected_psi_phi(params_or_setup) -> float:
    setup = _coerce_setup(params_or_setup)
    return _outer(setup, lambda g: _product_given_ec(g, setup, "phi"))


def expected_psi_xi(params_or_setup) -> float:
    setup = _coerce_setup(params_or_setup)
    return _outer(setup, lambda g: _product_given_ec(g, setup, "xi"))


# ============================================================================
#  Average secure BLER and the high-power ceiling
# ============================================================================

@dataclass(frozen=True)
class AverageBler:
    value: float
    expected_phi: float
    expected_psi_phi: float
    expected_psi_xi: float

    def __float__(self) -> float:
        return self.value


def average_secure_bler(
    params: SystemParams,
    order: int = DEFAULT_ORDER,
    order_cdf: int = DEFAULT_CDF_ORDER,
    midpoint: bool = False,
) -> AverageBler:
    """E[Phi^] - E[Psi^ Phi^] + E[Psi^ Xi^] with its three components."""
    setup = analytic_setup(params, order, order, order_cdf)
    e_phi = expected_phi(setup, midpoint)
    e_pp = expected_psi_phi(setup)
    e_px = expected_psi_xi(setup)
    value = min(max(e_phi - e_pp + e_px, 0.0), 1.0)
    return AverageBler(value, e_phi, e_pp, e_px)


def ceiling_sinrs(params: SystemParams) -> dict[str, float]:
    """Limits of the CU / EU SINRs as the transmit power grows without bound."""
    def lim(b, c):
        return b / c if c > 0 else math.inf

    return {
        "gamma_CC": lim(params.a_C, params.c_cc),
        "gamma_CE": lim(params.a_E, params.a_C + params.rho2_C),
        "gamma_CCE": lim(params.a_C, params.a_E + params.rho2_C),
        "gamma_EE": lim(params.a_E, params.a_C + params.rho2_E),
        "gamma_EC": lim(params.a_C, params.rho2_E),
    }


def hi_ceiling(params: SystemParams, use_linear: bool = False) -> float:
    """Secure BLER at the saturated SINRs; the high-power floor set by hardware impairments."""
    if params.rho2_C == 0 and params.rho2_E == 0 and params.zeta == 0:
        raise DomainError("no hardware impairment: the secure BLER has no high-power ceiling")
    g = ceiling_sinrs(params)
    with np.errstate(invalid="ignore", divide="ignore"):
        if use_linear:
            psi = float(linearize_psi(params)(g["gamma_CE"]))
            bt = float(beta_tilde(g["gamma_EC"], params)) if math.isfinite(g["gamma_EC"]) else math.inf
            if math.isinf(bt):
                phi = xi = 1.0
            else:
                kt = float(secure_slope(bt, params.m_block))
                ramp = lambda x: min(max(0.5 - kt * (x - bt), 0.0), 1.0)
                phi, xi = ramp(g["gamma_CC"]), ramp(g["gamma_CCE"])
        else:
            psi = float(bler_psi_exact(min(g["gamma_CE"], 1e300), params))
            ec = min(g["gamma_EC"], 1e300)
            phi = float(_secure_exact(min(g["gamma_CC"], 1e300), ec, params))
            xi = float(_secure_exact(min(g["gamma_CCE"], 1e300), ec, params))
    eps = 1.0 - ((1.0 - psi) * (1.0 - phi) + psi * (1.0 - xi))
    return min(max(eps, 0.0), 1.0)
