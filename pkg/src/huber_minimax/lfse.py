"""Least-favorable state evolution and the minimax tuning of Huber's estimator.

Under the improper error law with contamination mass at +-infinity the
floating-threshold state evolution is affine in ``tau^2``:

    T_bar(tau^2) = (1 + tau^2) V_bar(kbb, eps) / m,   kbb = kappa (1 + r_bb)

where ``r_bb`` solves ``(r/(1+r)) B_bar(kappa (1+r), eps) = 1/m``.  Everything
in this module follows from that closed form together with the classical
scalar quantities of :mod:`huber_minimax.scalar_huber`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, NoSolution
from .scalar_huber import b_bar, b_gauss, classical_minimax, i_star, v_bar

QUANTITIES = ("Vstar", "KappaStar", "LambdaStar")


def _check(m, epsilon):
    if not m > 1:
        raise DomainError(f"m must exceed 1, got {m!r}")
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon!r}")


@dataclass(frozen=True)
class LFSEParams:
    m: float
    epsilon: float
    kappa: float

    def __post_init__(self):
        _check(self.m, self.epsilon)
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")


def solve_rbarbar(m, epsilon, kappa):
    """Unique positive root of ``(r/(1+r)) B_bar(kappa (1+r), eps) = 1/m``."""
    _check(m, epsilon)
    if (1.0 - epsilon) * m <= 1.0:
        raise NoSolution(f"(1 - eps) = {1 - epsilon:.6g} does not exceed 1/m = {1 / m:.6g}")
    r_lo = 1.0 / (m * (1.0 - epsilon) - 1.0)
    if math.isinf(kappa):
        return r_lo
    target = 1.0 / m
    f = lambda r: (r / (1.0 + r)) * b_bar(kappa * (1.0 + r), epsilon) - target  # noqa: E731
    if f(r_lo) >= 0.0:
        # B_bar saturated at 1 - eps in double precision.
        return r_lo
    r_hi = 2.0 * r_lo
    while f(r_hi) < 0.0:
        r_hi *= 2.0
        if r_hi > 1e300:
            raise BracketError("could not bracket r_bb")
    return brentq(f, r_lo, r_hi, xtol=1e-300, rtol=1e-15, maxiter=500)


def kbb_of_kappa(m, epsilon, kappa):
    """``kbb = kappa (1 + r_bb)``, the capping level seen by the channel."""
    return kappa * (1.0 + solve_rbarbar(m, epsilon, kappa))


def lfse_T(tau_sq, params: LFSEParams):
    """Least-favorable variance map; affine with slope ``V_bar(kbb)/m``."""
    kbb = kbb_of_kappa(params.m, params.epsilon, params.kappa)
    return (1.0 + tau_sq) * v_bar(kbb, params.epsilon) / params.m


def lfse_fixed_point(params: LFSEParams):
    """Fixed point of :func:`lfse_T`; ``inf`` when the slope is at least 1."""
    kbb = kbb_of_kappa(params.m, params.epsilon, params.kappa)
    slope = v_bar(kbb, params.epsilon) / params.m
    if slope >= 1.0:
        return math.inf
    return slope / (1.0 - slope)


def rbarbar_from_kbb(kbb, m, epsilon):
    """``r_bb`` expressed through ``kbb``: ``1 / (m B_bar(kbb) - 1)``."""
    _check(m, epsilon)
    if math.isinf(kbb):
        denom = m * (1.0 - epsilon) - 1.0
    else:
        denom = m * (1.0 - epsilon) * b_gauss(kbb) - 1.0
    if not denom > 0.0:
        raise DomainError(
            f"m (1-eps) (2 Phi(kbb) - 1) = {denom + 1:.6g} <= 1: kbb={kbb!r} lies on the breakdown side"
        )
    return 1.0 / denom


def kappa_underline(kbb, m, epsilon):
    """Floating threshold ``kappa`` whose least-favorable channel caps at ``kbb``."""
    r = rbarbar_from_kbb(kbb, m, epsilon)
    if math.isinf(kbb):
        return math.inf
    return kbb / (1.0 + r)


def lambda_bar(kappa, m, epsilon):
    """Least-favorable calibration ``kappa / sqrt(1 - V_bar(kbb)/m)``; ``inf`` past the pole."""
    _check(m, epsilon)
    if math.isinf(kappa):
        return math.inf
    kbb = kbb_of_kappa(m, epsilon, kappa)
    slope = v_bar(kbb, epsilon) / m
    if slope >= 1.0:
        return math.inf
    return kappa / math.sqrt(1.0 - slope)


def kappa_plus(m, epsilon):
    """Right end of the interval where :func:`lambda_bar` is finite.

    Solves ``V_bar(kbb) = m`` on the branch ``kbb > kappa*`` and maps the root
    back with :func:`kappa_underline`.  ``inf`` at ``epsilon = 0``.
    """
    _check(m, epsilon)
    cm = classical_minimax(epsilon)
    if math.isinf(cm.kappa_star):
        return math.inf
    if cm.v_star >= m:
        raise DomainError(f"no finite lambda_bar: v*({epsilon}) >= m = {m}")
    g = lambda k: v_bar(k, epsilon) - m  # noqa: E731
    lo = cm.kappa_star
    hi = 2.0 * lo
    while g(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    kbb = brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)
    return kappa_underline(kbb, m, epsilon)


# ---------------------------------------------------------------------------
# Minimax problem

@dataclass(frozen=True)
class MinimaxSolution:
    """Minimax tuning at ``(m, epsilon)``.

    In the breakdown phase ``V_star`` is ``inf`` and both tunings are ``None``.
    """

    epsilon: float
    m: float
    kappa_star: float
    i_star: float
    v_star: float
    kappa_underline_star: float | None
    lambda_star: float | None
    V_star: float
    breakdown: bool


def minimax(m, epsilon) -> MinimaxSolution:
    """Minimax capping, threshold and worst-case variance.

    Bounded iff ``m i*(eps) > 1``, in which case ``V* = 1/(i* - 1/m)``.
    """
    _check(m, epsilon)
    cm = classical_minimax(epsilon)
    if m * cm.i_star <= 1.0:
        return MinimaxSolution(
            epsilon, m, cm.kappa_star, cm.i_star, cm.v_star, None, None, math.inf, True
        )
    V = 1.0 / (cm.i_star - 1.0 / m)
    ku = kappa_underline(cm.kappa_star, m, epsilon)
    lam = ku / math.sqrt(1.0 - cm.v_star / m)
    return MinimaxSolution(epsilon, m, cm.kappa_star, cm.i_star, cm.v_star, ku, lam, V, False)


def lambda_star(m, epsilon):
    return minimax(m, epsilon).lambda_star


def breakdown_epsilon(m):
    """``inf{eps : m i*(eps) <= 1}``, the root of ``m i*(eps) = 1``."""
    if not m > 1:
        raise DomainError("m must exceed 1")
    g = lambda e: m * i_star(e) - 1.0  # noqa: E731
    hi = 0.5
    while g(hi) > 0.0:
        hi = 1.0 - 0.5 * (1.0 - hi)
        if hi > 1.0 - 1e-9:
            raise BracketError(f"breakdown point for m={m} lies beyond 1 - 1e-9")
    lo = 0.0
    if hi > 0.5:
        lo = 1.0 - 2.0 * (1.0 - hi)
    return brentq(g, lo, hi, xtol=1e-12, rtol=1e-12)


def critical_curve(n=512, eps_max=0.5):
    """Sampled critical curve ``1/m = i*(eps)``, as arrays ``(eps, inv_m)``.

    The curve is an explicit function of eps, so each vertex is exact to the
    precision of ``i*``.
    """
    eps = np.linspace(0.0, eps_max, n)
    return eps, np.array([i_star(e) for e in eps])


@dataclass(frozen=True)
class PhaseGrid:
    """Minimax quantity on an ``(eps, 1/m)`` grid.

    ``values[i, j]`` belongs to ``inv_m_grid[i]`` and ``epsilon_grid[j]``.
    Cells on or above the critical curve (``bounded`` false) hold ``inf`` for
    ``Vstar`` and ``nan`` for the tunings.  At ``eps = 0`` the tunings are
    ``inf`` (least squares).
    """

    quantity: str
    epsilon_grid: np.ndarray
    inv_m_grid: np.ndarray
    values: np.ndarray
    curve_eps: np.ndarray
    curve_inv_m: np.ndarray
    bounded: np.ndarray


def phase_grid(quantity, epsilon_grid, inv_m_grid, curve_points=512):
    """Evaluate ``Vstar``, ``KappaStar`` (the floating minimax threshold) or
    ``LambdaStar`` over a grid, plus the critical curve."""
    if quantity not in QUANTITIES:
        raise DomainError(f"quantity must be one of {QUANTITIES}, got {quantity!r}")
    eps = np.asarray(epsilon_grid, dtype=float)
    inv_m = np.asarray(inv_m_grid, dtype=float)
    if np.any((eps < 0) | (eps >= 1)) or np.any((inv_m < 0) | (inv_m >= 1)):
        raise DomainError("grids must lie in [0, 1)")
    cols = [classical_minimax(e) for e in eps]
    k_star = np.array([c.kappa_star for c in cols])[None, :]
    i_st = np.array([c.i_star for c in cols])[None, :]
    v_st = np.array([c.v_star for c in cols])[None, :]
    x = inv_m[:, None]
    ok = x < i_st
    with np.errstate(divide="ignore", invalid="ignore"):
        if quantity == "Vstar":
            vals = np.where(ok, 1.0 / (i_st - x), np.inf)
        else:
            # B_bar(kappa*) = i*, hence r_bb(kappa*) = (1/m) / (i* - 1/m).
            ku = k_star / (1.0 + x / (i_st - x))
            if quantity == "LambdaStar":
                ku = ku / np.sqrt(1.0 - v_st * x)
            vals = np.where(ok, ku, np.nan)
    ce, ci = critical_curve(curve_points, float(eps.max()) if eps.size else 0.5)
    return PhaseGrid(quantity, eps, inv_m, vals, ce, ci, np.broadcast_to(ok, vals.shape).copy())


def suboptimality_ratio(m, epsilon):
    """``K = (1 - 1/m) / (1 - v*/m)``, so that ``V* = K v* / (1 - 1/m)``."""
    _check(m, epsilon)
    cm = classical_minimax(epsilon)
    if m * cm.i_star <= 1.0:
        raise DomainError(f"(m={m}, eps={epsilon}) lies in the breakdown phase")
    return (1.0 - 1.0 / m) / (1.0 - cm.v_star / m)
