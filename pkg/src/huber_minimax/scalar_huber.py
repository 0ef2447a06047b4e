"""Scalar Huber family, envelope functionals and the classical minimax solution.

All functions accept scalars or numpy arrays and return a ``float`` for scalar
input.  An infinite threshold (``lam = inf``) stands for the least-squares
limit, where the score is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erf, erfcx, ndtr

from .errors import BracketError, ConvergenceError, DomainError

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# Noise kinds understood by ContaminationModel.
GAUSSIAN = "none"
TWO_POINT = "two_point"
POINT_MASS = "point"
AT_INFINITY = "infinity"
KINDS = (GAUSSIAN, TWO_POINT, POINT_MASS, AT_INFINITY)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class ContaminationModel:
    """Error law ``(1 - epsilon) N(0, sigma_base^2) + epsilon H``.

    ``kind`` selects H: ``"none"`` (no contamination), ``"two_point"``
    (mass 1/2 at each of +-mu), ``"point"`` (all mass at mu) or
    ``"infinity"`` (the improper law with mass at +-infinity).
    """

    epsilon: float = 0.0
    kind: str = GAUSSIAN
    mu: float | None = None
    sigma_base: float = 1.0

    def __post_init__(self):
        eps = float(self.epsilon)
        if not 0.0 <= eps < 1.0:
            raise DomainError(f"epsilon must lie in [0, 1), got {self.epsilon!r}")
        if self.kind not in KINDS:
            raise DomainError(f"unknown contamination kind {self.kind!r}")
        if not (self.sigma_base > 0 and math.isfinite(self.sigma_base)):
            raise DomainError("sigma_base must be positive and finite")
        if self.kind == GAUSSIAN and eps != 0.0:
            raise DomainError("kind 'none' requires epsilon = 0")
        if self.kind in (TWO_POINT, POINT_MASS):
            if self.mu is None or not math.isfinite(self.mu):
                raise DomainError(f"kind {self.kind!r} needs a finite mu")
            if self.kind == TWO_POINT and self.mu <= 0:
                raise DomainError("two-point contamination needs mu > 0")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def gaussian(cls, sigma_base=1.0):
        return cls(0.0, GAUSSIAN, None, sigma_base)

    @classmethod
    def two_point(cls, epsilon, mu, sigma_base=1.0):
        return cls(epsilon, TWO_POINT, float(mu), sigma_base)

    @classmethod
    def point_mass(cls, epsilon, mu, sigma_base=1.0):
        return cls(epsilon, POINT_MASS, float(mu), sigma_base)

    @classmethod
    def at_infinity(cls, epsilon, sigma_base=1.0):
        return cls(epsilon, AT_INFINITY, None, sigma_base)

    @property
    def proper(self):
        return self.kind != AT_INFINITY

    def contamination_moments(self, c, t):
        """``(E psi_c'(U + tZ), E psi_c^2(U + tZ))`` for ``U ~ H``.

        Both moments are even in U, so the two-point and one-sided laws at
        the same |mu| give identical values.
        """
        if self.kind == AT_INFINITY:
            return 0.0, float(c) ** 2
        if self.kind == GAUSSIAN:
            return 0.0, 0.0
        return shifted_psi_moments(c, self.mu, t)


# ---------------------------------------------------------------------------
# Huber loss and scores

def rho(z, lam):
    """Huber loss: ``z^2/2`` for ``|z| <= lam``, ``lam |z| - lam^2/2`` beyond."""
    z = np.asarray(z, dtype=float)
    if math.isinf(lam):
        return _ret(0.5 * z * z)
    az = np.abs(z)
    return _ret(np.where(az <= lam, 0.5 * z * z, lam * az - 0.5 * lam * lam))


def psi(z, lam):
    """Huber score, the clipping map ``min(lam, max(-lam, z))``."""
    return _ret(np.clip(np.asarray(z, dtype=float), -lam, lam))


def psi_prime(z, lam):
    """Derivative of the score; equal to 1 on the closed interval ``|z| <= lam``."""
    return _ret((np.abs(np.asarray(z, dtype=float)) <= lam).astype(float))


def regularized_psi(z, lam, r):
    """Effective score ``r * psi_lam(z / (1 + r))``."""
    if r <= 0:
        raise DomainError("regularization r must be positive")
    z = np.asarray(z, dtype=float)
    return _ret(r * np.clip(z / (1.0 + r), -lam, lam))


def regularized_psi_prime(z, lam, r):
    if r <= 0:
        raise DomainError("regularization r must be positive")
    z = np.asarray(z, dtype=float)
    return _ret((r / (1.0 + r)) * (np.abs(z) <= lam * (1.0 + r)))


# ---------------------------------------------------------------------------
# Gaussian moments of the score

def b_gauss(kappa):
    """``P(|Z| <= kappa)`` for standard normal Z."""
    k = np.asarray(kappa, dtype=float)
    return _ret(erf(k / SQRT2))


def a_gauss(kappa):
    """``E psi_kappa(Z)^2`` for standard normal Z."""
    k = np.asarray(kappa, dtype=float)
    with np.errstate(invalid="ignore"):
        out = erf(k / SQRT2) - 2.0 * k * norm_pdf(k) + 2.0 * k * k * ndtr(-k)
    return _ret(np.where(np.isinf(k), 1.0, out))


def shifted_psi_moments(c, mu, t):
    """Moments of the Huber score at a shifted normal.

    Returns ``(P(|mu + tZ| <= c), E psi_c(mu + tZ)^2)``.  The second moment is
    the truncated-normal second moment on ``[-c, c]`` plus ``c^2`` times the
    tail mass.
    """
    mu = abs(float(mu))
    c = float(c)
    t = float(t)
    if math.isinf(c):
        return 1.0, mu * mu + t * t
    if t == 0.0:
        return float(mu <= c), min(mu, c) ** 2
    a = (-c - mu) / t
    b = (c - mu) / t
    inside = ndtr(b) - ndtr(a)
    tails = ndtr(a) + ndtr(-b)
    second = (
        (mu * mu + t * t) * inside
        + t * (mu - c) * norm_pdf(a)
        - t * (mu + c) * norm_pdf(b)
    )
    return float(inside), float(max(second, 0.0) + c * c * tails)


def huber_A(lam, noise: ContaminationModel):
    """``E psi_lam(W)^2`` for ``W`` drawn from ``noise``."""
    s = noise.sigma_base
    gauss = s * s * a_gauss(lam / s)
    _, cont = noise.contamination_moments(lam, 0.0)
    return (1.0 - noise.epsilon) * gauss + noise.epsilon * cont


def huber_B(lam, noise: ContaminationModel):
    """``E psi_lam'(W)`` for ``W`` drawn from ``noise``."""
    gauss = b_gauss(lam / noise.sigma_base)
    cont, _ = noise.contamination_moments(lam, 0.0)
    return (1.0 - noise.epsilon) * gauss + noise.epsilon * cont


# ---------------------------------------------------------------------------
# Envelope functionals over the contamination neighbourhood

def _check_eps(epsilon):
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon!r}")


def a_bar(kappa, epsilon):
    """Worst-case second moment ``(1-eps) a_gauss(kappa) + eps kappa^2``."""
    _check_eps(epsilon)
    k = np.asarray(kappa, dtype=float)
    cap = epsilon * k * k if epsilon > 0 else 0.0
    return _ret((1.0 - epsilon) * a_gauss(k) + cap)


def b_bar(kappa, epsilon):
    """Best-case slope ``(1-eps) (2 Phi(kappa) - 1)``."""
    _check_eps(epsilon)
    return _ret((1.0 - epsilon) * np.asarray(b_gauss(kappa)))


def v_bar(kappa, epsilon):
    """Worst-case asymptotic variance ``a_bar / b_bar^2``; ``inf`` at kappa = 0."""
    a = np.asarray(a_bar(kappa, epsilon))
    b = np.asarray(b_bar(kappa, epsilon))
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(b > 0, a / (b * b), np.inf)
    return _ret(v)


def j_info(kappa, epsilon):
    """Huber's information functional

    ``j(kappa, eps) = (1-eps) int_{-kappa}^{kappa} x^2 phi(x) dx
    + kappa^2 (eps + (1-eps) 2 Phi(-kappa))``.

    Algebraically equal to :func:`a_bar`; it is computed from its own formula so
    the identity can be tested.  Note that j is strictly increasing in kappa.
    """
    _check_eps(epsilon)
    k = np.asarray(kappa, dtype=float)
    with np.errstate(invalid="ignore"):
        central = erf(k / SQRT2) - 2.0 * k * norm_pdf(k)
        out = (1.0 - epsilon) * central + k * k * (epsilon + (1.0 - epsilon) * 2.0 * ndtr(-k))
    return _ret(np.where(np.isinf(k), np.where(epsilon > 0, np.inf, 1.0), out))


# ---------------------------------------------------------------------------
# Classical (m = infinity) minimax problem

@dataclass(frozen=True)
class ClassicalMinimax:
    """Huber's scalar-location minimax quantities at contamination ``epsilon``.

    ``kappa_star`` is ``inf`` at ``epsilon = 0`` (least squares).
    """

    epsilon: float
    kappa_star: float
    i_star: float
    v_star: float


KAPPA_LO = 1e-4
KAPPA_HI = 10.0
_SCAN = 64


def _bracket_vbar_min(epsilon, lo=KAPPA_LO, hi=KAPPA_HI):
    """Coarse log scan returning a golden-section bracket around the minimum."""
    for _ in range(40):
        grid = np.geomspace(lo, hi, _SCAN)
        vals = np.asarray(v_bar(grid, epsilon))
        i = int(np.argmin(vals))
        if i == len(grid) - 1:
            if hi >= 1e3:
                break
            hi *= 4.0
            continue
        if i == 0:
            if lo <= 1e-12:
                break
            lo /= 10.0
            continue
        # Unimodality on the scan: decreasing up to i, increasing after.
        d = np.diff(vals)
        if np.any(d[:i] > 0) or np.any(d[i:] < 0):
            raise BracketError(f"v_bar(., {epsilon}) is not unimodal on [{lo}, {hi}]")
        return grid[i - 1], grid[i], grid[i + 1]
    raise BracketError(f"could not bracket argmin v_bar(., {epsilon})")


def kappa_star(epsilon):
    """Huber's minimax capping parameter ``argmin_kappa v_bar(kappa, eps)``."""
    _check_eps(epsilon)
    if epsilon == 0.0:
        return math.inf
    if epsilon < _TINY_EPS:
        return _kappa_star_tiny(epsilon)
    bracket = _bracket_vbar_min(epsilon)
    res = minimize_scalar(
        lambda k: v_bar(k, epsilon), bracket=bracket, method="golden",
        options={"xtol": 1e-10},
    )
    k = float(res.x)
    # Golden section stalls where v_bar is flat to rounding; polish on the
    # stationarity condition, which is well conditioned.
    lo, hi = bracket[0], bracket[2]
    g_lo, g_hi = _vbar_stationarity(lo, epsilon), _vbar_stationarity(hi, epsilon)
    if g_lo < 0 < g_hi:
        k = brentq(_vbar_stationarity, lo, hi, args=(epsilon,), xtol=1e-15, rtol=1e-15)
    return float(k)


_TINY_EPS = 1e-8


def _kappa_star_tiny(epsilon):
    # For tiny eps, v_bar is flat to rounding near its minimum.  Solve the
    # equivalent condition 2 phi(k)/k - 2 Phi(-k) = eps/(1-eps) in log space,
    # writing Phi(-k) through the scaled complementary error function.
    target = math.log(epsilon) - math.log1p(-epsilon)

    def g(k):
        mills = 2.0 / k - SQRT_2PI * erfcx(k / SQRT2)
        return math.log(INV_SQRT_2PI) - 0.5 * k * k + math.log(mills) - target

    hi = math.sqrt(-2.0 * target) + 1.0
    return float(brentq(g, 1.0, hi, xtol=1e-15, rtol=1e-15))


def _vbar_stationarity(k, epsilon):
    # Sign of d v_bar / d kappa: a_bar' b_bar - 2 a_bar b_bar'.
    da = (1.0 - epsilon) * 4.0 * k * ndtr(-k) + 2.0 * epsilon * k
    db = (1.0 - epsilon) * 2.0 * norm_pdf(k)
    return float(da * b_bar(k, epsilon) - 2.0 * a_bar(k, epsilon) * db)


def classical_minimax(epsilon) -> ClassicalMinimax:
    """Minimax capping parameter, least Fisher information and minimax variance."""
    _check_eps(epsilon)
    if epsilon == 0.0:
        return ClassicalMinimax(0.0, math.inf, 1.0, 1.0)
    k = kappa_star(epsilon)
    i_star = j_info(k, epsilon)
    v_star = v_bar(k, epsilon)
    if abs(v_star * i_star - 1.0) > 1e-6:
        raise ConvergenceError(
            f"v* i* = {v_star * i_star!r} at epsilon={epsilon}; minimizer not resolved"
        )
    return ClassicalMinimax(float(epsilon), k, i_star, v_star)


def i_star(epsilon):
    """Minimal Fisher information over the contamination neighbourhood."""
    return classical_minimax(epsilon).i_star
