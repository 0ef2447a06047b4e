"""Population state evolution for Huber M-estimation with ``n/p -> m``.

The scalar channel observes ``W + tau Z`` where ``W`` follows a
:class:`~huber_minimax.scalar_huber.ContaminationModel` and ``Z`` is an
independent standard normal.  One step of the recursion is

    r   = smallest root of  E Psi'(W + tau Z; r) = 1/m
    T   = m E Psi(W + tau Z; r)^2

and the per-coordinate asymptotic variance of the estimator is ``m tau_inf^2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoSolution
from .scalar_huber import ContaminationModel, a_gauss, b_gauss

log = logging.getLogger(__name__)

R_MAX = 1e8
_R_SCAN = 64


@dataclass(frozen=True)
class FixedLambda:
    """Threshold fixed in response units; ``inf`` gives least squares."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("lambda must be positive")

    def threshold(self, tau_sq, noise):
        return self.lam


@dataclass(frozen=True)
class FloatingKappa:
    """Threshold floating with the effective noise level, ``lam = kappa * s``."""

    kappa: float

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise DomainError("kappa must be positive and finite")

    def threshold(self, tau_sq, noise):
        return self.kappa * effective_sigma(tau_sq, noise)


@dataclass(frozen=True)
class SEConfig:
    m: float
    tuning: FixedLambda | FloatingKappa
    noise: ContaminationModel
    tau0_sq: float = 0.0
    tol: float = 1e-10
    max_iter: int = 10_000
    ceiling: float = 1e12
    patience: int = 50

    def __post_init__(self):
        if not self.m > 1:
            raise DomainError(f"m must exceed 1, got {self.m!r}")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.tau0_sq < 0:
            raise DomainError("tau0_sq must be nonnegative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be positive")


@dataclass(frozen=True)
class SEFixedPoint:
    """Outcome of :func:`fixed_point`.

    On divergence ``tau_sq_inf`` and ``avar`` are ``inf`` and ``r_inf`` is
    ``None``; ``diverged`` is the marker to test.
    """

    tau_sq_inf: float
    r_inf: float | None
    avar: float
    iterations: int
    converged: bool
    diverged: bool
    trace: tuple = field(default=(), repr=False)

    @property
    def sqrt_avar(self):
        return math.sqrt(self.avar)


def effective_sigma(tau_sq, noise):
    return math.sqrt(noise.sigma_base ** 2 + tau_sq)


def eff_slope_B(tau_sq, r, lam, noise: ContaminationModel):
    """Average slope ``E Psi'_lam(W + tau Z; r)`` of the regularized score."""
    if r <= 0:
        raise DomainError("r must be positive")
    if tau_sq < 0:
        raise DomainError("tau_sq must be nonnegative")
    s = effective_sigma(tau_sq, noise)
    c = lam * (1.0 + r)
    cont, _ = noise.contamination_moments(c, math.sqrt(tau_sq))
    eps = noise.epsilon
    return (r / (1.0 + r)) * ((1.0 - eps) * b_gauss(c / s) + eps * cont)


def variance_map_A(tau_sq, r, lam, noise: ContaminationModel):
    """Second moment ``E Psi_lam(W + tau Z; r)^2`` of the regularized score."""
    if r <= 0:
        raise DomainError("r must be positive")
    if tau_sq < 0:
        raise DomainError("tau_sq must be nonnegative")
    s = effective_sigma(tau_sq, noise)
    c = lam * (1.0 + r)
    _, cont = noise.contamination_moments(c, math.sqrt(tau_sq))
    eps = noise.epsilon
    g = r / (1.0 + r)
    return g * g * ((1.0 - eps) * s * s * a_gauss(c / s) + eps * cont)


def solve_r(tau_sq, m, lam, noise: ContaminationModel):
    """Smallest ``r > 0`` with ``eff_slope_B(tau_sq, r, lam, noise) = 1/m``.

    The slope never exceeds ``r/(1+r)``, so the root is at least ``1/(m-1)``.
    The bracket above is found by doubling and then scanned on a log grid so
    that the left-most crossing is the one refined.  When the slope jumps
    (``tau = 0``) the returned value is ``inf{r : slope >= 1/m}``.
    """
    if not m > 1:
        raise DomainError("m must exceed 1")
    target = 1.0 / m
    f = lambda r: eff_slope_B(tau_sq, r, lam, noise) - target  # noqa: E731
    r_lo = 1.0 / (m - 1.0)
    if f(r_lo) >= 0.0:
        return r_lo
    r_hi = 2.0 * r_lo
    while f(r_hi) < 0.0:
        if r_hi >= R_MAX:
            raise NoSolution(
                f"average slope stays below 1/m = {target:.6g} for r <= {R_MAX:g} "
                f"(tau_sq={tau_sq:.6g}, lambda={lam:.6g}, {noise})"
            )
        r_hi *= 2.0
    grid = np.geomspace(r_lo, r_hi, _R_SCAN)
    grid[0], grid[-1] = r_lo, r_hi
    vals = np.array([f(r) for r in grid])
    k = int(np.argmax(vals >= 0.0))
    if np.any(vals[k:] < 0.0):
        log.debug("slope equation has several crossings at tau_sq=%g lam=%g", tau_sq, lam)
    a, b = grid[k - 1], grid[k]
    return brentq(f, a, b, xtol=1e-14 * r_lo, rtol=1e-13, maxiter=500)


def T_map_with_r(tau_sq, cfg: SEConfig):
    """One state-evolution step; returns ``(T(tau_sq), r)``."""
    lam = cfg.tuning.threshold(tau_sq, cfg.noise)
    r = solve_r(tau_sq, cfg.m, lam, cfg.noise)
    return cfg.m * variance_map_A(tau_sq, r, lam, cfg.noise), r


def T_map(tau_sq, cfg: SEConfig):
    """Variance map ``T(tau^2) = m A(tau^2, R(tau))``."""
    return T_map_with_r(tau_sq, cfg)[0]


_PICARD_BUDGET = 200
# Iterate well past the nominal tolerance; the reported avar scales tau^2 by m.
_SAFETY = 1e-2


def fixed_point(cfg: SEConfig) -> SEFixedPoint:
    """Iterate the variance map to its fixed point.

    Plain Picard iteration is tried first.  The map is nondecreasing, so the
    iterates are monotone; when they crawl (slope near 1) or oscillate
    through rounding, the fixed point is bracketed and refined with Brent's
    method on ``T(y) - y`` instead.  Divergence is reported through the
    ``diverged`` flag, not raised.
    """
    trace = []
    tol = cfg.tol
    y = float(cfg.tau0_sq)
    expanding = 0
    budget = min(cfg.max_iter, _PICARD_BUDGET)
    last_sign = 0
    flips = 0
    it = 0
    prev_step = None
    while it < budget:
        ty, r = T_map_with_r(y, cfg)
        trace.append((y, r))
        it += 1
        step = ty - y
        # Contraction estimate; the distance to the fixed point is about
        # |step| * q / (1 - q).
        prev_q = prev_step
        q = abs(step / prev_step) if prev_step else 0.0
        prev_step = step
        small = abs(step) * q <= _SAFETY * tol * (1.0 + y) * (1.0 - q)
        if (prev_q is not None or step == 0.0) and q < 1.0 and small:
            return _converged(cfg, ty, it, trace)
        if it >= 20 and q > 0.9:
            break
        expanding = expanding + 1 if step > 0 else 0
        if ty > cfg.ceiling and expanding >= cfg.patience:
            return _diverged(it, trace)
        sign = 1 if step > 0 else -1
        flips += sign != last_sign and last_sign != 0
        last_sign = sign
        if flips > 3:
            break
        y = ty

    # Bracketing fallback.
    g = lambda x: T_map(x, cfg) - x  # noqa: E731
    gy = g(y)
    if gy > 0.0:
        lo, hi = y, max(2.0 * y, 1.0)
        while True:
            ghi = g(hi)
            trace.append((hi, None))
            it += 1
            if ghi <= 0.0:
                break
            lo = hi
            if hi > cfg.ceiling:
                return _diverged(it, trace)
            hi *= 2.0
    else:
        lo, hi = 0.0, y
        if gy == 0.0:
            return _converged(cfg, y, it, trace)
    root = brentq(g, lo, hi, xtol=_SAFETY * tol, rtol=max(_SAFETY * tol, 1e-15),
                  maxiter=cfg.max_iter)
    return _converged(cfg, root, it, trace)


def _converged(cfg, tau_sq, it, trace):
    ty, r = T_map_with_r(tau_sq, cfg)
    ok = abs(ty - tau_sq) <= 10 * cfg.tol * (1.0 + tau_sq)
    if not ok:
        log.warning("fixed point residual %.3g exceeds tolerance", ty - tau_sq)
    return SEFixedPoint(tau_sq, r, cfg.m * tau_sq, it, ok, False, tuple(trace))


def _diverged(it, trace):
    return SEFixedPoint(math.inf, None, math.inf, it, False, True, tuple(trace))


def huber_avar(tau_sq, r, lam, noise, m):
    """``E Psi^2 / (E Psi')^2`` at the given channel, the sandwich variance."""
    b = eff_slope_B(tau_sq, r, lam, noise)
    return variance_map_A(tau_sq, r, lam, noise) / (b * b) / m


# ---------------------------------------------------------------------------
# Calibration between fixed-lambda and floating-kappa tunings

def calibrate_lambda_from_kappa(m, kappa, noise: ContaminationModel, **kw):
    """``lambda = kappa * sqrt(sigma_base^2 + tau_inf^2)`` under the floating tuning."""
    fp = fixed_point(SEConfig(m, FloatingKappa(kappa), noise, **kw))
    if fp.diverged:
        raise NoSolution(f"floating state evolution diverges at kappa={kappa:g}")
    return kappa * effective_sigma(fp.tau_sq_inf, noise)


def calibrate_kappa_from_lambda(m, lam, noise: ContaminationModel, **kw):
    """Inverse of :func:`calibrate_lambda_from_kappa`.

    A fixed-lambda fixed point with noise level ``s`` is also a fixed point of
    the floating evolution with ``kappa = lam / s``, so no outer root search
    is needed.
    """
    fp = fixed_point(SEConfig(m, FixedLambda(lam), noise, **kw))
    if fp.diverged:
        raise NoSolution(f"fixed-lambda state evolution diverges at lambda={lam:g}")
    return lam / effective_sigma(fp.tau_sq_inf, noise)
