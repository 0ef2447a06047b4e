"""Finite-n experiments: synthetic data, AMP, a Huber IRLS solver and Monte Carlo.

Designs have i.i.d. ``N(0, 1/n)`` entries, so with ``theta0 = 0`` the
per-coordinate error ``|theta_hat - theta0|^2 / p`` estimates the asymptotic
variance ``m tau_inf^2`` predicted by state evolution.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SingularSystem, SlopeInfeasible
from .scalar_huber import AT_INFINITY, POINT_MASS, TWO_POINT, ContaminationModel


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    theta0: np.ndarray
    noise: ContaminationModel | None
    seed: int | None
    contaminated: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.n / self.p


def rep_rng(seed, rep=0):
    """Counter-based generator for replication ``rep``; independent of rep order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(rep,))))


def gen_dataset(n, p, noise: ContaminationModel, seed, rep=0, *, fixed_count=False,
                theta0_norm=None) -> Dataset:
    """Draw ``Y = X theta0 + W``.

    Each error is contaminated independently with probability eps; with
    ``fixed_count`` exactly ``round(eps n)`` randomly placed errors are.
    ``theta0_norm`` sets a random truth with ``|theta0|^2 / p`` equal to its
    square; it is drawn last, so the design and errors do not depend on it.
    """
    if not (isinstance(n, (int, np.integer)) and isinstance(p, (int, np.integer))):
        raise DomainError("n and p must be integers")
    if not n > p >= 1:
        raise DomainError(f"need n > p >= 1, got n={n}, p={p}")
    if noise.kind == AT_INFINITY:
        raise DomainError("improper contamination cannot be sampled")
    rng = rep_rng(seed, rep)
    X = rng.standard_normal((n, p)) / math.sqrt(n)
    W = noise.sigma_base * rng.standard_normal(n)
    if fixed_count:
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, int(round(noise.epsilon * n)), replace=False)] = True
    else:
        mask = rng.random(n) < noise.epsilon
    k = int(mask.sum())
    if noise.kind == TWO_POINT:
        W[mask] = noise.mu * rng.choice([-1.0, 1.0], size=k)
    elif noise.kind == POINT_MASS:
        W[mask] = noise.mu
    theta0 = np.zeros(p)
    if theta0_norm is not None:
        g = rng.standard_normal(p)
        theta0 = theta0_norm * math.sqrt(p) * g / np.linalg.norm(g)
    return Dataset(X, X @ theta0 + W, theta0, noise, seed, mask)


def huber_objective(X, Y, theta, lam):
    res = Y - X @ theta
    if math.isinf(lam):
        return 0.5 * float(res @ res)
    a = np.abs(res)
    return float(np.where(a <= lam, 0.5 * res * res, lam * a - 0.5 * lam * lam).sum())


# ---------------------------------------------------------------------------
# AMP

@dataclass(frozen=True)
class AMPState:
    theta: np.ndarray
    R: np.ndarray
    r: float
    t: int
    converged: bool
    r_history: tuple = field(default=(), repr=False)


def empirical_slope(R, lam, r):
    """Average slope ``(r/(1+r)) #{|R_i| <= lam (1+r)} / n`` of the regularized score."""
    return (r / (1.0 + r)) * np.count_nonzero(np.abs(R) <= lam * (1.0 + r)) / R.size


def empirical_slope_r(R, lam, m):
    """Smallest ``r > 0`` whose empirical slope reaches ``1/m``.

    The slope is nondecreasing and piecewise continuous in r, jumping where
    ``lam (1 + r)`` passes a residual.  Inside a piece with ``N`` residuals
    captured the equation solves to ``r = n / (m N - n)``; if a jump carries
    the slope past ``1/m`` the jump location is returned.
    """
    R = np.asarray(R, dtype=float)
    n = R.size
    if not np.all(np.isfinite(R)):
        raise SlopeInfeasible("non-finite adjusted residuals")
    if math.isinf(lam):
        return 1.0 / (m - 1.0)
    a = np.sort(np.abs(R))
    jumps = a / lam - 1.0
    starts = np.unique(jumps[jumps > 0.0])
    lo = np.concatenate(([0.0], starts))
    hi = np.concatenate((starts, [np.inf]))
    counts = np.searchsorted(jumps, lo, side="right")
    with np.errstate(divide="ignore"):
        excess = m * counts - n
        r_piece = np.where(excess > 0, n / np.where(excess > 0, excess, 1), np.inf)
    cand = np.maximum(r_piece, lo)
    ok = np.nonzero(cand < hi)[0]
    if ok.size == 0:
        raise SlopeInfeasible("empirical slope never reaches 1/m")
    i = ok[0]
    r = float(cand[i])
    if r_piece[i] <= lo[i] and i > 0:
        # Root sits on a jump; make sure lam (1 + r) really captures the residual.
        edge = a[counts[i] - 1]
        while lam * (1.0 + r) < edge:
            r = float(np.nextafter(r, np.inf))
    if r <= 0.0:
        raise SlopeInfeasible("slope equation degenerates at r = 0")
    return r


def amp_fit(data: Dataset, lam, max_iter=5000, tol=1e-10) -> AMPState:
    """Approximate message passing for the Huber M-estimator.

    Starts from ``theta = 0`` and ``R = Y`` (no correction at the first step),
    and iterates

        R     <- Y - X theta + Psi(R_prev; r_prev)
        r     <- smallest root of the empirical slope equation
        theta <- theta + m X^T Psi(R; r)

    until ``|theta step| / sqrt(p)`` and ``|R step| / sqrt(n)`` are both
    at most ``tol``.
    """
    X, Y = data.X, data.Y
    n, p = X.shape
    if not n > p:
        raise DomainError("AMP needs n > p")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    m = n / p
    theta = np.zeros(p)
    psi_prev = np.zeros(n)
    rs = []
    R = Y
    r = None
    for t in range(1, max_iter + 1):
        R_prev = R
        R = Y - X @ theta + psi_prev
        try:
            r = empirical_slope_r(R, lam, m)
        except SlopeInfeasible as exc:
            raise SlopeInfeasible(str(exc), iteration=t) from None
        rs.append(r)
        psi_prev = r * np.clip(R / (1.0 + r), -lam, lam)
        step = m * (X.T @ psi_prev)
        theta = theta + step
        # R must settle too: with a residual pinned at a slope jump, theta can
        # stall while r and R are still drifting.
        if (np.linalg.norm(step) / math.sqrt(p) <= tol
                and np.linalg.norm(R - R_prev) / math.sqrt(n) <= tol):
            return AMPState(theta, R, r, t, True, tuple(rs))
    return AMPState(theta, R, r, max_iter, False, tuple(rs))


# ---------------------------------------------------------------------------
# IRLS with semismooth Newton acceleration

def _exact_line_search(res, Xd, lam):
    """Minimize ``sum rho(res - a Xd)`` over ``a >= 0`` (convex in a)."""
    def dphi(a):
        return -float(Xd @ np.clip(res - a * Xd, -lam, lam))

    if dphi(0.0) >= 0.0:
        return 0.0
    hi = 1.0
    while dphi(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            return hi
    return brentq(dphi, 0.0, hi, xtol=1e-15, rtol=1e-13)


def irls_fit(data_or_X, lam, max_iter=1000, tol=1e-12, *, Y=None, newton=True,
             return_info=False):
    """Huber M-estimate ``argmin sum rho_lam(Y_i - X_i theta)``.

    Each iteration tries a semismooth Newton step on the inlier set with an
    exact line search and falls back to the reweighted least-squares step
    with weights ``min(1, lam/|res|)`` when Newton does not decrease the
    objective.  Both moves are descent steps, so the objective never
    increases.  ``newton=False`` gives plain IRLS.
    """
    if Y is None:
        X, Y = data_or_X.X, data_or_X.Y
    else:
        X = data_or_X
    n, p = X.shape
    if not n > p:
        raise DomainError("need n > p")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    try:
        theta = np.linalg.lstsq(X, Y, rcond=None)[0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if math.isinf(lam):
        return (theta, {"iterations": 0, "objective": [huber_objective(X, Y, theta, lam)]}) \
            if return_info else theta
    f = huber_objective(X, Y, theta, lam)
    trace = [f]
    ridge = 1e-6
    it = 0
    for it in range(1, max_iter + 1):
        res = Y - X @ theta
        g = X.T @ np.clip(res, -lam, lam)
        new = None
        if newton:
            S = np.abs(res) <= lam
            XS = X[S]
            H = XS.T @ XS
            if XS.shape[0] < p:
                H[np.diag_indices(p)] += ridge
            try:
                d = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                d = None
            if d is not None and np.all(np.isfinite(d)):
                a = _exact_line_search(res, X @ d, lam)
                cand = theta + a * d
                fc = huber_objective(X, Y, cand, lam)
                if fc <= f:
                    new, fn = cand, fc
        if new is None:
            w = np.minimum(1.0, lam / np.maximum(np.abs(res), 1e-300))
            Xw = X.T * w
            try:
                new = np.linalg.solve(Xw @ X, Xw @ Y)
            except np.linalg.LinAlgError as exc:
                raise SingularSystem(f"weighted normal equations are singular: {exc}") from None
            fn = huber_objective(X, Y, new, lam)
            if fn > f:
                # Reweighting is a majorize-minimize step; only rounding can raise f.
                fn, new = f, theta
        step = np.linalg.norm(new - theta) / math.sqrt(p)
        theta, f = new, fn
        trace.append(f)
        if step <= tol:
            break
    if return_info:
        kkt = float(np.abs(X.T @ np.clip(Y - X @ theta, -lam, lam)).max())
        return theta, {"iterations": it, "objective": trace, "kkt": kkt}
    return theta


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class MCSummary:
    reps: int
    per_coordinate_mse: float
    se_estimate: float
    mc_std_error: float
    failures: int = 0
    mse_per_rep: np.ndarray = field(default=None, repr=False)

    @property
    def se_std_error(self):
        """Delta-method standard error of ``se_estimate``."""
        if self.se_estimate == 0:
            return 0.0
        return self.mc_std_error / (2.0 * self.se_estimate)


def _one_rep(n, p, noise, lam, seed, rep, solver, fixed_count):
    d = gen_dataset(n, p, noise, seed, rep, fixed_count=fixed_count)
    if solver == "amp":
        theta = amp_fit(d, lam).theta
    else:
        theta = irls_fit(d, lam)
    err = theta - d.theta0
    return float(err @ err) / p


def monte_carlo(n, p, noise, lam, reps=200, seed=0, *, solver="irls", workers=1,
                fixed_count=False) -> MCSummary:
    """Mean per-coordinate squared error over independent replications.

    Replication ``k`` uses the stream ``rep_rng(seed, k)``, so the result does
    not depend on ``workers``.  Failed replications are counted and skipped.
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    if solver not in ("irls", "amp"):
        raise DomainError(f"unknown solver {solver!r}")

    def run(k):
        try:
            return _one_rep(n, p, noise, lam, seed, k, solver, fixed_count)
        except (SingularSystem, SlopeInfeasible, np.linalg.LinAlgError):
            return math.nan

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(run, range(reps)))
    else:
        vals = [run(k) for k in range(reps)]
    vals = np.asarray(vals)
    good = vals[np.isfinite(vals)]
    failures = int(vals.size - good.size)
    if good.size == 0:
        return MCSummary(reps, math.nan, math.nan, math.nan, failures, vals)
    mean = float(good.mean())
    sem = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else math.nan
    return MCSummary(reps, mean, math.sqrt(mean), sem, failures, vals)


# ---------------------------------------------------------------------------
# CSV exchange

def write_dataset_csv(path, data: Dataset):
    """Write ``y, x_1..x_p`` columns with a header row, full double precision."""
    header = ",".join(["y"] + [f"x_{j + 1}" for j in range(data.p)])
    np.savetxt(path, np.column_stack([data.Y, data.X]), delimiter=",", header=header,
               comments="", fmt="%.17g")


def read_dataset_csv(path):
    """Inverse of :func:`write_dataset_csv`; returns a :class:`Dataset` with unknown truth."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "y" or any(h != f"x_{j + 1}" for j, h in enumerate(header[1:])):
        raise DomainError(f"{path}: expected header y,x_1,...,x_p")
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    Y, X = arr[:, 0], arr[:, 1:]
    return Dataset(X, Y, np.full(X.shape[1], np.nan), None, None)
