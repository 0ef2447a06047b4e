"""Command-line front end.

Every subcommand prints one table, either as CSV (with a ``# runspec:`` comment
line recording the invocation) or as JSON.  Exit codes: 0 success, 2 invalid
arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .amp import amp_fit, gen_dataset, huber_objective, irls_fit, monte_carlo, read_dataset_csv, \
    write_dataset_csv
from .errors import DomainError, HuberMinimaxError
from .lfse import LFSEParams, breakdown_epsilon, kappa_plus, lambda_bar, lfse_T, minimax, \
    phase_grid
from .scalar_huber import ContaminationModel, classical_minimax
from .state_evolution import FixedLambda, FloatingKappa, SEConfig, T_map, fixed_point

TABLE1_EPS = (0.05, 0.10, 0.15, 0.175, 0.1875, 0.20, 0.25)
TABLE2_EPS = (0.05, 0.1875)
TABLE2_MU = (2.0, 5.0, 10.0, 20.0, 100.0)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers

def _float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v):
        raise argparse.ArgumentTypeError("nan is not allowed")
    return v


def _float_list(text):
    return [_float(t) for t in text.split(",") if t.strip()]


def _grid(text):
    try:
        a, b = text.lower().split("x")
        a, b = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 200x200, got {text!r}") from None
    if a < 2 or b < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points per axis")
    return a, b


def _noise(eps, mu):
    if eps == 0:
        return ContaminationModel.gaussian()
    if mu is None:
        raise UsageError("--mu is required when --eps > 0")
    return ContaminationModel.two_point(eps, mu)


def _one(values, name):
    if len(values) != 1:
        raise UsageError(f"{name} takes a single value here")
    return values[0]


# ---------------------------------------------------------------------------
# subcommands; each returns (columns, rows)

def cmd_classical(a):
    rows = []
    for e in a.eps:
        c = classical_minimax(e)
        rows.append((e, c.kappa_star, c.i_star, c.v_star))
    return ("eps", "kappa_star", "i_star", "v_star"), rows


def _minimax_row(m, e):
    s = minimax(m, e)
    return (m, e, s.kappa_star, s.i_star, s.v_star, s.kappa_underline_star, s.lambda_star,
            s.V_star, s.breakdown)


_MINIMAX_COLS = ("m", "eps", "kappa_star", "i_star", "v_star", "kappa_underline_star",
                 "lambda_star", "V_star", "breakdown")


def cmd_minimax(a):
    return _MINIMAX_COLS, [_minimax_row(m, e) for m in a.m for e in a.eps]


def cmd_table1(a):
    return _MINIMAX_COLS, [_minimax_row(_one(a.m, "--m"), e) for e in a.eps]


def cmd_breakdown(a):
    return ("m", "eps_star"), [(m, breakdown_epsilon(m)) for m in a.m]


def cmd_phase(a):
    ne, nm = a.grid
    eps = np.arange(1, ne) * (a.eps_max / ne)
    inv_m = np.arange(1, nm) / nm
    g = phase_grid(a.quantity, eps, inv_m, curve_points=a.curve_points)
    rows = []
    for i, x in enumerate(inv_m):
        for j, e in enumerate(eps):
            rows.append(("cell", e, x, g.values[i, j], bool(g.bounded[i, j])))
    for e, x in zip(g.curve_eps, g.curve_inv_m):
        rows.append(("curve", e, x, None, None))
    return ("kind", "eps", "inv_m", a.quantity, "bounded"), rows


def cmd_semaps(a):
    m, e = _one(a.m, "--m"), _one(a.eps, "--eps")
    kappa = a.kappa
    if kappa is None:
        s = minimax(m, e)
        if s.breakdown:
            raise UsageError("(m, eps) is in the breakdown phase; pass --kappa")
        kappa = s.kappa_underline_star
    taus = np.linspace(0.0, a.tau_max, a.points)
    rows = [("identity", None, t, t) for t in taus]
    if 1.0 - e > 1.0 / m:
        lp = LFSEParams(m, e, kappa)
        rows += [("lfse", None, t, lfse_T(t, lp)) for t in taus]
    mus = a.mu or []
    for mu in mus:
        cfg = SEConfig(m, FloatingKappa(kappa), _noise(e, mu), tol=a.tol)
        rows += [("proper", mu, t, T_map(t, cfg)) for t in taus]
    return ("curve", "mu", "tau_sq", "T"), rows


def cmd_lambda_mono(a):
    rows = []
    for m in a.m:
        for e in a.eps:
            kp = kappa_plus(m, e)
            top = kp if math.isfinite(kp) else 10.0
            ks = top * np.arange(1, a.points + 1) / (a.points + 1)
            lb = np.array([lambda_bar(k, m, e) for k in ks])
            inc = bool(np.all(np.diff(lb) > 0))
            rows += [(m, e, k, v, kp, inc) for k, v in zip(ks, lb)]
    return ("m", "eps", "kappa", "lambda_bar", "kappa_plus", "increasing"), rows


def _lam_for(a, m, e):
    if a.lam is not None:
        return a.lam
    s = minimax(m, e)
    if s.breakdown:
        raise UsageError("no minimax lambda in the breakdown phase; pass --lambda")
    return s.lambda_star


def cmd_table2(a):
    m = a.n / a.p
    rows = []
    for e in a.eps:
        lam = _lam_for(a, m, e)
        for mu in a.mu or TABLE2_MU:
            noise = _noise(e, mu)
            s = monte_carlo(a.n, a.p, noise, lam, reps=a.reps, seed=a.seed, workers=a.workers)
            fp = fixed_point(SEConfig(m, FixedLambda(lam), noise, tol=a.tol))
            rows.append((e, mu, lam, s.se_estimate, s.se_std_error, fp.sqrt_avar, s.reps,
                         s.failures))
    return ("eps", "mu", "lambda", "se_estimate", "se_mc_error", "se_state_evolution", "reps",
            "failures"), rows


def cmd_monte_carlo(a):
    e, mu = _one(a.eps, "--eps"), _one(a.mu or [None], "--mu")
    lam = _lam_for(a, a.n / a.p, e)
    s = monte_carlo(a.n, a.p, _noise(e, mu), lam, reps=a.reps, seed=a.seed, solver=a.solver,
                    workers=a.workers)
    return ("eps", "mu", "lambda", "reps", "per_coordinate_mse", "mc_std_error", "se_estimate",
            "failures"), [(e, mu, lam, s.reps, s.per_coordinate_mse, s.mc_std_error,
                           s.se_estimate, s.failures)]


def cmd_amp_run(a):
    e, mu = _one(a.eps, "--eps"), _one(a.mu or [None], "--mu")
    if a.data:
        d = read_dataset_csv(a.data)
    else:
        d = gen_dataset(a.n, a.p, _noise(e, mu), a.seed)
    if a.save_data:
        write_dataset_csv(a.save_data, d)
    lam = _lam_for(a, d.m, e)
    rows = []
    known = bool(np.all(np.isfinite(d.theta0)))
    if a.solver in ("amp", "both"):
        st = amp_fit(d, lam, tol=a.tol)
        mse = float(np.mean((st.theta - d.theta0) ** 2)) if known else None
        rows.append(("amp", lam, st.t, st.converged, huber_objective(d.X, d.Y, st.theta, lam),
                     mse))
    if a.solver in ("irls", "both"):
        th, info = irls_fit(d, lam, return_info=True)
        mse = float(np.mean((th - d.theta0) ** 2)) if known else None
        rows.append(("irls", lam, info["iterations"], True, huber_objective(d.X, d.Y, th, lam),
                     mse))
    return ("solver", "lambda", "iterations", "converged", "objective", "per_coordinate_mse"), rows


# ---------------------------------------------------------------------------
# output

def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _json_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(columns, rows, runspec, fmt):
    if fmt == "json":
        doc = {
            "runspec": runspec,
            "columns": list(columns),
            "rows": [{c: _json_cell(v) for c, v in zip(columns, r)} for r in rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    lines = ["# runspec: " + json.dumps(runspec, sort_keys=True), ",".join(columns)]
    lines += [",".join(_csv_cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------

COMMANDS = {
    "classical": cmd_classical,
    "minimax": cmd_minimax,
    "breakdown": cmd_breakdown,
    "phase": cmd_phase,
    "semaps": cmd_semaps,
    "lambda-mono": cmd_lambda_mono,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "amp-run": cmd_amp_run,
    "monte-carlo": cmd_monte_carlo,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol", type=_float, default=1e-10,
                        help="state evolution / AMP tolerance")
    common.add_argument("--seed", type=int, default=20240101)

    p = argparse.ArgumentParser(prog="huber-minimax",
                                description="Minimax Huber regression when n/p -> m.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help, m=None, eps=None, mu=None):
        sp = sub.add_parser(name, help=help, parents=[common])
        if m is not None:
            sp.add_argument("--m", type=_float_list, default=m, help="comma-separated")
        if eps is not None:
            sp.add_argument("--eps", type=_float_list, default=eps, help="comma-separated")
        if mu is not None:
            sp.add_argument("--mu", type=_float_list, default=mu, help="comma-separated")
        return sp

    add("classical", "scalar minimax quantities (kappa*, i*, v*)",
        eps=[0.0, 0.01, 0.05, 0.1, 0.1924, 0.25])
    add("minimax", "minimax tuning and variance at (m, eps)", m=[2.0], eps=[0.05])
    add("breakdown", "breakdown contamination level for each m", m=[2.0])
    sp = add("phase", "minimax quantity on an (eps, 1/m) grid plus the critical curve")
    sp.add_argument("--quantity", choices=("Vstar", "KappaStar", "LambdaStar"), default="Vstar")
    sp.add_argument("--grid", type=_grid, default=(200, 200), help="EPSxINVM point counts")
    sp.add_argument("--eps-max", type=_float, default=0.5)
    sp.add_argument("--curve-points", type=int, default=512)
    sp = add("semaps", "state evolution variance maps vs the least-favorable line",
             m=[5.0], eps=[0.05], mu=[2.0, 5.0, 7.5, 10.0])
    sp.add_argument("--kappa", type=_float, default=None,
                    help="floating threshold (default: minimax kappa)")
    sp.add_argument("--tau-max", type=_float, default=10.0)
    sp.add_argument("--points", type=int, default=51)
    sp = add("lambda-mono", "least-favorable calibration curves kappa -> lambda_bar",
             m=[2.0, 5.0, 10.0, 20.0], eps=[0.01, 0.02, 0.05, 0.10])
    sp.add_argument("--points", type=int, default=200)
    add("table1", "worst-case variance of minimax-tuned Huber at one m",
        m=[2.0], eps=list(TABLE1_EPS))
    for name, help in (("table2", "Monte Carlo standard errors of minimax-tuned Huber"),
                       ("monte-carlo", "Monte Carlo per-coordinate MSE at one setting"),
                       ("amp-run", "fit one synthetic dataset with AMP and/or IRLS")):
        sp = add(name, help, eps=list(TABLE2_EPS) if name == "table2" else [0.05],
                 mu=None if name == "table2" else [5.0])
        if name == "table2":
            sp.add_argument("--mu", type=_float_list, default=None, help="comma-separated")
        sp.add_argument("--n", type=int, default=500 if name != "amp-run" else 200)
        sp.add_argument("--p", type=int, default=250 if name != "amp-run" else 50)
        sp.add_argument("--lambda", dest="lam", type=_float, default=None,
                        help="Huber threshold (default: minimax lambda at m = n/p)")
        if name != "amp-run":
            sp.add_argument("--reps", type=int, default=200)
            sp.add_argument("--workers", type=int, default=1)
        if name == "monte-carlo":
            sp.add_argument("--solver", choices=("irls", "amp"), default="irls")
        if name == "amp-run":
            sp.add_argument("--solver", choices=("amp", "irls", "both"), default="both")
            sp.add_argument("--data", help="read y,x_1..x_p CSV instead of simulating")
            sp.add_argument("--save-data", help="write the dataset as CSV")
    return p


def _validate(a):
    for name in ("m",):
        for v in getattr(a, name, None) or []:
            if not v > 1:
                raise UsageError(f"--m values must exceed 1, got {v}")
    for v in getattr(a, "eps", None) or []:
        if not 0 <= v < 1:
            raise UsageError(f"--eps values must lie in [0, 1), got {v}")
    for v in getattr(a, "mu", None) or []:
        if not (v > 0 and math.isfinite(v)):
            raise UsageError(f"--mu values must be positive and finite, got {v}")
    if getattr(a, "lam", None) is not None and not a.lam > 0:
        raise UsageError("--lambda must be positive")
    if getattr(a, "kappa", None) is not None and not (a.kappa > 0 and math.isfinite(a.kappa)):
        raise UsageError("--kappa must be positive and finite")
    if not a.tol > 0:
        raise UsageError("--tol must be positive")
    if getattr(a, "reps", 1) < 1:
        raise UsageError("--reps must be at least 1")
    if hasattr(a, "n") and not a.n > a.p >= 1:
        raise UsageError("need --n > --p >= 1")
    if getattr(a, "points", 2) < 2:
        raise UsageError("--points must be at least 2")
    if getattr(a, "eps_max", 0.5) <= 0 or getattr(a, "eps_max", 0.5) >= 1:
        raise UsageError("--eps-max must lie in (0, 1)")


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    runspec = {"command": a.command,
               "parameters": {k: v for k, v in sorted(vars(a).items())
                              if k not in ("command", "out", "format")},
               "format": a.format, "version": __version__}
    try:
        _validate(a)
        columns, rows = COMMANDS[a.command](a)
    except (UsageError, DomainError) as exc:
        print(f"huber-minimax {a.command}: invalid arguments: {exc}", file=sys.stderr)
        return 2
    except (HuberMinimaxError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"huber-minimax {a.command}: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    text = render(columns, rows, runspec, a.format)
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
