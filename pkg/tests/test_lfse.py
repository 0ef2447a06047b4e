import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from huber_minimax import ContaminationModel as CM
from huber_minimax import DomainError, FloatingKappa, NoSolution, SEConfig, fixed_point
from huber_minimax.lfse import (
    LFSEParams,
    breakdown_epsilon,
    critical_curve,
    kappa_plus,
    kappa_underline,
    kbb_of_kappa,
    lambda_bar,
    lambda_star,
    lfse_fixed_point,
    lfse_T,
    minimax,
    phase_grid,
    rbarbar_from_kbb,
    solve_rbarbar,
    suboptimality_ratio,
)
from huber_minimax.scalar_huber import b_bar, classical_minimax, v_bar

import oracles

BREAKDOWN_M2 = 0.19284483309


# ---------------------------------------------------------------------------
# r_bb and its inverse map


@pytest.mark.parametrize("m, eps, kappa", [(2.0, 0.05, 0.5), (5.0, 0.2, 1.0), (1.5, 0.0, 2.0)])
def test_solve_rbarbar_root(m, eps, kappa):
    r = solve_rbarbar(m, eps, kappa)
    assert r >= 1 / (m * (1 - eps) - 1)
    assert (r / (1 + r)) * b_bar(kappa * (1 + r), eps) == pytest.approx(1 / m, rel=1e-12)


def test_solve_rbarbar_limits():
    assert solve_rbarbar(3.0, 0.1, math.inf) == pytest.approx(1 / (3 * 0.9 - 1))
    with pytest.raises(NoSolution):
        solve_rbarbar(2.0, 0.5, 1.0)


@given(st.floats(1.3, 50), st.floats(0.0, 0.2), st.floats(0.05, 4))
def test_kappa_underline_inverts_kbb(m, eps, kappa):
    if m * (1 - eps) <= 1.05:
        return
    kbb = kbb_of_kappa(m, eps, kappa)
    assert rbarbar_from_kbb(kbb, m, eps) == pytest.approx(solve_rbarbar(m, eps, kappa), rel=1e-9)
    assert kappa_underline(kbb, m, eps) == pytest.approx(kappa, rel=1e-9)


def test_rbarbar_from_kbb_domain():
    # m (1-eps) b(kbb) <= 1 has no positive r_bb
    with pytest.raises(DomainError):
        rbarbar_from_kbb(0.1, 2.0, 0.05)
    assert kappa_underline(math.inf, 3.0, 0.1) == math.inf


# ---------------------------------------------------------------------------
# least-favorable map


@pytest.mark.parametrize("m, eps, kappa", [(2.0, 0.05, 0.52), (5.0, 0.1, 1.0)])
def test_lfse_equals_state_evolution_at_infinity(m, eps, kappa):
    lp = LFSEParams(m, eps, kappa)
    fp = fixed_point(SEConfig(m, FloatingKappa(kappa), CM.at_infinity(eps)))
    assert fp.tau_sq_inf == pytest.approx(lfse_fixed_point(lp), rel=1e-10)
    assert fp.r_inf == pytest.approx(solve_rbarbar(m, eps, kappa), rel=1e-10)


def test_lfse_unbounded_when_slope_exceeds_one():
    lp = LFSEParams(2.0, 0.25, 1.0)
    assert lfse_fixed_point(lp) == math.inf
    assert lfse_T(3.0, lp) > 3.0


@pytest.mark.parametrize("eps", [0.05, 0.15])
@pytest.mark.parametrize("m", [2.0, 5.0])
def test_saddlepoint(m, eps):
    sol = minimax(m, eps)
    ku = sol.kappa_underline_star
    # least-favorable risk at the minimax tuning equals V*
    assert m * lfse_fixed_point(LFSEParams(m, eps, ku)) == pytest.approx(sol.V_star, rel=1e-9)
    # any other tuning does worse against the least-favorable law
    for k in ku * np.array([0.5, 0.8, 0.95, 1.05, 1.25, 2.0]):
        assert m * lfse_fixed_point(LFSEParams(m, eps, k)) >= sol.V_star * (1 - 1e-12)
    # proper contamination at the minimax tuning does no worse than V*
    for mu in (1.0, 5.0, 50.0):
        fp = fixed_point(SEConfig(m, FloatingKappa(ku), CM.two_point(eps, mu)))
        assert fp.avar <= sol.V_star * (1 + 1e-9)


def test_lambda_star_example_values():
    assert lambda_star(2.0, 0.05) == pytest.approx(0.8528247, abs=1e-6)
    assert lambda_star(2.0, 0.1875) == pytest.approx(0.1147002, abs=1e-6)
    assert minimax(2.0, 0.05).kappa_underline_star == pytest.approx(0.52011, abs=1e-5)


# ---------------------------------------------------------------------------
# lambda_bar


@pytest.mark.parametrize("m, eps", [(2.0, 0.05), (5.0, 0.1), (10.0, 0.2)])
def test_lambda_bar_increasing_up_to_pole(m, eps):
    kp = kappa_plus(m, eps)
    ks = np.linspace(0.02, 0.999 * kp, 200)
    lb = np.array([lambda_bar(k, m, eps) for k in ks])
    assert np.all(np.isfinite(lb)) and np.all(np.diff(lb) > 0)
    assert np.all(lb > ks)
    assert lambda_bar(kp * 1.01, m, eps) == math.inf
    assert lambda_bar(kp * 0.99999, m, eps) > 20 * lambda_bar(0.5 * kp, m, eps)


def test_kappa_plus_root():
    m, eps = 2.0, 0.05
    kp = kappa_plus(m, eps)
    assert v_bar(kbb_of_kappa(m, eps, kp), eps) == pytest.approx(m, rel=1e-10)
    assert kappa_plus(2.0, 0.0) == math.inf
    with pytest.raises(DomainError):
        kappa_plus(2.0, 0.25)


def test_lambda_bar_tends_to_kappa_for_large_m():
    for k in (0.3, 1.0, 2.0):
        assert lambda_bar(k, 1e6, 0.05) == pytest.approx(k, rel=1e-5)


# ---------------------------------------------------------------------------
# minimax and the phase diagram


@pytest.mark.parametrize("eps", [0.0, 0.01, 0.05, 0.1])
def test_large_m_limit(eps):
    sol = minimax(1e8, eps)
    cm = classical_minimax(eps)
    assert sol.V_star == pytest.approx(cm.v_star, rel=1e-6)
    if eps > 0:
        assert sol.lambda_star == pytest.approx(cm.kappa_star, rel=1e-6)


def test_breakdown_phase():
    sol = minimax(2.0, 0.25)
    assert sol.breakdown and sol.V_star == math.inf
    assert sol.lambda_star is None and sol.kappa_underline_star is None


def test_breakdown_epsilon_m2():
    assert breakdown_epsilon(2.0) == pytest.approx(BREAKDOWN_M2, abs=1e-10)


@pytest.mark.parametrize("m", [1.5, 3.0, 10.0])
def test_breakdown_epsilon_oracle(m):
    assert breakdown_epsilon(m) == pytest.approx(oracles.breakdown_mp(m), abs=1e-9)


def test_breakdown_epsilon_limits():
    assert breakdown_epsilon(1.0 + 1e-6) < 1e-3
    e = [breakdown_epsilon(m) for m in (1.5, 2, 5, 20, 200, 2e4)]
    assert np.all(np.diff(e) > 0)
    assert e[-1] > 0.99


@pytest.mark.parametrize("m", [1.5, 2.0, 4.0])
def test_breakdown_separates_phases(m):
    e = breakdown_epsilon(m)
    assert not minimax(m, e * (1 - 1e-6)).breakdown
    assert minimax(m, e * (1 + 1e-6)).breakdown


def test_critical_curve_monotone():
    eps, inv_m = critical_curve(128, 0.5)
    assert inv_m[0] == pytest.approx(1.0)
    assert np.all(np.diff(inv_m) < 0)
    for e, x in zip(eps[1::16], inv_m[1::16]):
        assert breakdown_epsilon(1 / x) == pytest.approx(e, abs=1e-9)


def test_phase_grid_row_matches_scalar():
    eps = np.linspace(0, 0.3, 13)
    g = phase_grid("Vstar", eps, np.array([0.5]), curve_points=32)
    for j, e in enumerate(eps):
        assert g.values[0, j] == pytest.approx(minimax(2.0, e).V_star, rel=1e-12)
    assert not g.bounded[0, -1] and g.bounded[0, 0]


@pytest.mark.parametrize("q", ["KappaStar", "LambdaStar"])
def test_phase_grid_tunings(q):
    eps = np.array([0.0, 0.05, 0.1, 0.3])
    inv_m = np.array([0.1, 0.5])
    g = phase_grid(q, eps, inv_m, curve_points=16)
    assert np.all(np.isinf(g.values[:, 0]))
    assert np.isnan(g.values[1, -1])
    for i, x in enumerate(inv_m):
        for j in (1, 2):
            s = minimax(1 / x, eps[j])
            want = s.lambda_star if q == "LambdaStar" else s.kappa_underline_star
            assert g.values[i, j] == pytest.approx(want, rel=1e-10)


def test_phase_grid_corner_and_shrinking_threshold():
    g = phase_grid("Vstar", np.array([0.0]), np.array([0.0]), curve_points=8)
    assert g.values[0, 0] == pytest.approx(1.0)
    lam = phase_grid("LambdaStar", np.array([0.02, 0.05, 0.1, 0.15]), np.array([0.5]), 8).values[0]
    assert np.all(np.diff(lam) < 0)


def test_phase_grid_validation():
    with pytest.raises(DomainError):
        phase_grid("nope", [0.1], [0.5])
    with pytest.raises(DomainError):
        phase_grid("Vstar", [1.0], [0.5])


# ---------------------------------------------------------------------------
# suboptimality of the classical tuning


@given(st.floats(1.5, 100), st.floats(0.0, 0.1))
def test_suboptimality_ratio(m, eps):
    if minimax(m, eps).breakdown:
        return
    K = suboptimality_ratio(m, eps)
    cm = classical_minimax(eps)
    assert K >= 1 - 1e-12
    assert K * cm.v_star / (1 - 1 / m) == pytest.approx(minimax(m, eps).V_star, rel=1e-10)


def test_suboptimality_ratio_breakdown():
    with pytest.raises(DomainError):
        suboptimality_ratio(2.0, 0.25)
