import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import cumulative_trapezoid, quad

import searchgap as sg
from searchgap.equilibrium import EquilibriumError
from searchgap.params import ReservationWageDist

from conftest import MIGRANTS, NATIVES, U_MIGRANTS, U_NATIVES


# ---------------------------------------------------------------------------
# lowest wage
# ---------------------------------------------------------------------------

def brute_force_lowest_wage(p_min, res, n=1_000_000):
    """Independent oracle: dense scan of the monopsony surplus."""
    w = np.linspace(res.mu - 8 * res.sigma, p_min, n)
    surplus = (p_min - w) * res.cdf(w)
    return w[np.argmax(surplus)]


@pytest.mark.parametrize("p_min,mu,sigma", [(50.0, 60.0, 10.0), (40.0, 45.0, 10.0)])
def test_lowest_wage_matches_brute_force(p_min, mu, sigma):
    res = ReservationWageDist(mu, sigma)
    w_low = sg.lowest_wage(p_min, res)
    assert abs(w_low - brute_force_lowest_wage(p_min, res)) < 1e-3


def test_lowest_wage_degenerate_far_below():
    res = ReservationWageDist(-1e6, 1.0)
    w_low = sg.lowest_wage(50.0, res)
    # surplus is maximal just above the reservation-wage mass
    assert -1e6 < w_low < -1e6 + 10.0
    surplus = (50.0 - w_low) * res.cdf(w_low)
    for shift in (-0.5, 0.5):
        assert surplus >= (50.0 - w_low - shift) * res.cdf(w_low + shift)


def test_lowest_wage_rejects_unreachable_reservations():
    with pytest.raises(EquilibriumError):
        sg.lowest_wage(50.0, ReservationWageDist(200.0, 5.0))


# ---------------------------------------------------------------------------
# wage-offer curve
# ---------------------------------------------------------------------------

def test_curve_below_productivity_and_increasing(natives_eq):
    curve = natives_eq.curve
    assert np.all(np.diff(curve.w) > 0)
    assert np.all(curve.w <= curve.p)


def test_curve_residual_small(natives_eq, migrants_eq):
    for eq, params in [(natives_eq, NATIVES), (migrants_eq, MIGRANTS)]:
        assert sg.wage_curve_residual(params, eq.curve).max() < 1e-4


def fixed_point_curve(params, p):
    """Independent oracle: damped Jacobi iteration of the discretised curve
    equation (the marching solver solves the same triangular system)."""
    res = params.reservation
    k = params.frictions.k
    sf = params.productivity.sf(p)
    sf[0] = 1.0
    sq = (1.0 + k * sf) ** 2
    w_low = sg.lowest_wage(params.productivity.p_min, res)
    head = (p[0] - w_low) / (1.0 + k) ** 2 * float(res.cdf(w_low))
    K = p.copy()
    for _ in range(20000):
        hk = np.asarray(res.cdf(K), dtype=float)
        integral = head + cumulative_trapezoid(hk / sq, p, initial=0.0)
        K_new = p - integral * sq / hk
        K_new[0] = w_low
        step = np.max(np.abs(K_new - K))
        K = 0.5 * K + 0.5 * K_new
        if step < 1e-13:
            break
    return K


def test_curve_matches_fixed_point_oracle_on_coarse_grid():
    p = np.geomspace(NATIVES.productivity.p_min, NATIVES.productivity.p_cut, 5)
    oracle = fixed_point_curve(NATIVES, p)
    k = NATIVES.frictions.k
    sf = NATIVES.productivity.sf(p)
    sf[0] = 1.0
    sq = (1.0 + k * sf) ** 2
    from searchgap._backend import kernels
    w_low = sg.lowest_wage(NATIVES.productivity.p_min, NATIVES.reservation)
    marched = kernels.march_wage_curve(p, sq, k, NATIVES.reservation.mu,
                                       NATIVES.reservation.sigma, w_low)
    assert np.max(np.abs(marched / oracle - 1.0)) < 1e-4


def test_curve_deterministic():
    a = sg.solve_wage_offer_curve(NATIVES)
    b = sg.solve_wage_offer_curve(NATIVES)
    assert np.array_equal(a.w, b.w) and np.array_equal(a.p, b.p)


def test_curve_comparative_statics():
    base = sg.solve_wage_offer_curve(NATIVES).w
    for factor in (1.5, 2.5, 4.0):
        higher_lam = sg.solve_wage_offer_curve(
            NATIVES.replace_values(lam=NATIVES.frictions.lam * factor)
        ).w
        assert np.all(higher_lam >= base - 1e-9)
        lower_delta = sg.solve_wage_offer_curve(
            NATIVES.replace_values(delta=NATIVES.frictions.delta * factor)
        ).w
        assert np.all(lower_delta <= base + 1e-9)


def test_forward_solve_requires_productivity():
    bare = sg.SegmentParams.from_values(lam=0.07, delta=0.005, mu=60, sigma=10)
    with pytest.raises(Exception):
        sg.solve_wage_offer_curve(bare)


# ---------------------------------------------------------------------------
# unemployment rate
# ---------------------------------------------------------------------------

def test_unemployment_matches_published_values(natives_eq, migrants_eq):
    assert natives_eq.u == pytest.approx(U_NATIVES, abs=1e-3)
    assert migrants_eq.u == pytest.approx(U_MIGRANTS, abs=1e-3)


def test_unemployment_degenerate_reservations():
    # every worker accepts everything: u = delta / (delta + lam)
    for sigma in (0.0, 1.0):
        params = sg.SegmentParams.from_values(lam=0.07, delta=0.005,
                                              mu=-1e6 if sigma else 30.0,
                                              sigma=sigma, p_min=50, alpha=2.1)
        eq = sg.solve_equilibrium(params)
        assert eq.u == pytest.approx(1.0 / 15.0, abs=1e-9)


# ---------------------------------------------------------------------------
# realised wage distribution
# ---------------------------------------------------------------------------

def test_actual_wage_cdf_shape(natives_eq):
    G, g, w = natives_eq.accepted.cdf, natives_eq.accepted.pdf, natives_eq.w
    assert G[0] == pytest.approx(0.0, abs=1e-12)
    assert G[-1] == pytest.approx(1.0, abs=2e-3)  # q_max tail holds the rest
    assert np.all(np.diff(G) >= -1e-12)
    assert np.all(g >= 0.0)
    mean = np.trapezoid(w * g, w)
    spread = np.sqrt(np.trapezoid((w - mean) ** 2 * g, w))
    skewness = np.trapezoid((w - mean) ** 3 * g, w) / spread**3
    assert skewness > 0.5  # right-tailed, like observed wage data


def test_vanishing_frictions_dominate(natives_eq):
    frictionless = sg.solve_equilibrium(
        NATIVES.replace_values(lam=1.0, delta=1e-6), grid_size=2000
    )
    w = natives_eq.w[natives_eq.w < frictionless.w_high]
    big_k = np.asarray(frictionless.accepted.cdf_at(w)) / frictionless.accepted.cdf[-1]
    small_k = np.asarray(natives_eq.accepted.cdf_at(w)) / natives_eq.accepted.cdf[-1]
    assert np.all(big_k <= small_k + 1e-6)


# ---------------------------------------------------------------------------
# inverse route
# ---------------------------------------------------------------------------

def test_inverse_round_trip(natives_eq, migrants_eq):
    for eq, params, u_target in [(natives_eq, NATIVES, U_NATIVES),
                                 (migrants_eq, MIGRANTS, U_MIGRANTS)]:
        inv = sg.offer_cdf_from_wage_density(eq.w, eq.accepted.pdf,
                                             params.frictions, params.reservation)
        assert np.max(np.abs(inv.offer_sf - eq.curve.offer_sf)) < 1e-3
        assert inv.u == pytest.approx(eq.u, abs=1e-3)
        assert inv.u == pytest.approx(u_target, abs=2e-3)
        assert inv.offer_sf[0] == pytest.approx(1.0, abs=1e-12)
        assert inv.offer_sf[-1] == pytest.approx(0.0, abs=1e-12)


def test_inverse_degenerate_reservations():
    grid = np.linspace(50.0, 100.0, 200)
    density = np.full(grid.size, 1.0 / 50.0)
    inv = sg.offer_cdf_from_wage_density(
        grid, density, sg.FrictionParams(0.07, 0.005), ReservationWageDist(30.0, 0.0)
    )
    assert inv.u == pytest.approx(1.0 / 15.0, abs=1e-12)


def test_inverse_rejects_inconsistent_reservations():
    grid = np.linspace(50.0, 100.0, 200)
    density = np.full(grid.size, 1.0 / 50.0)
    with pytest.raises(EquilibriumError, match="H underflow"):
        sg.offer_cdf_from_wage_density(
            grid, density, sg.FrictionParams(0.07, 0.005),
            ReservationWageDist(600.0, 10.0),
        )


def test_two_route_unemployment_consistency(natives_eq, migrants_eq):
    for eq, params in [(natives_eq, NATIVES), (migrants_eq, MIGRANTS)]:
        inv = sg.offer_cdf_from_wage_density(eq.w, eq.accepted.pdf,
                                             params.frictions, params.reservation)
        assert abs(inv.u - eq.u) < 1e-4


# ---------------------------------------------------------------------------
# productivity recovery
# ---------------------------------------------------------------------------

def test_productivity_margin_nonnegative(natives_eq):
    eq = natives_eq
    p_rec = sg.productivity_from_wage(eq.w[1:], eq.accepted.pdf[1:],
                                      NATIVES.reservation,
                                      eq.curve.offer_sf[1:], eq.u,
                                      NATIVES.frictions.k)
    assert np.all(p_rec >= eq.w[1:])
    assert np.all(np.isfinite(p_rec))


@pytest.mark.parametrize("params,eq_fixture", [(NATIVES, "natives_eq"),
                                               (MIGRANTS, "migrants_eq")])
def test_recovered_productivity_tail_slope(params, eq_fixture, request):
    from searchgap.decompose import pareto_shape_from_log_density

    eq = request.getfixturevalue(eq_fixture)
    inv = sg.offer_cdf_from_wage_density(eq.w, eq.accepted.pdf,
                                         params.frictions, params.reservation)
    p_rec = sg.productivity_from_wage(eq.w[1:], eq.accepted.pdf[1:],
                                      params.reservation, inv.offer_sf[1:],
                                      inv.u, params.frictions.k)
    dens = inv.offer_pdf[1:] / np.gradient(p_rec, eq.w[1:])
    alpha_hat = pareto_shape_from_log_density(p_rec, dens)
    assert alpha_hat == pytest.approx(2.1, abs=0.15)


def test_productivity_reports_vanishing_densities():
    with pytest.raises(EquilibriumError, match="vanish"):
        sg.productivity_from_wage(np.array([60.0]), np.array([0.0]),
                                  ReservationWageDist(30.0, 0.0),
                                  np.array([0.5]), 0.1, 14.0)


# ---------------------------------------------------------------------------
# unemployed pool
# ---------------------------------------------------------------------------

def test_pool_degenerate_point_mass():
    params = sg.SegmentParams.from_values(lam=0.07, delta=0.005, mu=30.0,
                                          sigma=0.0, p_min=50, alpha=2.1)
    eq = sg.solve_equilibrium(params)
    assert eq.pool.mass_below == pytest.approx(1.0 / 15.0, abs=1e-12)
    assert eq.pool.cum[-1] == pytest.approx(0.0, abs=1e-12)


def test_pool_matches_quadrature_oracle(natives_eq):
    eq = natives_eq
    res, k = NATIVES.reservation, NATIVES.frictions.k
    for b in (50.0, 70.0, 90.0, 150.0):
        oracle, _ = quad(
            lambda x: res.pdf(x) / (1.0 + k * float(eq.curve.offer_sf_at(x))),
            eq.w_low, b, limit=200,
        )
        oracle += float(res.cdf(eq.w_low)) / (1.0 + k)
        assert eq.pool.scaled_cdf_at(b) == pytest.approx(oracle, abs=5e-6)


def test_pool_overrepresents_patient_workers(natives_eq):
    # exit speed falls with b, so the pool CDF lies below the truncated H
    eq = natives_eq
    res = NATIVES.reservation
    b = np.linspace(eq.w_low, eq.w_high, 100)
    pool_cdf = np.asarray(eq.pool.scaled_cdf_at(b)) / eq.pool.employable_mass
    trunc_h = np.asarray(res.cdf(b)) / float(res.cdf(eq.w_high))
    assert np.all(pool_cdf <= trunc_h + 1e-9)


def test_pool_mass_balance(natives_eq, migrants_eq):
    for eq in (natives_eq, migrants_eq):
        assert eq.pool.total_mass == pytest.approx(eq.u, abs=1e-9)


# ---------------------------------------------------------------------------
# property sweep
# ---------------------------------------------------------------------------

segment_strategy = st.builds(
    dict,
    lam=st.floats(0.02, 0.3),
    delta=st.floats(0.002, 0.03),
    sigma=st.floats(2.0, 15.0),
    mu_offset=st.floats(-3.0, 2.0),  # mu = p_min + offset * sigma
    p_min=st.floats(20.0, 100.0),
    alpha=st.floats(1.3, 3.5),
)


@settings(max_examples=25, deadline=None)
@given(segment_strategy)
def test_equilibrium_properties_for_random_segments(draw):
    params = sg.SegmentParams.from_values(
        lam=draw["lam"], delta=draw["delta"],
        mu=draw["p_min"] + draw["mu_offset"] * draw["sigma"],
        sigma=draw["sigma"], p_min=draw["p_min"], alpha=draw["alpha"],
        q_max=1.0 - 1e-6,
    )
    try:
        eq = sg.solve_equilibrium(params, grid_size=4000)
    except EquilibriumError:
        return  # reservation wages incompatible with the lowest firm
    assert np.all(np.diff(eq.w) > 0)
    assert np.all(eq.w <= eq.p)
    assert 0.0 < eq.u < 1.0
    assert sg.wage_curve_residual(params, eq.curve).max() < 1e-4
    inv = sg.offer_cdf_from_wage_density(eq.w, eq.accepted.pdf,
                                         params.frictions, params.reservation)
    assert abs(inv.u - eq.u) < 1e-4
