import numpy as np
import pytest
from hypothesis import given, strategies as st

from searchgap.params import (
    FrictionParams,
    InvalidSegmentError,
    ParetoProductivity,
    ReservationWageDist,
    SegmentParams,
)


def test_friction_validation():
    assert FrictionParams(0.07, 0.005).k == pytest.approx(14.0)
    for lam, delta in [(-0.1, 0.005), (0.0, 0.005), (0.07, 0.0), (np.inf, 0.005)]:
        with pytest.raises(InvalidSegmentError):
            FrictionParams(lam, delta)


def test_reservation_normal_cdf_pdf():
    res = ReservationWageDist(60.0, 10.0)
    assert res.cdf(60.0) == pytest.approx(0.5)
    assert res.cdf(-1e9) == 0.0
    assert res.cdf(1e9) == 1.0
    assert res.pdf(60.0) == pytest.approx(1.0 / (10.0 * np.sqrt(2 * np.pi)))
    assert res.ppf(res.cdf(53.0)) == pytest.approx(53.0, abs=1e-9)


def test_reservation_degenerate_is_step():
    res = ReservationWageDist(30.0, 0.0)
    assert res.is_degenerate
    assert res.cdf(29.999) == 0.0
    assert res.cdf(30.0) == 1.0
    assert np.all(res.pdf(np.array([29.0, 30.0, 31.0])) == 0.0)
    assert res.ppf(0.3) == 30.0


@given(st.floats(-50, 150), st.floats(-50, 150))
def test_reservation_cdf_monotone(a, b):
    res = ReservationWageDist(60.0, 10.0)
    lo, hi = min(a, b), max(a, b)
    assert res.cdf(lo) <= res.cdf(hi)


def test_pareto_validation_and_shapes():
    with pytest.raises(InvalidSegmentError):
        ParetoProductivity(-1.0, 2.1)
    with pytest.raises(InvalidSegmentError):
        ParetoProductivity(50.0, 1.0)  # infinite mean
    prod = ParetoProductivity(50.0, 2.1)
    assert prod.cdf(50.0) == 0.0
    assert prod.cdf(25.0) == 0.0
    assert prod.ppf(prod.cdf(120.0)) == pytest.approx(120.0)
    assert prod.cdf(prod.p_cut) == pytest.approx(prod.q_max)
    p = np.geomspace(50.0, 5000.0, 200)
    dens = prod.pdf(p)
    mass = np.trapezoid(dens, p)
    assert mass == pytest.approx(prod.cdf(5000.0), rel=1e-3)


def test_segment_params_flat_access_and_replace():
    seg = SegmentParams.from_values(lam=0.07, delta=0.005, mu=60, sigma=10,
                                    p_min=50, alpha=2.1)
    assert seg.value_of("lam") == 0.07
    assert seg.value_of("p_min") == 50
    other = seg.replace_values(delta=0.016, mu=45.0)
    assert other.frictions.delta == 0.016
    assert other.reservation.mu == 45.0
    assert other.frictions.lam == 0.07
    assert seg.frictions.delta == 0.005  # original untouched
    with pytest.raises(InvalidSegmentError):
        seg.replace_values(nonsense=1.0)


def test_segment_requires_joint_productivity_args():
    with pytest.raises(InvalidSegmentError):
        SegmentParams.from_values(lam=0.1, delta=0.01, mu=50, sigma=5, p_min=40)
    with pytest.raises(InvalidSegmentError):
        SegmentParams.from_values(lam=0.1, delta=0.01, mu=50, sigma=5,
                                  wage_support=(10.0, 5.0))
