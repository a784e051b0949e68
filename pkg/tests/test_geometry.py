import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_lab.errors import (
    BranchUnsafeError,
    CurveError,
    DiagonalSingularityError,
    OutOfTubeError,
    ParseError,
)
from nodal_lab.geometry import (
    AnalyticCurve,
    AnnulusRegion,
    circle,
    cross_r_squared,
    divided_differences,
    ellipse,
    log_ratio,
    normal_log_derivative,
    principal_r,
    r2_times_normal_log_derivative,
    r_squared,
    read_curve,
    regular_normal_log_derivative,
    segment,
    target_normal_log_derivative,
    to_arclength,
    unit_circle,
    write_curve,
)


def bumpy():
    """A smooth non-circular curve with decaying coefficients (finite margin)."""
    return AnalyticCurve.from_modes({1: 1.0, -1: 0.1, 2: 0.02 + 0.01j, -3: 0.004, 4: 0.0008})


def test_unit_circle_evaluation():
    c = unit_circle()
    th = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(c.q(th), np.exp(1j * th), atol=1e-15)
    t = 0.7 + 0.2j
    assert abs(c.q(t) - np.exp(1j * 0.7 - 0.2)) < 1e-15
    assert abs(c.qstar(t) - np.exp(-1j * 0.7 + 0.2)) < 1e-15


def test_ellipse_coefficients():
    b = 0.6
    e = ellipse(b)
    s = np.linspace(0, 2 * np.pi, 50)
    assert np.max(np.abs(e.q(s) - (np.cos(s) + 1j * b * np.sin(s)))) < 1e-14


def test_qstar_symmetries():
    c = bumpy()
    s = np.linspace(0, 2 * np.pi, 40)
    assert np.max(np.abs(c.qstar(s) - np.conj(c.q(s)))) < 1e-14
    t = 0.3 + 0.1j
    assert abs(c.qstar(np.conj(t)) - np.conj(c.q(t))) < 1e-13


def test_r_squared_unit_circle_closed_form():
    c = unit_circle()
    s = np.linspace(0, 2 * np.pi, 17)
    t = 1.1 + 0.07j
    assert np.max(np.abs(r_squared(c, s, t) - 4 * np.sin((t - s) / 2) ** 2)) < 1e-12
    assert abs(r_squared(c, 0.4, 0.4)) == 0.0
    tt = np.linspace(0, 6, 13)
    assert np.max(np.abs(r_squared(c, s[:, None], tt[None, :]).imag)) < 1e-13


def test_principal_r_and_interior_separation():
    outer = unit_circle()
    inner = circle(0.5)
    s = np.linspace(0, 2 * np.pi, 64)[:, None]
    t = np.linspace(0, 2 * np.pi, 64)[None, :] + 1j * np.linspace(-0.1, 0.1, 5)[:, None, None]
    r2 = cross_r_squared(outer, inner, s, t)
    assert r2.real.min() > 0.2
    rng = np.random.default_rng(0)
    ss = rng.uniform(0, 2 * np.pi, 20)
    ts = rng.uniform(0, 2 * np.pi, 20) + 0.05j
    r = principal_r(bumpy(), ss, ts, floor=1e-6)
    assert np.max(np.abs(r**2 - r_squared(bumpy(), ss, ts))) < 1e-13
    with pytest.raises(BranchUnsafeError):
        principal_r(unit_circle(), np.array([0.0]), np.array([0.5j]), floor=0.0)


def test_normal_derivative_unit_circle():
    c = unit_circle()
    s = np.linspace(0.1, 6.0, 23)
    t = 2.0 + 0.05j
    # on the unit circle d/dn log r = -1/2 for the inward normal i q'(s)
    assert np.max(np.abs(normal_log_derivative(c, s, t) + 0.5)) < 1e-12
    assert np.max(np.abs(target_normal_log_derivative(c, s, t) + 0.5)) < 1e-12
    with pytest.raises(DiagonalSingularityError):
        normal_log_derivative(c, 1.0, 1.0)


def test_cauchy_kernel_singularity_is_simple_pole():
    c = bumpy()
    t = 1.3
    h = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    vals = c.dq(t + h) / (c.q(t + h) - c.q(t)) - 1 / h
    assert np.all(np.abs(vals) < 10)
    assert abs(vals[-1] - vals[-2]) < 1e-2


def test_large_circle_normal_derivative_tends_to_curvature():
    # on a circle of radius R, D = -1/(2R) times the speed R: the unit-normal value is -1/(2R)
    for R in (10.0, 100.0, 1000.0):
        c = circle(R)
        d = normal_log_derivative(c, np.array([0.3]), 0.31, unit=True)[0]
        assert abs(d + 1 / (2 * R)) < 1e-9 * R


def test_regular_kernels_near_diagonal():
    c = bumpy()
    t = 0.8 + 0.0j
    s = np.array([0.8 + 1e-9, 0.8 + 1e-5, 0.8 + 1e-2])
    d = regular_normal_log_derivative(c, s, np.full(3, t))
    assert np.all(np.isfinite(d))
    assert abs(d[0] - d[1]) < 1e-5
    dq, dqs = divided_differences(c, s, np.full(3, t))
    assert abs(dq[0] - c.dq(t)) < 1e-8
    assert np.all(np.isfinite(log_ratio(c, s, np.full(3, t))))
    # r^2 D is regular and matches r^2 times D away from the diagonal
    s2, t2 = 2.0, 0.5 + 0.03j
    lhs = r2_times_normal_log_derivative(c, s2, t2)
    assert abs(lhs - r_squared(c, s2, t2) * normal_log_derivative(c, s2, t2)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-0.1, 0.1), st.floats(0, 2 * np.pi))
def test_holomorphy_cauchy_riemann(x, y, s):
    c = bumpy()
    t = complex(x, y)
    h = 1e-5
    for fn in (lambda z: c.q(z), lambda z: r_squared(c, s, z)):
        dx = (fn(t + h) - fn(t - h)) / (2 * h)
        dy = (fn(t + 1j * h) - fn(t - 1j * h)) / (2 * h)
        assert abs(dy - 1j * dx) < 1e-8


def test_periodicity_and_rotation():
    c = bumpy()
    t = np.array([0.2 + 0.05j, 3.0 - 0.02j])
    assert np.max(np.abs(c.q(t + 2 * np.pi) - c.q(t))) < 1e-12
    assert np.max(np.abs(r_squared(c, 1.0, t + 2 * np.pi) - r_squared(c, 1.0, t))) < 1e-12
    s0 = 0.77
    assert np.max(np.abs(c.rotated(s0).q(t) - c.q(t + s0))) < 1e-13


def test_curve_validation():
    with pytest.raises(CurveError):
        AnalyticCurve.from_modes({-1: 1.0})  # clockwise
    with pytest.raises(CurveError):
        AnalyticCurve.from_modes({1: 1.0, 2: 1.0})  # figure-eight type self-intersection
    with pytest.raises(CurveError):
        AnalyticCurve(np.zeros(3))
    seg = segment(0.8, angle=np.pi / 5)
    assert np.min(np.abs(seg.dq(np.array([0.0, np.pi])))) < 1e-15


def test_margin_and_annulus():
    assert unit_circle().margin == np.inf
    m = bumpy().margin
    assert 0 < m < np.inf
    region = AnnulusRegion(0.5 * m, bumpy())
    assert region.contains(0.1j * m)
    with pytest.raises(OutOfTubeError):
        AnnulusRegion(2 * m, bumpy())
    with pytest.raises(OutOfTubeError):
        bumpy().q(3j * m)


def test_arclength_refit():
    e = ellipse(0.7)
    a = to_arclength(e)
    s = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    speed = np.abs(a.dq(s))
    assert np.ptp(speed) < 1e-8 * speed.mean()
    assert abs(a.length() - e.length()) < 1e-9


def test_from_samples_round_trip():
    c = bumpy()
    s = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    fitted = AnalyticCurve.from_samples(c.q(s))
    assert np.max(np.abs(fitted.q(s) - c.q(s))) < 1e-13


def test_curve_file_round_trip(tmp_path):
    c = bumpy()
    p = tmp_path / "c.txt"
    write_curve(c, p)
    back = read_curve(p)
    assert np.array_equal(back.coeffs, c.coeffs)
    bad = tmp_path / "bad.txt"
    bad.write_text("1\n1 x 0\n")
    with pytest.raises(ParseError):
        read_curve(bad)
    bad.write_text("1\n3 1 0\n")
    with pytest.raises(ParseError):
        read_curve(bad)
