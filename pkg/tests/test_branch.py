import numpy as np
import pytest
from scipy.integrate import quad

from nodal_lab.continuation.branch import (
    circle_log_integral,
    fourier_coefficients,
    fourier_primitive,
    g_identity,
    log_branch,
    log_integral,
    path_integral,
)
from nodal_lab.errors import BranchMismatchError, DiagonalSingularityError
from nodal_lab.geometry import ellipse, unit_circle

B = 0.7


def ellipse_r2(s, t):
    """(q(s) - q(t)) (q*(s) - q*(t)) for q = cos + i B sin, written out directly."""
    qs, qt = np.cos(s) + 1j * B * np.sin(s), np.cos(t) + 1j * B * np.sin(t)
    ps, pt = np.cos(s) - 1j * B * np.sin(s), np.cos(t) - 1j * B * np.sin(t)
    return (qs - qt) * (ps - pt)


def test_imaginary_part_limits_from_above():
    t = 2.0 + 1e-9j
    s = np.array([0.3, 1.0, 1.9, 2.1, 3.5, 6.0])
    im = log_branch(unit_circle(), s, t).value.imag
    assert np.allclose(im[s < 2.0], -2 * np.pi, atol=1e-6)
    assert np.allclose(im[s > 2.0], 0.0, atol=1e-6)


def test_imaginary_part_limits_from_below():
    t = 2.0 - 1e-9j
    s = np.array([0.3, 1.9, 2.1, 6.0])
    im = log_branch(unit_circle(), s, t).value.imag
    # the conjugate branch: L(s, conj t) = conj L(s, t) on real s
    assert np.allclose(im[s < 2.0], 2 * np.pi, atol=1e-6)
    assert np.allclose(im[s > 2.0], 0.0, atol=1e-6)


def test_exponential_of_branch_is_r_squared_on_grid():
    curve = ellipse(B)
    s = 2 * np.pi * (np.arange(64) + 0.5) / 64
    worst = 0.0
    for re in np.linspace(0.1, 6.1, 4):
        for im in (-0.3, -0.1, -0.02, 0.02, 0.1, 0.3):
            t = complex(re, im)
            val = np.exp(log_branch(curve, s, t).value)
            ref = ellipse_r2(s, t)
            worst = max(worst, np.max(np.abs(val - ref) / np.abs(ref)))
    assert worst < 1e-12


def test_diagonal_is_rejected_on_the_real_axis():
    with pytest.raises(DiagonalSingularityError):
        log_branch(unit_circle(), np.array([1.0]), 1.0)


@pytest.mark.parametrize("t", [0.4 + 0.2j, 3.0 - 0.3j, 5.5 + 0.05j, 1.0])
def test_constant_function_on_circle_gives_zero(t):
    assert abs(g_identity(unit_circle(), t)) < 1e-12
    res = log_integral(unit_circle(), lambda s: np.ones_like(s), t)
    assert abs(res.value) < 1e-12


@pytest.mark.parametrize("t", [0.7, 2.9, 5.0])
def test_real_t_matches_direct_quadrature(t):
    def f(s):
        return np.cos(2 * s) + 0.3 + 0.2 * np.sin(5 * s)

    def integrand(s):
        return f(s) * np.log(abs(ellipse_r2(s, t)))

    ref = quad(integrand, 0, t, limit=200, epsabs=1e-13)[0] + quad(integrand, t, 2 * np.pi, limit=200, epsabs=1e-13)[0]
    res = log_integral(ellipse(B), f, t)
    assert abs(res.value - ref) < 1e-9
    assert abs(res.value.imag) < 1e-9


def test_single_exponential_closed_form_and_dual_agreement():
    # on the unit circle int e^{is} log|e^{is} - e^{it}|^2 ds = -2 pi e^{it}
    t = 0.5 + 0.1j
    res = log_integral(unit_circle(), lambda s: np.exp(1j * s), t)
    assert res.discrepancy < 1e-9
    assert abs(res.value + 2 * np.pi * np.exp(1j * t)) < 1e-9


def test_dual_agreement_on_ellipse_across_the_strip():
    f = lambda s: np.exp(np.cos(s)) * np.sin(3 * s)  # noqa: E731
    for t in (1.2 + 0.15j, 4.0 - 0.2j, 0.05 + 0.3j):
        res = log_integral(ellipse(B), f, t)
        assert res.discrepancy < 1e-9


def test_mismatch_raises_when_strict():
    # a non-holomorphic "f" breaks the vertical continuation of the branch form
    f = lambda s: np.abs(np.sin(s)) + 0j  # noqa: E731
    with pytest.raises(BranchMismatchError):
        log_integral(unit_circle(), f, 1.0 + 0.3j)
    assert log_integral(unit_circle(), f, 1.0 + 0.3j, strict=False).discrepancy > 1e-8


def test_spectral_helpers():
    n = 32
    s = 2 * np.pi * np.arange(n) / n
    fhat = fourier_coefficients(np.cos(3 * s) + 2.0)
    x = 0.7 + 0.2j
    assert abs(fourier_primitive(fhat, x)[0] - (np.sin(3 * x) / 3 + 2 * x)) < 1e-13
    assert abs(path_integral(lambda z: np.cos(3 * z) + 2.0, x) - (np.sin(3 * x) / 3 + 2 * x)) < 1e-13
    # a constant has no circle-log contribution beyond the linear term cancelled by 2 pi i t
    zero = circle_log_integral(fourier_coefficients(np.ones(n)), x)[0] + 2j * np.pi * x
    assert abs(zero) < 1e-12
