import numpy as np
import pytest
from scipy.special import mathieu_a, mathieu_b

from nodal_lab.counting import real_boundary_zeros
from nodal_lab.ellipse import (
    angular_factor,
    disc_spectrum,
    ellipse_eigenvalue,
    ellipse_mode,
    ellipse_spectrum,
    separation_constant,
)
from nodal_lab.modes import DIRICHLET, NEUMANN, bessel_root


@pytest.mark.parametrize("parity,m", [("cos", 0), ("cos", 1), ("cos", 3), ("sin", 1), ("sin", 2), ("sin", 5)])
@pytest.mark.parametrize("c", [0.5, 2.0, 6.0])
def test_separation_constant_matches_mathieu_tables(parity, m, c):
    # G'' + (sigma - c^2 cos^2) G = 0 is Mathieu's equation with a = sigma - c^2/2, q = c^2/4
    q = c * c / 4
    ref = mathieu_a(m, q) if parity == "cos" else mathieu_b(m, q)
    assert abs(separation_constant(c, parity, m) - c * c / 2 - ref) < 1e-8 * max(1, abs(ref))


def test_nearly_circular_spectrum_tracks_disc():
    vals = [e.lam for e in ellipse_spectrum(0.05, 5)]
    disc = disc_spectrum(5)
    for v, d in zip(vals, disc):
        assert abs(v - d) / d < 0.01


def test_small_eccentricity_values():
    assert abs(ellipse_eigenvalue(0.05, "cos", 1, 1).lam - bessel_root(1, 1, "critical").value) < 0.01
    assert abs(ellipse_eigenvalue(0.05, "cos", 0, 1, DIRICHLET).lam - bessel_root(0, 1, "zero").value) < 0.01


@pytest.mark.parametrize("parity,m,n", [("cos", 2, 1), ("sin", 3, 2), ("cos", 0, 2)])
def test_angular_symmetry(parity, m, n):
    ev = ellipse_eigenvalue(0.6, parity, m, n)
    phi = np.linspace(0.01, np.pi / 2 - 0.01, 37)
    g = angular_factor(ev.sigma, 0.6 * ev.lam, parity, np.concatenate([phi, np.pi - phi, 2 * np.pi - phi]))
    a, b, c = np.split(g, 3)
    # ce_m(pi - phi) = (-1)^m ce_m(phi), se_m(pi - phi) = (-1)^(m+1) se_m(phi)
    sign = (-1) ** m if parity == "cos" else (-1) ** (m + 1)
    assert np.max(np.abs(b - sign * a)) < 1e-8
    assert np.max(np.abs(c - (1 if parity == "cos" else -1) * a)) < 1e-8


@pytest.mark.parametrize("bc", [NEUMANN, DIRICHLET])
@pytest.mark.parametrize("parity,m,n", [("cos", 2, 1), ("sin", 3, 1), ("cos", 4, 2)])
def test_sturm_count_of_boundary_zeros(bc, parity, m, n):
    mode = ellipse_mode(0.5, (parity, m, n), bc)
    assert abs(mode.norm() - 1) < 1e-9
    assert real_boundary_zeros(mode) == 2 * m


def test_radial_index_orders_eigenvalues():
    lams = [ellipse_eigenvalue(0.7, "sin", 2, n).lam for n in (1, 2, 3)]
    assert np.all(np.diff(lams) > 0)


def test_bouncing_ball_beam_is_exponentially_small_at_the_vertex():
    a = 0.8
    lams, logs = [], []
    for n in (4, 5, 6):
        mode = ellipse_mode(a, ("cos", 0, n))
        u = np.abs(mode.samples)
        # sample 0 is phi = 0, the end of the major axis
        assert u[0] / u.max() < 10 * np.exp(-mode.lam / 2)
        lams.append(mode.lam)
        logs.append(np.log(u[0] / u.max()))
    slopes = np.diff(logs) / np.diff(lams)
    assert np.all(slopes < 0)
    assert abs(slopes[1] - slopes[0]) < 0.05 * abs(slopes[0])


def test_input_validation():
    with pytest.raises(ValueError):
        ellipse_eigenvalue(1.2, "cos", 0, 1)
    with pytest.raises(ValueError):
        ellipse_eigenvalue(0.3, "sin", 0, 1)
    with pytest.raises(ValueError):
        ellipse_eigenvalue(0.3, "cos", 41, 1)
