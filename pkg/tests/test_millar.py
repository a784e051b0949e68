import numpy as np
import pytest

from nodal_lab.continuation.millar import (
    MillarContinuation,
    growth_profile,
    neumann_series_solve,
    quadrature_size,
    richardson_profile,
    solve_volterra,
    volterra_solve,
)
from nodal_lab.ellipse import ellipse_mode
from nodal_lab.modes import DIRICHLET, NEUMANN, disc_mode


@pytest.fixture(scope="module")
def neumann6():
    mode = disc_mode(6, 1)
    return mode, MillarContinuation(mode)


@pytest.mark.parametrize(
    "mode",
    [disc_mode(4, 2, NEUMANN), disc_mode(3, 2, DIRICHLET, parity="cos"), ellipse_mode(0.6, ("sin", 3, 1))],
    ids=["disc-neumann", "disc-dirichlet", "ellipse"],
)
def test_restriction_to_real_axis(mode):
    t = np.random.default_rng(7).uniform(0, 2 * np.pi, 32)
    cont = MillarContinuation(mode)
    got = cont.rhs(t)
    ref = mode.trace(t).real
    assert np.max(np.abs(got - ref)) < 1e-7 * np.abs(mode.samples).max()
    assert np.max(np.abs(got.imag)) < 1e-9


@pytest.mark.parametrize("bc", [NEUMANN, DIRICHLET])
def test_disc_closed_form_off_axis(bc):
    mode = disc_mode(5, 1, bc)
    cont = MillarContinuation(mode)
    for t in (0.4 + 0.15j, 2.2 - 0.2j, 5.9 + 0.05j):
        res = volterra_solve(mode, t, cont=cont)
        assert res.converged
        assert abs(res.value - mode.trace(t)) < 1e-6 * max(1.0, abs(mode.trace(t)))


def test_periodicity_and_reflection(neumann6):
    mode, cont = neumann6
    t = 1.3 + 0.12j
    base = volterra_solve(mode, t, cont=cont).value
    assert abs(volterra_solve(mode, t + 2 * np.pi, cont=cont).value - base) < 1e-7
    assert abs(volterra_solve(mode, np.conj(t), cont=cont).value - np.conj(base)) < 1e-7


def test_cauchy_riemann(neumann6):
    mode, cont = neumann6
    t, h = 2.0 + 0.1j, 1e-4

    def u(z):
        return volterra_solve(mode, z, cont=cont).value

    dx = (u(t + h) - u(t - h)) / (2 * h)
    dy = (u(t + 1j * h) - u(t - 1j * h)) / (2 * h)
    assert abs(dy - 1j * dx) < 1e-5 * max(1.0, abs(dx))


def test_continuity_across_the_axis(neumann6):
    mode, cont = neumann6
    x, d = 0.9, 1e-6
    real = complex(cont.rhs(x)[0])
    up = volterra_solve(mode, x + 1j * d, cont=cont).value
    down = volterra_solve(mode, x - 1j * d, cont=cont).value
    # no jump: the mean matches the axis value and the difference is i 2d u'(x)
    assert abs(0.5 * (up + down) - real) < 1e-9
    slope = complex(cont.rhs(x + 1e-5)[0] - cont.rhs(x - 1e-5)[0]) / 2e-5
    assert abs((up - down) / (2j * d) - slope) < 1e-3 * abs(slope)


def test_model_kernel_against_exact_solution():
    # v = 1 + int_0^y e^{lam (y - s)} v(s) ds has v = 1 + (e^{(lam+1) y} - 1)/(lam + 1)
    lam, y_end, m0 = 3.0, 1.0, 16
    fine = 4 * m0
    y = y_end * np.arange(fine + 1) / fine
    kmat = np.exp(lam * (y[None, :] - y[:, None]))

    def solve(m):
        idx = np.arange(0, fine + 1, fine // m)
        return solve_volterra(kmat[np.ix_(idx, idx)], np.ones(idx.size), y_end / m, 1.0)

    vals, res = richardson_profile(solve, m0)
    exact = 1 + np.expm1((lam + 1) * y[::4]) / (lam + 1)
    assert np.max(np.abs(vals - exact) / exact) < 1e-8
    # plain trapezoid is only second order
    assert np.max(np.abs(solve(m0) - exact) / exact) > 1e-5


def test_neumann_series_reproduces_the_discrete_solve():
    rng = np.random.default_rng(1)
    m = 20
    kmat = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    g = rng.normal(size=m) + 0j
    h = 0.02
    direct = solve_volterra(kmat, g, h, -1.0)
    series = neumann_series_solve(kmat, g, h, -1.0, terms=30)
    assert np.max(np.abs(direct - series)) < 1e-12


def test_growth_rate_and_symmetric_envelope():
    mode = disc_mode(5, 1)
    prof = growth_profile(mode, 4 / 5, n_re=32)
    assert prof.converged
    # |sin(5 t)| grows like e^{5 |Im t|}
    assert abs(prof.slope - 5) < 0.05 * 5
    env = prof.max_log_mod
    assert np.all(env <= prof.slope * np.abs(prof.levels) + np.log(mode.lam) + 2)
    scale = np.abs(env).max()
    assert np.max(np.abs(env - env[::-1])) < 0.02 * scale


def test_quadrature_size_is_even_and_grows():
    assert quadrature_size(10.0) % 2 == 0
    assert quadrature_size(40.0) > quadrature_size(10.0)
    assert quadrature_size(10.0, scale=2.0) >= 2 * quadrature_size(10.0) - 1
