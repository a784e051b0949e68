"""Ellipse eigenmodes by Prüfer-angle shooting on the separated Mathieu system.

In elliptic coordinates (x, y) = (a cosh rho cos phi, a sinh rho sin phi) the
ellipse x^2 + y^2 / (1 - a^2) = 1 is rho = rho_max = arccosh(1/a), and the
Helmholtz equation separates into

    G'' + (sigma - c^2 cos^2 phi) G = 0        (angular, 2 pi periodic)
    F'' + (c^2 cosh^2 rho - sigma) F = 0       (radial, on [0, rho_max])

with c = a lambda and sigma the separation constant. Regularity across the
focal segment rho = 0 forces F'(0) = 0 for even (ce) angular factors and
F(0) = 0 for odd (se) ones.

Both problems are solved with the Prüfer angle theta (y = R sin theta,
y' = R cos theta), which is monotone in the spectral parameter, so the k-th
eigenvalue is the unique solution of theta_end = target_k. The boundary
point with parameter phi is (cos phi, sqrt(1 - a^2) sin phi), which is the
parametrization of ``geometry.ellipse``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import IndexNotFoundError, ShootingDivergedError
from .geometry import ellipse
from .modes import DIRICHLET, NEUMANN, EigenMode, bessel_root, default_samples, normalized, parameter_grid

RTOL = 1e-10
ATOL = 1e-12
HALF_PI = 0.5 * np.pi


def _prufer_end(coef, x0, x1, theta0):
    """theta(x1) for theta' = cos^2 theta + coef(x) sin^2 theta."""

    def rhs(x, th):
        s = np.sin(th[0])
        return [1.0 - s * s + coef(x) * s * s]

    sol = solve_ivp(rhs, (x0, x1), [theta0], method="DOP853", rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise ShootingDivergedError(sol.message)
    return float(sol.y[0, -1])


# --- angular problem ------------------------------------------------------------

def _angular_target(parity, m):
    if parity == "cos":
        return HALF_PI, HALF_PI + m * HALF_PI
    if m < 1:
        raise ValueError("se_m requires m >= 1")
    return 0.0, m * HALF_PI


def _angular_theta(sigma, c, parity, m):
    theta0, _ = _angular_target(parity, m)
    c2 = c * c
    return _prufer_end(lambda x: sigma - c2 * np.cos(x) ** 2, 0.0, HALF_PI, theta0)


@lru_cache(maxsize=4096)
def separation_constant(c, parity, m):
    """sigma for ce_m (parity 'cos') or se_m (parity 'sin') at parameter c.

    Shoots on the quarter period [0, pi/2]; the symmetry class fixes the
    Prüfer angle at both ends.
    """
    _, target = _angular_target(parity, m)

    def f(sig):
        return _angular_theta(sig, c, parity, m) - target

    lo = -1.0
    hi = m * m + c * c + 2.0
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e8:
            raise ShootingDivergedError("angular bracket did not close")
    return brentq(f, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200)


# --- radial problem ---------------------------------------------------------

def rho_max(a):
    return float(np.arccosh(1.0 / a))


def _radial_target(parity, m, n, bc):
    if bc == DIRICHLET:
        return n * np.pi
    if parity == "cos" and m == 0:
        return HALF_PI + n * np.pi
    return HALF_PI + (n - 1) * np.pi


def _radial_theta(lam, a, parity, m):
    c = a * lam
    sig = separation_constant(c, parity, m)
    theta0 = HALF_PI if parity == "cos" else 0.0
    c2 = c * c
    return _prufer_end(lambda x: c2 * np.cosh(x) ** 2 - sig, 0.0, rho_max(a), theta0)


@dataclass(frozen=True)
class EllipseEigenvalue:
    a: float
    parity: str
    m: int
    n: int
    bc: str
    lam: float
    sigma: float
    angular_residual: float
    radial_residual: float


def ellipse_eigenvalue(a, parity, m, n, bc=NEUMANN, window=None):
    """Locate lambda for the (parity, m, n) mode of the ellipse with focal half-distance a."""
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    if m > 40 or n > 40:
        raise ValueError("index ranges are bounded by m, n <= 40")
    target = _radial_target(parity, m, n, bc)

    def f(lam):
        return _radial_theta(lam, a, parity, m) - target

    # seed from the circle limit: the ellipse has area pi sqrt(1 - a^2), and
    # lambda scales like 1/sqrt(area) to leading order
    seed = bessel_root(m, n, "critical" if bc == NEUMANN else "zero").value
    seed /= (1.0 - a * a) ** 0.25
    lo, hi = window or (0.5 * seed, 1.5 * seed)
    lo = max(lo, 1e-3)
    flo, fhi = f(lo), f(hi)
    steps = 0
    while flo > 0 and steps < 20:
        lo *= 0.7
        flo = f(lo)
        steps += 1
    while fhi < 0 and steps < 40:
        hi *= 1.3
        fhi = f(hi)
        steps += 1
    if flo > 0 or fhi < 0:
        raise IndexNotFoundError(f"no root for ({parity}, {m}, {n}) in search window")
    lam = brentq(f, lo, hi, xtol=1e-12, rtol=1e-14, maxiter=200)
    sig = separation_constant(a * lam, parity, m)
    ang = abs(_angular_theta(sig, a * lam, parity, m) - _angular_target(parity, m)[1])
    th = _radial_theta(lam, a, parity, m)
    rad = abs(np.cos(th)) if bc == NEUMANN else abs(np.sin(th))
    if ang > 1e-8 or rad > 1e-8:
        raise ShootingDivergedError(f"residuals {ang:.2e}, {rad:.2e} exceed 1e-8")
    return EllipseEigenvalue(a, parity, m, n, bc, lam, sig, ang, rad)


# --- angular factor on a full period ----------------------------------------

def _integrate_linear(sigma, c, x0, x1, y0, t_eval):
    c2 = c * c

    def rhs(x, y):
        return [y[1], -(sigma - c2 * np.cos(x) ** 2) * y[0]]

    sol = solve_ivp(rhs, (x0, x1), y0, method="DOP853", rtol=RTOL, atol=1e-14,
                    t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise ShootingDivergedError(sol.message)
    return sol.y


def angular_factor(sigma, c, parity, phi):
    """G(phi) for phi in [0, 2 pi), with max |G| = 1.

    [0, pi/2] is integrated forward from phi = 0 and [pi/2, pi] backward from
    phi = pi, each in its growing direction; the halves are joined at pi/2.
    The rest of the period follows from G(2 pi - phi) = +-G(phi).
    """
    phi = np.mod(np.asarray(phi, dtype=float), 2 * np.pi)
    start = [1.0, 0.0] if parity == "cos" else [0.0, 1.0]
    folded = np.where(phi > np.pi, 2 * np.pi - phi, phi)
    left = folded <= HALF_PI
    xl = np.unique(np.concatenate([folded[left], [HALF_PI]]))
    xr = np.unique(np.concatenate([folded[~left], [HALF_PI]]))[::-1]
    yl = _integrate_linear(sigma, c, 0.0, HALF_PI, start, xl)
    yr = _integrate_linear(sigma, c, np.pi, HALF_PI, start, xr)
    gl, gr = yl[:, -1], yr[:, -1]  # states at pi/2 from each side
    # match the dominant component at pi/2
    k = 0 if abs(gl[0]) * np.sqrt(abs(sigma) + 1.0) >= abs(gl[1]) else 1
    scale = gl[k] / gr[k]
    out = np.empty_like(phi)
    out[left] = np.interp(folded[left], xl, yl[0])
    out[~left] = np.interp(folded[~left], xr[::-1], (scale * yr[0])[::-1])
    # np.interp on exact node values is exact; nodes include every sample point
    if parity == "sin":
        out = np.where(phi > np.pi, -out, out)
    return out / np.max(np.abs(out))


def ellipse_mode(a, mode_indices, bc=NEUMANN, samples=None):
    """Normalized boundary trace of an ellipse eigenmode.

    ``mode_indices`` is (parity, m, n): parity 'cos' for ce_m, 'sin' for se_m,
    n the radial index. The Neumann trace is F(rho_max) G(phi); the Dirichlet
    trace is the interior normal derivative, proportional to
    G(phi) / sqrt(sinh^2 rho_max + sin^2 phi).
    """
    parity, m, n = mode_indices
    ev = ellipse_eigenvalue(a, parity, m, n, bc)
    N = samples or default_samples(ev.lam)
    phi = parameter_grid(N)
    g = angular_factor(ev.sigma, a * ev.lam, parity, phi)
    if bc == DIRICHLET:
        g = g / np.sqrt(np.sinh(rho_max(a)) ** 2 + np.sin(phi) ** 2)
    curve = ellipse(np.sqrt(1.0 - a * a))
    meta = {
        "family": "ellipse", "a": a, "m": m, "n": n, "parity": parity,
        "sigma": ev.sigma, "angular_residual": ev.angular_residual,
        "radial_residual": ev.radial_residual,
    }
    return normalized(EigenMode(ev.lam, bc, g, curve, None, meta))


def ellipse_spectrum(a, count, bc=NEUMANN, m_max=8, n_max=4, slack=1.25):
    """The ``count`` lowest eigenvalues over indices m <= m_max, n <= n_max.

    Only indices whose circle-limit value lies within ``slack`` times the
    count-th disc value are shot, which is enough for small a.
    """
    kind = "critical" if bc == NEUMANN else "zero"
    cap = slack * disc_spectrum(count, bc, m_max, n_max)[-1]
    vals = []
    for n in range(1, n_max + 1):
        for m in range(0, m_max + 1):
            if bessel_root(m, n, kind).value > cap:
                continue
            for parity in ("cos", "sin"):
                if parity == "sin" and m == 0:
                    continue
                vals.append(ellipse_eigenvalue(a, parity, m, n, bc))
    vals.sort(key=lambda e: e.lam)
    return vals[:count]


def disc_spectrum(count, bc=NEUMANN, m_max=8, n_max=4):
    """Disc eigenvalues listed with multiplicity (cos and sin copies for m >= 1)."""
    kind = "critical" if bc == NEUMANN else "zero"
    vals = []
    for n in range(1, n_max + 1):
        for m in range(0, m_max + 1):
            v = bessel_root(m, n, kind).value
            vals.extend([v] if m == 0 else [v, v])
    return sorted(vals)[:count]
