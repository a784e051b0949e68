"""Continuation into the interior through layer potentials on the boundary.

For an interior point z the Neumann eigenfunction is the double layer

    phi(z) = int u(s) dG/dn(q(s), z) ds,   G = (i/4) H0(lam r),

so dG/dn = -(i lam / 4) H1(lam r) r D with D the source normal derivative of
log r. For a Dirichlet mode (u the interior normal derivative) it is the
single layer phi(z) = -int G u |q'| ds. Replacing z by the complexified point
(q_C(t), q_C*(t)) of an interior curve C and r by the principal root of
r^2 = (q(s) - q_C(t)) (q*(s) - q_C*(t)) gives the holomorphic extension, valid
while Re r^2 stays positive.
"""

import numpy as np

from ..errors import BranchUnsafeError, QuadratureStalledError
from ..geometry import cross_r_squared
from ..modes import DIRICHLET, parameter_grid
from ..specfun import hankel1
from .millar import ContinuationResult


def separation(boundary, curve_c, n=512):
    """C0 = min over real s, s' of |q(s) - q_C(s')|^2."""
    s = parameter_grid(n)
    d = boundary.q(s)[:, None] - curve_c.q(s)[None, :]
    return float(np.min(np.abs(d) ** 2))


def imaginary_size_squared(curve_c, t):
    """|Im q_C(t)|^2 for the point (x, y) in C^2 with x + i y = q, x - i y = q*."""
    q = curve_c.q(t)
    qs = curve_c.qstar(t)
    x = 0.5 * (q + qs)
    y = (q - qs) / 2j
    return np.abs(x.imag) ** 2 + np.abs(y.imag) ** 2


def _layer(mode, z, zs, n):
    s = parameter_grid(n)
    curve = mode.curve
    u = np.real(mode.trace(s))
    r2 = (curve.q(s) - z) * (curve.qstar(s) - zs)
    if np.min(r2.real) <= 0:
        raise BranchUnsafeError("Re r^2 <= 0: principal root is not continuous here")
    r = np.sqrt(r2)
    lam = mode.lam
    w = 2 * np.pi / n
    if mode.bc == DIRICHLET:
        g = 0.25j * np.asarray(hankel1(0, lam * r))
        return -np.sum(g * u * np.abs(curve.dq(s))) * w
    r2d = 0.5j * (curve.dq(s) * (curve.qstar(s) - zs) - curve.dqstar(s) * (curve.q(s) - z))
    kern = -0.25j * lam * np.asarray(hankel1(1, lam * r)) / r * r2d
    return np.sum(kern * u) * w


def continue_interior(mode, curve_c, t, rtol=1e-8, max_rounds=6, n0=None):
    """phi^C(q_C(t)) for a curve C strictly inside the domain.

    Trapezoid rule on the boundary, doubling the node count until two
    successive values agree to ``rtol``.
    """
    t = complex(t)
    c0 = separation(mode.curve, curve_c)
    if c0 <= 0:
        raise BranchUnsafeError("interior curve touches the boundary")
    if imaginary_size_squared(curve_c, t) >= c0:
        raise BranchUnsafeError("|Im q_C(t)|^2 >= C0: outside the safe tube")
    z = complex(curve_c.q(t))
    zs = complex(curve_c.qstar(t))
    n = n0 or max(64, 2 * int(np.ceil(2 * mode.lam)) + 32)
    prev = _layer(mode, z, zs, n)
    for _ in range(max_rounds):
        n *= 2
        cur = _layer(mode, z, zs, n)
        res = abs(cur - prev) / max(abs(cur), 1e-300)
        if res < rtol or abs(cur - prev) < 1e-14:
            return ContinuationResult(t, complex(cur), n, float(res), 0, True, "interior")
        prev = cur
    raise QuadratureStalledError(f"interior layer potential did not converge at t = {t}")


def restriction_values(mode, curve_c, n=None):
    """phi on the real parameter grid of C (for L^2(C) norms)."""
    n = n or max(128, 4 * int(np.ceil(mode.lam)) + 64)
    s = parameter_grid(n)
    vals = np.array([continue_interior(mode, curve_c, x).value for x in s])
    return s, vals
