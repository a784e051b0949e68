"""Boundary self-continuation of Cauchy data: Millar's formula plus a Volterra solve.

For a Neumann mode the boundary trace satisfies the jump relation

    u(t) = (1/pi) int u(s) [ 1/2 Psi D log r^2 - A D + Beta D ] ds

where r^2 = r^2(s, t), D = d log r / dn at the source (inward, non-unit
normal i q'(s)), A = J0(lam r), Psi = lam r J1(lam r) and Beta = r d/dr of the
entire part of the fundamental solution. For a Dirichlet mode (u the interior
normal derivative) the same structure holds with an overall minus sign, the
target normal derivative D_t in place of D and the weight
sp(s) / sp(t), sp = sqrt(q' q*').

Every factor except log r^2 is analytic in (s, t). Continuing the log term
with the branch of ``branch.py`` leaves

    +- i int_0^t f_t(sigma) d sigma,    f_t = kappa u Psi D (weighted),

whose vertical part involves u at complex points. On the segment
t = a + i eta this gives a Volterra equation of the second kind

    v(eta) = R(a + i eta) -+ kappa int_0^eta v(tau) K(tau, eta) d tau,

with K = Psi D evaluated at sigma = a + i tau (computed division-free as
[lam J1(lam r) / r] [r^2 D]) and R the right-hand side below.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import KernelOverflowError, QuadratureStalledError, UnwrapAmbiguityError
from ..geometry import (
    divided_differences,
    r2_times_normal_log_derivative,
    r2_times_target_normal_log_derivative,
    regular_normal_log_derivative,
    regular_target_normal_log_derivative,
)
from ..modes import DIRICHLET, parameter_grid
from ..specfun import j1_ratio, kernel_factors
from .branch import TWO_PI, circle_log_integral, fourier_coefficients, fourier_primitive

_UNWRAP_LIMIT = 0.5 * np.pi


@dataclass
class ContinuationResult:
    t: complex
    value: complex
    quadrature_points: int
    residual: float
    branch_audit: int
    converged: bool = True
    method: str = "millar"
    diagnostics: dict = field(default_factory=dict)


def quadrature_size(lam, m_hint=0, scale=1.0):
    """Boundary nodes for the RHS integrals: enough to resolve u Psi D."""
    n = int(np.ceil(scale * max(128, 4 * (lam + m_hint) + 64)))
    return n + (n % 2)


class MillarContinuation:
    """Continuation of one mode's boundary trace; precomputes the real-side data."""

    def __init__(self, mode, n_quad=None, resolution_scale=1.0, tol=1e-7):
        self.mode = mode
        self.curve = mode.curve
        self.lam = float(mode.lam)
        self.kappa = -1.0 if mode.bc == DIRICHLET else 1.0
        self.scale = resolution_scale
        self.tol = tol
        n = n_quad or quadrature_size(self.lam, scale=resolution_scale)
        self.n = n
        self.s = parameter_grid(n)
        self.u = np.real(mode.trace(self.s))
        self.w = TWO_PI / n
        if mode.bc == DIRICHLET:
            self.sp = self.curve.speed(self.s)

    # --- right-hand side -------------------------------------------------------

    def _pieces(self, t):
        """(f, A D u, Beta D u, log rho) on the s grid, one row per t."""
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        S = np.broadcast_to(self.s, (t.size, self.n))
        T = np.broadcast_to(t[:, None], S.shape)
        dq, dqs = divided_differences(self.curve, S, T)
        rho = dq * dqs
        self._audit(rho)
        r2 = 4 * np.sin((S - T) / 2) ** 2 * rho
        a, psi, beta = kernel_factors(self.lam, r2.ravel())
        a, psi, beta = (x.reshape(S.shape) for x in (a, psi, beta))
        if self.kappa > 0:
            d = regular_normal_log_derivative(self.curve, S, T)
        else:
            d = regular_target_normal_log_derivative(self.curve, S, T)
            d = d * self.sp / self.curve.speed(t)[:, None]
        ud = self.u * d
        return ud * psi, ud * a, ud * beta, np.log(rho)

    @staticmethod
    def _audit(rho):
        jumps = np.angle(np.roll(rho, -1, axis=-1) / rho)
        if np.max(np.abs(jumps), initial=0.0) >= _UNWRAP_LIMIT:
            raise UnwrapAmbiguityError("log rho is not single valued on the grid; refine")
        if np.any(np.abs(np.angle(rho)) > np.pi - 1e-3):
            raise UnwrapAmbiguityError("rho approaches the principal branch cut")

    def rhs(self, t):
        """R(t): every term of the continued formula that uses only real-side data.

        This is u(t) itself for real t; off the axis u(t) = R(t) minus the
        vertical Volterra term.
        """
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        f, ad, bd, lr = self._pieces(t)
        fhat = fourier_coefficients(f)
        log_part = np.sum(f * lr, axis=-1) * self.w + circle_log_integral(fhat, t)
        sgn = np.where(t.imag >= 0, 1.0, -1.0)
        seg = fourier_primitive(fhat, t.real)
        total = 0.5 * log_part + sgn * 1j * np.pi * seg
        total = total - np.sum(ad, axis=-1) * self.w + np.sum(bd, axis=-1) * self.w
        return self.kappa * total / np.pi

    # --- Volterra kernel ----------------------------------------------------------

    def kernel(self, a, taus):
        """K(tau_i, tau_j) = Psi D at sigma = a + i tau_i, t = a + i tau_j (i <= j used)."""
        sig = a + 1j * np.asarray(taus, dtype=float)
        S, T = np.meshgrid(sig, sig, indexing="ij")
        dq, dqs = divided_differences(self.curve, S, T)
        r2 = 4 * np.sin((S - T) / 2) ** 2 * dq * dqs
        if self.kappa > 0:
            r2d = r2_times_normal_log_derivative(self.curve, S, T)
        else:
            r2d = r2_times_target_normal_log_derivative(self.curve, S, T)
            r2d = r2d * self.curve.speed(S) / self.curve.speed(T)
        k = j1_ratio(self.lam, r2.ravel()).reshape(S.shape) * r2d
        return k


def solve_volterra(kmat, g, h, c):
    """Product-trapezoid Nystrom for v_j = g_j + c int_0^{y_j} K(y_i -> y_j) v dy.

    ``kmat[i, j]`` is the kernel between node i (integration variable) and
    node j (evaluation point); only i <= j is read. ``h`` is the signed step.
    Lower-triangular, so solved by forward substitution.
    """
    m = g.size
    v = np.empty(m, dtype=complex)
    v[0] = g[0]
    for j in range(1, m):
        acc = 0.5 * kmat[0, j] * v[0] + kmat[1:j, j] @ v[1:j]
        v[j] = (g[j] + c * h * acc) / (1.0 - 0.5 * c * h * kmat[j, j])
    return v


def neumann_series_solve(kmat, g, h, c, terms=8):
    """Truncated Neumann series for the same discrete system (cross-check)."""
    m = g.size
    out = g.astype(complex).copy()
    term = g.astype(complex).copy()
    for _ in range(terms - 1):
        nxt = np.zeros(m, dtype=complex)
        for j in range(1, m):
            wts_j = np.ones(j + 1)
            wts_j[0] = wts_j[-1] = 0.5
            nxt[j] = c * h * (wts_j * kmat[: j + 1, j]) @ term[: j + 1]
        term = nxt
        out = out + term
    return out


def richardson_profile(solve, m0):
    """Two-level Richardson extrapolation of h^2 / h^4 error expansions.

    ``solve(m)`` must return the solution on m + 1 equispaced nodes. Returns
    (values on the m0 + 1 coarse nodes, residual estimate per node).
    """
    v1 = solve(m0)
    v2 = solve(2 * m0)[::2]
    v4 = solve(4 * m0)[::4]
    r1 = (4 * v2 - v1) / 3
    r2 = (4 * v4 - v2) / 3
    best = (16 * r2 - r1) / 15
    return best, np.abs(best - r2)


def vertical_nodes(lam, eta, scale=1.0):
    return int(np.ceil(scale * (2 * np.ceil(lam * abs(eta)) + 16)))


def volterra_profile(cont, a, eta, m0=None, rounds=3, strict=False):
    """u^C(a + i tau) on the coarse nodes tau_j = eta j / m0 of [0, eta].

    Returns (taus, values, residuals, m0, converged).
    """
    lam = cont.lam
    m0 = m0 or vertical_nodes(lam, eta, cont.scale)
    c = -cont.kappa * (1.0 if eta > 0 else -1.0)
    for _ in range(rounds):
        fine = 4 * m0
        taus = eta * np.arange(fine + 1) / fine
        g = cont.rhs(a + 1j * taus)
        kmat = cont.kernel(a, taus)
        bound = 10 * lam * lam * np.exp(2 * lam * abs(eta)) * max(1.0, np.abs(kmat).mean())
        if not np.all(np.isfinite(kmat)) or np.abs(kmat).max() > bound:
            raise KernelOverflowError("Volterra kernel exceeds its growth envelope")

        def solve(m, g=g, kmat=kmat, fine=fine):
            step = fine // m
            idx = np.arange(0, fine + 1, step)
            return solve_volterra(kmat[np.ix_(idx, idx)], g[idx], eta / m, c)

        vals, res = richardson_profile(solve, m0)
        scale = np.maximum(np.abs(vals), 1e-300)
        rel = res / np.maximum(scale, np.abs(vals).max() * 1e-3)
        if rel.max() < cont.tol:
            return taus[::4], vals, rel, m0, True
        m0 *= 2
    if strict:
        raise QuadratureStalledError(f"Volterra solve did not reach {cont.tol:g} at a = {a}")
    return taus[::4], vals, rel, m0 // 2, False


def volterra_solve(mode, t, cont=None, strict=False, **kwargs):
    """u^C(t) for one complex t via RHS plus the vertical Volterra inversion."""
    cont = cont or MillarContinuation(mode, **kwargs)
    t = complex(t)
    if t.imag == 0:
        val = complex(cont.rhs(t)[0])
        return ContinuationResult(t, val, cont.n, 0.0, cont.n)
    taus, vals, rel, m0, ok = volterra_profile(cont, t.real, t.imag, strict=strict)
    return ContinuationResult(
        t, complex(vals[-1]), cont.n + 4 * m0 + 1, float(rel[-1]), cont.n, ok,
        diagnostics={"vertical_nodes": m0},
    )


def millar_rhs(mode, t, cont=None):
    cont = cont or MillarContinuation(mode)
    out = cont.rhs(t)
    return complex(out[0]) if np.ndim(t) == 0 else out


@dataclass
class GrowthProfile:
    levels: np.ndarray  # Im t, ascending, negative to positive
    max_log_mod: np.ndarray
    slope: float  # fitted C-hat * lambda
    c_hat: float
    re_grid: np.ndarray
    values: np.ndarray  # u^C on (levels x re_grid)
    converged: bool


def growth_profile(mode, epsilon, n_re=64, cont=None, fit_window=(0.5, 1.0)):
    """Envelope max_{Re t} log|u^C(t)| against Im t over [-epsilon, epsilon].

    The slope is an intercept fit of the envelope against |Im t| over
    |Im t| / epsilon in ``fit_window``, averaged over both half strips.
    """
    cont = cont or MillarContinuation(mode)
    re_grid = TWO_PI * np.arange(n_re) / n_re
    m0 = vertical_nodes(cont.lam, epsilon, cont.scale)
    ok = True
    rows = {}
    for sign in (1.0, -1.0):
        cols = []
        for a in re_grid:
            taus, vals, _, m_used, conv = volterra_profile(cont, a, sign * epsilon, m0=m0)
            ok = ok and conv
            if m_used != m0:
                # keep the coarse levels common to every column
                vals = vals[:: m_used // m0]
                taus = taus[:: m_used // m0]
            cols.append(vals)
        rows[sign] = (taus, np.array(cols).T)
    taus_up, up = rows[1.0]
    taus_dn, dn = rows[-1.0]
    levels = np.concatenate([taus_dn[::-1], taus_up[1:]])
    values = np.vstack([dn[::-1], up[1:]])
    env = np.log(np.abs(values).max(axis=1))
    lo, hi = fit_window
    slopes = []
    for taus, block in ((taus_up, up), (taus_dn, dn)):
        x = np.abs(taus)
        sel = (x >= lo * epsilon - 1e-12) & (x <= hi * epsilon + 1e-12)
        y = np.log(np.abs(block).max(axis=1))
        slopes.append(np.polyfit(x[sel], y[sel], 1)[0])
    slope = float(np.mean(slopes))
    return GrowthProfile(levels, env, slope, slope / cont.lam, re_grid, values, ok)
