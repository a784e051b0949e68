"""Complex-argument Bessel and Hankel functions of orders 0 and 1.

Small arguments use the power series (with harmonic numbers accumulated
term by term for the second-kind functions); large arguments use the
Hankel integral representation

    H^(1,2)_nu(z) = sqrt(2/(pi z)) exp(+-i(z - nu pi/2 - pi/4)) / Gamma(nu + 1/2)
                    * int_0^inf e^{-s} s^{nu-1/2} (1 +- i s/(2z))^{nu-1/2} ds

evaluated by generalized Gauss-Laguerre quadrature along a ray rotated away
from the branch point of the integrand. This stays accurate for complex z
off the real axis, where the usual asymptotic series would have to be
truncated at its smallest term.

All functions accept scalars or numpy arrays and are pure.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import gamma

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import BesselOverflowError, BranchCutError, PrecisionError

EULER_GAMMA = 0.57721566490153286061
LOG2 = 0.69314718055994530942

_MAX_ABS_ARG = 1.0e4
# a term this large costs more than half of the 53-bit significand of an O(1) result
_HALF_SIGNIFICAND = 2.0**26


def _log_factorial(k):
    return float(np.sum(np.log(np.arange(1, k + 1)))) if k > 1 else 0.0


@dataclass(frozen=True)
class SeriesPolicy:
    """Where to switch from power series to the large-argument integral."""

    cutoff_radius: float = 12.0
    series_terms: int = 60
    tail_tolerance: float = 1e-15
    laguerre_nodes: int = 24

    def __post_init__(self):
        if not self.cutoff_radius > 0:
            raise ValueError("cutoff_radius must be positive")
        if self.series_terms < 1:
            raise ValueError("series_terms must be >= 1")
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")
        if self.truncation_bound() >= self.tail_tolerance:
            raise ValueError(
                f"{self.series_terms} series terms do not reach tail tolerance "
                f"{self.tail_tolerance:g} at |z| = {self.cutoff_radius:g}"
            )

    def truncation_bound(self):
        # magnitude of the first omitted J0 term at the cutoff radius
        k = self.series_terms
        x = (self.cutoff_radius / 2.0) ** 2
        log_term = k * np.log(x) - 2.0 * _log_factorial(k)
        return float(np.exp(log_term))


DEFAULT_POLICY = SeriesPolicy()


def _prepare(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite argument")
    if np.any(np.abs(z) >= _MAX_ABS_ARG):
        raise BesselOverflowError(f"|z| >= {_MAX_ABS_ARG:g} is outside the supported range")
    return z


def _finish(values, scalar):
    if not np.all(np.isfinite(values)):
        raise BesselOverflowError("result is not representable")
    return complex(values) if scalar else values


def _check_order(order):
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")


def _check_cut(z):
    on_cut = (z.imag == 0) & (z.real <= 0)
    if np.any(on_cut):
        raise BranchCutError("argument lies on the branch cut (-inf, 0]")


# --- power series ---------------------------------------------------------

def _j_series_terms(order, z, terms):
    """Yield successive terms of the J_order series (array-valued)."""
    x = -(z * z) / 4.0
    term = np.ones_like(z) if order == 0 else z / 2.0
    yield term
    for k in range(1, terms):
        term = term * x / (k * (k + order))
        yield term


def _series_j(order, z, terms):
    total = np.zeros_like(z)
    biggest = np.zeros(z.shape)
    for term in _j_series_terms(order, z, terms):
        total = total + term
        biggest = np.maximum(biggest, np.abs(term))
    return total, biggest


def _series_y(order, z, terms):
    """Return (Y_order(z), J_order(z), max term magnitude)."""
    log_part = np.log(z / 2.0) + EULER_GAMMA
    total_j = np.zeros_like(z)
    correction = np.zeros_like(z)
    biggest = np.zeros(z.shape)
    harmonic = 0.0
    for k, term in enumerate(_j_series_terms(order, z, terms)):
        total_j = total_j + term
        biggest = np.maximum(biggest, np.abs(term))
        if order == 0:
            if k >= 1:
                harmonic += 1.0 / k
                correction = correction + harmonic * term
        else:
            harmonic += 1.0 / (k + 1)
            correction = correction + (2.0 * harmonic - 1.0 / (k + 1)) * term
    if order == 0:
        y = (2.0 / np.pi) * (total_j * log_part - correction)
    else:
        y = (-2.0 / z + 2.0 * total_j * log_part - correction) / np.pi
    return y, total_j, biggest


def _check_precision(biggest):
    if np.any(biggest > _HALF_SIGNIFICAND):
        raise PrecisionError(
            "power series cancellation loses more than half the significand; "
            "lower the cutoff radius"
        )


# --- large argument ---------------------------------------------------------

@lru_cache(maxsize=None)
def _laguerre(n, alpha):
    x, w = roots_genlaguerre(n, alpha)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _hankel_integral(order, z, kind, nodes):
    """H^(kind)_order(z) for Re z >= 0 via the rotated Laguerre integral."""
    alpha = order - 0.5
    x, w = _laguerre(nodes, alpha)
    arg = np.angle(z)
    sgn = 1.0 if kind == 1 else -1.0
    if kind == 1:
        singular_dir = np.pi / 2 + arg
        beta = np.where(singular_dir < np.pi / 2, (singular_dir - np.pi / 2) / 2, 0.0)
    else:
        singular_dir = arg - np.pi / 2
        beta = np.where(singular_dir > -np.pi / 2, (singular_dir + np.pi / 2) / 2, 0.0)
    rot = np.exp(1j * beta) / np.cos(beta)
    s = x[None, :] * rot[:, None]
    base = 1.0 + sgn * 1j * s / (2.0 * z[:, None])
    # principal powers; half-integer orders reduce to the (faster) principal sqrt
    if order == 0:
        integrand = 1.0 / np.sqrt(base)
    elif order == 1:
        integrand = np.sqrt(base)
    else:
        integrand = base**alpha
    integrand = integrand * np.exp(-1j * x[None, :] * np.tan(beta)[:, None])
    integral = rot ** (alpha + 1.0) * (integrand @ w)
    phase = np.exp(sgn * 1j * (z - order * np.pi / 2 - np.pi / 4))
    return np.sqrt(2.0 / (np.pi * z)) * phase * integral / gamma(order + 0.5)


_SHALLOW_ARG = 0.8
_SHALLOW_NODES = 12


def _hankel_01(z, kind, nodes):
    """(H^(kind)_0(z), H^(kind)_1(z)) sharing one square root (Re z >= 0).

    Arguments within 0.8 rad of the real axis converge to rounding with 12
    Laguerre nodes; steeper ones use the policy's count.
    """
    shallow = np.abs(np.angle(z)) <= _SHALLOW_ARG
    if nodes <= _SHALLOW_NODES or shallow.all() or not shallow.any():
        n = min(nodes, _SHALLOW_NODES) if shallow.all() else nodes
        return _hankel_01_fixed(z, kind, n)
    h0 = np.empty_like(z)
    h1 = np.empty_like(z)
    h0[shallow], h1[shallow] = _hankel_01_fixed(z[shallow], kind, _SHALLOW_NODES)
    h0[~shallow], h1[~shallow] = _hankel_01_fixed(z[~shallow], kind, nodes)
    return h0, h1


def _hankel_01_fixed(z, kind, nodes):
    x0, w0 = _laguerre(nodes, -0.5)
    x1, w1 = _laguerre(nodes, 0.5)
    arg = np.angle(z)
    sgn = 1.0 if kind == 1 else -1.0
    if kind == 1:
        singular_dir = np.pi / 2 + arg
        beta = np.where(singular_dir < np.pi / 2, (singular_dir - np.pi / 2) / 2, 0.0)
    else:
        singular_dir = arg - np.pi / 2
        beta = np.where(singular_dir > -np.pi / 2, (singular_dir + np.pi / 2) / 2, 0.0)
    rot = np.exp(1j * beta) / np.cos(beta)
    tb = np.tan(beta)[:, None]
    zz = (sgn * 0.5j / z)[:, None] * rot[:, None]
    out = []
    for order, x, w in ((0, x0, w0), (1, x1, w1)):
        root = np.sqrt(1.0 + zz * x[None, :])
        integrand = 1.0 / root if order == 0 else root
        rotated = np.any(beta != 0)
        if rotated:
            integrand = integrand * np.exp(-1j * x[None, :] * tb)
        integral = rot ** (order + 0.5) * (integrand @ w)
        phase = np.exp(sgn * 1j * (z - order * np.pi / 2 - np.pi / 4))
        out.append(np.sqrt(2.0 / (np.pi * z)) * phase * integral / gamma(order + 0.5))
    return out


def _large_pair(order, z, nodes):
    """(H1, H2) for an array z with Re z >= 0."""
    return _hankel_integral(order, z, 1, nodes), _hankel_integral(order, z, 2, nodes)


def _large_j(order, z, nodes):
    flip = z.real < 0
    zz = np.where(flip, -z, z)
    h1, h2 = _large_pair(order, zz, nodes)
    j = 0.5 * (h1 + h2)
    if order == 1:
        j = np.where(flip, -j, j)
    return j


def _large_y(order, z, nodes):
    flip = z.real < 0
    zz = np.where(flip, -z, z)
    h1, h2 = _large_pair(order, zz, nodes)
    j = 0.5 * (h1 + h2)
    y = (h1 - h2) / 2j
    # Y_n(-w) = (-1)^n (Y_n(w) +- 2i J_n(w)), + when -w is in the upper half plane
    side = np.where(z.imag > 0, 1.0, -1.0)
    reflected = (-1.0) ** order * (y + side * 2j * j)
    return np.where(flip, reflected, y)


# --- public API -------------------------------------------------------------

def bessel_j(order, z, policy=DEFAULT_POLICY):
    """Bessel function of the first kind J_order(z), order 0 or 1."""
    _check_order(order)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(_prepare(z))
    out = np.empty_like(z)
    small = np.abs(z) <= policy.cutoff_radius
    if np.any(small):
        val, biggest = _series_j(order, z[small], policy.series_terms)
        _check_precision(biggest)
        out[small] = val
    if np.any(~small):
        out[~small] = _large_j(order, z[~small], policy.laguerre_nodes)
    return _finish(out[0] if scalar else out, scalar)


def bessel_y(order, z, policy=DEFAULT_POLICY):
    """Bessel function of the second kind Y_order(z), principal branch of log z."""
    _check_order(order)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(_prepare(z))
    _check_cut(z)
    out = np.empty_like(z)
    small = np.abs(z) <= policy.cutoff_radius
    if np.any(small):
        val, _, biggest = _series_y(order, z[small], policy.series_terms)
        _check_precision(biggest)
        out[small] = val
    if np.any(~small):
        out[~small] = _large_y(order, z[~small], policy.laguerre_nodes)
    return _finish(out[0] if scalar else out, scalar)


def hankel1(order, z, policy=DEFAULT_POLICY):
    """Outgoing Hankel function H^(1)_order(z) = J + iY."""
    return bessel_j(order, z, policy) + 1j * bessel_y(order, z, policy)


def log_normalized_y0(z, policy=DEFAULT_POLICY):
    """Second-kind function in the normalization J0(z) log z - sum(...).

    Differs from the standard Y0 by a multiple of J0:
    log_normalized_y0(z) = (pi/2) Y0(z) - (gamma - log 2) J0(z).
    """
    return 0.5 * np.pi * np.asarray(bessel_y(0, z, policy)) - (EULER_GAMMA - LOG2) * np.asarray(
        bessel_j(0, z, policy)
    )


def _entire_part_series(x, terms):
    """sum_{m>=1} (-1)^m H_m x^m / (m!)^2 and its r d/dr, for x = (lambda r / 2)^2."""
    x = np.asarray(x, dtype=complex)
    term = np.ones_like(x)
    total = np.zeros_like(x)
    radial = np.zeros_like(x)
    harmonic = 0.0
    for m in range(1, terms):
        term = term * (-x) / (m * m)
        harmonic += 1.0 / m
        total = total + harmonic * term
        radial = radial + 2.0 * m * harmonic * term
    return total, radial


def green_split(lam, r, policy=DEFAULT_POLICY):
    """Split -log_normalized_y0(lam r) = A log(1/r) + B with A the Riemann function J0(lam r).

    B is entire and even in r (a function of r^2). Returns (A, B).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=complex))
    z = lam * r
    a = np.asarray(bessel_j(0, z, policy))
    b = np.empty_like(r)
    small = np.abs(z) <= policy.cutoff_radius
    if np.any(small):
        series, _ = _entire_part_series((z[small] / 2.0) ** 2, policy.series_terms)
        b[small] = series - a[small] * np.log(lam)
    if np.any(~small):
        # pick the root with Re >= 0; B depends on r^2 only
        rr = np.where(r[~small].real < 0, -r[~small], r[~small])
        b[~small] = -log_normalized_y0(lam * rr, policy) + a[~small] * np.log(rr)
    if scalar:
        return complex(a[0]), complex(b[0])
    return a, b


def kernel_factors(lam, r2, policy=DEFAULT_POLICY):
    """Even-in-r factors of the double-layer kernel, as functions of r^2.

    Returns (A, Psi, Beta) with A = J0(lam r), Psi = lam r J1(lam r) and
    Beta = r d/dr of the entire part of the fundamental solution
    -(1/4) Y0(lam r) = (1/2 pi) [A log(1/r) + Btilde].  With D the normal
    derivative of log r, dA/dn = -Psi D and dBtilde/dn = Beta D.
    """
    r2 = np.asarray(r2, dtype=complex)
    scalar = r2.ndim == 0
    r2 = np.atleast_1d(r2)
    x = (lam * lam / 4.0) * r2
    a = np.empty_like(r2)
    psi = np.empty_like(r2)
    beta = np.empty_like(r2)
    small = 2.0 * np.sqrt(np.abs(x)) <= policy.cutoff_radius
    if np.any(small):
        xs = x[small]
        j0 = np.zeros_like(xs)
        j1r = np.zeros_like(xs)  # sum (-x)^k / (k! (k+1)!)
        t0 = np.ones_like(xs)
        t1 = np.ones_like(xs)
        for k in range(policy.series_terms):
            if k:
                t0 = t0 * (-xs) / (k * k)
                t1 = t1 * (-xs) / (k * (k + 1))
            j0 = j0 + t0
            j1r = j1r + t1
        ps = 2.0 * xs * j1r
        _, radial = _entire_part_series(xs, policy.series_terms)
        a[small] = j0
        psi[small] = ps
        beta[small] = radial + (np.log(lam / 2.0) + EULER_GAMMA) * ps
    if np.any(~small):
        r = np.sqrt(r2[~small])
        z = lam * r
        if np.any(np.abs(z) >= _MAX_ABS_ARG):
            raise BesselOverflowError("|lambda r| exceeds 1e4")
        # principal sqrt gives Re z >= 0, so no reflection is needed
        h10, h11 = _hankel_01(z, 1, policy.laguerre_nodes)
        h20, h21 = _hankel_01(z, 2, policy.laguerre_nodes)
        j0 = 0.5 * (h10 + h20)
        ps = z * 0.5 * (h11 + h21)
        y1 = (h11 - h21) / 2j
        a[~small] = j0
        psi[~small] = ps
        beta[~small] = 0.5 * np.pi * z * y1 - ps * np.log(r) + j0
    if scalar:
        return complex(a[0]), complex(psi[0]), complex(beta[0])
    return a, psi, beta


def j1_ratio(lam, r2, policy=DEFAULT_POLICY):
    """lam J1(lam r) / r as an (entire) function of r^2; equals lam^2 / 2 at r = 0."""
    r2 = np.asarray(r2, dtype=complex)
    scalar = r2.ndim == 0
    r2 = np.atleast_1d(r2)
    x = (lam * lam / 4.0) * r2
    out = np.empty_like(r2)
    small = 2.0 * np.sqrt(np.abs(x)) <= policy.cutoff_radius
    if np.any(small):
        xs = x[small]
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, policy.series_terms):
            term = term * (-xs) / (k * (k + 1))
            acc = acc + term
        out[small] = 0.5 * lam * lam * acc
    if np.any(~small):
        _, psi, _ = kernel_factors(lam, r2[~small], policy)
        out[~small] = psi / r2[~small]
    return complex(out[0]) if scalar else out
