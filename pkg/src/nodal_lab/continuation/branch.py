"""Branch of log r^2 on the complexified parameter strip, and the continued log integral.

For a curve q and complex t the squared distance factors as

    r^2(s, t) = 4 sin^2((s - t)/2) * rho(s, t),

with rho analytic and zero-free near the diagonal (it tends to q'(t) q*'(t)).
The branch used for Im t >= 0 is

    L(s, t) = log rho(s, t) - i pi + i (s - t) + 2 log(1 - e^{-i(s - t)}),

and for Im t < 0

    L(s, t) = log rho(s, t) + i pi - i (s - t) + 2 log(1 - e^{i(s - t)}),

both slit at s = 0. As Im t -> 0+ the imaginary part tends to 0 for s > Re t
and to -2 pi for s < Re t. The continuation of I(t) = int f(s) log r^2(s, t) ds
off the real axis is then int f L ds +- 2 pi i int_0^t f.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import BranchMismatchError, UnwrapAmbiguityError
from ..geometry import divided_differences, log_ratio

TWO_PI = 2 * np.pi
_UNWRAP_LIMIT = 0.5 * np.pi


@dataclass(frozen=True)
class LogBranch:
    s: np.ndarray
    t: complex
    value: np.ndarray
    unwrap_steps: int


def circle_log(s, t):
    """The log 4 sin^2((s - t)/2) part of L(s, t) (see module docstring)."""
    x = np.asarray(s, dtype=complex) - t
    if np.imag(t) >= 0:
        return -1j * np.pi + 1j * x + 2 * np.log(1 - np.exp(-1j * x))
    return 1j * np.pi - 1j * x + 2 * np.log(1 - np.exp(1j * x))


def tracked_log_ratio(curve, s, t, steps=None):
    """log rho(s, t) continued along s from s = 2 pi downward by phase unwrapping.

    Returns (values, number of tracking steps). Raises UnwrapAmbiguityError if
    two consecutive samples differ in phase by pi/2 or more after refinement.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    steps = steps or max(64, 8 * curve.K)
    for _ in range(4):
        track = np.unique(np.concatenate([np.linspace(0.0, TWO_PI, steps + 1), s]))[::-1]
        dq, dqs = divided_differences(curve, track, np.full(track.shape, t, dtype=complex))
        rho = dq * dqs
        jumps = np.angle(rho[1:] / rho[:-1])
        if np.max(np.abs(jumps), initial=0.0) < _UNWRAP_LIMIT:
            phase = np.angle(rho[0]) + np.concatenate([[0.0], np.cumsum(jumps)])
            vals = np.log(np.abs(rho)) + 1j * phase
            idx = np.searchsorted(-track, -s)
            return vals[idx], track.size - 1
        steps *= 2
    raise UnwrapAmbiguityError(f"phase of rho jumps by >= pi/2 at t = {t}; grid too coarse")


def log_branch(curve, s, t):
    """L(s, t) on an array of real s for one complex t."""
    t = complex(t)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if t.imag == 0 and np.any(np.abs(np.angle(np.exp(1j * (s - t.real)))) < 1e-14):
        from ..errors import DiagonalSingularityError

        raise DiagonalSingularityError("s coincides with real t")
    lr, steps = tracked_log_ratio(curve, s, t)
    return LogBranch(s, t, lr + circle_log(s, t), steps)


# --- spectral pieces -----------------------------------------------------------

def fourier_coefficients(samples):
    """c_k (numpy fft ordering, k = fftfreq) with f(s) = sum c_k e^{iks}."""
    return np.fft.fft(samples, axis=-1) / samples.shape[-1]


def _wavenumbers(n):
    return np.fft.fftfreq(n, 1.0 / n)


def circle_log_integral(fhat, t):
    """int_0^{2 pi} f(s) (L - log rho)(s, t) ds from the coefficients of f.

    ``fhat`` may be 2-D (one row per t); ``t`` broadcasts against its rows.
    """
    fhat = np.atleast_2d(fhat)
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    n = fhat.shape[-1]
    k = _wavenumbers(n)
    nz = k != 0
    pos = k > 0
    f0 = fhat[:, 0]
    lin = TWO_PI * (fhat[:, nz] / k[nz]).sum(axis=-1)
    upper = np.imag(t) >= 0
    sgn = np.where(upper, 1.0, -1.0)
    # e^{ikt}/k for k > 0 above the axis, e^{-ikt}/k with f_{-k} below
    kk = k[pos]
    up = (fhat[:, pos] * np.exp(1j * np.multiply.outer(t, kk)) / kk).sum(axis=-1)
    neg_idx = np.nonzero(pos)[0]
    neg_idx = (n - neg_idx) % n
    down = (fhat[:, neg_idx] * np.exp(-1j * np.multiply.outer(t, kk)) / kk).sum(axis=-1)
    series = np.where(upper, up, down)
    return sgn * (-1j * TWO_PI * t * f0 + lin) - 2 * TWO_PI * series


def fourier_primitive(fhat, x):
    """int_0^x f, x real or complex, from the coefficients of f."""
    fhat = np.atleast_2d(fhat)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    n = fhat.shape[-1]
    k = _wavenumbers(n)
    nz = k != 0
    terms = fhat[:, nz] * (np.exp(1j * np.multiply.outer(x, k[nz])) - 1) / (1j * k[nz])
    return fhat[:, 0] * x + terms.sum(axis=-1)


def path_integral(f, t, panel=0.25, order=16):
    """int_0^t f(sigma) d sigma along [0, Re t] then [Re t, t] by composite Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)

    def segment(z0, z1):
        length = abs(z1 - z0)
        if length == 0:
            return 0.0
        panels = max(1, int(np.ceil(length / panel)))
        edges = np.linspace(0.0, 1.0, panels + 1)
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            z = z0 + (z1 - z0) * u
            total = total + 0.5 * (hi - lo) * np.sum(w * f(z))
        return (z1 - z0) * total

    a = complex(t.real, 0.0)
    return segment(0.0 + 0j, a) + segment(a, complex(t))


# --- the continued log integral ---------------------------------------------

@dataclass(frozen=True)
class LogIntegral:
    value: complex
    branch_value: complex
    dual_value: complex
    discrepancy: float
    unwrap_steps: int


def _grid(n):
    return TWO_PI * np.arange(n) / n


def log_integral_branch(curve, f, t, n=256):
    """int f L ds +- 2 pi i int_0^t f, with the sign of Im t (Im t = 0 counts as +)."""
    s = _grid(n)
    fs = np.asarray(f(s.astype(complex)), dtype=complex)
    fhat = fourier_coefficients(fs)
    lr, steps = tracked_log_ratio(curve, s, t)
    total = np.sum(fs * lr) * TWO_PI / n + circle_log_integral(fhat, t)[0]
    sgn = 1.0 if np.imag(t) >= 0 else -1.0
    total = total + sgn * 2j * np.pi * path_integral(f, complex(t))
    return complex(total), steps


def log_integral_dual(curve, f, t, n=256):
    """Mean-subtracted integration-by-parts form of the same continuation.

    -int (F(s) - F(t)) [q'(s)/(q(s) - q(t)) + q*'(s)/(q*(s) - q*(t))] ds
    + <f> int log rho(s, t) ds, with F the primitive of f - <f>.
    """
    s = _grid(n)
    fs = np.asarray(f(s.astype(complex)), dtype=complex)
    fhat = fourier_coefficients(fs)
    # coefficients at rounding level would be amplified by e^{|k Im t|}
    fhat = np.where(np.abs(fhat) < 64 * np.finfo(float).eps * np.abs(fhat).max(), 0.0, fhat)
    k = _wavenumbers(n)
    nz = k != 0
    tt = np.full(s.shape, t, dtype=complex)
    h = s - tt
    mid = 0.5 * (s + tt)
    # (F(s) - F(t)) / (2 sin(h/2)) = sum f_k / k e^{ik mid} sin(k h/2)/sin(h/2)
    half = np.sin(h / 2)
    small = np.abs(half) < 1e-12
    ratio = np.sin(np.multiply.outer(h, k[nz]) / 2) / np.where(small, 1.0, half)[:, None]
    ratio = np.where(small[:, None], k[nz].astype(complex), ratio)
    dF = (np.exp(1j * np.multiply.outer(mid, k[nz])) * ratio) @ (fhat[nz] / k[nz])
    dq, dqs = divided_differences(curve, s, tt)
    cauchy = curve.dq(s) / dq + curve.dqstar(s) / dqs
    lr, _ = tracked_log_ratio(curve, s, t)
    mean_part = fhat[0] * np.sum(lr) * TWO_PI / n
    return complex(-np.sum(dF * cauchy) * TWO_PI / n + mean_part)


def log_integral(curve, f, t, n=256, tol=1e-8, strict=True):
    """Continued value of int_0^{2 pi} f(s) log r^2(s, t) ds, computed two ways.

    ``f`` must accept complex arrays (its holomorphic extension is used along
    the vertical part of the path). Raises BranchMismatchError when the two
    evaluations differ by more than ``tol`` (relative to max(1, |value|)).
    """
    t = complex(t)
    a, steps = log_integral_branch(curve, f, t, n)
    b = log_integral_dual(curve, f, t, n)
    gap = abs(a - b) / max(1.0, abs(a))
    if gap > tol and strict:
        raise BranchMismatchError(f"branch and dual formulas differ by {gap:.2e} at t = {t}")
    return LogIntegral(a, a, b, gap, steps)


def g_identity(curve, t, n=256):
    """int_0^{2 pi} L(s, t) ds +- 2 pi i t (zero for the unit circle)."""
    s = _grid(n)
    lr, _ = tracked_log_ratio(curve, s, t)
    fhat = np.zeros(n, dtype=complex)
    fhat[0] = 1.0
    sgn = 1.0 if np.imag(t) >= 0 else -1.0
    return complex(np.sum(lr) * TWO_PI / n + circle_log_integral(fhat, t)[0] + sgn * 2j * np.pi * t)
