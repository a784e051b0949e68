"""Closed real-analytic plane curves and their complexification.

A curve is a trigonometric polynomial q(s) = sum_k c_k e^{iks}, s in [0, 2 pi),
with the plane identified with C. Because the representation is a finite
Fourier sum, the holomorphic extension to complex parameters is exact term by
term:

    q(t)  = sum_k c_k e^{ikt}
    q*(t) = sum_k conj(c_k) e^{-ikt}      (equals conj(q(t)) for real t)

The complexified squared distance between a boundary point q(s) and a
complexified point q(t) is r^2(s, t) = (q(s) - q(t)) (q*(s) - q*(t)).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from shapely.geometry import LinearRing

from .errors import (
    BranchUnsafeError,
    CurveError,
    DiagonalSingularityError,
    OutOfTubeError,
    ParseError,
)

_SIMPLICITY_SAMPLES = 512


def _estimate_margin(ks, coeffs):
    """Strip half-width of analyticity from the decay slope of log|c_k|."""
    mags = np.abs(coeffs)
    scale = mags.max()
    keep = mags > 1e-15 * scale
    abs_k = np.abs(ks[keep])
    if np.unique(abs_k).size < 3:
        # a trigonometric polynomial with a handful of modes is entire
        return np.inf
    slope, _ = np.polyfit(abs_k, np.log(mags[keep]), 1)
    if slope >= 0:
        return np.inf if abs_k.max() <= 2 else 0.0
    return float(-slope)


@dataclass(frozen=True, eq=False)
class AnalyticCurve:
    """Closed analytic curve as a truncated complex Fourier series.

    ``coeffs[j]`` is c_k for k = j - K. The curve must be a counterclockwise
    simple immersion; ``check=False`` skips this (used for degenerate test
    curves such as a doubly traversed segment).
    """

    coeffs: np.ndarray
    check: bool = True
    period: float = field(default=2 * np.pi, init=False)
    margin: float = field(init=False)
    arc_length_flag: bool = field(init=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise CurveError("coefficient array must have odd length 2K+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if not np.any(c):
            raise CurveError("all coefficients vanish")
        object.__setattr__(self, "margin", _estimate_margin(self.ks, c))
        s = np.linspace(0.0, 2 * np.pi, _SIMPLICITY_SAMPLES, endpoint=False)
        speed = np.abs(self.dq(s))
        object.__setattr__(self, "arc_length_flag", bool(np.ptp(speed) < 1e-10 * speed.max()))
        if self.check:
            self._validate(s, speed)

    @property
    def K(self):
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self):
        return np.arange(-self.K, self.K + 1)

    def _validate(self, s, speed):
        if speed.min() <= 1e-8 * speed.max():
            raise CurveError("parametrization is not an immersion (q' vanishes)")
        pts = self.q(s)
        xy = np.column_stack([pts.real, pts.imag])
        # heuristic: the sampled polygon must be simple
        if not LinearRing(xy).is_simple:
            raise CurveError("curve is not simple (sampled polygon self-intersects)")
        area = 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
        if area <= 0:
            raise CurveError("curve must be oriented counterclockwise")

    # --- evaluation -------------------------------------------------------

    def _guard(self, t):
        t = np.asarray(t, dtype=complex)
        if np.any(np.abs(t.imag) > self.margin):
            raise OutOfTubeError(
                f"|Im t| = {np.abs(t.imag).max():.3g} exceeds analyticity margin {self.margin:.3g}"
            )
        return t

    def _series(self, t, coeffs, sign, deriv=0):
        t = self._guard(t)
        ks = sign * self.ks
        phase = np.exp(1j * np.multiply.outer(t, ks))
        weights = coeffs * (1j * ks) ** deriv
        return phase @ weights

    def q(self, t):
        """Holomorphic extension q(t) = sum c_k e^{ikt}."""
        return self._series(t, self.coeffs, 1)

    def qstar(self, t):
        """Holomorphic extension of the conjugate curve, q*(t) = sum conj(c_k) e^{-ikt}."""
        return self._series(t, np.conj(self.coeffs), -1)

    def dq(self, t, order=1):
        return self._series(t, self.coeffs, 1, order)

    def dqstar(self, t, order=1):
        return self._series(t, np.conj(self.coeffs), -1, order)

    def speed(self, t):
        """sqrt(q'(t) q*'(t)); equals |q'(t)| for real t and is holomorphic near the real axis."""
        return np.sqrt(self.dq(t) * self.dqstar(t))

    def rotated(self, s0):
        """Same curve with parameter origin moved: new q(t) = old q(t + s0)."""
        return AnalyticCurve(self.coeffs * np.exp(1j * self.ks * s0), check=self.check)

    def length(self, n=1024):
        s = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return float(np.mean(np.abs(self.dq(s))) * 2 * np.pi)

    # --- constructors -----------------------------------------------------

    @classmethod
    def from_modes(cls, modes, check=True):
        """Build from a mapping {k: c_k}."""
        K = max(abs(k) for k in modes)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in modes.items():
            c[k + K] = v
        return cls(c, check=check)

    @classmethod
    def from_samples(cls, points, rel_tol=1e-12):
        """Fit a curve to uniform samples q(2 pi j / N), dropping coefficients below rel_tol."""
        points = np.asarray(points, dtype=complex)
        n = points.size
        chat = np.fft.fft(points) / n
        ks = np.fft.fftfreq(n, 1.0 / n).astype(int)
        mags = np.abs(chat)
        keep = mags >= rel_tol * mags.max()
        K = int(np.abs(ks[keep]).max())
        if 2 * K + 1 >= n:
            raise CurveError("samples do not resolve the curve; coefficients do not decay")
        return cls.from_modes({int(k): chat[j] for j, k in enumerate(ks) if abs(k) <= K})


def unit_circle():
    return AnalyticCurve.from_modes({1: 1.0})


def circle(radius, center=0.0):
    return AnalyticCurve.from_modes({0: center, 1: radius})


def ellipse(b, a=1.0, center=0.0):
    """Ellipse (a cos s, b sin s) + center."""
    return AnalyticCurve.from_modes({-1: (a - b) / 2, 0: center, 1: (a + b) / 2})


def segment(half_length, angle=0.0, center=0.0):
    """Doubly traversed segment q(s) = center + half_length cos(s) e^{i angle}.

    Not an immersion; only useful as an interior test curve.
    """
    h = 0.5 * half_length * np.exp(1j * angle)
    return AnalyticCurve.from_modes({-1: h, 0: center, 1: h}, check=False)


def to_arclength(curve, n=None, tol=1e-10):
    """Reparametrize by normalized arclength (constant speed) and refit the series.

    The new parameter tau in [0, 2 pi) satisfies |q'(tau)| = L / (2 pi).
    Raises CurveError if the refit misses ``tol``.
    """
    n = n or max(256, 32 * curve.K)
    s = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    speed = np.abs(curve.dq(s))
    shat = np.fft.fft(speed) / n
    ks = np.fft.fftfreq(n, 1.0 / n)
    mean = shat[0].real
    length = 2 * np.pi * mean

    def arclen(x):
        # cumulative arclength via the Fourier primitive of |q'|
        x = np.asarray(x, dtype=float)
        nz = ks != 0
        terms = shat[nz] * (np.exp(1j * np.multiply.outer(x, ks[nz])) - 1) / (1j * ks[nz])
        return mean * x + terms.sum(axis=-1).real

    target = s * length / (2 * np.pi)
    sigma = s.copy()
    for _ in range(50):
        step = (arclen(sigma) - target) / np.abs(curve.dq(sigma))
        sigma -= step
        if np.max(np.abs(step)) < 1e-14:
            break
    fitted = AnalyticCurve.from_samples(curve.q(sigma), rel_tol=1e-14)
    err = np.max(np.abs(fitted.q(s) - curve.q(sigma)))
    if err > tol:
        raise CurveError(f"arclength refit error {err:.2e} exceeds {tol:g}")
    return fitted


@dataclass(frozen=True)
class AnnulusRegion:
    """Complexified parameter strip [0, 2 pi] + i[-epsilon, epsilon]."""

    epsilon: float
    curve: AnalyticCurve

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.epsilon >= self.curve.margin:
            raise OutOfTubeError(
                f"epsilon {self.epsilon:g} is not below the analyticity margin {self.curve.margin:.3g}"
            )

    def contains(self, t):
        return np.abs(np.imag(t)) < self.epsilon


# --- complexified distance and kernels ---------------------------------------

def eval_q(curve, t):
    return curve.q(t)


def eval_qstar(curve, t):
    return curve.qstar(t)


def r_squared(curve, s, t):
    """(q(s) - q(t)) (q*(s) - q*(t)); |q(s) - q(t)|^2 for real s, t."""
    return (curve.q(s) - curve.q(t)) * (curve.qstar(s) - curve.qstar(t))


def principal_r(curve, s, t, floor):
    """Principal square root of r^2, refused where Re r^2 drops below ``floor``."""
    r2 = r_squared(curve, s, t)
    if np.any(r2.real < floor):
        raise BranchUnsafeError(
            f"Re r^2 = {np.min(r2.real):.3g} below floor {floor:g}; principal branch not safe"
        )
    return np.sqrt(r2)


def cross_r_squared(source, target, s, t):
    """r^2 between source(s) and the complexified point target(t) of a second curve."""
    return (source.q(s) - target.q(t)) * (source.qstar(s) - target.qstar(t))


def _check_diagonal(s, t):
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    clash = (t.imag == 0) & (s.imag == 0) & (np.abs(np.exp(1j * s) - np.exp(1j * t)) < 1e-13)
    if np.any(clash):
        raise DiagonalSingularityError("source and target coincide on the real diagonal")


def normal_log_derivative(curve, s, t, unit=False, target=None):
    """d/dn log r with n the inward normal i q'(s) at the source point q(s).

    D = (i/2) [q'(s)/(q(s) - z) - q*'(s)/(q*(s) - z*)] with (z, z*) the
    complexified target point, by default (q(t), q*(t)) on the same curve or
    (target.q(t), target.qstar(t)) on another curve. With ``unit=True`` the
    result is divided by |q'(s)| (the unit-normal convention). s may be
    complex; then q'(s) and q*'(s) are the holomorphic extensions.
    """
    if target is None:
        _check_diagonal(s, t)
        target = curve
    z = target.q(t)
    zs = target.qstar(t)
    d = 0.5j * (curve.dq(s) / (curve.q(s) - z) - curve.dqstar(s) / (curve.qstar(s) - zs))
    if unit:
        d = d / curve.speed(s)
    return d


def target_normal_log_derivative(curve, s, t):
    """d/dn_t log r with n the inward normal i q'(t) at the target point."""
    _check_diagonal(s, t)
    return 0.5j * (
        curve.dqstar(t) / (curve.qstar(s) - curve.qstar(t)) - curve.dq(t) / (curve.q(s) - curve.q(t))
    )


def r2_times_normal_log_derivative(curve, s, t):
    """r^2 D computed without division; regular at s = t."""
    a = curve.q(s) - curve.q(t)
    b = curve.qstar(s) - curve.qstar(t)
    return 0.5j * (curve.dq(s) * b - curve.dqstar(s) * a)


def r2_times_target_normal_log_derivative(curve, s, t):
    a = curve.q(s) - curve.q(t)
    b = curve.qstar(s) - curve.qstar(t)
    return 0.5j * (curve.dqstar(t) * a - curve.dq(t) * b)


# --- cancellation-free forms near the diagonal ------------------------------

def divided_differences(curve, s, t):
    """(q(s) - q(t), q*(s) - q*(t)) divided by 2 sin((s - t)/2), without cancellation.

    Uses e^{iks} - e^{ikt} = 2i e^{ik(s+t)/2} sin(k(s-t)/2) term by term, so
    both quotients are accurate when s and t nearly coincide and tend to
    q'(t), q*'(t) on the diagonal.
    """
    s = curve._guard(s)
    t = curve._guard(t)
    s, t = np.broadcast_arrays(s, t)
    h = s - t
    mid = 0.5 * (s + t)
    ks = curve.ks
    half = np.sin(h / 2)
    small = np.abs(half) < 1e-12
    hk = np.multiply.outer(h, ks) / 2
    ratio = np.sin(hk) / np.where(small, 1.0, half)[..., None]
    # on the diagonal sin(k h/2)/sin(h/2) -> k
    ratio = np.where(small[..., None], ks.astype(complex), ratio)
    phase = np.exp(1j * np.multiply.outer(mid, ks))
    dq = (phase * ratio) @ (1j * curve.coeffs)
    dqs = (ratio / phase) @ (-1j * np.conj(curve.coeffs))
    return dq, dqs


def log_ratio(curve, s, t):
    """Principal log of rho = r^2 / (4 sin^2((s - t)/2)), analytic near the diagonal."""
    dq, dqs = divided_differences(curve, s, t)
    return np.log(dq * dqs)


def regular_normal_log_derivative(curve, s, t, radius=0.05, points=16):
    """d/dn log r at the source, with the removable diagonal singularity resolved.

    Away from the diagonal this is ``normal_log_derivative``. Where |s - t| is
    below 1e-3 the value is the mean over a small circle about s in the
    complex s-plane (exact for the analytic, removable-singularity kernel up
    to (|s - t| / radius)^points).
    """
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    s, t = np.broadcast_arrays(s, t)
    near = np.abs(np.angle(np.exp(1j * (s - t)))) + np.abs((s - t).imag) < 1e-3
    out = np.empty(s.shape, dtype=complex)
    far = ~near
    if np.any(far):
        out[far] = _raw_d(curve, s[far], t[far])
    if np.any(near):
        ring = radius * np.exp(2j * np.pi * np.arange(points) / points)
        sn = s[near][..., None] + ring
        out[near] = _raw_d(curve, sn, np.broadcast_to(t[near][..., None], sn.shape)).mean(axis=-1)
    return out


def _raw_d(curve, s, t):
    return 0.5j * (
        curve.dq(s) / (curve.q(s) - curve.q(t)) - curve.dqstar(s) / (curve.qstar(s) - curve.qstar(t))
    )


def regular_target_normal_log_derivative(curve, s, t, radius=0.05, points=16):
    """d/dn_t log r (target normal), diagonal singularity resolved as above."""
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    s, t = np.broadcast_arrays(s, t)
    near = np.abs(np.angle(np.exp(1j * (s - t)))) + np.abs((s - t).imag) < 1e-3
    out = np.empty(s.shape, dtype=complex)
    far = ~near
    if np.any(far):
        out[far] = _raw_dt(curve, s[far], t[far])
    if np.any(near):
        ring = radius * np.exp(2j * np.pi * np.arange(points) / points)
        sn = s[near][..., None] + ring
        out[near] = _raw_dt(curve, sn, np.broadcast_to(t[near][..., None], sn.shape)).mean(axis=-1)
    return out


def _raw_dt(curve, s, t):
    return 0.5j * (
        curve.dqstar(t) / (curve.qstar(s) - curve.qstar(t)) - curve.dq(t) / (curve.q(s) - curve.q(t))
    )


# --- file format --------------------------------------------------------------

def write_curve(curve, path):
    """Plain text: line 1 'K', then 'k re im' per coefficient (repr floats, exact round trip)."""
    lines = [str(curve.K)]
    for k, c in zip(curve.ks, curve.coeffs):
        lines.append(f"{k} {float(c.real)!r} {float(c.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve(path, check=True):
    text = Path(path).read_text().split("\n")
    rows = [ln.split() for ln in text if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ParseError(f"{path}: empty curve file")
    try:
        K = int(rows[0][0])
        modes = {}
        for row in rows[1:]:
            if len(row) != 3:
                raise ParseError(f"{path}: expected 'k re im', got {' '.join(row)!r}")
            k = int(row[0])
            if abs(k) > K:
                raise ParseError(f"{path}: mode {k} exceeds declared K={K}")
            modes[k] = complex(float(row[1]), float(row[2]))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if K < 0 or not modes:
        raise ParseError(f"{path}: no coefficients")
    c = np.zeros(2 * K + 1, dtype=complex)
    for k, v in modes.items():
        c[k + K] = v
    return AnalyticCurve(c, check=check)
