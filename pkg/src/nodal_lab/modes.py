"""Ground-truth eigenmodes and boundary traces.

An :class:`EigenMode` carries the frequency lambda (eigenvalue lambda^2), the
boundary condition and the boundary Cauchy trace u_lambda sampled on a
uniform grid of the curve parameter: the restriction of the eigenfunction for
Neumann modes, its interior normal derivative for Dirichlet modes. Traces are
normalized to unit L^2(boundary, arclength) norm.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv, jvp

from .errors import DegenerateTraceError, NormalizationError, ParseError, RootNotBracketedError
from .geometry import AnalyticCurve, unit_circle

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
BOUNDARY_CONDITIONS = (NEUMANN, DIRICHLET)


def default_samples(lam):
    return max(256, 16 * int(np.ceil(lam)))


def parameter_grid(n):
    return 2 * np.pi * np.arange(n) / n


@dataclass(frozen=True, eq=False)
class EigenMode:
    lam: float
    bc: str
    samples: np.ndarray
    curve: AnalyticCurve = field(default_factory=unit_circle)
    exact: Optional[Callable] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"bc must be one of {BOUNDARY_CONDITIONS}")
        u = np.array(self.samples, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "samples", u)

    @property
    def n(self):
        return self.samples.size

    @property
    def grid(self):
        return parameter_grid(self.n)

    @property
    def mode_id(self):
        md = self.metadata
        if "m" in md:
            return f"{md.get('family', 'mode')}-{md.get('parity', '')}{md['m']}-{md.get('n', '')}-{self.bc}"
        return md.get("name", f"mode-{self.lam:.6f}")

    def weights(self):
        """Arclength trapezoid weights on the sample grid."""
        return np.abs(self.curve.dq(self.grid)) * (2 * np.pi / self.n)

    def norm(self):
        return float(np.sqrt(np.sum(self.samples**2 * self.weights())))

    def fourier(self):
        """Coefficients u_k (numpy fft ordering) with u(s) = sum u_k e^{iks}."""
        return np.fft.fft(self.samples) / self.n

    def trace(self, t):
        """Trace at (possibly complex) parameter t.

        Uses the closed form when one is attached, otherwise the trigonometric
        interpolant of the samples (whose holomorphic extension is its own
        Fourier series).
        """
        if self.exact is not None:
            return self.exact(np.asarray(t, dtype=complex))
        return fourier_eval(self.fourier(), t)

    def derivative_samples(self, order=1):
        """Spectral derivative d^order u / ds^order on the sample grid."""
        return spectral_derivative(self.samples, order)


def fourier_eval(coeffs, t):
    n = coeffs.size
    ks = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        # split the Nyquist mode symmetrically so real data stays real
        ks = ks.copy()
        nyq = n // 2
        t = np.asarray(t, dtype=complex)
        body = np.exp(1j * np.multiply.outer(t, np.delete(ks, nyq))) @ np.delete(coeffs, nyq)
        return body + coeffs[nyq] * np.cos(nyq * t)
    return np.exp(1j * np.multiply.outer(np.asarray(t, dtype=complex), ks)) @ coeffs


def spectral_derivative(samples, order=1):
    n = samples.size
    ks = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        ks[n // 2] = 0.0
    return np.fft.ifft((1j * ks) ** order * np.fft.fft(samples)).real


def normalized(mode):
    """Return ``mode`` rescaled to unit boundary L^2 norm."""
    nrm = mode.norm()
    if not nrm > 1e-300 or not np.isfinite(nrm):
        raise NormalizationError("trace is numerically zero")
    if abs(nrm - 1.0) <= 1e-13:
        return mode
    exact = mode.exact
    if exact is not None:
        exact = _scaled(exact, 1.0 / nrm)
    return EigenMode(mode.lam, mode.bc, mode.samples / nrm, mode.curve, exact, dict(mode.metadata))


def _scaled(fn, c):
    return lambda t: c * fn(t)


# --- Bessel roots ---------------------------------------------------------------

@dataclass(frozen=True)
class BesselRoot:
    m: int
    n: int
    value: float
    kind: str  # "zero" or "critical"


def _root_function(m, kind):
    if kind == "zero":
        return lambda x: jv(m, x)
    if kind == "critical":
        return lambda x: jvp(m, x)
    raise ValueError("kind must be 'zero' or 'critical'")


def _bracket_roots(fn, start, count, step=0.1, limit=None):
    """Sign-change brackets of fn on (start, ...) until ``count`` are found."""
    limit = limit or start + 4.0 * count + 50.0
    brackets = []
    x0 = start
    f0 = fn(x0)
    while len(brackets) < count and x0 < limit:
        x1 = x0 + step
        f1 = fn(x1)
        if f0 == 0.0:
            brackets.append((x0 - step / 2, x0 + step / 2))
        elif f0 * f1 < 0:
            brackets.append((x0, x1))
        x0, f0 = x1, f1
    return brackets


def bessel_root(m, n, kind):
    """n-th positive zero (kind='zero') or critical point (kind='critical') of J_m."""
    if m < 0 or n < 1:
        raise ValueError("need m >= 0 and n >= 1")
    fn = _root_function(m, kind)
    # j_{m,1} > m and j'_{m,1} >= m for m >= 1; x = 0 is not counted as a critical point
    start = max(float(m), 0.0) + 1e-3
    brackets = _bracket_roots(fn, start, n)
    if len(brackets) < n:
        raise RootNotBracketedError(f"could not bracket root {n} of J_{m} ({kind})")
    a, b = brackets[n - 1]
    value = brentq(fn, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(fn(value)) > 1e-11:
        raise RootNotBracketedError(f"root {n} of J_{m} ({kind}) did not converge")
    return BesselRoot(m, n, float(value), kind)


def check_interlacing(m, n):
    """Assert the standard interlacing of zeros and critical points of J_m."""
    jp = bessel_root(m, n, "critical").value
    jz = bessel_root(m, n, "zero").value
    jp_next = bessel_root(m, n + 1, "critical").value
    if m >= 1:
        ok = jp < jz < jp_next
    else:
        # J0' = -J1 so j'_{0,n} = j_{1,n}, and j_{0,n} < j'_{0,n} < j_{0,n+1}
        ok = jz < jp < bessel_root(0, n + 1, "zero").value
    if not ok:
        raise AssertionError(f"interlacing violated for m={m}, n={n}")
    return True


# --- disc modes -----------------------------------------------------------------

def disc_mode(m, n, bc=NEUMANN, parity="sin", samples=None):
    """Normalized boundary trace of the (m, n) disc eigenfunction.

    phi = sin(m theta) J_m(lambda r) (or cos); lambda = j'_{m,n} for Neumann
    and j_{m,n} for Dirichlet. The Neumann trace is phi(1, theta), the
    Dirichlet trace is the interior normal derivative -d phi/dr at r = 1.
    """
    if parity not in ("sin", "cos"):
        raise ValueError("parity must be 'sin' or 'cos'")
    if m == 0 and parity != "cos":
        raise ValueError("m = 0 requires cos parity")
    kind = "critical" if bc == NEUMANN else "zero"
    lam = bessel_root(m, n, kind).value
    amp = jv(m, lam) if bc == NEUMANN else -lam * jvp(m, lam)
    if abs(amp) < 1e-14:
        raise DegenerateTraceError(f"trace of disc mode ({m}, {n}) vanishes identically")
    angular = np.sin if parity == "sin" else np.cos
    norm = np.sqrt(2 * np.pi) if m == 0 else np.sqrt(np.pi)
    c = np.sign(amp) / norm

    def exact(t):
        return c * angular(m * np.asarray(t, dtype=complex))

    N = samples or default_samples(lam)
    u = exact(parameter_grid(N)).real
    meta = {"family": "disc", "m": m, "n": n, "parity": parity, "radial_amplitude": float(amp)}
    return normalized(EigenMode(lam, bc, u, unit_circle(), exact, meta))


def disc_interior_value(mode, radius, t):
    """Closed-form eigenfunction at polar point (radius, t), t possibly complex.

    Scaled consistently with the normalized trace of ``mode``.
    """
    md = mode.metadata
    m = md["m"]
    # the trace carries J_m(lam) (Neumann) or -lam J_m'(lam) (Dirichlet)
    radial = jv(m, mode.lam * radius) / md["radial_amplitude"]
    return mode.exact(t) * radial


# --- trace files ------------------------------------------------------------

def write_trace(mode, path):
    """ASCII trace file: header 'lambda bc N', then N lines 's u(s)'."""
    lines = [f"{mode.lam!r} {mode.bc} {mode.n}"]
    for s, u in zip(mode.grid, mode.samples):
        lines.append(f"{float(s)!r} {float(u)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_trace(path, curve=None):
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ParseError(f"{path}: empty trace file")
    head = rows[0]
    if len(head) != 3:
        raise ParseError(f"{path}: header must be 'lambda bc N'")
    try:
        lam = float(head[0])
        n = int(head[2])
    except ValueError as exc:
        raise ParseError(f"{path}: bad header: {exc}") from exc
    bc = head[1].lower()
    if not lam > 0 or not np.isfinite(lam):
        raise ParseError(f"{path}: lambda must be positive, got {head[0]}")
    if bc not in BOUNDARY_CONDITIONS:
        raise ParseError(f"{path}: unknown boundary condition {head[1]!r}")
    if n < 64:
        raise ParseError(f"{path}: need at least 64 samples, got {n}")
    body = rows[1:]
    if len(body) != n:
        raise ParseError(f"{path}: header declares {n} samples, found {len(body)}")
    try:
        data = np.array([[float(a), float(b)] for a, b in body])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not np.allclose(data[:, 0], parameter_grid(n), rtol=0, atol=1e-9):
        raise ParseError(f"{path}: samples must be on the uniform grid 2 pi j / N")
    mode = EigenMode(lam, bc, data[:, 1], curve or unit_circle(), None, {"name": Path(path).stem})
    return normalized(mode)
