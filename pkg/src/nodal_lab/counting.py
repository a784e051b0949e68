"""Zero and critical-point counting on the real boundary and on the complex strip.

The complex count n(lambda, A(eps)) is the number of zeros of the continued
trace u^C in the strip [0, 2 pi] + i[-eps, eps]; it is computed by the
argument principle and cross-checked by the Jensen-type identity

    M(eps) + M(-eps) - 2 M(0) = int_0^eps n(lambda, A(rho)) d rho,
    M(xi) = (1 / 2 pi) int_0^{2 pi} log |u^C(x + i xi)| dx.
"""

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .continuation.interior import continue_interior
from .continuation.millar import MillarContinuation, volterra_profile, volterra_solve
from .errors import (
    DegenerateTraceError,
    LogSingularityError,
    NonIntegerWindingError,
    UnresolvedOscillationError,
    ZeroRestrictionError,
)
from .modes import DIRICHLET, NEUMANN, fourier_eval, parameter_grid, spectral_derivative

TWO_PI = 2 * np.pi
# irrational grid offset (fraction of a cell) so sample points avoid symmetric zeros
_OFFSET = (3 - math.sqrt(5)) / 2


# --- real boundary ---------------------------------------------------------

@dataclass(frozen=True)
class ZeroReport:
    count: int
    zeros: np.ndarray
    tangential: np.ndarray


def _scan_count(fn, n):
    s = (np.arange(n) + _OFFSET) * TWO_PI / n
    v = np.real(fn(s))
    sign_change = np.nonzero(v * np.roll(v, -1) < 0)[0]
    return s, v, sign_change


def scan_zeros(fn, n, scale=1.0):
    """Sign-change zeros of a real periodic function, refined to 1e-10.

    Local minima of |fn| below 1e-9 without a sign change are reported as
    tangential zeros. Raises UnresolvedOscillationError if doubling the
    sample count changes the sign-change count.
    """
    n = int(math.ceil(n * scale))
    s, v, idx = _scan_count(fn, n)
    _, _, idx2 = _scan_count(fn, 2 * n)
    if idx.size != idx2.size:
        raise UnresolvedOscillationError(
            f"sign changes {idx.size} at N={n} but {idx2.size} at N={2 * n}"
        )
    h = TWO_PI / n
    zeros = []
    for i in idx:
        lo = s[i]
        zeros.append(brentq(lambda x: float(np.real(fn(np.array([x]))[0])), lo, lo + h, xtol=1e-12))
    zeros = np.mod(np.array(zeros), TWO_PI)
    a = np.abs(v)
    minima = np.nonzero((a < np.roll(a, 1)) & (a < np.roll(a, -1)) & (a < 1e-9))[0]
    tangential = np.array([s[i] for i in minima if i not in idx and (i - 1) % n not in idx])
    return ZeroReport(int(idx.size), np.sort(zeros), tangential)


def _scan_size(mode):
    return max(64, mode.n, 16 * int(math.ceil(mode.lam)))


def _trace_fn(mode):
    if mode.exact is not None:
        return lambda s: np.real(mode.exact(np.asarray(s, dtype=complex)))
    coeffs = mode.fourier()
    return lambda s: np.real(fourier_eval(coeffs, s))


def boundary_zero_report(mode, scale=1.0):
    return scan_zeros(_trace_fn(mode), _scan_size(mode), scale)


def real_boundary_zeros(mode, scale=1.0):
    """Number of sign changes of the boundary trace (boundary nodal points)."""
    return boundary_zero_report(mode, scale).count


def tangential_derivative_samples(mode):
    """d u / ds on the sample grid (Fourier differentiation)."""
    return spectral_derivative(mode.samples, 1)


def critical_point_count(mode, scale=1.0):
    """Boundary critical points.

    Neumann: zeros of the tangential derivative of the trace. Dirichlet: zeros
    of the normal-derivative trace (the endpoints of open nodal lines). A
    Neumann trace with vanishing tangential derivative raises
    DegenerateTraceError (radial-type, non-isolated critical set).
    """
    if mode.bc == DIRICHLET:
        return real_boundary_zeros(mode, scale)
    du = tangential_derivative_samples(mode)
    if np.max(np.abs(du)) <= 1e-10 * max(np.max(np.abs(mode.samples)), 1e-300):
        raise DegenerateTraceError("tangential derivative vanishes identically")
    coeffs = np.fft.fft(du) / du.size
    return scan_zeros(lambda s: np.real(fourier_eval(coeffs, s)), _scan_size(mode), scale).count


def schiffer_ratio(mode):
    """||d_t u|| / ||u|| in L^2(boundary), d_t the unit tangential derivative."""
    if mode.bc != NEUMANN:
        raise ValueError("the Schiffer ratio is defined for Neumann modes")
    s = mode.grid
    speed = np.abs(mode.curve.dq(s))
    dt = tangential_derivative_samples(mode) / speed
    w = speed * TWO_PI / mode.n
    return float(np.sqrt(np.sum(dt**2 * w) / np.sum(mode.samples**2 * w)))


def goodness_ratio(mode, curve_c, n=None):
    """||u||_{L^2(boundary)} / ||phi||_{L^2(C)} for an interior curve C."""
    n = n or max(128, 4 * int(math.ceil(mode.lam)) + 64)
    s = parameter_grid(n)
    vals = np.array([continue_interior(mode, curve_c, x).value for x in s])
    w = np.abs(curve_c.dq(s)) * TWO_PI / n
    inner = math.sqrt(float(np.sum(np.abs(vals) ** 2 * w)))
    if inner < 1e-12:
        raise ZeroRestrictionError("eigenfunction vanishes on the interior curve")
    return mode.norm() / inner


# --- continued traces ------------------------------------------------------

class ContinuedTrace:
    """u^C(t) as a vectorized callable.

    method 'millar' uses the boundary integral pipeline with the vertical
    Volterra solve; 'fourier' evaluates the trace's Fourier series (with
    rounding-level coefficients removed) and serves as a fast cross-check.
    Real traces satisfy u^C(conj t) = conj u^C(t); ``reflect=True`` uses this
    to evaluate only Im t >= 0.

    Batches of more than ``level_nodes`` points on one horizontal level (the
    contour edges) are served by a trigonometric interpolant through Millar
    values at ``level_nodes`` equispaced columns of that level. x -> u^C(x + i xi)
    is periodic with the spectrum of the trace damped by e^{-k xi}, so this is
    spectrally accurate; one off-grid column is solved directly as a check and
    the column count doubles (up to 3 times) if the check fails ``level_tol``.
    """

    def __init__(self, mode, method="millar", resolution_scale=1.0, reflect=True,
                 level_nodes=None, level_tol=1e-6):
        self.mode = mode
        self.method = method
        self.reflect = reflect
        self.calls = 0
        self.level_tol = level_tol
        lam = float(mode.lam)
        n0 = level_nodes or int(math.ceil(resolution_scale * (2 * math.ceil(1.25 * lam) + 32)))
        self.level_nodes = n0 + (n0 % 2)
        self._levels = {}
        self.level_check = 0.0
        if method == "millar":
            self.cont = MillarContinuation(mode, resolution_scale=resolution_scale)
        elif method == "fourier":
            c = mode.fourier()
            self.coeffs = np.where(np.abs(c) < 1e-12 * np.abs(c).max(), 0.0, c)
        else:
            raise ValueError(f"unknown continuation method {method!r}")
        self.residual = 0.0

    def _one(self, t):
        self.calls += 1
        r = volterra_solve(self.mode, t, cont=self.cont)
        self.residual = max(self.residual, r.residual)
        return r.value

    def _direct(self, t):
        out = np.empty(t.shape, dtype=complex)
        for i, z in enumerate(t.flat):
            if self.reflect and z.imag < 0:
                out.flat[i] = np.conj(self._one(np.conj(z)))
            else:
                out.flat[i] = self._one(z)
        return out

    def level(self, xi):
        """Fourier coefficients (fft ordering) of x -> u^C(x + i xi)."""
        key = float(xi)
        if self.method == "fourier":
            n = self.coeffs.size
            return self.coeffs * np.exp(-key * np.fft.fftfreq(n, 1.0 / n))
        if key in self._levels:
            return self._levels[key]
        if self.reflect and key < 0:
            c = self.level(-key)
            # u^C(x - i xi) = conj u^C(x + i xi): coefficient k becomes conj of -k
            coeffs = np.conj(np.roll(c[::-1], 1))
            self._levels[key] = coeffs
            return coeffs
        n = self.level_nodes
        probe = complex(TWO_PI * _OFFSET, key)
        exact = self._direct(np.array([probe]))[0]
        for _ in range(4):
            x = TWO_PI * np.arange(n) / n
            coeffs = np.fft.fft(self._direct(x + 1j * key)) / n
            approx = fourier_eval(coeffs, np.array([probe.real]))[0]
            err = abs(approx - exact) / max(abs(exact), 1e-300)
            if err < self.level_tol:
                break
            n *= 2
        self.level_check = max(self.level_check, err)
        self._levels[key] = coeffs
        return coeffs

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        if self.method == "fourier":
            self.calls += t.size
            return fourier_eval(self.coeffs, t)
        out = np.empty(t.shape, dtype=complex)
        flat = t.ravel()
        res = out.ravel()
        levels = np.unique(flat.imag)
        for xi in levels:
            sel = flat.imag == xi
            if xi == 0:
                # real points need no Volterra solve; the RHS is the trace itself
                pts = flat[sel]
                self.calls += pts.size
                res[sel] = np.concatenate([self.cont.rhs(c) for c in np.array_split(pts, -(-pts.size // 64))])
            elif sel.sum() > self.level_nodes:
                res[sel] = fourier_eval(self.level(xi), flat[sel].real)
            else:
                res[sel] = self._direct(flat[sel])
        return res.reshape(t.shape)

    def vertical(self, a, eta):
        """Values on the coarse vertical nodes above/below a (one Volterra solve)."""
        if self.method == "fourier":
            taus = eta * np.linspace(0.0, 1.0, 17)
            return taus, fourier_eval(self.coeffs, a + 1j * taus)
        taus, vals, rel, _, _ = volterra_profile(self.cont, a, eta)
        self.residual = max(self.residual, float(rel.max()))
        return taus, vals


def level_max(coeffs, n_grid=None):
    """max_x |sum c_k e^{ikx}|: grid maximum refined by a bounded scalar search."""
    n_grid = n_grid or 8 * coeffs.size
    x = TWO_PI * np.arange(n_grid) / n_grid
    vals = np.abs(fourier_eval(coeffs, x))
    j = int(np.argmax(vals))
    h = TWO_PI / n_grid
    res = minimize_scalar(lambda xx: -abs(fourier_eval(coeffs, np.array([xx]))[0]),
                          bounds=(x[j] - h, x[j] + h), method="bounded", options={"xatol": 1e-12})
    return float(max(vals[j], -res.fun))


# --- argument principle ------------------------------------------------------

@dataclass(frozen=True)
class Contour:
    """Rectangle [a, b] x i[-rho, rho] with ``nodes`` points per horizontal edge."""

    a: float
    b: float
    rho: float
    nodes: int

    @property
    def periodic(self):
        return abs((self.b - self.a) - TWO_PI) < 1e-12


def _fd_derivative(values, h):
    """4th-order central difference on a padded sequence (2 extra points each side)."""
    v = values
    return (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)


def _edge_integral(f, z0, z1, nodes, periodic):
    """int f'/f dz along the straight edge z0 -> z1 (trapezoid, FD derivative)."""
    if periodic:
        h = (z1 - z0) / nodes
        z = z0 + h * np.arange(nodes)
        fz = f(z)
        padded = np.concatenate([fz[-2:], fz, fz[:2]])
        d = _fd_derivative(padded, h)
        return np.sum(d / fz) * h, fz
    h = (z1 - z0) / nodes
    z = z0 + h * np.arange(-2, nodes + 3)
    fz = f(z)
    d = _fd_derivative(fz, h)
    g = d / fz[2:-2]
    w = np.ones(nodes + 1)
    w[0] = w[-1] = 0.5
    return np.sum(w * g) * h, fz[2:-2]


def winding_number(f, contour):
    """Raw (1/2 pi i) closed integral of f'/f around the rectangle, and min |f| seen."""
    a, b, rho, n = contour.a, contour.b, contour.rho, contour.nodes
    bottom, fb = _edge_integral(f, complex(a, -rho), complex(b, -rho), n, contour.periodic)
    top, ft = _edge_integral(f, complex(a, rho), complex(b, rho), n, contour.periodic)
    total = bottom - top
    seen = [np.abs(fb).min(), np.abs(ft).min()]
    if not contour.periodic:
        nv = max(16, int(math.ceil(n * 2 * rho / (b - a))))
        right, fr = _edge_integral(f, complex(b, -rho), complex(b, rho), nv, False)
        left, fl = _edge_integral(f, complex(a, -rho), complex(a, rho), nv, False)
        total = total + right - left
        seen += [np.abs(fr).min(), np.abs(fl).min()]
    return total / (2j * np.pi), float(min(seen))


@dataclass(frozen=True)
class WindingResult:
    count: int
    raw: complex
    contour: Contour
    nudges: int


def count_zeros_argument_principle(f, contour, tolerance=0.25, max_nudges=3):
    """Zeros of f inside the rectangle, by the argument principle.

    If the raw winding is not within ``tolerance`` of an integer the contour
    is pushed half a cell outward (deterministically) and recomputed.
    """
    c = contour
    for k in range(max_nudges + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw, _ = winding_number(f, c)
        near = round(raw.real) if np.isfinite(raw) else 0
        if np.isfinite(raw) and abs(raw - near) < tolerance:
            return WindingResult(int(near), raw, c, k)
        cell = (c.b - c.a) / c.nodes
        if c.periodic:
            c = Contour(c.a, c.b, c.rho + 0.5 * cell, c.nodes)
        else:
            c = Contour(c.a - 0.5 * cell, c.b + 0.5 * cell, c.rho + 0.5 * cell, c.nodes)
    raise NonIntegerWindingError(f"winding {raw:.4f} is not near an integer after {max_nudges} nudges")


def strip_contour(mode, rho, scale=1.0):
    m = mode.metadata.get("m", 0) or 0
    k = max(m, math.ceil(mode.lam))
    # 4th-order FD scales the derivative of e^{ikx} by 1 - (kh)^4/30, a winding
    # error of about 2k (kh)^4 / 30; kh <= 0.2 keeps it below 0.01 for k <= 200.
    # Real zeros sit rho away from the edges, so f'/f varies on that scale too:
    # h <= rho / 3 keeps the per-zero bias (h / rho)^4 / 30 near 4e-4.
    nodes = int(math.ceil(scale * max(64, TWO_PI * k / 0.2, 3 * TWO_PI / rho)))
    return Contour(0.0, TWO_PI, rho, nodes)


# --- Jensen -------------------------------------------------------------------

def mean_log_modulus(f, xi, n):
    x = (np.arange(n) + _OFFSET) * TWO_PI / n
    v = np.abs(f(x + 1j * xi))
    if np.min(v) < 1e-13:
        raise LogSingularityError(f"|f| < 1e-13 on the level Im t = {xi}")
    return float(np.mean(np.log(v)))


def mean_log_modulus_real(f, zeros, n):
    """M(0) with the real zeros divided out: log|2 sin((x - z)/2)| has zero mean."""
    x = (np.arange(n) + _OFFSET) * TWO_PI / n
    v = np.abs(f(x.astype(complex)))
    for z in zeros:
        v = v / np.abs(2 * np.sin((x - z) / 2))
    if np.min(v) < 1e-13:
        raise LogSingularityError("|f| < 1e-13 on the real axis after removing its zeros")
    return float(np.mean(np.log(v)))


def jensen_count(f, epsilon, real_zeros, n=256):
    """M(eps) + M(-eps) - 2 M(0) (= int_0^eps n(A(rho)) d rho)."""
    return (mean_log_modulus(f, epsilon, n) + mean_log_modulus(f, -epsilon, n)
            - 2 * mean_log_modulus_real(f, real_zeros, n))


def jensen_derivative(f, epsilon, real_zeros, n=256, delta=None):
    """Central difference in eps of the Jensen integral (estimates n(A(eps)))."""
    delta = delta or 0.1 * epsilon
    m0 = mean_log_modulus_real(f, real_zeros, n)
    hi = mean_log_modulus(f, epsilon + delta, n) + mean_log_modulus(f, -epsilon - delta, n) - 2 * m0
    lo = mean_log_modulus(f, epsilon - delta, n) + mean_log_modulus(f, -epsilon + delta, n) - 2 * m0
    return (hi - lo) / (2 * delta)


# --- envelope ---------------------------------------------------------------

def strip_green(z, w, epsilon):
    """Green's function of the flat strip |Im z| < epsilon with pole at w."""
    return -np.log(np.abs(np.tanh(np.pi * (np.asarray(z) - w) / (4 * epsilon))))


@dataclass(frozen=True)
class Envelope:
    inner_count: int
    bound: float
    nu: float
    cells: int

    @property
    def holds(self):
        return self.inner_count <= self.bound


def envelope_check(f, epsilon, scale=1.0, nodes=None):
    """Zeros in |Im t| <= eps/2 against a Jensen bound on cells of width <= eps.

    Each cell [x_i -+ w/2] x i[-eps/2, eps/2] sits in the flat strip |Im t| < eps
    where G(z, x_i) >= nu (its value at the cell corner), so cell i holds at
    most (log M - log|f(x_i)|) / nu zeros, M = sup |f| over the strip.
    """
    cells = int(math.ceil(TWO_PI / epsilon))
    width = TWO_PI / cells
    nu = float(strip_green(complex(width / 2, epsilon / 2), 0.0, epsilon))
    nodes = nodes or int(math.ceil(scale * max(256, 8 * cells)))
    x = (np.arange(nodes) + _OFFSET) * TWO_PI / nodes
    top = np.abs(f(x + 1j * epsilon))
    bottom = np.abs(f(x - 1j * epsilon))
    centres = (np.arange(cells) + 0.5) * width
    at_centres = np.abs(f(centres.astype(complex)))
    log_m = float(np.log(max(top.max(), bottom.max(), at_centres.max())))
    with np.errstate(divide="ignore"):
        bound = float(np.sum(log_m - np.log(at_centres)) / nu)
    inner = count_zeros_argument_principle(f, Contour(0.0, TWO_PI, epsilon / 2, nodes)).count
    return Envelope(inner, bound, nu, cells)


# --- records ----------------------------------------------------------------

CSV_FIELDS = ("mode_id", "m", "n", "bc", "lambda", "epsilon", "n_real", "n_complex", "n_crit",
              "schiffer_ratio", "goodness_ratio", "max_log_mod", "status")


@dataclass
class CountRecord:
    mode_id: str
    m: Optional[int]
    n: Optional[int]
    bc: str
    lam: float
    epsilon: float
    n_real: Optional[int] = None
    n_complex: Optional[int] = None
    n_crit: Optional[int] = None
    schiffer_ratio: Optional[float] = None
    goodness_ratio: Optional[float] = None
    max_log_mod: Optional[float] = None
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)

    def row(self):
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return repr(x)
            return str(x)

        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return [fmt(d[k]) for k in CSV_FIELDS]


def count_mode(mode, epsilon, method="millar", resolution_scale=1.0, curve_c=None, complex_count=True):
    """CountRecord for one mode; failures are recorded in ``status``."""
    md = mode.metadata
    rec = CountRecord(mode.mode_id, md.get("m"), md.get("n"), mode.bc, float(mode.lam), epsilon)
    notes = []
    u = np.abs(mode.samples)
    rec.diagnostics["log_trace_at_0_over_max"] = float(np.log(max(u[0], 1e-300) / u.max()))
    for key in ("sigma", "angular_residual", "radial_residual"):
        if key in md:
            rec.diagnostics[key] = float(md[key])
    try:
        rep = boundary_zero_report(mode, resolution_scale)
        rec.n_real = rep.count
        rec.diagnostics["tangential_zeros"] = int(rep.tangential.size)
    except Exception as exc:  # recorded, not fatal
        notes.append(f"n_real:{type(exc).__name__}")
        rep = None
    try:
        rec.n_crit = critical_point_count(mode, resolution_scale)
    except DegenerateTraceError:
        notes.append("n_crit:degenerate")
    except Exception as exc:
        notes.append(f"n_crit:{type(exc).__name__}")
    if mode.bc == NEUMANN:
        rec.schiffer_ratio = schiffer_ratio(mode)
    if curve_c is not None:
        try:
            rec.goodness_ratio = goodness_ratio(mode, curve_c)
        except Exception as exc:
            notes.append(f"goodness:{type(exc).__name__}")
    if not complex_count:
        if notes:
            rec.status = "partial:" + ";".join(notes)
        return rec
    try:
        f = ContinuedTrace(mode, method, resolution_scale)
        wr = count_zeros_argument_principle(f, strip_contour(mode, epsilon, resolution_scale))
        rec.n_complex = wr.count
        rec.diagnostics["winding_raw"] = [wr.raw.real, wr.raw.imag]
        rec.diagnostics["nudges"] = wr.nudges
        rec.diagnostics["continuation_residual"] = f.residual
        # by the maximum principle the strip maximum sits on an edge
        rec.max_log_mod = math.log(max(level_max(f.level(epsilon)), level_max(f.level(-epsilon))))
    except Exception as exc:
        notes.append(f"n_complex:{type(exc).__name__}")
    if notes:
        rec.status = ";".join(notes) if rec.n_real is None and rec.n_complex is None else "partial:" + ";".join(notes)
    if rec.n_real is not None and rec.n_complex is not None and rec.n_real > rec.n_complex:
        rec.status = "violation:n_real>n_complex"
    return rec


def write_records_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow(r.row())


@dataclass
class ScalingResult:
    records: list
    slope_real: float  # least-squares n_real / lambda
    sup_real_ratio: float
    sup_complex_ratio: Optional[float]
    whispering_gallery: bool


def scaling_experiment(modes, epsilon, method="millar", resolution_scale=1.0, complex_counts=True,
                       mapper=map):
    """Count every mode of a family and fit n / lambda."""
    modes = list(modes)
    if not modes:
        raise ValueError("empty mode family")

    def one(mode):
        if complex_counts:
            return count_mode(mode, epsilon, method, resolution_scale)
        md = mode.metadata
        rec = CountRecord(mode.mode_id, md.get("m"), md.get("n"), mode.bc, float(mode.lam), epsilon)
        try:
            rec.n_real = real_boundary_zeros(mode, resolution_scale)
            rec.n_crit = critical_point_count(mode, resolution_scale)
        except DegenerateTraceError:
            rec.status = "partial:n_crit:degenerate"
        if mode.bc == NEUMANN:
            rec.schiffer_ratio = schiffer_ratio(mode)
        return rec

    records = list(mapper(one, modes))
    lam = np.array([r.lam for r in records])
    nr = np.array([np.nan if r.n_real is None else r.n_real for r in records], dtype=float)
    ok = np.isfinite(nr)
    slope = float(np.sum(nr[ok] * lam[ok]) / np.sum(lam[ok] ** 2)) if ok.any() else float("nan")
    ratios = nr[ok] / lam[ok]
    sup_real = float(ratios.max()) if ok.any() else float("nan")
    nc = [r.n_complex / r.lam for r in records if r.n_complex is not None]
    sup_c = float(max(nc)) if nc else None
    return ScalingResult(records, slope, sup_real, sup_c, bool(sup_real > 1.8))
