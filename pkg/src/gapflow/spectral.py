"""Sine-spectral backbone on (0,1): transforms, plate spectrum, semigroup, Duhamel kicks, norms.

Everything here is built on the pinned sine basis phi_k(x) = sin(k*pi*x), which
diagonalizes the plate operator A = Lap - Lap^2 with w = Lap w = 0 at x = 0,1:

    A phi_k = -mu_k phi_k,    mu_k = (k*pi)^2 + (k*pi)^4.

L2 normalization convention (documented once, used everywhere):

    int_0^1 sin(k*pi*x) sin(m*pi*x) dx = (1/2) * delta_km,

so every spectral norm in this module carries the factor 1/2, e.g.
||f||_L2^2 = sum_k f_k^2 / 2 for f = sum_k f_k sin(k*pi*x).

Collocation grid: x_j = j/(n+1), j = 1..n (interior nodes only; the boundary
value of a field lives in GridField.bv).  With n = k_max the type-I DST is a
square invertible map and round-trips are exact to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst


class QuenchSignal(RuntimeError):
    """The gap field touched (or crossed) zero somewhere an operation needed 1/w.

    The model is only defined while w > 0; rather than letting 1/w^2 turn into
    Inf/NaN and poison a whole run, operations that evaluate inverse powers of
    w raise this signal.  Drivers catch it and report touchdown.
    """

    def __init__(self, message: str, min_value: float = np.nan, t: float = np.nan):
        super().__init__(message)
        self.min_value = float(min_value)
        self.t = float(t)


@dataclass(frozen=True)
class BoundaryLift:
    """Constant boundary data: u = theta1 and w = theta2 on the boundary."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise ValueError(f"boundary values must be positive, got theta1={self.theta1}, theta2={self.theta2}")


@dataclass(frozen=True)
class GridField:
    """Samples of a field at the interior nodes x_j = j/(n+1), plus its constant boundary value."""

    values: np.ndarray
    bv: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or self.values.size < 3:
            raise ValueError("GridField needs a 1-d array with n >= 3 interior nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("GridField values must be finite")

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PlateSpectrum:
    """Eigenvalues mu_k of -A and frequencies omega_k = sqrt(mu_k) for k = 1..k_max.

    biharmonic_only=True drops the Laplacian term (mu_k = (k*pi)^4); used by the
    closed-form benchmark of the bare plate equation.
    """

    mu: np.ndarray
    omega: np.ndarray
    biharmonic_only: bool = False

    @property
    def k_max(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class StateVW:
    """Plate state in mode space: v = gap velocity, w = shifted gap w~ = w - theta2."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if self.v.shape != self.w.shape or self.v.ndim != 1:
            raise ValueError("v and w must be 1-d mode vectors of equal length")

    @property
    def k_max(self) -> int:
        return self.v.size


def grid(n: int) -> np.ndarray:
    """Interior collocation nodes x_j = j/(n+1), j = 1..n."""
    return np.arange(1, n + 1, dtype=float) / (n + 1)


def plate_eigenvalues(k_max: int, biharmonic_only: bool = False) -> PlateSpectrum:
    """mu_k = (k*pi)^2 + (k*pi)^4 (or (k*pi)^4 alone for the bare-plate benchmark)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    kpi = np.pi * np.arange(1, k_max + 1, dtype=float)
    mu = kpi**4 if biharmonic_only else kpi**2 + kpi**4
    return PlateSpectrum(mu=mu, omega=np.sqrt(mu), biharmonic_only=biharmonic_only)


def sine_transform(f) -> np.ndarray:
    """Forward DST: coeffs_k = 2/(n+1) * sum_j f(x_j) sin(k*pi*x_j).

    Exactly inverts inverse_sine_transform when n = k_max.  Note the transform
    sees only the interior samples; a constant boundary lift leaks into the
    coefficients as the sine series of the constant (~ 4/(k*pi) for odd k),
    which is the intended analytic behavior.
    """
    values = f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)
    return dst(values, type=1) / (values.size + 1)


def inverse_sine_transform(m: np.ndarray, bv: float = 0.0) -> GridField:
    """Evaluate sum_k m_k sin(k*pi*x_j) on the n = k_max grid (plus boundary tag bv)."""
    m = np.asarray(m, dtype=float)
    return GridField(values=dst(m, type=1) / 2.0, bv=bv)


def eval_modes_on(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate sum_k m_k sin(k*pi*x) at arbitrary points (used for fine/refined grids)."""
    m = np.asarray(m, dtype=float)
    k = np.arange(1, m.size + 1, dtype=float)
    return np.sin(np.outer(x, k * np.pi)) @ m


def pad_modes(m: np.ndarray, k_new: int) -> np.ndarray:
    """Zero-pad (or truncate) a mode vector to length k_new."""
    m = np.asarray(m, dtype=float)
    if k_new <= m.size:
        return m[:k_new].copy()
    out = np.zeros(k_new)
    out[: m.size] = m
    return out


def dealias_apply(func, *mode_args, bvs=None, pad: int = 2):
    """Apply a pointwise nonlinearity on a pad-times refined grid, truncate back.

    Each argument is a mode vector of length K; it is zero-padded to pad*K + 1
    modes, evaluated on the matching fine grid (with its boundary lift added),
    func is applied pointwise, and the raw result is transformed back and
    truncated to K modes.  Raw samples in, coefficients out — same convention
    as sine_transform, so a constant output shows up as its sine series.
    """
    k_max = np.asarray(mode_args[0]).size
    n_fine = pad * k_max + 1
    if bvs is None:
        bvs = (0.0,) * len(mode_args)
    fine_fields = []
    for m, bv in zip(mode_args, bvs):
        vals = dst(pad_modes(m, n_fine), type=1) / 2.0 + bv
        fine_fields.append(vals)
    out = func(*fine_fields)
    coeffs = dst(np.asarray(out, dtype=float), type=1) / (n_fine + 1)
    return coeffs[:k_max]


# Two-double angle handling for the rotation phases.  With omega_k ~ (k pi)^2
# and horizons up to t = 100 the raw product omega*t reaches ~1e7 rad; plain
# double reduction then injects ~|theta|*eps ~ 1e-9 rad of phase noise, which
# breaks the 1e-12 semigroup-law and benchmark tolerances.  Splitting the
# product exactly (Dekker) and reducing mod 2*pi with a hi/lo representation
# of 2*pi keeps the phase consistent to a few ulp at any horizon.

_TWO_PI_HI = 6.283185307179586232e0
_TWO_PI_LO = 2.449293598294706414e-16
_SPLITTER = 134217729.0  # 2^27 + 1


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLITTER * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def reduced_cossin(omega: np.ndarray, t: float):
    """cos/sin of omega*t with exact product + double-double mod-2pi reduction."""
    p, e = _two_prod(np.asarray(omega, dtype=float), float(t))
    n = np.round(p / _TWO_PI_HI)
    r_hi, r_lo = _two_prod(n, _TWO_PI_HI)
    theta = ((p - r_hi) - r_lo) + e - n * _TWO_PI_LO
    return np.cos(theta), np.sin(theta)


def semigroup_apply(s: StateVW, spec: PlateSpectrum, t: float) -> StateVW:
    """Closed-form mode-wise rotation e^{tA_k}: exact, unitary in the X-norm.

    Per mode:  w_k(t) =  w_k cos(om t) + v_k sin(om t)/om
               v_k(t) = -w_k om sin(om t) + v_k cos(om t)
    """
    if t < 0:
        raise ValueError("semigroup time must be >= 0")
    om = spec.omega
    c, sn = reduced_cossin(om, t)
    return StateVW(v=-s.w * om * sn + s.v * c, w=s.w * c + s.v * sn / om)


def norm_X(s: StateVW, spec: PlateSpectrum | None = None) -> float:
    """Energy norm of the state space X = L2 x H2*: sqrt( sum v_k^2/2 + sum mu_k w_k^2/2 )."""
    if spec is None:
        spec = plate_eigenvalues(s.k_max)
    return float(np.sqrt(0.5 * np.sum(s.v**2) + 0.5 * np.sum(spec.mu * s.w**2)))


def _hk_weights(k_max: int, k: int) -> np.ndarray:
    kpi2 = (np.pi * np.arange(1, k_max + 1)) ** 2
    lam = np.ones(k_max)
    p = np.ones(k_max)
    for _ in range(k):
        p = p * kpi2
        lam = lam + p
    return lam


def norm_Hk(f: np.ndarray, k: int) -> float:
    """Spectral Sobolev norm sqrt( sum_m (1 + (m pi)^2 + ... + (m pi)^{2k}) f_m^2 / 2 ).

    Exact for zero-trace functions in the sine span; see lifted_norm_H2 for
    fields carrying a boundary lift.  k up to 3 is supported (H^3 shows up in
    the elliptic form constants).
    """
    f = np.asarray(f, dtype=float)
    if k not in (0, 1, 2, 3):
        raise ValueError("norm_Hk supports k in {0,1,2,3}")
    return float(np.sqrt(0.5 * np.sum(_hk_weights(f.size, k) * f**2)))


def int_sine(k_max: int) -> np.ndarray:
    """int_0^1 sin(k pi x) dx = (1 - (-1)^k)/(k pi)  (4/(k pi) for odd k, 0 even)."""
    k = np.arange(1, k_max + 1, dtype=float)
    return (1.0 - (-1.0) ** np.arange(1, k_max + 1)) / (k * np.pi)


def int_x_sine(k_max: int) -> np.ndarray:
    """int_0^1 x sin(k pi x) dx = (-1)^{k+1}/(k pi)."""
    k = np.arange(1, k_max + 1, dtype=float)
    return (-1.0) ** np.arange(2, k_max + 2) / (k * np.pi)


def lifted_norm_H2(f: np.ndarray, bv: float, slope: float = 0.0) -> float:
    """H2 norm of ell(x) + f(x) where ell(x) = bv + slope*(x - 1/2) ... i.e. an affine lift.

    The sine-spectral H2 norm only sees the zero-trace part; for lifted fields
    (the physical w0 = theta2 + w~0, or G0 with its constant term) the L2 piece
    picks up cross terms:

        ||ell + f||_L2^2 = ||f||_L2^2 + int ell^2 + 2 int ell f,
        ||(ell + f)'||_L2^2 = ||f'||_L2^2 + slope^2 + 2*slope*int f'     (int f' = 0 boundary-to-boundary? no:
                               int_0^1 f' dx = f(1)-f(0) = 0 for zero-trace f),
        ||(ell + f)''||_L2^2 = ||f''||_L2^2   (ell'' = 0).

    So only the L2 term needs the closed-form sine moments.
    """
    f = np.asarray(f, dtype=float)
    k_max = f.size
    a = slope
    b = bv - 0.5 * slope  # ell(x) = a x + b
    int_ell_sq = a**2 / 3.0 + a * b + b**2
    int_ell_f = a * np.sum(f * int_x_sine(k_max)) + b * np.sum(f * int_sine(k_max))
    kpi2 = (np.pi * np.arange(1, k_max + 1)) ** 2
    l2 = 0.5 * np.sum(f**2) + int_ell_sq + 2.0 * int_ell_f
    h1 = 0.5 * np.sum(kpi2 * f**2) + a**2  # cross term vanishes: int f' = 0
    h2 = 0.5 * np.sum(kpi2**2 * f**2)
    return float(np.sqrt(l2 + h1 + h2))


def sobolev_embedding_constant(k_max: int, n_scan: int = 4096) -> float:
    """Sharp H2 -> Linf embedding constant on the k_max-mode sine subspace.

    By Cauchy-Schwarz, |f(x)| = |sum f_k sin(k pi x)| <= ||f||_H2 * C(x) with
        C(x)^2 = 2 sum_k sin^2(k pi x) / (1 + (k pi)^2 + (k pi)^4),
    and equality at f_k ~ sin(k pi x)/lambda_k, so max_x C(x) is the exact
    subspace operator norm.  It is grid/subspace specific (the continuum
    constant is its k_max -> inf limit) and stabilizes quickly since the
    weights decay like k^-4.
    """
    if k_max < 8:
        raise ValueError("k_max >= 8 required for a stable embedding estimate")

    def c_of(km):
        lam = _hk_weights(km, 2)
        x = (np.arange(1, n_scan + 1) - 0.5) / n_scan
        s = np.sin(np.outer(x, np.pi * np.arange(1, km + 1))) ** 2
        return float(np.sqrt(2.0 * np.max(s @ (1.0 / lam))))

    c_full = c_of(k_max)
    c_half = c_of(max(8, k_max // 2))
    if abs(c_full - c_half) > 0.05 * c_full:
        raise RuntimeError(
            f"embedding constant did not stabilize: C({k_max//2})={c_half:.6f} vs C({k_max})={c_full:.6f}"
        )
    return c_full


# --- Duhamel quadrature -----------------------------------------------------
#
# One step of the mild solution over [t0, t1], h = t1 - t0, forcing (g(s), 0)
# interpolated linearly between g0 = g(t0) and g1 = g(t1):
#
#   state(t1) = T(h) state(t0) + kick,
#   kick_v_k = h   * [ g0 (S - A) + g1 A ],
#   kick_w_k = h^2 * [ g0 (A - B) + g1 B ],
#
# with x = om_k h and the entire trig integrals done exactly:
#   S = sin(x)/x,   A = (1 - cos x)/x^2,   B = (1 - S)/x^2.
# A is evaluated as 2 sin^2(x/2)/x^2 and B by series for small x — the naive
# forms lose ~half the mantissa to cancellation exactly where the benchmark
# needs 1e-10.

_B_SERIES_CUT = 0.35


def _kick_coeffs(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, 1e-300)  # keeps the vector branches warning-free at x=0
    S = np.sinc(x / np.pi)
    A = 2.0 * np.sin(x / 2.0) ** 2 / xs**2
    A = np.where(x < 1e-8, 0.5, A)
    x2 = x * x
    b_series = 1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362880.0
    B = np.where(x < _B_SERIES_CUT, b_series, (1.0 - S) / xs**2)
    return S, A, B


def duhamel_step(
    s: StateVW,
    spec: PlateSpectrum,
    g0: np.ndarray,
    g1: np.ndarray,
    t0: float,
    t1: float,
    rule: str = "exp_trapezoid",
) -> StateVW:
    """Advance the mild solution one step; forcing enters the v-equation only.

    rule = "exp_trapezoid": piecewise-linear g, trig kernels integrated exactly
    (order 2, uniformly in omega; exact for constant and linear-in-t forcing).
    rule = "trapezoid": plain trapezoid on the kernel-weighted integrand (also
    order 2 but with an omega*h-dependent constant; kept for Richardson
    cross-checks of the exp-trapezoid kick).
    """
    h = t1 - t0
    if h < 0:
        raise ValueError("duhamel_step needs t1 >= t0")
    rot = semigroup_apply(s, spec, h)
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    om = spec.omega
    if rule == "exp_trapezoid":
        S, A, B = _kick_coeffs(om * h)
        dv = h * (g0 * (S - A) + g1 * A)
        dw = h * h * (g0 * (A - B) + g1 * B)
    elif rule == "trapezoid":
        x = om * h
        dv = 0.5 * h * (g0 * np.cos(x) + g1)
        dw = 0.5 * h * (g0 * np.sin(x) / om)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return StateVW(v=rot.v + dv, w=rot.w + dw)
