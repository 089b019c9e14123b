"""
Plane fields on a periodic square: the Ahlfors-Beurling transform as the
Fourier multiplier conj(xi)/xi, heat extensions, the heat-extension bilinear
identity and the structural identities of the mode ansatz f = e^{2i theta}(m + ik).

Derivatives are unhalved: d = d_x - i d_y, dbar = d_x + i d_y.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import integrate, ndimage
from scipy.interpolate import CubicSpline, PchipInterpolator

from abnorm.core.burkholder import Exponent
from abnorm.core.errors import (
    InvalidProfileError,
    NonzeroMeanError,
    ResolutionInsufficientError,
    SupportMismatchError,
    SurrogateValidationError,
    TailTooHeavyError,
)
from abnorm.core.radial_reduction import (
    RadialGrid,
    RadialProfile,
    angular_modes,
    radial_beurling_profile,
)

logger = logging.getLogger(__name__)

MEAN_FREE_TOL = 1e-12
MODE_CONCENTRATION = 0.99
TAIL_FRACTION = 1e-4
T_MIN = 1e-6


@dataclass(frozen=True, eq=False)
class PlaneField:
    """n x n complex samples on [-L/2, L/2)^2; axis 0 is y, axis 1 is x"""
    samples: np.ndarray
    extent: float

    def __post_init__(self):
        samples = np.asarray(self.samples)
        n = samples.shape[0] if samples.ndim == 2 else 0
        if samples.ndim != 2 or samples.shape != (n, n) or n < 2 or n & (n - 1):
            raise InvalidProfileError(f"field must be square with a power-of-two side, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidProfileError("field samples must be finite")
        if self.extent <= 0:
            raise InvalidProfileError("extent must be positive")

    @classmethod
    def zeros(cls, n: int, extent: float) -> 'PlaneField':
        return cls(np.zeros((n, n), dtype=complex), extent)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], n: int, extent: float) -> 'PlaneField':
        """Samples func(x + iy) at the grid points"""
        axis = -extent / 2.0 + extent * np.arange(n) / n
        x, y = np.meshgrid(axis, axis)
        return cls(np.asarray(func(x + 1j * y), dtype=complex) * np.ones((n, n)), extent)

    @classmethod
    def from_radial(cls, profile: RadialProfile, n: int, extent: float) -> 'PlaneField':
        """Embeds g(|z|) by monotone cubic interpolation; constant below the first node, 0 past the last"""
        r = profile.nodes
        real = PchipInterpolator(r, np.real(profile.samples), extrapolate=False)
        imag = PchipInterpolator(r, np.imag(profile.samples), extrapolate=False)

        def radial(z):
            rho = np.clip(np.abs(z), r[0], None)
            values = real(rho) + 1j * imag(rho)
            return np.where(np.abs(z) > r[-1], 0.0, np.nan_to_num(values))
        return cls.from_function(radial, n, extent)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    @property
    def mean(self) -> complex:
        return complex(np.mean(self.samples))

    def with_samples(self, samples) -> 'PlaneField':
        return PlaneField(samples, self.extent)

    def frequencies(self) -> Tuple[np.ndarray, np.ndarray]:
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        return np.meshgrid(k, k)

    def integral(self, values=None) -> complex:
        values = self.samples if values is None else values
        return complex(np.sum(values) * self.spacing ** 2)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.spacing ** 2))

    def lp_norm(self, e: Exponent) -> float:
        return float((np.sum(np.abs(self.samples) ** e.p) * self.spacing ** 2) ** (1.0 / e.p))

    def sampler(self) -> Callable[[np.ndarray], np.ndarray]:
        """Periodic bilinear interpolation at arbitrary complex points"""
        h, half = self.spacing, self.extent / 2.0
        real, imag = np.real(self.samples), np.imag(self.samples)

        def sample(points):
            points = np.asarray(points)
            coords = np.stack([(points.imag + half) / h, (points.real + half) / h]).reshape(2, -1)
            values = (ndimage.map_coordinates(real, coords, order=1, mode='grid-wrap')
                      + 1j * ndimage.map_coordinates(imag, coords, order=1, mode='grid-wrap'))
            return values.reshape(points.shape)
        return sample

    def assert_central_support(self, tol: float = 1e-8):
        """Samples outside the central square of side L/2 stay below tol * max"""
        scale = np.max(np.abs(self.samples))
        if scale == 0:
            return
        axis = -self.extent / 2.0 + self.spacing * np.arange(self.n)
        x, y = np.meshgrid(axis, axis)
        outside = (np.abs(x) >= self.extent / 4.0) | (np.abs(y) >= self.extent / 4.0)
        leak = np.max(np.abs(self.samples[outside])) / scale
        if leak > tol:
            raise SupportMismatchError(f"field leaks {leak:.2e} outside the central quarter")


def _multiply(f: PlaneField, multiplier: np.ndarray) -> PlaneField:
    return f.with_samples(np.fft.ifft2(np.fft.fft2(f.samples) * multiplier))


def spectral_derivatives(f: PlaneField) -> Tuple[PlaneField, PlaneField]:
    """(dbar f, d f) with multipliers i xi and i conj(xi), xi = k_x + i k_y"""
    kx, ky = f.frequencies()
    return _multiply(f, 1j * kx - ky), _multiply(f, 1j * kx + ky)


def ab_transform(f: PlaneField, require_mean_free: bool = True) -> PlaneField:
    """Multiplier conj(xi)/xi, zero at xi = 0"""
    scale = np.max(np.abs(f.samples))
    if require_mean_free and abs(f.mean) >= MEAN_FREE_TOL * max(scale, np.finfo(float).tiny) and scale > 0:
        raise NonzeroMeanError(f"field mean {abs(f.mean):.3e} is not negligible")
    kx, ky = f.frequencies()
    xi = kx + 1j * ky
    multiplier = np.zeros_like(xi)
    nonzero = xi != 0
    multiplier[nonzero] = np.conj(xi[nonzero]) / xi[nonzero]
    return _multiply(f, multiplier)


def heat_extend(f: PlaneField, t: float) -> PlaneField:
    if t <= 0:
        raise ValueError("heat extension needs t > 0")
    kx, ky = f.frequencies()
    return _multiply(f, np.exp(-(kx ** 2 + ky ** 2) * t))


@dataclass
class CrossCheckResult:
    phase_mode: Optional[int]
    mismatch: float
    energy_fraction: float
    norm_ratio: float
    output: PlaneField

    def to_dict(self) -> dict:
        return {
            'phaseMode': self.phase_mode,
            'mismatch': self.mismatch,
            'energyFraction': self.energy_fraction,
            'normRatio': self.norm_ratio,
        }


def crosscheck_radial(g: RadialProfile, e: Exponent, n: int = 256, extent: float = 32.0,
                      n_phi: int = 256) -> CrossCheckResult:
    """
    T applied to the radial field g(|z|) by FFT, compared with the 1D prediction
    e^{-2i phi} (Lambda_0 gamma)(r^2), gamma(u) = g(sqrt u).

    The dominant mode index is read off the output; mismatch is the relative
    L^2(r dr) distance between its radial factor and the prediction.
    """
    field_in = PlaneField.from_radial(g, n, extent)
    field_in.assert_central_support()
    if abs(field_in.mean) > 0:
        logger.debug(f"radial embedding mean {abs(field_in.mean):.3e} dropped by the multiplier")
    output = ab_transform(field_in, require_mean_free=False)
    radial = g.grid.with_measure('radial')
    modes = angular_modes(output, radial, n_phi)
    energy = np.sum(radial.weights[:, None] * np.abs(modes) ** 2, axis=0)
    total = float(np.sum(energy))
    if total == 0:
        return CrossCheckResult(None, 0.0, 0.0, 0.0, output)
    index = int(np.argmax(energy))
    fraction = float(energy[index] / total)
    phase_mode = index if index <= n_phi // 2 else index - n_phi
    if fraction < MODE_CONCENTRATION:
        raise ResolutionInsufficientError(f"mode {phase_mode} carries only {fraction:.4f} of the energy")
    predicted = radial_beurling_profile(g).samples
    difference = np.sum(radial.weights * np.abs(modes[:, index] - predicted) ** 2)
    reference = np.sum(radial.weights * np.abs(predicted) ** 2)
    mismatch = float(np.sqrt(difference / reference)) if reference > 0 else float(np.sqrt(difference))
    input_norm = field_in.lp_norm(e)
    norm_ratio = output.lp_norm(e) / input_norm if input_norm > 0 else 0.0
    logger.debug(f"crosscheck n={n}: mode {phase_mode}, fraction {fraction:.6f}, mismatch {mismatch:.3e}")
    return CrossCheckResult(phase_mode, mismatch, fraction, norm_ratio, output)


@dataclass
class HextResult:
    """
    Both sides of the heat-extension identity.

    `variants` holds the relative residual of every pairing against rhs and
    `holds` names the closest one; lhs is that pairing, so residual compares
    lhs with rhs. `displayed` is int f * T g as written, whatever wins.
    """
    lhs: complex
    rhs: complex
    residual: float
    displayed: complex = 0j
    variants: Dict[str, float] = field(default_factory=dict)
    holds: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            'lhs': [self.lhs.real, self.lhs.imag],
            'rhs': [self.rhs.real, self.rhs.imag],
            'displayed': [self.displayed.real, self.displayed.imag],
            'displayedResidual': self.variants.get('displayed'),
            'residual': self.residual,
            'variants': dict(self.variants),
            'holds': self.holds,
        }


def _relative(a: complex, b: complex) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def hext_residual(f: PlaneField, g: PlaneField, t_max: Optional[float] = None, nt: int = 400) -> HextResult:
    """
    lhs = int f T g dA against rhs = -2 int_0^inf int (d_x + i d_y) f_t (d_x + i d_y) g_t dA dt.

    The t-integral uses nt log-spaced nodes on [T_MIN, t_max] (trapezoid in ln t)
    plus I(T_MIN) * T_MIN for (0, T_MIN); the neglected tail I(t_max) * t_max
    must stay below TAIL_FRACTION of the total.
    """
    if f.n != g.n or f.extent != g.extent:
        raise InvalidProfileError("heat identity needs fields on one grid")
    f.assert_central_support()
    g.assert_central_support()
    t_max = 10.0 * f.extent ** 2 if t_max is None else t_max
    kx, ky = f.frequencies()
    dbar = 1j * kx - ky
    laplace = kx ** 2 + ky ** 2
    f_hat, g_hat = np.fft.fft2(f.samples) * dbar, np.fft.fft2(g.samples) * dbar
    cell = f.spacing ** 2
    times = np.geomspace(T_MIN, t_max, nt)

    def pairing(t):
        decay = np.exp(-laplace * t)
        return np.sum(np.fft.ifft2(f_hat * decay) * np.fft.ifft2(g_hat * decay)) * cell

    values = np.array([pairing(t) for t in times])
    accumulated = integrate.trapezoid(values * times, np.log(times)) + values[0] * times[0]
    rhs = complex(-2.0 * accumulated)
    tail = abs(values[-1]) * times[-1]
    if tail >= TAIL_FRACTION * max(abs(accumulated), np.finfo(float).tiny) and tail > 0:
        raise TailTooHeavyError(f"heat integrand tail {tail:.3e} against total {abs(accumulated):.3e}")

    transform = ab_transform(g, require_mean_free=False).samples
    conjugated = np.conj(ab_transform(g.with_samples(np.conj(g.samples)), require_mean_free=False).samples)
    displayed = f.integral(f.samples * transform)
    paired = f.integral(f.samples * conjugated)
    candidates = {
        'displayed': displayed,
        'displayed_negated': -displayed,
        'conjugated': paired,
        'conjugated_negated': -paired,
    }
    variants = {name: _relative(value, rhs) for name, value in candidates.items()}
    holds = min(variants, key=variants.get)
    logger.debug(f"heat identity: closest pairing {holds} at {variants[holds]:.3e}")
    return HextResult(candidates[holds], rhs, variants[holds], displayed, variants, holds)


@dataclass(frozen=True)
class SurrogatePhi:
    """Smooth Phi(x, y) with Phi_1, Phi_11, Phi_12 (first index = first argument)"""
    phi: Callable
    phi_1: Callable
    phi_11: Callable
    phi_12: Callable
    name: str = 'custom'
    fd_tol: float = 1e-6

    def __post_init__(self):
        self.validate()

    @classmethod
    def default(cls) -> 'SurrogatePhi':
        """Phi = x^2 y + x y^2"""
        return cls(
            phi=lambda x, y: x * x * y + x * y * y,
            phi_1=lambda x, y: 2.0 * x * y + y * y,
            phi_11=lambda x, y: 2.0 * y,
            phi_12=lambda x, y: 2.0 * x + 2.0 * y,
            name='x2y+xy2',
        )

    @classmethod
    def trigonometric(cls) -> 'SurrogatePhi':
        """Phi = sin(x) (1 + y^2)"""
        return cls(
            phi=lambda x, y: np.sin(x) * (1.0 + y * y),
            phi_1=lambda x, y: np.cos(x) * (1.0 + y * y),
            phi_11=lambda x, y: -np.sin(x) * (1.0 + y * y),
            phi_12=lambda x, y: 2.0 * y * np.cos(x),
            name='sin(x)(1+y2)',
        )

    def validate(self, low: float = 0.05, high: float = 3.0, count: int = 9):
        """Central differences of Phi (for Phi_1) and of Phi_1 (for Phi_11, Phi_12)"""
        axis = np.linspace(low, high, count)
        x, y = np.meshgrid(axis, axis)
        h = 1e-4 * (1.0 + np.maximum(x, y))
        estimates = {
            'phi_1': ((self.phi(x + h, y) - self.phi(x - h, y)) / (2 * h), self.phi_1(x, y)),
            'phi_11': ((self.phi_1(x + h, y) - self.phi_1(x - h, y)) / (2 * h), self.phi_11(x, y)),
            'phi_12': ((self.phi_1(x, y + h) - self.phi_1(x, y - h)) / (2 * h), self.phi_12(x, y)),
        }
        for name, (approx, supplied) in estimates.items():
            supplied = np.asarray(supplied, dtype=float) * np.ones_like(x)
            scale = max(np.max(np.abs(supplied)), 1.0)
            deviation = np.max(np.abs(approx - supplied)) / scale
            if not np.isfinite(deviation) or deviation > self.fd_tol:
                raise SurrogateValidationError(f"{name} of {self.name} deviates by {deviation:.2e}")


@dataclass(frozen=True, eq=False)
class ModePair:
    """
    f = e^{2i theta}(m(r) + i k(r)), g = xi(r) + i eta(r), with radial derivatives.

    Missing derivatives are taken from cubic splines of the samples.
    """
    m: RadialProfile
    k: RadialProfile
    xi: RadialProfile
    eta: RadialProfile
    derivatives: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None
    origin_tol: float = 1e-6
    support_tol: float = 1e-8

    def __post_init__(self):
        nodes = self.m.nodes
        for profile in (self.k, self.xi, self.eta):
            if not np.array_equal(profile.nodes, nodes):
                raise InvalidProfileError("mode pair profiles must share one grid")
        for profile in (self.m, self.k, self.xi, self.eta):
            if np.iscomplexobj(profile.samples) and np.any(np.imag(profile.samples) != 0):
                raise InvalidProfileError("mode pair profiles must be real")
        modulus = np.hypot(self.m.real, self.k.real)
        scale = max(np.max(modulus), np.max(np.hypot(self.xi.real, self.eta.real)))
        if scale > 0:
            if modulus[0] > self.origin_tol * scale:
                raise InvalidProfileError("m(0) = k(0) = 0 is violated")
            tail = max(modulus[-1], np.hypot(self.xi.real[-1], self.eta.real[-1]))
            if tail > self.support_tol * scale:
                raise InvalidProfileError("mode pair is not supported inside the grid")

    @classmethod
    def from_functions(cls, grid: RadialGrid, m, k, xi, eta, derivatives=None) -> 'ModePair':
        r = grid.nodes
        profiles = [RadialProfile(grid, np.asarray(func(r), dtype=float) * np.ones_like(r)) for func in (m, k, xi, eta)]
        slopes = None
        if derivatives is not None:
            slopes = tuple(np.asarray(func(r), dtype=float) * np.ones_like(r) for func in derivatives)
        return cls(*profiles, derivatives=slopes)

    @property
    def grid(self) -> RadialGrid:
        return self.m.grid

    def values(self) -> Tuple[np.ndarray, ...]:
        return tuple(p.real for p in (self.m, self.k, self.xi, self.eta))

    def slopes(self) -> Tuple[np.ndarray, ...]:
        if self.derivatives is not None:
            return self.derivatives
        r = self.grid.nodes
        return tuple(CubicSpline(r, values)(r, 1) for values in self.values())


@dataclass
class StructuralReport:
    """Relative deviations (each divided by its own scale) of the mode-ansatz identities"""
    d1_circle: float
    c_integrand: float
    angular_jacobian: float
    radial_jacobian: float
    d2_closed_form: float
    a_closed_form: float
    ibp_origin: float
    ibp_sum: float
    ibp_off_origin: float
    a_integral: float = 0.0
    b_integral: float = 0.0

    def to_dict(self) -> dict:
        return {
            'd1Circle': self.d1_circle,
            'cIntegrand': self.c_integrand,
            'angularJacobian': self.angular_jacobian,
            'radialJacobian': self.radial_jacobian,
            'd2ClosedForm': self.d2_closed_form,
            'aClosedForm': self.a_closed_form,
            'ibpOrigin': self.ibp_origin,
            'ibpSum': self.ibp_sum,
            'ibpOffOrigin': self.ibp_off_origin,
            'a': self.a_integral,
            'b': self.b_integral,
        }


def _theta_derivative(values: np.ndarray) -> np.ndarray:
    n_theta = values.shape[1]
    wavenumbers = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    return np.real(np.fft.ifft(1j * wavenumbers[None, :] * np.fft.fft(values, axis=1), axis=1))


def _cross(p_r, p_theta, q_r, q_theta, r):
    """Im(grad P conj(grad Q)) for gradients written as complex numbers"""
    return -(p_r * q_theta - p_theta * q_r) / r


def _ratio(numerator, denominator):
    return np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator != 0)


def _relative_deviation(a, b) -> float:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else 0.0


def _ibp_residual(a: float, b: float, boundary: float, scale: float) -> float:
    return abs(a + b + boundary) / scale if scale > 0 else 0.0


def structural_identities(mp: ModePair, phi: SurrogatePhi, n_theta: int = 64,
                          off_origin_fraction: float = 0.25) -> StructuralReport:
    """
    Term-by-term Hessian expressions of A, C, D1, D2 on a polar grid against
    their closed forms, and the integration-by-parts identity
    a + b = -4 pi Phi_1(M(r0), N(r0)) M(r0) from the first node and from an interior node.
    """
    r = mp.grid.nodes
    m, k, xi, eta = mp.values()
    dm, dk, dxi, deta = mp.slopes()
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    cos2, sin2 = np.cos(2.0 * theta)[None, :], np.sin(2.0 * theta)[None, :]

    def col(a):
        return np.asarray(a)[:, None]
    rr = col(r)

    u = col(m) * cos2 - col(k) * sin2
    v = col(m) * sin2 + col(k) * cos2
    u_r = col(dm) * cos2 - col(dk) * sin2
    v_r = col(dm) * sin2 + col(dk) * cos2
    u_t, v_t = _theta_derivative(u), _theta_derivative(v)
    xi_grid, eta_grid = col(xi) * np.ones_like(u), col(eta) * np.ones_like(u)
    xi_r, eta_r = col(dxi) * np.ones_like(u), col(deta) * np.ones_like(u)
    xi_t, eta_t = _theta_derivative(xi_grid), _theta_derivative(eta_grid)

    big_m = np.hypot(m, k)
    big_n = np.hypot(xi, eta)
    m_slope = _ratio(m * dm + k * dk, big_m)
    n_slope = _ratio(xi * dxi + eta * deta, big_n)
    phi_1 = phi.phi_1(big_m, big_n) * np.ones_like(r)
    phi_11 = phi.phi_11(big_m, big_n) * np.ones_like(r)
    phi_12 = phi.phi_12(big_m, big_n) * np.ones_like(r)

    mixed = col(_ratio(phi_12, big_m * big_n))
    b13, b23 = mixed * u * xi_grid, mixed * v * xi_grid
    b14, b24 = mixed * u * eta_grid, mixed * v * eta_grid
    radial_sum = col(phi_11) + col(_ratio(phi_1, big_m))

    # z1 = grad u, z2 = grad v, zeta1 = grad xi, zeta2 = grad eta
    d1 = (b13 * _cross(eta_r, eta_t, u_r, u_t, rr) + b23 * _cross(eta_r, eta_t, v_r, v_t, rr)
          + b14 * _cross(u_r, u_t, xi_r, xi_t, rr) + b24 * _cross(v_r, v_t, xi_r, xi_t, rr))
    d2 = (b13 * _cross(v_r, v_t, xi_r, xi_t, rr) + b23 * _cross(xi_r, xi_t, u_r, u_t, rr)
          + b14 * _cross(v_r, v_t, eta_r, eta_t, rr) + b24 * _cross(eta_r, eta_t, u_r, u_t, rr))
    a_term = radial_sum * _cross(v_r, v_t, u_r, u_t, rr)
    c_integrand = _cross(eta_r, eta_t, xi_r, xi_t, rr)

    d1_scale = np.max(np.abs(mixed * (np.abs(u) * np.abs(u_t) + np.abs(v) * np.abs(v_t))
                             * (np.abs(eta_grid * xi_r) + np.abs(xi_grid * eta_r)) / rr))
    d1_circle = np.abs(np.mean(d1, axis=1)) * 2.0 * np.pi
    d1_relative = float(np.max(d1_circle) / (2.0 * np.pi * d1_scale)) if d1_scale > 0 else 0.0
    c_scale = np.max(np.abs(xi_r * eta_grid) + np.abs(eta_r * xi_grid)) + np.max(np.abs(xi_grid) + np.abs(eta_grid))
    c_relative = float(np.max(np.abs(c_integrand)) / c_scale) if c_scale > 0 else 0.0

    angular = u * v_t - v * u_t
    radial_jac = u_r * v_t - v_r * u_t
    d2_closed = col(2.0 / r * phi_12 * big_m * n_slope) * np.ones_like(u)
    a_closed = col(2.0 / r * (phi_11 * big_m * m_slope + phi_1 * m_slope)) * np.ones_like(u)

    a_density = 4.0 * np.pi * (phi_12 * big_m * n_slope + phi_11 * big_m * m_slope)
    b_density = 4.0 * np.pi * phi_1 * m_slope
    ibp_scale_density = 4.0 * np.pi * (np.abs(phi_12 * big_m * n_slope) + np.abs(phi_11 * big_m * m_slope)
                                       + np.abs(phi_1 * m_slope))

    def ibp(start: int) -> Tuple[float, float, float, float]:
        a_val = float(integrate.simpson(a_density[start:], x=r[start:]))
        b_val = float(integrate.simpson(b_density[start:], x=r[start:]))
        boundary = 4.0 * np.pi * phi_1[start] * big_m[start]
        scale = float(integrate.simpson(ibp_scale_density[start:], x=r[start:])) + abs(boundary)
        return a_val, b_val, boundary, scale

    a_val, b_val, boundary, scale = ibp(0)
    inner = int(np.searchsorted(r, r[0] + off_origin_fraction * (r[-1] - r[0])))
    a_off, b_off, boundary_off, scale_off = ibp(inner)

    report = StructuralReport(
        d1_circle=d1_relative,
        c_integrand=c_relative,
        angular_jacobian=_relative_deviation(angular, col(2.0 * big_m ** 2)),
        radial_jacobian=_relative_deviation(radial_jac, col(2.0 * (m * dm + k * dk))),
        d2_closed_form=_relative_deviation(d2, d2_closed),
        a_closed_form=_relative_deviation(a_term, a_closed),
        ibp_origin=_ibp_residual(a_val, b_val, boundary, scale),
        ibp_sum=abs(a_val + b_val) / scale if scale > 0 else 0.0,
        ibp_off_origin=_ibp_residual(a_off, b_off, boundary_off, scale_off),
        a_integral=a_val,
        b_integral=b_val,
    )
    logger.debug(f"structural identities with {phi.name}: {report.to_dict()}")
    return report
