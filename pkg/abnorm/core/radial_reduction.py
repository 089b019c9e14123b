"""
Mode decomposition of plane functions and the one-dimensional operators it produces

A k-mode is e^{-ik theta} f_k(r). On radial functions the Ahlfors-Beurling
operator reduces, after the change of variables u = r^2, to
Lambda_m g(u) = g(u) - (m+1) u^{-(m+2)/2} int_0^u v^{m/2} g(v) dv,
with Lambda_0 = I - H and H the Hardy average.

Profiles are piecewise linear between nodes and constant on (0, u_1);
grid weights and operators share that convention.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from abnorm.core.errors import (
    InvalidProfileError,
    NodeOutsideExtentError,
    SingularPointError,
    SupportMismatchError,
)

logger = logging.getLogger(__name__)

MEASURES = ('lebesgue', 'radial')

DEFAULT_U_MIN = 1e-6
DEFAULT_U_MAX = 1e6
DEFAULT_N = 4000
DEFAULT_N_PHI = 256
EDGE_FRACTION = 0.01

FieldSampler = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Ascending positive nodes with quadrature weights for du or u du on (0, inf)"""
    nodes: np.ndarray
    weights: np.ndarray
    measure: str = 'lebesgue'

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise InvalidProfileError(f"Unknown measure: {self.measure}")
        nodes, weights = np.asarray(self.nodes, dtype=float), np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise InvalidProfileError("nodes and weights must be 1-D arrays of one length >= 2")
        if nodes[0] <= 0 or np.any(np.diff(nodes) <= 0):
            raise InvalidProfileError("nodes must be positive and strictly increasing")
        if np.any(weights <= 0):
            raise InvalidProfileError("weights must be positive")

    @classmethod
    def from_nodes(cls, nodes, measure: str = 'lebesgue') -> 'RadialGrid':
        """Trapezoid weights, the cell (0, u_1) counted with the constant extension"""
        nodes = np.asarray(nodes, dtype=float)
        if measure == 'lebesgue':
            density = np.ones_like(nodes)
            origin_cell = nodes[0]
        else:
            density = nodes
            origin_cell = nodes[0] ** 2 / 2.0
        steps = np.diff(nodes)
        weights = np.zeros_like(nodes)
        weights[:-1] += steps / 2.0
        weights[1:] += steps / 2.0
        weights = weights * density
        weights[0] += origin_cell
        return cls(nodes, weights, measure)

    @classmethod
    def log_spaced(cls, u_min: float = DEFAULT_U_MIN, u_max: float = DEFAULT_U_MAX,
                   n: int = DEFAULT_N, measure: str = 'lebesgue') -> 'RadialGrid':
        if not 0 < u_min < u_max or n < 2:
            raise InvalidProfileError(f"bad grid spec: [{u_min}, {u_max}], n={n}")
        return cls.from_nodes(np.geomspace(u_min, u_max, n), measure)

    @classmethod
    def cells(cls, nodes) -> 'RadialGrid':
        """Lebesgue grid whose weights are the widths of the cells (u_{i-1}, u_i], u_0 = 0"""
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.diff(nodes, prepend=0.0), 'lebesgue')

    def refined(self) -> 'RadialGrid':
        """Geometric midpoints inserted; every old node stays a node, so n -> 2n - 1"""
        nodes = np.empty(2 * len(self) - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = np.sqrt(self.nodes[:-1] * self.nodes[1:])
        return RadialGrid.from_nodes(nodes, self.measure)

    def with_measure(self, measure: str) -> 'RadialGrid':
        if measure == self.measure:
            return self
        return RadialGrid.from_nodes(self.nodes, measure)

    def squared(self) -> 'RadialGrid':
        """Lebesgue grid on the nodes u = r^2"""
        return RadialGrid.from_nodes(self.nodes ** 2, 'lebesgue')

    def square_root(self) -> 'RadialGrid':
        """Radial-measure grid on the nodes r = sqrt(u)"""
        return RadialGrid.from_nodes(np.sqrt(self.nodes), 'radial')

    def interior(self, fraction: float = EDGE_FRACTION) -> np.ndarray:
        """Mask dropping the first and last `fraction` of the nodes"""
        cut = max(1, int(np.ceil(fraction * len(self))))
        mask = np.zeros(len(self), dtype=bool)
        mask[cut:len(self) - cut] = True
        return mask

    def spec(self) -> dict:
        return {'uMin': float(self.nodes[0]), 'uMax': float(self.nodes[-1]),
                'n': len(self), 'measure': self.measure}

    def __len__(self) -> int:
        return self.nodes.size


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Complex samples of a one-variable profile; mode_index is an annotation"""
    grid: RadialGrid
    samples: np.ndarray
    mode_index: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.shape != self.grid.nodes.shape:
            raise InvalidProfileError(f"{samples.shape[0] if samples.ndim else 0} samples for {len(self.grid)} nodes")
        if not np.all(np.isfinite(samples)):
            raise InvalidProfileError("profile samples must be finite")

    @classmethod
    def from_function(cls, grid: RadialGrid, func: Callable[[np.ndarray], np.ndarray],
                      mode_index: int = 0) -> 'RadialProfile':
        return cls(grid, np.asarray(func(grid.nodes)), mode_index)

    def with_samples(self, samples, mode_index: Optional[int] = None) -> 'RadialProfile':
        return RadialProfile(self.grid, samples, self.mode_index if mode_index is None else mode_index)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def real(self) -> np.ndarray:
        return np.real(self.samples)


@dataclass(frozen=True, eq=False)
class StretchProfile:
    """Stretch g (f = g(r) e^{-i theta}) with samples of g'"""
    profile: RadialProfile
    derivative: RadialProfile
    complex_stretch: bool = False
    nonnegativity_tol: float = field(default=1e-12)

    def __post_init__(self):
        if self.derivative.grid is not self.profile.grid and not np.array_equal(
                self.derivative.grid.nodes, self.profile.grid.nodes):
            raise InvalidProfileError("stretch and derivative must share one grid")
        if not self.complex_stretch:
            samples = self.profile.samples
            if np.iscomplexobj(samples) and np.any(np.abs(np.imag(samples)) > 0):
                raise InvalidProfileError("real stretch with complex samples")
            scale = np.max(np.abs(samples)) if samples.size else 0.0
            if np.any(np.real(samples) < -self.nonnegativity_tol * max(scale, 1e-300)):
                raise InvalidProfileError("stretch samples must be nonnegative")

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    @property
    def g(self) -> np.ndarray:
        return self.profile.samples

    @property
    def g_prime(self) -> np.ndarray:
        return self.derivative.samples

    def is_compactly_supported(self, support_tol: float = 1e-5,
                               fraction: float = EDGE_FRACTION) -> bool:
        """Samples on the first and last `fraction` of nodes are below support_tol * max|g|"""
        scale = np.max(np.abs(self.g))
        if scale == 0:
            return True
        edges = ~self.grid.interior(fraction)
        return bool(np.all(np.abs(self.g[edges]) <= support_tol * scale))


def _require_lebesgue(profile: RadialProfile):
    if profile.grid.measure != 'lebesgue':
        raise InvalidProfileError("operator needs a lebesgue-measure grid")


def cell_moments(nodes: np.ndarray, power: int) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Exact integrals of v^power against the hat functions of each cell.

    Returns (origin, left, right): origin = int_0^{u_1} v^power dv for the
    constant extension, left[j] / right[j] the integrals over [u_j, u_{j+1}]
    of v^power times the hat of node j / j+1.
    """
    steps = np.diff(nodes)
    origin = nodes[0] ** (power + 1) / (power + 1)
    if power == 0:
        return origin, steps / 2.0, steps / 2.0
    order = power // 2 + 2
    points, weights = np.polynomial.legendre.leggauss(order)
    share = (points + 1.0) / 2.0
    v = nodes[:-1, None] + steps[:, None] * share[None, :]
    moment = (weights[None, :] / 2.0) * v ** power * steps[:, None]
    left = np.sum(moment * (1.0 - share)[None, :], axis=1)
    right = np.sum(moment * share[None, :], axis=1)
    return origin, left, right


def cumulative_moment(profile: RadialProfile, power: int) -> np.ndarray:
    """int_0^{u_i} v^power g(v) dv at every node"""
    g = profile.samples
    origin, left, right = cell_moments(profile.nodes, power)
    cells = left * g[:-1] + right * g[1:]
    total = np.empty(g.shape, dtype=np.result_type(g, float))
    total[0] = origin * g[0]
    total[1:] = origin * g[0] + np.cumsum(cells)
    return total


def apply_hardy(g: RadialProfile) -> RadialProfile:
    """H g(u) = (1/u) int_0^u g"""
    _require_lebesgue(g)
    return g.with_samples(cumulative_moment(g, 0) / g.nodes)


def apply_lambda_m(g: RadialProfile, m: int) -> RadialProfile:
    """Lambda_m g(u) = g(u) - (m+1) u^{-(m+2)/2} int_0^u v^{m/2} g(v) dv"""
    if m < 0 or m % 2:
        raise ValueError(f"m must be an even nonnegative integer, got {m}")
    _require_lebesgue(g)
    half = m // 2
    reduced = (m + 1) * cumulative_moment(g, half) / g.nodes ** (half + 1)
    return g.with_samples(g.samples - reduced)


def reduced_kernel_Nk(rho: float, r: float, k: int, kernel_sign: float = 1.0,
                      tol: float = 1e-10, max_points: int = 2 ** 22) -> complex:
    """
    N_k(rho, r) = int_0^{2 pi} K(r e^{it} + rho) e^{-ikt} dt with K(z) = kernel_sign/(pi z^2).

    Periodic trapezoid rule, doubled until two successive values agree to tol.
    Only the absolutely continuous part is returned; the diagonal r = rho is refused.
    """
    if rho <= 0 or r <= 0:
        raise ValueError("rho and r must be positive")
    if abs(r - rho) < 1e-8 * max(r, rho):
        raise SingularPointError(f"N_k is singular at r = rho = {rho:g}")

    def trapezoid(points: int) -> complex:
        t = 2.0 * np.pi * np.arange(points) / points
        values = kernel_sign / (np.pi * (r * np.exp(1j * t) + rho) ** 2) * np.exp(-1j * k * t)
        return 2.0 * np.pi * np.mean(values)

    points = 64
    previous = trapezoid(points)
    while points < max_points:
        points *= 2
        current = trapezoid(points)
        if abs(current - previous) < tol:
            return complex(current)
        previous = current
    logger.warning(f"N_k quadrature stalled at {points} points (rho={rho:g}, r={r:g})")
    return complex(previous)


def _resolve_sampler(field_like, nodes: np.ndarray) -> FieldSampler:
    if hasattr(field_like, 'sampler'):
        radius = field_like.extent / 2.0
        if nodes[-1] >= radius:
            raise NodeOutsideExtentError(f"node {nodes[-1]:g} outside the field radius {radius:g}")
        return field_like.sampler()
    return field_like


def angular_samples(field_like, grid: RadialGrid, n_phi: int = DEFAULT_N_PHI) -> np.ndarray:
    """f(r e^{i phi_j}) on the polar grid, shape (len(grid), n_phi)"""
    sampler = _resolve_sampler(field_like, grid.nodes)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    points = grid.nodes[:, None] * np.exp(1j * phi)[None, :]
    return np.asarray(sampler(points), dtype=complex).reshape(points.shape)


def angular_modes(field_like, grid: RadialGrid, n_phi: int = DEFAULT_N_PHI) -> np.ndarray:
    """All mode profiles at once: column k (mod n_phi) holds f_k on the nodes"""
    return np.fft.ifft(angular_samples(field_like, grid, n_phi), axis=1)


def project_mode(field_like, k: int, grid: RadialGrid, n_phi: int = DEFAULT_N_PHI) -> RadialProfile:
    """f_k(|z|) = (1/2 pi) int e^{ik phi} f(R_phi z) d phi by the trapezoid rule in phi"""
    if n_phi < DEFAULT_N_PHI:
        raise ValueError(f"n_phi must be at least {DEFAULT_N_PHI}")
    modes = angular_modes(field_like, grid, n_phi)
    return RadialProfile(grid, modes[:, k % n_phi], mode_index=k)


def mode_contraction(field_like, k: int, grid: RadialGrid, e,
                     n_phi: int = DEFAULT_N_PHI) -> Tuple[float, float]:
    """Discrete L^p norms (r dr d phi) of the k-mode part and of the field itself"""
    radial = grid.with_measure('radial')
    values = angular_samples(field_like, radial, n_phi)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    f_k = np.mean(values * np.exp(1j * k * phi)[None, :], axis=1)
    mode_part = f_k[:, None] * np.exp(-1j * k * phi)[None, :]
    weights = radial.weights[:, None] * (2.0 * np.pi / n_phi)

    def norm(x):
        return float(np.sum(weights * np.abs(x) ** e.p) ** (1.0 / e.p))
    return norm(mode_part), norm(values)


def differentiate_profile(profile: RadialProfile) -> RadialProfile:
    """Centered differences inside, one-sided at the ends"""
    return profile.with_samples(np.gradient(profile.samples, profile.nodes, edge_order=2))


def stretch_derivatives(s: StretchProfile) -> Tuple[RadialProfile, RadialProfile]:
    """dbar = g' + g/r (mode 0) and dmag = g' - g/r (carried by e^{-2i theta})"""
    r = s.grid.nodes
    dbar = s.profile.with_samples(s.g_prime + s.g / r, mode_index=0)
    dmag = s.profile.with_samples(s.g_prime - s.g / r, mode_index=2)
    return dbar, dmag


def beta_from_stretch(s: StretchProfile, rho_grid: RadialGrid) -> RadialProfile:
    """beta(rho) = (g'(sqrt rho) + g(sqrt rho)/sqrt rho) / 2, monotone cubic interpolation"""
    r = s.grid.nodes
    g = np.real(s.g)
    scale = np.max(np.abs(g))
    if scale > 0:
        support = r[np.abs(g) > 1e-12 * scale]
        if support[0] ** 2 < rho_grid.nodes[0] * (1 - 1e-12) or support[-1] ** 2 > rho_grid.nodes[-1] * (1 + 1e-12):
            raise SupportMismatchError("rho grid does not cover the squared support of the stretch")
    root = np.sqrt(rho_grid.nodes)
    inside = (root >= r[0]) & (root <= r[-1])
    g_at = np.zeros_like(root)
    g_prime_at = np.zeros_like(root)
    g_at[inside] = PchipInterpolator(r, g)(root[inside])
    g_prime_at[inside] = PchipInterpolator(r, np.real(s.g_prime))(root[inside])
    beta = 0.5 * (g_prime_at + g_at / root)
    return RadialProfile(rho_grid, beta, mode_index=0)


def stretch_from_beta(beta: RadialProfile) -> StretchProfile:
    """
    g(sqrt rho) = sqrt rho (H beta)(rho) on the radial grid r = sqrt(rho).

    The derivative follows from rho (H beta)' = beta - H beta:
    g'(sqrt rho) = 2 beta(rho) - (H beta)(rho).
    """
    _require_lebesgue(beta)
    hardy = apply_hardy(beta).samples
    r_grid = beta.grid.square_root()
    r = r_grid.nodes
    samples = beta.samples
    complex_stretch = np.iscomplexobj(samples) and np.any(np.imag(samples) != 0)
    if not complex_stretch:
        samples, hardy = np.real(samples), np.real(hardy)
    g = RadialProfile(r_grid, r * hardy, mode_index=1)
    g_prime = RadialProfile(r_grid, 2.0 * samples - hardy, mode_index=1)
    return StretchProfile(g, g_prime, complex_stretch=bool(complex_stretch), nonnegativity_tol=1e-9)


def hm_identity_residual(s: StretchProfile) -> float:
    """max over interior nodes of |(g' - g/r)/2 - (beta - H beta)|"""
    rho_grid = s.grid.squared()
    beta = beta_from_stretch(s, rho_grid)
    hardy = apply_hardy(beta).samples
    r = s.grid.nodes
    lhs = 0.5 * (s.g_prime - s.g / r)
    residual = np.abs(lhs - (beta.samples - hardy))
    return float(np.max(residual[s.grid.interior()]))


def radial_beurling_profile(g: RadialProfile) -> RadialProfile:
    """
    Radial factor of T g for radial g: T g(r e^{i phi}) = e^{-2i phi} (Lambda_0 gamma)(r^2),
    gamma(u) = g(sqrt u). Returned on the r nodes of g, annotated as the 2-mode.
    """
    u_grid = g.grid.squared()
    gamma = RadialProfile(u_grid, g.samples)
    return RadialProfile(g.grid, apply_lambda_m(gamma, 0).samples, mode_index=2)
