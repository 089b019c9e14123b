"""
Triangular matrices for H, H - I and Lambda_m, L^p norms on the half-line,
operator-norm estimation and the stretch functionals.

Two discretizations are offered. The nodal scheme integrates piecewise-linear
inputs exactly and agrees with apply_hardy / apply_lambda_m node by node. The
cell scheme acts on functions constant on the cells (u_{i-1}, u_i], averages
the output over the same cells and keeps the exact output beyond the last
node; its Rayleigh quotients are lower bounds for the continuum norm and they
can only grow when the grid is refined (RadialGrid.refined).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from abnorm.core.burkholder import Exponent, PhasePoint, eval_Lp
from abnorm.core.errors import InvalidProfileError, NaNDetectedError, ZeroDenominatorError
from abnorm.core.radial_reduction import (
    RadialGrid,
    RadialProfile,
    StretchProfile,
    cell_moments,
    stretch_derivatives,
)

logger = logging.getLogger(__name__)

KINDS = ('hardy', 'hardy_minus_id', 'lambda')
SCHEMES = ('nodal', 'cell')
ASCENT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class TriangularOperator:
    """
    Lower-triangular matrix on grid.

    With a tail row the output beyond the last node is (tail . f) u^(-tail_power),
    and its L^p mass enters every norm of K f.
    """
    grid: RadialGrid
    matrix: np.ndarray
    kind: str
    scheme: str = 'nodal'
    tail: Optional[np.ndarray] = None
    tail_power: float = 1.0

    def __post_init__(self):
        n = len(self.grid)
        if self.matrix.shape != (n, n):
            raise InvalidProfileError(f"matrix shape {self.matrix.shape} does not fit {n} nodes")
        if np.any(np.triu(self.matrix, 1) != 0):
            raise InvalidProfileError("operator matrix must be lower triangular")
        if self.tail is not None and self.tail.shape != (n,):
            raise InvalidProfileError("tail row must have one entry per node")

    def tail_weight(self, e: Exponent) -> float:
        """int_{u_max}^inf u^(-tail_power p) du"""
        power = self.tail_power * e.p
        return float(self.grid.nodes[-1] ** (1.0 - power) / (power - 1.0))

    def __repr__(self):
        return f"<TriangularOperator(kind={self.kind}, scheme={self.scheme}, n={len(self.grid)})>"


@dataclass(eq=False)
class NormEstimate:
    """Certified lower bound for ||K||_{p->p} with the witness that attains it"""
    kind: str
    p: float
    value: float
    witness: RadialProfile
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'p': self.p,
            'value': self.value,
            'iterations': self.iterations,
            'converged': self.converged,
            'gridSpec': self.witness.grid.spec(),
        }


@dataclass
class NormOptions:
    max_iter: int = 200
    tol: float = 1e-10
    restarts: int = 8
    seed: int = 0
    workers: Optional[int] = None


def lp_norm(f: RadialProfile, e: Exponent) -> float:
    """(sum weights * |samples|^p)^(1/p); the grid measure decides du or r dr"""
    return float(np.sum(f.grid.weights * np.abs(f.samples) ** e.p) ** (1.0 / e.p))


def _parse_kind(kind: str, m: Optional[int]) -> Tuple[str, int]:
    if kind.startswith('lambda(') and kind.endswith(')'):
        return 'lambda', int(kind[len('lambda('):-1])
    if kind not in KINDS:
        raise ValueError(f"Unknown operator kind: {kind}")
    if kind == 'lambda':
        if m is None or m < 0 or m % 2:
            raise ValueError(f"lambda needs an even nonnegative m, got {m}")
        return kind, m
    return kind, 0


def _integration_matrix(nodes: np.ndarray, power: int) -> np.ndarray:
    """Row i integrates v^power g(v) over (0, u_i) for piecewise-linear g"""
    n = nodes.size
    origin, left, right = cell_moments(nodes, power)
    below = np.zeros(n)
    below[0] = origin
    below[1:] = right
    full = below.copy()
    full[:-1] += left
    matrix = np.tril(np.ones((n, n)), -1) * full[None, :]
    matrix[np.diag_indices(n)] = below
    return matrix


def _relative_mean(x: np.ndarray, power: int) -> np.ndarray:
    """Mean of (u/a)^(-(power+1)) over (a, a(1+x)]"""
    if power == 0:
        return np.log1p(x) / x
    return -np.expm1(-power * np.log1p(x)) / (power * x)


def _cell_average_matrix(nodes: np.ndarray, power: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cell averages of u^-(power+1) int_0^u v^power f(v) dv for f constant on cells.

    Returns the matrix and the cell masses int_cell v^power dv.
    """
    upper = nodes
    lower = np.concatenate([[0.0], nodes[:-1]])
    mass = (upper ** (power + 1) - lower ** (power + 1)) / (power + 1)
    x = (upper[1:] - lower[1:]) / lower[1:]
    relative = _relative_mean(x, power)
    mean = np.zeros_like(nodes)
    mean[1:] = relative / lower[1:] ** (power + 1)
    diagonal = np.full(nodes.size, 1.0 / (power + 1))
    diagonal[1:] *= 1.0 - relative
    matrix = np.tril(np.outer(mean, mass), -1)
    matrix[np.diag_indices(nodes.size)] = diagonal
    return matrix, mass


def discretize(kind: str, grid: RadialGrid, m: Optional[int] = None, scheme: str = 'nodal') -> TriangularOperator:
    kind, m = _parse_kind(kind, m)
    if scheme not in SCHEMES:
        raise ValueError(f"Unknown scheme: {scheme}")
    if grid.measure != 'lebesgue':
        raise InvalidProfileError("operators are discretized on lebesgue grids")
    u = grid.nodes
    half = m // 2
    label = f'lambda({m})' if kind == 'lambda' else kind
    if scheme == 'cell':
        averaging, mass = _cell_average_matrix(u, half)
        if kind == 'lambda':
            matrix, tail = np.eye(u.size) - (m + 1) * averaging, (m + 1) * mass
        else:
            matrix, tail = averaging, mass
            if kind == 'hardy_minus_id':
                matrix = matrix - np.eye(u.size)
        return TriangularOperator(RadialGrid.cells(u), matrix, label, 'cell', tail, half + 1.0)

    integral = _integration_matrix(u, half)
    if kind == 'lambda':
        matrix = np.eye(u.size) - (m + 1) * integral / (u ** (half + 1))[:, None]
    else:
        matrix = integral / u[:, None]
        if kind == 'hardy_minus_id':
            matrix = matrix - np.eye(u.size)
    return TriangularOperator(grid, matrix, label)


def apply_operator(K: TriangularOperator, g: RadialProfile) -> RadialProfile:
    """K g on the nodes; the tail beyond the last node is not included"""
    if g.grid is not K.grid and not np.array_equal(g.nodes, K.grid.nodes):
        raise InvalidProfileError("profile and operator live on different grids")
    return RadialProfile(K.grid, K.matrix @ g.samples, g.mode_index)


def output_norm(K: TriangularOperator, f: RadialProfile, e: Exponent) -> float:
    """||K f||_p, the tail beyond the last node included"""
    mass = np.sum(K.grid.weights * np.abs(apply_operator(K, f).samples) ** e.p)
    if K.tail is not None:
        mass += K.tail_weight(e) * abs(K.tail @ f.samples) ** e.p
    return float(mass ** (1.0 / e.p))


def rayleigh_quotient(K: TriangularOperator, f: RadialProfile, e: Exponent) -> float:
    """||K f||_p / ||f||_p with both norms taken on K's grid"""
    denominator = lp_norm(RadialProfile(K.grid, f.samples), e)
    if denominator == 0:
        raise ZeroDenominatorError("Rayleigh quotient of the zero profile")
    return output_norm(K, f, e) / denominator


def prolong(profile: RadialProfile, grid: RadialGrid) -> RadialProfile:
    """Piecewise-constant transfer onto a finer nested grid: each cell takes its parent's value"""
    parent = np.searchsorted(profile.nodes, grid.nodes, side='left')
    if parent[-1] >= len(profile.grid) or not np.all(np.isin(profile.nodes, grid.nodes)):
        raise InvalidProfileError("target grid must refine the profile's grid")
    return RadialProfile(grid, profile.samples[parent], profile.mode_index)


def _duality(x: np.ndarray, q: float) -> np.ndarray:
    return np.abs(x) ** (q - 1.0) * np.sign(x)


def _ascent(weighted: np.ndarray, start: np.ndarray, e: Exponent,
            max_iter: int, tol: float) -> Tuple[np.ndarray, List[float], bool]:
    """
    Nonlinear power method in l^p: x <- J_p'(A^T J_p(A x)), normalized.

    The quotient ||A x||_p is nondecreasing by Hoelder's inequality.
    """
    p, q = e.p, e.p_conj
    x = start / np.linalg.norm(start, p)
    history = [float(np.linalg.norm(weighted @ x, p))]
    for _ in range(max_iter):
        y = weighted @ x
        z = weighted.T @ _duality(y, p)
        x_next = _duality(z, q)
        scale = np.linalg.norm(x_next, p)
        if not np.isfinite(scale):
            raise NaNDetectedError("norm iteration produced a non-finite vector")
        if scale == 0:
            return x, history, True
        x = x_next / scale
        value = float(np.linalg.norm(weighted @ x, p))
        if value < history[-1] * (1.0 - ASCENT_SLACK):
            logger.warning(f"ascent violated: {history[-1]:.15g} -> {value:.15g}")
        history.append(value)
        if abs(history[-1] - history[-2]) <= tol * max(history[-1], 1e-300):
            return x, history, True
    return x, history, False


def _weighted_matrix(K: TriangularOperator, e: Exponent) -> Tuple[np.ndarray, np.ndarray]:
    """Matrix of K between the l^p images of L^p; the tail adds one row"""
    forward = K.grid.weights ** (1.0 / e.p)
    weighted = forward[:, None] * K.matrix / forward[None, :]
    if K.tail is not None:
        tail_row = K.tail_weight(e) ** (1.0 / e.p) * K.tail / forward
        weighted = np.vstack([weighted, tail_row[None, :]])
    return weighted, forward


def estimate_norm(K: TriangularOperator, e: Exponent, opts: Optional[NormOptions] = None,
                  start: Optional[RadialProfile] = None) -> NormEstimate:
    """
    Best duality-map ascent over opts.restarts starts; the first start is the
    power law u^(-1/p) (or `start` when given), the others are seeded random vectors.
    """
    opts = opts or NormOptions()
    weighted, forward = _weighted_matrix(K, e)
    restarts = max(opts.restarts, 1)
    children = np.random.SeedSequence(opts.seed).spawn(restarts)

    def initial(index: int) -> np.ndarray:
        if index == 0:
            if start is not None:
                return forward * np.real(start.samples)
            return forward * K.grid.nodes ** (-1.0 / e.p)
        return np.random.default_rng(children[index]).standard_normal(len(K.grid))

    def run(index: int):
        return _ascent(weighted, initial(index), e, opts.max_iter, opts.tol)

    with ThreadPoolExecutor(max_workers=opts.workers) as pool:
        results = list(pool.map(run, range(restarts)))

    x, history, converged = max(results, key=lambda item: item[1][-1])
    witness = RadialProfile(K.grid, x / forward)
    witness = witness.with_samples(witness.samples / lp_norm(witness, e))
    value = rayleigh_quotient(K, witness, e)
    if not converged:
        logger.warning(f"⚠️ {K.kind} at {e}: no convergence in {opts.max_iter} iterations, value {value:.6f}")
    logger.debug(f"{K.kind} at {e}: {value:.8f} after {len(history) - 1} iterations")
    return NormEstimate(K.kind, e.p, value, witness, len(history) - 1, converged, history)


def refine_norm(kind: str, grid: RadialGrid, e: Exponent, levels: int = 2,
                opts: Optional[NormOptions] = None, m: Optional[int] = None) -> List[NormEstimate]:
    """
    Cell-scheme estimates on grid, grid.refined(), ... (levels + 1 grids).

    Each level starts from the previous witness carried over by prolong, so the
    values never decrease.
    """
    estimates: List[NormEstimate] = []
    for level in range(levels + 1):
        K = discretize(kind, grid, m, scheme='cell')
        start = prolong(estimates[-1].witness, K.grid) if estimates else None
        estimate = estimate_norm(K, e, opts, start)
        logger.info(f"🔍 {K.kind} at {e}, n={len(grid)}: {estimate.value:.8f}")
        estimates.append(estimate)
        if level < levels:
            grid = grid.refined()
    return estimates


def stretch_ratio(s: StretchProfile, e: Exponent) -> float:
    """||g' - g/r|| / ||g' + g/r|| in L^p(r dr); at most p* - 1 for stretches"""
    dbar, dmag = stretch_derivatives(s)
    dbar = RadialProfile(s.grid.with_measure('radial'), dbar.samples)
    dmag = RadialProfile(s.grid.with_measure('radial'), dmag.samples)
    denominator = lp_norm(dbar, e)
    if denominator == 0:
        raise ZeroDenominatorError("stretch ratio of g = 0")
    return lp_norm(dmag, e) / denominator


def mode_functional(s: StretchProfile, e: Exponent) -> float:
    """2 pi * int L_p(g' + g/r, g' - g/r) r dr"""
    dbar, dmag = stretch_derivatives(s)
    values = eval_Lp(PhasePoint(dbar.samples, dmag.samples), e)
    return float(2.0 * np.pi * np.sum(s.grid.with_measure('radial').weights * values))


def mode_functional_scale(s: StretchProfile, e: Exponent) -> float:
    """2 pi * int (|g' + g/r|^p + |g' - g/r|^p) r dr, the yardstick for sign checks"""
    dbar, dmag = stretch_derivatives(s)
    weights = s.grid.with_measure('radial').weights
    return float(2.0 * np.pi * np.sum(weights * (np.abs(dbar.samples) ** e.p + np.abs(dmag.samples) ** e.p)))


def _bump_integral(log_rho: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """(1/rho) int_0^rho exp(-(ln s - mu)^2 / 2 sigma^2) ds, columns per center"""
    shift = (log_rho[:, None] - centers[None, :] - sigma ** 2) / sigma
    exponent = centers[None, :] + sigma ** 2 / 2.0 - log_rho[:, None] + special.log_ndtr(shift)
    return sigma * np.sqrt(2.0 * np.pi) * np.exp(exponent)


@dataclass(frozen=True, eq=False)
class LogBumpFamily:
    """
    Stretches with beta = sum_j a_j b_j, b_j log-normal bumps in rho = r^2.

    Column j of `basis` is b_j(r_i^2) and of `hardy_basis` is (H b_j)(r_i^2),
    both in closed form, so g = r H beta and g' = 2 beta - H beta are exact.
    """
    grid: RadialGrid
    centers: np.ndarray
    sigma: float
    basis: np.ndarray
    hardy_basis: np.ndarray

    @classmethod
    def build(cls, grid: RadialGrid, centers: Sequence[float], sigma: float,
              column_scale: Optional[np.ndarray] = None) -> 'LogBumpFamily':
        grid = grid.with_measure('radial')
        centers = np.asarray(centers, dtype=float)
        log_rho = 2.0 * np.log(grid.nodes)
        basis = np.exp(-(log_rho[:, None] - centers[None, :]) ** 2 / (2.0 * sigma ** 2))
        hardy_basis = _bump_integral(log_rho, centers, sigma)
        if column_scale is not None:
            basis = basis * column_scale[None, :]
            hardy_basis = hardy_basis * column_scale[None, :]
        return cls(grid, centers, sigma, basis, hardy_basis)

    @classmethod
    def spanning(cls, grid: RadialGrid, log_rho_min: float, log_rho_max: float, count: int,
                 e: Optional[Exponent] = None) -> 'LogBumpFamily':
        """Evenly spaced centers, sigma = spacing; with e, columns rescaled so a = 1 is beta ~ rho^(-1/p)"""
        centers = np.linspace(log_rho_min, log_rho_max, count)
        sigma = (log_rho_max - log_rho_min) / max(count - 1, 1)
        scale = None if e is None else np.exp(-(centers - centers[0]) / e.p)
        return cls.build(grid, centers, sigma, scale)

    def __len__(self) -> int:
        return self.centers.size

    def stretch(self, amplitudes) -> StretchProfile:
        return log_bump_stretch(amplitudes, self)


def log_bump_stretch(amplitudes, family: LogBumpFamily) -> StretchProfile:
    a = np.asarray(amplitudes, dtype=float)
    if a.shape != (len(family),) or np.any(a < 0):
        raise InvalidProfileError("amplitudes must be nonnegative, one per bump")
    r = family.grid.nodes
    beta = family.basis @ a
    hardy = family.hardy_basis @ a
    g = RadialProfile(family.grid, r * hardy, mode_index=1)
    g_prime = RadialProfile(family.grid, 2.0 * beta - hardy, mode_index=1)
    return StretchProfile(g, g_prime)


def random_stretch(rng: np.random.Generator, family: LogBumpFamily) -> StretchProfile:
    """Exponential amplitudes on a random subset of the bumps"""
    amplitudes = rng.exponential(1.0, len(family)) * (rng.uniform(size=len(family)) < 0.5)
    if not amplitudes.any():
        amplitudes[rng.integers(len(family))] = 1.0
    return family.stretch(amplitudes)


@dataclass
class StretchSearchOptions:
    bumps: int = 48
    log_rho_min: float = -60.0
    log_rho_max: float = 60.0
    grid_n: int = 4000
    max_iter: int = 200
    margin: float = 10.0


def maximize_stretch_ratio(e: Exponent, opts: Optional[StretchSearchOptions] = None
                           ) -> Tuple[float, StretchProfile]:
    """
    Maximize ||(I - H) beta|| / ||beta|| over beta = sum_j c_j^2 b_j with L-BFGS-B.

    Starts from beta ~ rho^(-1/p), the profile along which the constant p* - 1
    is approached for 1 < p <= 2.
    """
    opts = opts or StretchSearchOptions()
    half_margin = opts.margin / 2.0
    grid = RadialGrid.log_spaced(np.exp(opts.log_rho_min / 2.0 - half_margin),
                                 np.exp(opts.log_rho_max / 2.0 + half_margin), opts.grid_n, 'radial')
    family = LogBumpFamily.spanning(grid, opts.log_rho_min, opts.log_rho_max, opts.bumps, e)
    weights = grid.weights
    p = e.p
    dbar_basis = 2.0 * family.basis
    dmag_basis = 2.0 * (family.basis - family.hardy_basis)

    def negative_log_ratio(c):
        a = c * c
        top, bottom = dmag_basis @ a, dbar_basis @ a
        top_mass = np.sum(weights * np.abs(top) ** p)
        bottom_mass = np.sum(weights * np.abs(bottom) ** p)
        if bottom_mass == 0:
            return 0.0, np.zeros_like(c)
        value = (np.log(top_mass) - np.log(bottom_mass)) / p
        grad_top = dmag_basis.T @ (weights * np.abs(top) ** (p - 1.0) * np.sign(top)) / top_mass
        grad_bottom = dbar_basis.T @ (weights * np.abs(bottom) ** (p - 1.0) * np.sign(bottom)) / bottom_mass
        return -value, -(grad_top - grad_bottom) * 2.0 * c

    start = np.ones(len(family))
    result = optimize.minimize(negative_log_ratio, start, jac=True, method='L-BFGS-B',
                               options={'maxiter': opts.max_iter})
    best = result.x if result.fun <= negative_log_ratio(start)[0] else start
    if not result.success:
        logger.warning(f"⚠️ stretch search at {e} stopped early: {result.message}")
    witness = family.stretch(best * best)
    ratio = stretch_ratio(witness, e)
    logger.info(f"📈 stretch search at {e}: ratio {ratio:.6f} (bound {e.p_star - 1.0:.6f})")
    return ratio, witness
