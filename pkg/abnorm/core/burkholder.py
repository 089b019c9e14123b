"""
Pointwise Burkholder/Sverak functions and their rank-one convexity structure

The 2x2 real matrix A = [[a, b], [c, d]] corresponds to the phase pair
z = a - d + i(b + c), w = a + d + i(c - b); rank-one matrices are exactly
the pairs with |z| = |w|. Every function here accepts scalar or array
entries and evaluates elementwise.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate

from abnorm.core.errors import (
    BranchMismatchError,
    DegenerateSamplerError,
    InvalidProfileError,
    NonIntegrableInputError,
    ZeroDenominatorError,
)

logger = logging.getLogger(__name__)

Scalar = Union[float, complex, np.ndarray]

RANK_ONE_TOL = 1e-12
MAX_SAMPLER_DRAWS = 1000
MIN_FACTOR_NORM = 1e-3


@dataclass(frozen=True)
class Exponent:
    """Lebesgue exponent p with its conjugate p' and p* = max(p, p')"""
    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p <= 1:
            raise ValueError(f"Exponent must lie in (1, inf), got {self.p}")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def p_star(self) -> float:
        return max(self.p, self.p_conj)

    def __str__(self) -> str:
        return f"p={self.p:g}"


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Pair (z, w) of complex numbers (or equally shaped complex arrays)"""
    z: Scalar
    w: Scalar

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        w = np.asarray(self.w, dtype=complex)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise ValueError("PhasePoint entries must be finite")

    def moduli(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.abs(self.z), np.abs(self.w)

    def swapped(self) -> 'PhasePoint':
        return PhasePoint(self.w, self.z)

    def scaled(self, factor: float) -> 'PhasePoint':
        return PhasePoint(self.z * factor, self.w * factor)


@dataclass(frozen=True, eq=False)
class RealMatrix2:
    """Real 2x2 matrix [[a, b], [c, d]]; entries may be arrays of one shape"""
    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar

    def __post_init__(self):
        entries = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (self.a, self.b, self.c, self.d)))
        if not all(np.all(np.isfinite(x)) for x in entries):
            raise ValueError("RealMatrix2 entries must be finite")

    @classmethod
    def zero(cls) -> 'RealMatrix2':
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def identity(cls) -> 'RealMatrix2':
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def frobenius_squared(self):
        return self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def shifted(self, direction: 'RealMatrix2', t: Scalar) -> 'RealMatrix2':
        """A + t*B"""
        return RealMatrix2(
            self.a + t * direction.a,
            self.b + t * direction.b,
            self.c + t * direction.c,
            self.d + t * direction.d,
        )


@dataclass(frozen=True, eq=False)
class RankOneDirection:
    """Rank-one matrix B; in phase coordinates |Z| = |W|"""
    matrix: RealMatrix2

    def __post_init__(self):
        frob = self.matrix.frobenius_squared
        if np.any(np.abs(self.matrix.det) > RANK_ONE_TOL * np.maximum(frob, np.finfo(float).tiny)):
            raise InvalidProfileError("direction is not rank one")
        phase = matrix_to_phase(self.matrix)
        big_z, big_w = phase.moduli()
        if np.any(np.abs(big_z - big_w) > RANK_ONE_TOL * (big_z + big_w) + 1e-300):
            raise InvalidProfileError("rank-one direction violates |Z| = |W|")


@dataclass(frozen=True)
class FunctionTag:
    """Which function a convexity probe restricts to a rank-one line"""
    name: str
    exponent: Optional[Exponent] = field(default=None)

    def __post_init__(self):
        if self.name not in ('psi', 'psi_p', 'm_along_line'):
            raise ValueError(f"Unknown function tag: {self.name}")
        if self.name == 'psi_p' and self.exponent is None:
            raise ValueError("psi_p needs an exponent")

    def __call__(self, matrix: RealMatrix2):
        if self.name == 'psi':
            return eval_Psi(matrix)
        if self.name == 'psi_p':
            return eval_Psi_p(matrix, self.exponent)
        return eval_M(matrix_to_phase(matrix))


PSI = FunctionTag('psi')
M_ALONG_LINE = FunctionTag('m_along_line')


def psi_p(e: Exponent) -> FunctionTag:
    return FunctionTag('psi_p', e)


def matrix_to_phase(matrix: RealMatrix2) -> PhasePoint:
    """z = a - d + i(b + c), w = a + d + i(c - b)"""
    a, b, c, d = matrix.a, matrix.b, matrix.c, matrix.d
    return PhasePoint((a - d) + 1j * (b + c), (a + d) + 1j * (c - b))


def phase_to_matrix(point: PhasePoint) -> RealMatrix2:
    """Exact linear inverse of matrix_to_phase"""
    z = np.asarray(point.z, dtype=complex)
    w = np.asarray(point.w, dtype=complex)
    return RealMatrix2(
        (z.real + w.real) / 2,
        (z.imag - w.imag) / 2,
        (z.imag + w.imag) / 2,
        (w.real - z.real) / 2,
    )


def _l_moduli(a, b):
    return np.where(a + b <= 1.0, a ** 2 - b ** 2, 2.0 * a - 1.0)


def _m_moduli(a, b):
    return np.where(a + b > 1.0, b ** 2 - (a - 1.0) ** 2, 0.0)


def _lp_moduli(a, b, e: Exponent):
    return ((e.p_star - 1.0) * a - b) * (a + b) ** (e.p - 1.0)


def eval_L(point: PhasePoint):
    """Sverak's function: |z|^2 - |w|^2 inside |z| + |w| <= 1, 2|z| - 1 outside"""
    return _l_moduli(*point.moduli())


def eval_M(point: PhasePoint):
    """L minus its quadratic part; vanishes on |z| + |w| <= 1"""
    return _m_moduli(*point.moduli())


def eval_Lp(point: PhasePoint, e: Exponent):
    """Burkholder's function ((p*-1)|z| - |w|)(|z| + |w|)^(p-1)"""
    return _lp_moduli(*point.moduli(), e)


def eval_Psi(matrix: RealMatrix2):
    return eval_L(matrix_to_phase(matrix))


def eval_Psi_p(matrix: RealMatrix2, e: Exponent):
    return eval_Lp(matrix_to_phase(matrix), e)


def sample_rank_one(seed: Union[int, np.random.Generator]) -> RankOneDirection:
    """Outer product of two random 2-vectors with entries uniform in [-1, 1]"""
    rng = np.random.default_rng(seed)
    for _ in range(MAX_SAMPLER_DRAWS):
        left = rng.uniform(-1.0, 1.0, 2)
        right = rng.uniform(-1.0, 1.0, 2)
        if np.linalg.norm(left) < MIN_FACTOR_NORM or np.linalg.norm(right) < MIN_FACTOR_NORM:
            continue
        return RankOneDirection(_outer(left, right))
    raise DegenerateSamplerError(f"no usable rank-one factors in {MAX_SAMPLER_DRAWS} draws")


def sample_rank_one_batch(rng: np.random.Generator, size: int) -> RankOneDirection:
    """Vectorized sample_rank_one: one RankOneDirection with array entries"""
    left = rng.uniform(-1.0, 1.0, (size, 2))
    right = rng.uniform(-1.0, 1.0, (size, 2))
    for _ in range(MAX_SAMPLER_DRAWS):
        bad = (np.linalg.norm(left, axis=1) < MIN_FACTOR_NORM) | (np.linalg.norm(right, axis=1) < MIN_FACTOR_NORM)
        if not bad.any():
            return RankOneDirection(_outer(left.T, right.T))
        left[bad] = rng.uniform(-1.0, 1.0, (bad.sum(), 2))
        right[bad] = rng.uniform(-1.0, 1.0, (bad.sum(), 2))
    raise DegenerateSamplerError(f"no usable rank-one factors in {MAX_SAMPLER_DRAWS} draws")


def _outer(left, right) -> RealMatrix2:
    return RealMatrix2(left[0] * right[0], left[0] * right[1], left[1] * right[0], left[1] * right[1])


def sample_matrices(rng: np.random.Generator, size: int) -> RealMatrix2:
    entries = rng.uniform(-1.0, 1.0, (4, size))
    return RealMatrix2(*entries)


def sample_phase_points(rng: np.random.Generator, size: int,
                        low: float = 1e-3, high: float = 1e3) -> PhasePoint:
    """Log-uniform moduli in [low, high] with uniform arguments"""
    moduli = np.exp(rng.uniform(np.log(low), np.log(high), (2, size)))
    angles = rng.uniform(0.0, 2.0 * np.pi, (2, size))
    return PhasePoint(moduli[0] * np.exp(1j * angles[0]), moduli[1] * np.exp(1j * angles[1]))


def sample_exponents(rng: np.random.Generator, size: int,
                     low: float = 1.05, high: float = 8.0, gap: float = 1e-3) -> np.ndarray:
    """Uniform exponents in [low, high] kept away from p = 2"""
    values = rng.uniform(low, high, size)
    near_two = np.abs(values - 2.0) < gap
    values[near_two] += 2.0 * gap
    return values


def midpoint_probe(tag: FunctionTag, base: RealMatrix2, direction: RankOneDirection,
                   t1: Scalar, t2: Scalar) -> Tuple[np.ndarray, np.ndarray]:
    """Midpoint margin and the scale max|F| over the three evaluation points"""
    if np.any(np.asarray(t1) >= np.asarray(t2)):
        raise ValueError("midpoint probe needs t1 < t2")
    line = direction.matrix
    left = tag(base.shifted(line, t1))
    right = tag(base.shifted(line, t2))
    middle = tag(base.shifted(line, (np.asarray(t1) + np.asarray(t2)) / 2.0))
    margin = 0.5 * (left + right) - middle
    scale = np.maximum(np.maximum(np.abs(left), np.abs(right)), np.abs(middle))
    return margin, scale


def midpoint_convexity_margin(tag: FunctionTag, base: RealMatrix2, direction: RankOneDirection,
                              t1: Scalar, t2: Scalar):
    """(F(A + t1 B) + F(A + t2 B))/2 - F(A + (t1 + t2)/2 B); nonnegative certifies the triple"""
    margin, _ = midpoint_probe(tag, base, direction, t1, t2)
    return margin


def burkholder_scale(point: PhasePoint, e: Exponent):
    a, b = point.moduli()
    return (e.p_star - 1.0) ** e.p * a ** e.p + b ** e.p


def burkholder_margin(point: PhasePoint, e: Exponent):
    """(p*-1)^p|z|^p - |w|^p - p(1 - 1/p*)^(p-1) L_p(z, w)"""
    a, b = point.moduli()
    p, p_star = e.p, e.p_star
    majorant = (p_star - 1.0) ** p * a ** p - b ** p
    return majorant - p * (1.0 - 1.0 / p_star) ** (p - 1.0) * _lp_moduli(a, b, e)


def scaling_integral_constant(e: Exponent) -> float:
    """Closed-form constant c(p) with  integral = c(p) * target  (see scaling_integral_ratio)"""
    p = e.p
    if 1.0 < p < 2.0:
        return 2.0 / (p * (2.0 - p))
    if p > 2.0:
        return 2.0 / (p * (p - 1.0) * (p - 2.0))
    raise BranchMismatchError("p = 2 has no scaling-integral representation")


def scaling_integral(point: PhasePoint, e: Exponent, tail_factor: float = 1e3) -> float:
    """
    Integral of t^(p-1) G(z/t, w/t) over (0, inf).

    G = L for 1 < p < 2 and G = M for p > 2. The piece below t = |z| + |w|
    carries an algebraic endpoint singularity at 0 and is integrated with an
    algebraic weight; above it the integrand is an exact power law, integrated
    adaptively up to tail_factor*(|z| + |w|) with the rest added in closed form.
    """
    a, b = (float(x) for x in point.moduli())
    p = e.p
    if a == 0.0 and b == 0.0:
        raise NonIntegrableInputError("scaling integral is not defined at z = w = 0")
    s = a + b
    if 1.0 < p < 2.0:
        # t < s: t^(p-1) L = t^(p-2) (2a - t)
        inner, _ = integrate.quad(lambda t: 2.0 * a - t, 0.0, s,
                                  weight='alg', wvar=(p - 2.0, 0.0), epsabs=0.0, epsrel=1e-13)
        far = tail_factor * s
        middle, _ = integrate.quad(lambda t: (a * a - b * b) * t ** (p - 3.0), s, far,
                                   epsabs=0.0, epsrel=1e-13, limit=200)
        tail = (a * a - b * b) * far ** (p - 2.0) / (2.0 - p)
        return inner + middle + tail
    if p > 2.0:
        # t < s: t^(p-1) M = t^(p-3) (b^2 - (a - t)^2); M vanishes for t >= s
        inner, _ = integrate.quad(lambda t: b * b - (a - t) ** 2, 0.0, s,
                                  weight='alg', wvar=(p - 3.0, 0.0), epsabs=0.0, epsrel=1e-13)
        return inner
    raise BranchMismatchError("p = 2 lies outside both scaling-integral branches")


def scaling_integral_ratio(point: PhasePoint, e: Exponent) -> float:
    """
    Scaling integral divided by its Burkholder target.

    The target is L_p(z, w) on 1 < p < 2 and L_p(w, z) on p > 2, where the
    M-representation reproduces the Burkholder function with z and w exchanged.
    The ratio equals scaling_integral_constant(e) for every (z, w).
    """
    value = scaling_integral(point, e)
    target_point = point if e.p < 2.0 else point.swapped()
    target = float(eval_Lp(target_point, e))
    a, b = (float(x) for x in point.moduli())
    if abs(target) <= 1e-12 * (a + b) ** e.p:
        raise ZeroDenominatorError(f"Burkholder target vanishes at |z|={a:g}, |w|={b:g}")
    return value / target


def psi_from_scaling_integral(matrix: RealMatrix2, e: Exponent) -> float:
    """Integral of t^(p-1) Psi(A/t) (p < 2) or t^(p-1)(Psi(A/t) + 4 det A / t^2) (p > 2)"""
    return scaling_integral(matrix_to_phase(matrix), e)


def sverak_functional(dbar, d, cell_area: float, e: Optional[Exponent] = None) -> float:
    """
    Quadrature of L(dbar f, d f) over the plane, or of L_p when e is given.

    dbar and d are samples of the two derivatives on a uniform grid with
    cells of area cell_area.
    """
    point = PhasePoint(np.asarray(dbar), np.asarray(d))
    values = eval_L(point) if e is None else eval_Lp(point, e)
    return float(np.sum(values) * cell_area)
