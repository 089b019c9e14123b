#!/usr/bin/env python3
"""
Tests for the phase dictionary, Burkholder's and Sverak's functions,
rank-one convexity probes and the scaling integrals
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from abnorm.core import burkholder as bk
from abnorm.core.burkholder import Exponent, PhasePoint, RealMatrix2
from abnorm.core.errors import (
    BranchMismatchError,
    InvalidProfileError,
    NonIntegrableInputError,
    ZeroDenominatorError,
)

moduli = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)
angles = st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False)
exponents = st.floats(min_value=1.05, max_value=8.0).filter(lambda p: abs(p - 2.0) > 1e-3)
entries = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def test_exponent():
    """Conjugates and p*"""
    e = Exponent(1.5)
    assert e.p_conj == pytest.approx(3.0)
    assert e.p_star == pytest.approx(3.0)
    assert Exponent(4.0).p_star == 4.0
    assert Exponent(2.0).p_conj == pytest.approx(2.0)
    for bad in (1.0, 0.5, float('inf'), float('nan')):
        with pytest.raises(ValueError):
            Exponent(bad)


@given(entries, entries, entries, entries)
def test_dictionary_roundtrip(a, b, c, d):
    matrix = RealMatrix2(a, b, c, d)
    back = bk.phase_to_matrix(bk.matrix_to_phase(matrix))
    scale = max(abs(a), abs(b), abs(c), abs(d), 1.0)
    for x, y in ((a, back.a), (b, back.b), (c, back.c), (d, back.d)):
        assert abs(x - y) <= 1e-14 * scale


@given(entries, entries, entries, entries)
def test_quadratic_part_is_minus_four_det(a, b, c, d):
    """|z|^2 - |w|^2 = -4 det A, so L is |z|^2 - |w|^2 only up to a rank-one affine term"""
    matrix = RealMatrix2(a, b, c, d)
    z, w = bk.matrix_to_phase(matrix).moduli()
    assert z ** 2 - w ** 2 == pytest.approx(-4.0 * matrix.det, abs=1e-10 * (1.0 + matrix.frobenius_squared))
    assert z ** 2 == pytest.approx(matrix.frobenius_squared - 2.0 * matrix.det, abs=1e-10 * (1.0 + matrix.frobenius_squared))


def test_sverak_function_branches():
    point = PhasePoint(np.array([0.3, 0.5, 2.0]), np.array([0.2, 0.5, 1.0]))
    expected = np.array([0.3 ** 2 - 0.2 ** 2, 0.0, 3.0])
    assert np.allclose(bk.eval_L(point), expected)
    assert np.allclose(bk.eval_M(point), [0.0, 0.0, 1.0 - 1.0])
    # continuous across |z| + |w| = 1
    a = np.linspace(0.0, 1.0, 11)
    on_edge = PhasePoint(a, 1.0 - a)
    assert np.allclose(bk.eval_L(on_edge), 2.0 * a - 1.0)
    assert np.allclose(bk.eval_M(on_edge), 0.0)


def test_m_is_l_minus_quadratic():
    rng = np.random.default_rng(3)
    point = bk.sample_phase_points(rng, 1000, 1e-2, 10.0)
    a, b = point.moduli()
    assert np.allclose(bk.eval_M(point), bk.eval_L(point) - (a ** 2 - b ** 2), atol=1e-12 * (1 + a + b) ** 2)


@settings(max_examples=300)
@given(moduli, moduli, angles, angles, exponents)
def test_burkholder_majorization(a, b, s, t, p):
    e = Exponent(p)
    point = PhasePoint(a * np.exp(1j * s), b * np.exp(1j * t))
    margin = bk.burkholder_margin(point, e)
    assert margin >= -1e-12 * bk.burkholder_scale(point, e)


def test_burkholder_equality_at_p2():
    z = np.linspace(0.1, 10.0, 50).astype(complex)
    point = PhasePoint(z, np.zeros_like(z))
    relative = np.abs(bk.burkholder_margin(point, Exponent(2.0))) / bk.burkholder_scale(point, Exponent(2.0))
    assert np.max(relative) <= 1e-12


def test_burkholder_function_is_homogeneous():
    rng = np.random.default_rng(5)
    point = bk.sample_phase_points(rng, 100, 0.1, 10.0)
    e = Exponent(3.0)
    assert np.allclose(bk.eval_Lp(point.scaled(2.0), e), 2.0 ** 3 * bk.eval_Lp(point, e))


@pytest.mark.parametrize('tag', [bk.PSI, bk.M_ALONG_LINE, bk.psi_p(Exponent(1.5)), bk.psi_p(Exponent(3.0))],
                         ids=['psi', 'm', 'psi_1.5', 'psi_3'])
def test_rank_one_convexity(tag):
    rng = np.random.default_rng(11)
    count = 5000
    base = RealMatrix2(*(2.0 * rng.uniform(-1.0, 1.0, (4, count))))
    direction = bk.sample_rank_one_batch(rng, count)
    t = np.sort(rng.uniform(-2.0, 2.0, (2, count)), axis=0)
    t[1] = np.maximum(t[1], t[0] + 1e-6)
    margin, scale = bk.midpoint_probe(tag, base, direction, t[0], t[1])
    assert np.all(margin >= -1e-9 * scale)


def test_rotation_invariance():
    rng = np.random.default_rng(13)
    point = bk.sample_phase_points(rng, 200, 1e-2, 10.0)
    a, b = point.moduli()
    e = Exponent(3.0)
    scale = (1.0 + a + b) ** 3
    reference = (bk.eval_L(point), bk.eval_M(point), bk.eval_Lp(point, e))
    for alpha, beta in rng.uniform(0.0, 2.0 * np.pi, (100, 2)):
        turned = PhasePoint(np.exp(1j * alpha) * point.z, np.exp(1j * beta) * point.w)
        values = (bk.eval_L(turned), bk.eval_M(turned), bk.eval_Lp(turned, e))
        for before, after in zip(reference, values):
            assert np.all(np.abs(after - before) <= 1e-14 * scale)


def test_rank_one_sampler():
    direction = bk.sample_rank_one(7)
    again = bk.sample_rank_one(7)
    assert direction.matrix.a == again.matrix.a
    assert abs(direction.matrix.det) <= 1e-12 * direction.matrix.frobenius_squared
    z, w = bk.matrix_to_phase(direction.matrix).moduli()
    assert z == pytest.approx(w)


def test_rank_one_direction_rejects_full_rank():
    with pytest.raises(InvalidProfileError):
        bk.RankOneDirection(RealMatrix2.identity())


def test_midpoint_probe_needs_ordered_parameters():
    direction = bk.sample_rank_one(1)
    with pytest.raises(ValueError):
        bk.midpoint_probe(bk.PSI, RealMatrix2.zero(), direction, 1.0, 0.5)


def test_function_tag_validation():
    with pytest.raises(ValueError):
        bk.FunctionTag('psi_p')
    with pytest.raises(ValueError):
        bk.FunctionTag('phi')


@pytest.mark.parametrize('p', [1.3, 1.5, 1.7, 2.5, 3.0])
def test_scaling_integral_constant(p):
    e = Exponent(p)
    constant = bk.scaling_integral_constant(e)
    assert bk.scaling_integral_ratio(PhasePoint(1.0, 0.0), e) == pytest.approx(constant, rel=1e-6)
    rng = np.random.default_rng(int(p * 100))
    checked = 0
    for _ in range(10):
        point = bk.sample_phase_points(rng, 1, 0.1, 10.0)
        try:
            ratio = bk.scaling_integral_ratio(PhasePoint(complex(point.z[0]), complex(point.w[0])), e)
        except ZeroDenominatorError:
            continue
        assert ratio == pytest.approx(constant, rel=1e-6)
        checked += 1
    assert checked > 0


def test_scaling_integral_closed_form_at_p_three_halves():
    # 2/(p-1) - 1/p + 1/(2-p) at z = 1, w = 0
    e = Exponent(1.5)
    assert bk.scaling_integral(PhasePoint(1.0, 0.0), e) == pytest.approx(4.0 - 2.0 / 3.0 + 2.0, rel=1e-8)


@pytest.mark.parametrize('p', [1.5, 3.0])
def test_matrix_form_of_the_scaling_integral(p):
    e = Exponent(p)
    # z = w = 1, so the exchange of z and w above p = 2 changes nothing
    matrix = RealMatrix2(1.0, 0.0, 0.0, 0.0)
    expected = bk.scaling_integral_constant(e) * float(bk.eval_Psi_p(matrix, e))
    assert bk.psi_from_scaling_integral(matrix, e) == pytest.approx(expected, rel=1e-6)


def test_scaling_integral_domain():
    with pytest.raises(BranchMismatchError):
        bk.scaling_integral_constant(Exponent(2.0))
    with pytest.raises(BranchMismatchError):
        bk.scaling_integral(PhasePoint(1.0, 0.5), Exponent(2.0))
    with pytest.raises(NonIntegrableInputError):
        bk.scaling_integral(PhasePoint(0.0, 0.0), Exponent(1.5))


def test_scaling_integral_target_zero():
    e = Exponent(1.5)
    # (p* - 1)|z| = |w| makes L_p vanish
    with pytest.raises(ZeroDenominatorError):
        bk.scaling_integral_ratio(PhasePoint(1.0, 2.0), e)


def test_sverak_functional():
    dbar = np.full((4, 4), 0.5 + 0j)
    d = np.zeros((4, 4), dtype=complex)
    assert bk.sverak_functional(dbar, d, 0.25) == pytest.approx(16 * 0.25 * 0.25)
    e = Exponent(3.0)
    assert bk.sverak_functional(dbar, d, 0.25, e) == pytest.approx(16 * 0.25 * 2.0 * 0.5 * 0.25)


def test_samplers_are_seeded():
    first = bk.sample_phase_points(np.random.default_rng(2), 10)
    second = bk.sample_phase_points(np.random.default_rng(2), 10)
    assert np.array_equal(first.z, second.z)
    p = bk.sample_exponents(np.random.default_rng(2), 1000)
    assert np.all(p > 1.0) and np.all(np.abs(p - 2.0) >= 1e-3)


if __name__ == '__main__':
    pytest.main([__file__])
