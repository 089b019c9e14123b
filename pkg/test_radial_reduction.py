#!/usr/bin/env python3
"""
Tests for grids, the Hardy and Lambda_m operators, the reduced kernel,
mode projection and the stretch calculus
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from abnorm.core import radial_reduction as rr
from abnorm.core.burkholder import Exponent
from abnorm.core.errors import InvalidProfileError, SingularPointError, SupportMismatchError
from abnorm.core.radial_reduction import RadialGrid, RadialProfile, StretchProfile


@pytest.fixture
def grid():
    return RadialGrid.log_spaced(1e-4, 1e4, 800)


def test_lebesgue_weights_cover_the_range(grid):
    assert np.sum(grid.weights) == pytest.approx(grid.nodes[-1], rel=1e-12)


def test_radial_weights_integrate_r_dr():
    radial = RadialGrid.log_spaced(1e-3, 10.0, 2000, 'radial')
    assert np.sum(radial.weights) == pytest.approx(50.0, rel=1e-4)


def test_grid_validation():
    with pytest.raises(InvalidProfileError):
        RadialGrid.from_nodes([1.0, 0.5, 2.0])
    with pytest.raises(InvalidProfileError):
        RadialGrid.from_nodes([0.0, 1.0])
    with pytest.raises(InvalidProfileError):
        RadialGrid.from_nodes([1.0, 2.0], 'spherical')
    with pytest.raises(InvalidProfileError):
        RadialGrid.log_spaced(2.0, 1.0, 10)


def test_grid_conversions(grid):
    assert grid.squared().measure == 'lebesgue'
    root = grid.square_root()
    assert root.measure == 'radial'
    assert np.allclose(root.nodes ** 2, grid.nodes)
    mask = grid.interior(0.01)
    assert not mask[0] and not mask[-1] and mask.sum() == len(grid) - 16
    assert grid.spec() == {'uMin': 1e-4, 'uMax': pytest.approx(1e4), 'n': 800, 'measure': 'lebesgue'}


def test_profile_validation(grid):
    with pytest.raises(InvalidProfileError):
        RadialProfile(grid, np.ones(10))
    with pytest.raises(InvalidProfileError):
        RadialProfile(grid, np.full(len(grid), np.nan))


def test_cell_moments_are_exact():
    nodes = np.array([0.5, 0.9, 1.7, 3.0])
    for power in (0, 1, 2, 4):
        origin, left, right = rr.cell_moments(nodes, power)
        exact = (nodes[1:] ** (power + 1) - nodes[:-1] ** (power + 1)) / (power + 1)
        assert np.allclose(left + right, exact, rtol=1e-13)
        assert origin == pytest.approx(nodes[0] ** (power + 1) / (power + 1))


def test_hardy_of_constant_and_linear(grid):
    ones = RadialProfile(grid, np.ones(len(grid)))
    assert np.allclose(rr.apply_hardy(ones).samples, 1.0, rtol=1e-13)
    u = grid.nodes
    linear = RadialProfile(grid, u)
    # constant extension u_1 on (0, u_1)
    expected = u / 2.0 + u[0] ** 2 / (2.0 * u)
    assert np.allclose(rr.apply_hardy(linear).samples, expected, rtol=1e-12)


def test_lambda_zero_is_identity_minus_hardy(grid):
    g = RadialProfile(grid, np.exp(-grid.nodes) * np.sin(grid.nodes))
    lam = rr.apply_lambda_m(g, 0).samples
    assert np.allclose(lam, g.samples - rr.apply_hardy(g).samples, atol=1e-14)


def test_lambda_two_of_constant(grid):
    ones = RadialProfile(grid, np.ones(len(grid)))
    assert np.allclose(rr.apply_lambda_m(ones, 2).samples, -0.5, rtol=1e-12)


def test_lambda_rejects_odd_or_negative(grid):
    g = RadialProfile(grid, np.ones(len(grid)))
    for m in (1, 3, -2):
        with pytest.raises(ValueError):
            rr.apply_lambda_m(g, m)


def test_operators_need_lebesgue_grid():
    radial = RadialGrid.log_spaced(1e-3, 1.0, 32, 'radial')
    with pytest.raises(InvalidProfileError):
        rr.apply_hardy(RadialProfile(radial, np.ones(32)))


@pytest.mark.parametrize('k', [0, 1, 2, 3])
def test_reduced_kernel_inside(k):
    rho, r = 2.0, 1.0
    expected = 2.0 * (k + 1) * (-1) ** k * r ** k / rho ** (k + 2)
    assert rr.reduced_kernel_Nk(rho, r, k) == pytest.approx(expected, abs=1e-10)


def test_reduced_kernel_sign_and_outside():
    # with the kernel -1/(pi z^2): N_0 = -2/rho^2
    assert rr.reduced_kernel_Nk(2.0, 0.5, 0, kernel_sign=-1.0) == pytest.approx(-0.5, abs=1e-10)
    assert abs(rr.reduced_kernel_Nk(1.0, 3.0, 0)) < 1e-9
    assert abs(rr.reduced_kernel_Nk(1.0, 3.0, 2)) < 1e-9
    with pytest.raises(SingularPointError):
        rr.reduced_kernel_Nk(1.0, 1.0, 0)
    with pytest.raises(ValueError):
        rr.reduced_kernel_Nk(-1.0, 1.0, 0)


def _two_mode_sampler(z):
    """e^{-2i phi} r^2 e^{-r^2} + e^{-r^2}"""
    r = np.abs(z)
    phase = np.where(r > 0, np.conj(z) / np.where(r > 0, r, 1.0), 1.0)
    return phase ** 2 * r ** 2 * np.exp(-r ** 2) + np.exp(-r ** 2)


def test_project_mode():
    grid = RadialGrid.log_spaced(1e-2, 4.0, 200, 'radial')
    r = grid.nodes
    mode_two = rr.project_mode(_two_mode_sampler, 2, grid)
    mode_zero = rr.project_mode(_two_mode_sampler, 0, grid)
    assert mode_two.mode_index == 2
    assert np.allclose(mode_two.samples, r ** 2 * np.exp(-r ** 2), atol=1e-12)
    assert np.allclose(mode_zero.samples, np.exp(-r ** 2), atol=1e-12)
    assert np.max(np.abs(rr.project_mode(_two_mode_sampler, 1, grid).samples)) < 1e-12
    with pytest.raises(ValueError):
        rr.project_mode(_two_mode_sampler, 2, grid, n_phi=64)


def test_mode_contraction():
    grid = RadialGrid.log_spaced(1e-2, 4.0, 200, 'radial')
    for p in (1.5, 2.0, 4.0):
        mode_norm, field_norm = rr.mode_contraction(_two_mode_sampler, 2, grid, Exponent(p))
        assert 0 < mode_norm <= field_norm * (1.0 + 1e-12)


def _bump_beta(grid):
    return RadialProfile(grid, np.exp(-np.log(grid.nodes) ** 2 / 2.0))


def test_stretch_from_beta():
    grid = RadialGrid.log_spaced(1e-8, 1e8, 3000)
    beta = _bump_beta(grid)
    s = rr.stretch_from_beta(beta)
    assert s.grid.measure == 'radial'
    assert np.all(s.g >= 0)
    dbar, dmag = rr.stretch_derivatives(s)
    assert dbar.mode_index == 0 and dmag.mode_index == 2
    # dbar = 2 beta, dmag = 2 (beta - H beta)
    assert np.allclose(dbar.samples, 2.0 * beta.samples, atol=1e-12)
    hardy = rr.apply_hardy(beta).samples
    assert np.allclose(dmag.samples, 2.0 * (beta.samples - hardy), atol=1e-12)
    assert rr.hm_identity_residual(s) < 1e-8


def test_beta_from_stretch_support_mismatch():
    grid = RadialGrid.log_spaced(1e-3, 10.0, 400, 'radial')
    g = RadialProfile(grid, grid.nodes * np.exp(-grid.nodes))
    s = StretchProfile(g, rr.differentiate_profile(g))
    with pytest.raises(SupportMismatchError):
        rr.beta_from_stretch(s, RadialGrid.log_spaced(1e-2, 1.0, 100))


def test_stretch_validation():
    grid = RadialGrid.log_spaced(1e-3, 10.0, 100, 'radial')
    negative = RadialProfile(grid, -np.ones(100))
    with pytest.raises(InvalidProfileError):
        StretchProfile(negative, negative)
    other = RadialGrid.log_spaced(1e-3, 5.0, 100, 'radial')
    with pytest.raises(InvalidProfileError):
        StretchProfile(RadialProfile(grid, np.ones(100)), RadialProfile(other, np.ones(100)))
    StretchProfile(negative, negative, complex_stretch=True)


def test_compact_support():
    grid = RadialGrid.log_spaced(1e-3, 10.0, 2000, 'radial')
    r = grid.nodes
    compact = StretchProfile(RadialProfile(grid, r ** 2 * np.exp(-r ** 2)),
                             RadialProfile(grid, (2 * r - 2 * r ** 3) * np.exp(-r ** 2)))
    assert compact.is_compactly_supported()
    slow = RadialProfile(grid, r * np.exp(-r))
    assert not StretchProfile(slow, rr.differentiate_profile(slow)).is_compactly_supported()


def test_differentiate_profile():
    grid = RadialGrid.log_spaced(1e-2, 3.0, 2000, 'radial')
    g = RadialProfile(grid, np.sin(grid.nodes))
    assert np.allclose(rr.differentiate_profile(g).samples, np.cos(grid.nodes), atol=1e-4)


def test_radial_beurling_profile_of_mexican_hat():
    grid = RadialGrid.log_spaced(1e-3, 14.0, 2000, 'radial')
    r = grid.nodes
    g = RadialProfile(grid, (r ** 2 - 2.0) * np.exp(-r ** 2 / 2.0))
    predicted = rr.radial_beurling_profile(g)
    assert predicted.mode_index == 2
    expected = r ** 2 * np.exp(-r ** 2 / 2.0)
    assert np.max(np.abs(predicted.samples - expected)) <= 1e-3 * np.max(expected)


def test_cell_grid_and_refinement():
    nodes = np.geomspace(1e-3, 1e3, 31)
    cells = RadialGrid.cells(nodes)
    assert cells.weights[0] == nodes[0]
    assert np.sum(cells.weights) == pytest.approx(1e3, rel=1e-12)
    fine = cells.refined()
    assert len(fine) == 61
    assert np.array_equal(fine.nodes[0::2], nodes)
    assert np.allclose(fine.nodes[1::2], np.sqrt(nodes[:-1] * nodes[1:]), rtol=1e-15)


@pytest.mark.parametrize('k', [0, 1, 2, -2])
def test_reduced_kernel_is_homogeneous(k):
    # K(lambda z) = K(z) / lambda^2
    for rho, r in ((2.0, 1.0), (1.0, 3.0), (0.7, 0.2)):
        base = rr.reduced_kernel_Nk(rho, r, k)
        scaled = rr.reduced_kernel_Nk(3.0 * rho, 3.0 * r, k)
        assert scaled == pytest.approx(base / 9.0, abs=1e-10)


def _cubic_stretch(n):
    """g = r^3 exp(-r^2), beta(rho) = (2 rho - rho^2) exp(-rho)"""
    grid = RadialGrid.log_spaced(1e-3, 6.0, n, 'radial')
    r = grid.nodes
    g = RadialProfile(grid, r ** 3 * np.exp(-r ** 2), mode_index=1)
    g_prime = RadialProfile(grid, (3.0 * r ** 2 - 2.0 * r ** 4) * np.exp(-r ** 2), mode_index=1)
    return StretchProfile(g, g_prime)


def test_hm_identity_residual_converges():
    coarse = rr.hm_identity_residual(_cubic_stretch(500))
    fine = rr.hm_identity_residual(_cubic_stretch(1000))
    assert 0 < fine <= 0.5 * coarse


def test_beta_of_linear_stretch_is_one():
    grid = RadialGrid.log_spaced(1e-3, 10.0, 300, 'radial')
    s = StretchProfile(RadialProfile(grid, grid.nodes), RadialProfile(grid, np.ones(300)))
    beta = rr.beta_from_stretch(s, grid.squared())
    assert np.allclose(beta.samples[grid.interior()], 1.0, rtol=1e-12)
    back = rr.stretch_from_beta(RadialProfile(grid.squared(), np.ones(300)))
    assert np.allclose(back.g, back.grid.nodes, rtol=1e-12)


def test_beta_stretch_roundtrip():
    rho = RadialGrid.log_spaced(1e-8, 1e8, 3000)
    beta = _bump_beta(rho)
    back = rr.beta_from_stretch(rr.stretch_from_beta(beta), rho)
    error = np.abs(back.samples - beta.samples)[rho.interior()]
    assert np.max(error) <= 1e-8 * np.max(beta.samples)


def test_beta_interpolation_error_halves():
    def error(n):
        s = _cubic_stretch(n)
        nodes = s.grid.nodes
        # off-node points, endpoints kept so the support is covered
        rho = RadialGrid.log_spaced(nodes[0] ** 2, nodes[-1] ** 2, 517)
        beta = rr.beta_from_stretch(s, rho)
        exact = (2.0 * rho.nodes - rho.nodes ** 2) * np.exp(-rho.nodes)
        return np.max(np.abs(beta.samples - exact)[rho.interior()])
    coarse, fine = error(200), error(400)
    assert 0 < fine <= 0.5 * coarse


if __name__ == '__main__':
    pytest.main([__file__])
