#!/usr/bin/env python3
"""
Tests for the triangular operators, the norm estimator and the stretch functionals
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from abnorm.core import discrete_spectral as ds
from abnorm.core import radial_reduction as rr
from abnorm.core.burkholder import Exponent
from abnorm.core.errors import InvalidProfileError, ZeroDenominatorError
from abnorm.core.radial_reduction import RadialGrid, RadialProfile
from abnorm.handlers.suites import analytic_compact_stretch, indicator_baseline_ratio

FAST = ds.NormOptions(max_iter=150, restarts=2, seed=4)


@pytest.fixture(scope='module')
def grid():
    return RadialGrid.log_spaced(1e-6, 1e6, 400)


def test_matrices_match_the_operators(grid):
    g = RadialProfile(grid, np.exp(-grid.nodes) + 1.0 / (1.0 + grid.nodes))
    hardy = ds.discretize('hardy', grid)
    assert np.allclose(ds.apply_operator(hardy, g).samples, rr.apply_hardy(g).samples, rtol=1e-12)
    lam2 = ds.discretize('lambda(2)', grid)
    assert lam2.kind == 'lambda(2)'
    assert np.allclose(ds.apply_operator(lam2, g).samples, rr.apply_lambda_m(g, 2).samples, rtol=1e-10, atol=1e-12)


def test_lambda_zero_matrix(grid):
    hardy = ds.discretize('hardy', grid).matrix
    lam = ds.discretize('lambda', grid, m=0).matrix
    assert np.max(np.abs(lam - (np.eye(len(grid)) - hardy))) <= 1e-14
    shifted = ds.discretize('hardy_minus_id', grid).matrix
    assert np.max(np.abs(shifted - (hardy - np.eye(len(grid))))) <= 1e-14


def test_discretize_validation(grid):
    with pytest.raises(ValueError):
        ds.discretize('beurling', grid)
    with pytest.raises(ValueError):
        ds.discretize('lambda', grid, m=3)
    with pytest.raises(ValueError):
        ds.discretize('hardy', grid, scheme='spline')
    with pytest.raises(InvalidProfileError):
        ds.discretize('hardy', grid.with_measure('radial'))
    with pytest.raises(InvalidProfileError):
        ds.TriangularOperator(grid, np.ones((len(grid), len(grid))), 'hardy')


def test_rayleigh_quotient_of_zero(grid):
    K = ds.discretize('hardy', grid, scheme='cell')
    with pytest.raises(ZeroDenominatorError):
        ds.rayleigh_quotient(K, RadialProfile(K.grid, np.zeros(len(grid))), Exponent(2.0))


def test_cell_hardy_rows_sum_to_one(grid):
    K = ds.discretize('hardy', grid, scheme='cell')
    assert K.scheme == 'cell'
    assert np.allclose(K.matrix.sum(axis=1), 1.0, rtol=0.0, atol=1e-12)
    # the tail row carries int f, the cell widths
    assert np.allclose(K.tail, K.grid.weights, rtol=1e-15)
    assert np.sum(K.grid.weights) == pytest.approx(grid.nodes[-1], rel=1e-12)
    assert K.tail_weight(Exponent(2.0)) == pytest.approx(1.0 / grid.nodes[-1])


def test_cell_lambda_zero_is_identity_minus_hardy(grid):
    hardy = ds.discretize('hardy', grid, scheme='cell')
    lam = ds.discretize('lambda', grid, m=0, scheme='cell')
    assert np.max(np.abs(lam.matrix - (np.eye(len(grid)) - hardy.matrix))) <= 1e-14
    assert np.array_equal(lam.tail, hardy.tail)
    shifted = ds.discretize('hardy_minus_id', grid, scheme='cell')
    assert np.max(np.abs(shifted.matrix - (hardy.matrix - np.eye(len(grid))))) <= 1e-14
    lam2 = ds.discretize('lambda(2)', grid, scheme='cell')
    assert lam2.tail_power == 2.0
    assert np.allclose(lam2.tail, 3.0 * np.diff(grid.nodes ** 2, prepend=0.0) / 2.0)


def test_cell_averages_of_a_constant(grid):
    # Lambda_2 1 = 1 - 3/2 on every cell
    lam2 = ds.discretize('lambda(2)', grid, scheme='cell')
    assert np.allclose(lam2.matrix.sum(axis=1), -0.5, atol=1e-12)


def test_norm_estimates_at_p2(grid):
    e = Exponent(2.0)
    hardy = ds.estimate_norm(ds.discretize('hardy', grid, scheme='cell'), e, FAST)
    assert 1.85 <= hardy.value <= 2.0
    shifted = ds.estimate_norm(ds.discretize('hardy_minus_id', grid, scheme='cell'), e, FAST)
    # I - H is an isometry of L^2, and cell estimates never exceed the norm
    assert 0.9 <= shifted.value <= 1.0 + 1e-12


def test_norm_estimate_properties(grid):
    e = Exponent(1.5)
    K = ds.discretize('hardy_minus_id', grid, scheme='cell')
    estimate = ds.estimate_norm(K, e, FAST)
    assert ds.lp_norm(estimate.witness, e) == pytest.approx(1.0)
    assert estimate.value == pytest.approx(ds.rayleigh_quotient(K, estimate.witness, e))
    history = estimate.history
    assert all(b >= a * (1.0 - ds.ASCENT_SLACK) for a, b in zip(history, history[1:]))
    assert estimate.value <= e.p_star - 1.0
    assert estimate.value >= 1.0
    again = ds.estimate_norm(K, e, FAST)
    assert again.value == pytest.approx(estimate.value, rel=1e-12)
    summary = estimate.to_dict()
    assert summary['kind'] == 'hardy_minus_id' and summary['gridSpec']['n'] == len(grid)


def test_hardy_norm_above_two(grid):
    e = Exponent(3.0)
    estimate = ds.estimate_norm(ds.discretize('hardy', grid, scheme='cell'), e, FAST)
    # ||H||_p = p' = 1.5 < p*
    assert estimate.value <= e.p_conj


def test_tail_counts_in_the_output_norm(grid):
    K = ds.discretize('hardy', grid, scheme='cell')
    e = Exponent(2.0)
    f = RadialProfile(K.grid, (K.grid.nodes <= 1.0).astype(float))
    # H of the indicator of (0, c] is 1 there and c/u after
    c = K.grid.nodes[K.grid.nodes <= 1.0][-1]
    exact = np.sqrt(2.0 * c)
    assert ds.output_norm(K, f, e) == pytest.approx(exact, rel=1e-3)
    inside = ds.lp_norm(ds.apply_operator(K, f), e)
    assert inside < ds.output_norm(K, f, e)


def test_prolong_onto_refined_grid():
    coarse = RadialGrid.cells(np.geomspace(1e-2, 1e2, 9))
    fine = coarse.refined()
    assert len(fine) == 17
    assert np.array_equal(fine.nodes[0::2], coarse.nodes)
    profile = RadialProfile(coarse, np.arange(9.0))
    carried = ds.prolong(profile, fine)
    assert np.array_equal(carried.samples[0::2], profile.samples)
    # midpoint of (u_{j-1}, u_j] belongs to cell j
    assert np.array_equal(carried.samples[1::2], profile.samples[1:])
    with pytest.raises(InvalidProfileError):
        ds.prolong(profile, RadialGrid.log_spaced(1e-2, 1e2, 20))


@pytest.mark.parametrize('kind', ['hardy', 'hardy_minus_id'])
@pytest.mark.parametrize('p', [4.0 / 3.0, 2.0])
def test_refinement_never_lowers_the_estimate(kind, p):
    e = Exponent(p)
    target = e.p_star if kind == 'hardy' else e.p_star - 1.0
    options = ds.NormOptions(max_iter=300, restarts=2, seed=1)
    estimates = ds.refine_norm(kind, RadialGrid.log_spaced(1e-3, 1e3, 60), e, 2, options)
    assert [len(estimate.witness.grid) for estimate in estimates] == [60, 119, 237]
    values = [estimate.value for estimate in estimates]
    assert all(b >= a * (1.0 - 1e-12) for a, b in zip(values, values[1:]))
    assert values[-1] <= target * (1.0 + 1e-12)


def test_refine_without_levels_is_one_estimate():
    estimates = ds.refine_norm('hardy', RadialGrid.log_spaced(1e-2, 1e2, 40), Exponent(2.0), 0, FAST)
    assert len(estimates) == 1
    assert estimates[0].witness.grid.spec()['n'] == 40


@pytest.mark.slow
@pytest.mark.parametrize('kind', ['hardy', 'hardy_minus_id'])
@pytest.mark.parametrize('p', [4.0 / 3.0, 1.5, 2.0])
def test_default_grid_estimates_meet_the_gates(kind, p):
    e = Exponent(p)
    target = e.p_star if kind == 'hardy' else e.p_star - 1.0
    K = ds.discretize(kind, RadialGrid.log_spaced(1e-6, 1e6, 4000), scheme='cell')
    estimate = ds.estimate_norm(K, e, ds.NormOptions(max_iter=200, restarts=1))
    assert 0.95 * target <= estimate.value <= 1.02 * target


def test_compact_stretch_at_p2():
    s = analytic_compact_stretch()
    e = Exponent(2.0)
    assert ds.stretch_ratio(s, e) == pytest.approx(1.0, abs=1e-6)
    assert abs(ds.mode_functional(s, e)) <= 1e-8 * ds.mode_functional_scale(s, e)


@pytest.mark.parametrize('p', [1.5, 3.0])
def test_random_stretches(p):
    e = Exponent(p)
    grid = RadialGrid.log_spaced(np.exp(-15.0), np.exp(15.0), 1500, 'radial')
    family = ds.LogBumpFamily.spanning(grid, -20.0, 20.0, 16)
    rng = np.random.default_rng(8)
    for _ in range(20):
        s = ds.random_stretch(rng, family)
        assert ds.stretch_ratio(s, e) <= e.p_star - 1.0 + 1e-9
        assert ds.mode_functional(s, e) >= -1e-8 * ds.mode_functional_scale(s, e)


def test_log_bump_family_matches_hardy():
    grid = RadialGrid.log_spaced(np.exp(-20.0), np.exp(20.0), 6000, 'radial')
    family = ds.LogBumpFamily.spanning(grid, -8.0, 8.0, 5)
    rho = RadialGrid.from_nodes(grid.nodes ** 2)
    for column in range(len(family)):
        numeric = rr.apply_hardy(RadialProfile(rho, family.basis[:, column])).samples
        assert np.max(np.abs(numeric - family.hardy_basis[:, column])) <= 1e-4 * np.max(family.basis[:, column])


def test_log_bump_stretch_validation():
    grid = RadialGrid.log_spaced(1e-3, 1e3, 100, 'radial')
    family = ds.LogBumpFamily.spanning(grid, -2.0, 2.0, 4)
    with pytest.raises(InvalidProfileError):
        family.stretch([1.0, -1.0, 0.0, 0.0])
    with pytest.raises(InvalidProfileError):
        family.stretch([1.0, 1.0])


def test_stretch_ratio_of_zero():
    grid = RadialGrid.log_spaced(1e-3, 1e3, 100, 'radial')
    zero = RadialProfile(grid, np.zeros(100))
    with pytest.raises(ZeroDenominatorError):
        ds.stretch_ratio(rr.StretchProfile(zero, zero), Exponent(2.0))


def test_indicator_baseline():
    e = Exponent(1.5)
    ratio = indicator_baseline_ratio(e)
    assert ratio < e.p_star - 1.0
    assert ratio == pytest.approx((e.p - 1.0) ** (-1.0 / e.p), rel=3e-2)


@pytest.mark.slow
@pytest.mark.parametrize('p', [4.0 / 3.0, 1.5, 2.0])
def test_stretch_search_approaches_the_bound(p):
    e = Exponent(p)
    ratio, witness = ds.maximize_stretch_ratio(e)
    bound = e.p_star - 1.0
    assert 0.95 * bound <= ratio <= bound * (1.0 + 1e-3)
    assert ds.stretch_ratio(witness, e) == pytest.approx(ratio)


if __name__ == '__main__':
    pytest.main([__file__])
