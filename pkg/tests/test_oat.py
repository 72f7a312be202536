from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from constrained_coreset.constraints import StructureConstraint
from constrained_coreset.matroid import (
    Matroid,
    distribution_point,
    mask,
    members,
    random_basis_distribution,
)
from constrained_coreset.oat import (
    coupling_marginals,
    extend_transport,
    knapsack_lip_instance,
    lip_ratio_search,
    oat_exact_lp,
    oat_exact_lp_solution,
    oat_transport,
    random_consistent_assignment,
)

from matroid_oracles import binary_matroid, random_laminar_family


def _sigma_from_mu(M, mu):
    return np.array([[w * (e in members(I)) for e in range(M.k)] for I, w in mu.items()])


def test_oat_identity():
    M = Matroid.uniform(3, 1)
    mu = {mask([0]): 0.5, mask([1]): 0.5}
    h = distribution_point(M, mu)
    res = oat_transport(M, h, h, mu)
    assert res.moved == 0
    assert all(a == b for a, b in res.coupling)


def test_oat_uniform_example():
    # oracle: brute-force LP over couplings of the three vertices gives 1
    M = Matroid.uniform(3, 1)
    mu = {mask([0]): 0.5, mask([1]): 0.5}
    mu2, kappa, moved = oat_transport(M, [0.5, 0.5, 0], [0.5, 0, 0.5], mu)
    assert moved == pytest.approx(1.0)
    np.testing.assert_allclose(distribution_point(M, mu2), [0.5, 0, 0.5], atol=1e-12)
    left, right = coupling_marginals(kappa)
    assert left == pytest.approx(mu)
    assert right == pytest.approx(mu2)


def test_oat_path_cost_accounting():
    # a length-m path moving tau costs 2*m*tau
    M = Matroid.uniform(3, 1)
    mu = {mask([0]): 0.5, mask([1]): 0.5}
    res = oat_transport(M, [0.5, 0.5, 0], [0.5, 0.3, 0.2], mu)
    assert res.path_cost == pytest.approx(2 * 1 * 0.2)
    assert res.moved <= res.path_cost + 1e-12


def _sandwich(M, rng):
    B = StructureConstraint.from_matroid(M)
    mu = random_basis_distribution(M, rng)
    h = distribution_point(M, mu)
    g = distribution_point(M, random_basis_distribution(M, rng))
    gap = float(np.abs(h - g).sum())
    res = oat_transport(M, h, g, mu)
    left, right = coupling_marginals(res.coupling)
    assert left == pytest.approx(mu, abs=1e-9)
    np.testing.assert_allclose(distribution_point(M, right), g, atol=1e-8)
    lp = oat_exact_lp(B, h, g, _sigma_from_mu(M, mu))
    return lp, res.moved, gap, res


@given(st.integers(0, 100_000))
def test_sandwich_explicit(seed):
    rng = np.random.default_rng(seed)
    M = binary_matroid(rng, int(rng.integers(3, 7)))
    lp, moved, gap, _ = _sandwich(M, rng)
    assert lp - 1e-7 <= moved <= (M.k - 1) * gap + 1e-7


@given(st.integers(0, 100_000))
def test_sandwich_laminar(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, 8))
    M = Matroid.laminar(k, random_laminar_family(rng, k))
    lp, moved, gap, res = _sandwich(M, rng)
    assert lp - 1e-7 <= moved <= (M.depth + 1) * gap + 1e-7
    assert res.longest_path <= M.depth + 1


def test_oat_rejects_bad_inputs():
    M = Matroid.uniform(3, 1)
    mu = {mask([0]): 1.0}
    with pytest.raises(ValueError):
        oat_transport(M, [0.5, 0.5, 0], [1, 0, 0], mu)
    with pytest.raises(ValueError):
        oat_transport(M, [1, 0, 0], [0.7, 0.7, 0], mu)


def test_exact_lp_examples():
    D2 = StructureConstraint.simplex(2)
    sigma = np.array([[0.6, 0.4]])
    assert oat_exact_lp(D2, [0.6, 0.4], [0.4, 0.6], sigma) == pytest.approx(0.4)
    assert oat_exact_lp(D2, [0.6, 0.4], [0.6, 0.4], sigma) == pytest.approx(0.0, abs=1e-12)


def test_exact_lp_solution_is_feasible():
    rng = np.random.default_rng(2)
    B = StructureConstraint.fault_tolerant(4, 2)
    sigma, h = random_consistent_assignment(B, rng, rows=4)
    _, g = random_consistent_assignment(B, rng, rows=4)  # both carry unit mass
    val, new = oat_exact_lp_solution(B, h, g, sigma)
    np.testing.assert_allclose(new.sum(axis=1), sigma.sum(axis=1), atol=1e-8)
    np.testing.assert_allclose(new.sum(axis=0), g, atol=1e-8)
    for row in new:
        if row.sum() > 1e-12:
            assert B.contains(row / row.sum(), 1e-7)
    assert val == pytest.approx(np.abs(new - sigma).sum(), abs=1e-8)


def test_exact_lp_infeasible_target():
    from constrained_coreset.lp import Infeasible

    B = StructureConstraint.fault_tolerant(2, 2)
    with pytest.raises((Infeasible, ValueError)):
        oat_exact_lp(B, [0.5, 0.5], [0.8, 0.2], np.array([[0.5, 0.5]]))


def test_lip_ratio_simplex_is_one():
    ratio, witness = lip_ratio_search(StructureConstraint.simplex(4), 200, 1)
    assert 1 - 1e-6 <= ratio <= 1 + 1e-6
    assert witness is not None


def test_lip_ratio_uniform_at_most_two():
    ratio, _ = lip_ratio_search(StructureConstraint.fault_tolerant(4, 2), 150, 2)
    assert 1 - 1e-6 <= ratio <= 2 + 1e-6


def test_lip_ratio_needs_trials():
    with pytest.raises(ValueError):
        lip_ratio_search(StructureConstraint.simplex(2), 0)


def test_knapsack_instance_structure():
    inst = knapsack_lip_instance(10)
    np.testing.assert_allclose(inst.A[0], [102 / 53, 4 / 53, 0])
    np.testing.assert_allclose(inst.h_target, [0.51, 0.245, 0.245])
    assert inst.A[0] @ inst.h_target == pytest.approx(1.0)
    assert inst.A[0] @ inst.h == pytest.approx(52 / 53)
    assert np.abs(inst.h - inst.h_target).sum() == pytest.approx(0.02)


@pytest.mark.parametrize("U", [1, 10, 100])
def test_knapsack_ratio_exceeds_U(U):
    inst = knapsack_lip_instance(U)
    assert inst.ratio > U


@pytest.mark.parametrize("U", [1, 3, 10, 100])
def test_knapsack_oat_matches_symmetric_derivation(U):
    # oracle: symmetric optimum moves 4q with q = a*delta/(2b), delta = 1/(10U)
    a, b, delta = (10 * U + 2) / (5 * U + 3), 4 / (5 * U + 3), 1 / (10 * U)
    expected = 4 * a * delta / (2 * b)
    assert knapsack_lip_instance(U).oat == pytest.approx(expected, rel=1e-9)


def test_extend_transport_examples():
    D2 = StructureConstraint.simplex(2)
    sigma = np.array([[0.5, 0.5]])
    out = extend_transport(D2, 1.0, 0.5, [0.5, 0.5], [0.25, 0.25], sigma)
    np.testing.assert_allclose(out, sigma / 2)
    assert np.abs(out - sigma).sum() == pytest.approx(0.5)
    same = extend_transport(D2, 1.0, 1.0, [0.5, 0.5], [0.5, 0.5], sigma)
    np.testing.assert_allclose(same, sigma, atol=1e-12)
    with pytest.raises(ValueError):
        extend_transport(D2, 1.0, 0.0, [0.5, 0.5], [0, 0], sigma)


@given(st.integers(0, 100_000))
def test_extend_transport_bound_on_matroids(seed):
    rng = np.random.default_rng(seed)
    B = StructureConstraint.fault_tolerant(4, 2)
    sigma, h = random_consistent_assignment(B, rng, rows=3)
    b = float(rng.uniform(0.2, 1.0))
    g = b * (rng.dirichlet(np.ones(len(B.vertices()))) @ B.vertices())
    out = extend_transport(B, 1.0, b, h, g, sigma)
    np.testing.assert_allclose(out.sum(axis=0), g, atol=1e-8)
    lip = 2.0  # uniform matroid: depth 1, so Lip <= 2
    assert np.abs(out - sigma).sum() <= 3 * lip * np.abs(h - g).sum() + 1e-8
