"""Simplex regions, certified partitions, factorization scaffolding."""

import math

import numpy as np
import pytest

from gsum import (
    DiscreteDistributionVec,
    DomainError,
    PartitionResult,
    RandomSource,
    bessel_identity_check,
    estimate_cd,
    mss_partition,
    normcov_factorize,
    region_index,
    simplex_vectors,
    subgaussian_norm,
)
from gsum.battery import random_partition_instance
from gsum.linalg import power_iteration_norm


# ---------------------------------------------------------------------------
# simplex vectors
# ---------------------------------------------------------------------------

def test_simplex_d2_geometry():
    sc = simplex_vectors(2)
    norms = np.linalg.norm(sc.vectors, axis=1)
    # ||e_1 - (e_1+e_2)/2|| = 1/sqrt(2), scaled by sqrt(log 2)
    assert np.allclose(norms, math.sqrt(math.log(2) / 2), atol=1e-12)
    assert np.allclose(sc.vectors[0], -sc.vectors[1], atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 8, 17])
def test_simplex_structure(d):
    sc = simplex_vectors(d)
    assert np.max(np.abs(sc.vectors.sum(axis=0))) <= 1e-12
    gram = sc.vectors @ sc.vectors.T
    diag = np.diag(gram)
    assert np.ptp(diag) <= 1e-12
    assert np.allclose(diag, math.log(d) * (1 - 1 / d), atol=1e-12)
    off = gram[~np.eye(d, dtype=bool)]
    assert np.ptp(off) <= 1e-12
    with pytest.raises(DomainError):
        simplex_vectors(1)


def test_region_index_rules():
    sc = simplex_vectors(5)
    for j in range(5):
        assert region_index(sc.vectors[j], sc) == j
    assert region_index(np.zeros(4), sc) == 0  # tie-break: lowest index
    # argmax is invariant under positive rescaling
    z = np.array([0.3, -0.1, 0.8, 0.05])
    assert region_index(z, sc) == region_index(7.5 * z, sc)


def test_region_frequencies_uniform():
    sc = simplex_vectors(6)
    gen = RandomSource(5).generator()
    G = gen.standard_normal((120_000, 5))
    reg = np.argmax(G @ sc.vectors.T, axis=1)
    counts = np.bincount(reg, minlength=6)
    p = 1 / 6
    sigma = math.sqrt(p * (1 - p) / G.shape[0])
    assert np.max(np.abs(counts / G.shape[0] - p)) <= 3 * sigma


def test_estimate_cd_closed_form_d2():
    sc = simplex_vectors(2)
    c_d, se = estimate_cd(sc, 400_000, RandomSource(3))
    closed = math.sqrt(2 / math.pi) / math.sqrt(math.log(2) / 2)
    assert closed == pytest.approx(1.35532, abs=1e-5)
    assert abs(c_d - closed) <= 3 * se
    assert sc.c_d == c_d


def test_estimate_cd_range_and_scaling():
    sc = simplex_vectors(16)
    c1, se1 = estimate_cd(sc, 50_000, RandomSource(4))
    assert 0.1 < c1 < 10.0
    _, se2 = estimate_cd(sc, 200_000, RandomSource(4))
    assert se2 == pytest.approx(se1 / 2, rel=0.2)  # MC scaling
    with pytest.raises(DomainError):
        estimate_cd(sc, 100, RandomSource(4))


def test_bessel_identity_check():
    sc = simplex_vectors(8)
    estimate_cd(sc, 200_000, RandomSource(6))
    rep = bessel_identity_check(sc, 200_000, RandomSource(7))
    assert rep.frequencies_uniform_3sigma
    assert rep.y_mean_centered_3sigma
    assert rep.e_norm2_y > 0
    fresh = simplex_vectors(8)
    with pytest.raises(DomainError):
        bessel_identity_check(fresh, 1000, RandomSource(8))


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def test_partition_worked_example():
    v = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    res = mss_partition(v, 2, strategy="exhaustive")
    assert res.parts == ((0, 2), (1, 3))
    assert res.per_part_norm == (0.5, 0.5)
    assert max(res.per_part_norm) <= 50 / 2
    assert res.certified()


def test_partition_precondition():
    v = np.tile(np.array([[1.0, 0.0]]), (3, 1))
    with pytest.raises(DomainError):
        mss_partition(v, 2)
    with pytest.raises(DomainError):
        mss_partition(np.array([[1.5, 0.0], [-1.5, 0.0]]), 2)  # norms > 1


def test_partition_random_instance_exhaustive():
    gen = RandomSource(11).generator()
    v, k = random_partition_instance(gen, max_m=12, max_n=3)
    res = mss_partition(v, k, strategy="exhaustive")
    assert res.certified()
    assert all(s > k / 3 for s in res.sizes)
    assert all(nrm <= 50 / k for nrm in res.per_part_norm)
    assert res.verify(v)


def test_partition_serialization_bit_exact():
    gen = RandomSource(13).generator()
    v, k = random_partition_instance(gen, max_m=10, max_n=3)
    res = mss_partition(v, k, strategy="exhaustive")
    rt = PartitionResult.from_json(res.to_json())
    assert rt == res
    assert rt.verify(v)
    # recomputation with the same deterministic procedure is bit-identical
    again = mss_partition(v, k, strategy="exhaustive")
    assert again.per_part_norm == res.per_part_norm


def test_partition_randomized_strategy():
    gen = RandomSource(17).generator()
    k, n, m = 4, 3, 24
    while True:
        v = gen.normal(size=(m, n))
        v /= np.linalg.norm(v, axis=1)[:, None]
        v *= 0.8 * min(1.0, math.sqrt(n / k))
        if np.linalg.eigvalsh(v.T @ v / m)[-1] <= 1 / k - 1e-9:
            break
    res = mss_partition(v, k, strategy="randomized", rng=RandomSource(19))
    assert res.certified()
    assert res.search_strategy == "randomized"
    again = mss_partition(v, k, strategy="randomized", rng=RandomSource(19))
    assert again == res  # deterministic given the stream


def test_partition_exhaustive_limit():
    v = np.zeros((14, 2))
    v[:, 0] = 0.1
    with pytest.raises(DomainError):
        mss_partition(v, 2, strategy="exhaustive")


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

def axes_distribution(n, lam):
    atoms = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = lam
        atoms.append((e.copy(), 1 / (2 * n)))
        atoms.append((-e, 1 / (2 * n)))
    return DiscreteDistributionVec(atoms, n)


def test_factorize_gate_boundary():
    lam = 1.5
    # covariance (lam^2/n) I passes iff n >= e^{lam^2} = 9.49
    with pytest.raises(DomainError):
        normcov_factorize(axes_distribution(9, lam), lam)
    plan = normcov_factorize(axes_distribution(10, lam), lam, rng=RandomSource(23))
    assert plan.parts.certified()


def test_factorize_axes_example():
    lam = 1.5
    plan = normcov_factorize(axes_distribution(22, lam), lam, rng=RandomSource(29))
    assert max(plan.operator_norms) <= plan.c0
    # reconstruction is bit-exact through the designated accessor
    for j, part in enumerate(plan.sigma):
        for col, atom_idx in enumerate(part):
            assert np.array_equal(
                plan.apply_to_scaled_basis(j, col), plan.atoms[atom_idx]
            )
    # operator norms match a power-iteration recomputation
    for F_j, nrm in zip(plan.per_part_map, plan.operator_norms):
        assert power_iteration_norm(F_j) == pytest.approx(nrm, abs=1e-8)
    # part means stay under the audit constant
    for m in plan.part_means:
        assert np.linalg.norm(m) <= plan.c0


def test_factorize_single_atom_trivial():
    single = DiscreteDistributionVec([(np.zeros(3), 1.0)], 3)
    plan = normcov_factorize(single, 1.0, rng=RandomSource(31))
    for F_j in plan.per_part_map:
        assert np.max(np.abs(F_j)) == 0.0


def test_factorize_rejects_nonuniform_weights():
    d = DiscreteDistributionVec(
        [(np.array([0.5, 0.0]), 0.6), (np.array([-0.5, 0.0]), 0.4)], 2
    )
    with pytest.raises(DomainError):
        normcov_factorize(d, 1.0)


# ---------------------------------------------------------------------------
# truncation bookkeeping for subgaussian vector laws
# ---------------------------------------------------------------------------

def test_tail_splitting_inequalities():
    # bounded test laws: shell masses beyond k M sqrt(n) vanish for k >= 1,
    # so the tail-splitting bound exp(-100 k^2 n) holds with slack
    M = 100.0
    for n, atoms in [
        (2, [(np.array([0.5, 0.0]), 0.5), (np.array([-0.5, 0.0]), 0.5)]),
        (3, [(np.array([1.0, 1.0, 0.0]), 0.25), (np.array([-1.0, -1.0, 0.0]), 0.25),
             (np.zeros(3), 0.5)]),
    ]:
        d = DiscreteDistributionVec(atoms, n)
        grid = [np.eye(n)[i] for i in range(n)]
        assert subgaussian_norm(d, grid).kappa <= 1.0
        norms = np.linalg.norm(d.points, axis=1)
        for k in (1, 2, 3):
            mass = float(d.ps[(norms > k * M * math.sqrt(n))
                              & (norms <= (k + 1) * M * math.sqrt(n))].sum())
            assert mass <= math.exp(-100 * k * k * n)


def test_estimate_cd_per_region_agreement():
    # conditional-mean projections agree across regions (symmetry), each
    # within 3 sigma of the pooled estimate
    sc = simplex_vectors(5)
    gen = RandomSource(37).generator()
    G = gen.standard_normal((200_000, 4))
    reg = np.argmax(G @ sc.vectors.T, axis=1)
    proj = np.einsum("ij,ij->i", G, sc.vectors[reg]) / sc.vector_norm_sq
    pooled = proj.mean()
    for j in range(5):
        sel = proj[reg == j]
        se = sel.std() / math.sqrt(sel.size)
        assert abs(sel.mean() - pooled) <= 3 * se
