import cmath
import math

import numpy as np
import pytest

from cobosim.coboson import SchmidtSpectrum, coboson_creation
from cobosim.fock import Site, Species, StateVector
from cobosim.operators import annihilation, apply, creation, sum_expr
from cobosim.protocols import bunched_state
from cobosim.rdm import DensityMatrix, one_particle_rdm, purity_of, two_particle_rdm
from cobosim.sector import evolve

from conftest import random_state

A, B, L, R = Species.A, Species.B, Site.L, Site.R


def _pair_state(s):
    vac = StateVector.vacuum(s.d)
    return apply(coboson_creation(s, L) * coboson_creation(s, R), vac)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_single_coboson_marginal(d):
    psi = apply(coboson_creation(SchmidtSpectrum.uniform(d), L), StateVector.vacuum(d))
    rho = one_particle_rdm(psi, A)
    expected = np.zeros((2 * d, 2 * d))
    expected[::2, ::2] = np.eye(d) / d  # only (i, L) modes populated
    np.testing.assert_allclose(rho.entries, expected, atol=1e-14)
    assert purity_of(rho) == pytest.approx(1 / d)
    assert rho.raw_trace == pytest.approx(1.0)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_pair_state_one_particle_purity(d):
    rho = one_particle_rdm(_pair_state(SchmidtSpectrum.uniform(d)), A)
    assert rho.raw_trace == pytest.approx(2.0)
    assert purity_of(rho) == pytest.approx(1 / (2 * d), abs=1e-12)


@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi / 2, 2.5])
def test_collective_split_state_is_mixed(phi):
    d = 1
    vac = StateVector.vacuum(d)
    ll = apply(creation(A, 1, L) * creation(B, 1, L), vac)
    rr = apply(creation(A, 1, R) * creation(B, 1, R), vac)
    psi = ll.add_scaled(cmath.exp(1j * phi), rr).scale(1 / math.sqrt(2))
    rho = one_particle_rdm(psi, A)
    np.testing.assert_allclose(rho.entries, np.eye(2) / 2, atol=1e-14)
    assert purity_of(rho) == pytest.approx(0.5)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_two_particle_purities_uniform(d):
    s = SchmidtSpectrum.uniform(d)
    rho_i = two_particle_rdm(_pair_state(s), A)
    rho_f = two_particle_rdm(bunched_state(s), A)
    assert purity_of(rho_i) == pytest.approx(1 / d ** 2, abs=1e-12)
    assert purity_of(rho_f) == pytest.approx(1 / (d * (d - 1)), abs=1e-12)
    for rho in (rho_i, rho_f):
        assert rho.raw_trace == pytest.approx(1.0)
        assert rho.hermiticity_defect() <= 1e-12
        assert rho.eigenvalues().min() >= -1e-10


def test_product_pair_is_pure():
    psi = apply(creation(A, 1, L) * creation(A, 2, L), StateVector.vacuum(2))
    assert purity_of(two_particle_rdm(psi, A)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        two_particle_rdm(apply(creation(A, 1, L), StateVector.vacuum(2)), A)


def test_purity_of_reference_matrices():
    eye = np.eye(4) / 4
    assert purity_of(DensityMatrix(eye, eye, ())) == pytest.approx(0.25)
    v = np.array([1, 1j, 0]) / math.sqrt(2)
    proj = np.outer(v, v.conj())
    assert purity_of(DensityMatrix(proj, proj, ())) == pytest.approx(1.0)


def test_unnormalized_state_rejected():
    psi = apply(creation(A, 1, L), StateVector.vacuum(1)).scale(2)
    with pytest.raises(ValueError):
        one_particle_rdm(psi, A)


def test_marginals_share_spectrum(rng):
    for d in (2, 3):
        for _ in range(5):
            g = rng.normal(size=(2 * d, 2 * d)) + 1j * rng.normal(size=(2 * d, 2 * d))
            g /= np.linalg.norm(g)
            op = sum_expr(g[m, n] * (creation(A, m // 2 + 1, m % 2) * creation(B, n // 2 + 1, n % 2))
                          for m in range(2 * d) for n in range(2 * d))
            psi = apply(op, StateVector.vacuum(d))
            ea = np.sort(one_particle_rdm(psi, A).eigenvalues())
            eb = np.sort(one_particle_rdm(psi, B).eigenvalues())
            np.testing.assert_allclose(ea, eb, atol=1e-9)


def test_basis_covariance(rng):
    d = 2
    psi = random_state(rng, d, 30).normalize()
    # restrict to one a-particle so a mode rotation stays inside the space
    psi = StateVector(d, {k: v for k, v in psi if bin(k & 0x0F).count("1") == 1}).normalize()
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    gen = sum_expr(h[p, q] * (creation(A, p // 2 + 1, p % 2) * annihilation(A, q // 2 + 1, q % 2))
                   for p in range(4) for q in range(4))
    # evolve in each (1, n_b) sector separately
    rotated = StateVector(d)
    for n_b in range(5):
        part = StateVector(d, {k: v for k, v in psi if bin(k >> 4).count("1") == n_b})
        if len(part):
            rotated = rotated + evolve(gen, 1.0, part).final
    import scipy.linalg
    u = scipy.linalg.expm(-1j * h)
    rho0 = one_particle_rdm(psi, A).entries
    rho1 = one_particle_rdm(rotated, A).entries
    np.testing.assert_allclose(rho1, u @ rho0 @ u.conj().T, atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_bunching_leaves_one_particle_marginal_unchanged(d):
    s = SchmidtSpectrum.uniform(d)
    rho_i = one_particle_rdm(_pair_state(s), A).entries
    rho_f = one_particle_rdm(bunched_state(s), A).entries
    assert np.abs(rho_i - rho_f).max() <= 1e-10
