import math

import numpy as np
import pytest
import scipy.linalg

from cobosim.coboson import SchmidtSpectrum, coboson_creation
from cobosim.fock import Site, Species, StateVector
from cobosim.operators import apply, creation, matrix_on_sector
from cobosim.protocols import build_hamiltonian
from cobosim.sector import (HermiticityError, Propagator, enumerate_sector, evolve, fidelity,
                            sector_of)

from conftest import assert_states_close, random_state

A, B, L, R = Species.A, Species.B, Site.L, Site.R


@pytest.mark.parametrize("d, n_a, n_b, size", [(1, 1, 0, 2), (2, 1, 1, 16), (2, 2, 2, 36), (6, 2, 2, 4356)])
def test_sector_sizes(d, n_a, n_b, size):
    sector = enumerate_sector(d, n_a, n_b)
    assert sector.dim == size
    assert np.all(np.diff(sector.basis.astype(np.int64)) > 0)
    for pos, key in enumerate(sector.basis[:50]):
        assert sector.index(int(key)) == pos


def test_sector_matches_enumeration_oracle():
    d = 2
    brute = sorted(s for s in range(2 ** 8)
                   if bin(s & 0x0F).count("1") == 2 and bin(s & 0xF0).count("1") == 2)
    assert enumerate_sector(d, 2, 2).basis.tolist() == brute


def test_sector_rejects_bad_counts():
    with pytest.raises(ValueError):
        enumerate_sector(2, 5, 0)


def _one(d, species, i, site):
    return apply(creation(species, i, site), StateVector.vacuum(d))


def test_symmetric_beam_splitter():
    h = build_hamiltonian("BS_single", 1)
    out = evolve(h, math.pi / 4, _one(1, A, 1, R)).final
    expected = (_one(1, A, 1, R) + _one(1, A, 1, L).scale(-1j)).scale(1 / math.sqrt(2))
    assert_states_close(out, expected, 1e-14)


def test_full_swap_against_expm():
    h = build_hamiltonian("BS_single", 1)
    out = evolve(h, math.pi / 2, _one(1, A, 1, R)).final
    assert_states_close(out, _one(1, A, 1, L).scale(-1j), 1e-14)
    u = scipy.linalg.expm(-1j * math.pi / 2 * np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(u @ [0, 1], [-1j, 0], atol=1e-14)


def test_zero_time_is_identity(rng):
    h = build_hamiltonian("NONLOCAL_A", 2) + build_hamiltonian("NONLOCAL_B", 2)
    psi = random_state(rng, 2, 10, enumerate_sector(2, 2, 2)).normalize()
    assert_states_close(evolve(h, 0.0, psi).final, psi, 1e-14)


def test_propagator_matches_dense_expm(rng):
    d = 2
    h = build_hamiltonian("BS_pair_A", d) + build_hamiltonian("BS_pair_B", d) + build_hamiltonian("INT", d, 3.7)
    sector = enumerate_sector(d, 1, 1)
    m = matrix_on_sector(h, sector)
    psi = random_state(rng, d, 16, sector).normalize()
    for t in (0.3, 2.0, 11.0):
        ref = scipy.linalg.expm(-1j * t * m) @ sector.to_array(psi)
        np.testing.assert_allclose(sector.to_array(evolve(h, t, psi).final), ref, atol=1e-12)


def test_non_hermitian_is_rejected():
    h = creation(A, 1, L) * creation(A, 1, R).adjoint()
    with pytest.raises(HermiticityError):
        Propagator(h, enumerate_sector(1, 1, 0))


def test_sector_mixing_state_rejected():
    psi = _one(2, A, 1, L) + _one(2, B, 1, L)
    with pytest.raises(ValueError):
        evolve(build_hamiltonian("BS_pair_A", 2), 1.0, psi)


def test_fidelity_examples():
    psi = _one(2, A, 1, L)
    assert fidelity(psi, psi) == 1.0
    assert fidelity(psi, _one(2, A, 1, R)) == 0.0
    with pytest.raises(ValueError):
        fidelity(psi.scale(2), psi)


def _protocol_cases(d):
    s = SchmidtSpectrum.uniform(d)
    vac = StateVector.vacuum(d)
    single = apply(coboson_creation(s, L), vac)
    pair = apply(coboson_creation(s, L) * coboson_creation(s, R), vac)
    pair_h = build_hamiltonian("BS_pair_A", d) + build_hamiltonian("BS_pair_B", d)
    return [
        (pair_h, single),
        (pair_h + build_hamiltonian("INT", d, 10.0), single),
        (build_hamiltonian("NONLOCAL_A", d) + build_hamiltonian("NONLOCAL_B", d), pair),
        (build_hamiltonian("NONLOCAL_A", d), pair),
    ]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_unitarity_group_law_energy_and_sector(rng, d):
    for h, psi in _protocol_cases(d):
        if len(h) == 0:  # NONLOCAL is empty for d=1
            continue
        sector = sector_of(psi)
        t1, t2 = rng.uniform(0, 2 * math.pi, size=2)
        r1 = evolve(h, t1, psi)
        assert r1.unitarity_defect <= 1e-10
        assert abs(r1.final.norm() - psi.norm()) <= 1e-10
        assert all(int(k) in sector for k, _ in r1.final)
        both = evolve(h, t1 + t2, psi).final
        assert_states_close(both, evolve(h, t2, r1.final).final, 1e-9)
        e0 = psi.inner(apply(h, psi))
        et = r1.final.inner(apply(h, r1.final))
        assert abs(e0 - et) <= 1e-9
