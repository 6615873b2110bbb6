"""Fixed particle-number sectors and exact unitary evolution on them."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from scipy.sparse.csgraph import connected_components

from .fock import CrossSpecies, StateVector, _check_d
from .operators import OperatorExpr, matrix_on_sector

UNITARITY_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-12


class HermiticityError(ValueError):
    pass


class UnitarityError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Sector:
    """Basis of all states with ``n_a`` a-particles and ``n_b`` b-particles.

    ``basis`` holds occupation bitmasks in increasing integer order.
    """

    d: int
    n_a: int
    n_b: int
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.basis.size)

    def index(self, occupation: int) -> int:
        pos = int(np.searchsorted(self.basis, np.uint64(occupation)))
        if pos >= self.dim or int(self.basis[pos]) != occupation:
            raise KeyError(f"state {occupation:#x} is not in sector (n_a={self.n_a}, n_b={self.n_b})")
        return pos

    def __contains__(self, occupation) -> bool:
        try:
            self.index(int(occupation))
        except KeyError:
            return False
        return True

    def to_array(self, psi: StateVector) -> np.ndarray:
        if psi.d != self.d:
            raise ValueError("state and sector have different d")
        vec = np.zeros(self.dim, dtype=complex)
        for key, amp in psi:
            vec[self.index(key)] = amp
        return vec

    def from_array(self, vec: np.ndarray) -> StateVector:
        return StateVector(self.d, dict(zip(self.basis.tolist(), np.asarray(vec).tolist())))


@lru_cache(maxsize=64)
def enumerate_sector(d: int, n_a: int, n_b: int) -> Sector:
    _check_d(d)
    for name, n in (("n_a", n_a), ("n_b", n_b)):
        if not 0 <= n <= 2 * d:
            raise ValueError(f"{name}={n} outside 0..{2 * d}")
    offset = 2 * d
    a_states = [sum(1 << m for m in c) for c in itertools.combinations(range(offset), n_a)]
    b_states = [sum(1 << (offset + m) for m in c) for c in itertools.combinations(range(offset), n_b)]
    basis = np.array(sorted(a | b for a in a_states for b in b_states), dtype=np.uint64)
    assert basis.size == comb(2 * d, n_a) * comb(2 * d, n_b)
    basis.setflags(write=False)
    return Sector(d, n_a, n_b, basis)


def sector_of(psi: StateVector) -> Sector:
    numbers = psi.particle_numbers()
    if len(numbers) != 1:
        raise ValueError(f"state spans several particle-number sectors: {sorted(numbers)}")
    n_a, n_b = numbers.pop()
    return enumerate_sector(psi.d, n_a, n_b)


@dataclass
class EvolutionResult:
    final: StateVector
    unitarity_defect: float


class Propagator:
    """Spectral decomposition of a hermitian operator on one sector.

    The sector matrix is split into its connected blocks and each block is
    diagonalized densely, so ``exp(-iHt)`` is exact for every ``t``.
    """

    def __init__(self, hamiltonian: OperatorExpr, sector: Sector,
                 cross_species=CrossSpecies.ANTICOMMUTE):
        self.sector = sector
        mat = matrix_on_sector(hamiltonian, sector, cross_species, sparse=True)
        diff = mat - mat.conj().T
        self.hermiticity_defect = float(abs(diff).max()) if diff.nnz else 0.0
        if self.hermiticity_defect > HERMITIAN_TOLERANCE:
            raise HermiticityError(f"operator is not hermitian on the sector "
                                   f"(max deviation {self.hermiticity_defect:.3g})")
        _, labels = connected_components(abs(mat), directed=False)
        order = np.argsort(labels, kind="stable")
        sizes = np.bincount(labels)
        local = np.empty(sector.dim, dtype=np.int64)
        local[order] = np.arange(sector.dim) - np.repeat(np.cumsum(sizes) - sizes, sizes)
        coo = mat.tocoo()
        self._blocks = []
        for size in np.unique(sizes):
            comps = np.flatnonzero(sizes == size)
            slot = np.full(sizes.size, -1)
            slot[comps] = np.arange(comps.size)
            idx = np.empty((comps.size, size), dtype=np.int64)
            members = np.flatnonzero(slot[labels] >= 0)
            idx[slot[labels[members]], local[members]] = members
            sub = np.zeros((comps.size, size, size), dtype=complex)
            keep = slot[labels[coo.row]] >= 0
            r, c = coo.row[keep], coo.col[keep]
            sub[slot[labels[r]], local[r], local[c]] = coo.data[keep]
            energies, vectors = np.linalg.eigh(sub)
            self._blocks.append((idx, energies, vectors))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([e.ravel() for _, e, _ in self._blocks]))

    def evolve_array(self, vec: np.ndarray, t: float) -> np.ndarray:
        out = np.empty_like(vec, dtype=complex)
        for idx, energies, vectors in self._blocks:
            coeffs = np.einsum("kji,kj->ki", vectors.conj(), vec[idx])
            coeffs *= np.exp(-1j * energies * t)
            out[idx] = np.einsum("kij,kj->ki", vectors, coeffs)
        return out

    def evolve_many(self, vec: np.ndarray, times) -> np.ndarray:
        """Rows are ``exp(-iHt) vec`` for each ``t`` in ``times``."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, vec.size), dtype=complex)
        for idx, energies, vectors in self._blocks:
            coeffs = np.einsum("kji,kj->ki", vectors.conj(), vec[idx])
            phased = coeffs[None] * np.exp(-1j * energies[None] * times[:, None, None])
            out[:, idx] = np.einsum("kij,tkj->tki", vectors, phased)
        return out

    def evolve(self, psi: StateVector, t: float) -> EvolutionResult:
        vec = self.sector.to_array(psi)
        final = self.evolve_array(vec, t)
        defect = abs(np.linalg.norm(final) - np.linalg.norm(vec))
        if defect > UNITARITY_TOLERANCE:
            raise UnitarityError(f"norm changed by {defect:.3g} during evolution")
        return EvolutionResult(self.sector.from_array(final), float(defect))


@lru_cache(maxsize=32)
def propagator(hamiltonian: OperatorExpr, sector: Sector,
               cross_species=CrossSpecies.ANTICOMMUTE) -> Propagator:
    return Propagator(hamiltonian, sector, CrossSpecies(cross_species))


def evolve(hamiltonian: OperatorExpr, t: float, psi: StateVector,
           cross_species=CrossSpecies.ANTICOMMUTE) -> EvolutionResult:
    """``exp(-i H t) |psi>`` for ``psi`` inside a single sector."""
    return propagator(hamiltonian, sector_of(psi), CrossSpecies(cross_species)).evolve(psi, t)


def fidelity(psi: StateVector, target: StateVector, tol: float = 1e-10) -> float:
    """``|<target|psi>|**2`` for normalized states."""
    for name, state in (("psi", psi), ("target", target)):
        if not state.is_normalized(tol):
            raise ValueError(f"{name} is not normalized (norm {state.norm():.12g})")
    return min(1.0, abs(target.inner(psi)) ** 2)

