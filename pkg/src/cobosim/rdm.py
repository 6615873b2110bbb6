"""One- and two-particle reduced density matrices from second-quantized expectations."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fock import CrossSpecies, Species, StateVector, mode_from_index
from .operators import annihilation, apply

RDM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-normalized matrix plus the raw expectation-value matrix.

    ``labels[r]`` names the single-particle mode (one-particle case) or the
    ordered mode pair ``(k, l)`` with ``k < l`` (two-particle case) of row ``r``.
    """

    entries: np.ndarray
    raw: np.ndarray
    labels: tuple

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def raw_trace(self) -> float:
        return float(np.trace(self.raw).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def _species_modes(d: int, species) -> list:
    return [mode_from_index(int(Species(species)) * 2 * d + k, d) for k in range(2 * d)]


def _lowered(psi: StateVector, modes, cross_species) -> StateVector:
    """``a_{modes[-1]} ... a_{modes[0]} |psi>``."""
    op = None
    for m in modes:
        factor = annihilation(m.species, m.internal, m.site)
        op = factor if op is None else factor * op
    return apply(op, psi, cross_species)


def _gram(vectors: list[StateVector]) -> np.ndarray:
    keys = sorted({k for v in vectors for k, _ in v})
    pos = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(vectors), len(keys)), dtype=complex)
    for r, v in enumerate(vectors):
        for k, amp in v:
            mat[r, pos[k]] = amp
    return mat @ mat.conj().T


def _finish(raw: np.ndarray, labels) -> DensityMatrix:
    trace = np.trace(raw).real
    if trace <= 0:
        raise ValueError("density matrix has zero trace")
    return DensityMatrix(raw / trace, raw, tuple(labels))


def _check_normalized(psi: StateVector) -> None:
    if not psi.is_normalized(RDM_TOLERANCE):
        raise ValueError(f"state is not normalized (norm {psi.norm():.12g})")


def one_particle_rdm(psi: StateVector, species,
                     cross_species=CrossSpecies.ANTICOMMUTE) -> DensityMatrix:
    """``raw[n, m] = <psi| x_m^dagger x_n |psi>`` over the 2d modes of one species."""
    _check_normalized(psi)
    modes = _species_modes(psi.d, species)
    raw = _gram([_lowered(psi, [m], cross_species) for m in modes])
    return _finish(raw, modes)


def two_particle_rdm(psi: StateVector, species,
                     cross_species=CrossSpecies.ANTICOMMUTE) -> DensityMatrix:
    """``raw[(k,l), (m,n)] = <psi| x_m^dagger x_n^dagger x_l x_k |psi>`` for ``k < l``, ``m < n``."""
    _check_normalized(psi)
    if min(pair[int(Species(species))] for pair in psi.particle_numbers()) < 2:
        raise ValueError("two-particle RDM needs at least two particles of the species")
    modes = _species_modes(psi.d, species)
    pairs = list(itertools.combinations(modes, 2))
    raw = _gram([_lowered(psi, [k, l], cross_species) for k, l in pairs])
    return _finish(raw, pairs)


def purity_of(rho: DensityMatrix) -> float:
    return float(np.einsum("ij,ji->", rho.entries, rho.entries).real)

