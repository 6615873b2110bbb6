"""Fermionic modes, occupation-number basis states and sparse state vectors.

Mode ordering
-------------
There are ``4d`` modes, one per (species, internal index, site). The linear
index is::

    index = species_offset + 2 * (internal - 1) + site

with ``species_offset`` 0 for ``A`` and ``2d`` for ``B`` and ``site`` 0 for
``L`` and 1 for ``R``. Bit ``index`` of a basis state's occupation integer is
the occupation of that mode.

Sign convention
---------------
``a_m^dagger`` and ``a_m`` pick up ``(-1)**k`` where ``k`` is the number of
occupied modes with a smaller index (one Jordan-Wigner string over all modes).
With ``cross_species="commute"`` only same-species modes are counted, so
``a`` and ``b`` operators commute instead of anticommute.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

PRUNE_THRESHOLD = 1e-14
NORM_TOLERANCE = 1e-12
MAX_D = 16  # 4d modes must fit in a uint64


class Species(enum.IntEnum):
    A = 0
    B = 1


class Site(enum.IntEnum):
    L = 0
    R = 1


class CrossSpecies(str, enum.Enum):
    """Relative statistics of ``a`` and ``b`` operators."""

    ANTICOMMUTE = "anticommute"
    COMMUTE = "commute"


@dataclass(frozen=True, slots=True)
class ModeId:
    species: Species
    internal: int
    site: Site

    def __post_init__(self):
        object.__setattr__(self, "species", Species(self.species))
        object.__setattr__(self, "site", Site(self.site))
        if self.internal < 1:
            raise ValueError(f"internal index must be >= 1, got {self.internal}")

    def index(self, d: int) -> int:
        return mode_index(self.species, self.internal, self.site, d)

    def __str__(self):
        return f"{self.species.name.lower()}[{self.internal},{self.site.name}]"


def _check_d(d: int) -> None:
    if not 1 <= d <= MAX_D:
        raise ValueError(f"d must be in 1..{MAX_D}, got {d}")


def mode_index(species, internal: int, site, d: int) -> int:
    """Linear index of a mode; see the module docstring for the ordering."""
    _check_d(d)
    if not 1 <= internal <= d:
        raise ValueError(f"internal index {internal} outside 1..{d}")
    return int(Species(species)) * 2 * d + 2 * (internal - 1) + int(Site(site))


def mode_from_index(index: int, d: int) -> ModeId:
    _check_d(d)
    if not 0 <= index < 4 * d:
        raise ValueError(f"mode index {index} outside 0..{4 * d - 1}")
    species, rest = divmod(index, 2 * d)
    internal, site = divmod(rest, 2)
    return ModeId(Species(species), internal + 1, Site(site))


def species_mask(species, d: int) -> int:
    """Bitmask selecting all modes of one species."""
    block = (1 << (2 * d)) - 1
    return block << (2 * d * int(Species(species)))


def site_mask(site, d: int) -> int:
    pattern = 0
    for k in range(2 * d):
        pattern |= 1 << (2 * k + int(Site(site)))
    return pattern


def sign_masks(d: int, cross_species=CrossSpecies.ANTICOMMUTE) -> list[int]:
    """Per-mode masks of the modes whose occupation enters the fermionic sign."""
    cross_species = CrossSpecies(cross_species)
    masks = []
    for m in range(4 * d):
        below = (1 << m) - 1
        if cross_species is CrossSpecies.COMMUTE:
            below &= species_mask(m // (2 * d), d)
        masks.append(below)
    return masks


def _resolve(mode, d: int) -> int:
    if isinstance(mode, ModeId):
        return mode.index(d)
    if not 0 <= mode < 4 * d:
        raise ValueError(f"mode index {mode} outside 0..{4 * d - 1}")
    return int(mode)


@dataclass(frozen=True, slots=True)
class FockBasisState:
    """Occupation pattern of the ``4d`` modes, stored as an integer bitmask."""

    d: int
    occupation: int = 0

    def __post_init__(self):
        _check_d(self.d)
        if self.occupation < 0 or self.occupation >> (4 * self.d):
            raise ValueError("occupation has bits outside the 4d modes")

    @classmethod
    def from_modes(cls, d: int, modes: Iterable) -> FockBasisState:
        bits = 0
        for mode in modes:
            idx = _resolve(mode, d)
            if bits >> idx & 1:
                raise ValueError(f"mode {mode} listed twice")
            bits |= 1 << idx
        return cls(d, bits)

    def occupied(self, mode) -> bool:
        return bool(self.occupation >> _resolve(mode, self.d) & 1)

    def modes(self) -> list[int]:
        return [m for m in range(4 * self.d) if self.occupation >> m & 1]

    def count(self, species=None) -> int:
        if species is None:
            return self.occupation.bit_count()
        return (self.occupation & species_mask(species, self.d)).bit_count()

    def __str__(self):
        labels = ", ".join(str(mode_from_index(m, self.d)) for m in self.modes())
        return f"|{labels}>"


def _ladder(state: FockBasisState, mode, create: bool, cross_species):
    idx = _resolve(mode, state.d)
    bit = 1 << idx
    occupied = bool(state.occupation & bit)
    if occupied == create:
        return None
    mask = sign_masks(state.d, cross_species)[idx]
    sign = -1 if (state.occupation & mask).bit_count() & 1 else 1
    return FockBasisState(state.d, state.occupation ^ bit), sign


def apply_creation(state: FockBasisState, mode, cross_species=CrossSpecies.ANTICOMMUTE):
    """``a_mode^dagger |state>`` as ``(new_state, sign)``, or ``None`` if occupied."""
    return _ladder(state, mode, True, cross_species)


def apply_annihilation(state: FockBasisState, mode, cross_species=CrossSpecies.ANTICOMMUTE):
    """``a_mode |state>`` as ``(new_state, sign)``, or ``None`` if empty."""
    return _ladder(state, mode, False, cross_species)


class StateVector:
    """Sparse superposition of basis states.

    Keys of :attr:`amplitudes` are occupation bitmasks. Instances are treated
    as immutable; every operation returns a new vector.
    """

    __slots__ = ("d", "_amps")

    def __init__(self, d: int, amplitudes: Mapping[int, complex] | None = None,
                 threshold: float = PRUNE_THRESHOLD):
        _check_d(d)
        self.d = d
        limit = 1 << (4 * d)
        amps = {}
        for key, value in (amplitudes or {}).items():
            key = key.occupation if isinstance(key, FockBasisState) else int(key)
            if not 0 <= key < limit:
                raise ValueError(f"basis key {key} outside the 4d-mode space")
            value = complex(value)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError("non-finite amplitude")
            if abs(value) >= threshold:
                amps[key] = value
        self._amps = amps

    @classmethod
    def vacuum(cls, d: int) -> StateVector:
        return cls(d, {0: 1.0})

    @classmethod
    def basis(cls, state: FockBasisState, amplitude: complex = 1.0) -> StateVector:
        return cls(state.d, {state.occupation: amplitude})

    @property
    def amplitudes(self) -> Mapping[int, complex]:
        return dict(self._amps)

    def __len__(self):
        return len(self._amps)

    def __iter__(self) -> Iterator[tuple[int, complex]]:
        return iter(self._amps.items())

    def __getitem__(self, key) -> complex:
        if isinstance(key, FockBasisState):
            key = key.occupation
        return self._amps.get(key, 0j)

    def __repr__(self):
        return f"StateVector(d={self.d}, nnz={len(self._amps)}, norm={self.norm():.6g})"

    def _check_same_space(self, other: StateVector) -> None:
        if other.d != self.d:
            raise ValueError(f"state vectors live in different spaces (d={self.d} vs d={other.d})")

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self._amps.values()))

    def is_normalized(self, tol: float = NORM_TOLERANCE) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalize(self) -> StateVector:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return self.scale(1.0 / n)

    def scale(self, factor: complex) -> StateVector:
        return StateVector(self.d, {k: v * factor for k, v in self._amps.items()})

    def add_scaled(self, factor: complex, other: StateVector) -> StateVector:
        """``self + factor * other``, without pruning cancellations."""
        self._check_same_space(other)
        out = dict(self._amps)
        for k, v in other._amps.items():
            out[k] = out.get(k, 0j) + factor * v
        return StateVector(self.d, out, threshold=0.0)

    def __add__(self, other: StateVector) -> StateVector:
        return self.add_scaled(1.0, other).prune()

    def __sub__(self, other: StateVector) -> StateVector:
        return self.add_scaled(-1.0, other).prune()

    def __mul__(self, factor: complex) -> StateVector:
        return self.scale(factor)

    __rmul__ = __mul__

    def prune(self, threshold: float = PRUNE_THRESHOLD) -> StateVector:
        return StateVector(self.d, self._amps, threshold=threshold)

    def inner(self, other: StateVector) -> complex:
        """``<self|other>``; conjugate-linear in ``self``."""
        self._check_same_space(other)
        left, right = self._amps, other._amps
        if len(left) <= len(right):
            return sum((v.conjugate() * right[k] for k, v in left.items() if k in right), 0j)
        return sum((left[k].conjugate() * v for k, v in right.items() if k in left), 0j)

    def particle_numbers(self) -> set[tuple[int, int]]:
        """Distinct ``(n_a, n_b)`` pairs present in the support."""
        ma, mb = species_mask(Species.A, self.d), species_mask(Species.B, self.d)
        return {((k & ma).bit_count(), (k & mb).bit_count()) for k in self._amps}


def inner_product(phi: StateVector, psi: StateVector) -> complex:
    return phi.inner(psi)
