"""Second-quantized operators as sums of scaled ordered ladder products."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable

import numpy as np
import scipy.sparse as sp

from .fock import CrossSpecies, ModeId, Site, Species, StateVector, sign_masks
from .kernels import apply_term

if TYPE_CHECKING:
    from .sector import Sector

MAX_FACTORS = 8
ZERO_COEFFICIENT = 1e-15
HERMITIAN_TOLERANCE = 1e-12


class Kind(enum.Enum):
    CREATE = "+"
    ANNIHILATE = "-"

    def flipped(self) -> Kind:
        return Kind.ANNIHILATE if self is Kind.CREATE else Kind.CREATE


class SectorLeakError(ValueError):
    """An operator maps states of a sector outside of it."""


@dataclass(frozen=True, slots=True)
class OperatorTerm:
    """``coefficient * f_1 f_2 ... f_k``; ``f_k`` acts on the ket first."""

    coefficient: complex
    factors: tuple[tuple[ModeId, Kind], ...]

    def __post_init__(self):
        if len(self.factors) > MAX_FACTORS:
            raise ValueError(f"at most {MAX_FACTORS} factors per term, got {len(self.factors)}")

    def adjoint(self) -> OperatorTerm:
        return OperatorTerm(
            complex(self.coefficient).conjugate(),
            tuple((mode, kind.flipped()) for mode, kind in reversed(self.factors)),
        )

    def species_balance(self) -> dict[Species, int]:
        """Net particle number change per species."""
        net = {Species.A: 0, Species.B: 0}
        for mode, kind in self.factors:
            net[mode.species] += 1 if kind is Kind.CREATE else -1
        return net

    def __str__(self):
        ops = " ".join(f"{m}{'^+' if k is Kind.CREATE else ''}" for m, k in self.factors)
        return f"({self.coefficient:.6g}) {ops or '1'}"


@dataclass(frozen=True)
class OperatorExpr:
    terms: tuple[OperatorTerm, ...] = ()

    def __post_init__(self):
        merged: dict[tuple, complex] = {}
        for term in self.terms:
            merged[term.factors] = merged.get(term.factors, 0j) + complex(term.coefficient)
        object.__setattr__(self, "terms", tuple(
            OperatorTerm(c, f) for f, c in merged.items() if abs(c) > ZERO_COEFFICIENT))

    @classmethod
    def identity(cls, coefficient: complex = 1.0) -> OperatorExpr:
        return cls((OperatorTerm(coefficient, ()),))

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: OperatorExpr) -> OperatorExpr:
        return OperatorExpr(self.terms + other.terms)

    def __sub__(self, other: OperatorExpr) -> OperatorExpr:
        return self + (-1) * other

    def __neg__(self) -> OperatorExpr:
        return (-1) * self

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return OperatorExpr(tuple(
                OperatorTerm(s.coefficient * o.coefficient, s.factors + o.factors)
                for s in self.terms for o in other.terms))
        return OperatorExpr(tuple(OperatorTerm(t.coefficient * other, t.factors) for t in self.terms))

    def __rmul__(self, scalar):
        return self * scalar

    def __pow__(self, n: int) -> OperatorExpr:
        out = OperatorExpr.identity()
        for _ in range(n):
            out = out * self
        return out

    def adjoint(self) -> OperatorExpr:
        return OperatorExpr(tuple(t.adjoint() for t in self.terms))

    def __str__(self):
        return " + ".join(str(t) for t in self.terms) or "0"


def creation(species, internal: int, site) -> OperatorExpr:
    return OperatorExpr((OperatorTerm(1.0, ((ModeId(species, internal, site), Kind.CREATE),)),))


def annihilation(species, internal: int, site) -> OperatorExpr:
    return OperatorExpr((OperatorTerm(1.0, ((ModeId(species, internal, site), Kind.ANNIHILATE),)),))


def number_operator(d: int, species=None) -> OperatorExpr:
    """Total particle number, optionally restricted to one species."""
    species_list = [Species(species)] if species is not None else list(Species)
    out = OperatorExpr()
    for s in species_list:
        for i in range(1, d + 1):
            for x in Site:
                out = out + creation(s, i, x) * annihilation(s, i, x)
    return out


def sum_expr(exprs: Iterable[OperatorExpr]) -> OperatorExpr:
    terms: tuple = ()
    for e in exprs:
        terms += e.terms
    return OperatorExpr(terms)


def adjoint(expr: OperatorExpr) -> OperatorExpr:
    return expr.adjoint()


@lru_cache(maxsize=256)
def _compile(expr: OperatorExpr, d: int, cross_species: CrossSpecies):
    masks = sign_masks(d, cross_species)
    compiled = []
    for term in expr.terms:
        order = term.factors[::-1]
        modes = np.array([m.index(d) for m, _ in order], dtype=np.int64)
        creates = np.array([k is Kind.CREATE for _, k in order], dtype=np.uint8)
        term_masks = np.array([masks[m] for m in modes], dtype=np.uint64)
        compiled.append((term, modes, creates, term_masks))
    return compiled


def apply(expr: OperatorExpr, psi: StateVector,
          cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    """``expr |psi>`` evaluated term by term on the sparse amplitudes."""
    if len(psi) == 0 or not expr.terms:
        return StateVector(psi.d)
    keys = np.fromiter((k for k, _ in psi), dtype=np.uint64, count=len(psi))
    amps = np.fromiter((v for _, v in psi), dtype=complex, count=len(psi))
    out_keys, out_amps = [], []
    for term, modes, creates, masks in _compile(expr, psi.d, CrossSpecies(cross_species)):
        new, sign = apply_term(keys, modes, creates, masks)
        alive = sign != 0
        out_keys.append(new[alive])
        out_amps.append(term.coefficient * sign[alive] * amps[alive])
    all_keys = np.concatenate(out_keys)
    if all_keys.size == 0:
        return StateVector(psi.d)
    uniq, inverse = np.unique(all_keys, return_inverse=True)
    summed = np.zeros(uniq.size, dtype=complex)
    np.add.at(summed, inverse, np.concatenate(out_amps))
    return StateVector(psi.d, dict(zip(uniq.tolist(), summed.tolist())))


def check_preserves_sector(expr: OperatorExpr) -> None:
    for term in expr.terms:
        balance = term.species_balance()
        if any(balance.values()):
            raise SectorLeakError(f"term {term} changes particle numbers by "
                                  f"(a: {balance[Species.A]:+d}, b: {balance[Species.B]:+d})")


def matrix_on_sector(expr: OperatorExpr, sector: Sector,
                     cross_species=CrossSpecies.ANTICOMMUTE, sparse: bool = False):
    """Matrix ``M[r, c] = <basis_r| expr |basis_c>`` on a fixed-number sector.

    Returns a dense ``ndarray`` or, with ``sparse=True``, a CSR matrix.
    """
    check_preserves_sector(expr)
    basis = sector.basis
    n = basis.size
    rows, cols, vals = [], [], []
    col_index = np.arange(n)
    for term, modes, creates, masks in _compile(expr, sector.d, CrossSpecies(cross_species)):
        new, sign = apply_term(basis, modes, creates, masks)
        alive = sign != 0
        targets = new[alive]
        pos = np.searchsorted(basis, targets)
        pos_clipped = np.minimum(pos, n - 1)
        if not np.array_equal(basis[pos_clipped], targets):
            raise SectorLeakError(f"term {term} maps sector states outside the sector")
        rows.append(pos_clipped)
        cols.append(col_index[alive])
        vals.append(term.coefficient * sign[alive])
    if rows:
        r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals).astype(complex)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0, dtype=complex)
    mat = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat if sparse else mat.toarray()


def is_hermitian(expr: OperatorExpr, sector: Sector, tol: float = HERMITIAN_TOLERANCE,
                 cross_species=CrossSpecies.ANTICOMMUTE) -> tuple[bool, float]:
    """Whether ``expr`` is hermitian on ``sector``, and the max entry deviation.

    Operators that leave the sector are reported as not hermitian there.
    """
    try:
        m = matrix_on_sector(expr, sector, cross_species, sparse=True)
    except SectorLeakError:
        return False, float("inf")
    diff = m - m.conj().T
    dev = float(abs(diff).max()) if diff.nnz else 0.0
    return dev <= tol, dev
