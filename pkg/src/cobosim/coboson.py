"""Schmidt spectra, coboson creation operators and the ladder quantities.

For a spectrum ``lam`` the normalisation of the N-coboson Fock state is
``chi_N = N! * e_N(lam)`` with ``e_N`` the elementary symmetric polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import CrossSpecies, Site, Species, StateVector
from .operators import OperatorExpr, apply, creation

SUM_TOLERANCE = 1e-12
UNITARY_TOLERANCE = 1e-10


class DegenerateSpectrumError(ValueError):
    """The requested quantity needs more nonzero Schmidt coefficients."""


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients, stored in descending order."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("spectrum must be a nonempty sequence")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("Schmidt coefficients must be finite and >= 0")
        if abs(lam.sum() - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"Schmidt coefficients sum to {lam.sum():.15g}, not 1")
        object.__setattr__(self, "lambdas", tuple(sorted(map(float, lam), reverse=True)))

    @classmethod
    def uniform(cls, d: int) -> SchmidtSpectrum:
        return cls((1.0 / d,) * d)

    @classmethod
    def normalized(cls, weights) -> SchmidtSpectrum:
        w = np.asarray(weights, dtype=float)
        return cls(tuple(w / w.sum()))

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> SchmidtSpectrum:
        """Squared standard-normal samples, normalized to sum 1."""
        x = rng.standard_normal(d) ** 2
        return cls.normalized(x)

    @property
    def d(self) -> int:
        return len(self.lambdas)

    @property
    def rank(self) -> int:
        return sum(1 for x in self.lambdas if x > 0)

    def as_array(self) -> np.ndarray:
        return np.array(self.lambdas)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``gamma = left^dagger @ diag(sqrt(lam)) @ conj(right)``.

    Rows of ``left``/``right`` give the Schmidt-basis annihilation operators
    in terms of the original ones: ``a_i = sum_m left[i, m] a_m`` and
    ``b_i = sum_n right[i, n] b_n``.
    """

    spectrum: SchmidtSpectrum
    left_transform: np.ndarray
    right_transform: np.ndarray

    def reconstruct(self) -> np.ndarray:
        s = np.sqrt(self.spectrum.as_array())
        return self.left_transform.conj().T @ np.diag(s) @ self.right_transform.conj()


def schmidt_decompose(gamma, tol: float = 1e-10) -> SchmidtDecomposition:
    g = np.asarray(gamma, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("coefficient matrix must be square")
    if abs(np.linalg.norm(g) - 1.0) > tol:
        raise ValueError(f"state is not normalized (Frobenius norm {np.linalg.norm(g):.12g})")
    u, s, vh = np.linalg.svd(g)
    lam = s ** 2
    # svd's order is already descending; renormalize rounding so the spectrum validates
    spectrum = SchmidtSpectrum(tuple(lam / lam.sum()))
    return SchmidtDecomposition(spectrum, u.conj().T, vh.conj())


def purity(spectrum: SchmidtSpectrum) -> float:
    lam = spectrum.as_array()
    return float(lam @ lam)


def coboson_creation(spectrum: SchmidtSpectrum, site=Site.L) -> OperatorExpr:
    """``sum_i sqrt(lam_i) a_{i,site}^dagger b_{i,site}^dagger``."""
    out = OperatorExpr()
    for i, lam in enumerate(spectrum.lambdas, start=1):
        out = out + math.sqrt(lam) * (creation(Species.A, i, site) * creation(Species.B, i, site))
    return out


def elementary_symmetric(values, order: int) -> np.ndarray:
    """``e_0 .. e_order`` of ``values`` by the prefix recursion.

    ``e_k^{(m)} = e_k^{(m-1)} + x_m e_{k-1}^{(m-1)}``; orders above
    ``len(values)`` come out as zero.
    """
    e = np.zeros(order + 1)
    e[0] = 1.0
    for m, x in enumerate(values, start=1):
        top = min(m, order)
        e[1:top + 1] = e[1:top + 1] + x * e[0:top]
    return e


def chi_table(spectrum: SchmidtSpectrum, order: int) -> np.ndarray:
    """``chi_0 .. chi_order``; entries beyond ``d`` are zero."""
    e = elementary_symmetric(spectrum.lambdas, order)
    return np.array([math.factorial(n) * e[n] for n in range(order + 1)])


def chi(spectrum: SchmidtSpectrum, n: int) -> float:
    if not 0 <= n <= spectrum.d:
        raise ValueError(f"N={n} outside 0..{spectrum.d}")
    return float(chi_table(spectrum, n)[n])


def alpha(spectrum: SchmidtSpectrum, n: int) -> float:
    if not 1 <= n <= spectrum.d:
        raise ValueError(f"N={n} outside 1..{spectrum.d}")
    table = chi_table(spectrum, n)
    if table[n - 1] == 0.0:
        raise DegenerateSpectrumError(f"chi_{n - 1} = 0 for a rank-{spectrum.rank} spectrum")
    return math.sqrt(table[n] / table[n - 1])


def build_fock_state(spectrum: SchmidtSpectrum, n: int, site=Site.L,
                     cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    """``chi_N^{-1/2} (c^dagger)^N / sqrt(N!) |0>``."""
    if not 0 <= n <= spectrum.d:
        raise ValueError(f"N={n} outside 0..{spectrum.d}")
    chi_n = chi(spectrum, n)
    if chi_n == 0.0:
        raise DegenerateSpectrumError(f"chi_{n} = 0: spectrum rank {spectrum.rank} < {n}")
    cdag = coboson_creation(spectrum, site)
    psi = StateVector.vacuum(spectrum.d)
    for _ in range(n):
        psi = apply(cdag, psi, cross_species)
    return psi.scale(1.0 / math.sqrt(chi_n * math.factorial(n)))


def epsilon_state(spectrum: SchmidtSpectrum, n: int, site=Site.L,
                  cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    """``c|N> - alpha_N sqrt(N) |N-1>``: the non-cobosonic remainder."""
    a_n = alpha(spectrum, n)
    c = coboson_creation(spectrum, site).adjoint()
    lowered = apply(c, build_fock_state(spectrum, n, site, cross_species), cross_species)
    below = build_fock_state(spectrum, n - 1, site, cross_species)
    return lowered.add_scaled(-a_n * math.sqrt(n), below).prune()


def epsilon_norm_formula(spectrum: SchmidtSpectrum, n: int) -> float:
    """``1 - N chi_N/chi_{N-1} + (N-1) chi_{N+1}/chi_N``."""
    if not 1 <= n <= spectrum.d:
        raise ValueError(f"N={n} outside 1..{spectrum.d}")
    table = chi_table(spectrum, n + 1)
    if table[n - 1] == 0.0 or table[n] == 0.0:
        raise DegenerateSpectrumError(f"chi_{n - 1} or chi_{n} vanishes for rank {spectrum.rank}")
    return float(1.0 - n * table[n] / table[n - 1] + (n - 1) * table[n + 1] / table[n])


@dataclass(frozen=True)
class LadderReport:
    n: int
    chi_n: float
    chi_ratio: float
    alpha_n: float
    eps_norm_formula: float
    eps_norm_constructed: float | None
    bounds: tuple[float, float]

    @property
    def lower_ok(self) -> bool:
        return self.bounds[0] <= self.chi_ratio + 1e-12

    @property
    def upper_ok(self) -> bool:
        return self.chi_ratio <= self.bounds[1] + 1e-12


def chi_ratio_bounds(spectrum: SchmidtSpectrum, n: int, construct: bool = False) -> LadderReport:
    """``chi_{N+1}/chi_N`` against the purity bounds ``[1 - N P, 1 - P]``.

    With ``construct=True`` the epsilon state is also built explicitly and its
    squared norm reported next to the closed formula.
    """
    if not 1 <= n <= spectrum.d:
        raise ValueError(f"N={n} outside 1..{spectrum.d}")
    table = chi_table(spectrum, n + 1)
    if table[n] == 0.0:
        raise DegenerateSpectrumError(f"chi_{n} = 0 for rank {spectrum.rank}")
    p = purity(spectrum)
    constructed = None
    if construct:
        constructed = epsilon_state(spectrum, n).norm() ** 2
    return LadderReport(
        n=n,
        chi_n=float(table[n]),
        chi_ratio=float(table[n + 1] / table[n]),
        alpha_n=alpha(spectrum, n),
        eps_norm_formula=epsilon_norm_formula(spectrum, n),
        eps_norm_constructed=constructed,
        bounds=(1.0 - n * p, 1.0 - p),
    )
