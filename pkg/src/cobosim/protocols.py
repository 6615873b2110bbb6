"""Beam-splitter and bunching scenarios for two-fermion cobosons."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .coboson import DegenerateSpectrumError, SchmidtSpectrum, chi, coboson_creation, purity
from .fock import CrossSpecies, Site, Species, StateVector, site_mask, species_mask
from .operators import OperatorExpr, annihilation, apply, creation, is_hermitian, matrix_on_sector, sum_expr
from .rdm import one_particle_rdm, purity_of, two_particle_rdm
from .sector import enumerate_sector, evolve, propagator, sector_of

L, R = Site.L, Site.R
A, B = Species.A, Species.B


class HamiltonianKind(str, enum.Enum):
    BS_SINGLE = "BS_single"
    BS_PAIR_A = "BS_pair_A"
    BS_PAIR_B = "BS_pair_B"
    INT = "INT"
    NONLOCAL_A = "NONLOCAL_A"
    NONLOCAL_B = "NONLOCAL_B"


def _hop(species, i: int) -> OperatorExpr:
    return (creation(species, i, L) * annihilation(species, i, R)
            + creation(species, i, R) * annihilation(species, i, L))


def _nonlocal(s, d: int) -> OperatorExpr:
    def x(i, site):
        return creation(s, i, site)

    def y(i, site):
        return annihilation(s, i, site)

    terms = []
    for i in range(1, d + 1):
        for j in range(1, i):
            terms += [
                x(i, L) * x(j, L) * y(j, R) * y(i, L),
                x(i, R) * x(j, R) * y(i, R) * y(j, L),
                x(i, L) * x(j, R) * y(j, L) * y(i, L),
                x(j, L) * x(i, R) * y(j, R) * y(i, R),
            ]
    return sum_expr(terms)


def build_hamiltonian(kind, d: int, gamma: float | None = None) -> OperatorExpr:
    kind = HamiltonianKind(kind)
    if kind is HamiltonianKind.BS_SINGLE:
        return _hop(A, 1)
    if kind is HamiltonianKind.BS_PAIR_A:
        return sum_expr(_hop(A, i) for i in range(1, d + 1))
    if kind is HamiltonianKind.BS_PAIR_B:
        return sum_expr(_hop(B, i) for i in range(1, d + 1))
    if kind is HamiltonianKind.INT:
        if gamma is None:
            raise ValueError("INT Hamiltonian needs gamma")
        return sum_expr(
            -gamma * (creation(A, i, X) * annihilation(A, i, X) * creation(B, i, X) * annihilation(B, i, X))
            for X in Site for i in range(1, d + 1))
    if kind is HamiltonianKind.NONLOCAL_A:
        return _nonlocal(A, d)
    return _nonlocal(B, d)


def site_rotation_hamiltonian(species, h: np.ndarray, d: int) -> OperatorExpr:
    """One-body generator ``sum_i sum_XY h[X, Y] x_{i,X}^dagger x_{i,Y}`` acting on the site only."""
    return sum_expr(h[X, Y] * (creation(species, i, Site(X)) * annihilation(species, i, Site(Y)))
                    for i in range(1, d + 1) for X in range(2) for Y in range(2))


@dataclass
class ScenarioConfig:
    d: int
    spectrum: SchmidtSpectrum | None = None
    gamma: float = 0.0
    time_grid: tuple[float, ...] | None = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.spectrum is None:
            self.spectrum = SchmidtSpectrum.uniform(self.d)
        if self.spectrum.d != self.d:
            raise ValueError(f"spectrum has {self.spectrum.d} coefficients, expected d={self.d}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.time_grid is not None:
            grid = np.asarray(self.time_grid, dtype=float)
            if grid.size == 0 or np.any(np.diff(grid) <= 0):
                raise ValueError("time grid must be nonempty and increasing")
            self.time_grid = tuple(grid.tolist())

    def default_time_grid(self) -> np.ndarray:
        if self.gamma == 0:
            return np.array([math.pi / 4])
        n = max(2001, int(math.ceil(100 * self.gamma ** 2)))
        return np.linspace(0.0, 2 * math.pi * self.gamma, n)


def _coboson_pair_state(spectrum, sites, cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    psi = StateVector.vacuum(spectrum.d)
    for site in reversed(sites):
        psi = apply(coboson_creation(spectrum, site), psi, cross_species)
    return psi


def _one_particle_purity(psi: StateVector, species=A) -> float:
    return purity_of(one_particle_rdm(psi, species))


@dataclass
class IndependentBSReport:
    fidelity: float
    split_port_probability: float
    purity_before: float
    purity_after: float
    unitarity_defect: float
    final_state: StateVector = field(repr=False)


def independent_bs_target(spectrum: SchmidtSpectrum) -> StateVector:
    """Each constituent split independently: ``sum_i sqrt(lam_i)/2 (aL - i aR)(bL - i bR)|0>``."""
    d = spectrum.d
    op = OperatorExpr()
    for i, lam in enumerate(spectrum.lambdas, start=1):
        a_out = creation(A, i, L) - 1j * creation(A, i, R)
        b_out = creation(B, i, L) - 1j * creation(B, i, R)
        op = op + (math.sqrt(lam) / 2) * (a_out * b_out)
    return apply(op, StateVector.vacuum(d))


def split_port_probability(psi: StateVector) -> float:
    """Weight of configurations where no a-particle shares a site with a b-particle."""
    d = psi.d
    lmask, rmask = site_mask(L, d), site_mask(R, d)
    ma, mb = species_mask(A, d), species_mask(B, d)
    total = 0.0
    for key, amp in psi:
        a_sites = {s for s, m in ((L, lmask), (R, rmask)) if key & ma & m}
        b_sites = {s for s, m in ((L, lmask), (R, rmask)) if key & mb & m}
        if not a_sites & b_sites:
            total += abs(amp) ** 2
    return total / psi.norm() ** 2


def independent_bs(cfg: ScenarioConfig, t: float = math.pi / 4) -> IndependentBSReport:
    d = cfg.d
    psi0 = apply(coboson_creation(cfg.spectrum, L), StateVector.vacuum(d))
    h = build_hamiltonian("BS_pair_A", d) + build_hamiltonian("BS_pair_B", d)
    result = evolve(h, t, psi0)
    final = result.final
    target = independent_bs_target(cfg.spectrum)
    return IndependentBSReport(
        fidelity=abs(target.inner(final)) ** 2,
        split_port_probability=split_port_probability(final),
        purity_before=_one_particle_purity(psi0),
        purity_after=_one_particle_purity(final),
        unitarity_defect=result.unitarity_defect,
        final_state=final,
    )


@dataclass
class InteractingBSReport:
    gamma: float
    best_time: float
    collective_fidelity: float
    target_fidelity: float
    max_target_fidelity: float
    relative_phase: float
    purity_at_best: float
    unitarity_defect: float
    final_state: StateVector = field(repr=False)


def interacting_bs(cfg: ScenarioConfig, refine: bool = True) -> InteractingBSReport:
    """Scan the time grid for the most coboson-like beam splitting.

    ``collective_fidelity`` is ``max_phi |<(c_L + e^{i phi} c_R)/sqrt2 | psi(t)>|^2``,
    i.e. the fidelity up to global phase with the relative phase between the
    two ports left free; ``relative_phase`` is the phase that attains it.
    ``target_fidelity`` fixes the relative sign to ``-1``.
    """
    d = cfg.d
    vac = StateVector.vacuum(d)
    left = apply(coboson_creation(cfg.spectrum, L), vac)
    right = apply(coboson_creation(cfg.spectrum, R), vac)
    h = (build_hamiltonian("BS_pair_A", d) + build_hamiltonian("BS_pair_B", d)
         + build_hamiltonian("INT", d, cfg.gamma))
    sector = sector_of(left)
    prop = propagator(h, sector)
    v0 = sector.to_array(left)
    vl, vr = sector.to_array(left).conj(), sector.to_array(right).conj()
    times = np.asarray(cfg.time_grid if cfg.time_grid is not None else cfg.default_time_grid())

    def overlaps(states):
        return states @ vl, states @ vr

    states = prop.evolve_many(v0, times)
    a_l, a_r = overlaps(states)
    collective = (np.abs(a_l) + np.abs(a_r)) ** 2 / 2
    literal = np.abs(a_l - a_r) ** 2 / 2
    k = int(np.argmax(collective))
    best_t = float(times[k])
    if refine and times.size > 1:
        lo, hi = times[max(k - 1, 0)], times[min(k + 1, times.size - 1)]

        def loss(t):
            s = prop.evolve_array(v0, t)
            return -(abs(s @ vl) + abs(s @ vr)) ** 2 / 2

        res = minimize_scalar(loss, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if -res.fun > collective[k]:
            best_t = float(res.x)

    final = prop.evolve(left, best_t)
    best_vec = sector.to_array(final.final)
    bl, br = best_vec @ vl, best_vec @ vr
    return InteractingBSReport(
        gamma=cfg.gamma,
        best_time=best_t,
        collective_fidelity=float((abs(bl) + abs(br)) ** 2 / 2),
        target_fidelity=float(abs(bl - br) ** 2 / 2),
        max_target_fidelity=float(literal.max()),
        relative_phase=cmath.phase(br / bl) if abs(bl) > 0 else float("nan"),
        purity_at_best=_one_particle_purity(final.final),
        unitarity_defect=final.unitarity_defect,
        final_state=final.final,
    )


def bunched_state(spectrum: SchmidtSpectrum, cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    """``(c_L^dagger^2 + c_R^dagger^2) / (2 sqrt(chi_2)) |0>``."""
    if spectrum.rank < 2:
        raise DegenerateSpectrumError("bunched state needs Schmidt rank >= 2")
    vac = StateVector.vacuum(spectrum.d)
    cl, cr = coboson_creation(spectrum, L), coboson_creation(spectrum, R)
    unnorm = apply(cl * cl + cr * cr, vac, cross_species)
    return unnorm.scale(1.0 / (2 * math.sqrt(chi(spectrum, 2))))


def residual_state(spectrum: SchmidtSpectrum, cross_species=CrossSpecies.ANTICOMMUTE) -> StateVector:
    """Normalized ``sum_k lam_k a_kL^+ b_kL^+ a_kR^+ b_kR^+ |0>``."""
    op = sum_expr(
        lam * (creation(A, k, L) * creation(B, k, L) * creation(A, k, R) * creation(B, k, R))
        for k, lam in enumerate(spectrum.lambdas, start=1))
    return apply(op, StateVector.vacuum(spectrum.d), cross_species).normalize()


@dataclass
class IdealBunchingReport:
    one_particle_purity_initial: float
    one_particle_purity_final: float
    two_particle_purity_initial: float
    two_particle_purity_final: float
    one_particle_rdm_difference: float
    norm_initial: float
    norm_final: float


def ideal_bunching_analysis(cfg: ScenarioConfig) -> IdealBunchingReport:
    if cfg.spectrum.rank < 2:
        raise DegenerateSpectrumError("chi_2 = 0 for a rank-1 spectrum")
    psi_i = _coboson_pair_state(cfg.spectrum, (L, R))
    psi_f = bunched_state(cfg.spectrum)
    rho_i, rho_f = one_particle_rdm(psi_i, A), one_particle_rdm(psi_f, A)
    return IdealBunchingReport(
        one_particle_purity_initial=purity_of(rho_i),
        one_particle_purity_final=purity_of(rho_f),
        two_particle_purity_initial=purity_of(two_particle_rdm(psi_i, A)),
        two_particle_purity_final=purity_of(two_particle_rdm(psi_f, A)),
        one_particle_rdm_difference=float(np.abs(rho_i.entries - rho_f.entries).max()),
        norm_initial=psi_i.norm(),
        norm_final=psi_f.norm(),
    )


@dataclass
class BunchingOutcome:
    amplitude_psi_f: complex
    amplitude_gamma: complex
    success_probability: float
    residual_probability: float
    post_selected_state: StateVector = field(repr=False)
    bunched_probability: float = 0.0
    predicted_success: float = 0.0
    unitarity_defect: float = 0.0

    @property
    def completeness_defect(self) -> float:
        return abs(self.success_probability + self.residual_probability - 1.0)


def bunched_projection(psi: StateVector) -> StateVector:
    """Component with every particle on the same site."""
    d = psi.d
    lmask, rmask = site_mask(L, d), site_mask(R, d)
    return StateVector(d, {k: v for k, v in psi if not (k & lmask and k & rmask)})


def nonlocal_bunching(cfg: ScenarioConfig, cross_species=CrossSpecies.ANTICOMMUTE,
                      t: float = math.pi / 2) -> BunchingOutcome:
    spectrum = cfg.spectrum
    if spectrum.rank < 2:
        raise DegenerateSpectrumError("nonlocal bunching needs Schmidt rank >= 2")
    cross_species = CrossSpecies(cross_species)
    psi_i = _coboson_pair_state(spectrum, (L, R), cross_species)
    h = build_hamiltonian("NONLOCAL_A", cfg.d) + build_hamiltonian("NONLOCAL_B", cfg.d)
    result = evolve(h, t, psi_i, cross_species)
    final = result.final
    amp_f = bunched_state(spectrum, cross_species).inner(final)
    amp_g = residual_state(spectrum, cross_species).inner(final)
    outcome = BunchingOutcome(
        amplitude_psi_f=amp_f,
        amplitude_gamma=amp_g,
        success_probability=abs(amp_f) ** 2,
        residual_probability=abs(amp_g) ** 2,
        post_selected_state=bunched_projection(final).normalize(),
        bunched_probability=bunched_projection(final).norm() ** 2,
        predicted_success=1.0 - purity(spectrum),
        unitarity_defect=result.unitarity_defect,
    )
    if outcome.completeness_defect > cfg.tolerance:
        raise RuntimeError(f"final state has weight outside psi_f and gamma "
                           f"(defect {outcome.completeness_defect:.3g}); Hamiltonian is inconsistent")
    return outcome


def _pair(x, y, d) -> StateVector:
    """``x^dagger y^dagger |0>`` for a-modes given as ``(internal, site)``."""
    op = creation(A, *x) * creation(A, *y)
    return apply(op, StateVector.vacuum(d))


@dataclass
class ModeMapReport:
    d: int
    deviations: dict[str, float]
    checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.deviations.values())


def verify_mode_maps(d: int, tol: float = 1e-9, t: float = math.pi / 2) -> ModeMapReport:
    """Evolve every two-a-particle basis state under NONLOCAL_A and compare with the expected images."""
    if d < 2:
        raise ValueError("mode maps need d >= 2")
    h = build_hamiltonian("NONLOCAL_A", d)
    cases: list[tuple[str, StateVector, StateVector]] = []
    for i in range(1, d + 1):
        cases.append(("diagonal", _pair((i, L), (i, R), d), _pair((i, L), (i, R), d)))
        for j in range(1, i):
            cases += [
                ("iL jR -> -i iL jL", _pair((i, L), (j, R), d), -1j * _pair((i, L), (j, L), d)),
                ("jL iR -> -i iR jR", _pair((j, L), (i, R), d), -1j * _pair((i, R), (j, R), d)),
                ("iL jL -> -i iL jR", _pair((i, L), (j, L), d), -1j * _pair((i, L), (j, R), d)),
                ("iR jR -> -i jL iR", _pair((i, R), (j, R), d), -1j * _pair((j, L), (i, R), d)),
            ]
    deviations: dict[str, float] = {}
    for label, start, expected in cases:
        out = evolve(h, t, start).final
        dev = out.add_scaled(-1.0, expected).norm()
        deviations[label] = max(deviations.get(label, 0.0), dev)
    return ModeMapReport(d, deviations, len(cases), tol)


@dataclass
class InvariantReport:
    d: int
    hermiticity_defect: float
    commutator_norm: float
    unitarity_defect: float
    sequential_defect: float


def nonlocal_invariants(d: int) -> InvariantReport:
    """Hermiticity, commutation and unitarity checks for NONLOCAL_A/B on the (2, 2) sector."""
    sector = enumerate_sector(d, 2, 2)
    ha, hb = build_hamiltonian("NONLOCAL_A", d), build_hamiltonian("NONLOCAL_B", d)
    herm = max(is_hermitian(ha, sector)[1], is_hermitian(hb, sector)[1])
    ma = matrix_on_sector(ha, sector, sparse=True)
    mb = matrix_on_sector(hb, sector, sparse=True)
    comm = ma @ mb - mb @ ma
    comm_norm = float(np.sqrt((abs(comm).power(2)).sum())) if comm.nnz else 0.0
    psi = _coboson_pair_state(SchmidtSpectrum.uniform(d), (L, R))
    joint = evolve(ha + hb, math.pi / 2, psi)
    seq = evolve(hb, math.pi / 2, evolve(ha, math.pi / 2, psi).final)
    return InvariantReport(
        d=d,
        hermiticity_defect=herm,
        commutator_norm=comm_norm,
        unitarity_defect=max(joint.unitarity_defect, seq.unitarity_defect),
        sequential_defect=joint.final.add_scaled(-1.0, seq.final).norm(),
    )
