"""Exact second-quantized simulation of composite-boson (fermion pair) protocols."""
from .coboson import SchmidtSpectrum, alpha, chi, coboson_creation, purity, schmidt_decompose
from .fock import CrossSpecies, ModeId, Site, Species, StateVector
from .kernels import BACKEND
from .operators import OperatorExpr, annihilation, apply, creation, matrix_on_sector
from .protocols import (ScenarioConfig, build_hamiltonian, ideal_bunching_analysis, independent_bs,
                        interacting_bs, nonlocal_bunching, verify_mode_maps)
from .rdm import one_particle_rdm, purity_of, two_particle_rdm
from .sector import Sector, enumerate_sector, evolve, fidelity

__all__ = [
    "BACKEND", "CrossSpecies", "ModeId", "OperatorExpr", "ScenarioConfig", "SchmidtSpectrum", "Sector",
    "Site", "Species", "StateVector", "alpha", "annihilation", "apply", "build_hamiltonian", "chi",
    "coboson_creation", "creation", "enumerate_sector", "evolve", "fidelity", "ideal_bunching_analysis",
    "independent_bs", "interacting_bs", "matrix_on_sector", "nonlocal_bunching", "one_particle_rdm",
    "purity", "purity_of", "schmidt_decompose", "two_particle_rdm", "verify_mode_maps",
]
