"""Simulation of cavity-photon-mediated cat states of a trapped condensate."""
from .errors import *  # noqa: F401,F403
from .hilbert import (
    Basis,
    CollectiveSpin,
    FockMode,
    Operator,
    Qubit,
    StateVector,
    atomic_coherent_state,
    coherent_state,
    default_cutoff,
    dicke_state,
    fock_state,
    tensor,
)
from .hamiltonians import ModelParams, derive_params, dispersive_eigen, exact_doublet, full_hamiltonian, jc_hamiltonian
from .evolution import propagate, propagate_adiabatic, propagate_schedule, Segment
from .protocols import analytic_cat, analytic_compass, cat_protocol, compass_protocol, detection_protocol, detection_run
from .analysis import cat_lifetime, fidelity, hp_convergence, husimi, wigner
from .config import ScenarioConfig, parse_config
from .runner import RunReport, run_scenario

__version__ = "0.1.0"
