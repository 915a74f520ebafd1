"""Hybrid eigensolver pairing a diagonal sign circuit with a neural amplitude network."""

from .ansatz import Circuit, GateOp, SignAnsatz, build_hea, build_qaoa, build_sign_ansatz
from .driver import ConfigError, Eigensolver, RunConfig, RunTrace, compute_metrics, run, run_maxcut
from .estimator import EnergyEstimate, MeasurementPlan, build_measurement_plan
from .neural import AmplitudeModel
from .pauli import Graph, Hamiltonian, PauliString, brute_force_maxcut, build_model, ground_state
from .qsim import Gate, NoiseSpec, Statevector

__version__ = "0.1.0"

__all__ = [
    "AmplitudeModel",
    "Circuit",
    "ConfigError",
    "Eigensolver",
    "EnergyEstimate",
    "Gate",
    "GateOp",
    "Graph",
    "Hamiltonian",
    "MeasurementPlan",
    "NoiseSpec",
    "PauliString",
    "RunConfig",
    "RunTrace",
    "SignAnsatz",
    "Statevector",
    "brute_force_maxcut",
    "build_hea",
    "build_measurement_plan",
    "build_model",
    "build_qaoa",
    "build_sign_ansatz",
    "compute_metrics",
    "ground_state",
    "run",
    "run_maxcut",
]
