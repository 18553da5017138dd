"""Drift-aware VQE simulation: Pauli Hamiltonians, a statevector engine,
synthetic noise-drift traces, SPSA, and controllers that detect drift with
re-executed reference circuits and skip compromised iterations."""

from .drift import (
    DriftEpisode,
    DriftTrace,
    EpisodeRate,
    NoiseConfig,
    apply_drift,
    generate_trace,
    load_trace,
    save_trace,
    zero_trace,
)
from .engine import (
    AnsatzSpec,
    Circuit,
    Gate,
    build_ansatz,
    hamiltonian_energy,
    observable_expectation,
    simulate,
)
from .pauli import (
    Hamiltonian,
    PauliString,
    PauliTerm,
    SubsetPartition,
    expectation_from_counts,
    ground_state_energy,
    load_hamiltonian,
    parse_hamiltonian,
    partition_prime_minor,
)
from .runtime import (
    ControllerConfig,
    ControllerKind,
    Decision,
    DetectionResult,
    ReferenceRecord,
    ReferenceWindow,
    RunRecord,
    multi_reference_detect,
    run_experiment,
    single_reference_detect,
)
from .spsa import SpsaConfig, SpsaOptimizer

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec",
    "Circuit",
    "ControllerConfig",
    "ControllerKind",
    "Decision",
    "DetectionResult",
    "DriftEpisode",
    "DriftTrace",
    "EpisodeRate",
    "Gate",
    "Hamiltonian",
    "NoiseConfig",
    "PauliString",
    "PauliTerm",
    "ReferenceRecord",
    "ReferenceWindow",
    "RunRecord",
    "SpsaConfig",
    "SpsaOptimizer",
    "SubsetPartition",
    "apply_drift",
    "build_ansatz",
    "expectation_from_counts",
    "generate_trace",
    "ground_state_energy",
    "hamiltonian_energy",
    "load_hamiltonian",
    "load_trace",
    "multi_reference_detect",
    "observable_expectation",
    "parse_hamiltonian",
    "partition_prime_minor",
    "run_experiment",
    "save_trace",
    "simulate",
    "single_reference_detect",
    "zero_trace",
    "__version__",
]
