"""Quantum computational wires: classification, compilation, coupling and exact checks."""
from .classifier import (
    ClassificationReport,
    NormalFormWire,
    Verdict,
    classify,
    cluster,
    cluster_tensor,
    equivalent,
    random_gauge,
    t_resource,
)
from .compiler import basis_action, byproduct_group, compensate, compile_su2, prepare, readout_povm, solve_phase_basis
from .mps import WireTensor, from_preparation_unitary, to_preparation_unitary, transfer_channel

__version__ = "0.1.0"
