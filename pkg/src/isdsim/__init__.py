"""Microscopic simulation of instantaneous spectral diffusion on single-ion
qubits in rare-earth-doped crystals."""

__version__ = "0.1.0"

from .bloch import (
    TARGET_AFTER_NOT,
    ErrorSourceEffect,
    bloch_vector,
    decompose_effect,
    error_from_bloch,
    gate_error,
    qbies_compose,
    reduce_to_qubit,
)
from .evolve import apply_gate, evolve, gate_sequence
from .levels import LevelScheme, load_level_scheme
from .pulses import PulseEnvelope, TwoColorGate, gaussian_envelope
from .system import CompositeSystem, IonModel, LindbladParams

__all__ = [
    "TARGET_AFTER_NOT",
    "CompositeSystem",
    "ErrorSourceEffect",
    "IonModel",
    "LevelScheme",
    "LindbladParams",
    "PulseEnvelope",
    "TwoColorGate",
    "apply_gate",
    "bloch_vector",
    "decompose_effect",
    "error_from_bloch",
    "evolve",
    "gaussian_envelope",
    "gate_error",
    "gate_sequence",
    "load_level_scheme",
    "qbies_compose",
    "reduce_to_qubit",
]
