"""Interference during quantum state transfer through finite spin chains."""

__version__ = "0.1.0"

from .hamiltonians import ChainSpec, Model, build_full_space, build_single_excitation
from .dynamics import amplitudes, decompose, evolve
from .channel import PropagatorTensor, reduced_propagator_conserving, reduced_propagator_numeric
from .measures import (
    fidelity,
    fidelity_numeric,
    interference,
    interference_unitary,
    reduced_interference_closed,
)

__all__ = [
    "ChainSpec",
    "Model",
    "build_full_space",
    "build_single_excitation",
    "decompose",
    "evolve",
    "amplitudes",
    "PropagatorTensor",
    "reduced_propagator_conserving",
    "reduced_propagator_numeric",
    "interference",
    "interference_unitary",
    "reduced_interference_closed",
    "fidelity",
    "fidelity_numeric",
]
