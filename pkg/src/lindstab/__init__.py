"""Constructive synthesis and certification of globally attractive Lindblad generators."""

from .core import BlockSplit, DensityMatrix, LindbladPair, diag_state, fidelity, trace_distance, validate_density
from .dynamics import Liouvillian, apply_generator, build_liouvillian, integrate, spectral_gap, stationary_states
from .feedback import FeedbackSetup, demo_setup, fme_generator, practical_stabilize, synth_feedback
from .synthesis import (
    SynthesisConfig,
    extend_to_support,
    solve_HP,
    synth_H,
    synth_L,
    synth_stepwise,
    synthesize,
)
from .tridiag import TridiagonalReal, eigensolve
from .verify import Certificate, certify

__all__ = [
    "BlockSplit",
    "Certificate",
    "DensityMatrix",
    "FeedbackSetup",
    "LindbladPair",
    "Liouvillian",
    "SynthesisConfig",
    "TridiagonalReal",
    "apply_generator",
    "build_liouvillian",
    "certify",
    "demo_setup",
    "diag_state",
    "eigensolve",
    "extend_to_support",
    "fidelity",
    "fme_generator",
    "integrate",
    "practical_stabilize",
    "solve_HP",
    "spectral_gap",
    "stationary_states",
    "synth_H",
    "synth_L",
    "synth_feedback",
    "synth_stepwise",
    "synthesize",
    "trace_distance",
    "validate_density",
]
__version__ = "0.1.0"
