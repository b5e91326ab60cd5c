"""Dissipative error correction of bit-flip repetition codes.

Structured jump-operator schemes (lookup table, trickle down, trapped-ion
effective), a validated hierarchy of dynamics engines (dense Lindblad, MCWF,
Gillespie, exact weight chain), and the analysis pipeline for logical error
rates, thresholds, and suppression factors.
"""

__version__ = "0.1.0"

from .codes import (
    JumpSet,
    RepetitionCode,
    build_lookup_table,
    build_repetition,
    build_three_qubit,
    build_trickle_down,
    build_uncorrected,
    n_proj_count,
    n_proj_lower_bound,
)
from .ion import IonParams, Tone, ToneSet, build_ion_jump_set, kappa_eff, resonant_g
from .opcore import GuardError, IndicatorSet, StructuredJump, XString

__all__ = [
    "GuardError",
    "IndicatorSet",
    "IonParams",
    "JumpSet",
    "RepetitionCode",
    "StructuredJump",
    "Tone",
    "ToneSet",
    "XString",
    "__version__",
    "build_ion_jump_set",
    "build_lookup_table",
    "build_repetition",
    "build_three_qubit",
    "build_trickle_down",
    "build_uncorrected",
    "kappa_eff",
    "n_proj_count",
    "n_proj_lower_bound",
    "resonant_g",
]
