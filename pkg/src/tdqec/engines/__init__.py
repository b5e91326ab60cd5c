"""Four-tier dynamics engines consuming a JumpSet.

Tiers, slowest to fastest:

* dense   — full Lindblad density-matrix integration (oracle, n <= 7);
* mcwf    — Monte-Carlo-wave-function trajectories (fixed-step jump sampling);
* gillespie — exact-time classical CTMC sampling on bitstrings;
* chain   — exact transient of the (n+1)-state error-weight chain.

All four agree on the logical infidelity; the exact tiers within integration
tolerance, the stochastic tiers within Monte Carlo error.
"""

from __future__ import annotations

import numpy as np

from .chain import (
    WeightChainGenerator,
    weight_chain_generator,
    weight_chain_transient,
)
from .dense import (
    decode_fidelity,
    infidelity_from_density,
    lindblad_dense_evolve,
    lindblad_superoperator,
    logical_density,
)
from .records import (
    CosetPairState,
    LogicalState,
    PHASE_STATE,
    SimConfig,
    TimeSeries,
    TrajectoryRecord,
    trajectory_generator,
)
from .stochastic import (
    RateTable,
    build_rate_table,
    ctmc_bitstring_gillespie,
    gillespie_ensemble,
    mcwf_ensemble,
    mcwf_evolve,
)

__all__ = [
    "CosetPairState",
    "LogicalState",
    "PHASE_STATE",
    "RateTable",
    "SimConfig",
    "TimeSeries",
    "TrajectoryRecord",
    "WeightChainGenerator",
    "build_rate_table",
    "ctmc_bitstring_gillespie",
    "decode_fidelity",
    "gillespie_ensemble",
    "infidelity_from_density",
    "infidelity_series",
    "lindblad_dense_evolve",
    "lindblad_superoperator",
    "logical_density",
    "mcwf_ensemble",
    "mcwf_evolve",
    "trajectory_generator",
    "weight_chain_generator",
    "weight_chain_transient",
]


def infidelity_series(output, code, logical_state: LogicalState = PHASE_STATE, t_grid=None):
    """Logical infidelity of an engine output.

    Density-matrix lists go through the exact decode-then-fidelity channel;
    chain/ensemble TimeSeries are already misdecode probabilities scaled by
    the state's misdecode weight; a TrajectoryRecord yields its 0/1 flags
    scaled the same way.
    """
    if isinstance(output, TimeSeries):
        return output
    if isinstance(output, TrajectoryRecord):
        flags = np.asarray(output.decode_flags, dtype=float)
        return TimeSeries(
            np.asarray(t_grid, dtype=float),
            flags * logical_state.misdecode_weight,
            None,
            meta={"engine": output.engine, "n": code.n},
        )
    return infidelity_from_density(output, code, logical_state, t_grid)
