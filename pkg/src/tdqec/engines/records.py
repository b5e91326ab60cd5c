"""Shared engine inputs and outputs: run configuration, trajectory records,
time series, and the deterministic per-trajectory RNG splitting."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DT_RATE_CAP = 0.1   # first-order jump-probability validity: dt * total_rate <= 0.1


@dataclass(frozen=True)
class LogicalState:
    """alpha |0_L> + beta |1_L>; the default is the equal-weight phase state."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("logical amplitudes must be normalized")

    @property
    def misdecode_weight(self) -> float:
        """1 - |<psi|X_L|psi>|^2: infidelity contributed per misdecoded pair."""
        overlap = 2.0 * (self.alpha.conjugate() * self.beta).real
        return 1.0 - overlap ** 2


PHASE_STATE = LogicalState(1 / math.sqrt(2), 1j / math.sqrt(2))


@dataclass(frozen=True)
class CosetPairState:
    """alpha |s> + beta |s_bar>: the closed family of all engine states.

    `state` is the branch that descends from the |0_L>-side codeword, so the
    misdecode indicator is simply "majority vote of `state` flipped".
    """

    state: int
    logical: LogicalState = PHASE_STATE


@dataclass
class SimConfig:
    """Engine run configuration.

    Times are in the same (absolute) unit as the jump rates; the CLI defaults
    to gamma_c = 1 so that t is measured in 1/gamma_c.
    """

    t_grid: np.ndarray
    n_traj: int = 1
    dt: Optional[float] = None          # MCWF step; None derives it from the cap
    dt_rate_cap: float = DT_RATE_CAP
    master_seed: int = 0
    engine: str = "chain"
    t_max: Optional[float] = None

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if self.t_grid.ndim != 1 or len(self.t_grid) == 0:
            raise ValueError("t_grid must be a nonempty 1-d array")
        if np.any(np.diff(self.t_grid) < 0) or self.t_grid[0] < 0:
            raise ValueError("t_grid must be sorted and nonnegative")
        if self.t_max is None:
            self.t_max = float(self.t_grid[-1])
        if self.t_grid[-1] > self.t_max + 1e-12:
            raise ValueError("t_grid exceeds t_max")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not 0 < self.dt_rate_cap <= DT_RATE_CAP + 1e-12:
            raise ValueError(f"dt_rate_cap must be in (0, {DT_RATE_CAP}]")


def trajectory_generator(master_seed: int, index: int) -> np.random.Generator:
    """Per-trajectory RNG stream.

    Splitting function (documented contract): stream i is
    PCG64(SeedSequence(master_seed, spawn_key=(i,))).  Every engine consumes
    draws from stream i in a fixed positional order, so single-trajectory
    replays reproduce ensemble members exactly.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class TrajectoryRecord:
    master_seed: int
    traj_index: int
    initial_state: int
    events: list                 # (time, label, flip_mask), time-ordered
    path: list                   # basis state at every t_grid point
    decode_flags: list           # misdecode indicator at every t_grid point
    engine: str = ""

    def replay_states(self, t_grid) -> list:
        """States obtained by replaying events; must equal `path`."""
        out = []
        k = 0
        s = self.initial_state
        for t in t_grid:
            while k < len(self.events) and self.events[k][0] <= t:
                s ^= self.events[k][2]
                k += 1
            out.append(s)
        return out


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if np.any(self.stderr < 0):
                raise ValueError("standard errors must be nonnegative")
        if self.values.shape != self.times.shape:
            raise ValueError("values and times must have equal length")
        if self.meta.get("kind", "probability") == "probability":
            if np.any(self.values < -1e-9) or np.any(self.values > 1 + 1e-9):
                raise ValueError("probability series outside [0, 1]")

    def csv_rows(self):
        yield "time,infidelity,stderr"
        err = self.stderr if self.stderr is not None else np.full_like(self.values, np.nan)
        for t, v, e in zip(self.times, self.values, err):
            etxt = "" if np.isnan(e) else repr(float(e))
            yield f"{float(t)!r},{float(v)!r},{etxt}"
