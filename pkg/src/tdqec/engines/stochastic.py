"""Stochastic trajectory engines: fixed-step MCWF and exact-time Gillespie.

Every jump operator maps basis states to basis states and has a diagonal
L†L, so a coset-pair state alpha|s> + beta|s_bar> stays a coset pair with
constant |alpha|, |beta| along any trajectory.  The pair engines therefore
track only the bitstring s of the |0_L>-descended branch; the dense-vector
MCWF path exists as an oracle for that reduction.

RNG contract: trajectory i draws from PCG64(SeedSequence(master_seed,
spawn_key=(i,))).  The MCWF engines consume exactly two uniforms per step
(jump test, channel choice) and Gillespie two per event, so ensemble members
replay bit-identically as single trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codes import JumpSet
from ..opcore import GuardError
from .records import (
    CosetPairState,
    LogicalState,
    PHASE_STATE,
    SimConfig,
    TimeSeries,
    TrajectoryRecord,
    trajectory_generator,
)

TABLE_MAX_QUBITS = 16


def _popcount_table(n: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros(dim, dtype=np.int64)
    for i in range(1, dim):
        out[i] = out[i >> 1] + (i & 1)
    return out


@dataclass
class RateTable:
    """Per-basis-state channel table for vectorized engines (n <= 16)."""

    n: int
    total: np.ndarray      # (dim,)
    cum: np.ndarray        # (dim, C) inclusive cumulative rates, padded
    masks: np.ndarray      # (dim, C) flip masks
    nch: np.ndarray        # (dim,) real channel count
    popcount: np.ndarray   # (dim,)

    def channel_of(self, state: int, r: float) -> int:
        row = self.cum[state]
        ch = int(np.searchsorted(row, r, side="right"))
        return min(ch, int(self.nch[state]) - 1)


def build_rate_table(jumps: JumpSet) -> RateTable:
    n = jumps.n
    if n > TABLE_MAX_QUBITS:
        raise GuardError(f"rate table refused for n={n} > {TABLE_MAX_QUBITS}")
    dim = 1 << n
    per_state = [jumps.applicable(s) for s in range(dim)]
    width = max(len(ch) for ch in per_state)
    cum = np.zeros((dim, width))
    masks = np.zeros((dim, width), dtype=np.int64)
    total = np.zeros(dim)
    nch = np.zeros(dim, dtype=np.int64)
    for s, channels in enumerate(per_state):
        rates = np.array([r for r, _, _ in channels])
        acc = np.cumsum(rates)
        k = len(channels)
        cum[s, :k] = acc
        cum[s, k:] = acc[-1] if k else 0.0
        masks[s, :k] = [m for _, m, _ in channels]
        total[s] = acc[-1] if k else 0.0
        nch[s] = k
    return RateTable(n, total, cum, masks, nch, _popcount_table(n))


def mcwf_step_plan(t_grid: np.ndarray, max_rate: float, config: SimConfig):
    """Common fixed-step schedule: ((h_i, k_i) per grid interval).

    Enforces the first-order validity guard dt * max_rate <= dt_rate_cap.
    """
    if config.dt is not None:
        dt = config.dt
        if max_rate * dt > config.dt_rate_cap * (1 + 1e-9):
            raise GuardError(
                f"dt guard violated: dt*rate = {max_rate * dt:.3g} > {config.dt_rate_cap}"
            )
    else:
        dt = config.dt_rate_cap / max_rate if max_rate > 0 else np.inf
    plan = []
    t_prev = 0.0
    for t in t_grid:
        span = t - t_prev
        if span <= 0:
            plan.append((0.0, 0))
        else:
            k = max(1, int(math.ceil(span / dt - 1e-9)))
            plan.append((span / k, k))
        t_prev = t
    return plan


def _initial_bitstring(initial, jumps: JumpSet):
    if initial is None:
        initial = CosetPairState(jumps.code.codeword0)
    if not isinstance(initial, CosetPairState):
        raise TypeError("pair engines need a CosetPairState initial state")
    return initial


# ---------------------------------------------------------------------------
# MCWF
# ---------------------------------------------------------------------------

def mcwf_evolve(psi0, jumps: JumpSet, config: SimConfig, traj_index: int = 0,
                *, pair_check: bool = False) -> TrajectoryRecord:
    """One Monte-Carlo-wave-function trajectory.

    psi0 is either a CosetPairState (bit-level fast path, any n) or a dense
    state vector (n <= 12 oracle path).  Per step, a jump fires with
    probability dt * <L†L> summed over channels; otherwise the diagonal
    non-Hermitian damping is applied and the state renormalized.  With
    pair_check the dense path asserts after every step that the vector stays
    a coset pair alpha|s> + beta|s_bar> with constant |alpha|, |beta|.
    """
    if isinstance(psi0, np.ndarray):
        return _mcwf_dense(psi0, jumps, config, traj_index, pair_check)
    initial = _initial_bitstring(psi0, jumps)
    rng = trajectory_generator(config.master_seed, traj_index)
    plan = mcwf_step_plan(config.t_grid, jumps.max_total_rate(), config)
    code = jumps.code
    init_bit = code.decode_bit(initial.state)

    s = initial.state
    t = 0.0
    events = []
    path = []
    flags = []
    for (h, k), t_target in zip(plan, config.t_grid):
        for _ in range(k):
            u_jump, u_ch = rng.random(2)
            channels = jumps.applicable(s)
            total = sum(r for r, _, _ in channels)
            if u_jump < h * total:
                r = u_ch * total
                acc = 0.0
                for rate, mask, label in channels:
                    acc += rate
                    if r < acc:
                        s ^= mask
                        events.append((t + h, label, mask))
                        break
            # no-jump branch: diagonal damping cancels in the renormalized
            # coset pair, so the bitstring is unchanged
            t += h
        t = t_target
        path.append(s)
        flags.append(code.decode_bit(s) != init_bit)
    return TrajectoryRecord(
        config.master_seed, traj_index, initial.state, events, path, flags, engine="mcwf"
    )


def _mcwf_dense(psi0: np.ndarray, jumps: JumpSet, config: SimConfig, traj_index: int,
                pair_check: bool = False) -> TrajectoryRecord:
    n = jumps.n
    if n > 12:
        raise GuardError("dense MCWF refused beyond n=12")
    dim = 1 << n
    if psi0.shape != (dim,):
        raise ValueError("state vector has wrong dimension")
    rng = trajectory_generator(config.master_seed, traj_index)
    plan = mcwf_step_plan(config.t_grid, jumps.max_total_rate(), config)
    code = jumps.code

    ops = []
    damp = np.zeros(dim)
    for j in jumps.all_jumps():
        indicator = np.zeros(dim)
        for s in j.domain.states():
            indicator[s] = 1.0
        ops.append((j.rate, j.flip.mask, indicator, j.label))
        damp += j.rate * indicator

    psi = psi0.astype(complex)
    psi = psi / np.linalg.norm(psi)
    s0 = int(np.argmax(np.abs(psi)))
    acc_mask = 0
    init_bit = code.decode_bit(s0)
    states = np.arange(dim)
    pair_mags = np.sort(np.abs(psi))[-2:]
    full = dim - 1

    def check_pair(vec):
        mags = np.abs(vec)
        support = np.nonzero(mags > 1e-9)[0]
        if len(support) > 2 or (len(support) == 2 and support[0] ^ support[1] != full):
            raise RuntimeError("state left the coset-pair family")
        if not np.allclose(np.sort(mags)[-2:], pair_mags, atol=1e-9):
            raise RuntimeError("coset-pair amplitude magnitudes drifted")

    t = 0.0
    events = []
    path = []
    flags = []
    for (h, k), t_target in zip(plan, config.t_grid):
        for _ in range(k):
            u_jump, u_ch = rng.random(2)
            probs = np.array([h * rate * float(np.sum(indicator * np.abs(psi) ** 2))
                              for rate, _, indicator, _ in ops])
            dp = probs.sum()
            if u_jump < dp:
                r = u_ch * dp
                ch = int(np.searchsorted(np.cumsum(probs), r, side="right"))
                ch = min(ch, len(ops) - 1)
                rate, mask, indicator, label = ops[ch]
                psi = (indicator * psi)[states ^ mask]
                psi = psi / np.linalg.norm(psi)
                acc_mask ^= mask
                events.append((t + h, label, mask))
            else:
                psi = psi * np.exp(-0.5 * h * damp)
                psi = psi / np.linalg.norm(psi)
            if pair_check:
                check_pair(psi)
            t += h
        t = t_target
        path.append(s0 ^ acc_mask)
        flags.append(code.decode_bit(s0 ^ acc_mask) != init_bit)
    return TrajectoryRecord(
        config.master_seed, traj_index, s0, events, path, flags, engine="mcwf-dense"
    )


def mcwf_ensemble(
    jumps: JumpSet,
    config: SimConfig,
    initial: CosetPairState = None,
    *,
    count_jumps: bool = False,
    rng_block: int = 512,
):
    """Vectorized MCWF over config.n_traj coset-pair trajectories.

    Returns the infidelity TimeSeries (Monte Carlo mean with standard
    errors); with count_jumps=True also returns the per-trajectory total
    jump counts (used for jump-statistics tests).
    """
    initial = _initial_bitstring(initial, jumps)
    table = build_rate_table(jumps)
    plan = mcwf_step_plan(config.t_grid, float(table.total.max()), config)
    code = jumps.code
    init_bit = code.decode_bit(initial.state)
    n_traj = config.n_traj

    streams = [trajectory_generator(config.master_seed, i) for i in range(n_traj)]
    s_arr = np.full(n_traj, initial.state, dtype=np.int64)
    counts = np.zeros(n_traj, dtype=np.int64)
    flags = np.zeros((len(config.t_grid), n_traj), dtype=bool)

    half = code.n / 2.0
    buf = np.empty((n_traj, rng_block, 2))

    def misdecoded(states):
        return (table.popcount[states] > half) != bool(init_bit)

    for gi, (h, k) in enumerate(plan):
        done = 0
        while done < k:
            chunk = min(rng_block, k - done)
            for i, g in enumerate(streams):
                buf[i, :chunk] = g.random((chunk, 2))
            for step in range(chunk):
                tot = table.total[s_arr]
                fire = buf[:, step, 0] < h * tot
                if np.any(fire):
                    idx = s_arr[fire]
                    r = buf[fire, step, 1] * tot[fire]
                    ch = np.sum(table.cum[idx] <= r[:, None], axis=1)
                    np.minimum(ch, table.nch[idx] - 1, out=ch)
                    s_arr[fire] ^= table.masks[idx, ch]
                    counts[fire] += 1
            done += chunk
        flags[gi] = misdecoded(s_arr)

    weight = initial.logical.misdecode_weight
    p = flags.mean(axis=1)
    stderr = np.sqrt(p * (1.0 - p) / n_traj) * weight
    series = TimeSeries(
        config.t_grid,
        p * weight,
        stderr,
        meta={"engine": "mcwf", "n": code.n, "n_traj": n_traj},
    )
    if count_jumps:
        return series, counts
    return series


# ---------------------------------------------------------------------------
# Gillespie
# ---------------------------------------------------------------------------

def ctmc_bitstring_gillespie(
    s0, jumps: JumpSet, config: SimConfig, traj_index: int = 0
) -> TrajectoryRecord:
    """Exact-time continuous-time Markov chain sampling of one trajectory.

    All L†L are diagonal and all jumps permute basis states, so populations
    follow a classical CTMC: exponential waiting times at the total applicable
    rate, next channel proportional to its rate.
    """
    if isinstance(s0, CosetPairState):
        initial = s0
    else:
        initial = CosetPairState(int(s0))
    rng = trajectory_generator(config.master_seed, traj_index)
    code = jumps.code
    init_bit = code.decode_bit(initial.state)

    s = initial.state
    t = 0.0
    events = []
    while True:
        channels = jumps.applicable(s)
        total = sum(r for r, _, _ in channels)
        if total <= 0.0:
            break
        wait = rng.exponential(1.0 / total)
        u_ch = rng.random()
        if t + wait > config.t_max:
            break
        t += wait
        r = u_ch * total
        acc = 0.0
        for rate, mask, label in channels:
            acc += rate
            if r < acc:
                s ^= mask
                events.append((t, label, mask))
                break
    rec = TrajectoryRecord(
        config.master_seed, traj_index, initial.state, events, [], [], engine="gillespie"
    )
    rec.path = rec.replay_states(config.t_grid)
    rec.decode_flags = [code.decode_bit(x) != init_bit for x in rec.path]
    return rec


def gillespie_ensemble(
    jumps: JumpSet, config: SimConfig, initial: CosetPairState = None
) -> TimeSeries:
    initial = _initial_bitstring(initial, jumps)
    code = jumps.code
    init_bit = code.decode_bit(initial.state)
    n_traj = config.n_traj
    flags = np.zeros((len(config.t_grid), n_traj), dtype=bool)
    use_table = code.n <= TABLE_MAX_QUBITS
    table = build_rate_table(jumps) if use_table else None

    t_grid = config.t_grid
    for i in range(n_traj):
        rng = trajectory_generator(config.master_seed, i)
        s = initial.state
        t = 0.0
        gi = 0
        while gi < len(t_grid):
            if use_table:
                total = float(table.total[s])
            else:
                total = jumps.total_rate(s)
            wait = rng.exponential(1.0 / total) if total > 0 else np.inf
            u_ch = rng.random() if total > 0 else 0.0
            t_next = t + wait
            while gi < len(t_grid) and t_grid[gi] < t_next:
                flags[gi, i] = code.decode_bit(s) != init_bit
                gi += 1
            if t_next > config.t_max or not np.isfinite(t_next):
                break
            t = t_next
            if use_table:
                s ^= int(table.masks[s, table.channel_of(s, u_ch * total)])
            else:
                r = u_ch * total
                acc = 0.0
                for rate, mask, _ in jumps.applicable(s):
                    acc += rate
                    if r < acc:
                        s ^= mask
                        break
        while gi < len(t_grid):
            flags[gi, i] = code.decode_bit(s) != init_bit
            gi += 1

    weight = initial.logical.misdecode_weight
    p = flags.mean(axis=1)
    stderr = np.sqrt(p * (1.0 - p) / n_traj) * weight
    return TimeSeries(
        config.t_grid,
        p * weight,
        stderr,
        meta={"engine": "gillespie", "n": code.n, "n_traj": n_traj},
    )
