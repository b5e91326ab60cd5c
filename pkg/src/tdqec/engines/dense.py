"""Dense Lindblad oracle: direct integration of the full master equation.

The slowest, dumbest tier — its only job is to certify the reduced engines.
The right-hand side is evaluated through a sparse superoperator acting on
vec(rho); no structure of the scheme beyond the jump list itself is used.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..codes import JumpSet
from ..opcore import GuardError
from .records import LogicalState, PHASE_STATE, TimeSeries

DENSE_ENGINE_MAX_QUBITS = 7
CONV_TOL = 1e-8
TRACE_TOL = 1e-8
EIG_FLOOR = -1e-8


def lindblad_superoperator(jumps: JumpSet) -> sp.csr_matrix:
    """Sparse matrix S with d vec(rho)/dt = S vec(rho), C-order flattening."""
    n = jumps.n
    if n > DENSE_ENGINE_MAX_QUBITS:
        raise GuardError(f"dense Lindblad engine refused for n={n} > {DENSE_ENGINE_MAX_QUBITS}")
    dim = 1 << n
    rows, cols, vals = [], [], []
    damp = np.zeros(dim)
    for jump in jumps.all_jumps():
        rate = jump.rate
        if rate == 0.0:
            continue
        dom = np.fromiter(jump.domain.states(), dtype=np.int64)
        damp[dom] += rate
        tgt = dom ^ jump.flip.mask
        # L rho L†: (s, s') -> (s ^ m, s' ^ m) for s, s' in the domain
        rows.append((tgt[:, None] * dim + tgt[None, :]).ravel())
        cols.append((dom[:, None] * dim + dom[None, :]).ravel())
        vals.append(np.full(len(dom) ** 2, rate))
    # -1/2 {L†L, rho}: diagonal in vec space
    idx = np.arange(dim * dim)
    rows.append(idx)
    cols.append(idx)
    vals.append(-0.5 * (damp[:, None] + damp[None, :]).ravel())
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim * dim, dim * dim),
    )
    return mat.tocsr()


def _rk4_pass(superop, v0: np.ndarray, t_grid: np.ndarray, h_target: float) -> list:
    out = []
    v = v0
    t_prev = 0.0
    for t in t_grid:
        span = t - t_prev
        if span > 0:
            steps = max(1, int(np.ceil(span / h_target)))
            h = span / steps
            for _ in range(steps):
                k1 = superop @ v
                k2 = superop @ (v + 0.5 * h * k1)
                k3 = superop @ (v + 0.5 * h * k2)
                k4 = superop @ (v + h * k3)
                v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(v.copy())
        t_prev = t
    return out


def _trace_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False).sum())


def lindblad_dense_evolve(
    rho0: np.ndarray,
    jumps: JumpSet,
    t_grid,
    *,
    tol: float = CONV_TOL,
    max_refinements: int = 12,
) -> list:
    """Density matrices at the grid times.

    Integrates with classical RK4 and halves the step until two successive
    refinements agree below `tol` in trace norm at every grid point; trace
    preservation and positivity are asserted on the accepted solution.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dim = rho0.shape[0]
    superop = lindblad_superoperator(jumps)
    max_rate = float(np.max(-superop.diagonal().real)) if superop.nnz else 0.0
    if max_rate == 0.0:
        return [rho0.copy() for _ in t_grid]
    h = 0.5 / max_rate
    v0 = rho0.astype(complex).ravel()
    prev = _rk4_pass(superop, v0, t_grid, h)
    for _ in range(max_refinements):
        h *= 0.5
        cur = _rk4_pass(superop, v0, t_grid, h)
        worst = max(
            _trace_norm((a - b).reshape(dim, dim)) for a, b in zip(prev, cur)
        )
        if worst < tol:
            rhos = [v.reshape(dim, dim) for v in cur]
            for rho in rhos:
                if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
                    raise GuardError("trace drifted beyond tolerance")
                if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < EIG_FLOOR:
                    raise GuardError("positivity violated beyond tolerance")
            return rhos
        prev = cur
    raise GuardError("step-size refinement failed to converge")


def decode_fidelity(rho: np.ndarray, code, logical_state: LogicalState = PHASE_STATE) -> float:
    """Fidelity with the initial logical state after a majority-vote decode.

    The decode is the full recovery channel (syndrome projection followed by
    the transversal correction), evaluated exactly on rho.
    """
    n = code.n
    dim = 1 << n
    states = np.arange(dim)
    dec_bit = np.array([code.decode_bit(int(s)) for s in states])
    amp = np.where(dec_bit == 0, logical_state.alpha, logical_state.beta)
    partner = states ^ code.codeword1
    diag = rho[states, states]
    anti = rho[states, partner]
    f = np.sum(amp.conj() * diag * amp) + np.sum(amp.conj() * anti * amp[partner])
    return float(f.real)


def infidelity_from_density(rhos, code, logical_state: LogicalState = PHASE_STATE, t_grid=None) -> TimeSeries:
    values = [1.0 - decode_fidelity(r, code, logical_state) for r in rhos]
    return TimeSeries(
        np.asarray(t_grid, dtype=float),
        np.clip(values, 0.0, 1.0),
        None,
        meta={"engine": "dense", "n": code.n},
    )


def logical_density(code, logical_state: LogicalState = PHASE_STATE) -> np.ndarray:
    dim = 1 << code.n
    psi = np.zeros(dim, dtype=complex)
    psi[code.codeword0] = logical_state.alpha
    psi[code.codeword1] = logical_state.beta
    return np.outer(psi, psi.conj())
