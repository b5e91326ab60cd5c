"""Exact error-weight birth-death chain of a permutation-symmetric scheme.

All shipped schemes treat the qubits symmetrically, so the populations of the
2^n basis states collapse onto the Hamming weight w (relative to the initial
codeword).  The (n+1)x(n+1) generator is integrated by uniformization, which
keeps every intermediate quantity nonnegative and supports chains with
thousands of states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from ..codes import JumpSet, LookupTable, ThreeQubit, TrickleDown, Uncorrected
from ..ion import IonEffective
from .records import LogicalState, PHASE_STATE, TimeSeries

UNIFORMIZATION_TOL = 1e-12
MAX_TERMS_PER_STEP = 2_000_000   # step-split fallback beyond this Poisson mean


@dataclass
class WeightChainGenerator:
    q_matrix: np.ndarray     # rows sum to zero; q[w, w'] = rate w -> w'
    n: int
    ell: int
    scheme_name: str

    def __post_init__(self):
        q = self.q_matrix
        off = q - np.diag(np.diag(q))
        if np.any(off < -1e-15):
            raise ValueError("negative off-diagonal rate")
        if np.max(np.abs(q.sum(axis=1))) > 1e-9 * max(1.0, np.max(np.abs(q))):
            raise ValueError("generator rows must sum to zero")


def weight_chain_generator(code_or_jumps, jumps: JumpSet = None) -> WeightChainGenerator:
    """Exact weight-chain rates induced by a scheme.

    Error jumps contribute w -> w+1 at (n-w)*Ge and w -> w-1 at w*Ge for every
    scheme.  Correction contributions depend on the scheme; schemes without a
    permutation-symmetric reduction are rejected.
    """
    if jumps is None:
        jumps = code_or_jumps
    code = jumps.code
    n = code.n
    ge = jumps.gamma_e
    gc = jumps.gamma_c
    q = np.zeros((n + 1, n + 1))
    for w in range(n + 1):
        if w < n:
            q[w, w + 1] += (n - w) * ge
        if w > 0:
            q[w, w - 1] += w * ge

    scheme = jumps.scheme
    if isinstance(scheme, LookupTable):
        for w in range(1, code.ell + 1):
            q[w, 0] += gc
        for w in range(code.ell + 1, n):
            q[w, n] += gc
    elif isinstance(scheme, (TrickleDown, ThreeQubit)):
        m = scheme.m if isinstance(scheme, TrickleDown) else 1
        for w in range(1, m + 1):
            q[w, w - 1] += w * gc
        for w in range(n - m, n):
            q[w, w + 1] += (n - w) * gc
    elif isinstance(scheme, IonEffective):
        # desired flips lower w below the decode boundary and raise it above;
        # both compose to w -> w-1 at w*k(w) and w -> w+1 at (n-w)*k(n-w)
        for w in range(1, n + 1):
            q[w, w - 1] += w * scheme.summed_rate(w)
        for w in range(n):
            q[w, w + 1] += (n - w) * scheme.summed_rate(n - w)
    elif isinstance(scheme, Uncorrected):
        pass
    else:
        raise ValueError(f"scheme {scheme!r} has no permutation-symmetric reduction")

    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return WeightChainGenerator(q, n, code.ell, getattr(scheme, "name", "?"))


def _uniformized_step(p: np.ndarray, pt_op, gamma: float, dt: float, tol: float) -> np.ndarray:
    """p <- p exp(Q dt) with Q = gamma (P - I); truncation error below tol.

    The truncated Poisson tail mass is assigned to the last computed iterate,
    which keeps the result a probability vector.
    """
    m = gamma * dt
    if m <= 0.0:
        return p.copy()
    if m > MAX_TERMS_PER_STEP:
        # step-split fallback for extreme rate ratios
        splits = int(np.ceil(m / MAX_TERMS_PER_STEP))
        out = p
        for _ in range(splits):
            out = _uniformized_step(out, pt_op, gamma, dt / splits, tol / splits)
        return out
    k_hi = int(poisson.isf(tol, m)) + 1
    weights = poisson.pmf(np.arange(k_hi + 1), m)
    acc = weights[0] * p
    v = p
    for k in range(1, k_hi + 1):
        v = pt_op(v)
        acc = acc + weights[k] * v
    acc = acc + max(0.0, 1.0 - weights.sum()) * v
    return acc


def weight_chain_transient(
    gen: WeightChainGenerator,
    p0: np.ndarray = None,
    t_grid=None,
    *,
    logical_state: LogicalState = PHASE_STATE,
    tol: float = UNIFORMIZATION_TOL,
) -> TimeSeries:
    """Misdecode probability sum_{w > ell} p_w(t), scaled by the logical
    state's misdecode weight (1 for the default phase state)."""
    n = gen.n
    if p0 is None:
        p0 = np.zeros(n + 1)
        p0[0] = 1.0
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (n + 1,) or np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValueError("p0 must be a distribution over weights 0..n")
    t_grid = np.asarray(t_grid, dtype=float)

    q = gen.q_matrix
    gamma = float(np.max(-np.diag(q)))
    if gamma == 0.0:
        pt_op = lambda v: v
    elif n + 1 > 200:
        pt = sp.csr_matrix(np.eye(n + 1) + q.T / gamma)
        pt_op = lambda v: pt @ v
    else:
        pt = np.eye(n + 1) + q.T / gamma
        pt_op = lambda v: pt @ v

    factor = logical_state.misdecode_weight
    values = np.empty(len(t_grid))
    p = p0
    t_prev = 0.0
    for i, t in enumerate(t_grid):
        p = _uniformized_step(p, pt_op, gamma, t - t_prev, tol)
        t_prev = t
        values[i] = factor * p[gen.ell + 1:].sum()
    return TimeSeries(
        t_grid,
        values,
        None,
        meta={"engine": "chain", "scheme": gen.scheme_name, "n": n},
    )
