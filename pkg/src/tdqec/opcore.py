"""Structured operator algebra over n-qubit computational bases.

Every operator in this package is of the canonical form

    amplitude * (X-string) * (diagonal indicator of basis states),

i.e. it flips a fixed subset of qubits on a membership-tested set of
computational basis states.  Basis states are plain integers: bit i of the
integer is the state of qubit i (qubit 0 = least significant bit, |0> = 0).
The all-zeros string is the logical |0_L> codeword.

Dense matrices (numpy) exist only as an oracle bridge for small n; all
production engines work on the structured form directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

DENSE_MAX_QUBITS = 12    # 2^12 x 2^12 complex — memory guard for the oracle bridge
SCAN_MAX_QUBITS = 15     # exhaustive basis scans
KL_MAX_QUBITS = 10
CHAIN_MAX_QUBITS = 63    # basis states fit a signed 64-bit integer
DEFAULT_TOL = 1e-9


class GuardError(RuntimeError):
    """A dimension, memory, or step-size guard was exceeded."""


def full_mask(n: int) -> int:
    return (1 << n) - 1


def weight(state: int) -> int:
    """Hamming weight (number of qubits in |1>)."""
    return state.bit_count()


def complement(state: int, n: int) -> int:
    """Flip every qubit: the partner of `state` in its syndrome pair."""
    return state ^ full_mask(n)


def coset_weight(state: int, n: int) -> int:
    """Distance to the nearest codeword, min(w, n - w)."""
    w = state.bit_count()
    return min(w, n - w)


def z_parity(state: int, z_mask: int) -> int:
    """0 for eigenvalue +1 of the Z-string `z_mask` on |state>, 1 for -1."""
    return (state & z_mask).bit_count() & 1


def majority_bit(state: int, n: int) -> int:
    """Majority vote over the qubits; n must be odd so ties cannot occur."""
    return 1 if 2 * state.bit_count() > n else 0


@dataclass(frozen=True)
class XString:
    """Tensor product of Pauli-X on the qubits set in `mask`; involutory."""

    n: int
    mask: int

    def __post_init__(self):
        if not 1 <= self.n <= CHAIN_MAX_QUBITS:
            raise ValueError(f"qubit count {self.n} outside [1, {CHAIN_MAX_QUBITS}]")
        if not 0 <= self.mask <= full_mask(self.n):
            raise ValueError("flip mask has bits outside the register")

    def apply(self, state: int) -> int:
        return state ^ self.mask

    @property
    def support_weight(self) -> int:
        return self.mask.bit_count()


class IndicatorSet:
    """Membership predicate over basis states; idempotent diagonal projector.

    Concrete realizations are either explicit (a stored state set) or symbolic
    (a rule such as "coset weight in [1, m] and qubit i erroneous").  Both must
    agree on every basis state — tested by exhaustive scan for small n.
    """

    n: int

    def contains(self, state: int) -> bool:
        raise NotImplementedError

    def __contains__(self, state: int) -> bool:
        return self.contains(state)

    def states(self) -> Iterator[int]:
        """All member states, ascending.  Guarded exhaustive scan by default."""
        if self.n > SCAN_MAX_QUBITS:
            raise GuardError(f"refusing exhaustive scan for n={self.n} > {SCAN_MAX_QUBITS}")
        return (s for s in range(1 << self.n) if self.contains(s))

    def to_explicit(self) -> "ExplicitIndicator":
        return ExplicitIndicator(self.n, frozenset(self.states()))


@dataclass(frozen=True)
class ExplicitIndicator(IndicatorSet):
    n: int
    members: frozenset

    def contains(self, state: int) -> bool:
        return state in self.members

    def states(self) -> Iterator[int]:
        return iter(sorted(self.members))


@dataclass(frozen=True)
class FullIndicator(IndicatorSet):
    n: int

    def contains(self, state: int) -> bool:
        return 0 <= state < (1 << self.n)


@dataclass(frozen=True)
class SyndromeIndicator(IndicatorSet):
    """States with fixed eigenvalues of a set of Z-string stabilizers."""

    n: int
    generators: tuple  # Z-string masks
    syndrome: tuple    # one bit per generator: 0 <-> eigenvalue +1

    def contains(self, state: int) -> bool:
        return all(z_parity(state, g) == s for g, s in zip(self.generators, self.syndrome))


@dataclass(frozen=True)
class CosetBandIndicator(IndicatorSet):
    """States whose coset weight lies in [min_weight, max_weight], optionally
    restricted by whether one qubit agrees with the majority vote.

    `qubit_erroneous=True` keeps states where `qubit` disagrees with the
    majority (an erroneous qubit); False keeps the agreeing ones.  n odd.
    """

    n: int
    min_weight: int
    max_weight: int
    qubit: Optional[int] = None
    qubit_erroneous: bool = True

    def contains(self, state: int) -> bool:
        c = coset_weight(state, self.n)
        if not self.min_weight <= c <= self.max_weight:
            return False
        if self.qubit is None:
            return True
        bit = (state >> self.qubit) & 1
        return (bit != majority_bit(state, self.n)) == self.qubit_erroneous


@dataclass(frozen=True)
class StructuredJump:
    """Jump operator L = amplitude * X(flip) * 1(domain).

    L†L is diagonal with entries amplitude² on the domain, so the operator
    maps basis states to basis states and admits O(1) application.
    amplitude = sqrt(rate); units sqrt(1/time).
    """

    amplitude: float
    flip: XString
    domain: IndicatorSet
    label: str

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude is a square root of a rate; must be >= 0")
        if self.flip.n != self.domain.n:
            raise ValueError("flip and domain act on different register sizes")

    @property
    def n(self) -> int:
        return self.flip.n

    @property
    def rate(self) -> float:
        return self.amplitude ** 2

    def apply(self, state: int):
        """(new_state, amplitude) if state is in the domain, else None."""
        if state >> self.n:
            raise ValueError(f"state {state} outside the {self.n}-qubit register")
        if self.domain.contains(state):
            return state ^ self.flip.mask, self.amplitude
        return None


def apply_structured(jump: StructuredJump, state: int):
    """Kernel of every engine: see StructuredJump.apply."""
    return jump.apply(state)


def projector_from_stabilizers(n: int, generators: Sequence[int], syndrome: Sequence[int]) -> SyndromeIndicator:
    """Indicator of the joint eigenspace of Z-string `generators` with signs
    (-1)^syndrome.  Generators must be independent over GF(2)."""
    gens = tuple(int(g) for g in generators)
    syn = tuple(int(s) & 1 for s in syndrome)
    if len(gens) != len(syn):
        raise ValueError("syndrome length must match the generator count")
    if _gf2_rank(gens) != len(gens):
        raise ValueError("dependent stabilizer generators")
    for g in gens:
        if not 0 < g <= full_mask(n):
            raise ValueError("generator mask outside the register")
    return SyndromeIndicator(n, gens, syn)


def _gf2_rank(masks: Iterable[int]) -> int:
    rank = 0
    rows = list(masks)
    for i in range(len(rows)):
        pivot = rows[i]
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        for j in range(i + 1, len(rows)):
            if rows[j] & low:
                rows[j] ^= pivot
    return rank


# ---------------------------------------------------------------------------
# Dense oracle bridge
# ---------------------------------------------------------------------------

def _check_dense_dim(n: int, limit: int = DENSE_MAX_QUBITS):
    if n > limit:
        raise GuardError(f"dense construction refused for n={n} > {limit}")


def indicator_vector(ind: IndicatorSet) -> np.ndarray:
    """0/1 diagonal of the projector realized by `ind`."""
    _check_dense_dim(ind.n)
    dim = 1 << ind.n
    v = np.zeros(dim)
    for s in range(dim):
        if ind.contains(s):
            v[s] = 1.0
    return v


def to_dense(jump: StructuredJump, n: Optional[int] = None) -> np.ndarray:
    """Matrix with entry `amplitude` at (s ^ flip.mask, s) for s in the domain."""
    if n is None:
        n = jump.n
    if n != jump.n:
        raise ValueError("dimension mismatch between jump and requested register")
    _check_dense_dim(n)
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for s in range(dim):
        if jump.domain.contains(s):
            out[s ^ jump.flip.mask, s] = jump.amplitude
    return out


def dense_xstring(n: int, mask: int) -> np.ndarray:
    """X-string built independently by Kronecker products of 2x2 Paulis."""
    _check_dense_dim(n)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye = np.eye(2)
    out = np.array([[1.0]])
    # qubit 0 is the least significant bit, i.e. the *last* Kronecker factor
    for q in reversed(range(n)):
        out = np.kron(out, x if (mask >> q) & 1 else eye)
    return out


def basis_state(n: int, s: int) -> np.ndarray:
    _check_dense_dim(n)
    v = np.zeros(1 << n, dtype=complex)
    v[s] = 1.0
    return v


def check_state_vector(psi: np.ndarray, tol: float = DEFAULT_TOL):
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError("state vector is not normalized")


def check_density_matrix(rho: np.ndarray, tol: float = DEFAULT_TOL):
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")


# ---------------------------------------------------------------------------
# Knill-Laflamme checks
# ---------------------------------------------------------------------------

def kl_check(codewords: Sequence[np.ndarray], errors: Sequence[np.ndarray], tol: float = DEFAULT_TOL):
    """Check P_C E_j† E_i P_C = alpha_ij P_C over the given error set.

    The zeroth-order error (the identity) is always part of the accumulated
    error family and is prepended implicitly; a logical operator therefore
    fails through its pairing with the identity.  Returns (alpha, ok) where
    alpha[i, j] is indexed over the *given* errors, extracted from the
    codeword diagonal blocks, and ok is true iff every deviation from
    alpha_ij * P_C is below tol over the extended set.
    """
    k = len(codewords)
    dim = codewords[0].shape[0]
    if dim > (1 << KL_MAX_QUBITS):
        raise GuardError(f"kl_check refused for dimension {dim}")
    basis = np.column_stack(codewords)
    gram = basis.conj().T @ basis
    if np.max(np.abs(gram - np.eye(k))) > tol:
        raise ValueError("codewords are not orthonormal")
    proj = basis @ basis.conj().T
    extended = [np.eye(dim)] + list(errors)
    m = len(extended)
    alpha_ext = np.zeros((m, m), dtype=complex)
    ok = True
    for i, j in itertools.product(range(m), repeat=2):
        block = proj @ extended[j].conj().T @ extended[i] @ proj
        # alpha from the codeword-subspace trace: tr(P M P) = alpha * k
        a = np.trace(block) / k
        alpha_ext[i, j] = a
        if np.max(np.abs(block - a * proj)) > tol:
            ok = False
    return alpha_ext[1:, 1:], ok


def kl_intersubspace_check(code, base_error: XString, probe_errors, tol: float = DEFAULT_TOL) -> bool:
    """Knill-Laflamme condition between error subspaces.

    With P = E_base P_C E_base† the projector onto the order-q subspace,
    checks P E_j† E_k P = delta_jk P for the probe pair (E_j, E_k), all
    unit-amplitude X-strings.  Requires q + p <= ell of the code: beyond that
    order nothing is asserted and a GuardError is raised.
    """
    n = code.n
    if n > KL_MAX_QUBITS:
        raise GuardError(f"kl_intersubspace_check refused for n={n}")
    ej, ek = probe_errors
    q = base_error.support_weight
    p = ej.support_weight
    if ek.support_weight != p:
        raise ValueError("probe errors must have equal order")
    if q + p > code.ell:
        raise GuardError(f"order guard: q+p={q + p} exceeds ell={code.ell}")
    dim = 1 << n
    pc = np.zeros(dim)
    pc[code.codeword0] = 1.0
    pc[code.codeword1] = 1.0
    # P = E P_C E† permutes the diagonal of P_C
    perm = np.arange(dim) ^ base_error.mask
    psub = pc[perm]
    x_probe = dense_xstring(n, ej.mask) @ dense_xstring(n, ek.mask)
    lhs = psub[:, None] * x_probe * psub[None, :]
    delta = 1.0 if ej.mask == ek.mask else 0.0
    return bool(np.max(np.abs(lhs - delta * np.diag(psub))) <= tol)
