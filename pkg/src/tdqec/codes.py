"""Repetition-code construction and correction-scheme builders.

Three families of engineered correction jumps are provided:

* lookup table — one jump per nontrivial syndrome, mapping its two-state
  subspace straight to the codespace (2^(n-1) - 1 operators);
* trickle down — n jumps, one per qubit, each lowering the coset weight of
  every state (up to a truncation order m) in which that qubit disagrees
  with the majority vote;
* three-qubit special case — the classic parity-conditioned flips, equal to
  both schemes above at n = 3.

The trapped-ion effective scheme lives in `tdqec.ion` and reuses the JumpSet
container defined here.
"""

from __future__ import annotations

import math
from collections import abc
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .opcore import (
    CHAIN_MAX_QUBITS,
    CosetBandIndicator,
    ExplicitIndicator,
    FullIndicator,
    GuardError,
    StructuredJump,
    SyndromeIndicator,
    XString,
    complement,
    coset_weight,
    full_mask,
    majority_bit,
    to_dense,
    weight,
)

LOOKUP_MAX_QUBITS = 25           # symbolic/lazy construction guard
LOOKUP_EXPLICIT_MAX_QUBITS = 15  # materialized list of 2^(n-1)-1 jumps


@dataclass(frozen=True)
class RepetitionCode:
    """[[n, 1, n]] bit-flip repetition code; corrects X errors up to (n-1)/2."""

    n: int

    def __post_init__(self):
        if self.n % 2 == 0 or not 3 <= self.n <= CHAIN_MAX_QUBITS:
            raise ValueError(f"repetition code needs odd n in [3, {CHAIN_MAX_QUBITS}], got {self.n}")

    @property
    def ell(self) -> int:
        return (self.n - 1) // 2

    @property
    def codeword0(self) -> int:
        return 0

    @property
    def codeword1(self) -> int:
        return full_mask(self.n)

    @property
    def logical_x_mask(self) -> int:
        return full_mask(self.n)

    def stabilizer_generators(self) -> list:
        """Adjacent-pair Z parities Z_i Z_{i+1} as bit masks."""
        return [0b11 << i for i in range(self.n - 1)]

    def syndrome(self, state: int) -> tuple:
        return tuple((state ^ (state >> 1)) >> i & 1 for i in range(self.n - 1))

    def decode_bit(self, state: int) -> int:
        """Majority vote; exact ties cannot occur for odd n."""
        return majority_bit(state, self.n)

    def decode_mask(self, state: int) -> int:
        """Transversal flip taking `state` to its nearest codeword."""
        return state if self.decode_bit(state) == 0 else complement(state, self.n)

    def coset_weight(self, state: int) -> int:
        return coset_weight(state, self.n)

    def misdecodes(self, state: int, initial_bit: int) -> bool:
        """True when majority decoding no longer returns the initial codeword."""
        return self.decode_bit(state) != initial_bit


def build_repetition(n: int) -> RepetitionCode:
    return RepetitionCode(n)


# ---------------------------------------------------------------------------
# Scheme tags
# ---------------------------------------------------------------------------
#
# Each tag knows how to enumerate the correction channels that act on a given
# basis state.  This is the O(1) fast path used by the trajectory engines; it
# must agree with a naive scan over the materialized jump list (tested).

@dataclass(frozen=True)
class LookupTable:
    name: str = field(default="lookup", init=False)

    def correction_channels(self, code: RepetitionCode, gamma_c: float, state: int):
        if state == code.codeword0 or state == code.codeword1:
            return []
        rep = min(state, complement(state, code.n))
        return [(math.sqrt(gamma_c) ** 2, code.decode_mask(state), f"lookup rep={rep}")]

    def max_correction_rate(self, code: RepetitionCode, gamma_c: float) -> float:
        return gamma_c


@dataclass(frozen=True)
class TrickleDown:
    m: int
    name: str = field(default="trickle", init=False)

    def correction_channels(self, code: RepetitionCode, gamma_c: float, state: int):
        c = code.coset_weight(state)
        if not 1 <= c <= self.m:
            return []
        maj = code.decode_bit(state)
        rate = math.sqrt(gamma_c) ** 2      # bit-identical to the stored amplitude squared
        out = []
        for i in range(code.n):
            if (state >> i) & 1 != maj:
                out.append((rate, 1 << i, f"trickle i={i}"))
        return out

    def max_correction_rate(self, code: RepetitionCode, gamma_c: float) -> float:
        return self.m * gamma_c


@dataclass(frozen=True)
class ThreeQubit:
    name: str = field(default="three-qubit", init=False)

    def correction_channels(self, code: RepetitionCode, gamma_c: float, state: int):
        if code.coset_weight(state) != 1:
            return []
        maj = code.decode_bit(state)
        i = next(i for i in range(3) if (state >> i) & 1 != maj)
        return [(math.sqrt(gamma_c) ** 2, 1 << i, f"three-qubit i={i}")]

    def max_correction_rate(self, code: RepetitionCode, gamma_c: float) -> float:
        return gamma_c


@dataclass(frozen=True)
class Uncorrected:
    name: str = field(default="none", init=False)

    def correction_channels(self, code: RepetitionCode, gamma_c: float, state: int):
        return []

    def max_correction_rate(self, code: RepetitionCode, gamma_c: float) -> float:
        return 0.0


# ---------------------------------------------------------------------------
# JumpSet
# ---------------------------------------------------------------------------

def error_jumps(code: RepetitionCode, gamma_e: float) -> tuple:
    """The n bit-flip noise jumps sqrt(gamma_e) X_i with full domain."""
    amp = math.sqrt(gamma_e)
    dom = FullIndicator(code.n)
    return tuple(
        StructuredJump(amp, XString(code.n, 1 << i), dom, f"error i={i}")
        for i in range(code.n)
    )


@dataclass(frozen=True)
class JumpSet:
    """A correction scheme bundled with the bit-flip noise it competes against."""

    code: RepetitionCode
    corrections: Sequence[StructuredJump]
    errors: tuple
    scheme: object
    gamma_c: float
    gamma_e: float

    def __post_init__(self):
        if self.gamma_c < 0 or self.gamma_e < 0:
            raise ValueError("rates must be nonnegative")
        if len(self.errors) != self.code.n:
            raise ValueError("exactly one error jump per qubit is required")
        if not isinstance(self.corrections, _LazyLookupCorrections):
            labels = [j.label for j in self.corrections] + [j.label for j in self.errors]
            if len(set(labels)) != len(labels):
                raise ValueError("jump labels must be unique within a JumpSet")

    @property
    def n(self) -> int:
        return self.code.n

    def all_jumps(self):
        yield from self.corrections
        yield from self.errors

    def applicable(self, state: int):
        """(rate, flip_mask, label) for every channel acting on `state`.

        Scheme-aware O(n) path; agrees with `applicable_scan` on all states.
        """
        out = self.scheme.correction_channels(self.code, self.gamma_c, state)
        ge = math.sqrt(self.gamma_e) ** 2   # bit-identical to the stored amplitude squared
        out.extend((ge, 1 << i, f"error i={i}") for i in range(self.code.n))
        return out

    def applicable_scan(self, state: int):
        """Naive oracle: test every materialized jump's domain."""
        out = []
        for j in self.all_jumps():
            hit = j.apply(state)
            if hit is not None:
                out.append((j.rate, j.flip.mask, j.label))
        return out

    def total_rate(self, state: int) -> float:
        return sum(r for r, _, _ in self.applicable(state))

    def max_total_rate(self) -> float:
        return self.code.n * self.gamma_e + self.scheme.max_correction_rate(self.code, self.gamma_c)


class _LazyLookupCorrections(abc.Sequence):
    """The 2^(n-1)-1 lookup-table jumps, materialized one at a time.

    Pair representatives are the states with qubit n-1 in |0>; representative
    b <-> index b-1 (b = 0 is the codespace pair and carries no jump).
    """

    def __init__(self, code: RepetitionCode, gamma_c: float):
        self._code = code
        self._amp = math.sqrt(gamma_c)

    def __len__(self) -> int:
        return (1 << (self._code.n - 1)) - 1

    def __getitem__(self, k: int) -> StructuredJump:
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        return _lookup_jump(self._code, self._amp, k + 1)


def _lookup_jump(code: RepetitionCode, amplitude: float, rep: int) -> StructuredJump:
    n = code.n
    partner = complement(rep, n)
    mask = rep if weight(rep) <= code.ell else partner
    domain = ExplicitIndicator(n, frozenset((rep, partner)))
    return StructuredJump(amplitude, XString(n, mask), domain, f"lookup rep={rep}")


def build_lookup_table(code: RepetitionCode, gamma_c: float, *, gamma_e: float = 0.0) -> JumpSet:
    """One jump per nontrivial syndrome; flip = majority-decode correction."""
    if code.n > LOOKUP_MAX_QUBITS:
        raise GuardError(f"lookup table refused for n={code.n} > {LOOKUP_MAX_QUBITS}")
    if code.n <= LOOKUP_EXPLICIT_MAX_QUBITS:
        amp = math.sqrt(gamma_c)
        corrections = tuple(
            _lookup_jump(code, amp, rep) for rep in range(1, 1 << (code.n - 1))
        )
    else:
        corrections = _LazyLookupCorrections(code, gamma_c)
    return JumpSet(code, corrections, error_jumps(code, gamma_e), LookupTable(), gamma_c, gamma_e)


def build_trickle_down(code: RepetitionCode, gamma_c: float, m: int, *, gamma_e: float = 0.0) -> JumpSet:
    """n jumps; jump i lowers the coset weight by one wherever qubit i is
    erroneous and the coset weight is in [1, m]."""
    if not 1 <= m <= code.ell:
        raise ValueError(f"truncation order m={m} outside [1, {code.ell}]")
    amp = math.sqrt(gamma_c)
    corrections = tuple(
        StructuredJump(
            amp,
            XString(code.n, 1 << i),
            CosetBandIndicator(code.n, 1, m, qubit=i, qubit_erroneous=True),
            f"trickle i={i}",
        )
        for i in range(code.n)
    )
    return JumpSet(code, corrections, error_jumps(code, gamma_e), TrickleDown(m), gamma_c, gamma_e)


def build_three_qubit(gamma_c: float, *, gamma_e: float = 0.0) -> JumpSet:
    """sqrt(Gc) X_i (1 - Z_i Z_j)/2 (1 - Z_i Z_l)/2 for i in {0, 1, 2}."""
    code = RepetitionCode(3)
    amp = math.sqrt(gamma_c)
    corrections = []
    for i in range(3):
        j, l = (q for q in range(3) if q != i)
        gens = ((1 << i) | (1 << j), (1 << i) | (1 << l))
        domain = SyndromeIndicator(3, gens, (1, 1))
        corrections.append(
            StructuredJump(amp, XString(3, 1 << i), domain, f"three-qubit i={i}")
        )
    return JumpSet(code, tuple(corrections), error_jumps(code, gamma_e), ThreeQubit(), gamma_c, gamma_e)


def build_uncorrected(code: RepetitionCode, *, gamma_e: float = 0.0) -> JumpSet:
    return JumpSet(code, (), error_jumps(code, gamma_e), Uncorrected(), 0.0, gamma_e)


# ---------------------------------------------------------------------------
# Projector counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectorCount:
    l_size: int      # number of weight-1 error operators
    ell: int
    count: int
    bound: Optional[float]   # None where the bound is undefined (ell = 1)


def n_proj_count(l_size: int, ell: int) -> int:
    """Projectors per trickle-down jump: sum_{j=1..ell} C(l_size-1, j-1)."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return sum(math.comb(l_size - 1, j - 1) for j in range(1, ell + 1))


def n_proj_lower_bound(l_size: int, ell: int) -> float:
    """Entropy lower bound, valid for ell/l_size < 1/2; undefined at ell = 1."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell / l_size >= 0.5:
        raise ValueError("bound requires ell/l_size < 1/2")
    if ell == 1:
        raise ValueError("bound undefined at ell=1 (division by zero)")
    r = 1.0 - (ell - 1) / (l_size - 1)
    denom = math.sqrt(8.0 * (ell - 1) * r)
    return 2.0 ** (4.0 * (ell - 1) * r) / denom


def projector_count(l_size: int, ell: int) -> ProjectorCount:
    try:
        bound = n_proj_lower_bound(l_size, ell)
    except ValueError:
        bound = None
    return ProjectorCount(l_size, ell, n_proj_count(l_size, ell), bound)


def count_distinct_projectors(jumpset: JumpSet, qubit: int) -> int:
    """Distinct syndrome-pair subspaces inside one trickle-down jump domain.

    Brute-force oracle for n_proj_count: enumerates the domain of the jump for
    `qubit` and groups states into complement pairs.
    """
    n = jumpset.n
    jump = next(j for j in jumpset.corrections if j.label == f"trickle i={qubit}")
    reps = set()
    for s in jump.domain.states():
        reps.add(min(s, complement(s, n)))
    return len(reps)


# ---------------------------------------------------------------------------
# Projector relation of the effective-operator rewriting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectorRelationResult:
    """Dense evaluation of the flip/projector rewriting identity.

    `literal_holds` follows the printed relation verbatim, which equates a
    flipping operator with a diagonal one; `adopted_holds` is the corrected
    reading (the erroneous-qubit-restricted flip placed on both sides), which
    the builders rely on.  `mirrored_holds` is the same identity with the
    roles of |0> and |1> interchanged.
    """

    n: int
    qubit: int
    order: int
    literal_holds: bool
    adopted_holds: bool
    mirrored_holds: bool
    lhs_support: int
    rhs_support: int

    def __bool__(self) -> bool:
        return self.adopted_holds


def verify_projector_relation(code: RepetitionCode, i: int, j: int, tol: float = 1e-12) -> ProjectorRelationResult:
    n = code.n
    if n > 10:
        raise GuardError(f"dense relation check refused for n={n}")
    if not 1 <= j <= code.ell:
        raise ValueError(f"order j={j} outside [1, {code.ell}]")
    dim = 1 << n
    bit_i = (np.arange(dim) >> i) & 1

    p0j = np.zeros(dim)       # j flips away from |0_L>
    p1j = np.zeros(dim)       # j flips away from |1_L>
    sum_pik = np.zeros(dim)   # pairs of order j with qubit i erroneous
    for s in range(dim):
        w = weight(s)
        if w == j:
            p0j[s] = 1.0
        if w == n - j:
            p1j[s] = 1.0
        if (w == j and (s >> i) & 1) or (w == n - j and not (s >> i) & 1):
            sum_pik[s] = 1.0

    perm = np.arange(dim) ^ (1 << i)   # X_i as an index permutation

    def flip_10(diag):
        # |1><0|_i * diag: acts on bit_i = 0 states, lands on bit_i = 1
        m = np.zeros((dim, dim))
        src = np.nonzero((bit_i == 0) & (diag > 0))[0]
        m[src ^ (1 << i), src] = 1.0
        return m

    def flip_01(diag):
        m = np.zeros((dim, dim))
        src = np.nonzero((bit_i == 1) & (diag > 0))[0]
        m[src ^ (1 << i), src] = 1.0
        return m

    lhs_literal = flip_10(p0j)
    rhs_literal = np.diag(sum_pik * bit_i)
    literal = bool(np.max(np.abs(lhs_literal - rhs_literal)) <= tol)

    # corrected reading: |0><1|_i P_0^(j)  ==  X_i |1><1|_i sum_k P_{i,k}^(j)
    lhs = flip_01(p0j)
    rhs = np.zeros((dim, dim))
    src = np.nonzero(sum_pik * bit_i > 0)[0]
    rhs[src ^ (1 << i), src] = 1.0
    adopted = bool(np.max(np.abs(lhs - rhs)) <= tol)

    # |0>/|1> roles interchanged: |1><0|_i P_1^(j)  ==  X_i |0><0|_i sum_k P_{i,k}^(j)
    lhs_m = flip_10(p1j)
    rhs_m = np.zeros((dim, dim))
    src_m = np.nonzero(sum_pik * (1 - bit_i) > 0)[0]
    rhs_m[src_m ^ (1 << i), src_m] = 1.0
    mirrored = bool(np.max(np.abs(lhs_m - rhs_m)) <= tol)

    return ProjectorRelationResult(
        n=n, qubit=i, order=j,
        literal_holds=literal, adopted_holds=adopted, mirrored_holds=mirrored,
        lhs_support=int(np.count_nonzero(lhs)), rhs_support=int(np.count_nonzero(rhs)),
    )


def dense_jump_matrices(jumpset: JumpSet) -> list:
    """Dense matrices of all correction jumps (oracle-tier comparisons)."""
    return [to_dense(j) for j in jumpset.corrections]
