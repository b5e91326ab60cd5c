"""Trapped-ion effective correction scheme.

Closed-form Lorentzian rates of the engineered dissipation, resonance/tone
design, and the effective jump set with desired (weight-lowering) and
undesired (weight-raising) channels.  Only the adiabatically eliminated
effective operators are modeled; the driving Hamiltonians themselves are out
of scope.

Resonance-center convention: the center is x0 = Delta*delta/G^2, the
self-consistent form from the closed-form rate derivation (the alternative
delta*Delta/G printing is a typographical variant; the adopted convention
matches the published 21-qubit parameter set numerically).  This choice is
recorded in run manifests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from .codes import JumpSet, RepetitionCode, error_jumps
from .opcore import CosetBandIndicator, StructuredJump, XString, coset_weight, majority_bit


@dataclass(frozen=True)
class IonParams:
    """Drive and dissipation parameters of the engineered correction.

    omega        - global drive strength (the perturbative excitation)
    delta_big    - detuning of the internal-state drive
    delta_small  - detuning of the motional-mode coupling
    g_coupling   - motional coupling strength G
    kappa_eng    - engineered dissipation rate (proportional to g^2/kappa)
    n            - qubit (ion) count
    """

    omega: float
    delta_big: float
    delta_small: float
    g_coupling: float
    kappa_eng: float
    n: int

    def __post_init__(self):
        for name in ("omega", "delta_big", "delta_small", "g_coupling", "kappa_eng"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def with_coupling(self, g: float) -> "IonParams":
        return IonParams(self.omega, self.delta_big, self.delta_small, g, self.kappa_eng, self.n)


@dataclass(frozen=True)
class Tone:
    """One drive tone: integer resonance center and optional G override.

    With no override the coupling is fixed to the resonant value
    G0 = sqrt(Delta*delta/x0), putting the weight-x0 correction on resonance.
    """

    x0: int
    g_coupling: Optional[float] = None


@dataclass(frozen=True)
class ToneSet:
    tones: tuple

    def __post_init__(self):
        centers = [t.x0 for t in self.tones]
        if len(set(centers)) != len(centers):
            raise ValueError("tone centers must be distinct")
        if not self.tones:
            raise ValueError("at least one tone is required")

    def validate_for(self, ell: int):
        for t in self.tones:
            if not 1 <= t.x0 <= ell:
                raise ValueError(f"tone center {t.x0} outside [1, {ell}]")


def delta_prime(x: float, params: IonParams) -> complex:
    """Complex detuning shift Delta - (i/2) kappa_eng - x G^2 / delta."""
    if params.delta_small == 0:
        raise ValueError("delta_small must be nonzero")
    return complex(
        params.delta_big - x * params.g_coupling ** 2 / params.delta_small,
        -0.5 * params.kappa_eng,
    )


def kappa_eff(x: float, params: IonParams) -> float:
    """Effective correction rate kappa_eng * (Omega^2/4) / |Delta'(x)|^2.

    A Lorentzian in x centered at Delta*delta/G^2 with peak Omega^2/kappa_eng
    and half-width x0*kappa_eng/(2*Delta) once on resonance.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    return params.kappa_eng * params.omega ** 2 / 4.0 / abs(delta_prime(x, params)) ** 2


def lorentzian_center(params: IonParams) -> float:
    return params.delta_big * params.delta_small / params.g_coupling ** 2


def lorentzian_half_width(params: IonParams, x0: float) -> float:
    return x0 * params.kappa_eng / (2.0 * params.delta_big)


def resonant_g(x0: int, params: IonParams) -> float:
    """Coupling G0 = sqrt(Delta*delta/x0) placing the resonance at x0."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    return math.sqrt(params.delta_big * params.delta_small / x0)


def peak_rate(params: IonParams) -> float:
    return params.omega ** 2 / params.kappa_eng


def tone_params(params: IonParams, tone: Tone) -> IonParams:
    g = tone.g_coupling if tone.g_coupling is not None else resonant_g(tone.x0, params)
    return params.with_coupling(g)


@lru_cache(maxsize=None)
def _summed_rate(params: IonParams, tones: ToneSet, x: int) -> float:
    """Tones are independent engineered channels; their rates add."""
    return sum(kappa_eff(x, tone_params(params, t)) for t in tones.tones)


def default_tones(code: RepetitionCode) -> ToneSet:
    """The optimal choice: one resonant tone per correctable weight 1..ell."""
    return ToneSet(tuple(Tone(x0) for x0 in range(1, code.ell + 1)))


@dataclass(frozen=True)
class IonEffective:
    """Scheme tag for the effective trapped-ion jump set.

    Desired channels flip an erroneous qubit of a coset-weight-c state at
    rate sum_tones kappa_eff(c); undesired channels flip a non-erroneous
    qubit at the mirrored rate sum_tones kappa_eff(n-c), including c = 0
    (errors injected on the codewords).
    """

    params: IonParams
    tones: ToneSet

    @property
    def name(self) -> str:
        return "ion"

    def desired_rate(self, c: int) -> float:
        return _summed_rate(self.params, self.tones, c)

    def undesired_rate(self, c: int) -> float:
        return _summed_rate(self.params, self.tones, self.params.n - c)

    def summed_rate(self, x: int) -> float:
        return _summed_rate(self.params, self.tones, x)

    def correction_channels(self, code: RepetitionCode, gamma_c: float, state: int):
        n = code.n
        c = coset_weight(state, n)
        maj = majority_bit(state, n)
        kd = math.sqrt(self.desired_rate(c)) ** 2 if c >= 1 else 0.0
        ku = math.sqrt(self.undesired_rate(c)) ** 2
        out = []
        for i in range(n):
            if (state >> i) & 1 != maj:
                out.append((kd, 1 << i, f"ion i={i} c={c} desired"))
            else:
                out.append((ku, 1 << i, f"ion i={i} c={c} undesired"))
        return out

    def max_correction_rate(self, code: RepetitionCode, gamma_c: float) -> float:
        n = code.n
        best = 0.0
        for c in range(code.ell + 1):
            kd = self.desired_rate(c) if c >= 1 else 0.0
            total = c * kd + (n - c) * self.undesired_rate(c)
            best = max(best, total)
        return best


def build_ion_jump_set(
    code: RepetitionCode,
    params: IonParams,
    tones: ToneSet,
    gamma_e: float,
) -> JumpSet:
    """Effective jump set: per qubit, one desired channel per coset weight
    c in [1, ell] and one undesired channel per c in [0, ell].

    Channels with distinct rates are separate StructuredJumps so that every
    operator keeps a diagonal L†L.  The JumpSet's gamma_c records the
    on-resonance peak rate Omega^2/kappa_eng for reference; the engines use
    the per-channel rates.
    """
    if params.n != code.n:
        raise ValueError("params.n must match the code size")
    tones.validate_for(code.ell)
    scheme = IonEffective(params, tones)
    n = code.n
    corrections = []
    for i in range(n):
        for c in range(1, code.ell + 1):
            corrections.append(
                StructuredJump(
                    math.sqrt(scheme.desired_rate(c)),
                    XString(n, 1 << i),
                    CosetBandIndicator(n, c, c, qubit=i, qubit_erroneous=True),
                    f"ion i={i} c={c} desired",
                )
            )
        for c in range(0, code.ell + 1):
            corrections.append(
                StructuredJump(
                    math.sqrt(scheme.undesired_rate(c)),
                    XString(n, 1 << i),
                    CosetBandIndicator(n, c, c, qubit=i, qubit_erroneous=False),
                    f"ion i={i} c={c} undesired",
                )
            )
    return JumpSet(
        code, tuple(corrections), error_jumps(code, gamma_e), scheme, peak_rate(params), gamma_e
    )


def rates_table(code: RepetitionCode, params: IonParams, tones: ToneSet) -> list:
    """Per-weight desired/undesired rates, raw and peak-normalized.

    Rows cover c = 1 .. n-1; weights beyond ell are flagged inactive (no
    state has a coset weight there) but show the mirrored Lorentzian profile.
    """
    tones.validate_for(code.ell)
    scheme = IonEffective(params, tones)
    peak = peak_rate(params)
    rows = []
    for c in range(1, code.n):
        desired = scheme.summed_rate(c)
        undesired = scheme.summed_rate(code.n - c)
        rows.append(
            {
                "c": c,
                "desired_rate": desired,
                "undesired_rate": undesired,
                "desired_norm": desired / peak,
                "undesired_norm": undesired / peak,
                "active": c <= code.ell,
            }
        )
    return rows
