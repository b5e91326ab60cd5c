"""Invariant suites behind the `verify` CLI subcommand.

Every check re-derives its expectation through an independent route (dense
Kronecker oracles, exhaustive enumeration, brute-force majority decoding)
and compares it against the structured machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .codes import (
    RepetitionCode,
    build_lookup_table,
    build_three_qubit,
    build_trickle_down,
    count_distinct_projectors,
    dense_jump_matrices,
    n_proj_count,
    n_proj_lower_bound,
    verify_projector_relation,
)
from .ion import IonParams, Tone, ToneSet, build_ion_jump_set, kappa_eff, peak_rate, tone_params
from .opcore import (
    XString,
    basis_state,
    complement,
    coset_weight,
    dense_xstring,
    kl_check,
    kl_intersubspace_check,
    projector_from_stabilizers,
    to_dense,
    weight,
)


class VerificationFailure(RuntimeError):
    pass


@dataclass
class VerificationReport:
    lines: list = field(default_factory=list)
    failures: int = 0

    def check(self, name: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        self.lines.append(f"[{status}] {name}{suffix}")
        if not ok:
            self.failures += 1

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _kl_standard(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    codewords = [basis_state(n, code.codeword0), basis_state(n, code.codeword1)]
    errors = [dense_xstring(n, 1 << i) for i in range(n)]
    alpha, ok = kl_check(codewords, errors)
    diag = np.allclose(alpha, np.eye(n), atol=1e-9)
    report.check(f"n={n} Knill-Laflamme, single bit flips", ok and diag)
    _, bad = kl_check(codewords, [dense_xstring(n, code.codeword1)])
    report.check(f"n={n} logical X violates Knill-Laflamme", not bad)


def _kl_intersubspace(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    checked = 0
    ok = True
    for q in range(1, code.ell):
        for p in range(1, code.ell - q + 1):
            bases = [XString(n, sum(1 << i for i in c)) for c in itertools.combinations(range(n), q)]
            probes = [XString(n, sum(1 << i for i in c)) for c in itertools.combinations(range(n), p)]
            for base in bases:
                for ej, ek in itertools.product(probes, repeat=2):
                    ok &= kl_intersubspace_check(code, base, (ej, ek))
                    checked += 1
    report.check(
        f"n={n} inter-subspace Knill-Laflamme (exhaustive q+p<=ell)",
        ok,
        f"{checked} combinations" if checked else "vacuous at ell=1",
    )


def _syndrome_partition(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    gens = code.stabilizer_generators()
    seen = {}
    for syndrome in itertools.product((0, 1), repeat=n - 1):
        ind = projector_from_stabilizers(n, gens, syndrome)
        for s in ind.states():
            if s in seen:
                report.check(f"n={n} syndrome subspaces disjoint", False)
                return
            seen[s] = syndrome
    complete = len(seen) == (1 << n)
    pairs = all(seen[s] == seen[complement(s, n)] for s in seen)
    report.check(f"n={n} syndrome subspaces partition the basis", complete and pairs)


def _lookup_invariants(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    js = build_lookup_table(code, 1.0)
    count_ok = len(js.corrections) == (1 << (n - 1)) - 1
    covered = {}
    one_step = True
    for jump in js.corrections:
        for s in jump.domain.states():
            covered[s] = covered.get(s, 0) + 1
            one_step &= (s ^ jump.flip.mask) in (code.codeword0, code.codeword1)
    noncode = (1 << n) - 2
    partition_ok = len(covered) == noncode and all(v == 1 for v in covered.values())
    report.check(
        f"n={n} lookup table: 2^(n-1)-1 jumps partition non-codespace, one step to codespace",
        count_ok and partition_ok and one_step,
    )


def _trickle_invariants(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    js = build_trickle_down(code, 1.0, code.ell)
    count_ok = len(js.corrections) == n
    descent_ok = True
    for s in range(1 << n):
        state = s
        steps = 0
        while state not in (code.codeword0, code.codeword1):
            hits = [j for j in js.corrections if j.apply(state) is not None]
            if not hits:
                descent_ok = False
                break
            nxt = hits[0].apply(state)[0]
            if coset_weight(nxt, n) != coset_weight(state, n) - 1:
                descent_ok = False
                break
            state = nxt
            steps += 1
            if steps > code.ell:
                descent_ok = False
                break
        if not descent_ok:
            break
        descent_ok &= steps == coset_weight(s, n)
    report.check(
        f"n={n} trickle-down m=ell: n jumps, every application lowers coset weight by 1",
        count_ok and descent_ok,
    )
    expected = n_proj_count(n, code.ell)
    enumerated = count_distinct_projectors(js, 0)
    report.check(
        f"n={n} distinct projectors per trickle jump match the combinatorial count",
        enumerated == expected,
        f"{enumerated} == {expected}",
    )
    try:
        bound = n_proj_lower_bound(n, code.ell)
        report.check(f"n={n} projector count above the entropy bound", expected >= bound,
                     f"{expected} >= {bound:.2f}")
    except ValueError:
        pass


def _scheme_equality_n3(report: VerificationReport):
    lookup = dense_jump_matrices(build_lookup_table(RepetitionCode(3), 1.0))
    trickle = dense_jump_matrices(build_trickle_down(RepetitionCode(3), 1.0, 1))
    three = dense_jump_matrices(build_three_qubit(1.0))

    def as_set(mats):
        return sorted(tuple(np.round(m.real, 12).ravel()) for m in mats)

    report.check(
        "n=3 lookup, trickle-down, and three-qubit jump sets are equal as matrices",
        as_set(lookup) == as_set(trickle) == as_set(three),
    )


def _structural_diag(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    sets = [build_lookup_table(code, 0.7), build_trickle_down(code, 0.7, code.ell)]
    ok = True
    for js in sets:
        for jump in itertools.islice(js.all_jumps(), 0, 40):
            dense = to_dense(jump)
            prod = dense.conj().T @ dense
            ok &= np.allclose(prod, np.diag(np.diag(prod)), atol=1e-9)
    report.check(f"n={n} L†L diagonal for every structured jump", ok)


def _projector_relation(report: VerificationReport, n: int):
    code = RepetitionCode(n)
    adopted = True
    literal_seen = False
    for j in range(1, code.ell + 1):
        res = verify_projector_relation(code, 0, j)
        adopted &= res.adopted_holds and res.mirrored_holds
        literal_seen |= res.literal_holds
    report.check(
        f"n={n} projector relation holds in the erroneous-qubit-flip reading",
        adopted,
        "printed literal reading equates a flip with a diagonal and does not hold"
        if not literal_seen else "",
    )


def _ion_checks(report: VerificationReport):
    params = IonParams(omega=3.0, delta_big=40.0, delta_small=10.0,
                       g_coupling=20.0, kappa_eng=1.0, n=5)
    code = RepetitionCode(5)
    tones = ToneSet((Tone(1), Tone(2)))
    js = build_ion_jump_set(code, params, tones, gamma_e=0.1)
    scheme = js.scheme
    mirror = all(
        abs(scheme.undesired_rate(c) - scheme.summed_rate(params.n - c)) == 0.0
        for c in range(0, code.ell + 1)
    )
    report.check("ion: undesired rate profile is the mirrored desired profile", mirror)
    peak = peak_rate(params)
    below = all(
        scheme.undesired_rate(c) < peak * (1 + 1e-12) and scheme.undesired_rate(c) < peak
        for c in range(0, code.ell + 1)
    )
    report.check("ion: every undesired rate stays below the resonant peak", below)
    res_ok = True
    for tone in tones.tones:
        tp = tone_params(params, tone)
        res_ok &= abs(kappa_eff(tone.x0, tp) - peak) < 1e-9 * peak
    report.check("ion: each tone is exactly on resonance at its center", res_ok)
    ok = True
    for jump in js.corrections:
        dense = to_dense(jump)
        prod = dense.conj().T @ dense
        ok &= np.allclose(prod, np.diag(np.diag(prod)), atol=1e-12)
    report.check("ion: effective jumps keep a diagonal L†L", ok)


def run_verification(sizes=(3, 5, 7)) -> VerificationReport:
    report = VerificationReport()
    for n in sizes:
        if n > 10:
            report.check(f"n={n} skipped (dense guard)", False, "sizes above 10 unsupported")
            continue
        _kl_standard(report, n)
        _kl_intersubspace(report, n)
        _syndrome_partition(report, n)
        _lookup_invariants(report, n)
        _trickle_invariants(report, n)
        _structural_diag(report, n)
        _projector_relation(report, n)
    _scheme_equality_n3(report)
    _ion_checks(report)
    if 11 not in sizes:
        report.check(
            "n=11 projector count matches brute-force enumeration",
            count_distinct_projectors(build_trickle_down(RepetitionCode(11), 1.0, 5), 0)
            == n_proj_count(11, 5),
            f"{n_proj_count(11, 5)} projectors",
        )
    return report
