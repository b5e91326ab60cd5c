"""Structured operator algebra: application kernel, projectors, dense bridge,
and Knill-Laflamme checks against independent Kronecker-product oracles."""

import itertools
import math

import numpy as np
import pytest

from tdqec.codes import RepetitionCode, build_three_qubit
from tdqec.opcore import (
    CosetBandIndicator,
    ExplicitIndicator,
    FullIndicator,
    GuardError,
    StructuredJump,
    SyndromeIndicator,
    XString,
    apply_structured,
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


def bits(text: str) -> int:
    """Bitstring literal with qubit 0 written first."""
    return sum(1 << i for i, c in enumerate(text) if c == "1")


def test_bit_helpers():
    assert weight(bits("1011")) == 3
    assert complement(bits("100"), 3) == bits("011")
    assert coset_weight(bits("11011"), 5) == 1
    assert coset_weight(bits("00111"), 5) == 2


class TestApplyStructured:
    def test_flips_erroneous_qubit_in_domain(self):
        jump = StructuredJump(
            math.sqrt(2.5),
            XString(3, bits("100")),
            ExplicitIndicator(3, frozenset({bits("100"), bits("010"), bits("001")})),
            "corr",
        )
        out = apply_structured(jump, bits("100"))
        assert out == (bits("000"), pytest.approx(math.sqrt(2.5)))

    def test_outside_domain_is_empty(self):
        jump = StructuredJump(
            1.0, XString(3, bits("100")), ExplicitIndicator(3, frozenset({bits("100")})), "c"
        )
        assert apply_structured(jump, bits("011")) is None

    def test_double_flip_is_identity(self):
        jump = StructuredJump(1.0, XString(4, 0b1010), FullIndicator(4), "x")
        for s in range(16):
            mid, _ = jump.apply(s)
            back, _ = jump.apply(mid)
            assert back == s

    def test_state_outside_register_rejected(self):
        jump = StructuredJump(1.0, XString(3, 1), FullIndicator(3), "x")
        with pytest.raises(ValueError):
            jump.apply(0b10000)


class TestSyndromeProjectors:
    def test_trivial_syndrome_is_codespace(self):
        ind = projector_from_stabilizers(3, [bits("110"), bits("011")], (0, 0))
        assert sorted(ind.states()) == [bits("000"), bits("111")]

    def test_first_generator_flagged(self):
        # parities evaluated over all 8 basis states pick out {100, 011}
        ind = projector_from_stabilizers(3, [bits("110"), bits("011")], (1, 0))
        assert sorted(ind.states()) == sorted([bits("100"), bits("011")])

    def test_all_syndromes_partition_n5(self):
        gens = RepetitionCode(5).stabilizer_generators()
        seen = set()
        for syndrome in itertools.product((0, 1), repeat=4):
            members = list(projector_from_stabilizers(5, gens, syndrome).states())
            assert len(members) == 2
            assert not seen & set(members)
            seen.update(members)
        assert len(seen) == 32

    def test_dependent_generators_rejected(self):
        with pytest.raises(ValueError, match="dependent"):
            projector_from_stabilizers(3, [bits("110"), bits("011"), bits("101")], (0, 0, 0))

    def test_symbolic_agrees_with_explicit_scan(self):
        n = 15
        gens = RepetitionCode(n).stabilizer_generators()
        ind = projector_from_stabilizers(n, gens, (1, 0) * 7)
        explicit = ind.to_explicit()
        for s in range(1 << n):
            assert ind.contains(s) == explicit.contains(s)


class TestCosetIndicator:
    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_symbolic_matches_majority_decode_oracle(self, n):
        ind = CosetBandIndicator(n, 1, (n - 1) // 2, qubit=0, qubit_erroneous=True)
        for s in range(1 << n):
            w = weight(s)
            maj = 1 if 2 * w > n else 0
            expected = 0 < min(w, n - w) and ((s & 1) != maj)
            assert ind.contains(s) == expected


class TestDenseBridge:
    def test_identity_jump_is_identity_matrix(self):
        jump = StructuredJump(1.0, XString(2, 0), FullIndicator(2), "id")
        assert np.array_equal(to_dense(jump), np.eye(4))

    def test_three_qubit_jump_matches_kronecker_oracle(self):
        # sqrt(Gc) X_0 (1 - Z0 Z1)/2 (1 - Z0 Z2)/2 built from raw Paulis
        gc = 1.7
        z = np.diag([1.0, -1.0])
        eye = np.eye(2)

        def kron3(a, b, c):
            # qubit 0 is the least significant => last Kronecker factor
            return np.kron(np.kron(c, b), a)

        z0z1 = kron3(z, z, eye)
        z0z2 = kron3(z, eye, z)
        oracle = (
            math.sqrt(gc)
            * dense_xstring(3, 1)
            @ ((np.eye(8) - z0z1) / 2)
            @ ((np.eye(8) - z0z2) / 2)
        )
        jump = next(j for j in build_three_qubit(gc).corrections if j.label.endswith("i=0"))
        assert np.allclose(to_dense(jump), oracle, atol=1e-12)

    def test_ldag_l_is_diagonal_indicator(self):
        jump = StructuredJump(
            math.sqrt(0.3),
            XString(3, bits("110")),
            ExplicitIndicator(3, frozenset({1, 5, 6})),
            "j",
        )
        dense = to_dense(jump)
        prod = dense.conj().T @ dense
        expected = np.zeros((8, 8))
        for s in (1, 5, 6):
            expected[s, s] = 0.3
        assert np.allclose(prod, expected, atol=1e-12)

    def test_dimension_guard(self):
        jump = StructuredJump(1.0, XString(13, 0), FullIndicator(13), "big")
        with pytest.raises(GuardError):
            to_dense(jump)


class TestKnillLaflamme:
    def _codewords(self, n):
        return [basis_state(n, 0), basis_state(n, (1 << n) - 1)]

    def test_single_flips_satisfy_condition_with_identity_alpha(self):
        errors = [dense_xstring(3, 1 << i) for i in range(3)]
        alpha, ok = kl_check(self._codewords(3), errors)
        assert ok
        assert np.allclose(alpha, np.eye(3), atol=1e-12)

    def test_duplicate_error_gives_offdiagonal_alpha(self):
        errors = [dense_xstring(3, 1), dense_xstring(3, 1)]
        alpha, ok = kl_check(self._codewords(3), errors)
        assert ok
        assert alpha[0, 1] == pytest.approx(1.0)

    def test_logical_operator_fails(self):
        _, ok = kl_check(self._codewords(3), [dense_xstring(3, 0b111)])
        assert not ok

    def test_nonorthonormal_codewords_rejected(self):
        bad = [basis_state(3, 0), basis_state(3, 0)]
        with pytest.raises(ValueError, match="orthonormal"):
            kl_check(bad, [dense_xstring(3, 1)])


class TestInterSubspace:
    def test_same_probe_recovers(self):
        code = RepetitionCode(5)
        assert kl_intersubspace_check(code, XString(5, 1), (XString(5, 2), XString(5, 2)))

    def test_distinct_probes_vanish_on_subspace(self):
        code = RepetitionCode(5)
        assert kl_intersubspace_check(code, XString(5, 1), (XString(5, 2), XString(5, 4)))

    def test_order_guard(self):
        code = RepetitionCode(3)
        with pytest.raises(GuardError, match="order guard"):
            kl_intersubspace_check(code, XString(3, 1), (XString(3, 2), XString(3, 2)))

    @pytest.mark.parametrize("n", [5, 7])
    def test_exhaustive_up_to_correctable_order(self, n):
        code = RepetitionCode(n)
        for q in range(1, code.ell):
            for p in range(1, code.ell - q + 1):
                bases = [
                    XString(n, sum(1 << i for i in c))
                    for c in itertools.combinations(range(n), q)
                ]
                probes = [
                    XString(n, sum(1 << i for i in c))
                    for c in itertools.combinations(range(n), p)
                ]
                for base in bases:
                    for ej, ek in itertools.product(probes, repeat=2):
                        assert kl_intersubspace_check(code, base, (ej, ek))
