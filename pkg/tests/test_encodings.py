"""Family constructions: explicit, walsh, mub, cyclic, random, tensorized."""

import json

import numpy as np
import pytest

from obliq.encodings import (
    ALPHA_1,
    ALPHA_2,
    W2,
    CertificationError,
    ItemBasisFamily,
    build_family,
    cyclic_family,
    explicit_single_bit_family,
    mub_family,
    random_family,
    tensorized_family,
    walsh_family,
)
from obliq.qmath import SeededRng, is_hadamard, is_unitary, linf_overlap, rotation_permutation

S = np.sqrt(0.5)

# the eight encoded superpositions of the two-item single-bit scheme,
# ordered by database value, for each encoding
FIRST_ENCODING_STATES = np.array(
    [
        [S, S, 0, 0],
        [S, -S, 0, 0],
        [0, 0, S, S],
        [0, 0, S, -S],
    ]
).T
SECOND_ENCODING_STATES = np.array(
    [
        [S, 0, S, 0],
        [S, 0, -S, 0],
        [0, S, 0, S],
        [0, S, 0, -S],
    ]
).T

PRINTED_E0 = np.array(
    [
        [S, S, 0, 0],
        [S, -S, 0, 0],
        [0, 0, S, S],
        [0, 0, S, -S],
    ]
)
PRINTED_E1 = np.array(
    [
        [S, S, 0, 0],
        [0, 0, S, S],
        [S, -S, 0, 0],
        [0, 0, S, -S],
    ]
)


class TestExplicitFamily:
    def test_matches_printed_matrices(self):
        fam = explicit_single_bit_family()
        np.testing.assert_allclose(fam.encoder(0), PRINTED_E0, atol=1e-12)
        np.testing.assert_allclose(fam.encoder(1), PRINTED_E1, atol=1e-12)

    def test_column_for_db_01(self):
        fam = explicit_single_bit_family()
        np.testing.assert_allclose(fam.encode_column(0, 1), [S, -S, 0, 0], atol=1e-12)
        np.testing.assert_allclose(fam.encode_column(1, 1), [S, 0, -S, 0], atol=1e-12)

    def test_cross_product_is_flat(self):
        fam = explicit_single_bit_family()
        cross = fam.encoder(1).conj().T @ fam.encoder(0)
        assert is_hadamard(cross, 1e-12)
        np.testing.assert_allclose(np.abs(cross), 0.5, atol=1e-12)

    def test_descriptor_embeds_matrices(self):
        fam = explicit_single_bit_family()
        desc = fam.descriptor()
        assert desc["kind"] == "explicit"
        assert len(desc["matrices"]) == 2
        json.dumps(desc)  # must be serializable as-is


class TestWalshFamily:
    def test_m1_uses_w2(self):
        fam = walsh_family(1)
        np.testing.assert_allclose(fam.basis.matrices[1], W2, atol=1e-15)

    def test_m2_cross_product_flat(self):
        fam = walsh_family(2)
        assert is_hadamard(fam.encoder(1).conj().T @ fam.encoder(0), 1e-9)

    def test_m1_matches_first_encoding_up_to_column_relabel(self):
        # W2's columns are the symmetric-Hadamard columns swapped, so
        # I (x) W2 equals the printed first-encoding table with the least
        # significant database bit flipped; amplitudes agree sign-for-sign.
        fam = walsh_family(1)
        e0 = fam.encoder(0)
        for d in range(4):
            np.testing.assert_allclose(
                e0[:, d], FIRST_ENCODING_STATES[:, d ^ 1], atol=1e-12
            )

    def test_overlap_value(self):
        for m in (1, 2, 3):
            fam = walsh_family(m)
            n = fam.n
            got = linf_overlap(np.eye(n), fam.encoder(1).conj().T @ fam.encoder(0))
            assert got == pytest.approx(1 / np.sqrt(n), abs=1e-9)

    def test_zero_m_rejected(self):
        with pytest.raises(ValueError):
            walsh_family(0)


class TestBuildFamily:
    def test_k2_structure(self):
        basis = mub_family(2, 1)
        fam = build_family(basis)
        a0, a1 = basis.matrices
        np.testing.assert_allclose(fam.encoder(0), np.kron(a0, a1), atol=1e-12)
        perm = rotation_permutation(2, 1, 1)
        np.testing.assert_allclose(fam.encoder(1), np.kron(a1, a0) @ perm, atol=1e-12)

    def test_k2_walsh_identity(self):
        fam = walsh_family(1)
        a0, a1 = fam.basis.matrices
        perm = rotation_permutation(2, 1, 1)
        lhs = fam.encoder(1).conj().T @ fam.encoder(0)
        rhs = perm.conj().T @ np.kron(a1.conj().T @ a0, a0.conj().T @ a1)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_k3_all_unitary(self):
        fam = build_family(mub_family(3, 1))
        for i in range(3):
            assert is_unitary(fam.encoder(i), 1e-9)

    def test_rejects_non_unitary(self):
        with pytest.raises((ValueError, CertificationError)):
            ItemBasisFamily(k=2, m=1, matrices=(np.eye(2), np.ones((2, 2))), kind="explicit")

    def test_encode_column_matches_dense(self):
        fam = build_family(mub_family(3, 2))
        for i in range(3):
            dense = fam.encoder(i)
            for d in (0, 5, 17, 63):
                np.testing.assert_allclose(fam.encode_column(i, d), dense[:, d], atol=1e-12)

    def test_vec_times_encoder_matches_dense(self):
        fam = build_family(mub_family(3, 1))
        rng = SeededRng(5)
        vec = rng.gen.standard_normal(8) + 1j * rng.gen.standard_normal(8)
        for i in range(3):
            np.testing.assert_allclose(
                fam.vec_times_encoder(vec, i), vec @ fam.encoder(i), atol=1e-12
            )


class TestMubFamily:
    def test_k3_m1_is_printed_triple(self):
        fam = mub_family(3, 1)
        np.testing.assert_allclose(fam.matrices[0], np.eye(2), atol=1e-15)
        np.testing.assert_allclose(fam.matrices[1], ALPHA_1, atol=1e-15)
        np.testing.assert_allclose(fam.matrices[2], ALPHA_2, atol=1e-15)

    def test_k3_m2_tensor_powers(self):
        fam = mub_family(3, 2)
        np.testing.assert_allclose(fam.matrices[1], np.kron(ALPHA_1, ALPHA_1), atol=1e-15)
        np.testing.assert_allclose(fam.matrices[2], np.kron(ALPHA_2, ALPHA_2), atol=1e-15)
        assert fam.pairwise_hadamard

    def test_size_guard(self):
        with pytest.raises(ValueError, match="exceeds"):
            mub_family(4, 1)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_full_tower_certifies(self, m):
        ell = 1 << m
        for k in range(2, ell + 2):
            fam = mub_family(k, m)
            flat = 1 / np.sqrt(ell)
            for i in range(k):
                for j in range(k):
                    if i != j:
                        cross = fam.matrices[i].conj().T @ fam.matrices[j]
                        np.testing.assert_allclose(np.abs(cross), flat, atol=1e-9)

    def test_m4_large_family(self):
        fam = mub_family(17, 4)  # the full tower at m=4
        assert fam.pairwise_hadamard


class TestCyclicFamily:
    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_cube_is_identity(self, m):
        fam = cyclic_family(3, m)
        a = fam.matrices[1]
        np.testing.assert_allclose(
            np.linalg.matrix_power(a, 3), np.eye(1 << m), atol=1e-9
        )

    def test_powers_are_flat(self):
        fam = cyclic_family(3, 1)
        assert is_hadamard(fam.matrices[1], 1e-9)
        assert is_hadamard(fam.matrices[2], 1e-9)

    def test_other_k_rejected(self):
        with pytest.raises(ValueError, match="k = 3"):
            cyclic_family(4, 1)


class TestRandomFamily:
    def test_reproducible_and_unitary(self):
        a = random_family(2, 4, SeededRng(77))
        b = random_family(2, 4, SeededRng(77))
        for x, y in zip(a.matrices, b.matrices):
            np.testing.assert_array_equal(x, y)
            assert is_unitary(x, 1e-9)

    def test_overlap_never_exceeds_one(self):
        fam = random_family(2, 1, SeededRng(3))
        assert fam.max_pairwise_overlap <= 1.0 + 1e-12

    def test_overlap_concentration_scaling(self):
        # with c = 4 the bound c (log k + m) / 2^(m/2) holds w.h.p.
        k, m, c = 5, 6, 4.0
        threshold = c * (np.log2(k) + m) / 2 ** (m / 2)
        root = SeededRng(2025)
        hits = sum(
            random_family(k, m, root.derive(s)).max_pairwise_overlap <= threshold
            for s in range(50)
        )
        assert hits == 50


class TestTensorizedFamily:
    def test_single_block_equals_random(self):
        a = tensorized_family(2, 3, 8, SeededRng(11))
        b = random_family(2, 3, SeededRng(11))
        for x, y in zip(a.matrices, b.matrices):
            np.testing.assert_array_equal(x, y)

    def test_two_fold_structure(self):
        fam = tensorized_family(2, 4, 4, SeededRng(12))
        for mat in fam.matrices:
            assert is_unitary(mat, 1e-9)
            assert mat.shape == (16, 16)

    def test_divisibility_guard(self):
        with pytest.raises(ValueError, match="divide"):
            tensorized_family(2, 3, 4, SeededRng(1))

    def test_linf_multiplicativity(self):
        # Linf of a tensor product is the product of the factor Linf values:
        # recompute the blocks from the same stream the family consumed
        from obliq.qmath import haar_unitaries

        fam = tensorized_family(2, 2, 2, SeededRng(13))
        raw = haar_unitaries(2, 2, SeededRng(13))
        base = np.abs(raw[1].conj().T @ raw[0]).max()
        efam = build_family(fam)
        cross = np.abs(efam.encoder(1).conj().T @ efam.encoder(0)).max()
        assert cross == pytest.approx(base ** 4, abs=1e-9)


class TestDescriptors:
    def test_parameter_only_kinds_omit_matrices(self):
        fam = build_family(mub_family(3, 2))
        desc = fam.descriptor()
        assert "matrices" not in desc
        assert desc == {"kind": "mub", "k": 3, "m": 2}

    def test_random_kind_embeds_matrices_and_seed(self):
        fam = build_family(random_family(2, 1, SeededRng(21, 4)))
        desc = fam.descriptor()
        assert desc["seed"] == [21, 4]
        rebuilt = np.array(
            [[complex(re, im) for re, im in row] for row in desc["matrices"][1]]
        )
        np.testing.assert_allclose(rebuilt, fam.basis.matrices[1], atol=1e-15)
