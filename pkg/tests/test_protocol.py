"""Session engine: encoding, measurement, Bayes, decoding, transcripts."""

import json

import numpy as np
import pytest

from obliq.encodings import build_family, explicit_single_bit_family, mub_family, random_family, walsh_family
from obliq.protocol import (
    DatabaseState,
    SessionOrderError,
    TranscriptBuilder,
    custom_basis,
    decode_item,
    honest_basis,
    honest_leakage,
    info_account,
    invert_basis,
    item_blocks,
    outcome_distribution,
    parity_basis,
    posterior,
    run_session,
    sample_outcome,
    vendor_encode,
)
from obliq.qmath import SeededRng, entropy_rows, haar_unitary, is_unitary

S = np.sqrt(0.5)


@pytest.fixture
def explicit():
    return explicit_single_bit_family()


class TestDatabaseState:
    def test_config_index_packing(self):
        db = DatabaseState(3, 2, (2, 1, 3))
        assert db.config_index == (2 << 4) | (1 << 2) | 3
        assert DatabaseState.from_index(db.config_index, 3, 2) == db

    def test_range_checks(self):
        with pytest.raises(ValueError):
            DatabaseState(2, 1, (0, 2))
        with pytest.raises(ValueError):
            DatabaseState.from_index(16, 2, 2)


class TestVendorEncode:
    def test_printed_states(self, explicit):
        db = DatabaseState(2, 1, (0, 1))
        np.testing.assert_allclose(vendor_encode(db, explicit, 0), [S, -S, 0, 0], atol=1e-12)
        np.testing.assert_allclose(vendor_encode(db, explicit, 1), [S, 0, -S, 0], atol=1e-12)

    def test_zero_config_is_first_column(self, explicit):
        db = DatabaseState(2, 1, (0, 0))
        np.testing.assert_allclose(
            vendor_encode(db, explicit, 0), explicit.encoder(0)[:, 0], atol=1e-15
        )

    def test_out_of_range_encoding(self, explicit):
        with pytest.raises(ValueError):
            vendor_encode(DatabaseState(2, 1, (0, 0)), explicit, 2)


class TestOutcomeDistribution:
    def test_point_mass_on_computational(self, explicit):
        e2 = np.zeros(4, dtype=complex)
        e2[2] = 1
        dist = outcome_distribution(e2, custom_basis(np.eye(4)))
        np.testing.assert_allclose(dist, [0, 0, 1, 0], atol=1e-15)

    def test_first_basis_on_db01(self, explicit):
        state = vendor_encode(DatabaseState(2, 1, (0, 1)), explicit, 0)
        dist = outcome_distribution(state, honest_basis(explicit, 0))
        np.testing.assert_allclose(dist, [0.5, 0.5, 0, 0], atol=1e-12)

    def test_second_basis_on_db01(self, explicit):
        state = vendor_encode(DatabaseState(2, 1, (0, 1)), explicit, 0)
        dist = outcome_distribution(state, honest_basis(explicit, 1))
        np.testing.assert_allclose(dist, [0, 0.5, 0, 0.5], atol=1e-12)

    def test_dimension_mismatch(self, explicit):
        with pytest.raises(ValueError):
            outcome_distribution(np.array([1.0, 0.0]), honest_basis(explicit, 0))


class TestSampling:
    def test_point_mass_any_seed(self, explicit):
        e1 = np.zeros(4, dtype=complex)
        e1[1] = 1
        for seed in (1, 2, 3):
            assert sample_outcome(e1, custom_basis(np.eye(4)), SeededRng(seed)) == 1

    def test_reproducible(self, explicit):
        state = vendor_encode(DatabaseState(2, 1, (0, 1)), explicit, 0)
        basis = honest_basis(explicit, 0)
        a = sample_outcome(state, basis, SeededRng(42))
        b = sample_outcome(state, basis, SeededRng(42))
        assert a == b

    def test_uniform_frequencies(self, explicit):
        state = vendor_encode(DatabaseState(2, 1, (0, 1)), explicit, 0)
        basis = honest_basis(explicit, 0)
        rng = SeededRng(7)
        draws = [sample_outcome(state, basis, rng.derive(t)) for t in range(10_000)]
        freq = np.mean(np.array(draws) == 0)
        sigma = np.sqrt(0.25 / 10_000)
        assert abs(freq - 0.5) < 3 * sigma


class TestPosterior:
    def test_computational_enumeration(self, explicit):
        # oracle: |(M E_0)_{j,d}|^2 enumerated by hand for M = I
        post = posterior(custom_basis(np.eye(4)), explicit, 0, 0)
        np.testing.assert_allclose(post, [0.5, 0.5, 0, 0], atol=1e-12)

    def test_invert_matched_guess(self, explicit):
        basis = invert_basis(explicit, 0)
        for j in range(4):
            post = posterior(basis, explicit, 0, j)
            np.testing.assert_allclose(post, np.eye(4)[j], atol=1e-12)

    def test_invert_mismatched_guess(self, explicit):
        basis = invert_basis(explicit, 0)
        for j in range(4):
            post = posterior(basis, explicit, 1, j)
            np.testing.assert_allclose(post, np.full(4, 0.25), atol=1e-12)

    def test_nonuniform_prior(self, explicit):
        prior = np.array([0.7, 0.3, 0.0, 0.0])
        post = posterior(custom_basis(np.eye(4)), explicit, 0, 0, prior)
        np.testing.assert_allclose(post, [0.7, 0.3, 0, 0], atol=1e-12)

    def test_zero_probability_event(self, explicit):
        prior = np.array([0.0, 0.0, 0.5, 0.5])
        with pytest.raises(ValueError, match="zero-probability"):
            posterior(custom_basis(np.eye(4)), explicit, 0, 0, prior)

    def test_normalization_random_bases(self, explicit):
        rng = SeededRng(15)
        for t in range(25):
            basis = custom_basis(haar_unitary(4, rng.derive(t)))
            for i in range(2):
                for j in range(4):
                    assert posterior(basis, explicit, i, j).sum() == pytest.approx(1.0, abs=1e-9)


class TestInfoAccount:
    def test_honest_item0_gain_is_one(self, explicit):
        acct = info_account(honest_basis(explicit, 0), explicit)
        # every outcome leaves one bit of uncertainty per encoding
        np.testing.assert_allclose(acct.h_cond, 1.0, atol=1e-12)
        assert acct.gain_expected == pytest.approx(1.0, abs=1e-12)

    def test_invert_guess_entropies(self, explicit):
        acct = info_account(invert_basis(explicit, 0), explicit)
        np.testing.assert_allclose(acct.h_cond[:, 0], 0.0, atol=1e-9)
        np.testing.assert_allclose(acct.h_cond[:, 1], 2.0, atol=1e-9)
        np.testing.assert_allclose(acct.h_avg, 1.0, atol=1e-9)

    def test_bell_basis_gains_nothing(self, explicit):
        bell = np.array(
            [
                [1, 0, 0, 1],
                [1, 0, 0, -1],
                [0, 1, 1, 0],
                [0, 1, -1, 0],
            ],
            dtype=complex,
        ) / np.sqrt(2)
        acct = info_account(custom_basis(bell), explicit)
        # enumeration oracle: every conditional posterior is uniform
        np.testing.assert_allclose(acct.h_cond, 2.0, atol=1e-9)
        assert acct.gain_expected == pytest.approx(0.0, abs=1e-9)

    def test_rejects_nonuniform_prior(self, explicit):
        with pytest.raises(ValueError, match="prior"):
            info_account(honest_basis(explicit, 0), explicit, np.array([0.4, 0.2, 0.2, 0.2]))

    def test_gain_bound_random_bases(self, explicit):
        # pairwise-unbiased k=2 family: per-outcome gain <= (1/2) log n
        rng = SeededRng(33)
        for t in range(200):
            acct = info_account(custom_basis(haar_unitary(4, rng.derive(t))), explicit)
            assert acct.gain_worst <= 1.0 + 1e-9


class TestHonestBasis:
    def test_walsh_j0_is_identity(self):
        fam = walsh_family(1)
        np.testing.assert_allclose(honest_basis(fam, 0).matrix, np.eye(4), atol=1e-12)

    def test_walsh_j1_tensor(self):
        fam = walsh_family(1)
        w = fam.basis.matrices[1]
        np.testing.assert_allclose(
            honest_basis(fam, 1).matrix, np.kron(w.conj().T, w.conj().T), atol=1e-12
        )

    def test_mub_j2_tensor(self):
        fam = build_family(mub_family(3, 1))
        a2 = fam.basis.matrices[2]
        expected = np.kron(np.kron(a2.conj().T, a2.conj().T), a2.conj().T)
        np.testing.assert_allclose(honest_basis(fam, 2).matrix, expected, atol=1e-12)

    def test_out_of_range(self):
        fam = walsh_family(1)
        with pytest.raises(ValueError):
            honest_basis(fam, 2)


class TestDecodeItem:
    def test_block_zero(self):
        assert decode_item(0b01, 0, 0, 2, 1) == 0

    def test_block_one(self):
        assert decode_item(0b10, 1, 0, 2, 1) == 0

    def test_k3_m2_wraparound(self):
        outcome = (0b01 << 4) | (0b10 << 2) | 0b11  # blocks (1, 2, 3)
        assert decode_item(outcome, 2, 1, 3, 2) == 3  # block (1-2) mod 3 = 2

    def test_honest_completeness_small(self):
        # exhaustive up to k*m = 9: every positive-probability outcome
        # decodes correctly
        families = (
            explicit_single_bit_family(),
            walsh_family(2),
            build_family(mub_family(3, 1)),
            build_family(mub_family(3, 3)),
        )
        for fam in families:
            k, m, n = fam.k, fam.m, fam.n
            for j in range(k):
                mat = honest_basis(fam, j).matrix
                for i in range(k):
                    probs = np.abs(mat @ fam.encoder(i)) ** 2
                    for d in range(n):
                        support = np.flatnonzero(probs[:, d] > 1e-18)
                        want = item_blocks(d, k, m)[j]
                        for o in support:
                            assert decode_item(int(o), i, j, k, m) == want


class TestParityBasis:
    def test_unitary(self):
        assert is_unitary(parity_basis().matrix, 1e-12)

    def test_single_parity_class_for_low_outcomes(self, explicit):
        basis = parity_basis()
        for i in range(2):
            for j in (0, 1):
                post = posterior(basis, explicit, i, j)
                support = np.flatnonzero(post > 1e-12)
                parities = {(int(d) >> 1 & 1) ^ (int(d) & 1) for d in support}
                assert len(parities) == 1

    def test_gain_at_most_one(self, explicit):
        acct = info_account(parity_basis(), explicit)
        assert acct.gain_expected <= 1.0 + 1e-9


class TestRunSession:
    def test_walkthrough_item0(self, explicit):
        db = DatabaseState(2, 1, (0, 1))
        for seed in range(20):
            tr = run_session(db, explicit, honest_basis(explicit, 0), SeededRng(seed))
            assert tr.decoded == {"kind": "item", "index": 0, "value": 0}

    def test_walkthrough_item1(self, explicit):
        db = DatabaseState(2, 1, (0, 1))
        for seed in range(20):
            tr = run_session(db, explicit, honest_basis(explicit, 1), SeededRng(seed))
            assert tr.decoded == {"kind": "item", "index": 1, "value": 1}

    def test_transcript_determinism(self, explicit):
        db = DatabaseState(2, 1, (1, 0))
        a = run_session(db, explicit, honest_basis(explicit, 0), SeededRng(9, 2))
        b = run_session(db, explicit, honest_basis(explicit, 0), SeededRng(9, 2))
        assert a.to_json() == b.to_json()

    def test_transcript_schema(self, explicit):
        tr = run_session(DatabaseState(2, 1, (1, 1)), explicit, honest_basis(explicit, 0), SeededRng(3))
        doc = json.loads(tr.to_json())
        assert doc["version"] == 1
        assert doc["prior"] == "uniform"
        assert [e["type"] for e in doc["events"]] == [
            "state_sent",
            "measurement_committed",
            "encoding_announced",
            "decoded",
        ]
        assert len(doc["posterior"]) == 4

    def test_posterior_matches_recomputation(self, explicit):
        tr = run_session(DatabaseState(2, 1, (1, 0)), explicit, invert_basis(explicit, 1), SeededRng(5))
        basis = invert_basis(explicit, 1)
        recomputed = posterior(basis, explicit, tr.announced, tr.outcome)
        np.testing.assert_array_equal(np.asarray(tr.posterior), recomputed)

    def test_invert_decodes_config_or_nothing(self, explicit):
        db = DatabaseState(2, 1, (1, 0))
        seen = set()
        for seed in range(30):
            tr = run_session(db, explicit, invert_basis(explicit, 0), SeededRng(seed))
            seen.add(tr.decoded["kind"])
            if tr.announced == 0:
                assert tr.decoded["items"] == [1, 0]
            else:
                assert tr.decoded == {"kind": "none"}
        assert seen == {"config", "none"}


class TestEventOrder:
    def test_announcement_unreadable_before_measurement(self):
        builder = TranscriptBuilder(secret_encoding=1)
        builder.record_state_sent(4)
        with pytest.raises(SessionOrderError):
            _ = builder.announced
        with pytest.raises(SessionOrderError):
            builder.announce()

    def test_measure_requires_state(self):
        builder = TranscriptBuilder(secret_encoding=0)
        with pytest.raises(SessionOrderError):
            builder.record_measurement({"kind": "honest", "index": 0}, 0)

    def test_decode_requires_announcement(self):
        builder = TranscriptBuilder(secret_encoding=0)
        builder.record_state_sent(4)
        builder.record_measurement({"kind": "honest", "index": 0}, 0)
        with pytest.raises(SessionOrderError):
            builder.record_decoded({"kind": "none"})
        builder.announce()
        builder.record_decoded({"kind": "none"})
        assert [e["type"] for e in builder.events][-1] == "decoded"


class TestHonestLeakage:
    def test_mub_families_leak_nothing(self):
        for k, m in ((2, 1), (3, 1), (3, 2), (5, 2), (9, 3)):
            fam = build_family(mub_family(k, m))
            for j in range(k):
                assert abs(honest_leakage(fam, j)) < 1e-9

    def test_walsh_leaks_nothing(self):
        fam = walsh_family(2)
        assert abs(honest_leakage(fam, 0)) < 1e-9
        assert abs(honest_leakage(fam, 1)) < 1e-9

    def test_random_families_positive_but_bounded(self):
        root = SeededRng(404)
        for s in range(20):
            fam = build_family(random_family(3, 4, root.derive(s)))
            for j in range(3):
                leak = honest_leakage(fam, j)
                assert 0.0 <= leak
                assert leak / (fam.k - 1) <= fam.m  # per non-target item

    def test_factorized_matches_dense_enumeration(self):
        # oracle: full joint-space posterior marginal, small sizes only
        for k, m in ((2, 1), (2, 2), (3, 1)):
            fam = build_family(random_family(k, m, SeededRng(7 * k + m)))
            n = fam.n
            for j in range(k):
                mat = honest_basis(fam, j).matrix
                total = 0.0
                for i in range(k):
                    probs = np.abs(mat @ fam.encoder(i)) ** 2  # rows: P(d | outcome)
                    shaped = probs.reshape((n,) + (1 << m,) * k)
                    marg = shaped.sum(axis=1 + j).reshape(n, -1)
                    total += entropy_rows(marg).mean()
                dense_leak = (k - 1) * m - total / k
                assert honest_leakage(fam, j) == pytest.approx(dense_leak, abs=1e-9)
