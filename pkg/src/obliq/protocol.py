"""Vendor/user session engine: encode, measure, announce, decode, account.

The coherence-time rule is modeled as a strict logical event order: the
measurement must be committed to the transcript before the announced
encoding index becomes readable.  `TranscriptBuilder` enforces this
structurally, so no decoding path can peek at the announcement early.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .encodings import EncodingFamily
from .qmath import DEFAULT_TOL, SeededRng

TRANSCRIPT_VERSION = 1
_SUPPORT_EPS = 1e-12


# ---------------------------------------------------------------------------
# database state


@dataclass(frozen=True)
class DatabaseState:
    """k items of m bits each; item 0 occupies the most significant block."""

    k: int
    m: int
    items: tuple

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be >= 1")
        if len(self.items) != self.k:
            raise ValueError("item count does not match k")
        limit = 1 << self.m
        items = tuple(int(v) for v in self.items)
        for v in items:
            if not 0 <= v < limit:
                raise ValueError(f"item value {v} out of range [0, {limit})")
        object.__setattr__(self, "items", items)

    @property
    def config_index(self) -> int:
        d = 0
        for v in self.items:
            d = (d << self.m) | v
        return d

    @classmethod
    def from_index(cls, d: int, k: int, m: int) -> "DatabaseState":
        if not 0 <= d < 1 << (k * m):
            raise ValueError(f"configuration index {d} out of range")
        return cls(k, m, tuple(item_blocks(d, k, m)))


def item_blocks(d: int, k: int, m: int) -> list:
    """Split a configuration index into its k item values."""
    mask = (1 << m) - 1
    return [(d >> (m * (k - 1 - r))) & mask for r in range(k)]


# ---------------------------------------------------------------------------
# measurement bases


@dataclass(frozen=True)
class MeasurementBasis:
    """A projective basis, given by the rows of a unitary matrix.

    Bases built from Kronecker factors (optionally with a row relabeling)
    keep that structure so they apply in O(n log n) instead of O(n^2).
    """

    kind: str
    index: int | None
    dim: int
    factors: tuple | None = None
    row_map: np.ndarray | None = field(default=None, repr=False)
    dense: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.factors is None and self.dense is None:
            raise ValueError("a basis needs factors or a dense matrix")
        if self.dense is not None:
            mat = qmath.as_operator(self.dense)
            if mat.shape[0] != self.dim:
                raise ValueError("dense matrix does not match dim")
            if not qmath.is_unitary(mat, DEFAULT_TOL):
                raise ValueError("measurement matrix is not unitary")
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, "dense", mat)

    @property
    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        mat = qmath.kron_chain(self.factors)
        if self.row_map is not None:
            mat = mat[self.row_map, :]
        return mat

    def apply(self, state: np.ndarray) -> np.ndarray:
        """M @ state."""
        if self.dense is not None:
            return self.dense @ state
        out = qmath.kron_apply(self.factors, state)
        if self.row_map is not None:
            out = out[self.row_map]
        return out

    def row(self, j: int) -> np.ndarray:
        if not 0 <= j < self.dim:
            raise ValueError(f"outcome index {j} out of range")
        if self.dense is not None:
            return self.dense[j]
        jj = int(self.row_map[j]) if self.row_map is not None else j
        # row jj of a Kronecker chain is the chain of factor rows, with the
        # factor row indices given by the mixed-radix digits of jj
        digits = []
        rem = jj
        for f in reversed(self.factors):
            rem, digit = divmod(rem, f.shape[0])
            digits.append(digit)
        row = np.ones(1, dtype=complex)
        for f, b in zip(self.factors, reversed(digits)):
            row = np.kron(row, f[b])
        return row

    def label(self) -> dict:
        return {"kind": self.kind, "index": self.index}


def honest_basis(family: EncodingFamily, j: int) -> MeasurementBasis:
    """M_j: the k-fold tensor power of A_j^dag."""
    if not 0 <= j < family.k:
        raise ValueError(f"choice {j} out of range for k={family.k}")
    adj = family.basis.matrices[j].conj().T
    return MeasurementBasis(
        kind="honest", index=j, dim=family.n, factors=(adj,) * family.k
    )


def invert_basis(family: EncodingFamily, guess: int) -> MeasurementBasis:
    """E_guess^dag: pays off fully when the guess matches the announcement."""
    if not 0 <= guess < family.k:
        raise ValueError(f"guess {guess} out of range for k={family.k}")
    factors = tuple(a.conj().T for a in family.factors(guess))
    row_map = qmath.rotation_index_map(family.k, family.m, guess)
    return MeasurementBasis(
        kind="invert", index=guess, dim=family.n, factors=factors, row_map=row_map
    )


def parity_basis() -> MeasurementBasis:
    """The XOR-revealing basis for the k=2, m=1 scheme.

    Outcomes 0 and 1 land in a single parity class of the database once the
    encoding is announced; the remaining outcomes refine the odd class.
    """
    rows = np.array(
        [
            [1, 1, 1, -1],
            [1, 1, -1, 1],
            [np.sqrt(2), -np.sqrt(2), 0, 0],
            [0, 0, np.sqrt(2), np.sqrt(2)],
        ],
        dtype=complex,
    ) / 2.0
    return MeasurementBasis(kind="parity", index=None, dim=4, dense=rows)


def custom_basis(matrix: np.ndarray) -> MeasurementBasis:
    mat = qmath.as_operator(matrix)
    return MeasurementBasis(kind="custom", index=None, dim=mat.shape[0], dense=mat)


# ---------------------------------------------------------------------------
# core operations


def vendor_encode(db: DatabaseState, family: EncodingFamily, i: int) -> np.ndarray:
    """The transmitted state: column `db.config_index` of E_i."""
    if db.k != family.k or db.m != family.m:
        raise ValueError("database shape does not match the family")
    if not 0 <= i < family.k:
        raise ValueError(f"encoding index {i} out of range")
    return family.encode_column(i, db.config_index)


def outcome_distribution(state: np.ndarray, basis: MeasurementBasis) -> np.ndarray:
    """P(j) = |(M state)_j|^2."""
    v = qmath.as_state(state)
    if v.size != basis.dim:
        raise ValueError(f"dimension mismatch: state {v.size}, basis {basis.dim}")
    p = np.abs(basis.apply(v)) ** 2
    return p / p.sum()


def sample_outcome(state: np.ndarray, basis: MeasurementBasis, rng: SeededRng) -> int:
    """Draw one outcome index from the measurement distribution."""
    return _sample_index(outcome_distribution(state, basis), rng.gen)


def _sample_index(dist: np.ndarray, gen: np.random.Generator) -> int:
    cum = np.cumsum(dist)
    j = int(np.searchsorted(cum, gen.random(), side="right"))
    return min(j, dist.size - 1)


def posterior(
    basis: MeasurementBasis,
    family: EncodingFamily,
    i: int,
    j: int,
    prior: np.ndarray | None = None,
) -> np.ndarray:
    """P(d | outcome j, announced i) by Bayes' rule.

    With the uniform prior this is exactly row j of |M E_i|^2, since the
    normalizing sum is 1 by unitarity.
    """
    if not 0 <= i < family.k:
        raise ValueError(f"encoding index {i} out of range")
    amps = family.vec_times_encoder(basis.row(j), i)
    lik = np.abs(amps) ** 2
    if prior is None:
        weighted = lik
    else:
        weighted = lik * qmath.as_distribution(prior)
    total = weighted.sum()
    if total < 1e-15:
        raise ValueError("conditioning on a zero-probability outcome")
    return weighted / total


@dataclass(frozen=True)
class InfoAccount:
    """Per-outcome entropy table and the information-gain summaries (bits)."""

    h_cond: np.ndarray  # shape (n_outcomes, k); entry [j, i] = H(P(.|j,i))
    h_avg: np.ndarray  # mean over i
    gain_worst: float  # max over outcomes of log n - h_avg[j]
    gain_expected: float  # outcome-weighted mean gain (weights 1/n)


def info_account(
    basis: MeasurementBasis,
    family: EncodingFamily,
    prior: np.ndarray | None = None,
) -> InfoAccount:
    """Entropy accounting of a measurement against every encoding choice.

    Only the uniform prior is supported; the averaging weights below are a
    consequence of unitarity under that prior and are re-checked at runtime.
    """
    n, k = family.n, family.k
    if prior is not None:
        pr = qmath.as_distribution(prior)
        if np.abs(pr - 1.0 / n).max() > DEFAULT_TOL:
            raise ValueError("unsupported prior: info_account requires the uniform prior")
    mat = basis.matrix
    h_cond = np.empty((n, k))
    for i in range(k):
        probs = np.abs(mat @ family.encoder(i)) ** 2
        row_sums = probs.sum(axis=1)
        # P(i | j) = 1/k for every outcome, i.e. unit row sums
        if np.abs(row_sums - 1.0).max() > 1e-9:
            raise AssertionError("row sums deviate from 1; encoder not unitary?")
        h_cond[:, i] = qmath.entropy_rows(probs)
    h_avg = h_cond.mean(axis=1)
    log_n = float(np.log2(n))
    gains = log_n - h_avg
    return InfoAccount(
        h_cond=h_cond,
        h_avg=h_avg,
        gain_worst=float(gains.max()),
        gain_expected=float(gains.mean()),
    )


def decode_item(outcome: int, announced: int, chosen: int, k: int, m: int) -> int:
    """Item value read from the honest measurement outcome.

    The chosen item sits in block (chosen - announced) mod k of the outcome
    index, counting blocks from the most significant end.
    """
    block = (chosen - announced) % k
    return item_blocks(outcome, k, m)[block]


def honest_leakage(family: EncodingFamily, j: int) -> float:
    """Expected information (bits) an honest chooser of item j gains about the rest.

    Under honest measurement the posterior over the permuted configuration
    factorizes per item block, so the computation reduces to mean row
    entropies of the small cross products A_j^dag A_i; this stays exact for
    any k*m, with no joint-space matrices.
    """
    if not 0 <= j < family.k:
        raise ValueError(f"choice {j} out of range")
    k, m = family.k, family.m
    mats = family.basis.matrices
    adj = mats[j].conj().T
    mean_marginal = 0.0
    for i in range(k):
        target = (j - i) % k
        for r in range(k):
            if r == target:
                continue
            cross = np.abs(adj @ mats[(i + r) % k]) ** 2
            mean_marginal += float(qmath.entropy_rows(cross).mean())
    mean_marginal /= k
    return (k - 1) * m - mean_marginal


# ---------------------------------------------------------------------------
# transcripts


class SessionOrderError(RuntimeError):
    """An event was requested out of the enforced protocol order."""


class TranscriptBuilder:
    """Event log that refuses to reveal the encoding before measurement."""

    def __init__(self, secret_encoding: int):
        self.__secret = int(secret_encoding)
        self._events = []
        self._state_sent = False
        self._measured = False
        self._announced = None

    def _push(self, kind: str, payload: dict):
        self._events.append({"seq": len(self._events), "type": kind, **payload})

    def record_state_sent(self, dim: int):
        if self._state_sent:
            raise SessionOrderError("state already sent")
        self._state_sent = True
        self._push("state_sent", {"dim": dim})

    def record_measurement(self, basis_label: dict, outcome: int):
        if not self._state_sent:
            raise SessionOrderError("cannot measure before the state is sent")
        if self._measured:
            raise SessionOrderError("measurement already committed")
        self._measured = True
        self._push("measurement_committed", {"basis": basis_label, "outcome": int(outcome)})

    def announce(self, extra: dict | None = None) -> int:
        if not self._measured:
            raise SessionOrderError("the encoding is announced only after measurement")
        if self._announced is not None:
            raise SessionOrderError("encoding already announced")
        self._announced = self.__secret
        payload = {"i": self._announced}
        if extra:
            payload.update(extra)
        self._push("encoding_announced", payload)
        return self._announced

    @property
    def announced(self) -> int:
        if self._announced is None:
            raise SessionOrderError("the encoding is announced only after measurement")
        return self._announced

    def record_decoded(self, payload: dict):
        if self._announced is None:
            raise SessionOrderError("cannot decode before the announcement")
        self._push("decoded", {"value": payload})

    @property
    def events(self) -> list:
        return list(self._events)


@dataclass(frozen=True)
class SessionTranscript:
    """One full protocol session, serializable to the versioned JSON schema."""

    k: int
    m: int
    family: dict
    prior: str
    events: tuple
    outcome: int
    announced: int
    posterior: tuple
    decoded: dict
    seed: tuple

    def to_dict(self) -> dict:
        return {
            "version": TRANSCRIPT_VERSION,
            "k": self.k,
            "m": self.m,
            "family": self.family,
            "prior": self.prior,
            "events": list(self.events),
            "outcome": self.outcome,
            "announced": self.announced,
            "posterior": list(self.posterior),
            "decoded": self.decoded,
            "seed": list(self.seed),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def run_session(
    db: DatabaseState,
    family: EncodingFamily,
    strategy: MeasurementBasis,
    rng: SeededRng,
) -> SessionTranscript:
    """Execute encode -> transmit -> measure -> announce -> decode."""
    return _run_session(db, family, strategy, rng, mask=None)


def _run_session(db, family, strategy, rng, mask):
    if strategy.dim != family.n:
        raise ValueError("strategy dimension does not match the family")
    gen = rng.gen
    i = int(gen.integers(family.k))

    builder = TranscriptBuilder(secret_encoding=i)
    state = vendor_encode(db, family, i)
    builder.record_state_sent(family.n)

    # the measurement step sees only the state, never the encoding index
    dist = outcome_distribution(state, strategy)
    outcome = _sample_index(dist, gen)
    builder.record_measurement(strategy.label(), outcome)

    extra = {"mask": mask.payload()} if mask is not None else None
    announced = builder.announce(extra)

    post = posterior(strategy, family, announced, outcome)
    decoded = _decode(strategy, family, outcome, announced, post, mask)
    builder.record_decoded(decoded)

    return SessionTranscript(
        k=family.k,
        m=family.m,
        family=family.descriptor(),
        prior="uniform",
        events=tuple(builder.events),
        outcome=outcome,
        announced=announced,
        posterior=tuple(float(p) for p in post),
        decoded=decoded,
        seed=(rng.seed, rng.stream),
    )


def _decode(strategy, family, outcome, announced, post, mask):
    k, m = family.k, family.m
    if strategy.kind == "honest":
        raw = decode_item(outcome, announced, strategy.index, k, m)
        value = mask.unmask(raw) if mask is not None else raw
        return {"kind": "item", "index": strategy.index, "value": int(value)}
    if strategy.kind == "invert":
        if announced == strategy.index:
            d = int(np.argmax(post))
            if post[d] < 1.0 - 1e-9:
                raise AssertionError("matched invert guess should pin the configuration")
            raw_items = item_blocks(d, k, m)
            items = [int(mask.unmask(v)) if mask is not None else int(v) for v in raw_items]
            value = 0
            for v in items:
                value = (value << m) | v
            return {"kind": "config", "value": value, "items": items}
        return {"kind": "none"}
    if strategy.kind == "parity":
        support = np.flatnonzero(np.asarray(post) > _SUPPORT_EPS)
        parities = {int(d >> 1 & 1) ^ int(d & 1) for d in support}
        if len(parities) == 1:
            return {"kind": "parity", "value": parities.pop()}
        return {"kind": "none"}
    return {"kind": "none"}
