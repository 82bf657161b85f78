"""Dense complex linear algebra, entropy functionals, permutations, seeded RNG.

Conventions shared by the whole package:

* Kronecker products put the FIRST factor in the most significant index
  position (this is exactly ``numpy.kron``).
* A database configuration index packs item 0 into the most significant
  m-bit block.
* Entropies are base 2, with ``0 * log 0 == 0``.
* Certification tolerance defaults to 1e-9 in max-entry norm.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-9

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class SeededRng:
    """Counter-based random source; (seed, stream) fully determine the draws.

    Derived streams are stable across runs, so parallel trials can each own
    a child stream without coordination.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, index: int) -> "SeededRng":
        """Child stream number `index` of this stream."""
        mixed = _splitmix64(self.stream ^ ((int(index) + 1) * _GOLDEN & _MASK64))
        return SeededRng(self.seed, mixed)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


# ---------------------------------------------------------------------------
# matrices and states


def as_operator(mat) -> np.ndarray:
    """Coerce to a square, finite complex matrix."""
    m = np.asarray(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    return m


def as_state(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coerce to a unit complex vector (L2 norm 1 within `tol`)."""
    v = np.asarray(u, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state norm {norm} deviates from 1 beyond {tol}")
    return v


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with the first factor most significant."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("tensor factors must be finite")
    return np.kron(a, b)


def kron_chain(factors) -> np.ndarray:
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def kron_apply(factors, vec: np.ndarray) -> np.ndarray:
    """Apply (F_0 x F_1 x ... x F_{k-1}) to `vec` without forming the product."""
    dims = [f.shape[0] for f in factors]
    t = np.asarray(vec, dtype=complex).reshape(dims)
    for axis, f in enumerate(factors):
        t = np.moveaxis(np.tensordot(t, np.asarray(f, complex).T, axes=(axis, 0)), -1, axis)
    return t.reshape(-1)


def vec_kron_apply(vec: np.ndarray, factors) -> np.ndarray:
    """Row-vector product vec @ (F_0 x F_1 x ... x F_{k-1})."""
    dims = [f.shape[0] for f in factors]
    t = np.asarray(vec, dtype=complex).reshape(dims)
    for axis, f in enumerate(factors):
        t = np.moveaxis(np.tensordot(t, np.asarray(f, complex), axes=(axis, 0)), -1, axis)
    return t.reshape(-1)


def is_unitary(mat, tol: float = DEFAULT_TOL) -> bool:
    """True iff max-entry magnitude of (M^dag M - I) is at most `tol`."""
    m = as_operator(mat)
    gram = m.conj().T @ m
    return bool(np.abs(gram - np.eye(m.shape[0])).max() <= tol)


def is_hadamard(mat, tol: float = DEFAULT_TOL) -> bool:
    """True iff `mat` is unitary and every entry has magnitude 1/sqrt(n)."""
    m = as_operator(mat)
    n = m.shape[0]
    flat = 1.0 / np.sqrt(n)
    if np.abs(np.abs(m) - flat).max() > tol:
        return False
    return is_unitary(m, tol)


def linf_overlap(a, b) -> float:
    """Maximum entry magnitude of the matrix product a @ b."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a @ b).max())


# ---------------------------------------------------------------------------
# probability and entropy


def as_distribution(p, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coerce to a probability vector (nonnegative, sums to 1 within `tol`)."""
    q = np.asarray(p, dtype=float)
    if q.ndim != 1:
        raise ValueError(f"expected a probability vector, got shape {q.shape}")
    if q.min() < -1e-12:
        raise ValueError(f"negative probability {q.min()}")
    total = q.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"probabilities sum to {total}, not 1")
    return np.clip(q, 0.0, None)


def shannon_entropy(p) -> float:
    """Base-2 entropy of a probability vector, in bits."""
    q = as_distribution(p)
    nz = q[q > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Base-2 entropy along the last axis; rows are trusted, not validated."""
    p = np.asarray(p, dtype=float)
    logs = np.zeros_like(p)
    np.log2(p, out=logs, where=p > 0.0)
    return -(p * logs).sum(axis=-1)


def h2(u) -> float:
    """Entropy of the squared-magnitude distribution of a unit vector."""
    v = as_state(u)
    return float(entropy_rows(np.abs(v) ** 2))


# ---------------------------------------------------------------------------
# Haar sampling


def haar_unitaries(dim: int, count: int, rng: SeededRng) -> np.ndarray:
    """Stack of `count` Haar-distributed dim x dim unitaries.

    QR of a complex standard-Gaussian matrix, with the R diagonal phase
    pulled into Q so the distribution is exactly Haar.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    g = rng.gen
    z = g.standard_normal((count, dim, dim)) + 1j * g.standard_normal((count, dim, dim))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.einsum("...ii->...i", r)
    q = q * (d / np.abs(d))[:, None, :]
    return q


def haar_unitary(dim: int, rng: SeededRng) -> np.ndarray:
    """One Haar-distributed dim x dim unitary."""
    return haar_unitaries(dim, 1, rng)[0]


def random_states(dim: int, count: int, rng: SeededRng) -> np.ndarray:
    """Stack of `count` Haar-uniform unit vectors of dimension `dim`."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    g = rng.gen
    z = g.standard_normal((count, dim)) + 1j * g.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_state(dim: int, rng: SeededRng) -> np.ndarray:
    return random_states(dim, 1, rng)[0]


# ---------------------------------------------------------------------------
# block permutations of configuration indices


def rotation_index_map(k: int, m: int, i: int) -> np.ndarray:
    """Index map sending blocks (d_0..d_{k-1}) to (d_i..d_{k-1} d_0..d_{i-1})."""
    if not 0 <= i < k:
        raise ValueError(f"rotation offset {i} out of range for k={k}")
    n = 1 << (k * m)
    d = np.arange(n)
    mask = (1 << m) - 1
    blocks = [(d >> (m * (k - 1 - r))) & mask for r in range(k)]
    rotated = blocks[i:] + blocks[:i]
    out = np.zeros(n, dtype=np.int64)
    for r, block in enumerate(rotated):
        out |= block << (m * (k - 1 - r))
    return out


def rotation_permutation(k: int, m: int, i: int) -> np.ndarray:
    """0/1 matrix P with P e_d = e_{rot_i(d)} (left block rotation by i)."""
    rot = rotation_index_map(k, m, i)
    n = rot.size
    p = np.zeros((n, n))
    p[rot, np.arange(n)] = 1.0
    return p
