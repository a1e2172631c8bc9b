"""Query-counted access to symmetric matrices, plus the exact spectral reference.

Every estimator in the package reads matrix entries through a
:class:`SymmetricMatrixOracle`.  The oracle charges each logical entry query
to a :class:`QueryLedger` so sample complexity can be measured directly.
The pair ``(i, j)`` and its mirror ``(j, i)`` are one logical query, and a
query repeated inside one estimator run is only charged once.
"""
from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, ConfigError, ShapeError

DEFAULT_CAP = 8192
SYMMETRY_TOL = 1e-12

BlockFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def clamped_log(x: float) -> float:
    """Natural log with the argument clamped below at e, so the result is >= 1."""
    return math.log(max(float(x), math.e))


def derive_seed(base_seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for trial ``index``."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class QueryLedger:
    """Counts entry and row-norm queries.

    Counters only grow.  ``begin_run`` starts a new deduplication scope; the
    counts are never reset.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.entry_queries = 0
        self.row_norm_queries = 0
        self._seen = np.empty(0, dtype=np.int64)
        self._seen_rows = np.empty(0, dtype=np.int64)
        self._all_seen = False

    def begin_run(self) -> None:
        with self._lock:
            self._seen = np.empty(0, dtype=np.int64)
            self._seen_rows = np.empty(0, dtype=np.int64)
            self._all_seen = False

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self.entry_queries, self.row_norm_queries

    def _charge_keys(self, keys: np.ndarray) -> int:
        keys = np.unique(keys)
        with self._lock:
            if self._all_seen:
                return 0
            fresh = np.setdiff1d(keys, self._seen, assume_unique=True)
            if fresh.size:
                self._seen = np.union1d(self._seen, fresh)
                self.entry_queries += int(fresh.size)
            return int(fresh.size)

    def charge_pairs(self, n: int, rows, cols) -> int:
        """Charge the elementwise pairs ``(rows[t], cols[t])``."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        return self._charge_keys(lo * n + hi)

    def charge_block(self, n: int, rows, cols) -> int:
        """Charge every pair in ``rows x cols``."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.size == 0 or cols.size == 0:
            return 0
        lo = np.minimum.outer(rows, cols)
        hi = np.maximum.outer(rows, cols)
        return self._charge_keys((lo * n + hi).ravel())

    def charge_all(self, n: int) -> int:
        """Charge a full pass over the matrix (e.g. a matrix-vector product)."""
        with self._lock:
            if self._all_seen:
                return 0
            fresh = n * (n + 1) // 2 - int(self._seen.size)
            self.entry_queries += fresh
            self._all_seen = True
            self._seen = np.empty(0, dtype=np.int64)
            return fresh

    def charge_row_norms(self, idx) -> int:
        idx = np.unique(np.asarray(idx, dtype=np.int64).ravel())
        with self._lock:
            fresh = np.setdiff1d(idx, self._seen_rows, assume_unique=True)
            if fresh.size:
                self._seen_rows = np.union1d(self._seen_rows, fresh)
                self.row_norm_queries += int(fresh.size)
            return int(fresh.size)


class SymmetricMatrixOracle:
    """Entry-query access to a symmetric ``n x n`` matrix.

    The dense backend wraps an array.  The implicit backend wraps a block
    function ``f(rows, cols) -> A[rows][:, cols]`` that must be symmetric by
    construction; it lets ``n`` reach 10**6 without materializing anything.
    Closed-form row norms and Frobenius norm may be supplied for implicit
    matrices; otherwise they are computed from full rows.
    """

    def __init__(
        self,
        n: int,
        block_fn: BlockFn,
        *,
        backend: str = "implicit",
        row_norm_sq_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        frobenius_sq: Optional[float] = None,
        dense: Optional[np.ndarray] = None,
        cap: int = DEFAULT_CAP,
        name: str = "matrix",
    ):
        if n < 1:
            raise ConfigError("matrix dimension must be positive", field="n")
        self.n = int(n)
        self._block_fn = block_fn
        self.backend = backend
        self._row_norm_sq_fn = row_norm_sq_fn
        self._frobenius_sq = frobenius_sq
        self._dense = dense
        self._row_norm_cache: Optional[np.ndarray] = None
        self.cap = cap
        self.name = name
        self.ledger = QueryLedger()
        # known largest eigenvalue, when a generator can supply it in closed form
        self.top_eigenvalue: Optional[float] = None

    @classmethod
    def from_dense(cls, a, *, tol: float = SYMMETRY_TOL, name: str = "dense"):
        """Wrap a dense array after checking symmetry and symmetrizing."""
        a = np.array(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if asym > tol * scale:
            raise ShapeError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)

        def block(rows, cols):
            return a[np.ix_(rows, cols)]

        return cls(a.shape[0], block, backend="dense", dense=a, cap=max(DEFAULT_CAP, a.shape[0]), name=name)

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    def _check_index(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError(f"index out of range for n={self.n}")
        return idx

    def entry(self, i: int, j: int) -> float:
        i, j = int(i), int(j)
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"entry ({i}, {j}) out of range for n={self.n}")
        self.ledger.charge_pairs(self.n, [i], [j])
        return float(self._block_fn(np.array([i]), np.array([j]))[0, 0])

    def block(self, rows, cols, *, charge: bool = True) -> np.ndarray:
        rows = self._check_index(rows).ravel()
        cols = self._check_index(cols).ravel()
        if charge:
            self.ledger.charge_block(self.n, rows, cols)
        if rows.size == 0 or cols.size == 0:
            return np.zeros((rows.size, cols.size))
        return np.asarray(self._block_fn(rows, cols), dtype=np.float64)

    def principal_submatrix(self, idx) -> np.ndarray:
        sub = self.block(idx, idx)
        return 0.5 * (sub + sub.T)

    def columns(self, cols) -> np.ndarray:
        """Return ``A[:, cols]`` (an ``n x m`` array)."""
        return self.block(np.arange(self.n), cols)

    def row_norms_sq(self, idx=None) -> np.ndarray:
        """Squared row norms for ``idx`` (all rows if None); charged as row-norm queries."""
        idx = np.arange(self.n) if idx is None else self._check_index(idx).ravel()
        self.ledger.charge_row_norms(idx)
        if self._row_norm_cache is not None:
            return self._row_norm_cache[idx]
        if self._dense is not None:
            self._row_norm_cache = np.einsum("ij,ij->i", self._dense, self._dense)
            return self._row_norm_cache[idx]
        if self._row_norm_sq_fn is not None:
            return np.asarray(self._row_norm_sq_fn(idx), dtype=np.float64)
        out = np.empty(idx.size)
        allc = np.arange(self.n)
        chunk = max(1, (1 << 22) // self.n)
        for start in range(0, idx.size, chunk):
            rows = idx[start:start + chunk]
            blk = self._block_fn(rows, allc)
            out[start:start + chunk] = np.einsum("ij,ij->i", blk, blk)
        return out

    def row_norm(self, i: int) -> float:
        return float(math.sqrt(self.row_norms_sq([i])[0]))

    def frobenius_norm(self) -> float:
        if self._frobenius_sq is None:
            if self._dense is not None:
                self._frobenius_sq = float(np.sum(self._dense * self._dense))
            else:
                self._row_norm_cache = self._all_row_norms_uncharged()
                self._frobenius_sq = float(self._row_norm_cache.sum())
        return math.sqrt(self._frobenius_sq)

    def _all_row_norms_uncharged(self) -> np.ndarray:
        if self._row_norm_sq_fn is not None:
            return np.asarray(self._row_norm_sq_fn(np.arange(self.n)), dtype=np.float64)
        out = np.empty(self.n)
        allc = np.arange(self.n)
        chunk = max(1, (1 << 22) // self.n)
        for start in range(0, self.n, chunk):
            rows = allc[start:start + chunk]
            blk = self._block_fn(rows, allc)
            out[start:start + chunk] = np.einsum("ij,ij->i", blk, blk)
        return out

    def matvec(self, x) -> np.ndarray:
        """``A @ x``; charged as a full pass over the matrix."""
        x = np.asarray(x, dtype=np.float64)
        self.ledger.charge_all(self.n)
        if self._dense is not None:
            return self._dense @ x
        out = np.empty(self.n)
        allc = np.arange(self.n)
        chunk = max(1, (1 << 22) // self.n)
        for start in range(0, self.n, chunk):
            rows = allc[start:start + chunk]
            out[start:start + chunk] = self._block_fn(rows, allc) @ x
        return out

    def materialize(self) -> np.ndarray:
        """Full dense copy, not charged to the ledger (reference computations only)."""
        if self._dense is not None:
            return np.array(self._dense)
        if self.n > self.cap:
            raise CapacityError(f"n={self.n} exceeds materialization cap {self.cap}")
        allc = np.arange(self.n)
        a = np.asarray(self._block_fn(allc, allc), dtype=np.float64)
        return 0.5 * (a + a.T)


def query_entry(oracle: SymmetricMatrixOracle, i: int, j: int) -> float:
    return oracle.entry(i, j)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Eigenvalue estimates sorted in descending order."""

    values: np.ndarray
    sample_size: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size

    @classmethod
    def from_eigenvalues(cls, eigs, n: int, sample_size: Optional[int] = None) -> "SpectrumEstimate":
        return cls(pad_spectrum(eigs, n), sample_size=sample_size)


def pad_spectrum(eigs, n: int) -> np.ndarray:
    """Pad ``eigs`` with zeros to length ``n`` and sort descending.

    If there are more than ``n`` values, the ones of smallest magnitude are
    dropped instead.
    """
    eigs = np.asarray(eigs, dtype=np.float64).ravel()
    if eigs.size > n:
        keep = np.sort(np.argsort(np.abs(eigs), kind="stable")[eigs.size - n:])
        eigs = eigs[keep]
    out = np.concatenate([eigs, np.zeros(n - eigs.size)])
    return np.sort(out)[::-1]


def exact_spectrum(oracle) -> SpectrumEstimate:
    """All eigenvalues by dense symmetric eigendecomposition, descending."""
    if isinstance(oracle, SymmetricMatrixOracle):
        if not oracle.is_dense and oracle.n > oracle.cap:
            raise CapacityError(f"n={oracle.n} exceeds materialization cap {oracle.cap}")
        a = oracle.materialize()
    else:
        a = np.asarray(oracle, dtype=np.float64)
    return SpectrumEstimate(np.linalg.eigvalsh(a)[::-1].copy())


def spectrum_error(est, ref) -> float:
    """Largest positionwise gap between two sorted spectra."""
    e = np.asarray(est, dtype=np.float64).ravel()
    r = np.asarray(ref, dtype=np.float64).ravel()
    if e.shape != r.shape:
        raise ShapeError(f"spectrum lengths differ: {e.size} vs {r.size}")
    if e.size == 0:
        return 0.0
    return float(np.max(np.abs(e - r)))


@dataclass(frozen=True)
class EstimatorConfig:
    """Accuracy target and constants shared by the estimators.

    ``c_sample`` scales the uniform sample size; ``c_rownorm`` scales the
    polylogarithmic row-norm sample size; ``c_log`` is the off-diagonal
    zeroing constant.
    """

    epsilon: float
    delta: float = 0.5
    s_override: Optional[int] = None
    c_sample: float = 40.0
    c_log: float = 1.0
    seed: int = 0
    c_rownorm: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)", field="epsilon")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)", field="delta")
        if self.s_override is not None and int(self.s_override) < 1:
            raise ConfigError("s must be a positive integer", field="s")
        for name in ("c_sample", "c_log", "c_rownorm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", field=name)
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", field="seed")

    def uniform_sample_size(self) -> int:
        if self.s_override is not None:
            return int(self.s_override)
        e, d = self.epsilon, self.delta
        return int(math.ceil(self.c_sample / (e * e * d) * clamped_log(1.0 / (e * d))))

    def rownorm_sample_size(self, n: int) -> int:
        if self.s_override is not None:
            return int(self.s_override)
        e = self.epsilon
        return max(1, int(math.ceil(self.c_rownorm * clamped_log(n) ** 4 * clamped_log(1.0 / e) ** 2 / (e * e))))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(int(self.seed))


# --- file formats -----------------------------------------------------------


def save_text(path, a) -> None:
    a = np.asarray(a, dtype=np.float64)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(" ".join(repr(float(x)) for x in row))
            fh.write("\n")


def load_text(path) -> SymmetricMatrixOracle:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ShapeError("empty matrix file")
    n = int(tokens[0])
    vals = tokens[1:]
    if len(vals) != n * n:
        raise ShapeError(f"expected {n * n} values after n={n}, found {len(vals)}")
    a = np.array([float(v) for v in vals]).reshape(n, n)
    return SymmetricMatrixOracle.from_dense(a, name=Path(path).name)


def save_binary(path, a) -> None:
    a = np.ascontiguousarray(a, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", a.shape[0]))
        fh.write(a.tobytes(order="C"))


def load_binary(path) -> SymmetricMatrixOracle:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ShapeError("binary matrix file shorter than its header")
    (n,) = struct.unpack("<Q", raw[:8])
    if len(raw) != 8 + 8 * n * n:
        raise ShapeError(f"binary payload size does not match n={n}")
    a = np.frombuffer(raw, dtype="<f8", offset=8).reshape(n, n)
    return SymmetricMatrixOracle.from_dense(a, name=Path(path).name)


def load_matrix(path) -> SymmetricMatrixOracle:
    """Load by extension: ``.bin`` is binary, anything else is text."""
    if str(path).endswith(".bin"):
        return load_binary(path)
    return load_text(path)
