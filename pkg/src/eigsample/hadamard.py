"""Fast eigenvalue sketch for dense matrices via a randomized Hadamard rotation.

The matrix is zero-padded to a power of two ``m`` and conjugated by ``PHD``,
where ``D`` holds random signs, ``H`` is the orthonormal Walsh-Hadamard matrix
and ``P`` is a random permutation.  The rotation makes the row norms nearly
equal.  Because of that, the leading ``k x k`` minor acts like a row-norm
sample, and the row-norm zeroing decoder can be run on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ShapeError
from .matrix import EstimatorConfig, SpectrumEstimate, SymmetricMatrixOracle, clamped_log, pad_spectrum
from .rownorm import ZeroingRule


class OpCounter:
    """Tallies butterfly operations (one add/subtract pair each)."""

    def __init__(self):
        self.butterflies = 0


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def fwht(v, axis: int = 0, counter: OpCounter | None = None) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform along ``axis`` (self-inverse)."""
    a = np.moveaxis(np.array(v, dtype=np.float64), axis, 0)
    m = a.shape[0]
    if not _is_pow2(m):
        raise ShapeError(f"transform length {m} is not a power of two")
    rest = a.shape[1:]
    h = 1
    while h < m:
        a = a.reshape(m // (2 * h), 2, h, *rest)
        x0, x1 = a[:, 0], a[:, 1]
        a = np.stack((x0 + x1, x0 - x1), axis=1)
        h *= 2
    if counter is not None:
        counter.butterflies += (m // 2) * int(math.log2(m)) * int(np.prod(rest, dtype=np.int64))
    a = a.reshape(m, *rest) / math.sqrt(m)
    return np.moveaxis(a, 0, axis)


@dataclass(frozen=True)
class HadamardRotation:
    m: int
    signs: np.ndarray
    perm: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Dense ``PHD`` (for testing only)."""
        hd = fwht(np.diag(self.signs), axis=0)
        return hd[self.perm]


def make_rotation(n: int, rng) -> HadamardRotation:
    m = next_pow2(n)
    signs = rng.choice(np.array([-1.0, 1.0]), size=m)
    return HadamardRotation(m, signs, rng.permutation(m))


def conjugate(oracle: SymmetricMatrixOracle, rot: HadamardRotation, counter: OpCounter | None = None) -> np.ndarray:
    """``B = (PHD) A~ (PHD)^T`` with ``A~`` the zero-padded matrix."""
    n = oracle.n
    if not oracle.is_dense and n > oracle.cap:
        raise CapacityError(f"conjugation needs a dense matrix; n={n} exceeds cap {oracle.cap}")
    if rot.m < n:
        raise ShapeError("rotation smaller than the matrix")
    oracle.ledger.charge_all(n)
    padded = np.zeros((rot.m, rot.m))
    padded[:n, :n] = oracle.materialize()
    padded *= rot.signs[:, None]
    padded *= rot.signs[None, :]
    b = fwht(padded, axis=0, counter=counter)
    b = fwht(b, axis=1, counter=counter)
    b = b[np.ix_(rot.perm, rot.perm)]
    return 0.5 * (b + b.T)


def jl_row_norms(columns: np.ndarray, d: int, rng) -> np.ndarray:
    """Estimate column norms as ``||G b_j|| / sqrt(d)`` with ``G`` a ``d x m`` sign matrix."""
    if d < 1:
        raise ValueError("sketch dimension must be at least 1")
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim == 1:
        columns = columns[:, None]
    g = rng.choice(np.array([-1.0, 1.0]), size=(d, columns.shape[0]))
    return np.linalg.norm(g @ columns, axis=0) / math.sqrt(d)


@dataclass(frozen=True)
class SketchPayload:
    minor: np.ndarray
    row_norm_estimates: np.ndarray
    frob_norm: float
    m: int
    n: int


def sketch_size(m: int, epsilon: float, cfg: EstimatorConfig) -> int:
    """Leading-minor dimension, capped at ``m``."""
    if cfg.s_override is not None:
        return min(m, int(cfg.s_override))
    k = cfg.c_rownorm * clamped_log(m) ** 4 * clamped_log(1.0 / epsilon) ** 2 / epsilon ** 2
    return max(1, min(m, int(math.ceil(k))))


def build_sketch(oracle: SymmetricMatrixOracle, epsilon: float, cfg: EstimatorConfig, rng, mode: str = "jl_norms", jl_dim: int = 64) -> SketchPayload:
    if mode not in ("exact_norms", "jl_norms"):
        raise ValueError(f"unknown norm mode {mode!r}")
    rot = make_rotation(oracle.n, rng)
    b = conjugate(oracle, rot)
    k = sketch_size(rot.m, epsilon, cfg)
    if mode == "exact_norms":
        norms = np.linalg.norm(b[:, :k], axis=0)
    else:
        norms = jl_row_norms(b[:, :k], jl_dim, rng)
    return SketchPayload(b[:k, :k].copy(), norms, oracle.frobenius_norm(), rot.m, oracle.n)


def decode_sketch(payload: SketchPayload, epsilon: float, c_log: float = 1.0) -> np.ndarray:
    """Zero, rescale by ``m/k`` and return the length-``n`` spectrum estimate."""
    k = payload.minor.shape[0]
    frob_sq = payload.frob_norm ** 2
    if frob_sq == 0.0 or k == 0:
        return np.zeros(payload.n)
    rule = ZeroingRule(epsilon, c_log, payload.m)
    zeroed = rule.apply(payload.minor, payload.row_norm_estimates ** 2, frob_sq)
    eigs = np.linalg.eigvalsh(zeroed * (payload.m / k))
    return pad_spectrum(eigs, payload.n)


def sketch_spectrum(oracle: SymmetricMatrixOracle, epsilon: float, cfg: EstimatorConfig, rng=None, mode: str = "jl_norms", jl_dim: int = 64) -> SpectrumEstimate:
    """Additive ``epsilon * ||A||_F`` spectrum estimate from the rotated leading minor."""
    rng = cfg.rng() if rng is None else rng
    oracle.ledger.begin_run()
    payload = build_sketch(oracle, epsilon, cfg, rng, mode, jl_dim)
    return SpectrumEstimate(decode_sketch(payload, epsilon, cfg.c_log), sample_size=payload.minor.shape[0])


def flattening_ratio(b: np.ndarray, frob_sq: float) -> float:
    """``max_i ||B_i||^2 * m / ||A||_F^2``; near 1 when rows are flat."""
    m = b.shape[0]
    if frob_sq == 0.0:
        return 0.0
    return float(np.max(np.einsum("ij,ij->i", b, b)) * m / frob_sq)
