"""Deterministic synthetic test matrices with entries bounded by one.

Each kind is defined by a vectorized block function, so the dense backend is
literally the materialized implicit one and the two agree entrywise.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import ConfigError
from .matrix import SymmetricMatrixOracle

KINDS = ("all_ones", "identity", "sign_symmetric", "planted_rank_k", "psd_gram", "zero")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _pair_signs(seed: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    lo = np.minimum.outer(rows, cols).astype(np.uint64)
    hi = np.maximum.outer(rows, cols).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix(_splitmix(np.uint64(seed) ^ lo) ^ hi)
    return 1.0 - 2.0 * (h >> np.uint64(63)).astype(np.float64)


def _sign_vectors(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape, dtype=np.int8).astype(np.float64) * 2.0 - 1.0


def generate(
    kind: str,
    n: int,
    params: Optional[dict] = None,
    seed: int = 0,
    backend: str = "implicit",
) -> SymmetricMatrixOracle:
    """Build a synthetic symmetric matrix oracle.

    Parameters
    ----------
    kind
        One of ``all_ones``, ``identity``, ``sign_symmetric``,
        ``planted_rank_k`` (param ``k``), ``psd_gram`` (param ``m``), ``zero``.
    backend
        ``implicit`` (block function) or ``dense`` (materialized array).
    """
    params = dict(params or {})
    n = int(n)
    if n < 1:
        raise ConfigError("n must be positive", field="n")
    seed = int(seed)
    rng = np.random.default_rng(seed)
    row_fn = None
    frob_sq = None
    top = None

    if kind == "all_ones":
        def block(r, c):
            return np.ones((r.size, c.size))
        row_fn = lambda idx: np.full(idx.size, float(n))  # noqa: E731
        frob_sq = float(n) * n
        top = float(n)
    elif kind == "identity":
        def block(r, c):
            return (r[:, None] == c[None, :]).astype(np.float64)
        row_fn = lambda idx: np.ones(idx.size)  # noqa: E731
        frob_sq = float(n)
        top = 1.0
    elif kind == "zero":
        def block(r, c):
            return np.zeros((r.size, c.size))
        row_fn = lambda idx: np.zeros(idx.size)  # noqa: E731
        frob_sq = 0.0
        top = 0.0
    elif kind == "sign_symmetric":
        def block(r, c):
            return _pair_signs(seed, r, c)
        row_fn = lambda idx: np.full(idx.size, float(n))  # noqa: E731
        frob_sq = float(n) * n
    elif kind == "planted_rank_k":
        k = int(params.get("k", 1))
        if k < 1:
            raise ConfigError("planted_rank_k needs k >= 1", field="k")
        v = _sign_vectors(rng, (k, n))
        gram = v @ v.T

        def block(r, c):
            return v[:, r].T @ v[:, c] / k

        def row_fn(idx):
            vi = v[:, idx]
            return np.einsum("ti,tu,ui->i", vi, gram, vi) / (k * k)

        frob_sq = float(np.sum(gram * gram)) / (k * k)
        top = float(np.linalg.eigvalsh(gram)[-1]) / k
    elif kind == "psd_gram":
        m = int(params.get("m", 8))
        if m < 1:
            raise ConfigError("psd_gram needs m >= 1", field="m")
        w = _sign_vectors(rng, (n, m))
        wgram = w.T @ w

        def block(r, c):
            return w[r] @ w[c].T / m

        def row_fn(idx):
            wi = w[idx]
            return np.einsum("it,tu,iu->i", wi, wgram, wi) / (m * m)

        frob_sq = float(np.sum(wgram * wgram)) / (m * m)
        top = float(np.linalg.eigvalsh(wgram)[-1]) / m
    else:
        raise ConfigError(f"unknown matrix kind {kind!r}", field="kind")

    name = f"{kind}(n={n},seed={seed})"
    if backend == "dense":
        allc = np.arange(n)
        oracle = SymmetricMatrixOracle.from_dense(block(allc, allc), name=name)
    elif backend == "implicit":
        oracle = SymmetricMatrixOracle(n, block, backend="implicit", row_norm_sq_fn=row_fn, frobenius_sq=frob_sq, name=name)
    else:
        raise ConfigError(f"unknown backend {backend!r}", field="backend")
    oracle.top_eigenvalue = top
    return oracle
