"""Approximate top eigenvector of a bounded-entry PSD matrix from sampled columns.

Columns are kept independently with probability ``p = c/(epsilon*n)``.
From ``C = AS`` the two Gram matrices ``S^T A S`` and ``S^T A^2 S = C^T C``
are formed.  Their generalized Rayleigh quotient is maximized over the
sample space, and the maximizer is pushed through ``A`` once more:
``u = ASx / ||ASx||``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSampleError
from .matrix import SymmetricMatrixOracle

MAX_RETRIES = 3


@dataclass(frozen=True)
class ColumnSample:
    columns: np.ndarray
    p: float

    def __len__(self):
        return int(self.columns.size)


@dataclass(frozen=True)
class GramPair:
    g1: np.ndarray  # S^T A S
    g2: np.ndarray  # S^T A^2 S
    cols: Optional[np.ndarray] = None  # C = AS, kept for forming u


@dataclass(frozen=True)
class TopEigenvector:
    u: np.ndarray
    rq: float
    quotient: float
    sample: ColumnSample
    attempts: int


def draw_columns(n: int, p: float, rng) -> ColumnSample:
    if not 0.0 < p <= 1.0:
        raise ValueError("column probability must lie in (0, 1]")
    if p >= 1.0:
        return ColumnSample(np.arange(n), 1.0)
    return ColumnSample(np.flatnonzero(rng.random(n) < p), float(p))


def build_gram_pair(oracle: SymmetricMatrixOracle, sample: ColumnSample) -> GramPair:
    """Fetch the sampled columns and form both Gram matrices."""
    if len(sample) == 0:
        raise DegenerateSampleError("column sample is empty")
    c = oracle.columns(sample.columns)
    g1 = c[sample.columns, :]
    g2 = c.T @ c
    return GramPair(0.5 * (g1 + g1.T), 0.5 * (g2 + g2.T), c)


def max_generalized_rayleigh(pair: GramPair, rank_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Maximize ``x^T G2 x / x^T G1 x`` over the range of ``G1``.

    ``G1`` is eigendecomposed, directions below ``rank_tol`` times its largest
    eigenvalue are dropped, and ``G2`` is whitened in the remaining basis.
    Returns a unit-norm maximizer and the attained quotient.
    """
    vals, vecs = np.linalg.eigh(pair.g1)
    top = vals[-1] if vals.size else 0.0
    if top <= 0.0:
        raise DegenerateSampleError("S^T A S is numerically zero")
    keep = vals > rank_tol * top
    basis = vecs[:, keep] / np.sqrt(vals[keep])
    white = basis.T @ pair.g2 @ basis
    wvals, wvecs = np.linalg.eigh(0.5 * (white + white.T))
    x = basis @ wvecs[:, -1]
    x /= np.linalg.norm(x)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    value = float(x @ pair.g2 @ x) / float(x @ pair.g1 @ x)
    return x, value


def top_eigenvector(
    oracle: SymmetricMatrixOracle,
    epsilon: float,
    c_col: float = 10.0,
    rng=None,
    *,
    rank_tol: float = 1e-10,
    evaluate: bool = True,
    check_psd: bool = False,
) -> TopEigenvector:
    """Unit ``u`` with ``u^T A u >= lambda_1 - epsilon * n`` with probability 3/4.

    ``rq`` is ``u^T A u`` from one extra matrix-vector product, which is
    charged to the ledger.  Pass ``evaluate=False`` to skip it; ``rq`` is then NaN.
    Raises :class:`DegenerateSampleError` when three draws in a row are
    empty, or when the sampled Gram matrix is zero.
    """
    rng = np.random.default_rng() if rng is None else rng
    n = oracle.n
    if check_psd and n <= 512:
        if np.linalg.eigvalsh(oracle.materialize())[0] < -1e-9 * max(1.0, n):
            raise ValueError("matrix is not PSD")
    p = min(1.0, c_col / (epsilon * n))
    oracle.ledger.begin_run()
    for attempt in range(1, MAX_RETRIES + 1):
        sample = draw_columns(n, p, rng)
        if len(sample):
            break
    else:
        raise DegenerateSampleError(f"column sample empty after {MAX_RETRIES} draws")
    pair = build_gram_pair(oracle, sample)
    x, value = max_generalized_rayleigh(pair, rank_tol)
    u = pair.cols @ x
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise DegenerateSampleError("ASx vanished")
    u = u / norm
    rq = float(u @ oracle.matvec(u)) if evaluate else float("nan")
    return TopEigenvector(u, rq, value, sample, attempt)
