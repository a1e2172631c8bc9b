"""Uniform principal-submatrix sampling for bounded-entry symmetric matrices.

Each row is kept independently with probability ``p = s/n`` and rescaled by
``1/sqrt(p)``.  The eigenvalues of the rescaled submatrix, padded with zeros,
approximate every eigenvalue of ``A`` to within ``epsilon * n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .matrix import EstimatorConfig, SpectrumEstimate, SymmetricMatrixOracle


@dataclass(frozen=True)
class SampleDraw:
    """Row indices (sorted, repeats allowed) with one positive weight per copy."""

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if idx.size != w.size:
            raise ShapeError("one weight is required per sampled copy")
        if w.size and np.min(w) <= 0:
            raise ShapeError("sample weights must be positive")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return int(self.indices.size)

    @classmethod
    def identity(cls, n: int) -> "SampleDraw":
        return cls(np.arange(n), np.ones(n))

    def as_matrix(self, n: int) -> np.ndarray:
        """The ``k x n`` sampling-and-rescaling matrix."""
        s = np.zeros((len(self), n))
        s[np.arange(len(self)), self.indices] = self.weights
        return s


def draw_uniform(n: int, s: float, rng) -> SampleDraw:
    """Keep each of ``n`` indices independently with probability ``s/n``."""
    if s < 1:
        raise ValueError("expected sample size must be at least 1")
    if s >= n:
        return SampleDraw.identity(n)
    p = s / n
    keep = np.flatnonzero(rng.random(n) < p)
    return SampleDraw(keep, np.full(keep.size, math.sqrt(1.0 / p)))


def build_sampled_matrix(oracle: SymmetricMatrixOracle, draw: SampleDraw) -> np.ndarray:
    """Rescaled principal submatrix ``w_a w_b A[i_a, i_b]``."""
    sub = oracle.principal_submatrix(draw.indices)
    return sub * np.outer(draw.weights, draw.weights)


def estimate_spectrum_uniform(oracle: SymmetricMatrixOracle, cfg: EstimatorConfig, rng=None) -> SpectrumEstimate:
    """Additive ``epsilon * n`` spectrum estimate from one uniform sample.

    The caller guarantees ``|A_ij| <= 1``; checking it would cost ``n**2`` queries.
    """
    rng = cfg.rng() if rng is None else rng
    n = oracle.n
    oracle.ledger.begin_run()
    draw = draw_uniform(n, cfg.uniform_sample_size(), rng)
    if len(draw) == 0:
        return SpectrumEstimate(np.zeros(n), sample_size=0)
    eigs = np.linalg.eigvalsh(build_sampled_matrix(oracle, draw))
    return SpectrumEstimate.from_eigenvalues(eigs, n, sample_size=len(draw))
