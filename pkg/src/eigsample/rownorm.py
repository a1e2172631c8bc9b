"""Squared row-norm sampling with entry zeroing (additive ``epsilon * ||A||_F``).

Two estimators live here:

* :func:`estimate_spectrum_restricted` keeps row ``i`` with probability
  ``s * ||A_i||^2 / ||A||_F^2``, which must not exceed one.
* :func:`estimate_spectrum_rownorm` lifts that restriction by splitting every
  row into ``s`` copies scaled by ``1/sqrt(s)``.  It draws
  ``Binomial(s, ||A_i||^2/||A||_F^2)`` copies of each index, and each copy is
  a separate row of the sampled matrix.

Before the eigenvalues are taken, both estimators zero out small diagonal
entries and off-diagonal entries that are large relative to the norms of
their rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, RestrictionError
from .matrix import SpectrumEstimate, SymmetricMatrixOracle, clamped_log


@dataclass(frozen=True)
class ZeroingRule:
    """Thresholds deciding which entries are zeroed.

    ``effective_dim`` is ``n`` for the restricted estimator and ``n * s``
    after row splitting.  Comparisons are strict, so an entry that sits
    exactly on a threshold is kept.
    """

    epsilon: float
    c_log: float
    effective_dim: int

    @property
    def log_factor(self) -> float:
        return self.c_log * clamped_log(self.effective_dim) ** 4

    def diagonal_mask(self, row_sq, frob_sq):
        return np.asarray(row_sq) < (self.epsilon ** 2 / 4.0) * frob_sq

    def offdiag_mask(self, row_sq_i, row_sq_j, a_ij, frob_sq):
        a_ij = np.asarray(a_ij, dtype=np.float64)
        lhs = np.asarray(row_sq_i) * np.asarray(row_sq_j)
        rhs = self.epsilon ** 2 * frob_sq * a_ij * a_ij / self.log_factor
        return (a_ij != 0) & (lhs < rhs)

    def apply(self, sub: np.ndarray, row_sq: np.ndarray, frob_sq: float) -> np.ndarray:
        """Zero entries of a principal submatrix.

        ``row_sq`` holds the squared row norms of the sampled rows.  Positions
        on the diagonal of ``sub`` use the diagonal rule; everything else uses
        the off-diagonal rule.
        """
        out = np.array(sub, dtype=np.float64)
        kill = self.offdiag_mask(row_sq[:, None], row_sq[None, :], out, frob_sq)
        d = np.arange(out.shape[0])
        kill[d, d] = self.diagonal_mask(row_sq, frob_sq)
        out[kill] = 0.0
        return out


@dataclass(frozen=True)
class SplitDraw:
    multiplicities: np.ndarray
    q: np.ndarray

    @property
    def total(self) -> int:
        return int(self.multiplicities.sum())

    def copies(self) -> np.ndarray:
        return np.repeat(np.arange(self.q.size), self.multiplicities)


def is_zeroed(oracle: SymmetricMatrixOracle, rule: ZeroingRule, i: int, j: int) -> bool:
    """Whether entry ``(i, j)`` is zeroed; reads ``A_ij`` only off the diagonal."""
    frob_sq = oracle.frobenius_norm() ** 2
    rs = oracle.row_norms_sq([i, j])
    if i == j:
        return bool(rule.diagonal_mask(rs[0], frob_sq))
    a_ij = oracle.entry(i, j)
    return bool(rule.offdiag_mask(rs[0], rs[1], a_ij, frob_sq))


def zeroed_matrix(a: np.ndarray, epsilon: float, c_log: float = 1.0) -> np.ndarray:
    """Dense ``A'`` using the restricted rule with ``N = n``."""
    a = np.asarray(a, dtype=np.float64)
    row_sq = np.einsum("ij,ij->i", a, a)
    frob_sq = float(row_sq.sum())
    return ZeroingRule(epsilon, c_log, a.shape[0]).apply(a, row_sq, frob_sq)


def split_matrix(a: np.ndarray, s: int) -> np.ndarray:
    """``U A U^T`` with ``U`` the stack of ``s`` copies of ``I_n / sqrt(s)``."""
    a = np.asarray(a, dtype=np.float64)
    return np.kron(np.ones((s, s)), a) / s


def split_rates(row_sq: np.ndarray, frob_sq: float, s: int) -> np.ndarray:
    """Restricted sampling probabilities of the split matrix.

    Each split row has squared norm ``||A_i||^2 / s`` and the Frobenius norm
    is unchanged, so the rate collapses to ``||A_i||^2 / ||A||_F^2 <= 1``.
    """
    return s * (np.asarray(row_sq) / s) / frob_sq


def estimate_spectrum_restricted(oracle: SymmetricMatrixOracle, s: float, epsilon: float, c_log: float = 1.0, rng=None) -> SpectrumEstimate:
    """Row ``i`` kept with probability ``s q_i`` (must be at most 1) and rescaled by ``1/sqrt(p_i)``."""
    rng = np.random.default_rng() if rng is None else rng
    n = oracle.n
    oracle.ledger.begin_run()
    frob_sq = oracle.frobenius_norm() ** 2
    if frob_sq == 0.0:
        return SpectrumEstimate(np.zeros(n), sample_size=0)
    row_sq = oracle.row_norms_sq()
    p = s * row_sq / frob_sq
    bad = np.flatnonzero(p > 1.0 + 1e-12)
    if bad.size:
        i = int(bad[0])
        raise RestrictionError(f"row {i} has sampling probability {p[i]:.4g} > 1; lower s or use row splitting", row=i)
    p = np.minimum(p, 1.0)
    keep = np.flatnonzero(rng.random(n) < p)
    if keep.size == 0:
        return SpectrumEstimate(np.zeros(n), sample_size=0)
    rule = ZeroingRule(epsilon, c_log, n)
    sub = rule.apply(oracle.principal_submatrix(keep), row_sq[keep], frob_sq)
    w = 1.0 / np.sqrt(p[keep])
    eigs = np.linalg.eigvalsh(sub * np.outer(w, w))
    return SpectrumEstimate.from_eigenvalues(eigs, n, sample_size=int(keep.size))


def draw_multiplicities(oracle: SymmetricMatrixOracle, s: int, rng) -> SplitDraw:
    """``m_i ~ Binomial(s, ||A_i||^2 / ||A||_F^2)`` independently per index."""
    frob_sq = oracle.frobenius_norm() ** 2
    if frob_sq == 0.0:
        raise DegenerateSampleError("zero matrix has no row-norm distribution")
    q = oracle.row_norms_sq() / frob_sq
    q = np.clip(q, 0.0, 1.0)
    m = rng.binomial(int(s), q)
    return SplitDraw(m.astype(np.int64), q)


def build_split_matrix(oracle: SymmetricMatrixOracle, draw: SplitDraw, s: int, epsilon: float, c_log: float = 1.0) -> np.ndarray:
    """The ``K x K`` zeroed, rescaled sample of ``U A U^T``."""
    n = oracle.n
    copies = draw.copies()
    distinct, pos = np.unique(copies, return_inverse=True)
    sub = oracle.principal_submatrix(distinct)[np.ix_(pos, pos)]
    frob_sq = oracle.frobenius_norm() ** 2
    row_sq = oracle.row_norms_sq(distinct)[pos]
    rule = ZeroingRule(epsilon, c_log, n * int(s))
    # s cancels from both sides of the off-diagonal rule, so it is applied
    # to the unsplit entries; the diagonal rule sees the split row norms.
    out = np.array(sub)
    kill = rule.offdiag_mask(row_sq[:, None], row_sq[None, :], out, frob_sq)
    d = np.arange(out.shape[0])
    kill[d, d] = rule.diagonal_mask(row_sq / s, frob_sq)
    out[kill] = 0.0
    scale = 1.0 / np.sqrt(s * draw.q[copies])
    return out * np.outer(scale, scale)


def estimate_spectrum_rownorm(oracle: SymmetricMatrixOracle, s: int, epsilon: float, c_log: float = 1.0, rng=None) -> SpectrumEstimate:
    """Additive ``epsilon * ||A||_F`` estimate for an arbitrary symmetric matrix."""
    if s < 1:
        raise ValueError("s must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    n = oracle.n
    oracle.ledger.begin_run()
    if oracle.frobenius_norm() == 0.0:
        return SpectrumEstimate(np.zeros(n), sample_size=0)
    draw = draw_multiplicities(oracle, s, rng)
    if draw.total == 0:
        return SpectrumEstimate(np.zeros(n), sample_size=0)
    eigs = np.linalg.eigvalsh(build_split_matrix(oracle, draw, s, epsilon, c_log))
    return SpectrumEstimate.from_eigenvalues(eigs, n, sample_size=draw.total)
