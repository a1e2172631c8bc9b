"""Dense diagnostics for the structural conditions behind the sampling guarantees.

Everything here materializes the matrix and is capped at ``n <= 2048``.  These
functions certify the math on small instances; they are not sublinear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ShapeError
from .matrix import clamped_log
from .uniform import SampleDraw

ANALYSIS_CAP = 2048
GLOBAL_LEVEL = 0.1
LOWER_SIDE_CONSTANT = 51.0


def _dense(a, cap: int = ANALYSIS_CAP) -> np.ndarray:
    if hasattr(a, "materialize"):
        if a.n > cap:
            raise CapacityError(f"n={a.n} exceeds analysis cap {cap}")
        return a.materialize()
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > cap:
        raise CapacityError(f"n={a.shape[0]} exceeds analysis cap {cap}")
    return a


@dataclass(frozen=True)
class OuterMiddleSplit:
    outer: np.ndarray
    middle: np.ndarray
    L: float


def split_outer_middle(a, L: float, cap: int = ANALYSIS_CAP) -> OuterMiddleSplit:
    """``A = A_o + A_m`` with ``A_o`` carrying the eigenvalues of magnitude at least ``L``."""
    a = _dense(a, cap)
    vals, vecs = np.linalg.eigh(a)
    big = np.abs(vals) >= L
    outer = (vecs * np.where(big, vals, 0.0)) @ vecs.T
    middle = (vecs * np.where(big, 0.0, vals)) @ vecs.T
    return OuterMiddleSplit(0.5 * (outer + outer.T), 0.5 * (middle + middle.T), float(L))


def eigenbasis_at_least(a, lam: float, cap: int = ANALYSIS_CAP) -> np.ndarray:
    """Orthonormal basis of eigenvectors with ``|eigenvalue| >= lam`` (may have zero columns)."""
    a = _dense(a, cap)
    vals, vecs = np.linalg.eigh(a)
    return vecs[:, np.abs(vals) >= lam]


def sampled_rows(draw: SampleDraw, x: np.ndarray) -> np.ndarray:
    """``S X``: rows of ``X`` at the drawn indices, scaled by the weights."""
    return np.asarray(x)[draw.indices] * draw.weights[:, None]


def subspace_distortion(draw: SampleDraw, v: np.ndarray) -> float:
    """``max(|s_max^2 - 1|, |s_min^2 - 1|)`` over the singular values of ``SV``."""
    v = np.asarray(v, dtype=np.float64)
    d = v.shape[1]
    if d == 0:
        return 0.0
    sv = sampled_rows(draw, v)
    sig = np.linalg.svd(sv, compute_uv=False) if sv.size else np.zeros(0)
    smax = sig[0] if sig.size else 0.0
    smin = sig[-1] if sig.size == d else 0.0
    return float(max(abs(smax * smax - 1.0), abs(smin * smin - 1.0)))


@dataclass
class CheckReport:
    lambda_grid: list
    distortions: list
    thresholds: list
    passed: bool
    measured_constants: dict = field(default_factory=dict)

    def csv_rows(self) -> list[str]:
        rows = ["lambda,distortion,threshold,pass"]
        for lam, dist, thr in zip(self.lambda_grid, self.distortions, self.thresholds):
            rows.append(f"{lam!r},{dist!r},{thr!r},{int(dist <= thr)}")
        return rows


def check_assumption(draw: SampleDraw, a, L: float, cap: int = ANALYSIS_CAP) -> CheckReport:
    """Distortion of ``S`` on each ``V_{>= 2^r L}`` against ``min(L / lambda, 1/10)``.

    The ``r = 0`` level is the full outlying basis, so it also carries the
    global ``1/10`` requirement.
    """
    a = _dense(a, cap)
    vals, vecs = np.linalg.eigh(a)
    opnorm = float(np.max(np.abs(vals))) if vals.size else 0.0
    grid, dists, thrs = [], [], []
    if opnorm >= L > 0:
        for r in range(int(math.floor(math.log2(opnorm / L))) + 1):
            lam = L * 2.0 ** r
            v = vecs[:, np.abs(vals) >= lam]
            grid.append(lam)
            dists.append(subspace_distortion(draw, v))
            thrs.append(min(L / lam, GLOBAL_LEVEL))
    passed = all(d <= t for d, t in zip(dists, thrs))
    worst = max((d / t for d, t in zip(dists, thrs)), default=0.0)
    return CheckReport(grid, dists, thrs, passed, {"worst_ratio": worst, "levels": len(grid)})


def leverage_scores(x: np.ndarray) -> np.ndarray:
    """Row leverage scores of ``X`` from an orthonormal basis of its column space."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] < 1:
        raise ShapeError("leverage scores need at least one column")
    u, sig, _ = np.linalg.svd(x, full_matrices=False)
    tol = max(x.shape) * np.finfo(float).eps * (sig[0] if sig.size else 0.0)
    u = u[:, sig > tol]
    return np.einsum("ij,ij->i", u, u)


def incoherence_report(a, alpha: float, cap: int = ANALYSIS_CAP) -> tuple[float, bool]:
    """Largest ``||V_i||^2 alpha^2 / ||A_i||^2`` for ``V`` spanning eigenvalues ``>= alpha``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a = _dense(a, cap)
    v = eigenbasis_at_least(a, alpha, cap)
    row_sq = np.einsum("ij,ij->i", a, a)
    live = row_sq > 0
    if v.shape[1] == 0 or not live.any():
        return 0.0, True
    mass = np.einsum("ij,ij->i", v, v)[live]
    ratio = float(np.max(mass * alpha * alpha / row_sq[live]))
    return ratio, ratio <= 1.0 + 1e-9


def sampled_matrix(draw: SampleDraw, a: np.ndarray) -> np.ndarray:
    """Dense ``S A S^T``."""
    a = np.asarray(a)
    return a[np.ix_(draw.indices, draw.indices)] * np.outer(draw.weights, draw.weights)


def middle_norm_check(draw: SampleDraw, split: OuterMiddleSplit, bound: float) -> tuple[float, bool]:
    """Operator norm of the sampled middle part."""
    if len(draw) == 0:
        return 0.0, 0.0 <= bound
    vals = np.linalg.eigvalsh(sampled_matrix(draw, split.middle))
    opnorm = float(np.max(np.abs(vals)))
    return opnorm, opnorm <= bound


def outer_eigenvalue_errors(draw: SampleDraw, outer: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """``|lambda_i(S A_o S^T) - lambda_i(A_o)|`` at the indices where ``lambda_i(A_o)`` is nonzero.

    Both spectra are padded to length ``n`` and sorted descending.
    """
    n = outer.shape[0]
    true = np.sort(np.linalg.eigvalsh(outer))[::-1]
    k = len(draw)
    samp = np.linalg.eigvalsh(sampled_matrix(draw, outer)) if k else np.zeros(0)
    if samp.size > n:
        samp = samp[np.argsort(np.abs(samp))[samp.size - n:]]
    samp = np.sort(np.concatenate([samp, np.zeros(n - samp.size)]))[::-1]
    scale = max(1.0, float(np.max(np.abs(true)))) if n else 1.0
    nz = np.abs(true) > tol * scale
    return np.abs(samp - true)[nz]


def two_sided_bound(outer_norm: float, L: float) -> float:
    """``51 L max(1, log(||A_o|| / L))``."""
    ratio = outer_norm / L
    return LOWER_SIDE_CONSTANT * L * max(1.0, math.log(ratio) if ratio > 0 else 0.0)


def embedding_sample_size(epsilon: float, delta: float, c: float = 8.0) -> int:
    """``(c / eps^2)(log log(1/eps) + log(1/(eps^2 delta)))`` rounded up."""
    loglog = math.log(clamped_log(1.0 / epsilon))
    return int(math.ceil(c / epsilon ** 2 * (loglog + math.log(1.0 / (epsilon ** 2 * delta)))))


def half_power_gap(a: np.ndarray, x: np.ndarray) -> float:
    """``x^T A^2 x / x^T A x - x^T A x / x^T x``; non-negative for PSD ``A``."""
    ax = a @ x
    q = float(x @ ax)
    return float(ax @ ax) / q - q / float(x @ x)


def psd_incoherence_excess(a: np.ndarray) -> float:
    """Largest ``max_i v_i^2 - 1/lambda`` over eigenpairs with ``lambda > 0``."""
    vals, vecs = np.linalg.eigh(a)
    pos = vals > 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    if not pos.any():
        return -math.inf
    peak = np.max(vecs[:, pos] ** 2, axis=0)
    return float(np.max(peak - 1.0 / vals[pos]))


def diagonal_decrease_excess(a: np.ndarray) -> float:
    """Largest increase of a diagonal entry after removing the top eigenpair."""
    vals, vecs = np.linalg.eigh(a)
    deflated = a - vals[-1] * np.outer(vecs[:, -1], vecs[:, -1])
    return float(np.max(np.diag(deflated) - np.diag(a)))


def approx_product_check(draw: SampleDraw, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """``(||X^T S^T S Y - X^T Y||, alpha ||X|| ||Y||)`` with ``alpha`` measured on ``[X | Y]``."""
    q = leverage_basis(np.hstack([x, y]))
    alpha = subspace_distortion(draw, q)
    err = np.linalg.norm(sampled_rows(draw, x).T @ sampled_rows(draw, y) - x.T @ y, 2)
    return float(err), float(alpha * np.linalg.norm(x, 2) * np.linalg.norm(y, 2))


def leverage_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column space of ``X``."""
    u, sig, _ = np.linalg.svd(np.asarray(x, dtype=np.float64), full_matrices=False)
    tol = max(x.shape) * np.finfo(float).eps * (sig[0] if sig.size else 0.0)
    return u[:, sig > tol]


def projection_row_norm_excess(a: np.ndarray, mask: np.ndarray) -> float:
    """Largest ``||(PAP)_k|| - ||A_k||`` for ``P`` projecting onto the selected eigenvectors."""
    _, vecs = np.linalg.eigh(a)
    v = vecs[:, np.asarray(mask, dtype=bool)]
    pap = v @ (v.T @ a @ v) @ v.T
    return float(np.max(np.linalg.norm(pap, axis=1) - np.linalg.norm(a, axis=1)))


def count_outlying(a: np.ndarray, epsilon: float) -> int:
    """Number of eigenvalues with ``|lambda| >= epsilon * n``."""
    return int(np.sum(np.abs(np.linalg.eigvalsh(a)) >= epsilon * a.shape[0]))
