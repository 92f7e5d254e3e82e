"""Turn sampled rows/columns into low-rank sketches.

Linear-cost routines (:func:`pseudo_skeleton`, :func:`stabilized_sketch`,
:func:`nystrom`, :func:`br_cur`, :func:`sketch_cur`) only see the sampled
rows and columns.  :func:`cur_full` and :func:`random_projection_sketch` are
quadratic reference methods and read the whole matrix.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .matcore import (
    ALL,
    DEFAULT_TOL,
    IndexSet,
    Sketch,
    extract,
    pinv_truncated,
    thin_svd,
    truncation_rank,
)
from .samplers import uniform_indices

__all__ = [
    "RandomProjectionConfig",
    "SampledTriple",
    "br_cur",
    "cur_full",
    "cur_to_sketch",
    "nystrom",
    "orthogonalize",
    "pseudo_skeleton",
    "random_projection_sketch",
    "sample_triple",
    "sketch_cur",
    "stabilized_sketch",
]


@dataclass(frozen=True)
class SampledTriple:
    """Sampled columns ``C`` (m x k), rows ``R`` (k x n) and their intersection ``W``."""

    C: np.ndarray
    R: np.ndarray
    W: np.ndarray
    row_idx: IndexSet
    col_idx: IndexSet

    @property
    def shape(self):
        return self.C.shape[0], self.R.shape[1]


def sample_triple(source, rows, cols):
    """Read ``C = A[:, cols]`` and ``R = A[rows, :]``; ``W`` is cut from ``C``."""
    m, n = source.shape
    rows = IndexSet.coerce(rows, m)
    cols = IndexSet.coerce(cols, n)
    C = extract(source, ALL, cols)
    R = extract(source, rows, ALL)
    W = C[rows.indices, :]
    return SampledTriple(C, R, W, rows, cols)


def _svd_rank(W, rank_r, tol):
    Uw, s, Vw = thin_svd(W)
    r = truncation_rank(s, rank_r, tol)
    return Uw[:, :r], s[:r], Vw[:, :r]


def pseudo_skeleton(t, rank_r=None, tol=DEFAULT_TOL):
    """``A ~ C pinv_r(W) R`` as a factor triple.

    ``U = C V_w / s``, ``S = s``, ``V = R^T U_w / s`` over the top ``rank_r``
    singular triplets of ``W``.  The factors are not orthonormal.
    """
    m, n = t.shape
    Uw, s, Vw = _svd_rank(t.W, rank_r, tol)
    if s.size == 0:
        return Sketch.empty(m, n)
    U = (t.C @ Vw) / s
    V = (t.R.T @ Uw) / s
    return Sketch(U, s, V)


def stabilized_sketch(t, m=None, n=None, rank_r=None, tol=DEFAULT_TOL):
    """Pseudo-skeleton with norm-based normalization of the extrapolated singular vectors.

    ``U = C V_w N_c^{-1}``, ``S = s * sqrt(m n) / k``, ``V = R^T U_w N_r^{-1}``
    where ``N_c`` and ``N_r`` hold the column norms of ``C V_w`` and
    ``R^T U_w``.  Components whose extrapolated vector has zero norm are
    dropped.
    """
    m = t.shape[0] if m is None else m
    n = t.shape[1] if n is None else n
    k = len(t.row_idx)
    if k != len(t.col_idx):
        raise ValueError("stabilized sketch needs as many sampled rows as columns")
    Uw, s, Vw = _svd_rank(t.W, rank_r, tol)
    CV = t.C @ Vw
    RU = t.R.T @ Uw
    nc = np.linalg.norm(CV, axis=0)
    nr = np.linalg.norm(RU, axis=0)
    keep = (nc > 0) & (nr > 0)
    if not np.any(keep):
        return Sketch.empty(m, n)
    scale = np.sqrt(float(m) * float(n)) / k
    return Sketch(CV[:, keep] / nc[keep], s[keep] * scale, RU[:, keep] / nr[keep])


def nystrom(t, rank_r=None, tol=DEFAULT_TOL, sym_tol=1e-8):
    """``C pinv_r(W) C^T`` for a PSD matrix sampled symmetrically; ``V`` equals ``U``."""
    if t.row_idx != t.col_idx:
        raise ValueError("Nystrom needs identical row and column samples")
    W = t.W
    if W.size and np.max(np.abs(W - W.T)) > sym_tol * max(1.0, np.max(np.abs(W))):
        raise ValueError("intersection matrix is not symmetric")
    lam, E = np.linalg.eigh(0.5 * (W + W.T))
    order = np.argsort(lam)[::-1]
    lam, E = lam[order], E[:, order]
    r = min(truncation_rank(np.clip(lam, 0.0, None), rank_r, tol),
            int(np.count_nonzero(lam > 0)))
    lam, E = lam[:r], E[:, :r]
    n = t.shape[0]
    if r == 0:
        return Sketch.empty(n, n)
    U = (t.C @ E) / lam
    return Sketch(U, lam, U)


def br_cur(source, base_rows, base_cols, target_rows, target_cols, rank_r=None, tol=DEFAULT_TOL):
    """Bilateral resampling CUR.

    Bases ``C = A[:, base_cols]``, ``R = A[base_rows, :]``; the middle matrix
    is fitted on the target block ``M = A[target_rows, target_cols]`` as
    ``pinv(C[target_rows]) M pinv(R[:, target_cols])``.

    Returns ``(C, Umid, R)``.
    """
    m, n = source.shape
    base_rows = IndexSet.coerce(base_rows, m)
    base_cols = IndexSet.coerce(base_cols, n)
    target_rows = IndexSet.coerce(target_rows, m)
    target_cols = IndexSet.coerce(target_cols, n)
    if len(target_rows) == 0 or len(target_cols) == 0:
        raise ValueError("target sampling must be non-empty")
    C = extract(source, ALL, base_cols)
    R = extract(source, base_rows, ALL)
    M = extract(source, target_rows, target_cols)
    Cbar = C[target_rows.indices, :]
    Rbar = R[:, target_cols.indices]
    Umid = pinv_truncated(Cbar, rank_r, tol) @ M @ pinv_truncated(Rbar, rank_r, tol)
    return C, Umid, R


def sketch_cur(source, base_rows, base_cols, target_multiplier=3, seed=None,
               target_rows=None, target_cols=None):
    """BR-CUR with independent uniform target samples ``target_multiplier`` times the base size."""
    m, n = source.shape
    kr = target_multiplier * len(base_rows)
    kc = target_multiplier * len(base_cols)
    if kr > m or kc > n:
        raise ValueError(f"target sample ({kr}, {kc}) exceeds matrix shape {(m, n)}")
    rng = np.random.default_rng(seed)
    if target_rows is None:
        target_rows = uniform_indices(m, kr, rng)
    if target_cols is None:
        target_cols = uniform_indices(n, kc, rng)
    return br_cur(source, base_rows, base_cols, target_rows, target_cols)


def cur_full(source, C, R, tol=DEFAULT_TOL):
    """Frobenius-optimal middle matrix ``pinv(C) A pinv(R)``; reads all of ``A``."""
    A = source.read_all()
    return pinv_truncated(C, None, tol) @ A @ pinv_truncated(R, None, tol)


def cur_to_sketch(C, Umid, R):
    """Re-express ``C Umid R`` as a :class:`Sketch` through the SVD of ``Umid``."""
    Uu, s, Vu = thin_svd(Umid)
    r = truncation_rank(s, None, 0.0)
    return Sketch(C @ Uu[:, :r], s[:r], R.T @ Vu[:, :r])


@dataclass(frozen=True)
class RandomProjectionConfig:
    k: int
    p: int = 10
    q: int = 1

    def __post_init__(self):
        if self.k < 1 or self.p < 0 or self.q < 0:
            raise ValueError("need k >= 1, p >= 0, q >= 0")


def random_projection_sketch(source, cfg, seed=None):
    """Randomized range finder with ``q`` re-orthogonalized power iterations.

    Gaussian test matrix with ``k + p`` columns; the final sketch is the rank
    ``k`` truncation of the SVD of ``Q^T A``.  Reads all of ``A``.
    """
    A = source.read_all()
    m, n = A.shape
    ell = min(cfg.k + cfg.p, m, n)
    rng = np.random.default_rng(seed)
    Omega = rng.standard_normal((n, ell))
    Q = la.qr(A @ Omega, mode="economic")[0]
    for _ in range(cfg.q):
        Z = la.qr(A.T @ Q, mode="economic")[0]
        Q = la.qr(A @ Z, mode="economic")[0]
    Ub, s, V = thin_svd(Q.T @ A)
    r = min(cfg.k, s.size)
    return Sketch(Q @ Ub[:, :r], s[:r], V[:, :r], orthonormal=True)


def orthogonalize(sk):
    """Orthonormal factors with the same product, at ``O((m + n) r^2)`` cost.

    ``U = U0 S0 V0^T``; then ``S0 V0^T diag(S) V^T = U1 S1 V1^T``;
    result is ``(U0 U1, S1, V1)``.
    """
    if sk.rank == 0:
        return Sketch(sk.U, sk.S, sk.V, orthonormal=True)
    U0, s0, V0 = thin_svd(sk.U)
    B = (s0[:, None] * V0.T * sk.S) @ sk.V.T
    U1, s1, V1 = thin_svd(B)
    return Sketch(U0 @ U1, s1, V1, orthonormal=True)
