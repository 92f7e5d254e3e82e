"""Numeric evaluation of the encoding-error error bound and the boosting gap.

The bound relates ``||A - C pinv(W) R||_F`` to how well the sampled rows and
columns encode the rows of an exact factorization ``A = P Q^T``:

    bound = sqrt(6 k theta) T^1.5 sqrt(e_r + e_c) + k theta T ||pinv(W)||_F sqrt(e_r e_c)

with ``e_r``/``e_c`` the encoding errors, ``T`` the largest cluster size and
``theta`` a data-dependent constant (see :func:`estimate_theta`).
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .matcore import DEFAULT_TOL, IndexSet, frob_norm, pinv_truncated, thin_svd
from .samplers import encoding_error, nearest_assignment, uniform_indices, weighted_kmeans

__all__ = [
    "BoundConfig",
    "BoostEvaluation",
    "BoundReport",
    "boost_evaluation",
    "bound_report",
    "cluster_sizes",
    "correlation_experiment",
    "estimate_theta",
    "exact_embedding",
    "spearman",
    "theorem1_bound",
    "theorem2_gap",
]


@dataclass(frozen=True)
class BoundConfig:
    theta: float
    include_tail: bool = False
    tail_norm: float = 0.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if self.tail_norm < 0:
            raise ValueError("tail_norm must be >= 0")


@dataclass(frozen=True)
class BoundReport:
    e_r: float
    e_c: float
    T_r: int
    T_c: int
    k: int
    w_pinv_norm: float
    bound_value: float

    @property
    def T(self):
        return max(self.T_r, self.T_c)


def cluster_sizes(assignment, k):
    """Largest number of points sharing one cluster id."""
    assignment = np.asarray(assignment, dtype=np.intp)
    if assignment.size == 0:
        return 0
    if assignment.min() < 0 or assignment.max() >= k:
        raise ValueError(f"assignment values must lie in [0, {k})")
    return int(np.bincount(assignment, minlength=k).max())


def theorem1_bound(e_r, e_c, T_r, T_c, k, w_pinv_norm, cfg):
    """Right-hand side of the encoding-error bound (plus the tail term when enabled)."""
    for name, v in (("e_r", e_r), ("e_c", e_c), ("T_r", T_r), ("T_c", T_c),
                    ("w_pinv_norm", w_pinv_norm)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative")
    if k < 1:
        raise ValueError("k must be >= 1")
    T = max(T_r, T_c)
    theta = cfg.theta
    value = (np.sqrt(6.0 * k * theta) * T ** 1.5 * np.sqrt(e_r + e_c)
             + k * theta * T * w_pinv_norm * np.sqrt(e_c * e_r))
    if cfg.include_tail:
        value += cfg.tail_norm
    return float(value)


def theorem2_gap(pilot, followup, k, theta, conservative=False):
    """Lower bound on how much the error bound drops from pilot to follow-up.

    Uses the pilot cluster sizes and ``||pinv(W_p)||_F`` with the pilot and
    follow-up encoding errors.  With ``conservative=True`` both terms carry
    the ``1 / (2 sqrt(x))`` factor of the square-root tangent inequality,
    which makes the gap a provable lower bound on ``Psi_p - Psi_f``; the
    default reproduces the published constants.
    """
    d_r = pilot.e_r - followup.e_r
    d_c = pilot.e_c - followup.e_c
    if d_r < 0 or d_c < 0:
        raise ValueError(
            f"encoding errors must not increase (drops: rows {d_r:.6g}, cols {d_c:.6g})")
    Tr, Tc = pilot.T_r, pilot.T_c
    ep_sum = pilot.e_r + pilot.e_c
    ep_prod = pilot.e_r * pilot.e_c
    first = 0.0
    if ep_sum > 0:
        if conservative:
            first = (np.sqrt(3.0 * k * theta * Tc * Tr * (Tr + Tc))
                     / (2.0 * np.sqrt(ep_sum)) * abs(d_r + d_c))
        else:
            first = np.sqrt(3.0 * k * theta * Tc * Tr * (Tr + Tc) / (2.0 * ep_sum)) * abs(d_r + d_c)
    second = 0.0
    if ep_prod > 0:
        cross = abs(d_r * followup.e_c + d_c * followup.e_r + d_r * d_c)
        second = k * theta * pilot.w_pinv_norm * np.sqrt(Tc * Tr / ep_prod) * cross
        if conservative:
            second *= 0.5
    return float(first + second)


def exact_embedding(A, tol=DEFAULT_TOL):
    """``P = U S^1/2``, ``Q = V S^1/2`` from the thin SVD, so ``A = P Q^T``."""
    U, S, V = thin_svd(A)
    r = int(np.count_nonzero(S > tol * S[0])) if S.size and S[0] > 0 else 0
    root = np.sqrt(S[:r])
    return U[:, :r] * root, V[:, :r] * root


def bound_report(P, Q, row_idx, col_idx, W, cfg, tol=DEFAULT_TOL):
    """Encoding errors, cluster sizes, ``||pinv(W)||_F`` and the bound value.

    Assignments are nearest-representative; encoding errors are unweighted.
    """
    row_idx = np.asarray(row_idx, dtype=np.intp)
    col_idx = np.asarray(col_idx, dtype=np.intp)
    k = row_idx.size
    if col_idx.size != k:
        raise ValueError("bound needs k sampled rows and k sampled columns")
    a_r = nearest_assignment(P, row_idx)
    a_c = nearest_assignment(Q, col_idx)
    e_r = encoding_error(P, row_idx, a_r)
    e_c = encoding_error(Q, col_idx, a_c)
    T_r = cluster_sizes(a_r, k)
    T_c = cluster_sizes(a_c, k)
    wn = frob_norm(pinv_truncated(W, None, tol))
    value = theorem1_bound(e_r, e_c, T_r, T_c, k, wn, cfg)
    return BoundReport(e_r, e_c, T_r, T_c, k, wn, value)


def estimate_theta(A, P, Q, row_idx, col_idx):
    """Smallest constant making every entry-pair inequality of the bound's proof hold.

    For each entry ``(i, j)`` with representatives ``(p, q)`` (nearest in
    ``P`` and ``Q``) the ratio

        (A[i, j] - A[p, q])^2 / (||P[i] - P[p]||^2 + ||Q[j] - Q[q]||^2)

    is formed; the maximum over all entries is returned.  Entries that
    coincide with their representatives (0/0) are skipped.  ``O(m n)``:
    evaluation only.
    """
    A = np.asarray(A, dtype=float)
    row_idx = np.asarray(row_idx, dtype=np.intp)
    col_idx = np.asarray(col_idx, dtype=np.intp)
    a_r = nearest_assignment(P, row_idx)
    a_c = nearest_assignment(Q, col_idx)
    rep_r = row_idx[a_r]
    rep_c = col_idx[a_c]
    dP = P - P[rep_r]
    dQ = Q - Q[rep_c]
    sq_r = np.einsum("ij,ij->i", dP, dP)
    sq_c = np.einsum("ij,ij->i", dQ, dQ)
    num = (A - A[np.ix_(rep_r, rep_c)]) ** 2
    den = sq_r[:, None] + sq_c[None, :]
    mask = den > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(num[mask] / den[mask]))


def spearman(x, y):
    return float(sps.spearmanr(x, y).statistic)


def correlation_experiment(source, trials, seed=None, k=None, max_iters=5):
    """Encoding errors vs. sketching error over many differently-chosen samplings.

    Each trial picks, independently for rows and columns, either uniform
    sampling or weighted k-means on the exact embedding with a random number
    of Lloyd iterations (0 to ``max_iters``), then records
    ``(e_r, e_c, ||A - C pinv(W) R||_F / ||A||_F)``.  Reads the whole matrix.
    """
    if trials <= 0:
        return []
    A = source.read_all()
    m, n = A.shape
    P, Q = exact_embedding(A)
    if k is None:
        k = max(1, int(round(0.05 * np.sqrt(m * n))))
    a_norm = frob_norm(A)
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        rows = _mixed_sample(P, k, rng, max_iters)
        cols = _mixed_sample(Q, k, rng, max_iters)
        e_r = encoding_error(P, rows, nearest_assignment(P, rows))
        e_c = encoding_error(Q, cols, nearest_assignment(Q, cols))
        C = A[:, cols]
        R = A[rows, :]
        W = C[rows, :]
        err = frob_norm(A - C @ pinv_truncated(W) @ R) / a_norm
        out.append((e_r, e_c, err))
    return out


def _mixed_sample(X, k, rng, max_iters):
    iters = int(rng.integers(0, max_iters + 1))
    if iters == 0:
        return uniform_indices(X.shape[0], k, rng).indices
    return np.sort(weighted_kmeans(X, k, iters=iters, seed=rng).representatives.indices)


@dataclass(frozen=True)
class BoostEvaluation:
    """Pilot and follow-up bounds evaluated with shared ``theta``, ``T`` and ``||pinv(W_p)||``."""

    pilot: BoundReport
    followup: BoundReport
    theta: float
    gap: float
    conservative_gap: float

    @property
    def drop(self):
        return self.pilot.bound_value - self.followup.bound_value


def boost_evaluation(A, outcome, embedding=None, tol=DEFAULT_TOL):
    """Bound drop between the two stages of a cascade run, and the predicted gap.

    Both bounds use the exact embedding of ``A`` (unless ``embedding`` is
    given), the pilot cluster sizes, ``||pinv(W_p)||_F`` and one ``theta``
    (the larger of the two stage estimates), so their difference isolates
    the change in encoding errors.  Reads all of ``A``: evaluation only.
    """
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    P, Q = exact_embedding(A, tol) if embedding is None else embedding
    stages = (outcome.pilot, outcome.followup)
    theta = max(estimate_theta(A, P, Q, s.row_idx.indices, s.col_idx.indices) for s in stages)
    theta = max(theta, np.finfo(float).tiny)
    cfg = BoundConfig(theta)
    W_p = outcome.pilot.triple.W
    p = bound_report(P, Q, outcome.pilot.row_idx.indices, outcome.pilot.col_idx.indices,
                     W_p, cfg, tol)
    f = bound_report(P, Q, outcome.followup.row_idx.indices, outcome.followup.col_idx.indices,
                     W_p, cfg, tol)
    k = p.k
    f = BoundReport(f.e_r, f.e_c, p.T_r, p.T_c, k, p.w_pinv_norm,
                    theorem1_bound(f.e_r, f.e_c, p.T_r, p.T_c, k, p.w_pinv_norm, cfg))
    return BoostEvaluation(p, f, theta, theorem2_gap(p, f, k, theta),
                           theorem2_gap(p, f, k, theta, conservative=True))
