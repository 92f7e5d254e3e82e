"""Row/column selection strategies and encoding-error accounting.

Samplers operate on index domains or on low-dimensional embeddings
(one point per row or column of the input matrix); none of them touch the
matrix itself.
"""
from dataclasses import dataclass, field

import numpy as np

from .matcore import IndexSet

__all__ = [
    "KmeansResult",
    "WeightFn",
    "encoding_error",
    "hard_threshold_select",
    "leverage_sample",
    "nearest_assignment",
    "uniform_indices",
    "weighted_kmeans",
    "weights_from_embedding",
]


@dataclass(frozen=True)
class WeightFn:
    """Monotone non-decreasing map from embedding row norms to k-means weights.

    kinds: ``constant``; ``power`` (``x**exponent``); ``sigmoid``
    (``1 / (1 + exp(-scale * (x - shift)))``); ``step`` (``x >= threshold``).
    """

    kind: str = "constant"
    exponent: float = 2.0
    scale: float = 1.0
    shift: float = 0.0
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "sigmoid", "step"):
            raise ValueError(f"unknown weight function kind {self.kind!r}")
        if self.kind == "power" and self.exponent < 0:
            raise ValueError("power exponent must be >= 0 for a monotone weight")
        if self.kind == "sigmoid" and self.scale <= 0:
            raise ValueError("sigmoid scale must be > 0 for a monotone weight")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def power(cls, exponent=2.0):
        return cls("power", exponent=float(exponent))

    @classmethod
    def sigmoid(cls, scale=1.0, shift=0.0):
        return cls("sigmoid", scale=float(scale), shift=float(shift))

    @classmethod
    def step(cls, threshold):
        return cls("step", threshold=float(threshold))

    @classmethod
    def parse(cls, text):
        """Parse ``constant``, ``power:2``, ``sigmoid:1,0`` or ``step:0.5``."""
        name, _, args = text.partition(":")
        vals = [float(a) for a in args.split(",") if a.strip()]
        if name == "constant":
            return cls.constant()
        if name == "power":
            return cls.power(*vals)
        if name == "sigmoid":
            return cls.sigmoid(*vals)
        if name == "step":
            if len(vals) != 1:
                raise ValueError("step weight needs a threshold, e.g. step:0.5")
            return cls.step(vals[0])
        raise ValueError(f"unknown weight function {text!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.ones_like(x)
        if self.kind == "power":
            return x ** self.exponent
        if self.kind == "sigmoid":
            z = self.scale * (x - self.shift)
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        return (x >= self.threshold).astype(float)


def uniform_indices(domain_size, k, seed=None):
    """``k`` distinct indices drawn uniformly without replacement, sorted."""
    if k > domain_size:
        raise ValueError(f"cannot draw {k} distinct indices from {domain_size}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    rng = np.random.default_rng(seed)
    idx = rng.choice(domain_size, size=k, replace=False)
    return IndexSet(np.sort(idx), domain_size)


def weights_from_embedding(X, w):
    """Per-row weights ``w(||X[l]||_2)``."""
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("embedding contains non-finite values")
    return w(np.linalg.norm(X, axis=1))


def _sq_dists(X, centers):
    d = (np.einsum("ij,ij->i", X, X)[:, None]
         - 2.0 * X @ centers.T
         + np.einsum("ij,ij->i", centers, centers)[None, :])
    return np.maximum(d, 0.0)


def nearest_assignment(X, reps):
    """Map each row of ``X`` to the position (in ``reps``) of its nearest representative.

    Ties go to the lowest position.
    """
    X = np.asarray(X, dtype=float)
    reps = np.asarray(reps, dtype=np.intp)
    d = _sq_dists(X, X[reps])
    # exact zeros for the representatives themselves
    d[reps, np.arange(reps.size)] = 0.0
    return np.argmin(d, axis=1)


def encoding_error(X, reps, assignment, w=None):
    """``sum_l ||X[l] - X[reps[s(l)]]||^2 * w(||X[l]||)``; unweighted when ``w`` is None."""
    X = np.asarray(X, dtype=float)
    reps = np.asarray(reps, dtype=np.intp)
    assignment = np.asarray(assignment, dtype=np.intp)
    if assignment.shape != (X.shape[0],):
        raise ValueError("assignment must map every point")
    if assignment.size and (assignment.min() < 0 or assignment.max() >= reps.size):
        raise ValueError("assignment refers to a missing representative")
    diff = X - X[reps[assignment]]
    sq = np.einsum("ij,ij->i", diff, diff)
    if w is None:
        return float(sq.sum())
    return float(np.dot(sq, weights_from_embedding(X, w)))


@dataclass
class KmeansResult:
    """Output of :func:`weighted_kmeans`.

    ``centers`` are the snapped centers ``X[representatives]``;
    ``lloyd_centers`` are the weighted means before snapping.
    ``objective_history`` holds the weighted objective after every
    assignment step of the Lloyd loop.
    """

    centers: np.ndarray
    assignment: np.ndarray
    representatives: IndexSet
    weighted_error: float
    iterations_run: int
    lloyd_centers: np.ndarray = field(repr=False, default=None)
    objective_history: list = field(default_factory=list)


def _kmeanspp(X, weights, k, rng):
    n = X.shape[0]
    chosen = [int(rng.choice(n, p=weights / weights.sum()))]
    closest = _sq_dists(X, X[chosen])[:, 0]
    for _ in range(1, k):
        pot = weights * closest
        total = pot.sum()
        if total <= 0:
            # remaining weighted mass sits on chosen points; fall back to
            # unchosen positive-weight points with distinct coordinates
            cand = np.flatnonzero((weights > 0) & (closest > 0))
            if cand.size == 0:
                cand = np.setdiff1d(np.flatnonzero(weights > 0), chosen)
            nxt = int(cand[0])
        else:
            nxt = int(rng.choice(n, p=pot / total))
        chosen.append(nxt)
        closest = np.minimum(closest, _sq_dists(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def _objective(X, weights, centers, assignment):
    diff = X - centers[assignment]
    return float(np.dot(weights, np.einsum("ij,ij->i", diff, diff)))


def weighted_kmeans(X, k, w=None, iters=5, seed=None, weights=None):
    """Weighted Lloyd iterations followed by snapping centers to data points.

    Parameters
    ----------
    X : (n, d) array
        Embedding, one point per row/column of the matrix being sampled.
    k : int
        Number of clusters (= number of representatives returned).
    w : WeightFn, optional
        Weight function applied to point norms; constant when omitted.
    iters : int
        Lloyd iterations after k-means++ seeding.
    seed : int or Generator
    weights : (n,) array, optional
        Explicit nonnegative point weights; overrides ``w``.

    Returns
    -------
    KmeansResult
        Representatives are distinct in-sample indices; assignment maps each
        point to the nearest representative and ``weighted_error`` is the
        weighted encoding error at that assignment.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if k < 1:
        raise ValueError("k must be >= 1")
    if weights is None:
        weights = weights_from_embedding(X, w or WeightFn.constant())
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite, nonnegative and one per point")
    if np.unique(X, axis=0).shape[0] < k:
        raise ValueError(f"fewer than {k} distinct points")
    positive = weights > 0
    if np.unique(X[positive], axis=0).shape[0] < k:
        raise ValueError(f"fewer than {k} distinct points with nonzero weight")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, weights, k, rng)
    history = []
    assignment = np.argmin(_sq_dists(X, centers), axis=1)
    for _ in range(iters):
        history.append(_objective(X, weights, centers, assignment))
        dist = None
        for j in range(k):
            members = assignment == j
            mass = weights[members].sum()
            if mass > 0:
                centers[j] = weights[members] @ X[members] / mass
            else:
                # empty (or weightless) cluster: move it to the worst-served point
                if dist is None:
                    diff = X - centers[assignment]
                    dist = weights * np.einsum("ij,ij->i", diff, diff)
                far = int(np.argmax(dist))
                centers[j] = X[far]
                dist[far] = -1.0
        assignment = np.argmin(_sq_dists(X, centers), axis=1)
    history.append(_objective(X, weights, centers, assignment))

    reps = _snap(X, weights, centers, assignment)
    rep_assign = nearest_assignment(X, reps)
    diff = X - X[reps[rep_assign]]
    err = float(np.dot(weights, np.einsum("ij,ij->i", diff, diff)))
    return KmeansResult(
        centers=X[reps].copy(),
        assignment=rep_assign,
        representatives=IndexSet(reps, n),
        weighted_error=err,
        iterations_run=iters,
        lloyd_centers=centers,
        objective_history=history,
    )


def _snap(X, weights, centers, assignment):
    """Replace centers by distinct nearest data points, heaviest clusters first."""
    k = centers.shape[0]
    mass = np.bincount(assignment, weights=weights, minlength=k)
    order = np.argsort(-mass, kind="stable")
    d = _sq_dists(X, centers)
    taken = np.zeros(X.shape[0], dtype=bool)
    reps = np.empty(k, dtype=np.intp)
    for j in order:
        dj = np.where(taken, np.inf, d[:, j])
        i = int(np.argmin(dj))
        reps[j] = i
        taken[i] = True
    return reps


def leverage_sample(F, k, seed=None, check_tol=1e-8):
    """Sample ``k`` rows without replacement with probability ~ ``||F[i]||^2 / r``.

    ``F`` must have orthonormal columns.  When fewer than ``k`` rows carry a
    nonzero score, all of them are taken and the rest is filled uniformly
    from the zero-score rows.
    """
    F = np.asarray(F, dtype=float)
    n, r = F.shape
    if k > n:
        raise ValueError(f"cannot draw {k} distinct indices from {n}")
    if r == 0:
        raise ValueError("leverage scores need at least one column")
    gram = F.T @ F
    if np.max(np.abs(gram - np.eye(r))) > check_tol:
        raise ValueError("F must have orthonormal columns; orthogonalize first")
    scores = np.einsum("ij,ij->i", F, F) / r
    rng = np.random.default_rng(seed)
    nz = np.flatnonzero(scores > 0)
    if nz.size <= k:
        rest = np.setdiff1d(np.arange(n), nz)
        extra = rng.choice(rest, size=k - nz.size, replace=False)
        idx = np.concatenate([nz, extra])
    else:
        idx = rng.choice(n, size=k, replace=False, p=scores / scores.sum())
    return IndexSet(np.sort(idx), n)


def hard_threshold_select(weights, k):
    """Indices of the ``k`` largest weights (ties to the lowest index), sorted."""
    weights = np.asarray(weights, dtype=float)
    if k > weights.size:
        raise ValueError(f"cannot select {k} of {weights.size} items")
    order = np.argsort(-weights, kind="stable")
    return IndexSet(np.sort(order[:k]), weights.size)
