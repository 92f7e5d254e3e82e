"""Cascaded bilateral sampling: pilot sample -> pilot sketch -> follow-up sample -> final sketch."""
import time
from dataclasses import dataclass, field

import numpy as np

from .matcore import IndexSet, extract
from .samplers import (
    WeightFn,
    encoding_error,
    hard_threshold_select,
    leverage_sample,
    nearest_assignment,
    uniform_indices,
    weighted_kmeans,
    weights_from_embedding,
)
from .sketchers import orthogonalize, pseudo_skeleton, sample_triple, stabilized_sketch

__all__ = ["CabsConfig", "CabsOutcome", "Stage", "cabs_run", "validate_rank"]

VARIANTS = ("wkmeans", "leverage", "hard_threshold")
SKETCHERS = ("stabilized", "pseudo_skeleton")


@dataclass(frozen=True)
class CabsConfig:
    """Parameters of one CABS run.

    ``k2=None`` means ``k2 = k1``; ``weight_fn=None`` picks constant weights
    for dense inputs and ``power(2)`` for sparse ones.  ``rank_r`` is an int,
    ``"auto"`` (tolerance truncation) or ``"validate"`` (holdout sweep).
    """

    k1: int
    k2: int = None
    variant: str = "wkmeans"
    weight_fn: WeightFn = None
    kmeans_iters: int = 5
    rank_r: object = "auto"
    seed: int = 0
    sketcher: str = "stabilized"

    def __post_init__(self):
        if self.k2 is None:
            object.__setattr__(self, "k2", self.k1)
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1 and k2 must be >= 1")
        if self.kmeans_iters < 1:
            raise ValueError("kmeans_iters must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.sketcher not in SKETCHERS:
            raise ValueError(f"unknown sketcher {self.sketcher!r}; choose from {SKETCHERS}")
        if isinstance(self.rank_r, str):
            if self.rank_r not in ("auto", "validate"):
                raise ValueError("rank_r must be an int, 'auto' or 'validate'")
        elif int(self.rank_r) < 1:
            raise ValueError("rank_r must be >= 1")


@dataclass
class Stage:
    """One sampling+sketching round."""

    sketch: object
    row_idx: IndexSet
    col_idx: IndexSet
    triple: object = field(repr=False, default=None)
    rank_r: object = None


@dataclass
class CabsOutcome:
    pilot: Stage
    followup: Stage
    embedding: tuple
    stats: dict = field(default_factory=dict)

    @property
    def sketch(self):
        return self.followup.sketch


def _sketch_fn(cfg):
    if cfg.sketcher == "stabilized":
        return lambda t, m, n, r: stabilized_sketch(t, m, n, rank_r=r)
    return lambda t, m, n, r: pseudo_skeleton(t, rank_r=r)


def validate_rank(source, t, holdout, sketcher=None):
    """Pick the rank that best reconstructs a held-out block.

    ``holdout`` is ``(rows, cols)``; only ``A[rows, cols]`` is read.  Ranks
    ``1..k`` are swept and the lowest rank attaining the minimum error wins.
    """
    m, n = source.shape
    h_rows = IndexSet.coerce(holdout[0], m)
    h_cols = IndexSet.coerce(holdout[1], n)
    if len(h_rows) == 0 or len(h_cols) == 0:
        raise ValueError("holdout must be non-empty")
    if np.intersect1d(h_rows.indices, t.row_idx.indices).size or \
            np.intersect1d(h_cols.indices, t.col_idx.indices).size:
        raise ValueError("holdout must be disjoint from the sampled indices")
    if sketcher is None:
        sketcher = lambda tt, mm, nn, r: stabilized_sketch(tt, mm, nn, rank_r=r)
    M = extract(source, h_rows, h_cols)
    k = min(t.W.shape)
    errs = []
    for r in range(1, k + 1):
        sk = sketcher(t, m, n, r)
        diff = M - sk.block(h_rows.indices, h_cols.indices)
        errs.append(float(np.linalg.norm(diff)))
    errs = np.array(errs)
    best = errs.min()
    return int(np.flatnonzero(errs <= best + 1e-12 * max(best, 1.0))[0]) + 1


def _holdout(m, n, used_rows, used_cols, size, rng):
    free_r = np.setdiff1d(np.arange(m), used_rows)
    free_c = np.setdiff1d(np.arange(n), used_cols)
    hr = min(size, free_r.size)
    hc = min(size, free_c.size)
    if hr == 0 or hc == 0:
        raise ValueError("no rows/columns left for a validation holdout")
    rows = np.sort(rng.choice(free_r, size=hr, replace=False))
    cols = np.sort(rng.choice(free_c, size=hc, replace=False))
    return IndexSet(rows, m), IndexSet(cols, n)


def _sketch_stage(source, rows, cols, cfg, sketch, holdout):
    m, n = source.shape
    t = sample_triple(source, rows, cols)
    rank = cfg.rank_r
    if rank == "validate":
        rank = validate_rank(source, t, holdout, sketch)
    elif rank == "auto":
        rank = None
    return Stage(sketch(t, m, n, rank), t.row_idx, t.col_idx, t, rank)


def _followup_indices(cfg, P, Q, pilot, weight_fn, rngs):
    if cfg.variant == "wkmeans":
        try:
            kr = weighted_kmeans(P, cfg.k2, weight_fn, cfg.kmeans_iters, rngs[0])
            kc = weighted_kmeans(Q, cfg.k2, weight_fn, cfg.kmeans_iters, rngs[1])
        except ValueError as exc:
            raise ValueError(f"wkmeans follow-up sampling failed: {exc}") from exc
        return kr.representatives, kc.representatives, (kr, kc)
    if cfg.variant == "leverage":
        orth = orthogonalize(pilot.sketch)
        if orth.rank == 0:
            raise ValueError("leverage follow-up sampling failed: pilot sketch has rank 0")
        return (leverage_sample(orth.U, cfg.k2, rngs[0]),
                leverage_sample(orth.V, cfg.k2, rngs[1]), None)
    return (hard_threshold_select(weights_from_embedding(P, weight_fn), cfg.k2),
            hard_threshold_select(weights_from_embedding(Q, weight_fn), cfg.k2), None)


def cabs_run(source, cfg):
    """Run the two-round cascade on ``source``.

    Only the rows and columns named by the pilot and follow-up index sets
    (plus a small holdout block when ``rank_r="validate"``) are read.

    Returns
    -------
    CabsOutcome
        ``pilot`` / ``followup`` stages, the pilot embedding ``(P, Q)`` and
        ``stats`` with per-stage encoding errors (measured on the pilot
        embedding) and timings.
    """
    m, n = source.shape
    if cfg.k1 > min(m, n) or cfg.k2 > min(m, n):
        raise ValueError(f"k1={cfg.k1}, k2={cfg.k2} exceed min(m, n)={min(m, n)}")
    weight_fn = cfg.weight_fn
    if weight_fn is None:
        weight_fn = WeightFn.power(2.0) if source.is_sparse else WeightFn.constant()
    sketch = _sketch_fn(cfg)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(5)]
    timings = {}

    t0 = time.perf_counter()
    rows = uniform_indices(m, cfg.k1, rngs[0])
    cols = uniform_indices(n, cfg.k1, rngs[1])
    holdout = None
    if cfg.rank_r == "validate":
        holdout = _holdout(m, n, rows.indices, cols.indices, cfg.k1, rngs[4])
    timings["pilot_sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pilot = _sketch_stage(source, rows, cols, cfg, sketch, holdout)
    root = np.sqrt(pilot.sketch.S)
    P = pilot.sketch.U * root
    Q = pilot.sketch.V * root
    timings["pilot_sketching"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    f_rows, f_cols, km = _followup_indices(cfg, P, Q, pilot, weight_fn, rngs[2:4])
    timings["followup_sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if holdout is not None:
        # the follow-up sample may overlap the pilot holdout; drop shared indices
        holdout = (IndexSet(np.setdiff1d(holdout[0].indices, f_rows.indices), m),
                   IndexSet(np.setdiff1d(holdout[1].indices, f_cols.indices), n))
        if len(holdout[0]) == 0 or len(holdout[1]) == 0:
            holdout = _holdout(m, n, f_rows.indices, f_cols.indices, cfg.k2, rngs[4])
    followup = _sketch_stage(source, f_rows, f_cols, cfg, sketch, holdout)
    timings["followup_sketching"] = time.perf_counter() - t0

    stats = {"timings": timings, "weight_fn": weight_fn}
    for name, stage in (("pilot", pilot), ("followup", followup)):
        for side, X, idx in (("row", P, stage.row_idx), ("col", Q, stage.col_idx)):
            a = nearest_assignment(X, idx.indices)
            stats[f"{name}_{side}_encoding"] = encoding_error(X, idx.indices, a)
            stats[f"{name}_{side}_encoding_weighted"] = encoding_error(X, idx.indices, a, weight_fn)
    if km is not None:
        stats["kmeans_objective"] = (km[0].objective_history, km[1].objective_history)
    return CabsOutcome(pilot, followup, (P, Q), stats)
