"""Benchmark grid: methods x sampling rates x repeats, with CSV/JSON output."""
import csv
import io
import json
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .matcore import MatrixSource, relative_error
from .mmio import load_matrix
from .pipeline import CabsConfig, cabs_run
from .samplers import uniform_indices
from .sketchers import (
    RandomProjectionConfig,
    cur_full,
    cur_to_sketch,
    nystrom,
    pseudo_skeleton,
    random_projection_sketch,
    sample_triple,
    sketch_cur,
    stabilized_sketch,
)
from .synthetic import gen_synthetic, parse_recipe

__all__ = [
    "METHODS",
    "BenchRecord",
    "DatasetSpec",
    "bench_run",
    "emit",
    "k_for_rate",
    "read_records",
    "run_method",
]

# desk-scale stand-ins for the real benchmark matrices
DEFAULT_DATASETS = {
    "dense": {"recipe": "lowrank", "m": 2000, "n": 1500, "r": 50, "noise": 0.01, "seed": 0},
    "sparse": {"recipe": "sparse_lowrank", "m": 4000, "n": 3000, "r": 50, "density": 0.005,
               "seed": 0},
    "psd": {"recipe": "rbf_psd", "n": 1000, "d": 3, "seed": 0},
}


@dataclass(frozen=True)
class DatasetSpec:
    """A named matrix: either a file path or a synthetic recipe dict."""

    name: str
    source: object
    kind: str = "dense"

    def __post_init__(self):
        if self.kind not in ("dense", "sparse", "psd"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")

    @classmethod
    def from_recipe(cls, text, name=None):
        recipe = parse_recipe(text)
        kind = {"sparse_lowrank": "sparse", "rbf_psd": "psd"}.get(recipe["recipe"], "dense")
        return cls(name or recipe["recipe"], recipe, kind)

    def load(self):
        backing = gen_synthetic(self.source) if isinstance(self.source, dict) \
            else load_matrix(self.source)
        return MatrixSource(backing)


@dataclass(frozen=True)
class BenchRecord:
    method: str
    rate: float
    k: int
    seed: int
    rel_error: float
    wall_time_ms: float
    rows_touched: int
    cols_touched: int
    all_access: bool


def k_for_rate(rate, m, n):
    """``k = round(rate * sqrt(m n))``, at least 1."""
    return max(1, int(round(rate * np.sqrt(float(m) * float(n)))))


def _uniform_pair(source, k, rng):
    m, n = source.shape
    return uniform_indices(m, k, rng), uniform_indices(n, k, rng)


def _m_pseudo_skeleton(source, k, seed):
    rows, cols = _uniform_pair(source, k, np.random.default_rng(seed))
    return pseudo_skeleton(sample_triple(source, rows, cols))


def _m_pilot(source, k, seed):
    rows, cols = _uniform_pair(source, k, np.random.default_rng(seed))
    return stabilized_sketch(sample_triple(source, rows, cols), *source.shape)


def _m_sketch_cur(source, k, seed):
    rng = np.random.default_rng(seed)
    rows, cols = _uniform_pair(source, k, rng)
    return cur_to_sketch(*sketch_cur(source, rows, cols, 3, rng))


def _m_cur_full(source, k, seed):
    rows, cols = _uniform_pair(source, k, np.random.default_rng(seed))
    t = sample_triple(source, rows, cols)
    return cur_to_sketch(t.C, cur_full(source, t.C, t.R), t.R)


def _m_nystrom(source, k, seed):
    m, n = source.shape
    if m != n:
        raise ValueError("nystrom needs a square (PSD) matrix")
    idx = uniform_indices(m, k, np.random.default_rng(seed))
    return nystrom(sample_triple(source, idx, idx))


def _m_random_projection(source, k, seed):
    return random_projection_sketch(source, RandomProjectionConfig(k=k, p=10, q=1), seed)


def _cabs(variant):
    def run(source, k, seed):
        return cabs_run(source, CabsConfig(k1=k, k2=k, variant=variant, seed=seed)).sketch
    return run


METHODS = {
    "pseudo_skeleton": _m_pseudo_skeleton,
    "sketch_cur": _m_sketch_cur,
    "pilot": _m_pilot,
    "cabs_wkmeans": _cabs("wkmeans"),
    "cabs_leverage": _cabs("leverage"),
    "cabs_hard_threshold": _cabs("hard_threshold"),
    "nystrom": _m_nystrom,
    "cur_full": _m_cur_full,
    "random_projection": _m_random_projection,
}


def run_method(method, source, k, seed):
    """Run one registered method on a fresh view of ``source``; returns (sketch, record fields)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; registered: {', '.join(sorted(METHODS))}")
    view = source.fresh()
    t0 = time.perf_counter()
    sk = METHODS[method](view, k, seed)
    elapsed = (time.perf_counter() - t0) * 1e3
    err = relative_error(source.fresh(), sk)
    return sk, {
        "rel_error": err,
        "wall_time_ms": elapsed,
        "rows_touched": len(view.row_access_log),
        "cols_touched": len(view.col_access_log),
        "all_access": view.all_accessed,
    }


def bench_run(spec, methods, rates, repeats, seed=0, source=None):
    """Evaluate every (method, rate, repeat) combination.

    All methods share the derived seed of a (rate, repeat) cell.  Records are
    sorted by (method, rate, seed).
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; registered: {', '.join(sorted(METHODS))}")
    source = spec.load() if source is None else source
    m, n = source.shape
    records = []
    for ri, rate in enumerate(rates):
        k = k_for_rate(rate, m, n)
        for rep in range(repeats):
            cell_seed = int(np.random.SeedSequence([seed, ri, rep]).generate_state(1)[0])
            for method in methods:
                _, res = run_method(method, source, k, cell_seed)
                records.append(BenchRecord(method, float(rate), k, cell_seed, **res))
    records.sort(key=lambda r: (r.method, r.rate, r.seed))
    return records


_FIELDS = [f.name for f in fields(BenchRecord)]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit(records, fmt="csv", path=None):
    """Write records as CSV or JSON (floats with 17 significant digits).

    Returns the text; also writes it to ``path`` when given.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, f)) for f in _FIELDS])
        text = buf.getvalue()
    elif fmt == "json":
        objs = []
        for r in records:
            d = asdict(r)
            items = ", ".join(f"{json.dumps(f)}: {_fmt(d[f]) if f != 'method' else json.dumps(d[f])}"
                              for f in _FIELDS)
            objs.append("  {" + items + "}")
        text = "[\n" + ",\n".join(objs) + "\n]\n" if objs else "[]\n"
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_records(path_or_text, fmt="csv"):
    """Parse output of :func:`emit` back into :class:`BenchRecord` objects."""
    p = Path(path_or_text) if not isinstance(path_or_text, str) or "\n" not in path_or_text \
        else None
    text = p.read_text() if p is not None else path_or_text
    if fmt == "json":
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for d in rows:
        all_access = d["all_access"]
        if isinstance(all_access, str):
            all_access = all_access == "true"
        out.append(BenchRecord(
            method=str(d["method"]), rate=float(d["rate"]), k=int(d["k"]), seed=int(d["seed"]),
            rel_error=float(d["rel_error"]), wall_time_ms=float(d["wall_time_ms"]),
            rows_touched=int(d["rows_touched"]), cols_touched=int(d["cols_touched"]),
            all_access=bool(all_access)))
    return out
