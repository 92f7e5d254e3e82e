"""Synthetic test matrices standing in for the real benchmark data."""
import numpy as np
import scipy.sparse as sp

__all__ = [
    "LazyLowRank",
    "gen_synthetic",
    "lowrank",
    "parse_recipe",
    "rbf_psd",
    "sparse_lowrank",
]


def _check_dims(**dims):
    for name, v in dims.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")


def lowrank(m, n, r, noise=0.0, seed=None):
    """``G1 G2^T + sigma N`` with standard Gaussian ``G1`` (m x r), ``G2`` (n x r), ``N``.

    ``noise`` is relative: ``sigma = noise * sqrt(r)``, the RMS entry of the
    noiseless product.
    """
    _check_dims(m=m, n=n, r=r)
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    G1 = rng.standard_normal((m, r))
    G2 = rng.standard_normal((n, r))
    A = G1 @ G2.T
    if noise > 0:
        A += noise * np.sqrt(r) * rng.standard_normal((m, n))
    return A


def sparse_lowrank(m, n, r, density=0.0056, seed=None, skew=1.0):
    """Low-rank values observed on a sparse, popularity-skewed support.

    Row and column propensities are log-normal with shape ``skew`` (0 gives
    uniform support); exactly ``round(density * m * n)`` entries are kept.
    """
    _check_dims(m=m, n=n, r=r)
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    G1 = rng.standard_normal((m, r))
    G2 = rng.standard_normal((n, r))
    nnz = max(1, int(round(density * m * n)))
    pr = rng.lognormal(0.0, skew, m) if skew > 0 else np.ones(m)
    pc = rng.lognormal(0.0, skew, n) if skew > 0 else np.ones(n)
    pr /= pr.sum()
    pc /= pc.sum()
    keys = np.empty(0, dtype=np.int64)
    while keys.size < nnz:
        need = 2 * (nnz - keys.size) + 16
        i = rng.choice(m, size=need, p=pr)
        j = rng.choice(n, size=need, p=pc)
        fresh = np.unique(i.astype(np.int64) * n + j)
        keys = np.union1d(keys, fresh)
        if keys.size >= m * n:
            break
    keys = rng.permutation(keys)[:nnz]
    i, j = np.divmod(keys, n)
    vals = np.einsum("ij,ij->i", G1[i], G2[j])
    return sp.csc_matrix((vals, (i, j)), shape=(m, n))


def rbf_psd(n, d=3, gamma=None, seed=None):
    """RBF kernel matrix ``exp(-gamma ||x_i - x_j||^2)`` of ``n`` Gaussian points in ``R^d``."""
    _check_dims(n=n, d=d)
    gamma = 1.0 / d if gamma is None else gamma
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    sq = np.einsum("ij,ij->i", X, X)
    D = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    np.fill_diagonal(D, 0.0)
    return np.exp(-gamma * D)


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return x ^ (x >> np.uint64(31))


class LazyLowRank:
    """Noisy low-rank matrix whose entries are generated on demand.

    Only the ``(m + n) r`` factor entries are stored.  The noise at ``(i, j)``
    is a deterministic function of ``(seed, i, j)`` (counter-based hashing
    plus Box-Muller), so repeated reads return identical values.
    """

    def __init__(self, m, n, r, noise=0.0, seed=0):
        _check_dims(m=m, n=n, r=r)
        self.shape = (int(m), int(n))
        self.noise = float(noise)
        self.sigma = self.noise * np.sqrt(r)
        rng = np.random.default_rng(seed)
        self.G1 = rng.standard_normal((m, r))
        self.G2 = rng.standard_normal((n, r))
        self._key = np.uint64(int(rng.integers(0, 2**63)))

    def _noise(self, rows, cols):
        n = np.uint64(self.shape[1])
        with np.errstate(over="ignore"):
            lin = rows.astype(np.uint64)[:, None] * n + cols.astype(np.uint64)[None, :]
            h1 = _splitmix64(lin ^ self._key)
            h2 = _splitmix64(h1)
        u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53
        u2 = (h2 >> np.uint64(11)).astype(np.float64) / 2.0**53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def block(self, rows=None, cols=None):
        m, n = self.shape
        rows = np.arange(m) if rows is None else np.asarray(rows, dtype=np.intp)
        cols = np.arange(n) if cols is None else np.asarray(cols, dtype=np.intp)
        out = self.G1[rows] @ self.G2[cols].T
        if self.sigma > 0:
            out += self.sigma * self._noise(rows, cols)
        return out


_RECIPES = {
    "lowrank": (lowrank, {"m": int, "n": int, "r": int, "noise": float, "seed": int}),
    "sparse_lowrank": (sparse_lowrank, {"m": int, "n": int, "r": int, "density": float,
                                        "seed": int, "skew": float}),
    "rbf_psd": (rbf_psd, {"n": int, "d": int, "gamma": float, "seed": int}),
    "lazy_lowrank": (LazyLowRank, {"m": int, "n": int, "r": int, "noise": float, "seed": int}),
}


def parse_recipe(text):
    """``"lowrank:m=200,n=150,r=10,noise=0.01,seed=0"`` -> ``{"recipe": "lowrank", ...}``."""
    name, _, args = text.partition(":")
    if name not in _RECIPES:
        raise ValueError(f"unknown synthetic recipe {name!r}; choose from {sorted(_RECIPES)}")
    types = _RECIPES[name][1]
    recipe = {"recipe": name}
    for item in filter(None, (a.strip() for a in args.split(","))):
        key, eq, val = item.partition("=")
        if not eq or key not in types:
            raise ValueError(f"bad parameter {item!r} for recipe {name!r}; expected {sorted(types)}")
        recipe[key] = types[key](val)
    return recipe


def gen_synthetic(recipe):
    """Build the matrix described by a recipe dict (see :func:`parse_recipe`)."""
    recipe = dict(recipe)
    name = recipe.pop("recipe", None)
    if name not in _RECIPES:
        raise ValueError(f"unknown synthetic recipe {name!r}")
    fn, types = _RECIPES[name]
    unknown = set(recipe) - set(types)
    if unknown:
        raise ValueError(f"unexpected parameters {sorted(unknown)} for recipe {name!r}")
    return fn(**recipe)
