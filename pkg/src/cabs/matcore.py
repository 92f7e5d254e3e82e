"""Matrix storage, access-logged views and small dense kernels.

Everything downstream reads the input matrix through a :class:`MatrixSource`,
which records which rows and columns were materialized.  That log is what
lets the test-suite check the linear-access contract of the sketchers.
"""
import threading
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ALL",
    "IndexSet",
    "MatrixSource",
    "Sketch",
    "extract",
    "frob_norm",
    "pinv_truncated",
    "relative_error",
    "thin_svd",
]

ALL = "all"

DEFAULT_TOL = 1e-12
ERROR_BLOCK = 256


class IndexSet:
    """Distinct, in-range row or column indices (order preserved)."""

    __slots__ = ("indices", "domain_size")

    def __init__(self, indices, domain_size):
        idx = np.asarray(indices)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size and not np.issubdtype(idx.dtype, np.integer):
            if not np.all(np.equal(np.mod(idx, 1), 0)):
                raise ValueError("indices must be integers")
        idx = idx.astype(np.intp)
        domain_size = int(domain_size)
        if idx.size:
            bad = idx[(idx < 0) | (idx >= domain_size)]
            if bad.size:
                raise IndexError(f"index {int(bad[0])} out of range for size {domain_size}")
            if np.unique(idx).size != idx.size:
                vals, counts = np.unique(idx, return_counts=True)
                raise ValueError(f"duplicate index {int(vals[counts > 1][0])}")
        idx.setflags(write=False)
        self.indices = idx
        self.domain_size = domain_size

    @classmethod
    def coerce(cls, indices, domain_size):
        if isinstance(indices, IndexSet):
            if indices.domain_size != domain_size:
                raise ValueError(
                    f"index set built for size {indices.domain_size}, used on size {domain_size}")
            return indices
        return cls(indices, domain_size)

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())

    def __array__(self, dtype=None, copy=None):
        return self.indices if dtype is None else self.indices.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.domain_size == other.domain_size and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.domain_size, self.indices.tobytes()))

    def __repr__(self):
        return f"IndexSet({self.indices.tolist()}, domain_size={self.domain_size})"


class MatrixSource:
    """Read-only matrix wrapper that logs every row and column it hands out.

    ``backing`` is a dense ndarray, a scipy sparse matrix, or any object with
    a ``shape`` attribute and a ``block(rows, cols)`` method (``None`` meaning
    all indices along that axis) returning a dense array.
    """

    def __init__(self, backing):
        if isinstance(backing, np.ndarray):
            if backing.ndim != 2:
                raise ValueError("dense backing must be two-dimensional")
            backing = np.ascontiguousarray(backing, dtype=float)
            if not np.all(np.isfinite(backing)):
                raise ValueError("matrix contains non-finite values")
            self._kind = "dense"
        elif sp.issparse(backing):
            backing = sp.csc_matrix(backing, dtype=float)
            backing.sum_duplicates()
            backing.sort_indices()
            if not np.all(np.isfinite(backing.data)):
                raise ValueError("matrix contains non-finite values")
            self._csr = backing.tocsr()
            self._kind = "sparse"
        elif hasattr(backing, "block") and hasattr(backing, "shape"):
            self._kind = "generator"
        else:
            raise TypeError(f"unsupported backing type {type(backing).__name__}")
        self.backing = backing
        self.shape = tuple(int(d) for d in backing.shape)
        self._lock = threading.Lock()
        self._rows = set()
        self._cols = set()
        self._all = False

    @property
    def is_sparse(self):
        return self._kind == "sparse"

    @property
    def row_access_log(self):
        with self._lock:
            return frozenset(self._rows)

    @property
    def col_access_log(self):
        with self._lock:
            return frozenset(self._cols)

    @property
    def all_accessed(self):
        return self._all

    def fresh(self):
        """Same backing, empty access logs."""
        clone = object.__new__(MatrixSource)
        clone.__dict__.update(self.__dict__)
        clone._lock = threading.Lock()
        clone._rows, clone._cols, clone._all = set(), set(), False
        return clone

    def _log(self, rows, cols):
        with self._lock:
            if rows is None and cols is None:
                self._all = True
            if rows is not None:
                self._rows.update(rows.tolist())
            if cols is not None:
                self._cols.update(cols.tolist())

    def _read(self, rows, cols):
        if self._kind == "dense":
            A = self.backing
            if rows is None and cols is None:
                return A.copy()
            if rows is None:
                return A[:, cols]
            if cols is None:
                return A[rows, :]
            return A[np.ix_(rows, cols)]
        if self._kind == "sparse":
            if cols is None:
                M = self._csr if rows is None else self._csr[rows, :]
            else:
                M = self.backing[:, cols]
                if rows is not None:
                    M = M[rows, :]
            return M.toarray()
        return np.asarray(self.backing.block(rows, cols), dtype=float)

    def read_all(self):
        """Materialize the full matrix.  Only for quadratic baselines and evaluation."""
        self._log(None, None)
        return self._read(None, None)

    def read_column_block(self, cols):
        """Dense ``A[:, cols]`` for streaming evaluation; flags full access."""
        self._log(None, None)
        return self._read(None, np.asarray(cols, dtype=np.intp))


def extract(source, rows, cols):
    """Return ``A[rows, cols]`` as a dense array and log the access.

    ``rows`` / ``cols`` are :class:`IndexSet` (or index sequences) or
    :data:`ALL`.  An explicit index set along an axis is added to that axis'
    log; asking for ``ALL`` along both axes sets the full-access flag.
    """
    m, n = source.shape
    r = None if _is_all(rows) else IndexSet.coerce(rows, m).indices
    c = None if _is_all(cols) else IndexSet.coerce(cols, n).indices
    out = source._read(r, c)
    source._log(r, c)
    return out


def _is_all(x):
    return isinstance(x, str) and x == ALL


@dataclass(frozen=True)
class Sketch:
    """Low-rank factor triple with ``A ~ U @ diag(S) @ V.T``."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    orthonormal: bool = False

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        S = np.asarray(self.S, dtype=float).reshape(-1)
        V = np.asarray(self.V, dtype=float)
        if U.ndim != 2 or V.ndim != 2:
            raise ValueError("U and V must be two-dimensional")
        r = S.size
        if U.shape[1] != r or V.shape[1] != r:
            raise ValueError(f"factor widths {U.shape[1]}, {V.shape[1]} do not match {r} values")
        if np.any(S < 0):
            raise ValueError("S must be nonnegative")
        if r > 1 and np.any(np.diff(S) > 0):
            raise ValueError("S must be sorted in descending order")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "V", V)

    @property
    def shape(self):
        return self.U.shape[0], self.V.shape[0]

    @property
    def rank(self):
        return self.S.size

    def block(self, rows=None, cols=None):
        U = self.U if rows is None else self.U[np.asarray(rows)]
        V = self.V if cols is None else self.V[np.asarray(cols)]
        return (U * self.S) @ V.T

    def to_dense(self):
        return self.block()

    @classmethod
    def empty(cls, m, n):
        return cls(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))


def frob_norm(M):
    """Frobenius norm of a dense or sparse matrix."""
    if sp.issparse(M):
        data = sp.csr_matrix(M).data
        return float(np.sqrt(np.dot(data, data)))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M.ravel()))


def thin_svd(M):
    """Economy SVD ``M = U @ diag(S) @ V.T`` with ``S`` descending.

    Returns ``(U, S, V)``; note ``V`` (not its transpose).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("thin_svd expects a two-dimensional array")
    if not np.all(np.isfinite(M)):
        raise ValueError("thin_svd input contains NaN or Inf")
    m, n = M.shape
    if m == 0 or n == 0:
        r = 0
        return np.zeros((m, r)), np.zeros(r), np.zeros((n, r))
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    return U, S, Vt.T


def truncation_rank(S, r=None, tol=DEFAULT_TOL):
    """Number of singular triplets to keep.

    ``r=None`` (or ``"auto"``) keeps values above ``tol * S[0]``; an explicit
    ``r`` keeps the top ``r`` but never more than exist.
    """
    if S.size == 0 or S[0] == 0:
        return 0
    if r is None or (isinstance(r, str) and r == "auto"):
        return int(np.count_nonzero(S > tol * S[0]))
    r = int(r)
    if r < 0:
        raise ValueError("rank must be nonnegative")
    return min(r, S.size)


def pinv_truncated(M, r=None, tol=DEFAULT_TOL):
    """Pseudo-inverse ``V_r diag(1/S_r) U_r.T`` from the top ``r`` singular triplets."""
    M = np.asarray(M, dtype=float)
    if r is not None and not isinstance(r, str) and r > min(M.shape):
        raise ValueError(f"rank {r} exceeds min(dims) = {min(M.shape)}")
    U, S, V = thin_svd(M)
    keep = truncation_rank(S, r, tol)
    return (V[:, :keep] / S[:keep]) @ U[:, :keep].T


def relative_error(source, sk):
    """``||A - U S V^T||_F / ||A||_F`` streamed over column blocks.

    Evaluation-only: reads the whole matrix and flags it in the access log.
    """
    m, n = source.shape
    if sk.shape != (m, n):
        raise ValueError(f"sketch shape {sk.shape} does not match matrix shape {(m, n)}")
    US = sk.U * sk.S
    num = 0.0
    den = 0.0
    for start in range(0, n, ERROR_BLOCK):
        cols = np.arange(start, min(start + ERROR_BLOCK, n))
        A_blk = source.read_column_block(cols)
        diff = A_blk - US @ sk.V[cols].T
        num += float(np.einsum("ij,ij->", diff, diff))
        den += float(np.einsum("ij,ij->", A_blk, A_blk))
    if den == 0.0:
        raise ValueError("relative error undefined for an all-zero matrix")
    return float(np.sqrt(num / den))
