"""Loading matrices from Matrix Market, ``.npy`` and CSV files."""
from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = ["MatrixMarketError", "load_matrix", "load_matrix_market"]


class MatrixMarketError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "integer", "double", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def load_matrix_market(path):
    """Parse a Matrix Market file.

    ``coordinate`` files give a ``scipy.sparse.csc_matrix`` and ``array``
    files a dense ``ndarray``.  Symmetric and skew-symmetric storage is
    expanded to full storage.  Indices are converted from 1-based.
    """
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise MatrixMarketError(path, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'")
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt not in _FORMATS:
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r}")
    if fld not in _FIELDS:
        raise MatrixMarketError(path, 1, f"unsupported field {fld!r}")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(path, 1, f"unsupported symmetry {sym!r}")
    if fmt == "array" and fld == "pattern":
        raise MatrixMarketError(path, 1, "pattern field requires coordinate format")

    body = [(no, ln.strip()) for no, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError(path, len(lines), "missing size line")
    size_no, size_line = body[0]
    try:
        dims = [int(x) for x in size_line.split()]
    except ValueError:
        raise MatrixMarketError(path, size_no, f"bad size line {size_line!r}") from None
    if (fmt == "coordinate" and len(dims) != 3) or (fmt == "array" and len(dims) != 2):
        raise MatrixMarketError(path, size_no, f"bad size line {size_line!r}")
    m, n = dims[:2]
    if m < 0 or n < 0:
        raise MatrixMarketError(path, size_no, "negative dimension")
    if sym != "general" and m != n:
        raise MatrixMarketError(path, size_no, f"{sym} matrix must be square")
    entries = body[1:]
    if fmt == "coordinate":
        return _coordinate(path, entries, m, n, dims[2], fld, sym)
    return _array(path, entries, m, n, sym)


def _coordinate(path, entries, m, n, nnz, fld, sym):
    if len(entries) != nnz:
        lineno = entries[-1][0] if entries else 2
        raise MatrixMarketError(path, lineno, f"expected {nnz} entries, found {len(entries)}")
    want = 2 if fld == "pattern" else 3
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    for t, (no, line) in enumerate(entries):
        parts = line.split()
        if len(parts) != want:
            raise MatrixMarketError(path, no, f"expected {want} fields, got {len(parts)}")
        try:
            i, j = int(parts[0]), int(parts[1])
            if want == 3:
                vals[t] = float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, no, f"cannot parse entry {line!r}") from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(path, no, f"index ({i}, {j}) out of range for {m}x{n} (1-based)")
        if sym != "general" and i < j:
            raise MatrixMarketError(path, no, f"{sym} storage must hold the lower triangle only")
        if sym == "skew-symmetric" and i == j:
            raise MatrixMarketError(path, no, "skew-symmetric storage cannot hold diagonal entries")
        rows[t], cols[t] = i - 1, j - 1
    if not np.all(np.isfinite(vals)):
        raise MatrixMarketError(path, entries[0][0], "non-finite value")
    keys = rows * max(n, 1) + cols
    order = np.argsort(keys, kind="stable")
    repeated = np.flatnonzero(keys[order][1:] == keys[order][:-1])
    if repeated.size:
        raise MatrixMarketError(path, entries[order[repeated[0] + 1]][0], "duplicate entry")
    if sym != "general":
        off = rows != cols
        sign = -1.0 if sym == "skew-symmetric" else 1.0
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, sign * vals[off]]))
    M = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
    M.sort_indices()
    return M


def _array(path, entries, m, n, sym):
    if sym == "general":
        count = m * n
    elif sym == "symmetric":
        count = n * (n + 1) // 2
    else:
        count = n * (n - 1) // 2
    if len(entries) != count:
        lineno = entries[-1][0] if entries else 2
        raise MatrixMarketError(path, lineno, f"expected {count} values, found {len(entries)}")
    vals = np.empty(count)
    for t, (no, line) in enumerate(entries):
        try:
            vals[t] = float(line.split()[0])
        except (ValueError, IndexError):
            raise MatrixMarketError(path, no, f"cannot parse value {line!r}") from None
    if sym == "general":
        # column-major storage
        return vals.reshape(n, m).T.copy()
    A = np.zeros((n, n))
    t = 0
    for j in range(n):
        start = j if sym == "symmetric" else j + 1
        for i in range(start, n):
            A[i, j] = vals[t]
            A[j, i] = vals[t] if sym == "symmetric" else -vals[t]
            t += 1
    return A


def load_matrix(path):
    """Load by extension: ``.mtx`` (Matrix Market), ``.npy``, or ``.csv``/``.txt``."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".mtx":
        return load_matrix_market(path)
    if suffix == ".npy":
        A = np.load(path, allow_pickle=False)
    elif suffix in (".csv", ".txt"):
        A = np.loadtxt(path, delimiter="," if suffix == ".csv" else None, ndmin=2)
    else:
        raise ValueError(f"unrecognized matrix file extension {suffix!r}")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{path}: expected a two-dimensional matrix")
    return A
