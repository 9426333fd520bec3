"""QUBO matrices, energy evaluation and incremental single-bit flips.

The energy of a binary vector ``x`` under an upper-triangular ``Q`` is

    E(x) = sum_{i <= j} Q[i, j] * x[i] * x[j]

Each unordered pair is stored once. Inputs with ``i > j`` are swapped onto the
upper triangle and repeated pairs are summed, so ``(1, 0, a)`` and
``(0, 1, a)`` describe the same coefficient.
"""

import io
from math import comb

import numpy as np

from . import _kernels as K
from .errors import CapacityError, ContractError, ParseError

MAX_N = 50_000
DENSE_THRESHOLD = 0.25
STORAGE_KINDS = ("dense", "sparse")

_EMPTY_F = np.zeros(0, dtype=np.float64)
_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_2D = np.zeros((0, 0), dtype=np.float64)


def _frozen(a):
    a.setflags(write=False)
    return a


class QuboMatrix:
    """Immutable n x n upper-triangular QUBO coefficient matrix.

    Storage is either ``"dense"`` (a symmetric coupling array plus the
    diagonal; logically the n(n+1)/2 upper slots) or ``"sparse"``
    (coordinate lists of the nonzero strictly-upper entries plus the
    diagonal). Use the ``from_*`` constructors; ``__init__`` is internal.
    """

    def __init__(self, n, linear, *, coupling=None, rows=None, cols=None, vals=None):
        self.n = n
        self.linear = _frozen(linear)
        if coupling is not None:
            self.storage = "dense"
            self._J = _frozen(coupling)
            self._rows = self._cols = None
            self._vals = None
            self._indptr, self._indices, self._data = _EMPTY_I, _EMPTY_I, _EMPTY_F
            self._up = None
        else:
            self.storage = "sparse"
            self._J = _EMPTY_2D
            self._rows, self._cols, self._vals = (_frozen(rows), _frozen(cols), _frozen(vals))
            self._indptr, self._indices, self._data = _symmetric_csr(n, rows, cols, vals)
            counts = np.bincount(rows, minlength=n)
            up_indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=up_indptr[1:])
            self._up = (up_indptr, cols, vals)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_arrays(cls, n, rows, cols, vals, storage="auto", max_n=MAX_N):
        """Build from coordinate arrays; indices are 0-based, any triangle."""
        n = _check_n(n, max_n)
        vals = np.asarray(vals)
        if np.iscomplexobj(vals):
            raise ContractError("complex coefficients are not supported")
        try:
            vals = vals.astype(np.float64, copy=False).ravel()
        except (TypeError, ValueError) as exc:
            raise ContractError(f"non-numeric coefficient: {exc}") from None
        rows = _as_index(rows)
        cols = _as_index(cols)
        if not (rows.shape == cols.shape == vals.shape):
            raise ContractError("rows, cols and vals must have equal length")
        if not np.all(np.isfinite(vals)):
            raise ContractError("coefficients must be finite")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise ContractError(f"index out of range for n={n}")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)

        diag = lo == hi
        linear = np.zeros(n, dtype=np.float64)
        np.add.at(linear, lo[diag], vals[diag])

        off = ~diag
        lo, hi, v = lo[off], hi[off], vals[off]
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        key, v = key[order], v[order]
        if key.size:
            starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            v = np.add.reduceat(v, starts)
            key = key[starts]
        keep = v != 0.0
        key, v = key[keep], v[keep]
        r, c = key // n, key % n

        storage = _pick_storage(storage, n, key.size)
        if storage == "dense":
            J = np.zeros((n, n), dtype=np.float64)
            J[r, c] = v
            J[c, r] = v
            return cls(n, linear, coupling=J)
        return cls(n, linear, rows=r, cols=c, vals=v.copy())

    @classmethod
    def from_entries(cls, n, entries, storage="auto", max_n=MAX_N):
        """Build from an iterable of ``(i, j, value)`` triples."""
        entries = list(entries)
        if not entries:
            return cls.from_arrays(n, [], [], [], storage=storage, max_n=max_n)
        for e in entries:
            if any(isinstance(t, complex) for t in e):
                raise ContractError("complex coefficients are not supported")
        rows, cols, vals = zip(*entries)
        return cls.from_arrays(n, rows, cols, vals, storage=storage, max_n=max_n)

    @classmethod
    def from_dense(cls, matrix, storage="auto", max_n=MAX_N):
        """Build from a square array; lower-triangle entries fold onto the upper one."""
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError("expected a square matrix")
        if np.iscomplexobj(a):
            raise ContractError("complex coefficients are not supported")
        a = a.astype(np.float64)
        n = _check_n(a.shape[0], max_n)
        if not np.all(np.isfinite(a)):
            raise ContractError("coefficients must be finite")
        up = np.triu(a) + np.tril(a, -1).T
        if storage == "auto" or storage == "dense":
            off = np.triu(up, 1)
            if _pick_storage(storage, n, int(np.count_nonzero(off))) == "dense":
                return cls(n, np.diag(up).copy(), coupling=off + off.T)
        r, c = np.nonzero(up)
        return cls.from_arrays(n, r, c, up[r, c], storage="sparse", max_n=max_n)

    @classmethod
    def from_parts(cls, linear, coupling):
        """Dense matrix from a diagonal and a symmetric zero-diagonal coupling.

        No copies or checks beyond shape; for generators that already hold
        validated float64 arrays.
        """
        n = linear.shape[0]
        if coupling.shape != (n, n):
            raise ContractError("coupling shape does not match linear terms")
        return cls(n, linear, coupling=coupling)

    @classmethod
    def zeros(cls, n, storage="sparse"):
        return cls.from_arrays(n, [], [], [], storage=storage)

    # -- views ------------------------------------------------------------

    @property
    def slot_count(self):
        """Number of logical coefficient slots held by this storage kind."""
        if self.storage == "dense":
            return self.n * (self.n + 1) // 2
        return int(np.count_nonzero(self.linear)) + int(self._vals.size)

    @property
    def interaction_count(self):
        """Nonzero strictly off-diagonal coefficients."""
        if self.storage == "dense":
            return int(np.count_nonzero(np.triu(self._J, 1)))
        return int(self._vals.size)

    @property
    def density(self):
        from .generators import density

        return density(self.n, self.interaction_count)

    def coupler_arrays(self):
        """Strictly-upper ``(rows, cols, vals)`` of nonzero couplers, ascending."""
        if self.storage == "dense":
            r, c = np.nonzero(np.triu(self._J, 1))
            return r.astype(np.int64), c.astype(np.int64), self._J[r, c]
        return self._rows, self._cols, self._vals

    def entries(self):
        """All stored upper-triangular ``(rows, cols, vals)``, ascending ``(i, j)``.

        Dense storage reports every slot (zeros included); sparse storage
        reports nonzero diagonal terms plus stored couplers.
        """
        if self.storage == "dense":
            r, c = np.triu_indices(self.n)
            v = self._J[r, c]
            d = r == c
            v[d] = self.linear[r[d]]
            return r.astype(np.int64), c.astype(np.int64), v
        dr = np.flatnonzero(self.linear)
        rows = np.concatenate([dr, self._rows])
        cols = np.concatenate([dr, self._cols])
        vals = np.concatenate([self.linear[dr], self._vals])
        order = np.lexsort((cols, rows))
        return rows[order], cols[order], vals[order]

    def coefficient(self, i, j):
        if i > j:
            i, j = j, i
        if not 0 <= i <= j < self.n:
            raise ContractError(f"index ({i}, {j}) out of range for n={self.n}")
        if i == j:
            return float(self.linear[i])
        if self.storage == "dense":
            return float(self._J[i, j])
        lo, hi = self._up[0][i], self._up[0][i + 1]
        k = lo + np.searchsorted(self._cols[lo:hi], j)
        if k < hi and self._cols[k] == j:
            return float(self._vals[k])
        return 0.0

    def to_dense_upper(self):
        """Full n x n array holding the upper triangle (lower part zero)."""
        out = np.zeros((self.n, self.n))
        r, c, v = self.entries()
        out[r, c] = v
        return out

    def with_storage(self, storage):
        if storage == self.storage:
            return self
        r, c, v = self.entries()
        return QuboMatrix.from_arrays(self.n, r, c, v, storage=storage)

    def neighbours(self, i):
        """Indices j != i with a nonzero coupler to i."""
        if self.storage == "dense":
            return np.flatnonzero(self._J[i])
        return self._indices[self._indptr[i] : self._indptr[i + 1]]

    def kernel_args(self):
        """Tuple consumed by the compiled kernels, see :mod:`qubosmith._kernels`."""
        return (self.linear, self._J, self._indptr, self._indices, self._data, self.storage == "dense")

    def nbytes(self):
        if self.storage == "dense":
            return self._J.nbytes + self.linear.nbytes
        return sum(a.nbytes for a in (self._rows, self._cols, self._vals, self._indices, self._data)) * 2

    def __eq__(self, other):
        if not isinstance(other, QuboMatrix):
            return NotImplemented
        if other.n != self.n:
            return False
        a, b = self.coupler_arrays(), other.coupler_arrays()
        return (
            np.array_equal(self.linear, other.linear)
            and all(np.array_equal(x, y) for x, y in zip(a, b))
        )

    __hash__ = None

    def __repr__(self):
        return f"QuboMatrix(n={self.n}, storage={self.storage!r}, interactions={self.interaction_count})"


def _check_n(n, max_n):
    if isinstance(n, bool) or int(n) != n:
        raise ContractError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    if n > max_n:
        raise CapacityError(f"n={n} exceeds the configured cap of {max_n}")
    return n


def _as_index(a):
    a = np.asarray(a)
    if a.size == 0:
        return np.zeros(0, dtype=np.int64)
    if a.dtype.kind == "f":
        if not np.all(a == np.floor(a)):
            raise ContractError("indices must be integers")
    elif a.dtype.kind not in "iu":
        raise ContractError("indices must be integers")
    return a.astype(np.int64).ravel()


def _pick_storage(storage, n, interactions):
    if storage in STORAGE_KINDS:
        return storage
    if storage != "auto":
        raise ContractError(f"unknown storage kind {storage!r}")
    if n < 2:
        return "dense"
    return "dense" if interactions / comb(n, 2) >= DENSE_THRESHOLD else "sparse"


def _symmetric_csr(n, rows, cols, vals):
    r = np.concatenate([rows, cols])
    c = np.concatenate([cols, rows])
    v = np.concatenate([vals, vals])
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
    return indptr, c.astype(np.int64), v.astype(np.float64)


def as_bits(x, n=None):
    """Validate a binary vector and return it as a fresh int8 array."""
    b = np.asarray(x)
    if b.ndim != 1:
        raise ContractError("bit vector must be one-dimensional")
    if n is not None and b.shape[0] != n:
        raise ContractError(f"bit vector has length {b.shape[0]}, expected {n}")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ContractError("bit vector entries must be 0 or 1")
    return b.astype(np.int8)


def energy(Q, x):
    """Energy of ``x`` under ``Q``, summed in ascending ``(i, j)`` order."""
    bits = as_bits(x, Q.n)
    if Q.storage == "dense":
        return float(K.energy_dense(Q.linear, Q._J, bits))
    up_indptr, up_cols, up_vals = Q._up
    return float(K.energy_upper_csr(Q.linear, up_indptr, up_cols, up_vals, bits))


def local_fields(Q, x):
    bits = as_bits(x, Q.n)
    out = np.empty(Q.n)
    h, J, ip, ix, d, dense = Q.kernel_args()
    K.compute_fields(h, J, ip, ix, d, dense, bits, out)
    return out


class EnergyState:
    """A bit vector with its cached energy and local fields.

    ``fields[i] = Q[i, i] + sum_{j != i} c_ij x_j`` so that flipping bit ``i``
    changes the energy by ``(1 - 2 x_i) * fields[i]``. Single-owner and
    mutable; :meth:`apply_flip` works in place.
    """

    def __init__(self, qubo, bits):
        self.qubo = qubo
        self.bits = as_bits(bits, qubo.n)
        self.fields = local_fields(qubo, self.bits)
        self.energy = energy(qubo, self.bits)

    def _check(self, i):
        if not 0 <= i < self.qubo.n:
            raise IndexError(f"variable index {i} out of range for n={self.qubo.n}")

    def flip_delta(self, i):
        self._check(i)
        f = self.fields[i]
        return float(-f if self.bits[i] else f)

    def all_deltas(self):
        return np.where(self.bits == 1, -self.fields, self.fields)

    def apply_flip(self, i):
        self._check(i)
        Q = self.qubo
        if self.bits[i]:
            delta, s = -self.fields[i], -1.0
            self.bits[i] = 0
        else:
            delta, s = self.fields[i], 1.0
            self.bits[i] = 1
        if Q.storage == "dense":
            self.fields += s * Q._J[i]
        else:
            lo, hi = Q._indptr[i], Q._indptr[i + 1]
            self.fields[Q._indices[lo:hi]] += s * Q._data[lo:hi]
        self.energy += float(delta)
        return self

    def recompute(self):
        """Refresh energy and fields from scratch, discarding drift."""
        self.fields = local_fields(self.qubo, self.bits)
        self.energy = energy(self.qubo, self.bits)
        return self

    def copy(self):
        new = EnergyState.__new__(EnergyState)
        new.qubo = self.qubo
        new.bits = self.bits.copy()
        new.fields = self.fields.copy()
        new.energy = self.energy
        return new

    def __repr__(self):
        return f"EnergyState(n={self.qubo.n}, energy={self.energy!r})"


def flip_delta(state, i):
    return state.flip_delta(i)


def apply_flip(state, i):
    return state.apply_flip(i)


# -- native text format ---------------------------------------------------
#
#   qubo <n> <entry_count>
#   <i> <j> <value>        (0-based, i <= j, one per line; '#' starts a comment)


def dumps(Q):
    buf = io.StringIO()
    _write(Q, buf)
    return buf.getvalue()


def write_qubo(Q, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        _write(Q, fh)


def _write(Q, fh):
    r, c, v = Q.entries()
    fh.write(f"qubo {Q.n} {r.size}\n")
    chunk = 1 << 16
    for s in range(0, r.size, chunk):
        rr = r[s : s + chunk].tolist()
        cc = c[s : s + chunk].tolist()
        vv = v[s : s + chunk].tolist()
        fh.write("".join(f"{a} {b} {x!r}\n" for a, b, x in zip(rr, cc, vv)))


def loads(text, storage="auto"):
    return _read(io.StringIO(text), storage)


def read_qubo(path, storage="auto"):
    with open(path, encoding="ascii") as fh:
        return _read(fh, storage)


def _read(fh, storage):
    lineno = 0
    header = None
    for line in fh:
        lineno += 1
        s = line.split("#", 1)[0].strip()
        if s:
            header = s.split()
            break
    if header is None:
        raise ParseError("missing 'qubo <n> <entry_count>' header")
    if len(header) != 3 or header[0] != "qubo":
        raise ParseError("expected header 'qubo <n> <entry_count>'", lineno)
    try:
        n, count = int(header[1]), int(header[2])
    except ValueError:
        raise ParseError("header counts must be integers", lineno) from None
    if n < 1 or count < 0:
        raise ParseError("header counts out of range", lineno)
    body_start = lineno
    rest = fh.read()
    try:
        arr = np.loadtxt(io.StringIO(rest), comments="#", ndmin=2, dtype=np.float64)
    except ValueError:
        _locate_bad_line(rest, body_start)
        raise
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.shape[1] != 3:
        _locate_bad_line(rest, body_start)
    if arr.shape[0] != count:
        raise ParseError(f"header declares {count} entries, found {arr.shape[0]}")
    i, j, v = arr[:, 0], arr[:, 1], arr[:, 2]
    if not (np.all(i == np.floor(i)) and np.all(j == np.floor(j))):
        _locate_bad_line(rest, body_start)
    if np.any(i > j):
        bad = int(np.flatnonzero(i > j)[0])
        raise ParseError(f"entry {bad + 1} has i > j")
    try:
        return QuboMatrix.from_arrays(n, i.astype(np.int64), j.astype(np.int64), v, storage=storage)
    except ContractError as exc:
        raise ParseError(str(exc)) from None


def _locate_bad_line(text, offset):
    for k, line in enumerate(text.splitlines(), start=offset + 1):
        s = line.split("#", 1)[0].split()
        if not s:
            continue
        if len(s) != 3:
            raise ParseError(f"expected 'i j value', got {line.strip()!r}", k)
        try:
            a, b = int(s[0]), int(s[1])
            float(s[2])
        except ValueError:
            raise ParseError(f"malformed entry {line.strip()!r}", k) from None
        if a < 0 or b < 0:
            raise ParseError("negative index", k)
    raise ParseError("malformed instance body")
