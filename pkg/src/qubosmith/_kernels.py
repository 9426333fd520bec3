"""Compiled inner loops shared by the core types and every solver.

A QUBO reaches the kernels as ``(h, J, indptr, indices, data, dense)``:
``h`` holds the diagonal, and the symmetric coupling is either the dense
``J`` (zero diagonal, ``c_ij`` in both triangles) or a symmetric CSR triple.
The unused representation is passed as an empty array.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def energy_dense(h, J, x):
    n = h.shape[0]
    s = 0.0
    for i in range(n):
        if x[i]:
            s += h[i]
            row = J[i]
            for j in range(i + 1, n):
                if x[j]:
                    s += row[j]
    return s


@nb.njit(cache=True)
def energy_upper_csr(h, up_indptr, up_indices, up_data, x):
    # up_* holds strictly upper entries with ascending column per row.
    n = h.shape[0]
    s = 0.0
    for i in range(n):
        if x[i]:
            s += h[i]
            for p in range(up_indptr[i], up_indptr[i + 1]):
                if x[up_indices[p]]:
                    s += up_data[p]
    return s


@nb.njit(cache=True)
def compute_fields(h, J, indptr, indices, data, dense, x, out):
    n = h.shape[0]
    if dense:
        for i in range(n):
            s = h[i]
            row = J[i]
            for j in range(n):
                if x[j]:
                    s += row[j]
            out[i] = s
    else:
        for i in range(n):
            s = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                if x[indices[p]]:
                    s += data[p]
            out[i] = s


@nb.njit(cache=True, inline="always")
def flip_update(i, x, fields, J, indptr, indices, data, dense):
    """Toggle bit ``i`` and push the change into the neighbours' fields.

    Returns the energy change. ``fields[i]`` itself is unaffected because
    the coupling has no diagonal.
    """
    if x[i]:
        delta = -fields[i]
        x[i] = 0
        s = -1.0
    else:
        delta = fields[i]
        x[i] = 1
        s = 1.0
    if dense:
        row = J[i]
        for j in range(fields.shape[0]):
            fields[j] += s * row[j]
    else:
        for p in range(indptr[i], indptr[i + 1]):
            fields[indices[p]] += s * data[p]
    return delta


@nb.njit(cache=True, inline="always")
def delta_of(i, x, fields):
    if x[i]:
        return -fields[i]
    return fields[i]


@nb.njit(cache=True)
def energy_from_fields(h, x, fields):
    # E = sum_i x_i (h_i + f_i) / 2, valid because f_i = h_i + sum_j c_ij x_j.
    s = 0.0
    for i in range(h.shape[0]):
        if x[i]:
            s += h[i] + fields[i]
    return 0.5 * s


def lex_less(a, b):
    """True if bit vector ``a`` precedes ``b`` lexicographically (x[0] first)."""
    diff = np.flatnonzero(a != b)
    return bool(diff.size) and a[diff[0]] < b[diff[0]]
