import math
import os
import time

import numba as nb
import numpy as np

from .. import _kernels as K
from .. import rng
from ..core import energy
from ..errors import ConfigError
from .config import SolveResult

# Sub-stream index reserved for schedule probing; reads use 0, 1, 2, ...
PROBE_STREAM = (1 << 63) + 1
PROBE_SAMPLES = 1000


# TBB in this class of environment is often too old for numba; prefer OpenMP.
nb.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


def configure_threads():
    limit = os.environ.get("QUBOSMITH_THREADS")
    if limit:
        try:
            k = int(limit)
        except ValueError:
            raise ConfigError(f"QUBOSMITH_THREADS must be an integer, got {limit!r}") from None
        nb.set_num_threads(max(1, min(k, nb.config.NUMBA_NUM_THREADS)))


def read_seeds(seed, reads, offset=0):
    return np.array([rng.stream_seed(seed, offset + r) for r in range(reads)], dtype=np.uint64)


@nb.njit(cache=True, inline="always")
def random_bits(state, x):
    for i in range(x.shape[0]):
        x[i] = np.int8(rng.next_u64(state) >> np.uint64(63))


@nb.njit(cache=True)
def _probe(h, J, indptr, indices, data, dense, seed, samples, out):
    n = h.shape[0]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    x = np.empty(n, dtype=np.int8)
    for s in range(samples):
        random_bits(state, x)
        i = rng.next_below(state, n)
        f = h[i]
        if dense:
            row = J[i]
            for j in range(n):
                if x[j]:
                    f += row[j]
        else:
            for p in range(indptr[i], indptr[i + 1]):
                if x[indices[p]]:
                    f += data[p]
        out[s] = abs(f)


def probe_temperatures(Q, seed):
    """``(t_hot, t_cold)`` from |flip delta| over random states and sites.

    ``t_hot`` accepts the median uphill move half the time
    (``median / ln 2``); ``t_cold`` accepts the smallest nonzero one with
    probability 1/100 (``min / ln 100``).
    """
    out = np.empty(PROBE_SAMPLES)
    _probe(*Q.kernel_args(), np.uint64(rng.stream_seed(seed, PROBE_STREAM)), PROBE_SAMPLES, out)
    nonzero = out[out > 0]
    if nonzero.size == 0:
        return 1.0, 0.01
    med = float(np.median(out))
    if med == 0.0:
        med = float(np.median(nonzero))
    t_hot = med / math.log(2.0)
    t_cold = float(nonzero.min()) / math.log(100.0)
    return t_hot, min(t_cold, t_hot)


def geometric_temperatures(t_hot, t_cold, sweeps):
    if sweeps == 1:
        return np.array([t_hot])
    k = np.arange(sweeps) / (sweeps - 1)
    return t_hot * (t_cold / t_hot) ** k


def finalize(Q, bits, energies, solver_id, t0, metadata):
    """Best-of-reads reduction with an exact re-check of the contenders.

    Reads within a small window of the minimum are re-evaluated from scratch
    (removing incremental round-off) and the winner is the lowest exact
    energy, ties going to the lexicographically smallest bit vector.
    """
    energies = np.array(energies, dtype=np.float64)
    lo = energies.min()
    window = 1e-7 * (1.0 + abs(lo))
    contenders = np.flatnonzero(energies <= lo + window)
    best = -1
    for r in contenders:
        energies[r] = energy(Q, bits[r])
    for r in contenders:
        if best < 0 or energies[r] < energies[best] or (
            energies[r] == energies[best] and K.lex_less(bits[r], bits[best])
        ):
            best = r
    elapsed = time.perf_counter() - t0
    return SolveResult(
        best_bits=np.array(bits[best], dtype=np.int8),
        best_energy=float(energies[best]),
        read_energies=energies,
        solve_time=elapsed,
        solver_id=solver_id,
        metadata=metadata,
    )
