"""Tabu search over single-bit flips with aspiration."""

import time

import numba as nb
import numpy as np

from .. import _kernels as K
from ..core import as_bits, local_fields
from ._common import finalize, random_bits, read_seeds
from .config import SolverConfig

# Slots of the per-read scalar state arrays.
_E, _BEST = 0, 1
_IT, _SINCE = 0, 1


def default_tenure(n):
    return min(20, max(4, n // 10))


def default_stagnation(n):
    return max(100, 10 * n)


@nb.njit(cache=True)
def _init_read(h, J, indptr, indices, data, dense, seed, x, fields):
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    random_bits(state, x)
    K.compute_fields(h, J, indptr, indices, data, dense, x, fields)
    return K.energy_from_fields(h, x, fields)


@nb.njit(cache=True)
def _advance(h, J, indptr, indices, data, dense, x, fields, tabu_until, best_x, fs, ints, tenure, stagnation, max_iters):
    """Run up to ``max_iters`` iterations; True once the stagnation limit is hit."""
    n = h.shape[0]
    e = fs[_E]
    best_e = fs[_BEST]
    it = ints[_IT]
    since = ints[_SINCE]
    done = False
    # Improvements must beat round-off, or cycles through the best state
    # would keep resetting the stagnation counter.
    tol = 1e-9 * (1.0 + abs(best_e))
    for _ in range(max_iters):
        if since >= stagnation:
            done = True
            break
        bi = -1
        bd = np.inf
        for i in range(n):
            d = K.delta_of(i, x, fields)
            if tabu_until[i] > it and not (e + d < best_e - tol):
                continue
            if d < bd:
                bd = d
                bi = i
        if bi < 0:
            # Every move is tabu and none aspirates: take the best one anyway.
            for i in range(n):
                d = K.delta_of(i, x, fields)
                if d < bd:
                    bd = d
                    bi = i
        e += K.flip_update(bi, x, fields, J, indptr, indices, data, dense)
        tabu_until[bi] = it + 1 + tenure
        it += 1
        if e < best_e - tol:
            best_e = e
            tol = 1e-9 * (1.0 + abs(best_e))
            best_x[:] = x
            since = 0
        else:
            since += 1
    if since >= stagnation:
        done = True
    fs[_E] = e
    fs[_BEST] = best_e
    ints[_IT] = it
    ints[_SINCE] = since
    return done


class _Walker:
    """One tabu trajectory; holds the arrays ``_advance`` mutates."""

    def __init__(self, Q, x, fields, e, tenure, stagnation):
        self.args = Q.kernel_args()
        self.x = x
        self.fields = fields
        self.tabu_until = np.zeros(Q.n, dtype=np.int64)
        self.best_x = x.copy()
        self.fs = np.array([e, e])
        self.ints = np.zeros(2, dtype=np.int64)
        self.tenure = tenure
        self.stagnation = stagnation

    def step(self, iters):
        return _advance(
            *self.args, self.x, self.fields, self.tabu_until, self.best_x,
            self.fs, self.ints, self.tenure, self.stagnation, iters,
        )

    @property
    def energy(self):
        return float(self.fs[_E])

    @property
    def best_energy(self):
        return float(self.fs[_BEST])

    @property
    def iterations(self):
        return int(self.ints[_IT])


def _params(Q, cfg):
    t = cfg.tabu
    tenure = default_tenure(Q.n) if t.tenure is None else t.tenure
    tenure = min(tenure, Q.n - 1)
    stagnation = default_stagnation(Q.n) if t.stagnation_limit is None else t.stagnation_limit
    timeout = t.timeout_ms or 0.0
    return tenure, stagnation, timeout


def tabu_search(Q, cfg=None):
    """Best-of-reads tabu search from random starts.

    Each iteration takes the best admissible single flip, even an uphill
    one. A flipped variable stays tabu for ``tenure`` iterations unless
    flipping it would beat the read's best energy. A read ends after
    ``stagnation_limit`` iterations without a new read-best, or once
    ``timeout_ms`` of wall time has passed.
    """
    cfg = cfg or SolverConfig()
    tenure, stagnation, timeout_ms = _params(Q, cfg)
    t0 = time.perf_counter()
    n = Q.n
    args = Q.kernel_args()
    seeds = read_seeds(cfg.seed, cfg.reads)
    bits = np.zeros((cfg.reads, n), dtype=np.int8)
    energies = np.empty(cfg.reads)
    iterations = np.zeros(cfg.reads, dtype=np.int64)
    read_times = np.zeros(cfg.reads)
    timeouts = 0
    # Iterations per kernel call; only affects how often the clock is read.
    chunk = 1 if timeout_ms else stagnation
    for r in range(cfg.reads):
        x = np.empty(n, dtype=np.int8)
        fields = np.empty(n)
        e = _init_read(*args, seeds[r], x, fields)
        w = _Walker(Q, x, fields, e, tenure, stagnation)
        start = time.perf_counter()
        while True:
            before = time.perf_counter()
            done = w.step(chunk)
            now = time.perf_counter()
            if done:
                break
            if timeout_ms:
                if (now - start) * 1e3 >= timeout_ms:
                    timeouts += 1
                    break
                per_iter = (now - before) / chunk
                budget = 0.01 * timeout_ms * 1e-3
                chunk = int(min(max(budget / max(per_iter, 1e-9), 1), 1_000_000))
            else:
                chunk = min(chunk * 2, 1_000_000)
        read_times[r] = time.perf_counter() - start
        bits[r] = w.best_x
        energies[r] = w.best_energy
        iterations[r] = w.iterations
    meta = {
        "tenure": tenure,
        "stagnation_limit": stagnation,
        "timeout_ms": timeout_ms,
        "iterations": int(iterations.sum()),
        "timeouts": timeouts,
        "max_read_time_s": float(read_times.max()),
        "read_times_s": read_times,
    }
    return finalize(Q, bits, energies, "ts", t0, meta)


def tabu_walk(Q, start, iterations, tenure=None):
    """Deterministic trajectory from ``start``: energies after each iteration.

    Returns ``(energies, best_energies, states)`` with ``iterations + 1``
    entries each (index 0 is the start). Stagnation never stops the walk.
    """
    x = as_bits(start, Q.n)
    tenure = default_tenure(Q.n) if tenure is None else tenure
    tenure = min(tenure, Q.n - 1)
    fields = local_fields(Q, x)
    e = K.energy_from_fields(Q.linear, x, fields)
    w = _Walker(Q, x, fields, e, tenure, 1 << 62)
    energies, best, states = [w.energy], [w.best_energy], [x.copy()]
    for _ in range(iterations):
        w.step(1)
        energies.append(w.energy)
        best.append(w.best_energy)
        states.append(w.x.copy())
    return np.array(energies), np.array(best), np.array(states)
