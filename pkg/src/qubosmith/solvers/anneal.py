"""Simulated annealing with a geometric schedule, and steepest descent."""

import math
import time

import numba as nb
import numpy as np

from .. import _kernels as K
from .. import rng
from ._common import configure_threads, finalize, geometric_temperatures, probe_temperatures, random_bits, read_seeds
from .config import SolverConfig


@nb.njit(cache=True, parallel=True)
def _sa_kernel(h, J, indptr, indices, data, dense, temps, seeds, out_bits, out_energy, out_accepted):
    n = h.shape[0]
    for r in nb.prange(seeds.shape[0]):
        state = np.empty(1, dtype=np.uint64)
        state[0] = seeds[r]
        x = out_bits[r]
        random_bits(state, x)
        fields = np.empty(n)
        K.compute_fields(h, J, indptr, indices, data, dense, x, fields)
        e = K.energy_from_fields(h, x, fields)
        accepted = 0
        for k in range(temps.shape[0]):
            t = temps[k]
            for i in range(n):
                d = K.delta_of(i, x, fields)
                if d <= 0.0 or rng.next_double(state) < math.exp(-d / t):
                    e += K.flip_update(i, x, fields, J, indptr, indices, data, dense)
                    accepted += 1
        out_energy[r] = e
        out_accepted[r] = accepted


def schedule_endpoints(Q, cfg):
    t_hot, t_cold = cfg.schedule.t_hot, cfg.schedule.t_cold
    if t_hot is None or t_cold is None:
        auto_hot, auto_cold = probe_temperatures(Q, cfg.seed)
        t_hot = auto_hot if t_hot is None else t_hot
        t_cold = min(auto_cold, t_hot) if t_cold is None else t_cold
        if t_cold > t_hot:
            t_hot = t_cold
    return float(t_hot), float(t_cold)


def simulated_annealing(Q, cfg=None):
    """Best-of-reads Metropolis annealing from random starts.

    Sweep ``k`` runs at ``t_hot * (t_cold / t_hot) ** (k / (sweeps - 1))`` and
    proposes every variable once in index order.
    """
    cfg = cfg or SolverConfig()
    configure_threads()
    t0 = time.perf_counter()
    t_hot, t_cold = schedule_endpoints(Q, cfg)
    temps = geometric_temperatures(t_hot, t_cold, cfg.sweeps)
    bits = np.zeros((cfg.reads, Q.n), dtype=np.int8)
    energies = np.empty(cfg.reads)
    accepted = np.zeros(cfg.reads, dtype=np.int64)
    _sa_kernel(*Q.kernel_args(), temps, read_seeds(cfg.seed, cfg.reads), bits, energies, accepted)
    meta = {
        "t_hot": t_hot,
        "t_cold": t_cold,
        "accepted_moves": int(accepted.sum()),
        "proposed_moves": int(cfg.reads) * int(cfg.sweeps) * Q.n,
    }
    return finalize(Q, bits, energies, "sa", t0, meta)


@nb.njit(cache=True, parallel=True)
def _sd_kernel(h, J, indptr, indices, data, dense, seeds, out_bits, out_energy, out_steps):
    n = h.shape[0]
    for r in nb.prange(seeds.shape[0]):
        state = np.empty(1, dtype=np.uint64)
        state[0] = seeds[r]
        x = out_bits[r]
        random_bits(state, x)
        fields = np.empty(n)
        K.compute_fields(h, J, indptr, indices, data, dense, x, fields)
        e = K.energy_from_fields(h, x, fields)
        steps = 0
        while True:
            best = 0.0
            bi = -1
            for i in range(n):
                d = K.delta_of(i, x, fields)
                if d < best:
                    best = d
                    bi = i
            if bi < 0:
                break
            e += K.flip_update(bi, x, fields, J, indptr, indices, data, dense)
            steps += 1
        out_energy[r] = e
        out_steps[r] = steps


def steepest_descent(Q, cfg=None):
    """Greedy best-single-flip descent to a 1-flip local minimum, per read.

    Each step flips the variable with the most negative delta (lowest index
    on ties) and stops when no flip lowers the energy.
    """
    cfg = cfg or SolverConfig()
    configure_threads()
    t0 = time.perf_counter()
    bits = np.zeros((cfg.reads, Q.n), dtype=np.int8)
    energies = np.empty(cfg.reads)
    steps = np.zeros(cfg.reads, dtype=np.int64)
    _sd_kernel(*Q.kernel_args(), read_seeds(cfg.seed, cfg.reads), bits, energies, steps)
    meta = {"descent_steps": int(steps.sum())}
    return finalize(Q, bits, energies, "sd", t0, meta)
