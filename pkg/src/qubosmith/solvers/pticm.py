"""Parallel tempering with isoenergetic (Houdayer) cluster moves.

Replicas come in pairs: ``num_replicas / 2`` temperature levels, two chains
per level. Replica ``2 * l + c`` is chain ``c`` of level ``l``; level 0 is the
hottest.
"""

import math
import time
from collections import deque

import numba as nb
import numpy as np

from .. import _kernels as K
from .. import rng
from ..core import as_bits, local_fields
from ._common import finalize, probe_temperatures, random_bits, read_seeds
from .config import SolverConfig


@nb.njit(cache=True)
def _init_replica(h, J, indptr, indices, data, dense, state, x, fields):
    random_bits(state, x)
    K.compute_fields(h, J, indptr, indices, data, dense, x, fields)
    return K.energy_from_fields(h, x, fields)


@nb.njit(cache=True)
def _metropolis(h, J, indptr, indices, data, dense, x, fields, e, beta, sweeps, state):
    n = h.shape[0]
    accepted = 0
    for _ in range(sweeps):
        for i in range(n):
            d = K.delta_of(i, x, fields)
            if d <= 0.0 or rng.next_double(state) < math.exp(-beta * d):
                e += K.flip_update(i, x, fields, J, indptr, indices, data, dense)
                accepted += 1
    return e, accepted


@nb.njit(cache=True)
def _flip_set(h, J, indptr, indices, data, dense, x, fields, sites):
    de = 0.0
    for k in range(sites.shape[0]):
        de += K.flip_update(sites[k], x, fields, J, indptr, indices, data, dense)
    return de


def beta_ladder(Q, cfg):
    """Inverse temperatures, hottest first, one per level."""
    levels = cfg.pticm.num_replicas // 2
    if cfg.pticm.beta_ladder is not None:
        return np.array(sorted(cfg.pticm.beta_ladder), dtype=np.float64)
    t_hot, t_cold = cfg.schedule.t_hot, cfg.schedule.t_cold
    if t_hot is None or t_cold is None:
        auto_hot, auto_cold = probe_temperatures(Q, cfg.seed)
        t_hot = auto_hot if t_hot is None else t_hot
        t_cold = min(auto_cold, t_hot) if t_cold is None else t_cold
    b_min, b_max = 1.0 / t_hot, 1.0 / t_cold
    return b_min * (b_max / b_min) ** (np.arange(levels) / (levels - 1))


def cluster(Q, xa, xb, site):
    """Connected component of ``site`` among disagreeing variables.

    Connectivity is over stored (nonzero) couplers; the result is sorted.
    """
    disagree = xa != xb
    if not disagree[site]:
        return np.zeros(0, dtype=np.int64)
    seen = np.zeros(Q.n, dtype=bool)
    seen[site] = True
    queue = deque([site])
    while queue:
        i = queue.popleft()
        nb_ = Q.neighbours(i)
        new = nb_[disagree[nb_] & ~seen[nb_]]
        seen[new] = True
        queue.extend(new.tolist())
    return np.flatnonzero(seen)


def icm_move(Q, xa, xb, site):
    """Swap the cluster at ``site`` between two chains.

    Returns ``(new_a, new_b, cluster, delta_pair)`` where ``delta_pair`` is the
    change of ``E(a) + E(b)`` from incremental updates. Inputs are untouched.
    """
    xa, xb = as_bits(xa, Q.n), as_bits(xb, Q.n)
    sites = cluster(Q, xa, xb, site)
    fa, fb = local_fields(Q, xa), local_fields(Q, xb)
    args = Q.kernel_args()
    de = _flip_set(*args, xa, fa, sites) + _flip_set(*args, xb, fb, sites)
    return xa, xb, sites, de


def pt_icm(Q, cfg=None):
    """Replica-exchange Monte Carlo with cluster moves; best state ever seen.

    Each iteration: ``sweeps`` Metropolis sweeps per replica, exchange
    attempts between adjacent levels (same chain index) accepted with
    ``min(1, exp((b_a - b_b)(E_a - E_b)))``, then one cluster move per level
    accepted by Metropolis on the pair's total energy change.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    n = Q.n
    R = cfg.pticm.num_replicas
    L = R // 2
    args = Q.kernel_args()
    betas = beta_ladder(Q, cfg)
    beta_of = np.repeat(betas, 2)

    seeds = read_seeds(cfg.seed, R + 1)
    states = [np.array([s], dtype=np.uint64) for s in seeds[:R]]
    ctrl = np.array([seeds[R]], dtype=np.uint64)

    x = np.zeros((R, n), dtype=np.int8)
    fields = np.zeros((R, n))
    e = np.zeros(R)
    for r in range(R):
        e[r] = _init_replica(*args, states[r], x[r], fields[r])

    # Best state seen in each replica slot; the overall best is their minimum.
    slot_best = e.copy()
    slot_best_x = x.copy()

    def observe(r):
        if e[r] < slot_best[r]:
            slot_best[r] = e[r]
            slot_best_x[r] = x[r]

    sweep_accepts = 0
    exch_tries = exch_accepts = 0
    icm_tries = icm_accepts = 0
    cluster_sizes = []
    for _ in range(cfg.pticm.num_iterations):
        for r in range(R):
            e[r], acc = _metropolis(*args, x[r], fields[r], e[r], beta_of[r], cfg.sweeps, states[r])
            sweep_accepts += acc
            observe(r)

        for lvl in range(L - 1):
            for c in range(2):
                a, b = 2 * lvl + c, 2 * (lvl + 1) + c
                exch_tries += 1
                arg = (beta_of[a] - beta_of[b]) * (e[a] - e[b])
                if arg >= 0.0 or rng.next_double(ctrl) < math.exp(arg):
                    exch_accepts += 1
                    x[[a, b]] = x[[b, a]]
                    fields[[a, b]] = fields[[b, a]]
                    e[[a, b]] = e[[b, a]]

        for lvl in range(L):
            a, b = 2 * lvl, 2 * lvl + 1
            diff = np.flatnonzero(x[a] != x[b])
            if diff.size == 0:
                continue
            site = int(diff[rng.next_below(ctrl, diff.size)])
            sites = cluster(Q, x[a], x[b], site)
            cluster_sizes.append(int(sites.size))
            xa, xb = x[a].copy(), x[b].copy()
            fa, fb = fields[a].copy(), fields[b].copy()
            da = _flip_set(*args, xa, fa, sites)
            db = _flip_set(*args, xb, fb, sites)
            icm_tries += 1
            arg = -beta_of[a] * (da + db)
            if arg >= 0.0 or rng.next_double(ctrl) < math.exp(arg):
                icm_accepts += 1
                x[a], x[b] = xa, xb
                fields[a], fields[b] = fa, fb
                e[a] += da
                e[b] += db
                observe(a)
                observe(b)

    meta = {
        "betas": betas,
        "sweep_accepted_moves": sweep_accepts,
        "exchange_attempts": exch_tries,
        "exchange_accepted": exch_accepts,
        "icm_attempts": icm_tries,
        "icm_accepted": icm_accepts,
        "mean_cluster_size": float(np.mean(cluster_sizes)) if cluster_sizes else 0.0,
    }
    return finalize(Q, slot_best_x, slot_best, "pticm", t0, meta)
