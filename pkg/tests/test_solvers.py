import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_assignments, naive_minimum
from qubosmith import CapacityError, ConfigError, EnergyState, QuboMatrix, energy
from qubosmith.generators import GeneratorSpec, random_qubo
from qubosmith.solvers import (
    SOLVERS,
    SolverConfig,
    brute_force,
    get_solver,
    is_known,
    pt_icm,
    simulated_annealing,
    steepest_descent,
    tabu_search,
)
from qubosmith.solvers.pticm import beta_ladder, cluster, icm_move
from qubosmith.solvers.tabu import default_stagnation, default_tenure, tabu_walk

FAST = SolverConfig(reads=20, sweeps=100)
FAST_TS = SolverConfig(reads=10).replace(timeout_ms=0, stagnation_limit=200)
FAST_PT = SolverConfig(sweeps=20).replace(num_iterations=5)
CONFIGS = {"bf": None, "sa": FAST, "sd": FAST, "ts": FAST_TS, "pticm": FAST_PT}


def vector_energies(Q):
    X = all_assignments(Q.n).astype(np.float64)
    return np.einsum("ki,ij,kj->k", X, Q.to_dense_upper(), X)


# -- registry / config ----------------------------------------------------------------


def test_registry():
    assert set(SOLVERS) == {"bf", "sa", "sd", "ts", "pticm"}
    assert is_known("qbsolv-like:sa") and is_known("sd")
    assert not is_known("qbsolv-like:nope") and not is_known("ip")
    with pytest.raises(ConfigError):
        get_solver("annealer")


@pytest.mark.parametrize(
    "overrides",
    [
        {"reads": 0},
        {"sweeps": -1},
        {"seed": 1.5},
        {"t_hot": -1.0},
        {"t_hot": 1.0, "t_cold": 2.0},
        {"num_replicas": 5},
        {"num_replicas": 2},
        {"num_replicas": 4, "beta_ladder": [1.0]},
        {"tenure": -1},
        {"stagnation_limit": 0},
        {"kind": "linear"},
        {"no_such_option": 1},
    ],
)
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        SolverConfig().replace(**overrides)


def test_config_round_trip():
    cfg = SolverConfig(reads=3, seed=9).replace(tenure=5, t_hot=2.0, num_replicas=6)
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg


# -- brute force --------------------------------------------------------------------------


def test_bf_fixture(tri):
    r = brute_force(tri)
    assert r.best_bits.tolist() == [1, 1] and r.best_energy == -1.0


def test_bf_positive_diagonal():
    Q = QuboMatrix.from_entries(5, [(i, i, 1.0 + i) for i in range(5)])
    r = brute_force(Q)
    assert r.best_bits.tolist() == [0] * 5 and r.best_energy == 0.0


@pytest.mark.parametrize("storage", ["dense", "sparse"])
def test_bf_matches_naive_enumerator(storage):
    Q = random_qubo(GeneratorSpec(16, 0.1, 11)).with_storage(storage)
    e, x = naive_minimum(Q)
    r = brute_force(Q)
    assert r.best_energy == pytest.approx(e, abs=1e-12)
    assert r.best_bits.tolist() == x.tolist()


def test_bf_ties_lexicographic():
    # Three optimal states at -1: [0,1], [1,0], [1,1]; [0,1] is smallest.
    Q = QuboMatrix.from_entries(2, [(0, 0, -1.0), (1, 1, -1.0), (0, 1, 1.0)])
    assert brute_force(Q).best_bits.tolist() == [0, 1]
    assert brute_force(QuboMatrix.zeros(3)).best_bits.tolist() == [0, 0, 0]


def test_bf_capacity():
    with pytest.raises(CapacityError):
        brute_force(QuboMatrix.zeros(27))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**31), st.sampled_from(["dense", "sparse"]))
def test_bf_is_exact_minimum(n, seed, storage):
    Q = random_qubo(GeneratorSpec(n, 1.0, seed)).with_storage(storage)
    assert brute_force(Q).best_energy == pytest.approx(vector_energies(Q).min(), abs=1e-12)


# -- shared postconditions --------------------------------------------------------------------


@pytest.mark.parametrize("solver_id", sorted(SOLVERS))
def test_fixture_optimum_all_solvers(tri, solver_id):
    r = get_solver(solver_id)(tri, CONFIGS[solver_id])
    assert r.best_bits.tolist() == [1, 1] and r.best_energy == -1.0


@pytest.mark.parametrize("solver_id", sorted(SOLVERS))
@pytest.mark.parametrize("storage", ["dense", "sparse"])
def test_result_contract(solver_id, storage):
    Q = random_qubo(GeneratorSpec(14, 0.1, 5)).with_storage(storage)
    r = get_solver(solver_id)(Q, CONFIGS[solver_id])
    assert r.best_energy == min(r.read_energies)
    assert abs(energy(Q, r.best_bits) - r.best_energy) < 1e-8
    assert r.best_energy >= brute_force(Q).best_energy - 1e-12
    assert r.solver_id == solver_id and r.solve_time >= 0


@pytest.mark.parametrize("solver_id", sorted(SOLVERS))
def test_zero_matrix(solver_id):
    r = get_solver(solver_id)(QuboMatrix.zeros(6), CONFIGS[solver_id])
    assert r.best_energy == 0.0


@pytest.mark.parametrize("solver_id", ["bf", "sa", "sd", "ts", "pticm"])
def test_deterministic(solver_id):
    Q = random_qubo(GeneratorSpec(20, 1.0, 6))
    cfg = CONFIGS[solver_id]
    if cfg is not None:
        cfg = cfg.replace(seed=17)
    a = get_solver(solver_id)(Q, cfg)
    b = get_solver(solver_id)(Q, cfg)
    assert a.best_energy == b.best_energy
    assert np.array_equal(a.best_bits, b.best_bits)
    assert np.array_equal(a.read_energies, b.read_energies)


def test_reads_use_independent_streams():
    """Read r of a 5-read run equals read r of a 2-read run (stream per read index)."""
    Q = random_qubo(GeneratorSpec(25, 1.0, 1))
    a = simulated_annealing(Q, SolverConfig(reads=5, sweeps=50, seed=3))
    b = simulated_annealing(Q, SolverConfig(reads=2, sweeps=50, seed=3))
    assert np.array_equal(a.read_energies[:2], b.read_energies)


def test_sa_sparse_and_dense_agree():
    Q = random_qubo(GeneratorSpec(20, 1.0, 2))
    cfg = SolverConfig(reads=8, sweeps=60, seed=1)
    a = simulated_annealing(Q.with_storage("dense"), cfg)
    b = simulated_annealing(Q.with_storage("sparse"), cfg)
    assert np.allclose(a.read_energies, b.read_energies, atol=1e-9)


# -- simulated annealing --------------------------------------------------------------------


def test_sa_auto_endpoints():
    Q = random_qubo(GeneratorSpec(40, 0.01, 3))
    r = simulated_annealing(Q, SolverConfig(reads=2, sweeps=10))
    t_hot, t_cold = r.metadata["t_hot"], r.metadata["t_cold"]
    assert 0 < t_cold <= t_hot
    # Scale follows sigma: the same instance scaled by 100 gets 100x temperatures.
    r2 = simulated_annealing(random_qubo(GeneratorSpec(40, 1.0, 3)), SolverConfig(reads=2, sweeps=10))
    assert r2.metadata["t_hot"] == pytest.approx(100 * t_hot, rel=1e-9)


def test_sa_flat_hot_schedule_accepts_nearly_everything():
    for seed in range(5):
        Q = random_qubo(GeneratorSpec(32, 1.0, seed))
        r = simulated_annealing(Q, SolverConfig(reads=10, sweeps=50, seed=seed).replace(t_hot=1e6, t_cold=1e6))
        assert r.metadata["accepted_moves"] / r.metadata["proposed_moves"] >= 0.99


def test_sa_more_sweeps_is_better_on_average():
    short, long_ = [], []
    for seed in range(50):
        Q = random_qubo(GeneratorSpec(64, 1.0, 1000 + seed))
        short.append(simulated_annealing(Q, SolverConfig(reads=10, sweeps=10, seed=seed)).best_energy)
        long_.append(simulated_annealing(Q, SolverConfig(reads=10, sweeps=1000, seed=seed)).best_energy)
    assert np.mean(long_) <= np.mean(short)


# -- steepest descent ----------------------------------------------------------------------------


def sd_reads(Q, reads, seed=0):
    """Per-read (start, end) vectors, with starts regenerated from the read streams."""
    from qubosmith import rng
    from qubosmith.solvers.anneal import _sd_kernel

    seeds = np.array([rng.stream_seed(seed, k) for k in range(reads)], dtype=np.uint64)
    starts = []
    for s in seeds:
        state = np.array([s], dtype=np.uint64)
        starts.append([int(rng.next_u64(state) >> np.uint64(63)) for _ in range(Q.n)])
    bits = np.zeros((reads, Q.n), dtype=np.int8)
    _sd_kernel(*Q.kernel_args(), seeds, bits, np.empty(reads), np.zeros(reads, dtype=np.int64))
    return starts, bits.tolist()


def test_sd_fixture_every_start(tri):
    # [0,0] has both flip deltas at +1, so it is itself a strict local minimum;
    # every other start descends to [1,1].
    expected = {(0, 0): [0, 0], (1, 0): [1, 1], (0, 1): [1, 1], (1, 1): [1, 1]}
    starts, ends = sd_reads(tri, 64)
    assert {tuple(s) for s in starts} == set(expected)
    for s, e in zip(starts, ends):
        assert e == expected[tuple(s)]
    r = steepest_descent(tri, SolverConfig(reads=64))
    assert r.best_bits.tolist() == [1, 1] and r.best_energy == -1.0


@pytest.mark.parametrize("seed", range(5))
def test_sd_returns_local_minimum(seed):
    Q = random_qubo(GeneratorSpec(40, 1.0, seed))
    r = steepest_descent(Q, SolverConfig(reads=30, seed=seed))
    assert np.all(EnergyState(Q, r.best_bits).all_deltas() >= 0)


def test_sd_never_beats_oracle():
    for seed in range(5):
        Q = random_qubo(GeneratorSpec(16, 0.1, seed))
        assert steepest_descent(Q, SolverConfig(reads=1000)).best_energy >= brute_force(Q).best_energy - 1e-12


def test_sd_is_steepest_not_first_improvement():
    # From all-zero, steepest flips x2 (-3) and stops at [0,0,1] = -3. First
    # improvement would flip x0 (-1), then x2 (-0.5), and stop at [1,0,1] = -1.5.
    Q = QuboMatrix.from_entries(3, [(0, 0, -1.0), (1, 1, 0.5), (2, 2, -3.0), (0, 2, 2.5)])
    starts, ends = sd_reads(Q, 64)
    hits = [e for s, e in zip(starts, ends) if s == [0, 0, 0]]
    assert hits
    assert all(e == [0, 0, 1] for e in hits)


# -- tabu search ------------------------------------------------------------------------------------


def test_tabu_defaults():
    assert default_tenure(16) == 4 and default_tenure(100) == 10 and default_tenure(1000) == 20
    assert default_stagnation(16) == 160 and default_stagnation(5) == 100


def find_escape_instance():
    """n=4 instance with exactly one strict local minimum besides the global one."""
    X = all_assignments(4)
    for seed in range(10_000):
        Q = random_qubo(GeneratorSpec(4, 1.0, seed))
        e = vector_energies(Q)
        g = int(np.argmin(e))
        minima = []
        for k, x in enumerate(X):
            d = EnergyState(Q, x).all_deltas()
            if np.all(d > 1e-6):
                minima.append(k)
        if len(minima) == 2 and g in minima:
            local = [k for k in minima if k != g][0]
            if e[local] - e[g] > 1e-3:
                return Q, X[local], e[local], e[g]
    raise AssertionError("no instance found")


def test_tabu_escapes_local_minimum():
    Q, start, e_local, e_global = find_escape_instance()
    # Plain descent is stuck there.
    assert np.all(EnergyState(Q, start).all_deltas() > 0)
    tenure = min(default_tenure(4), 3)
    energies, best, states = tabu_walk(Q, start, tenure + 1)
    assert best[-1] < e_local
    assert best[-1] == pytest.approx(e_global, abs=1e-12)


def test_tabu_timeout_honoured():
    Q = random_qubo(GeneratorSpec(400, 1.0, 1))
    cfg = SolverConfig(reads=3).replace(timeout_ms=20.0, stagnation_limit=10**9)
    r = tabu_search(Q, cfg)
    assert r.metadata["timeouts"] == 3
    per_iter = max(r.metadata["read_times_s"]) / (r.metadata["iterations"] / 3)
    # One chunk is about 1% of the budget; allow scheduler noise on top.
    assert r.metadata["max_read_time_s"] <= 0.020 + max(0.002, 50 * per_iter) + 0.010


def test_tabu_tenure_capped_for_tiny_n(tri):
    r = tabu_search(tri, FAST_TS)
    assert r.metadata["tenure"] == 1


def test_tabu_walk_respects_tenure():
    Q = random_qubo(GeneratorSpec(30, 1.0, 2))
    tenure = 5
    _, _, states = tabu_walk(Q, np.zeros(30, dtype=np.int8), 200, tenure=tenure)
    flipped = [int(np.flatnonzero(states[k] != states[k + 1])[0]) for k in range(200)]
    best = np.inf
    for k, i in enumerate(flipped):
        e_after = energy(Q, states[k + 1])
        recent = flipped[max(0, k - tenure) : k]
        if i in recent:
            # Only aspiration may override the tabu list.
            assert e_after < best
        best = min(best, e_after)


# -- PT-ICM -------------------------------------------------------------------------------------------


def test_beta_ladder_geometric():
    Q = random_qubo(GeneratorSpec(20, 1.0, 1))
    b = beta_ladder(Q, SolverConfig())
    assert b.size == 5 and np.all(np.diff(b) > 0)
    ratios = b[1:] / b[:-1]
    assert np.allclose(ratios, ratios[0])
    assert np.array_equal(beta_ladder(Q, SolverConfig().replace(beta_ladder=[3.0, 1.0, 2.0, 4.0, 5.0])), [1, 2, 3, 4, 5])


def test_cluster_is_connected_component():
    # Chain 0-1-2-3 plus isolated 4; chains disagree on 0, 1, 3, 4.
    Q = QuboMatrix.from_entries(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], storage="sparse")
    xa = np.array([1, 1, 0, 1, 1])
    xb = np.array([0, 0, 0, 0, 0])
    assert cluster(Q, xa, xb, 0).tolist() == [0, 1]
    assert cluster(Q, xa, xb, 3).tolist() == [3]
    assert cluster(Q, xa, xb, 2).tolist() == []


def test_icm_pair_energy_neutral_quadratic_only():
    g = np.random.default_rng(12)
    for seed in range(20):
        full = random_qubo(GeneratorSpec(12, 1.0, seed)).to_dense_upper()
        np.fill_diagonal(full, 0.0)
        # Thin out couplers so clusters are not always the whole disagreement set.
        full[g.random(full.shape) < 0.6] = 0.0
        Q = QuboMatrix.from_dense(full)
        xa, xb = g.integers(0, 2, 12), g.integers(0, 2, 12)
        diff = np.flatnonzero(xa != xb)
        if diff.size == 0:
            continue
        na, nb, sites, de = icm_move(Q, xa, xb, int(diff[0]))
        before = energy(Q, xa) + energy(Q, xb)
        after = energy(Q, na) + energy(Q, nb)
        assert after - before == pytest.approx(0.0, abs=1e-12)
        assert de == pytest.approx(0.0, abs=1e-12)
        # The swap exchanges values on the cluster and nothing else.
        assert np.array_equal(na[sites], xb[sites]) and np.array_equal(nb[sites], xa[sites])
        rest = np.setdiff1d(np.arange(12), sites)
        assert np.array_equal(na[rest], xa[rest])


def test_pticm_zero_matrix_accepts_all_exchanges():
    r = pt_icm(QuboMatrix.zeros(8), FAST_PT)
    m = r.metadata
    assert r.best_energy == 0.0
    assert m["exchange_attempts"] > 0 and m["exchange_accepted"] == m["exchange_attempts"]
    assert m["icm_accepted"] == m["icm_attempts"]


def test_pticm_layout():
    r = pt_icm(random_qubo(GeneratorSpec(12, 1.0, 3)), FAST_PT.replace(num_replicas=8))
    assert len(r.read_energies) == 8
    assert len(r.metadata["betas"]) == 4
    # 2 chains x 3 adjacent level pairs x 5 iterations
    assert r.metadata["exchange_attempts"] == 30
