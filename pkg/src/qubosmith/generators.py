"""Benchmark instance families: dense Gaussian QUBOs and Max-Cut graphs."""

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import rng
from .core import MAX_N, QuboMatrix
from .errors import CapacityError, ContractError, DomainError, ParseError

# Size grid and coefficient spreads of the dense random benchmark.
SUITE_SIZES = (120, 200, 500, 1000, 1500, 2000, 2500, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000)
SUITE_SIGMAS = (0.001, 0.01, 0.1, 1.0)

# name -> (nodes, edges, density in percent) for the G-set instances used as
# the sparse contrast class.
GSET_DENSITY_TABLE = {
    "G5": (800, 19176, "6.0000"),
    "G10": (800, 19176, "6.0000"),
    "G15": (800, 4661, "1.4583"),
    "G20": (800, 4672, "1.4618"),
    "G30": (2000, 19900, "0.9954"),
    "G40": (2000, 11766, "0.5885"),
    "G50": (3000, 6000, "0.1333"),
    "G55": (5000, 12498, "0.1000"),
    "G60": (7000, 17148, "0.0700"),
    "G70": (10000, 9999, "0.0200"),
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one dense Gaussian instance (mean is always 0)."""

    n: int
    sigma: float
    seed: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n!r}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ContractError(f"sigma must be a positive finite number, got {self.sigma!r}")

    @property
    def instance_id(self):
        return f"rand-n{self.n}-s{self.sigma:g}-seed{self.seed}"


def random_qubo(spec, max_n=MAX_N):
    """Fully dense QUBO with every upper-triangular entry ~ Normal(0, sigma^2).

    Entries are drawn in row-major order over ``(i, j), j >= i`` from the
    SplitMix64/Box-Muller stream of ``spec.seed`` (see :mod:`qubosmith.rng`),
    so the same spec always gives the same matrix, bit for bit.
    """
    n = spec.n
    if n > max_n:
        raise CapacityError(f"n={n} exceeds the generator cap of {max_n}")
    z = rng.standard_normals(spec.seed, n * (n + 1) // 2)
    z *= spec.sigma
    h = np.empty(n)
    J = np.zeros((n, n))
    k = 0
    for i in range(n):
        h[i] = z[k]
        row = z[k + 1 : k + n - i]
        J[i, i + 1 :] = row
        J[i + 1 :, i] = row
        k += n - i
    return QuboMatrix.from_parts(h, J)


def suite_specs(sizes=SUITE_SIZES, sigmas=SUITE_SIGMAS, instances_per_cell=1, seed=0):
    """Generator specs for a size x sigma grid, seeds derived from ``seed``."""
    specs = []
    k = 0
    for n in sizes:
        for sigma in sigmas:
            for _ in range(instances_per_cell):
                specs.append(GeneratorSpec(int(n), float(sigma), rng.stream_seed(seed, k) >> 1))
                k += 1
    return specs


@dataclass
class Graph:
    """Undirected weighted graph with 0-based node indices."""

    num_nodes: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def num_edges(self):
        return int(self.u.size)

    @property
    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    @classmethod
    def from_edges(cls, num_nodes, edges):
        edges = list(edges)
        u = np.array([e[0] for e in edges], dtype=np.int64)
        v = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] for e in edges], dtype=np.float64)
        if np.any(u == v):
            raise ContractError("self-loops are not allowed")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= num_nodes):
            raise ContractError("edge endpoint out of range")
        pairs = {(min(a, b), max(a, b)) for a, b in zip(u.tolist(), v.tolist())}
        if len(pairs) != u.size:
            raise ContractError("duplicate edge")
        return cls(num_nodes, u, v, w)


def parse_gset(data):
    """Parse a G-set file (``bytes``, ``str`` or text file object).

    Format: first non-blank line ``num_nodes num_edges``, then one
    ``u v w`` line per edge with 1-based node indices.
    """
    if isinstance(data, bytes):
        data = data.decode("ascii")
    lines = io.StringIO(data) if isinstance(data, str) else data

    header = None
    num_nodes = num_edges = 0
    u, v, w = [], [], []
    seen = set()
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        if header is None:
            if len(parts) != 2:
                raise ParseError("expected 'num_nodes num_edges'", lineno)
            try:
                num_nodes, num_edges = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("header counts must be integers", lineno) from None
            if num_nodes < 1 or num_edges < 0:
                raise ParseError("header counts out of range", lineno)
            header = lineno
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'u v w', got {line.strip()!r}", lineno)
        try:
            a, b, weight = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"malformed edge {line.strip()!r}", lineno) from None
        if not (1 <= a <= num_nodes and 1 <= b <= num_nodes):
            raise ParseError(f"node index out of range 1..{num_nodes}", lineno)
        if a == b:
            raise ParseError(f"self-loop on node {a}", lineno)
        if not np.isfinite(weight):
            raise ParseError("edge weight must be finite", lineno)
        key = (a, b) if a < b else (b, a)
        if key in seen:
            raise ParseError(f"duplicate edge {a}-{b}", lineno)
        if len(u) == num_edges:
            raise ParseError(f"more edges than the declared {num_edges}", lineno)
        seen.add(key)
        u.append(a - 1)
        v.append(b - 1)
        w.append(weight)
    if header is None:
        raise ParseError("empty G-set file")
    if len(u) != num_edges:
        raise ParseError(f"header declares {num_edges} edges, found {len(u)}", lineno)
    return Graph(
        num_nodes,
        np.array(u, dtype=np.int64),
        np.array(v, dtype=np.int64),
        np.array(w, dtype=np.float64),
    )


def read_gset(path):
    with open(path, encoding="ascii") as fh:
        return parse_gset(fh)


def format_gset(g):
    """G-set text for ``g`` (1-based indices)."""
    out = [f"{g.num_nodes} {g.num_edges}"]
    for a, b, weight in g.edges:
        wt = int(weight) if float(weight).is_integer() else weight
        out.append(f"{a + 1} {b + 1} {wt}")
    return "\n".join(out) + "\n"


def maxcut_to_qubo(g, storage="auto"):
    """Minimization QUBO with ``energy(Q, x) == -cut(g, x)`` for every x.

    Each edge ``(u, v, w)`` contributes ``2w`` to the coupler and ``-w`` to
    both diagonal terms.
    """
    rows = np.concatenate([g.u, g.u, g.v])
    cols = np.concatenate([g.v, g.u, g.v])
    vals = np.concatenate([2.0 * g.w, -g.w, -g.w])
    return QuboMatrix.from_arrays(g.num_nodes, rows, cols, vals, storage=storage)


def cut_value(g, x):
    x = np.asarray(x)
    return float(np.sum(g.w[x[g.u] != x[g.v]]))


def random_graph(num_nodes, p, seed, weights=(1.0,)):
    """Erdos-Renyi style graph for tests and demos; weights drawn from ``weights``."""
    state = rng.new_state(seed)
    edges = []
    for a in range(num_nodes):
        for b in range(a + 1, num_nodes):
            if _uniform(state) < p:
                edges.append((a, b, weights[int(_uniform(state) * len(weights))]))
    return Graph.from_edges(num_nodes, edges)


def _uniform(state):
    return float(rng.next_double(state))


def density(n, interaction_count):
    """Fraction of the C(n, 2) possible pairwise couplings that are present."""
    if n < 2:
        raise DomainError(f"density needs n >= 2, got {n}")
    max_pairs = comb(n, 2)
    if not 0 <= interaction_count <= max_pairs:
        raise DomainError(f"interaction count {interaction_count} outside [0, {max_pairs}]")
    return interaction_count / max_pairs


def density_percent(n, interaction_count, places=4):
    """Density as a percent string, truncated (not rounded) to ``places`` decimals.

    Published G-set density tables truncate, e.g. 4,661 edges on 800 nodes is
    1.458385...% and is listed as 1.4583. Exact rational arithmetic avoids
    float artefacts at the cut-off digit.
    """
    density(n, interaction_count)
    scaled = Fraction(100 * interaction_count * 10**places, comb(n, 2))
    q = math.floor(scaled)
    whole, frac = divmod(q, 10**places)
    return f"{whole}.{frac:0{places}d}" if places else str(whole)
