"""Model export for external IP solvers and solution import for scoring.

``lp-text`` is the CPLEX LP dialect understood by Gurobi, CPLEX, HiGHS and
SCIP. Grammar of what we write::

    \\ <comment>
    Minimize
     obj: <lin>* [ '+' '[' <quad>* ']' '/' '2' ]
    Binary
     x<i> ...
    End

    lin  := ('+' | '-') <coef> ' x' <i>
    quad := ('+' | '-') <coef> ' x' <i> ' * x' <j>

Quadratic coefficients inside ``[ ] / 2`` are written doubled, as the dialect
requires; doubling is exact in binary floating point. Coefficients use
Python's shortest round-trip float repr.

Solutions come back either as ``name value`` lines (``.sol`` style, ``#``
comments allowed) or as the JSON printed by ``qubosmith solve``.
"""

import json
import re

import numpy as np

from .bitpack import unpack_bits
from .core import QuboMatrix
from .errors import ContractError, ParseError

EXPORT_FORMATS = ("native", "lp-text")


def _term(c):
    return ("+ " if c >= 0 else "- ") + repr(abs(float(c)))


def to_lp(Q):
    lin = [f"{_term(v)} x{i}" for i, v in enumerate(Q.linear.tolist()) if v != 0.0]
    r, c, v = Q.coupler_arrays()
    quad = [f"{_term(2.0 * w)} x{i} * x{j}" for i, j, w in zip(r.tolist(), c.tolist(), v.tolist())]
    parts = [" obj:"]
    parts.extend(" " + t for t in lin)
    if quad:
        parts.append(" + [")
        parts.extend(" " + t for t in quad)
        parts.append(" ] / 2")
    if not lin and not quad:
        parts.append(" 0 x0")
    lines = [f"\\ qubosmith QUBO export n={Q.n}", "Minimize", "".join(parts), "Binary"]
    names = [f"x{i}" for i in range(Q.n)]
    for k in range(0, Q.n, 16):
        lines.append(" " + " ".join(names[k : k + 16]))
    lines.append("End")
    return "\n".join(lines) + "\n"


_LIN = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+x(\d+)(?!\s*\*)")
_QUAD = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+x(\d+)\s*\*\s*x(\d+)")


def from_lp(text):
    """Rebuild a QUBO from LP text produced by :func:`to_lp`."""
    m = re.search(r"n=(\d+)", text)
    if not m:
        raise ParseError("missing 'n=' in LP header comment")
    n = int(m.group(1))
    body = text.split("Minimize", 1)[1].split("Binary", 1)[0]
    body = body.split("obj:", 1)[1]
    if "[" in body:
        lin_part, rest = body.split("[", 1)
        quad_part = rest.split("]", 1)[0]
        lin_part = lin_part.rstrip().rstrip("+")
    else:
        lin_part, quad_part = body, ""
    rows, cols, vals = [], [], []
    for sign, coef, i in _LIN.findall(lin_part):
        rows.append(int(i))
        cols.append(int(i))
        vals.append(float(coef) * (-1 if sign == "-" else 1))
    for sign, coef, i, j in _QUAD.findall(quad_part):
        rows.append(int(i))
        cols.append(int(j))
        vals.append(float(coef) * (-1 if sign == "-" else 1) / 2.0)
    return QuboMatrix.from_arrays(n, rows, cols, vals)


def read_solution(text, n):
    """Bit vector from ``.sol``-style lines or qubosmith solve JSON."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
            bits = unpack_bits(data["bits"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad solution JSON: {exc}") from None
        if bits.size != n:
            raise ParseError(f"solution has {bits.size} variables, instance has {n}")
        return bits
    bits = np.full(n, -1, dtype=np.int8)
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].split()
        if not s:
            continue
        if len(s) != 2 or not re.fullmatch(r"x\d+", s[0]):
            raise ParseError(f"expected 'x<i> <value>', got {line.strip()!r}", lineno)
        i = int(s[0][1:])
        if i >= n:
            raise ParseError(f"variable {s[0]} out of range for n={n}", lineno)
        try:
            v = float(s[1])
        except ValueError:
            raise ParseError(f"bad value {s[1]!r}", lineno) from None
        # IP solvers report binaries with small tolerances (0.9999999).
        r = round(v)
        if r not in (0, 1) or abs(v - r) > 1e-6:
            raise ParseError(f"value {v} of {s[0]} is not binary", lineno)
        bits[i] = r
    missing = np.flatnonzero(bits < 0)
    if missing.size:
        raise ContractError(f"solution is missing {missing.size} variables (first: x{missing[0]})")
    return bits


def format_solution(bits):
    return "".join(f"x{i} {int(b)}\n" for i, b in enumerate(np.asarray(bits).tolist()))
