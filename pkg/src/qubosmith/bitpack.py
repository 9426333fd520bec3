"""Compact wire form for bit vectors: little-endian hex plus an explicit length.

Bit ``i`` lives in byte ``i // 8`` at bit position ``i % 8``; bytes are
written as lowercase hex in index order. ``{"n": 10, "hex": "0d01"}`` is
``x = [1, 0, 1, 1, 0, 0, 0, 0, 1, 0]``.
"""

import numpy as np

from .errors import ContractError


def pack_bits(bits):
    b = np.asarray(bits, dtype=np.uint8)
    return {"n": int(b.size), "hex": np.packbits(b, bitorder="little").tobytes().hex()}


def unpack_bits(packed):
    try:
        n = int(packed["n"])
        raw = bytes.fromhex(packed["hex"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed packed bit vector: {exc}") from None
    if len(raw) != (n + 7) // 8:
        raise ContractError(f"packed length {len(raw)} bytes does not match n={n}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if np.any(bits[n:]):
        raise ContractError("padding bits must be zero")
    return bits[:n].astype(np.int8)
