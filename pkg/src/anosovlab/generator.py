"""Torus automorphisms as pseudorandom generators over Z_p, p = 2^61 - 1.

A real coordinate u_i in [0, 1) is represented by the residue a_i with
u_i = a_i / p, so the map u -> T u mod 1 becomes the exact linear recurrence
a -> T a mod p.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from itertools import accumulate

import numpy as np

from .errors import InvalidInputError
from .matrix_core import IntegerMatrix, build_mixmax

P61 = (1 << 61) - 1
SEED_VERSION = 1
BINARY_MAGIC = "anosovlab-v1"

_MASK64 = (1 << 64) - 1
_LIMB_BITS = 16
_LIMBS = 4  # 4 x 16 bits covers 61-bit residues


@dataclass(frozen=True)
class GeneratorState:
    residues: tuple
    p: int = P61
    step_count: int = 0
    pending: int = 0  # trailing coordinates of the current step not yet emitted

    def __post_init__(self):
        if not self.residues:
            raise InvalidInputError("empty state")
        if not 0 <= self.pending < len(self.residues):
            raise InvalidInputError("pending must lie in [0, n)")
        if any(not 0 <= r < self.p for r in self.residues):
            raise InvalidInputError("residues must lie in [0, p)")

    @property
    def n(self) -> int:
        return len(self.residues)

    @classmethod
    def from_residues(cls, residues, p: int = P61, step_count: int = 0):
        return cls(tuple(int(r) % p for r in residues), p, step_count)


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def seed_state(N: int, seed_bytes: bytes, p: int = P61) -> GeneratorState:
    """Expand ``seed_bytes`` into N residues (seed expansion version 1).

    The bytes are absorbed 8 at a time (little-endian, zero padded, length
    appended) into a splitmix64 state, which is then squeezed once per
    residue and reduced mod p. An all-zero result would sit on the fixed
    point at the origin, so residue 0 is forced to 1 in that case.
    """
    if not seed_bytes:
        raise InvalidInputError("seed must be non-empty")
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    data = bytes(seed_bytes)
    data += b"\0" * (-len(data) % 8)
    x = SEED_VERSION
    for (word,) in struct.iter_unpack("<Q", data):
        x, z = _splitmix64(x ^ word)
        x ^= z
    x, _ = _splitmix64(x ^ len(seed_bytes))
    res = []
    for _ in range(N):
        x, z = _splitmix64(x)
        res.append(z % p)
    return _nonzero(res, p)


def _nonzero(res, p) -> GeneratorState:
    if not any(res):
        res[0] = 1
    return GeneratorState(tuple(res), p, 0)


def step_naive(st: GeneratorState, m: IntegerMatrix) -> GeneratorState:
    """a' = M a mod p by a plain O(N^2) matrix-vector product."""
    if m.n != st.n:
        raise InvalidInputError(f"matrix dimension {m.n} != state dimension {st.n}")
    return replace(st, residues=tuple(_matvec_mod(m, st.residues, st.p)),
                   step_count=st.step_count + 1, pending=0)


def _exact_float_ok(m: IntegerMatrix) -> bool:
    return m.n * m.max_abs_entry() < (1 << (52 - _LIMB_BITS))


def _matvec_mod(m: IntegerMatrix, a, p):
    if p == P61 and _exact_float_ok(m):
        return _matvec_p61_float(m.float_entries, a)
    return [sum(x * y for x, y in zip(row, a)) % p for row in m.entries]


def _matvec_p61_float(mf: np.ndarray, a) -> list:
    """Exact M a mod (2^61 - 1) with BLAS: split each residue into four
    16-bit limbs, multiply in binary64 (exact while n * max|M| < 2^36), then
    fold limb k back in with a 16k-bit rotation, which is multiplication by
    2^(16k) modulo a Mersenne prime."""
    av = np.array(a, dtype=np.uint64)
    limbs = np.empty((len(a), _LIMBS), dtype=np.float64)
    for k in range(_LIMBS):
        limbs[:, k] = ((av >> np.uint64(_LIMB_BITS * k)) & np.uint64(0xFFFF)).astype(np.float64)
    y = (mf @ limbs).astype(np.int64) % np.int64(P61)
    y = y.astype(np.uint64)
    mask = np.uint64(P61)
    acc = y[:, 0].copy()
    for k in range(1, _LIMBS):
        j = np.uint64(_LIMB_BITS * k)
        t = ((y[:, k] << j) & mask) + (y[:, k] >> (np.uint64(61) - j))
        t = np.where(t >= mask, t - mask, t)
        acc += t
    acc = (acc & mask) + (acc >> np.uint64(61))
    acc = np.where(acc >= mask, acc - mask, acc)
    return acc.tolist()


def step_fast(st: GeneratorState, N: int, s: int = 0) -> GeneratorState:
    """One MIXMAX step in O(N) using the row-difference structure.

    Row 1 gives the total sum; row i minus row i-1 is sum_{j=2..i} a_j, with
    +s a_2 entering at row 3 and leaving again at row 4.
    """
    if N < 2:
        raise InvalidInputError("N must be >= 2")
    if st.n != N:
        raise InvalidInputError(f"state dimension {st.n} != N={N}")
    a = st.residues
    p = st.p
    diffs = list(accumulate(a[1:]))
    if N >= 3 and s:
        diffs[1] += s * a[1]
        if N >= 4:
            diffs[2] -= s * a[1]
    out = [x % p for x in accumulate(diffs, initial=sum(a))]
    return replace(st, residues=tuple(out), step_count=st.step_count + 1, pending=0)


_BELOW_ONE = np.nextafter(1.0, 0.0)


def to_unit(residues, p: int = P61) -> np.ndarray:
    """a / p in binary64, clamped below 1: for p = 2^61 - 1 the top residues
    would otherwise round up to exactly 1.0."""
    u = np.asarray(residues, dtype=np.uint64).astype(np.float64) / float(p)
    return np.minimum(u, _BELOW_ONE)


def output_uniform(st: GeneratorState) -> np.ndarray:
    """u_i = a_i / p in binary64, always in [0, 1)."""
    return to_unit(np.array(st.residues, dtype=np.uint64), st.p)


def _fast_params(m: IntegerMatrix | None, st: GeneratorState):
    if m is None:
        raise InvalidInputError("no matrix given")
    if m.family == "mixmax" and m.n == st.n:
        return m.params["N"], m.params.get("s", 0)
    return None


def _draw(st: GeneratorState, count: int, m: IntegerMatrix):
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    n = st.n
    fast = _fast_params(m, st)
    head = np.array(st.residues[n - st.pending:], dtype=np.uint64)[:count]
    rest = count - len(head)
    steps = -(-rest // n)
    rows = np.empty((steps, n), dtype=np.uint64)
    for k in range(steps):
        st = step_fast(st, *fast) if fast else step_naive(st, m)
        rows[k] = st.residues
    if steps:
        st = replace(st, pending=steps * n - rest)
    else:
        st = replace(st, pending=st.pending - len(head))
    return np.concatenate([head, rows.ravel()[:rest]]), st


def fill(st: GeneratorState, count: int, m: IntegerMatrix):
    """Emit ``count`` uniforms: step, then output all N coordinates, repeat.

    Uses the O(N) step for MIXMAX matrices. Returns (samples, new state).
    Coordinates of a partly used step are kept in the state and emitted
    first by the next call, so two calls of c samples equal one call of 2c.
    """
    res, st = _draw(st, count, m)
    return to_unit(res, st.p), st


def fill_residues(st: GeneratorState, count: int, m: IntegerMatrix):
    """Like :func:`fill` but returns raw residues as uint64."""
    return _draw(st, count, m)


def write_binary(fh, residues, N: int, s: int, p: int = P61) -> None:
    """Header line ``anosovlab-v1 N s p`` then little-endian uint64 residues."""
    fh.write(f"{BINARY_MAGIC} {N} {s} {p}\n".encode("ascii"))
    fh.write(np.asarray(residues, dtype="<u8").tobytes())


def read_binary(fh):
    header = fh.readline().decode("ascii").split()
    if len(header) != 4 or header[0] != BINARY_MAGIC:
        raise InvalidInputError("not an anosovlab-v1 sample file")
    N, s, p = (int(x) for x in header[1:])
    data = np.frombuffer(fh.read(), dtype="<u8")
    return data, N, s, p
