"""Exact integer evolution matrices: MIXMAX family, cat map, RCARRY companion.

Nothing in this module touches floating point. Entries are Python ints and the
determinant is computed by fraction-free (Bareiss) elimination.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

RCARRY_LONG_LAG = 24
RCARRY_SHORT_LAG = 10


@dataclass(frozen=True)
class IntegerMatrix:
    """Square integer matrix with family metadata.

    ``family`` is one of ``"mixmax"``, ``"cat"``, ``"rcarry"``, ``"custom"``.
    ``params`` holds family parameters (``N``, ``s``) and flags such as
    ``s_ignored`` for the N=2 MIXMAX case, where row 3 does not exist.
    """

    entries: tuple[tuple[int, ...], ...]
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.entries)
        if n < 1 or any(len(row) != n for row in self.entries):
            raise InvalidInputError("matrix must be square and non-empty")
        for row in self.entries:
            for x in row:
                if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
                    raise InvalidInputError(f"non-integer entry {x!r}")

    @property
    def n(self) -> int:
        return len(self.entries)

    def rows(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.entries]

    def to_numpy(self, dtype=np.float64) -> np.ndarray:
        return np.array(self.rows(), dtype=dtype)

    def trace(self) -> int:
        return sum(self.entries[i][i] for i in range(self.n))

    def nonzero_count(self) -> int:
        return sum(1 for row in self.entries for x in row if x != 0)

    @cached_property
    def _max_abs(self) -> int:
        return max(abs(x) for row in self.entries for x in row)

    def max_abs_entry(self) -> int:
        return self._max_abs

    @cached_property
    def float_entries(self) -> np.ndarray:
        """Read-only binary64 copy, cached for repeated products."""
        arr = self.to_numpy()
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], family="custom", **params):
        return cls(tuple(tuple(int(x) for x in r) for r in rows), family, params)

    @classmethod
    def from_numpy(cls, arr, family="custom", **params):
        arr = np.asarray(arr)
        if arr.dtype.kind == "f":
            if not np.all(arr == np.round(arr)):
                raise InvalidInputError("array has non-integer values")
            arr = arr.astype(np.int64)
        return cls.from_rows(arr.tolist(), family, **params)


def build_mixmax(N: int, s: int = 0) -> IntegerMatrix:
    """MIXMAX matrix T(N, s).

    Row 1 is all ones; row i >= 2 is ``1, i, i-1, ..., 2, 1, ..., 1`` and the
    magic integer ``s`` is added at (row 3, col 2). For N = 2 there is no
    row 3, so ``s`` is dropped and ``params['s_ignored']`` is set.
    """
    if int(N) != N or N < 2:
        raise InvalidInputError(f"MIXMAX dimension must be >= 2, got {N}")
    N, s = int(N), int(s)
    rows = [[1] * N]
    for i in range(2, N + 1):
        row = [1] * N
        row[1] = i
        for j in range(3, i + 1):
            row[j - 1] = i - j + 2
        rows.append(row)
    if N >= 3:
        rows[2][1] += s
    return IntegerMatrix.from_rows(rows, "mixmax", N=N, s=s, s_ignored=(N == 2 and s != 0))


def cat_map() -> IntegerMatrix:
    return IntegerMatrix.from_rows([[1, 1], [1, 2]], "cat", N=2)


def rcarry_companion(long_lag: int = RCARRY_LONG_LAG, short_lag: int = RCARRY_SHORT_LAG) -> IntegerMatrix:
    """Companion matrix of x_n = x_{n-short} - x_{n-long} (carry dropped).

    State vector is (x_{n-1}, ..., x_{n-long}); the first row holds the two
    taps and the sub-diagonal shifts the history by one.
    """
    if not 0 < short_lag < long_lag:
        raise InvalidInputError("need 0 < short_lag < long_lag")
    rows = [[0] * long_lag for _ in range(long_lag)]
    rows[0][short_lag - 1] = 1
    rows[0][long_lag - 1] = -1
    for i in range(1, long_lag):
        rows[i][i - 1] = 1
    return IntegerMatrix.from_rows(rows, "rcarry", N=long_lag, r=long_lag, s_lag=short_lag)


def block_diagonal(*blocks: IntegerMatrix) -> IntegerMatrix:
    n = sum(b.n for b in blocks)
    rows = [[0] * n for _ in range(n)]
    off = 0
    for b in blocks:
        for i, row in enumerate(b.entries):
            rows[off + i][off:off + b.n] = row
        off += b.n
    return IntegerMatrix.from_rows(rows, "custom")


def identity(n: int) -> IntegerMatrix:
    return IntegerMatrix.from_rows([[int(i == j) for j in range(n)] for i in range(n)])


def matmul_exact(a: IntegerMatrix, b: IntegerMatrix) -> IntegerMatrix:
    if a.n != b.n:
        raise InvalidInputError("dimension mismatch")
    cols = list(zip(*b.entries))
    rows = [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a.entries]
    return IntegerMatrix.from_rows(rows)


def determinant_exact(m: IntegerMatrix) -> int:
    """Exact determinant by Bareiss fraction-free elimination.

    Every division is exact, so intermediates stay integral (they are minors
    of the input). Row swaps handle zero pivots.
    """
    a = m.rows()
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        piv = a[k][k]
        row_k = a[k]
        for i in range(k + 1, n):
            row_i = a[i]
            f = row_i[k]
            row_i[k + 1:] = [(piv * x - f * y) // prev for x, y in zip(row_i[k + 1:], row_k[k + 1:])]
        prev = piv
    return sign * a[n - 1][n - 1]


def inverse_exact(m: IntegerMatrix) -> IntegerMatrix:
    """Integer inverse of a unimodular matrix (|det| = 1) via rational Gauss-Jordan."""
    from fractions import Fraction

    n = m.n
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m.entries)]
    for c in range(n):
        p = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if p is None:
            raise InvalidInputError("matrix is singular")
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    inv = [row[n:] for row in aug]
    if any(x.denominator != 1 for row in inv for x in row):
        raise InvalidInputError("matrix is not unimodular; inverse is not integral")
    return IntegerMatrix.from_rows([[int(x) for x in row] for row in inv])


def inverse_mod(m: IntegerMatrix, p: int) -> list[list[int]]:
    """Inverse of ``m`` modulo the prime ``p`` (Gauss-Jordan over Z_p)."""
    n = m.n
    a = np.empty((n, 2 * n), dtype=object)
    a[:, :n] = np.array([[x % p for x in row] for row in m.entries], dtype=object)
    a[:, n:] = 0
    for i in range(n):
        a[i, n + i] = 1
    for c in range(n):
        nz = [r for r in range(c, n) if a[r, c] % p]
        if not nz:
            raise InvalidInputError("matrix is singular mod p")
        r = nz[0]
        if r != c:
            a[[c, r]] = a[[r, c]]
        a[c] = (a[c] * pow(int(a[c, c]), -1, p)) % p
        col = a[:, c].copy()
        col[c] = 0
        a -= np.outer(col, a[c])
        a %= p
    return [[int(x) for x in row] for row in a[:, n:]]


@dataclass
class CConditionReport:
    ok: bool
    min_distance: float
    log_abs_product: float
    phase_product: float
    n: int

    def to_dict(self):
        return dict(ok=self.ok, min_distance=self.min_distance,
                    log_abs_product=self.log_abs_product,
                    phase_product=self.phase_product, n=self.n)


def verify_c_condition(spec, tol: float = 1e-9) -> CConditionReport:
    """Hyperbolicity check on a spectrum: no modulus on the unit circle and
    the eigenvalue product equal to one.

    The product is tested in log form so that N = 4096 spectra do not
    overflow: ``sum(log|lambda|)`` and the summed phase (mod 2 pi) must both be
    within ``tol`` scaled by the dimension.
    """
    lam = np.asarray(spec.eigenvalues, dtype=complex)
    if lam.size == 0:
        raise InvalidInputError("empty spectrum")
    mod = np.abs(lam)
    min_dist = float(np.min(np.abs(mod - 1.0)))
    if np.any(mod == 0):
        return CConditionReport(False, min_dist, float("-inf"), 0.0, lam.size)
    log_prod = float(np.sum(np.log(mod)))
    phase = float(np.angle(np.exp(1j * np.sum(np.angle(lam)))))
    ptol = max(tol, 1e-9) * lam.size
    ok = min_dist > tol and abs(log_prod) <= ptol and abs(phase) <= ptol
    return CConditionReport(bool(ok), min_dist, log_prod, phase, lam.size)


def write_matrix(m: IntegerMatrix, path) -> None:
    lines = [str(m.n)] + [" ".join(str(x) for x in row) for row in m.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path) -> IntegerMatrix:
    """Parse the plain-text format: first line N, then N rows of N integers."""
    text = Path(path).read_text(encoding="utf-8").split("\n")
    lines = [ln.strip() for ln in text if ln.strip()]
    if not lines:
        raise InvalidInputError(f"{path}: empty matrix file")
    try:
        n = int(lines[0])
        rows = [[int(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if len(rows) != n or any(len(r) != n for r in rows):
        raise InvalidInputError(f"{path}: expected {n} rows of {n} integers")
    return IntegerMatrix.from_rows(rows, "custom")
