"""Exact truncated power series and independent reference sequences.

Coefficients are Python ints throughout; nothing here ever rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence


class SeriesOrderError(ValueError):
    pass


def _mul(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    out = [0] * (n + 1)
    nz_b = [(j, y) for j, y in enumerate(b) if y]
    if not nz_b:
        return out
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in nz_b:
            if i + j > n:
                break
            out[i + j] += x * y
    return out


@dataclass(frozen=True)
class TruncSeries:
    """c_0 + c_1 z + ... + c_N z^N with every higher order discarded."""

    coeffs: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int], order: int) -> "TruncSeries":
        cs = list(coeffs)[: order + 1]
        cs += [0] * (order + 1 - len(cs))
        return cls(tuple(int(c) for c in cs))

    @classmethod
    def zero(cls, order: int) -> "TruncSeries":
        return cls((0,) * (order + 1))

    @classmethod
    def one(cls, order: int) -> "TruncSeries":
        return cls.monomial(0, order)

    @classmethod
    def monomial(cls, k: int, order: int, c: int = 1) -> "TruncSeries":
        cs = [0] * (order + 1)
        if k <= order:
            cs[k] = c
        return cls(tuple(cs))

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self) -> Optional[int]:
        """Index of the first nonzero coefficient, None for the zero series."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def _check(self, other: "TruncSeries") -> None:
        if not isinstance(other, TruncSeries):
            raise TypeError(f"expected TruncSeries, got {type(other).__name__}")
        if other.order != self.order:
            raise SeriesOrderError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        return TruncSeries(tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        return TruncSeries(tuple(x - y for x, y in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(tuple(-x for x in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return TruncSeries(tuple(other * x for x in self.coeffs))
        self._check(other)
        return TruncSeries(tuple(_mul(self.coeffs, other.coeffs, self.order)))

    __rmul__ = __mul__

    def __truediv__(self, other: "TruncSeries") -> "TruncSeries":
        return ts_div(self, other)

    def shift(self, k: int) -> "TruncSeries":
        """Multiply by z^k."""
        n = self.order
        return TruncSeries(((0,) * min(k, n + 1) + self.coeffs)[: n + 1])

    def truncate(self, order: int) -> "TruncSeries":
        return TruncSeries.from_coeffs(self.coeffs, order)

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}{mono}")
        return (" + ".join(terms) or "0") + f" + O(z^{self.order + 1})"


def ts_add(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    return a + b


def ts_mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    return a * b


def ts_div(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Quotient q with q*b = a through order N; b(0) must be 1 or -1."""
    a._check(b)
    b0 = b.coeffs[0]
    if b0 not in (1, -1):
        raise ValueError(f"divisor constant term must be a unit, got {b0}")
    n = a.order
    q = [0] * (n + 1)
    nz_b = [(j, y) for j, y in enumerate(b.coeffs) if y and j]
    for k in range(n + 1):
        acc = a.coeffs[k]
        for j, y in nz_b:
            if j > k:
                break
            acc -= y * q[k - j]
        q[k] = acc * b0  # b0 is its own inverse
    return TruncSeries(tuple(q))


def expand_rational(p: Sequence[int], q: Sequence[int], order: int) -> TruncSeries:
    """Expansion of P(z)/Q(z) from coefficient lists (constant term first)."""
    if not q or q[0] not in (1, -1):
        raise ValueError("Q(0) must be 1 or -1")
    return ts_div(TruncSeries.from_coeffs(p, order), TruncSeries.from_coeffs(q, order))


def poly_mul(*polys: Sequence[int]) -> list[int]:
    out = [1]
    for p in polys:
        out = _mul(out, p, len(out) + len(p) - 2)
    return out


def poly_pow(p: Sequence[int], k: int) -> list[int]:
    return poly_mul(*([p] * k)) if k else [1]


@dataclass
class CountVector:
    """Coefficients c_0..c_N of a counting sequence."""

    coeffs: tuple[int, ...]
    mode: str = "words"
    truncated: bool = False

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self) -> int:
        return len(self.coeffs)

    def as_series(self) -> TruncSeries:
        return TruncSeries(tuple(self.coeffs))


# --------------------------------------------------------------------------
# reference sequences (elementary algorithms only)


def _partitions(n: int) -> list[int]:
    p = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(part, n + 1):
            p[total] += p[total - part]
    return p


def _divisors(m: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= m:
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
        d += 1
    return small + large[::-1]


def _phi(n: int) -> int:
    # integers 1 <= i < n coprime to n, so phi(1) = 0 here
    return sum(1 for i in range(1, n) if math.gcd(i, n) == 1)


REFERENCE_KINDS = ("partitions", "tau", "sigma", "phi", "pow2_floor_sqrt")


def reference_sequence(kind: str, n: int) -> CountVector:
    """c_0..c_N of a named sequence, computed without any grammar machinery."""
    if kind == "partitions":
        cs = _partitions(n)
    elif kind == "tau":
        cs = [0] + [len(_divisors(m)) for m in range(1, n + 1)]
    elif kind == "sigma":
        cs = [0] + [sum(_divisors(m)) for m in range(1, n + 1)]
    elif kind == "phi":
        cs = [0] + [_phi(m) for m in range(1, n + 1)]
    elif kind == "pow2_floor_sqrt":
        cs = [2 ** math.isqrt(m) for m in range(n + 1)]
    else:
        raise ValueError(f"unknown reference sequence {kind!r}; choose from {REFERENCE_KINDS}")
    return CountVector(tuple(cs[: n + 1]), mode="reference")


# --------------------------------------------------------------------------
# bivariate counts


@dataclass
class BivariateGrid:
    """Sparse counts on [0..nx] x [0..ny]; absent entries are zero.

    ``max_total``, when set, says entries are only known for i + j <= max_total
    (the shape an enumeration bounded by total word length produces).
    """

    nx: int
    ny: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)
    max_total: Optional[int] = None

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self.entries.get(key, 0)

    @classmethod
    def from_mapping(cls, data: Mapping[tuple[int, int], int], nx: int, ny: int,
                     max_total: Optional[int] = None) -> "BivariateGrid":
        kept = {(i, j): c for (i, j), c in data.items() if i <= nx and j <= ny and c}
        return cls(nx, ny, kept, max_total)


def diagonal_sum(grid: BivariateGrid, n: Optional[int] = None) -> CountVector:
    """c_k = sum of grid[i, j] over i + j = k, for k = 0..N."""
    limit = min(grid.nx, grid.ny)
    if grid.max_total is not None:
        limit = min(limit, grid.max_total)
    if n is None:
        n = limit
    if n > limit:
        raise ValueError(f"grid covers complete diagonals only up to {limit}, asked for {n}")
    cs = [0] * (n + 1)
    for (i, j), c in grid.entries.items():
        if i + j <= n:
            cs[i + j] += c
    return CountVector(tuple(cs), mode="diagonal")
