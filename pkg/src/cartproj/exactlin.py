"""Exact rational linear algebra for small dense matrices.

All scalars are ``fractions.Fraction`` (arbitrary precision, always in lowest
terms), so ranks and solves are exact: there is no tolerance anywhere in this
module. Block indices are 0-based throughout the library; user-facing reports
renumber from 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .errors import MalformedInputError

Rational = Fraction


def as_rational(value) -> Fraction:
    """Coerce ints, "p/q" strings and Fractions; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise MalformedInputError(f"not an exact rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedInputError(f"not an exact rational: {value!r}") from exc
    raise MalformedInputError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class BlockStructure:
    """Partition of the domain coordinates into n blocks plus the target dimension."""

    block_sizes: tuple[int, ...]
    target_dim: int

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(m) for m in self.block_sizes))
        if len(self.block_sizes) < 1:
            raise MalformedInputError("at least one block is required")
        if any(m < 1 for m in self.block_sizes):
            raise MalformedInputError(f"block sizes must be positive: {self.block_sizes}")
        if self.target_dim < 1:
            raise MalformedInputError(f"target dimension must be positive: {self.target_dim}")
        if sum(self.block_sizes) < self.target_dim:
            raise MalformedInputError(
                f"total dimension {sum(self.block_sizes)} below target {self.target_dim}"
            )

    @property
    def n(self) -> int:
        return len(self.block_sizes)

    @property
    def total_dim(self) -> int:
        return sum(self.block_sizes)

    def column_range(self, block: int) -> range:
        if not 0 <= block < self.n:
            raise MalformedInputError(f"block index out of range: {block}")
        start = sum(self.block_sizes[:block])
        return range(start, start + self.block_sizes[block])

    def columns_of(self, blocks: Iterable[int]) -> list[int]:
        """Global column indices of the given blocks, in canonical column order."""
        seen = sorted(set(blocks))
        for b in seen:
            if not 0 <= b < self.n:
                raise MalformedInputError(f"block index out of range: {b}")
        cols: list[int] = []
        for b in seen:
            cols.extend(self.column_range(b))
        return cols


class RationalMatrix:
    """Dense matrix of Fractions, row-major."""

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, entries: Sequence[Sequence]):
        rows = [[as_rational(v) for v in row] for row in entries]
        self.rows = len(rows)
        self.cols = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != self.cols:
                raise MalformedInputError("ragged matrix rows")
        self._e = rows

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        m = cls.__new__(cls)
        m.rows, m.cols = rows, cols
        m._e = [[Fraction(0)] * cols for _ in range(rows)]
        return m

    def entry(self, i: int, j: int) -> Fraction:
        return self._e[i][j]

    def row(self, i: int) -> list[Fraction]:
        return list(self._e[i])

    def column(self, j: int) -> list[Fraction]:
        return [self._e[i][j] for i in range(self.rows)]

    def to_rows(self) -> list[list[Fraction]]:
        return [list(r) for r in self._e]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix([[self._e[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def select_columns(self, indices: Sequence[int]) -> "RationalMatrix":
        for j in indices:
            if not 0 <= j < self.cols:
                raise MalformedInputError(f"column index out of range: {j}")
        m = RationalMatrix.__new__(RationalMatrix)
        m.rows, m.cols = self.rows, len(indices)
        m._e = [[self._e[i][j] for j in indices] for i in range(self.rows)]
        return m

    def scale_row(self, i: int, factor) -> "RationalMatrix":
        factor = as_rational(factor)
        out = self.to_rows()
        out[i] = [factor * v for v in out[i]]
        return RationalMatrix(out)

    def to_float(self) -> list[list[float]]:
        return [[float(v) for v in row] for row in self._e]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._e == other._e
        )

    def __repr__(self) -> str:
        body = "; ".join(",".join(str(v) for v in row) for row in self._e)
        return f"RationalMatrix({self.rows}x{self.cols}: {body})"


def _integer_rows(m: RationalMatrix) -> list[list[int]]:
    # Row scaling by the denominators' lcm leaves the rank unchanged.
    out = []
    for row in m._e:
        lcm = 1
        for v in row:
            lcm = lcm * v.denominator // gcd(lcm, v.denominator)
        out.append([int(v * lcm) for v in row])
    return out


def rank(m: RationalMatrix) -> int:
    """Exact rank by fraction-free (Bareiss) elimination over the integers."""
    if m.rows == 0 or m.cols == 0:
        return 0
    a = _integer_rows(m)
    n_rows, n_cols = m.rows, m.cols
    r = 0
    prev = 1
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, n_rows):
            for j in range(c + 1, n_cols):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == n_rows:
            break
    return r


def block_columns(pi: RationalMatrix, blocks: BlockStructure, subset: Iterable[int]) -> RationalMatrix:
    """Submatrix of the columns belonging to the given blocks (possibly none)."""
    if pi.cols != blocks.total_dim:
        raise MalformedInputError(
            f"matrix has {pi.cols} columns, blocks describe {blocks.total_dim}"
        )
    return pi.select_columns(blocks.columns_of(subset))


def image_dim(pi: RationalMatrix, blocks: BlockStructure, subset: Iterable[int]) -> int:
    """Dimension of the image of the selected blocks' coordinate subspace."""
    return rank(block_columns(pi, blocks, subset))


def is_independent(pi: RationalMatrix, blocks: BlockStructure, column_indices: Sequence[int]) -> bool:
    """True iff the selected global columns are linearly independent."""
    cols = list(column_indices)
    if len(set(cols)) != len(cols):
        raise MalformedInputError(f"duplicate column index in {cols}")
    if pi.cols != blocks.total_dim:
        raise MalformedInputError(
            f"matrix has {pi.cols} columns, blocks describe {blocks.total_dim}"
        )
    if not cols:
        return True
    return rank(pi.select_columns(cols)) == len(cols)


def solve_square(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Solve an n-by-n rational system exactly; None when singular."""
    n = len(a)
    aug = [list(a[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            return None
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col]
        aug[col] = [v / inv for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [vi - f * vc for vi, vc in zip(aug[i], aug[col])]
    return [aug[i][n] for i in range(n)]
