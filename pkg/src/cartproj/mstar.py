"""The projection dimension bound: min over nonempty block subsets I of
sum_{i in I} d_i + dim(image of the complementary blocks).

Everything here is exact rational arithmetic; ``mstar_value_float`` is the
one floating-point convenience for callers whose d comes from measured
dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, MalformedInputError, SurjectivityError
from .exactlin import BlockStructure, RationalMatrix, as_rational, image_dim, rank

MAX_BLOCKS = 8


@dataclass(frozen=True)
class DimensionVector:
    """Nonnegative rational dimension assigned to each block."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_rational(v) for v in self.values))
        if any(v < 0 for v in self.values):
            raise MalformedInputError(f"negative dimension entry in {self.values}")

    @property
    def n(self) -> int:
        return len(self.values)

    def total(self) -> Fraction:
        return sum(self.values, Fraction(0))

    def check_blocks(self, blocks: BlockStructure) -> None:
        if self.n != blocks.n:
            raise MalformedInputError(
                f"dimension vector has {self.n} entries for {blocks.n} blocks"
            )

    def bounded_by_blocks(self, blocks: BlockStructure) -> bool:
        """Whether each d_i <= m_i, as holds for dimensions of subsets."""
        return all(v <= m for v, m in zip(self.values, blocks.block_sizes))


@dataclass(frozen=True)
class MStarResult:
    value: Fraction
    minimizers: tuple[tuple[int, ...], ...]
    per_subset: tuple[tuple[tuple[int, ...], Fraction], ...]


@dataclass(frozen=True)
class GapClass:
    """Where the bound value sits relative to the target dimension k.

    kind is one of "above-k" (value >= k), "fractional" (non-integer below k,
    with kprime the integer it falls under), or "forbidden-integer" (an
    integer in 0..k-1, outside the supported case split).
    """

    kind: str
    kprime: int | None = None


@dataclass(frozen=True)
class TransversalityReport:
    ok: bool
    failures: tuple[tuple[int, ...], ...]


def _subset_of_mask(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def _image_dims_by_mask(pi: RationalMatrix, blocks: BlockStructure) -> list[int]:
    return [image_dim(pi, blocks, _subset_of_mask(mask, blocks.n)) for mask in range(1 << blocks.n)]


def compute_mstar(pi: RationalMatrix, blocks: BlockStructure, d: DimensionVector) -> MStarResult:
    """Exhaustive exact evaluation over all nonempty block subsets.

    Ties are all reported; the full per-subset table is retained as the
    user-facing diagnostic. Subset iteration is by increasing bitmask with
    block 0 as the least significant bit.
    """
    n = blocks.n
    if n > MAX_BLOCKS:
        raise BudgetError(f"{n} blocks exceeds the hard cap of {MAX_BLOCKS}")
    d.check_blocks(blocks)
    if rank(pi) != blocks.target_dim:
        raise SurjectivityError(
            f"projection rank {rank(pi)} differs from target dimension {blocks.target_dim}"
        )
    dims = _image_dims_by_mask(pi, blocks)
    full = (1 << n) - 1
    table: list[tuple[tuple[int, ...], Fraction]] = []
    best: Fraction | None = None
    for mask in range(1, full + 1):
        subset = _subset_of_mask(mask, n)
        value = sum((d.values[i] for i in subset), Fraction(0)) + dims[full ^ mask]
        table.append((subset, value))
        if best is None or value < best:
            best = value
    minimizers = tuple(s for s, v in table if v == best)
    return MStarResult(value=best, minimizers=minimizers, per_subset=tuple(table))


def check_transversality(pi: RationalMatrix, blocks: BlockStructure) -> TransversalityReport:
    """Whether every block subset's image has the generic dimension
    min(k, sum of the subset's block sizes)."""
    n, k = blocks.n, blocks.target_dim
    if n > MAX_BLOCKS:
        raise BudgetError(f"{n} blocks exceeds the hard cap of {MAX_BLOCKS}")
    dims = _image_dims_by_mask(pi, blocks)
    failures = []
    for mask in range(1 << n):
        subset = _subset_of_mask(mask, n)
        expected = min(k, sum(blocks.block_sizes[i] for i in subset))
        if dims[mask] != expected:
            failures.append(subset)
    return TransversalityReport(ok=not failures, failures=tuple(failures))


def mstar_gap_class(result, k: int) -> GapClass:
    """Classify a bound value against the target dimension k."""
    value = result.value if isinstance(result, MStarResult) else as_rational(result)
    if value >= k:
        return GapClass(kind="above-k")
    if value.denominator == 1:
        return GapClass(kind="forbidden-integer")
    kprime = value.numerator // value.denominator + 1
    return GapClass(kind="fractional", kprime=kprime)


def mstar_value_float(pi: RationalMatrix, blocks: BlockStructure, d: Sequence[float]) -> float:
    """Float variant of the bound for measured (irrational) dimensions."""
    n = blocks.n
    if len(d) != n:
        raise MalformedInputError(f"dimension vector has {len(d)} entries for {n} blocks")
    if rank(pi) != blocks.target_dim:
        raise SurjectivityError("projection is not surjective")
    dims = _image_dims_by_mask(pi, blocks)
    full = (1 << n) - 1
    return min(
        sum(d[i] for i in _subset_of_mask(mask, n)) + dims[full ^ mask]
        for mask in range(1, full + 1)
    )


def projection_upper_bound_float(pi: RationalMatrix, blocks: BlockStructure, d: Sequence[float]) -> float:
    """min over all subsets, the empty one included: the a-priori upper bound
    on the dimension of any projected product (the empty subset contributes
    the full image dimension, i.e. k for surjective maps)."""
    n = blocks.n
    if len(d) != n:
        raise MalformedInputError(f"dimension vector has {len(d)} entries for {n} blocks")
    dims = _image_dims_by_mask(pi, blocks)
    full = (1 << n) - 1
    return min(
        sum(d[i] for i in _subset_of_mask(mask, n)) + dims[full ^ mask]
        for mask in range(full + 1)
    )
