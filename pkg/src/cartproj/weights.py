"""Constructive convex weights over independent column tuples.

Given per-block generating columns of a projection matrix, a target s >= 0 and
a budget vector d, this module

* enumerates the family of tuples J = (J_1,...,J_n) of per-block column
  subsets whose union is linearly independent with at least ceil(s) elements,
* forms, for each tuple and pivot block i, the count vector
  (#J_1,...,#J_n) + (s - sum #J_j) e_i, kept when nonnegative (its
  coordinates always sum to exactly s),
* finds nonnegative convex weights alpha over those vectors whose weighted
  sum is coordinate-wise <= d (an exact phase-one simplex; feasibility is
  guaranteed whenever the 2^n subset conditions
  sum_{i in I} d_i + dim(sum of the complementary spans) >= s all hold),
* brute-forces the vertices of the exponent polyhedron
  P = {d >= 0 : all 2^n subset conditions} and checks each vertex is exactly
  one of the count vectors,
* decomposes arbitrary points as convex hull of count vectors plus a
  nonnegative combination of the coordinate rays, the converse of membership.

All arithmetic is exact; a mismatch anywhere is a falsification record, not a
tolerance issue.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._simplex import solve_feasibility
from .errors import BudgetError, FalsificationError, InfeasibleInstanceError, MalformedInputError
from .exactlin import (
    BlockStructure,
    RationalMatrix,
    as_rational,
    image_dim,
    is_independent,
    rank,
    solve_square,
)
from .mstar import DimensionVector

DEFAULT_BUDGET = 10**6
MAX_VERTEX_BLOCKS = 4


@dataclass(frozen=True)
class WeightsInstance:
    """A projection matrix with block structure, a target s and a budget d.

    Block i's span is generated by the block-i columns of ``pi``.
    """

    pi: RationalMatrix
    blocks: BlockStructure
    s: Fraction
    d: DimensionVector
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "s", as_rational(self.s))
        if self.s < 0:
            raise MalformedInputError(f"target s must be nonnegative: {self.s}")
        if self.pi.cols != self.blocks.total_dim:
            raise MalformedInputError(
                f"matrix has {self.pi.cols} columns, blocks describe {self.blocks.total_dim}"
            )
        self.d.check_blocks(self.blocks)

    def generators(self, block: int) -> RationalMatrix:
        return self.pi.select_columns(list(self.blocks.column_range(block)))

    def span_dim(self, subset: Sequence[int]) -> int:
        """Dimension of the sum of the given blocks' spans."""
        return image_dim(self.pi, self.blocks, subset)


@dataclass(frozen=True)
class IndependentTuple:
    """Per-block column selections (local 0-based indices) with independent union."""

    selections: tuple[tuple[int, ...], ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(sel) for sel in self.selections)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class WeightVector:
    """A count vector pivoted at one block; coordinates sum to exactly s."""

    source: IndependentTuple
    pivot: int
    vector: tuple[Fraction, ...]


@dataclass(frozen=True)
class WeightAssignment:
    """Nonzero convex weights on weight vectors, with exact invariants."""

    entries: tuple[tuple[WeightVector, Fraction], ...]

    def total(self) -> Fraction:
        return sum((a for _, a in self.entries), Fraction(0))

    def combined(self) -> tuple[Fraction, ...]:
        n = len(self.entries[0][0].vector) if self.entries else 0
        out = [Fraction(0)] * n
        for wv, a in self.entries:
            for i, v in enumerate(wv.vector):
                out[i] += a * v
        return tuple(out)


@dataclass(frozen=True)
class Polyhedron:
    """Rows (coeffs, rhs) each meaning coeffs . x >= rhs; includes d_i >= 0."""

    n: int
    rows: tuple[tuple[tuple[Fraction, ...], Fraction], ...]


@dataclass(frozen=True)
class PointDecomposition:
    convex: tuple[tuple[WeightVector, Fraction], ...]
    cone: tuple[Fraction, ...]


@dataclass(frozen=True)
class VertexClaimReport:
    vertices: tuple[tuple[Fraction, ...], ...]
    matched: tuple[tuple[tuple[Fraction, ...], WeightVector], ...]
    unmatched: tuple[tuple[Fraction, ...], ...]

    @property
    def ok(self) -> bool:
        return not self.unmatched


def _subsets_in_mask_order(n: int):
    for mask in range(1 << n):
        yield tuple(i for i in range(n) if mask >> i & 1)


def violated_conditions(instance: WeightsInstance) -> list[tuple[int, ...]]:
    """Subsets I whose condition sum_{i in I} d_i + dim(span of I^c) >= s fails."""
    n = instance.blocks.n
    out = []
    for subset in _subsets_in_mask_order(n):
        comp = tuple(i for i in range(n) if i not in subset)
        lhs = sum((instance.d.values[i] for i in subset), Fraction(0)) + instance.span_dim(comp)
        if lhs < instance.s:
            out.append(subset)
    return out


def enumerate_tuples(instance: WeightsInstance) -> list[IndependentTuple]:
    """All per-block selection tuples with independent union of size >= ceil(s).

    Tuples whose union exceeds min(k, rank of the matrix) cannot be
    independent and are pruned; that is the only pruning. Order is
    deterministic: per-block subsets by increasing bitmask, later blocks
    varying fastest.
    """
    blocks = instance.blocks
    n = blocks.n
    candidates = 1
    for m in blocks.block_sizes:
        candidates *= 1 << m
    if candidates > instance.budget:
        raise BudgetError(
            f"{candidates} candidate tuples exceed the enumeration budget {instance.budget}"
        )
    need = math.ceil(instance.s)
    cap = min(blocks.target_dim, rank(instance.pi))
    per_block = [
        [tuple(j for j in range(m) if mask >> j & 1) for mask in range(1 << m)]
        for m in blocks.block_sizes
    ]
    offsets = [blocks.column_range(i).start for i in range(n)]
    out = []
    for combo in itertools.product(*per_block):
        total = sum(len(sel) for sel in combo)
        if total < need or total > cap:
            continue
        cols = [offsets[i] + j for i in range(n) for j in combo[i]]
        if is_independent(instance.pi, blocks, cols):
            out.append(IndependentTuple(selections=tuple(combo)))
    return out


def enumerate_weight_vectors(instance: WeightsInstance) -> list[WeightVector]:
    """All (tuple, pivot) pairs whose pivoted count vector is nonnegative.

    Duplicate vectors arising from distinct pairs are kept as distinct
    entries; the weights are indexed by pairs, not by vectors.
    """
    n = instance.blocks.n
    out = []
    for tup in enumerate_tuples(instance):
        counts = tup.counts
        deficit = instance.s - sum(counts)  # <= 0 by the size constraint
        for pivot in range(n):
            coord = counts[pivot] + deficit
            if coord >= 0:
                vec = tuple(
                    coord if i == pivot else Fraction(counts[i]) for i in range(n)
                )
                out.append(WeightVector(source=tup, pivot=pivot, vector=vec))
    return out


def _unique_vectors(vectors: list[WeightVector]):
    reps: list[WeightVector] = []
    seen: dict[tuple[Fraction, ...], int] = {}
    for wv in vectors:
        if wv.vector not in seen:
            seen[wv.vector] = len(reps)
            reps.append(wv)
    return reps


def find_weights(instance: WeightsInstance) -> WeightAssignment:
    """Convex weights alpha with weighted vector sum <= d, found exactly.

    Raises InfeasibleInstanceError when a subset condition fails. On a
    feasible instance the weights always exist; a solver miss there would be
    an internal falsification and raises accordingly.
    """
    bad = violated_conditions(instance)
    if bad:
        raise InfeasibleInstanceError(bad[0])
    vectors = enumerate_weight_vectors(instance)
    if not vectors:
        raise FalsificationError(
            "no candidate weight vectors on a feasible instance"
        )
    reps = _unique_vectors(vectors)
    n = instance.blocks.n
    r = len(reps)
    zero, one = Fraction(0), Fraction(1)
    # Variables: alpha per unique vector, then one slack per coordinate.
    a_rows: list[list[Fraction]] = []
    b: list[Fraction] = []
    for j in range(n):
        row = [reps[t].vector[j] for t in range(r)]
        row += [one if u == j else zero for u in range(n)]
        a_rows.append(row)
        b.append(instance.d.values[j])
    a_rows.append([one] * r + [zero] * n)
    b.append(one)
    x = solve_feasibility(a_rows, b)
    if x is None:
        raise FalsificationError(
            "weights infeasible although all subset conditions hold"
        )
    entries = tuple((reps[t], x[t]) for t in range(r) if x[t] != 0)
    assignment = WeightAssignment(entries=entries)
    if assignment.total() != 1:
        raise FalsificationError("weights do not sum to one")
    if any(c > dv for c, dv in zip(assignment.combined(), instance.d.values)):
        raise FalsificationError("weighted vector sum exceeds the budget d")
    return assignment


def build_polyhedron(instance: WeightsInstance) -> Polyhedron:
    """The exponent polyhedron: subset rows in mask order, then d_i >= 0."""
    n = instance.blocks.n
    zero, one = Fraction(0), Fraction(1)
    rows = []
    for subset in _subsets_in_mask_order(n):
        comp = tuple(i for i in range(n) if i not in subset)
        coeffs = tuple(one if i in subset else zero for i in range(n))
        rhs = instance.s - instance.span_dim(comp)
        rows.append((coeffs, rhs))
    for i in range(n):
        coeffs = tuple(one if j == i else zero for j in range(n))
        rows.append((coeffs, zero))
    return Polyhedron(n=n, rows=tuple(rows))


def membership(instance: WeightsInstance, x: Sequence) -> bool:
    """Exact check of all subset and nonnegativity inequalities."""
    point = [as_rational(v) for v in x]
    if len(point) != instance.blocks.n:
        raise MalformedInputError(f"point has {len(point)} coordinates")
    poly = build_polyhedron(instance)
    return all(
        sum(c * v for c, v in zip(coeffs, point)) >= rhs for coeffs, rhs in poly.rows
    )


def enumerate_vertices(instance: WeightsInstance) -> list[tuple[Fraction, ...]]:
    """Brute-force vertex enumeration of the exponent polyhedron.

    Every n-subset of constraint rows with an invertible coefficient matrix
    is solved exactly; solutions satisfying all constraints are kept and
    deduplicated. This is the independent check the count-vector claim is
    verified against.
    """
    n = instance.blocks.n
    if n > MAX_VERTEX_BLOCKS:
        raise BudgetError(
            f"vertex enumeration capped at {MAX_VERTEX_BLOCKS} blocks, got {n}"
        )
    poly = build_polyhedron(instance)
    found: set[tuple[Fraction, ...]] = set()
    for combo in itertools.combinations(poly.rows, n):
        a = [list(coeffs) for coeffs, _ in combo]
        b = [rhs for _, rhs in combo]
        x = solve_square(a, b)
        if x is None:
            continue
        if all(
            sum(c * v for c, v in zip(coeffs, x)) >= rhs for coeffs, rhs in poly.rows
        ):
            found.add(tuple(x))
    return sorted(found)


def verify_vertex_claim(instance: WeightsInstance) -> VertexClaimReport:
    """Match every brute-force vertex against the enumerated count vectors.

    Any unmatched vertex is a falsification record for the caller to raise.
    """
    vertices = enumerate_vertices(instance)
    vectors = enumerate_weight_vectors(instance)
    by_vector: dict[tuple[Fraction, ...], WeightVector] = {}
    for wv in vectors:
        by_vector.setdefault(wv.vector, wv)
    matched, unmatched = [], []
    for v in vertices:
        witness = by_vector.get(v)
        if witness is None:
            unmatched.append(v)
        else:
            matched.append((v, witness))
    return VertexClaimReport(
        vertices=tuple(vertices), matched=tuple(matched), unmatched=tuple(unmatched)
    )


def decompose_point(instance: WeightsInstance, x: Sequence):
    """Write x as convex combination of count vectors plus nonnegative rays.

    Returns a PointDecomposition witness, or None when no such decomposition
    exists (equivalently, when x is outside the polyhedron).
    """
    point = [as_rational(v) for v in x]
    n = instance.blocks.n
    if len(point) != n:
        raise MalformedInputError(f"point has {len(point)} coordinates")
    vectors = enumerate_weight_vectors(instance)
    reps = _unique_vectors(vectors)
    r = len(reps)
    zero, one = Fraction(0), Fraction(1)
    a_rows: list[list[Fraction]] = []
    b: list[Fraction] = []
    for j in range(n):
        row = [reps[t].vector[j] for t in range(r)]
        row += [one if u == j else zero for u in range(n)]
        a_rows.append(row)
        b.append(point[j])
    a_rows.append([one] * r + [zero] * n)
    b.append(one)
    sol = solve_feasibility(a_rows, b)
    if sol is None:
        return None
    convex = tuple((reps[t], sol[t]) for t in range(r) if sol[t] != 0)
    cone = tuple(sol[r + i] for i in range(n))
    rebuilt = [sum((a * wv.vector[j] for wv, a in convex), cone[j]) for j in range(n)]
    if rebuilt != point:
        raise FalsificationError("decomposition does not reconstruct the point")
    return PointDecomposition(convex=convex, cone=cone)


def tight_subsets(instance: WeightsInstance, x: Sequence) -> list[tuple[int, ...]]:
    """Nonempty subsets whose condition holds with equality at x."""
    point = [as_rational(v) for v in x]
    n = instance.blocks.n
    out = []
    for subset in _subsets_in_mask_order(n):
        if not subset:
            continue
        comp = tuple(i for i in range(n) if i not in subset)
        lhs = sum((point[i] for i in subset), Fraction(0)) + instance.span_dim(comp)
        if lhs == instance.s:
            out.append(subset)
    return out
