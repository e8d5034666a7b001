"""Shared builders for randomized suites: seeded instance generators and the
independently coded oracles the exact modules are checked against."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from cartproj.exactlin import BlockStructure, RationalMatrix
from cartproj.mstar import DimensionVector
from cartproj.weights import WeightsInstance


def rational_in(rng: random.Random, lo: int, hi: int, max_den: int = 2) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(lo * den, hi * den)
    return Fraction(num, den)


def random_projection(rng: random.Random, n_max=3, m_max=3, k_max=3):
    """A random surjective block projection with entries in [-2, 2]."""
    while True:
        n = rng.randint(1, n_max)
        sizes = tuple(rng.randint(1, m_max) for _ in range(n))
        k = rng.randint(1, min(k_max, sum(sizes)))
        blocks = BlockStructure(block_sizes=sizes, target_dim=k)
        pi = RationalMatrix(
            [[rational_in(rng, -2, 2) for _ in range(blocks.total_dim)] for _ in range(k)]
        )
        from cartproj.exactlin import rank

        if rank(pi) == k:
            return pi, blocks


def random_weights_instance(rng: random.Random, s_choices=(Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))):
    """Random surjective instance whose polyhedron is nonempty (k >= ceil(s))."""
    while True:
        pi, blocks = random_projection(rng)
        s = rng.choice(s_choices)
        if blocks.target_dim >= -(-s.numerator // s.denominator):
            d = DimensionVector(tuple(rational_in(rng, 0, 3) for _ in range(blocks.n)))
            return WeightsInstance(pi=pi, blocks=blocks, s=s, d=d)


def gauss_rank(rows: list[list[Fraction]]) -> int:
    """Plain fraction Gaussian elimination; deliberately not the Bareiss path."""
    a = [list(r) for r in rows]
    if not a or not a[0]:
        return 0
    n_rows, n_cols = len(a), len(a[0])
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = a[r][c]
        a[r] = [v / inv for v in a[r]]
        for i in range(n_rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        r += 1
        if r == n_rows:
            break
    return r


def mstar_oracle(pi: RationalMatrix, blocks: BlockStructure, d: DimensionVector) -> Fraction:
    """Brute-force bound via itertools subsets and plain Gaussian ranks."""
    n = blocks.n
    best = None
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            comp_cols: list[int] = []
            for b in range(n):
                if b not in subset:
                    comp_cols.extend(blocks.column_range(b))
            rows = [[pi.entry(i, j) for j in comp_cols] for i in range(pi.rows)]
            value = sum((d.values[i] for i in subset), Fraction(0)) + gauss_rank(rows)
            if best is None or value < best:
                best = value
    return best


def random_point_in_polyhedron(rng: random.Random, instance: WeightsInstance, vertices):
    """Exact convex combination of vertices plus a nonnegative ray shift."""
    n = instance.blocks.n
    weights = [Fraction(rng.randint(0, 5)) for _ in vertices]
    if sum(weights) == 0:
        weights[rng.randrange(len(weights))] = Fraction(1)
    total = sum(weights)
    point = [
        sum((w * v[j] for w, v in zip(weights, vertices)), Fraction(0)) / total
        for j in range(n)
    ]
    for j in range(n):
        point[j] += Fraction(rng.randint(0, 4), 4)
    return tuple(point)
