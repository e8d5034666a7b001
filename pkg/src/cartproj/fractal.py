"""Self-similar sets, their natural measures, box-counting estimates, and the
randomized projection experiments.

Box grids are anchored at the coordinate origin with membership decided by
floor division, so occupancy counts are bit-reproducible. Verdicts aggregate
medians and fractions over trials: the statements being probed hold for
almost every parameter, so individual exceptional draws are legitimate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .analysis import DiscreteMeasure
from .conformal import ConformalParameter, apply_pi_lambda, rng_for, sample_lambda
from .errors import (
    BudgetError,
    InsufficientResolutionError,
    MalformedInputError,
    UnsupportedCaseError,
)
from .exactlin import BlockStructure, RationalMatrix
from .mstar import mstar_value_float

ATOM_BUDGET = 10**7

DIMENSION_NOTE = (
    "box-counting bounds the Hausdorff dimension from above; agreement with "
    "the predicted value corroborates it here, it does not certify it"
)


@dataclass(frozen=True)
class SimilarityMap:
    ratio: float
    translation: np.ndarray
    rotation: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise MalformedInputError(f"contraction ratio must be in (0,1): {self.ratio}")
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(-1)
        )
        if self.rotation is not None:
            rot = np.asarray(self.rotation, dtype=np.float64)
            if rot.shape != (self.translation.size, self.translation.size):
                raise MalformedInputError("rotation shape does not match translation")
            object.__setattr__(self, "rotation", rot)


@dataclass(frozen=True)
class SelfSimilarSpec:
    """An iterated function system of contracting similarities.

    The open set condition is assumed, not verified; under it the similarity
    dimension (the root of sum ratio_j^s = 1) is the Hausdorff dimension.
    """

    ambient_dim: int
    maps: tuple[SimilarityMap, ...]
    label: str = ""

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise MalformedInputError("ambient dimension must be positive")
        if len(self.maps) < 1:
            raise MalformedInputError("at least one map is required")
        for sm in self.maps:
            if sm.translation.size != self.ambient_dim:
                raise MalformedInputError("translation dimension mismatch")

    @property
    def num_maps(self) -> int:
        return len(self.maps)

    @property
    def max_ratio(self) -> float:
        return max(sm.ratio for sm in self.maps)

    def similarity_dimension(self) -> float:
        ratios = np.array([sm.ratio for sm in self.maps])
        if ratios.size == 1:
            return 0.0
        if np.allclose(ratios, ratios[0]):
            return math.log(len(ratios)) / math.log(1.0 / ratios[0])
        f = lambda s: float(np.sum(ratios**s) - 1.0)
        hi = 1.0
        while f(hi) > 0:
            hi *= 2.0
        return float(optimize.brentq(f, 1e-12, hi))

    @classmethod
    def equal_ratio(
        cls, num_maps: int, ratio: float, ambient_dim: int = 1, label: str = ""
    ) -> "SelfSimilarSpec":
        """num_maps maps of one ratio with translations spread over [0, 1]^d."""
        if num_maps < 2:
            raise MalformedInputError("need at least two maps")
        step = (1.0 - ratio) / (num_maps - 1)
        maps = tuple(
            SimilarityMap(ratio=ratio, translation=np.full(ambient_dim, j * step))
            for j in range(num_maps)
        )
        return cls(ambient_dim=ambient_dim, maps=maps, label=label)

    @classmethod
    def middle_thirds(cls) -> "SelfSimilarSpec":
        return cls.equal_ratio(num_maps=2, ratio=1.0 / 3.0, label="middle-thirds")

    @classmethod
    def with_dimension(
        cls, num_maps: int, dimension: float, ambient_dim: int = 1, label: str = ""
    ) -> "SelfSimilarSpec":
        """Equal-ratio system whose similarity dimension is exactly ``dimension``."""
        if not 0.0 < dimension:
            raise MalformedInputError("dimension must be positive")
        ratio = float(num_maps) ** (-1.0 / float(dimension))
        if not 0.0 < ratio < 1.0:
            raise MalformedInputError(
                f"no contraction realizes dimension {dimension} with {num_maps} maps"
            )
        return cls.equal_ratio(num_maps=num_maps, ratio=ratio, ambient_dim=ambient_dim, label=label)

    def extent(self) -> float:
        """Diameter proxy of the attractor's bounding box.

        Exact for one-dimensional rotation-free systems (the hull runs
        between the extreme fixed points); otherwise estimated from a
        depth-6 atom cloud.
        """
        if self.ambient_dim == 1 and all(sm.rotation is None for sm in self.maps):
            fixes = [float(sm.translation[0]) / (1.0 - sm.ratio) for sm in self.maps]
            return max(fixes) - min(fixes)
        depth = min(6, int(math.log(ATOM_BUDGET) / math.log(self.num_maps)))
        atoms = build_cantor(self, depth).atoms
        span = atoms.max(axis=0) - atoms.min(axis=0)
        return float(np.linalg.norm(span)) / (1.0 - self.max_ratio ** depth)


def build_cantor(spec: SelfSimilarSpec, depth: int, budget: int = ATOM_BUDGET) -> DiscreteMeasure:
    """Uniform masses on the depth-fold images of the origin (the natural
    self-similar measure at that resolution)."""
    if depth < 1:
        raise MalformedInputError("depth must be at least 1")
    count = spec.num_maps**depth
    if count > budget:
        raise BudgetError(f"{count} atoms exceed the budget {budget}")
    pts = np.zeros((1, spec.ambient_dim))
    for _ in range(depth):
        layers = []
        for sm in spec.maps:
            moved = pts @ sm.rotation.T if sm.rotation is not None else pts
            layers.append(sm.ratio * moved + sm.translation)
        pts = np.concatenate(layers, axis=0)
    masses = np.full(count, 1.0 / count)
    return DiscreteMeasure(atoms=pts, masses=masses, block_sizes=(spec.ambient_dim,))


def product_measure(measures: Sequence[DiscreteMeasure], budget: int = ATOM_BUDGET) -> DiscreteMeasure:
    """Cartesian product: atom tuples with multiplied masses, one block per factor."""
    if not measures:
        raise MalformedInputError("need at least one factor")
    count = 1
    for mu in measures:
        count *= mu.count
    if count > budget:
        raise BudgetError(f"{count} product atoms exceed the budget {budget}")
    atoms = measures[0].atoms
    masses = measures[0].masses
    sizes = list(measures[0].block_sizes or (measures[0].dim,))
    for mu in measures[1:]:
        left = np.repeat(atoms, mu.count, axis=0)
        right = np.tile(mu.atoms, (atoms.shape[0], 1))
        atoms = np.concatenate([left, right], axis=1)
        masses = np.repeat(masses, mu.count) * np.tile(mu.masses, masses.shape[0])
        sizes.extend(mu.block_sizes or (mu.dim,))
    return DiscreteMeasure(atoms=atoms, masses=masses, block_sizes=tuple(sizes))


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    stderr: float
    scales_used: tuple[int, ...]
    counts: tuple[int, ...]
    table: tuple[tuple[int, int], ...]


def _as_point_cloud(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise MalformedInputError("points must be a vector or an (N, k) array")
    return arr


def _box_counts(points: np.ndarray, scales: Sequence[int]) -> list[int]:
    counts = []
    for j in scales:
        keys = np.floor(points * float(2**j)).astype(np.int64)
        counts.append(int(np.unique(keys, axis=0).shape[0]))
    return counts


def box_dimension(
    points, scales: Sequence[int] | None = None, fit_policy: str = "count-window"
) -> DimensionEstimate:
    """Least-squares slope of log2(box count) against the dyadic level j.

    ``scales`` lists the levels (side 2^-j). Policy "count-window" keeps the
    levels where 10 <= count <= N/10 and needs at least four of them;
    "all" fits every level (two suffice).
    """
    pts = _as_point_cloud(points)
    if scales is None:
        scales = range(0, 21)
    scales = [int(j) for j in scales]
    counts = _box_counts(pts, scales)
    table = tuple(zip(scales, counts))
    n_pts = pts.shape[0]
    if fit_policy == "count-window":
        window = [(j, c) for j, c in table if 10 <= c <= n_pts / 10]
        minimum = 4
    elif fit_policy == "all":
        window = list(table)
        minimum = 2
    else:
        raise MalformedInputError(f"unknown fit policy: {fit_policy!r}")
    if len(window) < minimum:
        raise InsufficientResolutionError(
            f"regression window has {len(window)} scales, needs {minimum}"
        )
    xs = np.array([j for j, _ in window], dtype=np.float64)
    ys = np.array([math.log2(c) for _, c in window])
    xbar, ybar = xs.mean(), ys.mean()
    sxx = float(np.sum((xs - xbar) ** 2))
    if sxx == 0:
        raise InsufficientResolutionError("degenerate scale window")
    slope = float(np.sum((xs - xbar) * (ys - ybar)) / sxx)
    resid = ys - (ybar + slope * (xs - xbar))
    if len(window) > 2:
        stderr = math.sqrt(max(float(np.sum(resid**2)), 0.0) / (len(window) - 2) / sxx)
    else:
        stderr = 0.0
    return DimensionEstimate(
        slope=slope,
        stderr=stderr,
        scales_used=tuple(int(x) for x in xs),
        counts=tuple(c for _, c in window),
        table=table,
    )


def coverage_fraction(points, scale: float, window) -> float:
    """Occupied fraction of the half-open grid [lo, hi) at the given box side."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    lo = np.asarray(window[0], dtype=np.float64).reshape(-1)
    hi = np.asarray(window[1], dtype=np.float64).reshape(-1)
    if lo.size != pts.shape[1] or hi.size != pts.shape[1]:
        raise MalformedInputError("window dimension mismatch")
    if scale <= 0:
        raise MalformedInputError("scale must be positive")
    if np.any(hi <= lo):
        raise MalformedInputError("window has nonpositive volume")
    if np.any(pts < lo) or np.any(pts >= hi):
        raise MalformedInputError("window does not contain all points")
    per_axis = np.ceil((hi - lo) / scale - 1e-12).astype(np.int64)
    total = int(np.prod(per_axis))
    keys = np.floor((pts - lo) / scale).astype(np.int64)
    occupied = int(np.unique(keys, axis=0).shape[0])
    return occupied / total


def scales_for_depth(specs: Sequence[SelfSimilarSpec], depth: int) -> list[int]:
    """Dyadic levels from 0 down to the construction scale (max ratio)^depth."""
    r = max(spec.max_ratio for spec in specs)
    j_max = int(math.floor(depth * math.log2(1.0 / r)))
    return list(range(0, max(j_max, 1) + 1))


@dataclass(frozen=True)
class DimensionTrialRow:
    trial: int
    lambda_digest: str
    estimate: float
    stderr: float
    window_scales: int


@dataclass(frozen=True)
class DimensionExperimentReport:
    mstar: float
    target_dim: int
    atom_count: int
    depth: int
    rows: tuple[DimensionTrialRow, ...]
    scale_tables: tuple[tuple[tuple[int, int], ...], ...]
    note: str = DIMENSION_NOTE

    def estimates(self) -> list[float]:
        return [r.estimate for r in self.rows]

    def median_estimate(self) -> float:
        return float(np.median(self.estimates()))

    def fraction_within(self, tolerance: float) -> float:
        est = self.estimates()
        hits = sum(1 for e in est if abs(e - self.mstar) <= tolerance)
        return hits / len(est)


def experiment_dimension(
    pi: RationalMatrix,
    blocks: BlockStructure,
    specs: Sequence[SelfSimilarSpec],
    trials: int,
    depth: int,
    seed: int,
    t_law: str = "uniform:0.5,2",
    budget: int = ATOM_BUDGET,
    workers: int = 1,
) -> DimensionExperimentReport:
    """Box-dimension estimates of randomly twisted projections of the product
    measure, to be compared against the predicted bound value."""
    if trials < 1:
        raise MalformedInputError("trials must be positive")
    if len(specs) != blocks.n:
        raise MalformedInputError(f"{len(specs)} specs for {blocks.n} blocks")
    for spec, m in zip(specs, blocks.block_sizes):
        if spec.ambient_dim != m:
            raise MalformedInputError("spec ambient dimension does not match its block")
    dims = [spec.similarity_dimension() for spec in specs]
    bound = mstar_value_float(pi, blocks, dims)
    if bound > blocks.target_dim:
        raise UnsupportedCaseError(
            f"bound {bound} exceeds k={blocks.target_dim}; use the coverage experiment"
        )
    mu = product_measure([build_cantor(s, depth, budget) for s in specs], budget)
    scales = scales_for_depth(specs, depth)

    def run_trial(trial: int):
        lam = sample_lambda(blocks, rng_for(seed, trial), t_law)
        projected = apply_pi_lambda(pi, blocks, lam, mu.atoms)
        est = box_dimension(projected, scales=scales)
        row = DimensionTrialRow(
            trial=trial,
            lambda_digest=lam.digest(),
            estimate=est.slope,
            stderr=est.stderr,
            window_scales=len(est.scales_used),
        )
        return row, est.table

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, range(trials)))
    else:
        results = [run_trial(t) for t in range(trials)]
    rows = tuple(r for r, _ in results)
    tables = tuple(t for _, t in results)
    return DimensionExperimentReport(
        mstar=bound,
        target_dim=blocks.target_dim,
        atom_count=mu.count,
        depth=depth,
        rows=rows,
        scale_tables=tables,
    )


@dataclass(frozen=True)
class CoverageTrialRow:
    trial: int  # -1 marks the unscaled control parameter
    depth: int
    lambda_digest: str
    scale: float
    coverage: float


@dataclass(frozen=True)
class CoverageExperimentReport:
    mstar: float
    target_dim: int
    depths: tuple[int, ...]
    rows: tuple[CoverageTrialRow, ...]

    def coverages_at(self, depth: int) -> list[float]:
        return [r.coverage for r in self.rows if r.depth == depth and r.trial >= 0]

    def median_by_depth(self) -> dict[int, float]:
        return {d: float(np.median(self.coverages_at(d))) for d in self.depths}

    def control_at(self, depth: int) -> float | None:
        for r in self.rows:
            if r.trial == -1 and r.depth == depth:
                return r.coverage
        return None


def _matched_scale(
    lam: ConformalParameter, specs: Sequence[SelfSimilarSpec], extents: Sequence[float], depth: int
) -> float:
    return sum(
        abs(t) * ext * spec.max_ratio**depth
        for t, ext, spec in zip(lam.scales, extents, specs)
    )


def experiment_positive_measure(
    pi: RationalMatrix,
    blocks: BlockStructure,
    specs: Sequence[SelfSimilarSpec],
    trials: int,
    depths: Sequence[int],
    seed: int,
    t_law: str = "uniform:0.5,2",
    budget: int = ATOM_BUDGET,
    workers: int = 1,
    control: bool = True,
) -> CoverageExperimentReport:
    """Grid coverage of randomly twisted projections at the scale matched to
    the construction depth; positive limiting coverage is the empirical proxy
    for positive Lebesgue measure."""
    if trials < 1:
        raise MalformedInputError("trials must be positive")
    depths = sorted(int(d) for d in depths)
    if not depths:
        raise MalformedInputError("need at least one depth")
    if len(specs) != blocks.n:
        raise MalformedInputError(f"{len(specs)} specs for {blocks.n} blocks")
    dims = [spec.similarity_dimension() for spec in specs]
    bound = mstar_value_float(pi, blocks, dims)
    if bound <= blocks.target_dim:
        raise UnsupportedCaseError(
            f"bound {bound} does not exceed k={blocks.target_dim}; use the dimension experiment"
        )
    if blocks.target_dim != 1:
        raise UnsupportedCaseError("coverage grids are implemented for k = 1")
    extents = [spec.extent() for spec in specs]
    products = {
        d: product_measure([build_cantor(s, d, budget) for s in specs], budget) for d in depths
    }

    def coverage_for(lam: ConformalParameter, depth: int) -> tuple[float, float]:
        mu = products[depth]
        projected = apply_pi_lambda(pi, blocks, lam, mu.atoms)
        scale = _matched_scale(lam, specs, extents, depth)
        lo = projected.min(axis=0)
        hi = projected.max(axis=0) + scale
        return scale, coverage_fraction(projected, scale, (lo, hi))

    def run_trial(trial: int) -> list[CoverageTrialRow]:
        lam = sample_lambda(blocks, rng_for(seed, trial), t_law)
        out = []
        for d in depths:
            scale, cov = coverage_for(lam, d)
            out.append(
                CoverageTrialRow(
                    trial=trial, depth=d, lambda_digest=lam.digest(), scale=scale, coverage=cov
                )
            )
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(run_trial, range(trials)))
    else:
        nested = [run_trial(t) for t in range(trials)]
    rows = [row for batch in nested for row in batch]
    if control:
        lam1 = ConformalParameter.identity(blocks)
        for d in depths:
            scale, cov = coverage_for(lam1, d)
            rows.append(
                CoverageTrialRow(
                    trial=-1, depth=d, lambda_digest=lam1.digest(), scale=scale, coverage=cov
                )
            )
    return CoverageExperimentReport(
        mstar=bound, target_dim=blocks.target_dim, depths=tuple(depths), rows=tuple(rows)
    )
