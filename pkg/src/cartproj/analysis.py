"""Energies, Fourier transforms of discrete measures, the rotation-averaged
Gaussian identity, and the Gaussian-damped Riesz kernel bound.

The central object is the kernel integral

    K(z) = integral over R^k of |xi|^(mstar - k) exp(-|D(xi)|^2 / 2) dxi,

where D scales the block components of pi^T(xi) by the per-block distances
z_i of a point pair. The radial part is reduced in closed form through the
Gamma function (which integrates the |xi| singularity exactly), leaving a
sphere quadrature of the direction-dependent quadratic form. The bound
machinery multiplies K(z) by z^(d') for the exponent vector d' assembled
from the convex weights, and the averaged projected energy reduces to pair
sums of K values.

Float sums that feed reports use ``math.fsum`` so the result is independent
of summation order (and hence of any parallel split).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .conformal import haar_rotations, rng_for, sample_scales
from .errors import (
    DegeneratePairError,
    MalformedInputError,
    RankDeficiencyError,
    UnsupportedCaseError,
)
from .exactlin import BlockStructure, RationalMatrix
from .mstar import DimensionVector, GapClass, MStarResult, compute_mstar, mstar_gap_class
from .weights import WeightAssignment, WeightsInstance, find_weights


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite weighted atom cloud, optionally tagged with a block structure."""

    atoms: np.ndarray
    masses: np.ndarray
    block_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=np.float64))
        masses = np.asarray(self.masses, dtype=np.float64).reshape(-1)
        if atoms.shape[0] != masses.shape[0]:
            raise MalformedInputError(
                f"{atoms.shape[0]} atoms with {masses.shape[0]} masses"
            )
        if masses.size == 0 or np.any(masses <= 0) or not np.all(np.isfinite(masses)):
            raise MalformedInputError("masses must be finite and positive")
        if not np.all(np.isfinite(atoms)):
            raise MalformedInputError("atoms must be finite")
        if self.block_sizes is not None:
            sizes = tuple(int(m) for m in self.block_sizes)
            if sum(sizes) != atoms.shape[1]:
                raise MalformedInputError(
                    f"block sizes {sizes} do not sum to atom dimension {atoms.shape[1]}"
                )
            object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    @property
    def count(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def total_mass(self) -> float:
        return math.fsum(self.masses.tolist())


@dataclass(frozen=True)
class EnergyResult:
    """Pair-sum energy value; infinite when a singular pair is included.

    ``singular_pairs`` counts ordered off-diagonal pairs whose distance
    factor vanishes under a positive exponent; ``excluded_pairs`` counts
    pairs dropped by the distinct-blocks restriction.
    """

    value: float
    singular_pairs: int = 0
    excluded_pairs: int = 0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def fourier(measure: DiscreteMeasure, xi) -> complex:
    """sum_j mass_j * exp(-i xi . atom_j)."""
    xi = np.asarray(xi, dtype=np.float64).reshape(-1)
    if xi.shape[0] != measure.dim:
        raise MalformedInputError(
            f"frequency has dimension {xi.shape[0]}, atoms have {measure.dim}"
        )
    phases = measure.atoms @ xi
    re = math.fsum((measure.masses * np.cos(phases)).tolist())
    im = math.fsum((measure.masses * np.sin(phases)).tolist())
    return complex(re, -im)


def _offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def energy_s(measure: DiscreteMeasure, s: float) -> EnergyResult:
    """Off-diagonal double sum of |x_j - x_l|^(-s) against mass products."""
    if s < 0:
        raise MalformedInputError(f"energy exponent must be nonnegative: {s}")
    x = measure.atoms
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    off = _offdiag_mask(measure.count)
    mm = np.outer(measure.masses, measure.masses)
    if s == 0:
        value = math.fsum(mm[off].tolist())
        return EnergyResult(value=value, singular_pairs=0)
    singular = int(np.count_nonzero(off & (d == 0)))
    if singular:
        return EnergyResult(value=math.inf, singular_pairs=singular)
    value = math.fsum((mm[off] * d[off] ** (-s)).tolist())
    return EnergyResult(value=value)


def _block_distance_stack(measure: DiscreteMeasure) -> np.ndarray:
    """Per-block pairwise distances, shape (n_blocks, N, N)."""
    if measure.block_sizes is None:
        raise MalformedInputError("measure carries no block structure")
    out = []
    start = 0
    for m in measure.block_sizes:
        xs = measure.atoms[:, start : start + m]
        out.append(np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=-1))
        start += m
    return np.stack(out)


def energy_vec(
    measure: DiscreteMeasure, dvec: Sequence[float], distinct_blocks_only: bool = False
) -> EnergyResult:
    """Block energy: per-block distance factors with per-block exponents.

    Pairs coinciding in some block under a positive exponent force an
    infinite value; ``distinct_blocks_only`` instead drops every pair that
    coincides in any block (the restriction the continuum estimates are
    proved under) and reports how many were dropped.
    """
    z = _block_distance_stack(measure)
    n = z.shape[0]
    dvec = [float(v) for v in dvec]
    if len(dvec) != n:
        raise MalformedInputError(f"{len(dvec)} exponents for {n} blocks")
    if any(v < 0 for v in dvec):
        raise MalformedInputError(f"exponents must be nonnegative: {dvec}")
    off = _offdiag_mask(measure.count)
    mm = np.outer(measure.masses, measure.masses)
    shared = np.any(z == 0, axis=0) & off
    excluded = 0
    valid = off.copy()
    if distinct_blocks_only:
        excluded = int(np.count_nonzero(shared))
        valid &= ~shared
    else:
        singular = 0
        for i in range(n):
            if dvec[i] > 0:
                singular += int(np.count_nonzero(off & (z[i] == 0)))
        if singular:
            return EnergyResult(value=math.inf, singular_pairs=singular)
    factor = np.ones_like(mm)
    for i in range(n):
        if dvec[i] > 0:
            with np.errstate(divide="ignore"):
                factor *= np.where(valid, z[i], 1.0) ** (-dvec[i])
    value = math.fsum((mm[valid] * factor[valid]).tolist())
    return EnergyResult(value=value, excluded_pairs=excluded)


def chi_normalizer(m: int) -> float:
    """Total mass of |t|^(m-1) exp(-t^2/2) dt over the line: 2^(m/2) Gamma(m/2)."""
    return 2.0 ** (m / 2.0) * math.gamma(m / 2.0)


@dataclass(frozen=True)
class GaussianIdentityEstimate:
    """Monte Carlo estimate of the rotation-scale average of exp(i eta . t O z),
    divided by the Gaussian exp(-(|z||eta|)^2/2) it is proportional to."""

    ratio: float
    stderr: float
    imag_mean: float
    gaussian: float
    samples: int


def gaussian_identity_ratio(
    m: int, z, eta, samples: int, seed: int
) -> GaussianIdentityEstimate:
    """Estimate the constant relating the oscillatory average to its Gaussian.

    The scale is drawn from the normalized |t|^(m-1) exp(-t^2/2) law and the
    rotation from the Haar measure, so the estimator is the law's normalizer
    times the sample mean of cos(eta . t O z). The imaginary part is reported
    as a sanity statistic (its expectation is zero by symmetry).
    """
    if samples < 2:
        raise MalformedInputError("need at least two samples")
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    eta = np.asarray(eta, dtype=np.float64).reshape(-1)
    if z.shape != (m,) or eta.shape != (m,):
        raise MalformedInputError(f"z and eta must have dimension {m}")
    rng = rng_for(seed, 0)
    ts = sample_scales(m, samples, rng, "chi")
    os_ = haar_rotations(m, samples, rng)
    rotated = np.einsum("nij,j->ni", os_, z) * ts[:, None]
    c = rotated @ eta
    zn = chi_normalizer(m)
    gaussian = math.exp(-0.5 * (np.linalg.norm(z) * np.linalg.norm(eta)) ** 2)
    cos_vals = np.cos(c)
    mean_cos = math.fsum(cos_vals.tolist()) / samples
    var = math.fsum(((cos_vals - mean_cos) ** 2).tolist()) / (samples - 1)
    ratio = zn * mean_cos / gaussian
    stderr = zn * math.sqrt(var / samples) / gaussian
    imag_mean = zn * math.fsum(np.sin(c).tolist()) / samples
    return GaussianIdentityEstimate(
        ratio=ratio, stderr=stderr, imag_mean=imag_mean, gaussian=gaussian, samples=samples
    )


@dataclass(frozen=True)
class KernelInstance:
    """Everything the kernel bound needs for one point pair."""

    pi: RationalMatrix
    blocks: BlockStructure
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mstar: Fraction
    case: GapClass
    dprime: tuple[Fraction, ...]
    weights: WeightAssignment


def _block_norms(blocks: BlockStructure, delta: np.ndarray) -> np.ndarray:
    return np.array(
        [
            np.linalg.norm(delta[blocks.column_range(i).start : blocks.column_range(i).stop])
            for i in range(blocks.n)
        ]
    )


def dprime_for(
    pi: RationalMatrix,
    blocks: BlockStructure,
    d: DimensionVector,
    pivot_block: int = 0,
) -> tuple[MStarResult, GapClass, tuple[Fraction, ...], WeightAssignment]:
    """Exact exponent vector d' <= d for the kernel bound.

    Above k the weights target d reduced by (mstar - k) at ``pivot_block``
    (the minimal-distance block of the pair at hand) with s = k, and the
    reduction is added back; in the fractional case the weights apply to d
    itself with s = mstar, so d' is pivot-independent and sums to mstar.
    """
    result = compute_mstar(pi, blocks, d)
    case = mstar_gap_class(result, blocks.target_dim)
    if case.kind == "forbidden-integer":
        raise UnsupportedCaseError(
            f"bound value {result.value} is an integer below k={blocks.target_dim}"
        )
    k = blocks.target_dim
    if case.kind == "above-k":
        excess = result.value - k
        reduced = tuple(
            v - excess if i == pivot_block else v for i, v in enumerate(d.values)
        )
        inst = WeightsInstance(
            pi=pi, blocks=blocks, s=Fraction(k), d=DimensionVector(reduced)
        )
        assignment = find_weights(inst)
        combined = assignment.combined()
        dprime = tuple(
            c + excess if i == pivot_block else c for i, c in enumerate(combined)
        )
    else:
        inst = WeightsInstance(pi=pi, blocks=blocks, s=result.value, d=d)
        assignment = find_weights(inst)
        dprime = assignment.combined()
    if any(dp > dv for dp, dv in zip(dprime, d.values)):
        raise MalformedInputError(f"exponent vector {dprime} exceeds the budget {d.values}")
    return result, case, dprime, assignment


def build_kernel_instance(
    pi: RationalMatrix, blocks: BlockStructure, d: DimensionVector, x, y
) -> KernelInstance:
    """Kernel data for the pair (x, y); the pivot is the nearest block
    (smallest index on ties)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape[0] != blocks.total_dim or y.shape[0] != blocks.total_dim:
        raise MalformedInputError("points do not match the block structure")
    z = _block_norms(blocks, y - x)
    if np.any(z == 0):
        raise DegeneratePairError(f"coinciding block(s) at {np.nonzero(z == 0)[0].tolist()}")
    pivot = int(np.argmin(z))
    result, case, dprime, assignment = dprime_for(pi, blocks, d, pivot_block=pivot)
    return KernelInstance(
        pi=pi,
        blocks=blocks,
        x=x,
        y=y,
        z=z,
        mstar=result.value,
        case=case,
        dprime=dprime,
        weights=assignment,
    )


def _quadratic_form_matrix(pi, blocks: BlockStructure, z: np.ndarray) -> np.ndarray:
    p = np.asarray(pi.to_float() if isinstance(pi, RationalMatrix) else pi, dtype=np.float64)
    k = p.shape[0]
    a = np.zeros((k, k))
    for i in range(blocks.n):
        r = blocks.column_range(i)
        pb = p[:, r.start : r.stop]
        a += (z[i] ** 2) * (pb @ pb.T)
    return a


def _sphere_nodes(k: int, angular_points: int):
    """Quadrature nodes and weights for the unnormalized (k-1)-sphere measure."""
    if k == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if k == 2:
        mth = max(8, int(angular_points))
        theta = 2.0 * math.pi * np.arange(mth) / mth
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(mth, 2.0 * math.pi / mth)
        return nodes, weights
    if k == 3:
        n_u = max(8, int(math.ceil(math.sqrt(angular_points / 2.0))))
        n_phi = 2 * n_u
        u, wu = special.roots_legendre(n_u)
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        su = np.sqrt(1.0 - u**2)
        nodes = np.stack(
            [
                np.outer(su, np.cos(phi)).ravel(),
                np.outer(su, np.sin(phi)).ravel(),
                np.repeat(u, n_phi),
            ],
            axis=1,
        )
        weights = np.repeat(wu, n_phi) * (2.0 * math.pi / n_phi)
        return nodes, weights
    raise UnsupportedCaseError(f"sphere quadrature implemented for k <= 3, got k={k}")


def _radial_constant(mstar: float) -> float:
    # integral over r > 0 of r^(mstar-1) exp(-a r^2 / 2) = const * a^(-mstar/2)
    return 2.0 ** (mstar / 2.0 - 1.0) * math.gamma(mstar / 2.0)


def kernel_integral(instance: KernelInstance, angular_points: int = 512) -> float:
    """Polar evaluation of the Gaussian-damped Riesz integral.

    The radial integral is closed-form through the Gamma function; what
    remains is a sphere quadrature of q(theta)^(-mstar/2) for the pair's
    quadratic form q. For k = 1 the sphere is the two points +-1.
    """
    k = instance.blocks.target_dim
    mf = float(instance.mstar)
    a = _quadratic_form_matrix(instance.pi, instance.blocks, instance.z)
    nodes, weights = _sphere_nodes(k, angular_points)
    q = np.einsum("ni,ij,nj->n", nodes, a, nodes)
    if np.any(q <= 0):
        raise RankDeficiencyError(
            "quadratic form not positive on the sphere; projection rank-deficient "
            "or degenerate distances"
        )
    return _radial_constant(mf) * math.fsum((weights * q ** (-mf / 2.0)).tolist())


def kernel_bound_ratio(instance: KernelInstance, angular_points: int = 512) -> float:
    """kernel_integral times z^(d'); bounded above uniformly in the pair."""
    value = kernel_integral(instance, angular_points)
    for zi, dpi in zip(instance.z, instance.dprime):
        value *= zi ** float(dpi)
    return value


def _phi_scale_transform(m: int, c: np.ndarray) -> np.ndarray:
    """integral of exp(i c t) |t|^(m-1) exp(-t^2/2) dt over the line (real)."""
    c = np.asarray(c, dtype=np.float64)
    if m == 1:
        return math.sqrt(2.0 * math.pi) * np.exp(-0.5 * c * c)
    if m == 2:
        return 2.0 * (1.0 - math.sqrt(2.0) * c * special.dawsn(c / math.sqrt(2.0)))
    if m == 3:
        return math.sqrt(2.0 * math.pi) * (1.0 - c * c) * np.exp(-0.5 * c * c)
    out = np.empty_like(c)
    for idx, ci in np.ndenumerate(c):
        out[idx] = 2.0 * integrate.quad(
            lambda t: t ** (m - 1) * math.exp(-0.5 * t * t) * math.cos(ci * t), 0, np.inf
        )[0]
    return out


@dataclass(frozen=True)
class ProjectionEnergyEstimate:
    """The averaged projected Riesz-Fourier energy with its block-energy ratio.

    ``value`` estimates the scale-and-rotation average (weighted by the
    Gaussian-type density) of the |xi|^(mstar-k)-weighted squared Fourier
    transform of the projected measure. Diagonal atom pairs and pairs
    coinciding in some block are excluded and counted; the block energy with
    exponents d' is reported under the same restriction, together with the
    value / energy diagnostic ratio.
    """

    value: float
    stderr: float
    samples: int
    pair_count: int
    excluded_diagonal: int
    excluded_shared: int
    rhs_energy: EnergyResult
    ratio: float | None
    mstar: Fraction
    case: GapClass
    dprime: tuple[Fraction, ...]


def average_projection_energy(
    pi: RationalMatrix,
    blocks: BlockStructure,
    d: DimensionVector,
    measure: DiscreteMeasure,
    lambda_samples: int = 32,
    xi_method: str = "pairsum",
    seed: int = 0,
    angular_points: int = 512,
) -> ProjectionEnergyEstimate:
    """Estimate the averaged projected energy of a block-structured measure.

    xi_method "pairsum" evaluates the exact scale-rotation average in closed
    form: the average collapses each atom pair's oscillation into the
    Gaussian-damped kernel, so the whole integral is the pair sum of kernel
    integrals times the per-block scale-law normalizers (stderr 0).

    xi_method "mc" (k = 1 only) Monte Carlos the rotations with the scale
    integrals done analytically per block, one frequency quadrature per pair
    and sample; blocks of size 1 carry no rotation, so for them the two
    methods agree exactly. Expectations coincide; the tests check that.
    """
    if measure.block_sizes is None or tuple(measure.block_sizes) != tuple(blocks.block_sizes):
        raise MalformedInputError("measure block structure does not match")
    result, case, dprime, _ = dprime_for(pi, blocks, d, pivot_block=0)
    mf = float(result.value)
    k = blocks.target_dim

    z = _block_distance_stack(measure)
    n_atoms = measure.count
    off = _offdiag_mask(n_atoms)
    shared = np.any(z == 0, axis=0) & off
    valid = off & ~shared
    excluded_diagonal = n_atoms
    excluded_shared = int(np.count_nonzero(shared))
    mm = np.outer(measure.masses, measure.masses)
    pairs = np.argwhere(valid)
    pair_count = len(pairs)

    norm = 1.0
    for m in blocks.block_sizes:
        norm *= chi_normalizer(m)

    rhs = energy_vec(measure, [float(v) for v in dprime], distinct_blocks_only=True)

    if pair_count == 0:
        value, stderr, samples = 0.0, 0.0, 0
    elif xi_method == "pairsum":
        samples = 0
        if k == 1:
            p = np.asarray(pi.to_float(), dtype=np.float64)
            pnorm2 = np.array(
                [
                    float(np.sum(p[0, blocks.column_range(i).start : blocks.column_range(i).stop] ** 2))
                    for i in range(blocks.n)
                ]
            )
            a_pairs = np.tensordot(pnorm2, z**2, axes=(0, 0))
            kvals = 2.0 * _radial_constant(mf) * a_pairs[valid] ** (-mf / 2.0)
            value = norm * math.fsum((mm[valid] * kvals).tolist())
        else:
            terms = []
            for j, l in pairs:
                inst = KernelInstance(
                    pi=pi,
                    blocks=blocks,
                    x=measure.atoms[j],
                    y=measure.atoms[l],
                    z=z[:, j, l],
                    mstar=result.value,
                    case=case,
                    dprime=dprime,
                    weights=None,
                )
                terms.append(mm[j, l] * kernel_integral(inst, angular_points))
            value = norm * math.fsum(terms)
        stderr = 0.0
    elif xi_method == "mc":
        if k != 1:
            raise UnsupportedCaseError("mc frequency integration implemented for k = 1")
        p = np.asarray(pi.to_float(), dtype=np.float64)
        samples = int(lambda_samples)
        if samples < 1:
            raise MalformedInputError("need at least one sample")
        deltas = [
            measure.atoms[l] - measure.atoms[j] for j, l in pairs
        ]
        per_sample = []
        for r in range(samples):
            rng = rng_for(seed, r)
            rots = [
                haar_rotations(m, pair_count, rng) if m > 1 else None
                for m in blocks.block_sizes
            ]
            b = np.empty((pair_count, blocks.n))
            for i in range(blocks.n):
                rcols = blocks.column_range(i)
                pb = p[0, rcols.start : rcols.stop]
                for t, delta in enumerate(deltas):
                    di = delta[rcols.start : rcols.stop]
                    if rots[i] is None:
                        b[t, i] = float(pb @ di)
                    else:
                        b[t, i] = float(pb @ (rots[i][t] @ di))
            terms = []
            for t, (j, l) in enumerate(pairs):
                terms.append(mm[j, l] * _frequency_integral(mf, blocks.block_sizes, b[t]))
            per_sample.append(math.fsum(terms))
        value = math.fsum(per_sample) / samples
        if samples > 1:
            var = math.fsum([(v - value) ** 2 for v in per_sample]) / (samples - 1)
            stderr = math.sqrt(var / samples)
        else:
            stderr = 0.0
    else:
        raise MalformedInputError(f"unknown xi_method: {xi_method!r}")

    ratio = None
    if not rhs.is_infinite and rhs.value > 0:
        ratio = value / rhs.value
    return ProjectionEnergyEstimate(
        value=value,
        stderr=stderr,
        samples=samples,
        pair_count=pair_count,
        excluded_diagonal=excluded_diagonal,
        excluded_shared=excluded_shared,
        rhs_energy=rhs,
        ratio=ratio,
        mstar=result.value,
        case=case,
        dprime=dprime,
    )


def _frequency_integral(mf: float, block_sizes: Sequence[int], b: np.ndarray) -> float:
    """integral over the line of |xi|^(mf-1) * prod_i phi_{m_i}(b_i xi) dxi."""
    if all(m == 1 for m in block_sizes):
        a = float(np.sum(b * b))
        if a <= 0:
            raise RankDeficiencyError("degenerate pair coefficients")
        n = len(block_sizes)
        return 2.0 * (2.0 * math.pi) ** (n / 2.0) * _radial_constant(mf) * a ** (-mf / 2.0)

    def integrand(u: float) -> float:
        xi = u ** (1.0 / mf)
        out = 1.0
        for m, bi in zip(block_sizes, b):
            out *= float(_phi_scale_transform(m, np.array([bi * xi]))[0])
        return out

    # u = xi^mf turns the radial weight xi^(mf-1) dxi into du / mf
    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
    return 2.0 * val / mf
