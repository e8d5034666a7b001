"""Per-block conformal parameters: scalings t_i and rotations O_i in SO(m_i).

Floating point throughout; the statements this module supports are almost-
everywhere or statistical, so exactness buys nothing. Randomness comes from
counter-based Philox streams keyed by (seed, index), making every sample a
pure function of those two integers regardless of execution order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import MalformedInputError
from .exactlin import BlockStructure, RationalMatrix

ORTHO_TOL = 1e-12


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    """Independent deterministic stream for a given sample/trial index."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def haar_rotations(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of Haar-distributed SO(m) matrices, shape (count, m, m).

    Gaussian matrices -> QR with the R diagonal forced positive gives Haar on
    the full orthogonal group; a column flip moves the determinant -1 half
    onto SO(m).
    """
    if m < 1:
        raise MalformedInputError(f"rotation dimension must be positive: {m}")
    if m == 1:
        return np.ones((count, 1, 1))
    g = rng.standard_normal((count, m, m))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1).copy()
    sign = np.where(diag >= 0, 1.0, -1.0)
    q = q * sign[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] *= -1.0
    return q


def haar_rotation(m: int, rng: np.random.Generator) -> np.ndarray:
    return haar_rotations(m, 1, rng)[0]


def parse_t_law(t_law: str):
    """"chi" or "uniform:a,b" -> (kind, params)."""
    if t_law == "chi":
        return ("chi", None)
    if t_law.startswith("uniform:"):
        try:
            a, b = (float(v) for v in t_law.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise MalformedInputError(f"bad t-law interval: {t_law!r}") from exc
        if not a < b:
            raise MalformedInputError(f"t-law interval must satisfy a < b: {t_law!r}")
        return ("uniform", (a, b))
    raise MalformedInputError(f"unknown t-law: {t_law!r}")


def sample_scales(m: int, count: int, rng: np.random.Generator, t_law: str = "chi") -> np.ndarray:
    """Per-block scaling factors.

    "chi": density proportional to |t|^(m-1) exp(-t^2/2) on the line, i.e. a
    chi(m)-distributed magnitude with a random sign; this is the weight the
    averaged kernel estimates integrate against. "uniform:a,b" supports the
    almost-every-parameter experiments away from the degenerate t = 0.
    """
    kind, params = parse_t_law(t_law)
    if kind == "chi":
        mags = np.sqrt(rng.chisquare(df=m, size=count))
        signs = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        return mags * signs
    a, b = params
    return rng.uniform(a, b, size=count)


@dataclass(frozen=True)
class ConformalParameter:
    """One scaling and one rotation per block."""

    scales: tuple[float, ...]
    rotations: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.scales) != len(self.rotations):
            raise MalformedInputError("scales and rotations length mismatch")
        for o in self.rotations:
            m = o.shape[0]
            if o.shape != (m, m):
                raise MalformedInputError(f"rotation block is not square: {o.shape}")
            err = np.abs(o.T @ o - np.eye(m)).max()
            if err > ORTHO_TOL:
                raise MalformedInputError(f"rotation fails orthogonality by {err:.2e}")
            if np.linalg.det(o) <= 0:
                raise MalformedInputError("rotation has nonpositive determinant")

    @classmethod
    def identity(cls, blocks: BlockStructure, scales=None) -> "ConformalParameter":
        if scales is None:
            scales = (1.0,) * blocks.n
        return cls(
            scales=tuple(float(t) for t in scales),
            rotations=tuple(np.eye(m) for m in blocks.block_sizes),
        )

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.scales, dtype=np.float64).tobytes())
        for o in self.rotations:
            h.update(np.ascontiguousarray(o, dtype=np.float64).tobytes())
        return h.hexdigest()[:16]


def sample_lambda(blocks: BlockStructure, rng: np.random.Generator, t_law: str = "chi") -> ConformalParameter:
    """Independent (t_i, O_i) draws per block; t first, then O, block by block."""
    scales = []
    rotations = []
    for m in blocks.block_sizes:
        scales.append(float(sample_scales(m, 1, rng, t_law)[0]))
        rotations.append(haar_rotation(m, rng))
    return ConformalParameter(scales=tuple(scales), rotations=tuple(rotations))


def composed_matrix(pi, blocks: BlockStructure, lam: ConformalParameter) -> np.ndarray:
    """The k-by-total matrix of x -> pi(t_1 O_1 x^1, ..., t_n O_n x^n)."""
    p = np.asarray(pi.to_float() if isinstance(pi, RationalMatrix) else pi, dtype=np.float64)
    if p.shape[1] != blocks.total_dim:
        raise MalformedInputError(
            f"matrix has {p.shape[1]} columns, blocks describe {blocks.total_dim}"
        )
    cols = []
    for i, m in enumerate(blocks.block_sizes):
        rng_cols = blocks.column_range(i)
        cols.append(lam.scales[i] * p[:, rng_cols.start : rng_cols.stop] @ lam.rotations[i])
    return np.concatenate(cols, axis=1)


def apply_pi_lambda(pi, blocks: BlockStructure, lam: ConformalParameter, x) -> np.ndarray:
    """Apply the conformally twisted projection to one point or a stack.

    ``x`` has the blocks' total dimension along its last axis.
    """
    mat = composed_matrix(pi, blocks, lam)
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != blocks.total_dim:
        raise MalformedInputError(
            f"point has dimension {arr.shape[-1]}, blocks describe {blocks.total_dim}"
        )
    return arr @ mat.T


def rho(lam: ConformalParameter, blocks: BlockStructure) -> float:
    """Density weight prod |t_i|^(m_i - 1) * exp(-sum t_i^2 / 2), with 0^0 = 1."""
    t = np.asarray(lam.scales, dtype=np.float64)
    m = np.asarray(blocks.block_sizes, dtype=np.float64)
    return float(np.prod(np.abs(t) ** (m - 1)) * np.exp(-0.5 * np.sum(t * t)))
