"""Finite model families, priors, true distributions and seeded i.i.d. samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from . import rng
from .errors import DomainError, InjectivityError, NormalizationError
from .hellinger import NORM_TOL, ProbabilityTable, as_table, hellinger_distance, hellinger_matrix

# slack on closed-ball membership, absorbs rounding in computed distances
BALL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModelFamily:
    """An indexed family ``{f_t}`` of densities on a common finite sample space.

    Row ``t`` of ``densities`` is ``f_t``; ``parameter_points[t]`` is its
    coordinate tuple and ``center_index`` is the distinguished point ``s``.
    """

    densities: np.ndarray = field(repr=False)
    parameter_points: np.ndarray = field(repr=False)
    center_index: int = 0

    def __post_init__(self):
        dens = np.array(self.densities, dtype=float)
        if dens.ndim != 2 or dens.shape[0] == 0:
            raise NormalizationError("densities must be a nonempty 2-d array")
        for t, row in enumerate(dens):
            try:
                ProbabilityTable(row)
            except NormalizationError as exc:
                raise NormalizationError(f"density {t}: {exc}") from None
        pts = np.array(self.parameter_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] != dens.shape[0]:
            raise DomainError("one parameter point per density is required")
        if not 0 <= self.center_index < dens.shape[0]:
            raise DomainError(f"center index {self.center_index} out of range")
        dens.setflags(write=False)
        pts.setflags(write=False)
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "parameter_points", pts)
        object.__setattr__(self, "center_index", int(self.center_index))
        h = self.distances
        if dens.shape[0] > 1:
            off = h[~np.eye(dens.shape[0], dtype=bool)]
            if np.min(off) <= 0.0:
                i, j = np.argwhere((h <= 0.0) & ~np.eye(dens.shape[0], dtype=bool))[0]
                raise InjectivityError(f"indices {i} and {j} share the same density")

    @property
    def size(self) -> int:
        return int(self.densities.shape[0])

    def __len__(self):
        return self.size

    @property
    def sample_space_size(self) -> int:
        return int(self.densities.shape[1])

    @cached_property
    def distances(self) -> np.ndarray:
        """Matrix of pairwise Hellinger distances."""
        h = hellinger_matrix(self.densities)
        h.setflags(write=False)
        return h

    @cached_property
    def log_densities(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            ld = np.log(self.densities)
        ld.setflags(write=False)
        return ld

    def density(self, t: int) -> ProbabilityTable:
        return ProbabilityTable(self.densities[t])

    def distances_to(self, density) -> np.ndarray:
        """Hellinger distance from every member to an arbitrary density."""
        p = as_table(density)
        return np.array([hellinger_distance(p, row) for row in self.densities])

    def ball(self, center: int, radius: float, tol: float = BALL_TOL) -> np.ndarray:
        """Indices of the closed Hellinger ball around member ``center``."""
        return np.flatnonzero(self.distances[center] <= radius + tol)


@dataclass(frozen=True, eq=False)
class Prior:
    """Prior weights over the indices of a family."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise NormalizationError("prior weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > NORM_TOL:
            raise NormalizationError(f"prior weights sum to {math.fsum(w)!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, size: int) -> Prior:
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, index: int) -> Prior:
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w)

    def mass(self, indices) -> float:
        return math.fsum(self.weights[np.asarray(indices, dtype=np.int64)])


@dataclass(frozen=True, eq=False)
class DataSample:
    """An i.i.d. sample stored as sample-space indices."""

    observations: np.ndarray
    support_size: int
    seed: int | None = None

    def __post_init__(self):
        obs = np.array(self.observations, dtype=np.int64).ravel()
        if obs.size and (obs.min() < 0 or obs.max() >= self.support_size):
            raise DomainError("observation outside the sample space")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return int(self.observations.size)

    def __len__(self):
        return self.n

    @cached_property
    def counts(self) -> np.ndarray:
        return np.bincount(self.observations, minlength=self.support_size)

    def concat(self, other: DataSample) -> DataSample:
        return DataSample(np.concatenate([self.observations, other.observations]), self.support_size)


@dataclass(frozen=True, eq=False)
class TrueDistribution:
    """The data-generating law, possibly outside the family."""

    density: ProbabilityTable
    kappa_over_sqrt2n: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "density", as_table(self.density))

    def kappa(self, n: int) -> float | None:
        if self.kappa_over_sqrt2n is None:
            return None
        return self.kappa_over_sqrt2n * math.sqrt(2 * n)

    @classmethod
    def relative_to(cls, family: ModelFamily, density) -> TrueDistribution:
        """Record the distance from ``density`` to the family center."""
        d = hellinger_distance(family.density(family.center_index), density)
        return cls(as_table(density), d)


# -- family construction -----------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Description of a gridded family.

    ``kind`` is one of

    ``bernoulli``
        ``f_theta = [1 - theta, theta]`` for each ``theta`` in ``grid``.
    ``perturbation``
        ``f_t = base + t * direction`` on ``len(base)`` points.
    ``location``
        discretized Gaussian bump of width ``scale`` at each location in
        ``grid`` on ``{0, ..., sample_space_size - 1}``.
    ``explicit``
        rows of ``densities`` given directly; ``grid`` defaults to the index.
    ``shells``
        :func:`shell_family` with ``grid`` as the list of radii.
    """

    kind: str
    grid: Sequence[Any] = ()
    center: int = 0
    sample_space_size: int | None = None
    base: Sequence[float] | None = None
    direction: Sequence[float] | None = None
    scale: float = 1.0
    densities: Sequence[Sequence[float]] | None = None
    copies: int = 2

    @classmethod
    def from_mapping(cls, m: Mapping[str, Any]) -> FamilySpec:
        m = dict(m)
        grid = m.pop("grid", ())
        if isinstance(grid, Mapping):
            grid = np.linspace(grid["start"], grid["stop"], int(grid["num"])).tolist()
        return cls(grid=tuple(grid), **m)


def _grid_array(grid) -> np.ndarray:
    g = np.array(grid, dtype=float)
    return g[:, None] if g.ndim == 1 else g


def build_grid_family(spec: FamilySpec | Mapping[str, Any]) -> ModelFamily:
    """Build a :class:`ModelFamily` from a :class:`FamilySpec` or an equivalent mapping."""
    if not isinstance(spec, FamilySpec):
        spec = FamilySpec.from_mapping(spec)
    kind = spec.kind
    if kind == "bernoulli":
        theta = np.array(spec.grid, dtype=float).ravel()
        if np.any((theta < 0) | (theta > 1)):
            raise NormalizationError("Bernoulli parameters must lie in [0, 1]")
        dens = np.column_stack([1.0 - theta, theta])
        pts = theta[:, None]
    elif kind == "perturbation":
        base = np.array(spec.base, dtype=float)
        direction = np.array(spec.direction, dtype=float)
        if base.shape != direction.shape:
            raise DomainError("base and direction must have the same length")
        if abs(direction.sum()) > NORM_TOL:
            raise NormalizationError("perturbation direction must sum to zero")
        t = np.array(spec.grid, dtype=float).ravel()
        dens = base[None, :] + t[:, None] * direction[None, :]
        # exact zeros stay zero; tiny negatives from rounding are clipped
        dens = np.where(np.abs(dens) < 1e-15, 0.0, dens)
        pts = t[:, None]
    elif kind == "location":
        k = spec.sample_space_size
        if not k or k < 2:
            raise DomainError("location families need sample_space_size >= 2")
        loc = np.array(spec.grid, dtype=float).ravel()
        x = np.arange(k, dtype=float)
        logits = -0.5 * ((x[None, :] - loc[:, None]) / spec.scale) ** 2
        dens = np.exp(logits - logits.max(axis=1, keepdims=True))
        dens /= dens.sum(axis=1, keepdims=True)
        pts = loc[:, None]
    elif kind == "explicit":
        dens = np.array(spec.densities, dtype=float)
        pts = _grid_array(spec.grid) if len(spec.grid) else np.arange(len(dens), dtype=float)[:, None]
    elif kind == "shells":
        return shell_family(spec.grid, spec.copies)
    else:
        raise DomainError(f"unknown family kind {kind!r}")
    return ModelFamily(dens, pts, spec.center)


# -- sampling and likelihood --------------------------------------------------


def sample_iid(density, n: int, seed: int, replication: int = 0, stream: int = 0) -> DataSample:
    """Draw ``n`` i.i.d. points from ``density`` on the stream ``(seed, replication, stream)``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    p = as_table(density)
    gen = rng.stream(seed, replication, stream)
    obs = rng.draw_categorical(gen, rng.categorical_cdf(p.weights), int(n))
    return DataSample(obs, p.support_size, seed)


def log_likelihoods(family: ModelFamily, data: DataSample) -> np.ndarray:
    """``sum_i log f_t(X_i)`` for every index ``t``; ``-inf`` where some observation has zero density."""
    counts = data.counts
    seen = counts > 0
    ld = family.log_densities[:, seen]
    return ld @ counts[seen].astype(float)


def log_likelihood(family: ModelFamily, index: int, data: DataSample) -> float:
    return float(log_likelihoods(family, data)[index])


class EnvelopeFit(NamedTuple):
    a: float
    A: float
    violations: list


def fit_hellinger_euclidean_envelope(family: ModelFamily, alpha: float) -> EnvelopeFit:
    """Fit ``a ||t-u||^alpha <= h(t,u) <= A ||t-u||^alpha`` over all index pairs.

    Pairs whose parameter points coincide cannot enter the ratio; they are
    returned in ``violations`` as ``(i, j, "coincident")``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if family.size < 2:
        raise DomainError("need at least two parameter points")
    pts = family.parameter_points
    i, j = np.triu_indices(family.size, k=1)
    eu = np.linalg.norm(pts[i] - pts[j], axis=1)
    h = family.distances[i, j]
    ok = eu > 0
    violations = [(int(a), int(b), "coincident") for a, b in zip(i[~ok], j[~ok])]
    if not np.any(ok):
        raise DomainError("all parameter points coincide")
    ratio = h[ok] / eu[ok] ** alpha
    return EnvelopeFit(float(ratio.min()), float(ratio.max()), violations)


def shell_family(radii: Sequence[float], copies: int = 2) -> ModelFamily:
    """Family with ``copies`` members at each Hellinger distance in ``radii`` from a center.

    The center is ``[1/2, 1/2, 0, ..., 0]`` on ``2 + copies`` points and sits
    at index 0. A member at distance ``r`` along direction ``c`` moves mass
    ``lam = 1 - (1 - r^2)^2`` onto the extra point ``2 + c``, which gives
    affinity ``sqrt(1 - lam) = 1 - r^2`` with the center.
    """
    k = 2 + copies
    center = np.zeros(k)
    center[:2] = 0.5
    rows = [center]
    for r in radii:
        if not 0 < r <= 1:
            raise DomainError(f"radius {r!r} outside (0, 1]")
        lam = 1.0 - (1.0 - r * r) ** 2
        for c in range(copies):
            e = np.zeros(k)
            e[2 + c] = 1.0
            rows.append((1.0 - lam) * center + lam * e)
    return ModelFamily(np.array(rows), np.arange(len(rows), dtype=float), 0)
