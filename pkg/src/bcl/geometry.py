"""Metric-entropy diagnostics: separated sets, coverings, the dimension
function and the prior-mass profile around the center.

Functions that only need a metric accept either a :class:`ModelFamily`
(Hellinger distances) or a square distance matrix, so the same code runs on
Euclidean surrogates.
"""

from __future__ import annotations

import math
from functools import reduce
from operator import or_
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, EmptyRestrictionError
from .models import BALL_TOL, ModelFamily, Prior

EXACT_COVER_LIMIT = 20


def _dist(space) -> np.ndarray:
    if isinstance(space, ModelFamily):
        return space.distances
    d = np.asarray(space, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DomainError("distance matrix must be square")
    return d


def _subset(space, subset) -> np.ndarray:
    n = _dist(space).shape[0]
    idx = np.arange(n) if subset is None else np.unique(np.asarray(subset, dtype=np.int64))
    if idx.size == 0:
        raise DomainError("subset is empty")
    if idx.min() < 0 or idx.max() >= n:
        raise DomainError("subset index out of range")
    return idx


@dataclass(frozen=True)
class SeparatedSet:
    indices: tuple
    separation: float

    def __len__(self):
        return len(self.indices)


def greedy_maximal_separated(space, subset, x: float) -> SeparatedSet:
    """Maximal ``x``-separated subset built by scanning ``subset`` in ascending order.

    A point joins when its distance to every member already chosen exceeds
    ``x``. The result is re-checked for separation and maximality.
    """
    if not x > 0:
        raise DomainError(f"separation must be positive, got {x!r}")
    d = _dist(space)
    idx = _subset(space, subset)
    chosen: list[int] = []
    for i in idx:
        if all(d[i, c] > x for c in chosen):
            chosen.append(int(i))
    sub = d[np.ix_(chosen, chosen)]
    assert np.all(sub[~np.eye(len(chosen), dtype=bool)] > x)
    assert np.all(np.min(d[np.ix_(idx, chosen)], axis=1) <= x)
    return SeparatedSet(tuple(chosen), float(x))


def max_separated_size(space, subset, x: float) -> int:
    """Exact size of the largest ``x``-separated subset (exponential; small inputs only)."""
    d = _dist(space)
    idx = _subset(space, subset)
    m = idx.size
    conflict = [0] * m
    for a in range(m):
        for b in range(m):
            if a != b and d[idx[a], idx[b]] <= x:
                conflict[a] |= 1 << b
    best = 0

    def rec(cand: int, size: int):
        nonlocal best
        if cand == 0:
            best = max(best, size)
            return
        if size + bin(cand).count("1") <= best:
            return
        v = (cand & -cand).bit_length() - 1
        # take v, or drop it
        rec(cand & ~conflict[v] & ~(1 << v), size + 1)
        rec(cand & ~(1 << v), size)

    rec((1 << m) - 1, 0)
    return best


# -- coverings ----------------------------------------------------------------


def _cover_masks(center_dist: np.ndarray, radius: float) -> list[int]:
    masks = []
    for row in center_dist <= radius + BALL_TOL:
        m = 0
        for j in np.flatnonzero(row):
            m |= 1 << int(j)
        masks.append(m)
    return masks


def greedy_cover_size(center_dist: np.ndarray, radius: float) -> int:
    """Greedy set cover of the columns by closed balls around the rows.

    ``center_dist[c, p]`` is the distance from candidate center ``c`` to
    point ``p``. Each step takes the ball covering the most uncovered points,
    lowest center index among ties.
    """
    masks = _cover_masks(np.atleast_2d(center_dist), radius)
    full = (1 << center_dist.shape[1]) - 1
    if reduce(or_, masks, 0) != full:
        raise DomainError("candidate centers cannot cover every point")
    uncovered, count = full, 0
    while uncovered:
        gains = [bin(m & uncovered).count("1") for m in masks]
        uncovered &= ~masks[int(np.argmax(gains))]
        count += 1
    return count


def exact_cover_size(center_dist: np.ndarray, radius: float, upper: int | None = None) -> int:
    """Minimal number of closed balls (centers among the rows) covering every column.

    Branch and bound: branch on the centers covering the lowest uncovered
    point, keep only undominated choices, prune by a counting lower bound.
    """
    center_dist = np.atleast_2d(center_dist)
    masks = _cover_masks(center_dist, radius)
    npts = center_dist.shape[1]
    full = (1 << npts) - 1
    covering = [[m for m in masks if m >> p & 1] for p in range(npts)]
    if any(not c for c in covering):
        raise DomainError("candidate centers cannot cover every point")
    best = upper if upper is not None else greedy_cover_size(center_dist, radius)

    def rec(uncovered: int, depth: int):
        nonlocal best
        if uncovered == 0:
            best = min(best, depth)
            return
        reach = max(bin(m & uncovered).count("1") for m in masks)
        if depth + math.ceil(bin(uncovered).count("1") / reach) >= best:
            return
        p = (uncovered & -uncovered).bit_length() - 1
        opts = sorted({m & uncovered for m in covering[p]}, key=lambda o: -bin(o).count("1"))
        kept: list[int] = []
        for o in opts:
            if not any(o | k == k for k in kept):
                kept.append(o)
        for o in kept:
            rec(uncovered & ~o, depth + 1)

    rec(full, 0)
    return best


@dataclass(frozen=True)
class CoveringReport:
    """Separated-set size against cover sizes at radii ``x`` and ``x/2``.

    ``cover_x`` is the best cover found at radius ``x`` (greedy, or the
    separated set itself when smaller), so ``cover_x <= separated_size``
    always. The exact minimal numbers are filled when exhaustion ran.
    """

    x: float
    separated_size: int
    cover_x: int
    cover_half: int
    exact_x: int | None
    exact_half: int | None

    @property
    def lower_ok(self) -> bool:
        n = self.exact_x if self.exact_x is not None else self.cover_x
        return n <= self.separated_size

    @property
    def upper_ok(self) -> bool | None:
        if self.exact_half is None:
            return None
        return self.separated_size <= self.exact_half

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok is not False


def covering_sandwich_check(space, subset, x: float, centers: np.ndarray | None = None,
                            exact: bool | None = None) -> CoveringReport:
    """Compare a greedy maximal ``x``-separated set with coverings of ``subset``.

    ``centers`` holds distances from candidate ball centers of the ambient
    space to every point of ``space``; by default the centers are the points
    of ``space`` themselves. Exact minimal covers are computed when ``exact``
    is true, or by default when the subset has at most 20 points.
    """
    idx = _subset(space, subset)
    sep = greedy_maximal_separated(space, idx, x)
    cd = (_dist(space) if centers is None else np.atleast_2d(np.asarray(centers, dtype=float)))[:, idx]
    cover_x = min(greedy_cover_size(cd, x), len(sep))
    cover_half = greedy_cover_size(cd, x / 2)
    if exact is None:
        exact = idx.size <= EXACT_COVER_LIMIT
    ex = exh = None
    if exact:
        ex = exact_cover_size(cd, x, upper=cover_x)
        exh = exact_cover_size(cd, x / 2, upper=cover_half)
    return CoveringReport(float(x), len(sep), cover_x, cover_half, ex, exh)


# -- dimension function (local entropy) ---------------------------------------


@dataclass(frozen=True)
class DimensionTable:
    """Tabulated ``D(x)`` on a decreasing grid in ``(0, 1/4]``."""

    x_grid: np.ndarray
    D_values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        D = np.asarray(self.D_values, dtype=float)
        if x.shape != D.shape or x.ndim != 1 or x.size == 0:
            raise DomainError("x_grid and D_values must be 1-d of equal length")
        if np.any(np.diff(x) >= 0):
            raise DomainError("x_grid must be strictly decreasing")
        if np.any(D < 1) or np.any(np.diff(D) < 0):
            raise DomainError("D must be >= 1 and nonincreasing in x")
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "D_values", D)

    def at(self, x: float) -> float:
        """``D`` at ``x``, or at the largest tabulated point below ``x`` (an upper bound, D being nonincreasing)."""
        ok = self.x_grid <= x * (1 + 1e-12)
        if not np.any(ok):
            raise DomainError(f"x={x!r} below the tabulated range")
        return float(self.D_values[np.argmax(ok)])

    @property
    def sup(self) -> float:
        return float(self.D_values.max())

    def rows(self):
        return list(zip(self.x_grid.tolist(), self.D_values.tolist()))


def dyadic_grid(k_max: int, k_min: int = 2) -> np.ndarray:
    """``2^-k`` for ``k = k_min, ..., k_max``."""
    return 2.0 ** -np.arange(k_min, k_max + 1, dtype=float)


def estimate_dimension_function(space, x_grid: Sequence[float]) -> DimensionTable:
    """Fit ``D`` so that separated sets in radius-``4x`` balls have at most ``exp D(x)`` points.

    For each ``x`` the largest greedy ``x``-separated subset of a ball
    ``B(c, 4x)`` over all centers ``c`` is measured; ``D`` is its log,
    clamped below at 1 and made nonincreasing in ``x``.
    """
    x = np.sort(np.asarray(x_grid, dtype=float))[::-1]
    if x.size == 0 or x[-1] <= 0 or x[0] > 0.25 * (1 + 1e-12):
        raise DomainError("x_grid must lie in (0, 1/4]")
    d = _dist(space)
    raw = []
    for xi in x:
        best = 1
        for c in range(d.shape[0]):
            ball = np.flatnonzero(d[c] <= 4 * xi + BALL_TOL)
            best = max(best, len(greedy_maximal_separated(d, ball, xi)))
        raw.append(math.log(best))
    D = np.maximum.accumulate(np.maximum(np.array(raw), 1.0))
    return DimensionTable(x, D)


class GlobalCoverBound(NamedTuple):
    bound: float
    recursion_ok: bool | None
    cover_sizes: tuple


def global_covering_bound(D: DimensionTable, j: int, space=None) -> GlobalCoverBound:
    """``exp(j D(4^-j))``, a bound on the number of ``4^-j`` balls needed to cover the model.

    With ``space`` given, greedy covers at radii ``4^-k`` (``k = 0..j``) are
    also checked against the one-step recursion
    ``N(4^-k) <= N(4^-(k-1)) exp(D(4^-k))``.
    """
    if int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j!r}")
    bound = math.exp(j * D.at(4.0**-j))
    if space is None:
        return GlobalCoverBound(bound, None, ())
    d = _dist(space)
    sizes = tuple(greedy_cover_size(d, 4.0**-k) for k in range(j + 1))
    ok = all(sizes[k] <= sizes[k - 1] * math.exp(D.at(4.0**-k)) * (1 + 1e-12) for k in range(1, j + 1))
    return GlobalCoverBound(bound, ok, sizes)


# -- prior mass around the center ---------------------------------------------


def ball_mass(prior: Prior, family, center: int, radius: float) -> float:
    """Prior mass of the closed ball of the given radius around ``center``."""
    d = _dist(family)
    if not 0 <= center < d.shape[0]:
        raise DomainError(f"center {center} out of range")
    inside = d[center] <= radius + BALL_TOL
    return math.fsum(prior.weights[inside])


@dataclass(frozen=True)
class PriorMassProfile:
    """Masses ``m_j`` of the dyadic balls ``B(s, 2^-j)`` and the fitted ``beta``."""

    gamma: float
    beta_values: dict
    ball_masses: np.ndarray

    @property
    def j_max(self) -> int:
        return len(self.ball_masses) - 1

    def beta(self, j: int) -> float:
        if j not in self.beta_values:
            raise DomainError(f"beta({j}) is not tabulated (defined for 3 <= j <= {self.j_max})")
        return self.beta_values[j]

    @property
    def beta_bar(self) -> float:
        return max(self.beta_values.values())

    def rows(self):
        return [(j, float(self.ball_masses[j]), self.beta_values.get(j)) for j in range(self.j_max + 1)]


def estimate_prior_mass_profile(prior: Prior, family, s: int, j_max: int, gamma: float) -> PriorMassProfile:
    """Fit the smallest nondecreasing ``beta >= 1`` with ``m_{j-k} <= exp(gamma^k beta(j)) m_j``.

    The inequality is required for ``3 <= k <= j <= j_max``.
    """
    if not 1.0 <= gamma <= 4.0:
        raise DomainError(f"gamma must lie in [1, 4], got {gamma!r}")
    if j_max < 3:
        raise DomainError("j_max must be at least 3")
    masses = np.array([ball_mass(prior, family, s, 2.0**-j) for j in range(j_max + 1)])
    if masses[-1] <= 0:
        raise EmptyRestrictionError(f"the ball of radius 2^-{j_max} around the center has zero prior mass")
    beta = {}
    running = 1.0
    for j in range(3, j_max + 1):
        raw = max(math.log(masses[j - k] / masses[j]) / gamma**k for k in range(3, j + 1))
        running = max(running, raw)
        beta[j] = running
    return PriorMassProfile(float(gamma), beta, masses)


def check_prior_profile(prior: Prior, family, s: int, profile: PriorMassProfile) -> list:
    """Independent re-scan of the prior-mass inequality; returns the violating ``(j, k)``."""
    d = _dist(family)
    bad = []
    for j in range(3, profile.j_max + 1):
        mj = math.fsum(prior.weights[d[s] <= 2.0**-j + BALL_TOL])
        for k in range(3, j + 1):
            mjk = math.fsum(prior.weights[d[s] <= 2.0 ** (k - j) + BALL_TOL])
            if mjk > math.exp(profile.gamma**k * profile.beta(j)) * mj * (1 + 1e-12):
                bad.append((j, k))
    return bad


def check_dimension_table(space, table: DimensionTable, exact_limit: int = 24) -> list:
    """Independent re-scan of the local-entropy bound; returns violating ``(x, center, size)``.

    Balls with at most ``exact_limit`` points are searched exhaustively for the
    largest separated subset; larger balls use the covering-number bound
    ``|N| <= N(x/2)`` with a greedy cover, so entries there are possible
    rather than certain violations.
    """
    d = _dist(space)
    bad = []
    for x, Dx in table.rows():
        for c in range(d.shape[0]):
            ball = np.flatnonzero(d[c] <= 4 * x + BALL_TOL)
            if ball.size <= exact_limit:
                size = max_separated_size(d, ball, x)
            else:
                size = greedy_cover_size(d[np.ix_(ball, ball)], x / 2)
            if size > math.exp(Dx) * (1 + 1e-12):
                bad.append((x, c, size))
    return bad
