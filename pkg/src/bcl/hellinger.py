"""Hellinger distance, affinity and Kullback-Leibler kernels on finite spaces.

All densities are taken with respect to the counting measure, so every
integral is an exact finite sum. The squared Hellinger distance is computed
from the squared differences of square roots, and the affinity is derived
from it as ``rho = 1 - h2``; both numbers therefore come from one arithmetic
path and the identity holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BoundViolation, DimensionError, DomainError, NormalizationError, PreconditionError

TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityTable:
    """A probability vector over ``{0, ..., support_size - 1}``."""

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise NormalizationError("empty probability table")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise NormalizationError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def support_size(self) -> int:
        return int(self.weights.size)

    def __len__(self):
        return self.support_size

    def __repr__(self):
        return f"ProbabilityTable({np.array2string(self.weights, precision=6)})"


def as_table(p) -> ProbabilityTable:
    return p if isinstance(p, ProbabilityTable) else ProbabilityTable(p)


def _pair(p, q):
    p, q = as_table(p), as_table(q)
    if p.support_size != q.support_size:
        raise DimensionError(f"support sizes differ: {p.support_size} != {q.support_size}")
    return p.weights, q.weights


class AffinityResult(NamedTuple):
    rho: float
    h2: float
    h: float


def affinity(p, q) -> AffinityResult:
    """Affinity, squared distance and distance in one pass."""
    pw, qw = _pair(p, q)
    h2 = 0.5 * math.fsum((np.sqrt(pw) - np.sqrt(qw)) ** 2)
    h2 = min(max(h2, 0.0), 1.0)
    return AffinityResult(1.0 - h2, h2, math.sqrt(h2))


def hellinger_affinity(p, q) -> float:
    """Hellinger affinity ``sum_i sqrt(p_i q_i)``, in ``[0, 1]``.

    >>> hellinger_affinity([0.1, 0.9], [0.9, 0.1])  # doctest: +ELLIPSIS
    0.6...
    """
    return affinity(p, q).rho


def hellinger_distance(p, q) -> float:
    """Hellinger distance, normalized so that disjoint supports give 1."""
    return affinity(p, q).h


def hellinger_matrix(densities: np.ndarray) -> np.ndarray:
    """Pairwise Hellinger distances between the rows of ``densities``."""
    roots = np.sqrt(np.asarray(densities, dtype=float))
    diff = roots[:, None, :] - roots[None, :, :]
    h2 = np.clip(0.5 * np.einsum("ijk,ijk->ij", diff, diff), 0.0, 1.0)
    h = np.sqrt(h2)
    np.fill_diagonal(h, 0.0)
    return h


class ProductBound(NamedTuple):
    value: float
    bound: float


def _check_unit(name: str, v: float):
    if not (0.0 <= v <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


def _check_n(n: int):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")


def product_affinity(rho: float, n: int) -> ProductBound:
    """Affinity of the n-fold products, ``rho**n``, with the bound ``exp(-n(1 - rho))``."""
    _check_unit("rho", rho)
    _check_n(n)
    value = rho**n
    bound = math.exp(-n * (1.0 - rho))
    if value > bound + TOL:
        raise BoundViolation(f"rho**n={value!r} exceeds exp(-n h2)={bound!r}")
    return ProductBound(value, bound)


def product_hellinger_sq(h2: float, n: int) -> ProductBound:
    """Squared distance of the n-fold products, ``1 - (1 - h2)**n``, with the bound ``min(1, n h2)``."""
    _check_unit("h2", h2)
    _check_n(n)
    # -expm1(n log1p(-h2)) keeps precision for tiny h2
    value = 1.0 if h2 == 1.0 else -math.expm1(n * math.log1p(-h2))
    bound = min(1.0, n * h2)
    if value > bound + TOL:
        raise BoundViolation(f"1-(1-h2)**n={value!r} exceeds min(1, n h2)={bound!r}")
    return ProductBound(value, bound)


_SERIES_COEF = np.array([1.0 / (k * (k - 1)) for k in range(2, 24)])


def _phi(z: np.ndarray) -> np.ndarray:
    """``z log z - z + 1`` without cancellation near ``z = 1``."""
    z = np.asarray(z, dtype=float)
    u = z - 1.0
    out = np.empty_like(z)
    near = np.abs(u) < 1e-2
    un = u[near]
    powers = (-un[:, None]) ** np.arange(2, 24)[None, :]
    out[near] = powers @ _SERIES_COEF
    zf = z[~near]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = np.where(zf > 0, zf * np.log(np.where(zf > 0, zf, 1.0)) - zf + 1.0, 1.0)
    return out


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence ``K(p, q)`` in nats.

    Terms with ``p_i = 0`` contribute nothing; a term with ``p_i > 0`` and
    ``q_i = 0`` makes the divergence infinite.
    """
    pw, qw = _pair(p, q)
    pos = pw > 0
    if np.any(qw[pos] == 0):
        return math.inf
    # sum_i q_i phi(p_i/q_i): every term is nonnegative
    qpos = qw > 0
    pq, qq = pw[qpos], qw[qpos]
    with np.errstate(over="ignore"):
        z = pq / qq
    big = ~(z < 1e100)
    terms = np.empty_like(pq)
    terms[~big] = qq[~big] * _phi(z[~big])
    # q phi(p/q) = p log(p/q) - p + q, taken in logs where p/q overflows
    terms[big] = pq[big] * (np.log(pq[big]) - np.log(qq[big])) - pq[big] + qq[big]
    k = math.fsum(terms)
    return max(k, 0.0)


def max_likelihood_ratio(p, q) -> float:
    """``max_i p_i / q_i`` over the support of ``p``; infinite when ``p`` is not dominated by ``q``."""
    pw, qw = _pair(p, q)
    pos = pw > 0
    if np.any(qw[pos] == 0):
        return math.inf
    with np.errstate(over="ignore"):
        return float(np.max(pw[pos] / qw[pos]))


def _kl_ratio_series(u: float) -> float:
    # z = 1 + u: numerator / u^2 = sum_k (-u)^(k-2) / (k(k-1)), denominator / u^2 = 1 / (2 (sqrt(z) + 1)^2)
    num = float(((-u) ** np.arange(0, 22)) @ _SERIES_COEF)
    den = 0.5 / (math.sqrt(1.0 + u) + 1.0) ** 2
    return num / den


def kl_ratio_bound(M: float, check: bool = True) -> float:
    """The increasing function ``(z(log z - 1) + 1) / ((z + 1)/2 - sqrt z)`` at ``z = M``.

    The removable singularity at ``M = 1`` is filled by its limit 4. For
    ``M >= 1`` the result is checked against ``4 + 2 log M``.
    """
    M = float(M)
    if not M >= 0.0:
        raise DomainError(f"M must be nonnegative, got {M!r}")
    if math.isinf(M):
        return math.inf
    if M == 0.0:
        val = 2.0
    else:
        u = M - 1.0
        if abs(u) < 1e-2:
            val = _kl_ratio_series(u)
        elif M > 1e6:
            # numerator and denominator divided by M, avoiding overflow of M log M
            val = (math.log(M) - 1.0 + 1.0 / M) / (0.5 * (1.0 - 1.0 / math.sqrt(M)) ** 2)
        else:
            num = M * math.log(M) - M + 1.0
            den = 0.5 * (math.sqrt(M) - 1.0) ** 2
            val = num / den
    if check and M >= 1.0 and val > 4.0 + 2.0 * math.log(M) + TOL:
        raise BoundViolation(f"K({M!r})={val!r} exceeds 4 + 2 log M")
    return val


@dataclass(frozen=True)
class SandwichReport:
    """Comparison of ``K``, ``-2 log rho`` and ``2 h2`` for one pair, plus the ratio bracket."""

    kl: float
    neg2_log_rho: float
    two_h2: float
    h2: float
    M: float
    kl_ratio_cap: float
    ratio: float
    chain_ok: bool
    ratio_ok: bool | None

    @property
    def ok(self) -> bool:
        return self.chain_ok and self.ratio_ok is not False


def check_kl_hellinger_sandwich(p, q) -> SandwichReport:
    """Check ``K >= -2 log rho >= 2 h2`` and, when ``M`` is finite, ``2 <= K/h2 <= cap(M)``."""
    res = affinity(p, q)
    kl = kl_divergence(p, q)
    neg2 = math.inf if res.rho == 0.0 else -2.0 * math.log1p(-res.h2)
    two_h2 = 2.0 * res.h2
    chain_ok = (kl >= neg2 - TOL or math.isinf(kl)) and neg2 >= two_h2 - TOL
    M = max_likelihood_ratio(p, q)
    if math.isinf(M):
        return SandwichReport(kl, neg2, two_h2, res.h2, M, math.inf, math.nan, chain_ok, None)
    cap = kl_ratio_bound(M)
    if res.h2 == 0.0:
        # p == q: K == 0 and the ratio is 0/0
        return SandwichReport(kl, neg2, two_h2, res.h2, M, cap, math.nan, chain_ok, kl <= TOL)
    ratio = kl / res.h2
    # relative slack: K and h2 can both be ~1e-12
    slack = TOL * max(1.0, ratio)
    ratio_ok = (2.0 - slack <= ratio <= cap + slack) and (M < 1.0 or cap <= 4.0 + 2.0 * math.log(M) + TOL)
    return SandwichReport(kl, neg2, two_h2, res.h2, M, cap, ratio, chain_ok, ratio_ok)


def mixture_affinity(p, components: Sequence, weights: Sequence[float], r: float) -> float:
    """Affinity between ``p`` and the mixture ``sum_i weights_i components_i``.

    Every component must lie within Hellinger distance ``r`` of ``p``; the
    returned affinity is checked against ``1 - r**2``.
    """
    pt = as_table(p)
    comps = [as_table(c) for c in components]
    w = np.asarray(weights, dtype=float)
    if len(comps) == 0 or w.shape != (len(comps),):
        raise DimensionError("need one weight per component")
    if np.any(w < 0) or abs(math.fsum(w) - 1.0) > NORM_TOL:
        raise NormalizationError("component weights must be nonnegative and sum to 1")
    if r < 0:
        raise DomainError("r must be nonnegative")
    for i, c in enumerate(comps):
        d = hellinger_distance(pt, c)
        if d > r + TOL:
            raise PreconditionError(f"component {i} lies at distance {d!r} > r={r!r}")
    mix = np.sum(w[:, None] * np.stack([c.weights for c in comps]), axis=0)
    mix = mix / math.fsum(mix)
    rho = hellinger_affinity(pt, mix)
    if rho < 1.0 - r * r - TOL:
        raise BoundViolation(f"mixture affinity {rho!r} below 1 - r^2 = {1 - r * r!r}")
    return rho
