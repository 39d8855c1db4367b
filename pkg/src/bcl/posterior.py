"""Exact posteriors over finite families and restricted prior mixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DegenerateEvidenceError, EmptyRestrictionError
from .models import BALL_TOL, DataSample, ModelFamily, Prior, log_likelihoods


def _shifted_logsumexp(log_terms: np.ndarray) -> tuple[float, np.ndarray]:
    """Return ``(log sum exp, exp(term - max))`` with ``-inf`` terms dropped."""
    finite = np.isfinite(log_terms)
    if not np.any(finite):
        return -math.inf, np.zeros_like(log_terms)
    top = float(np.max(log_terms[finite]))
    scaled = np.zeros_like(log_terms)
    scaled[finite] = np.exp(log_terms[finite] - top)
    return top + math.log(math.fsum(scaled)), scaled


@dataclass(frozen=True, eq=False)
class Posterior:
    weights: np.ndarray
    log_evidence: float

    def mass(self, indices) -> float:
        return math.fsum(self.weights[np.asarray(indices, dtype=np.int64)])


def posterior_from_loglik(prior: Prior, loglik: np.ndarray) -> Posterior:
    """Posterior from precomputed per-index log-likelihoods."""
    with np.errstate(divide="ignore"):
        log_terms = np.log(prior.weights) + loglik
    log_ev, scaled = _shifted_logsumexp(log_terms)
    if not math.isfinite(log_ev):
        raise DegenerateEvidenceError("every index with positive prior weight has zero likelihood")
    w = scaled / math.fsum(scaled)
    return Posterior(w, log_ev)


def compute_posterior(prior: Prior, family: ModelFamily, data: DataSample) -> Posterior:
    """Posterior weights ``nu(t) f_t(X) / sum_u nu(u) f_u(X)`` computed in log space.

    ``log_evidence`` is ``log sum_t nu(t) f_t(X)``.
    """
    return posterior_from_loglik(prior, log_likelihoods(family, data))


def posterior_ball_mass(post: Posterior, family: ModelFamily, center: int, radius: float) -> float:
    """Posterior mass of the closed Hellinger ball around ``center``."""
    inside = family.distances[center] <= radius + BALL_TOL
    return math.fsum(post.weights[inside])


@dataclass(frozen=True, eq=False)
class RestrictedMixture:
    """The prior conditioned on an index set ``B``: weights ``nu(t) / nu(B)`` on ``B``."""

    indices: np.ndarray
    weights: np.ndarray
    prior_mass: float

    @classmethod
    def from_prior(cls, prior: Prior, indices) -> RestrictedMixture:
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        mass = prior.mass(idx) if idx.size else 0.0
        if mass <= 0:
            raise EmptyRestrictionError("the restriction set has zero prior mass")
        w = prior.weights[idx] / mass
        keep = w > 0
        return cls(idx[keep], w[keep] / math.fsum(w[keep]), mass)

    @classmethod
    def ball(cls, prior: Prior, family: ModelFamily, center: int, radius: float) -> RestrictedMixture:
        return cls.from_prior(prior, family.ball(center, radius, BALL_TOL))


def log_mixture_density(mix: RestrictedMixture, family: ModelFamily, data: DataSample) -> float:
    """``log g_B(X)`` where ``g_B = sum_{t in B} (nu(t)/nu(B)) f_t``, evaluated on the whole sample."""
    ll = log_likelihoods(family, data)[mix.indices]
    return log_mixture_from_loglik(mix, ll)


def log_mixture_from_loglik(mix: RestrictedMixture, ll_on_b: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        terms = np.log(mix.weights) + ll_on_b
    return _shifted_logsumexp(terms)[0]


def sample_from_restricted_mixture(mix: RestrictedMixture, family: ModelFamily, n: int, seed: int,
                                   replication: int = 0, stream: int = 0) -> tuple[int, DataSample]:
    """Draw ``t`` from the conditional prior, then ``n`` i.i.d. points from ``f_t``.

    Returns the drawn index and the sample; both come from the single stream
    ``(seed, replication, stream)``.
    """
    gen = rng.stream(seed, replication, stream)
    pick = int(rng.draw_categorical(gen, rng.categorical_cdf(mix.weights), 1)[0])
    t = int(mix.indices[pick])
    obs = rng.draw_categorical(gen, rng.categorical_cdf(family.densities[t]), int(n))
    return t, DataSample(obs, family.sample_space_size, seed)
