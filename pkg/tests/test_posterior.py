import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcl.errors import DegenerateEvidenceError, EmptyRestrictionError
from bcl.models import DataSample, Prior, build_grid_family, log_likelihoods, sample_iid
from bcl.posterior import (RestrictedMixture, compute_posterior, log_mixture_density, posterior_ball_mass,
                           posterior_from_loglik, sample_from_restricted_mixture)

FAM = build_grid_family({"kind": "bernoulli", "grid": [0.1, 0.3, 0.5, 0.7, 0.9], "center": 2})


def naive_posterior(prior, family, data):
    lik = np.prod(family.densities[:, data.observations], axis=1)
    w = prior.weights * lik
    return w / w.sum(), math.log(w.sum())


class TestPosterior:
    @settings(max_examples=100)
    @given(st.lists(st.integers(0, 1), min_size=0, max_size=30),
           st.lists(st.floats(0.01, 1), min_size=5, max_size=5))
    def test_matches_naive(self, obs, raw):
        prior = Prior(np.array(raw) / math.fsum(raw))
        data = DataSample(obs, 2)
        post = compute_posterior(prior, FAM, data)
        w, ev = naive_posterior(prior, FAM, data)
        assert np.allclose(post.weights, w, rtol=1e-10, atol=1e-300)
        assert post.log_evidence == pytest.approx(ev, rel=1e-12, abs=1e-12)
        assert math.fsum(post.weights) == pytest.approx(1.0, abs=1e-14)

    def test_large_n_no_underflow(self):
        data = sample_iid(FAM.densities[3], 200_000, seed=4)
        post = compute_posterior(Prior.uniform(5), FAM, data)
        assert post.log_evidence < -1e5
        assert post.weights[3] == pytest.approx(1.0)
        assert np.all(np.isfinite(post.weights))

    def test_order_of_observations_is_irrelevant(self):
        a = DataSample([0, 1, 1, 1, 0], 2)
        b = DataSample([1, 1, 0, 0, 1], 2)
        assert np.array_equal(compute_posterior(Prior.uniform(5), FAM, a).weights,
                              compute_posterior(Prior.uniform(5), FAM, b).weights)

    def test_prior_zero_stays_zero(self):
        prior = Prior([0.0, 0.25, 0.25, 0.25, 0.25])
        post = compute_posterior(prior, FAM, DataSample([1, 1, 1], 2))
        assert post.weights[0] == 0.0

    def test_degenerate_evidence(self):
        fam = build_grid_family({"kind": "bernoulli", "grid": [0.0, 0.5]})
        with pytest.raises(DegenerateEvidenceError):
            compute_posterior(Prior.point_mass(2, 0), fam, DataSample([1], 2))
        with pytest.raises(DegenerateEvidenceError):
            posterior_from_loglik(Prior.uniform(2), np.array([-np.inf, -np.inf]))

    def test_ball_mass(self):
        post = compute_posterior(Prior.uniform(5), FAM, DataSample([], 2))
        r = FAM.distances[2, 1]
        assert posterior_ball_mass(post, FAM, 2, r) == pytest.approx(0.6)


class TestRestrictedMixture:
    def test_weights(self):
        prior = Prior([0.1, 0.2, 0.3, 0.4, 0.0])
        mix = RestrictedMixture.from_prior(prior, [1, 2, 4])
        assert mix.indices.tolist() == [1, 2]
        assert mix.weights == pytest.approx([0.4, 0.6])
        assert mix.prior_mass == pytest.approx(0.5)

    def test_empty(self):
        prior = Prior([0.5, 0.5, 0.0, 0.0, 0.0])
        with pytest.raises(EmptyRestrictionError):
            RestrictedMixture.from_prior(prior, [3, 4])
        with pytest.raises(EmptyRestrictionError):
            RestrictedMixture.from_prior(prior, [])

    def test_log_density(self):
        prior = Prior.uniform(5)
        mix = RestrictedMixture.ball(prior, FAM, 0, FAM.distances[0, 1])
        data = DataSample([0, 0, 1], 2)
        direct = math.log(0.5 * 0.9**2 * 0.1 + 0.5 * 0.7**2 * 0.3)
        assert log_mixture_density(mix, FAM, data) == pytest.approx(direct, rel=1e-14)

    def test_sampling_reproducible_and_in_ball(self):
        prior = Prior.uniform(5)
        mix = RestrictedMixture.ball(prior, FAM, 2, FAM.distances[2, 1])
        draws = [sample_from_restricted_mixture(mix, FAM, 10, seed=9, replication=r)[0] for r in range(300)]
        assert set(draws) == {1, 2, 3}
        t, d = sample_from_restricted_mixture(mix, FAM, 10, seed=9, replication=5)
        t2, d2 = sample_from_restricted_mixture(mix, FAM, 10, seed=9, replication=5)
        assert t == t2 and np.array_equal(d.observations, d2.observations)
