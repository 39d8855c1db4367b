import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bcl import rng
from bcl.errors import DomainError, InjectivityError, NormalizationError
from bcl.hellinger import hellinger_distance
from bcl.models import (DataSample, ModelFamily, Prior, TrueDistribution, build_grid_family,
                        fit_hellinger_euclidean_envelope, log_likelihoods, sample_iid, shell_family)


def bernoulli(grid, center=0):
    return build_grid_family({"kind": "bernoulli", "grid": list(grid), "center": center})


class TestFamily:
    def test_distances_are_hellinger(self):
        fam = bernoulli([0.1, 0.5, 0.9])
        assert fam.distances[0, 2] == pytest.approx(math.sqrt(0.4), abs=1e-12)
        assert np.allclose(fam.distances, fam.distances.T)
        assert not fam.distances.flags.writeable

    def test_duplicate_density_rejected(self):
        with pytest.raises(InjectivityError):
            bernoulli([0.2, 0.4, 0.2])

    def test_bad_rows(self):
        with pytest.raises(NormalizationError):
            ModelFamily([[0.5, 0.6]], [0.0])
        with pytest.raises(DomainError):
            ModelFamily([[0.5, 0.5]], [0.0], center_index=3)

    def test_closed_ball(self):
        fam = bernoulli([0.1, 0.5, 0.9], center=1)
        r = fam.distances[1, 0]
        assert list(fam.ball(1, r)) == [0, 1, 2]
        assert list(fam.ball(1, r * (1 - 1e-6))) == [1]

    def test_grid_mapping(self):
        fam = build_grid_family({"kind": "bernoulli", "grid": {"start": 0.05, "stop": 0.95, "num": 19}, "center": 9})
        assert fam.size == 19 and fam.densities[9, 1] == pytest.approx(0.5)

    def test_other_kinds(self):
        pert = build_grid_family({"kind": "perturbation", "base": [0.25] * 4, "direction": [0.1, -0.1, 0.1, -0.1],
                                  "grid": [-1, 0, 1]})
        assert pert.size == 3 and np.allclose(pert.densities.sum(axis=1), 1)
        loc = build_grid_family({"kind": "location", "grid": [2, 4, 6], "sample_space_size": 9, "scale": 1.5})
        assert loc.sample_space_size == 9
        assert loc.distances[0, 1] == pytest.approx(loc.distances[1, 2], abs=1e-6)
        ex = build_grid_family({"kind": "explicit", "densities": [[0.3, 0.7], [0.6, 0.4]]})
        assert ex.parameter_points.ravel().tolist() == [0, 1]
        with pytest.raises(DomainError):
            build_grid_family({"kind": "nope"})
        with pytest.raises(NormalizationError):
            build_grid_family({"kind": "perturbation", "base": [0.5, 0.5], "direction": [0.1, 0.1], "grid": [0]})

    def test_distances_to_external_density(self):
        fam = bernoulli([0.2, 0.8])
        d = fam.distances_to([0.5, 0.5])
        assert d[0] == pytest.approx(d[1])


class TestShellFamily:
    @given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=5, unique=True), st.integers(1, 3))
    def test_exact_radii(self, radii, copies):
        fam = shell_family(radii, copies)
        expected = np.repeat(radii, copies)
        assert np.allclose(fam.distances[0, 1:], expected, atol=1e-12)
        assert fam.center_index == 0

    def test_radius_domain(self):
        with pytest.raises(DomainError):
            shell_family([0.0])


class TestPrior:
    def test_constructors(self):
        assert Prior.uniform(4).mass([0, 1]) == 0.5
        assert Prior.point_mass(3, 2).weights.tolist() == [0, 0, 1]
        with pytest.raises(NormalizationError):
            Prior([0.5, 0.4])
        with pytest.raises(NormalizationError):
            Prior([1.2, -0.2])


class TestTruth:
    def test_kappa(self):
        fam = bernoulli([0.1, 0.5, 0.9], center=1)
        truth = TrueDistribution.relative_to(fam, [0.4, 0.6])
        d = hellinger_distance([0.5, 0.5], [0.4, 0.6])
        assert truth.kappa(50) == pytest.approx(d * 10)
        assert TrueDistribution([0.5, 0.5]).kappa(10) is None


class TestSampling:
    def test_reproducible_and_stream_separated(self):
        a = sample_iid([0.2, 0.3, 0.5], 500, seed=3)
        b = sample_iid([0.2, 0.3, 0.5], 500, seed=3)
        c = sample_iid([0.2, 0.3, 0.5], 500, seed=3, replication=1)
        d = sample_iid([0.2, 0.3, 0.5], 500, seed=3, stream=1)
        assert np.array_equal(a.observations, b.observations)
        assert not np.array_equal(a.observations, c.observations)
        assert not np.array_equal(a.observations, d.observations)

    def test_zero_weight_never_drawn(self):
        s = sample_iid([0.0, 0.5, 0.0, 0.5, 0.0], 20000, seed=1)
        assert set(np.unique(s.observations)) <= {1, 3}

    def test_frequencies(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        s = sample_iid(p, 40000, seed=11)
        chi = stats.chisquare(s.counts, 40000 * p)
        assert chi.pvalue > 1e-4

    def test_empty_sample(self):
        assert sample_iid([0.5, 0.5], 0, seed=0).n == 0
        with pytest.raises(DomainError):
            sample_iid([0.5, 0.5], -1, seed=0)

    def test_sample_domain(self):
        with pytest.raises(DomainError):
            DataSample([0, 3], 3)

    def test_concat(self):
        a, b = DataSample([0, 1], 2), DataSample([1], 2)
        assert a.concat(b).counts.tolist() == [1, 2]


class TestRng:
    def test_cdf_pinned(self):
        cdf = rng.categorical_cdf([0.1] * 10 + [0.0])
        assert cdf[9] == 1.0 and cdf[10] == 1.0

    def test_seed_domain(self):
        with pytest.raises(ValueError):
            rng.stream(-1)
        rng.stream(2**64 - 1)

    def test_streams_are_order_independent(self):
        first = rng.stream(5, 7, 2).random(4)
        rng.stream(5, 0, 0).random(100)
        assert np.array_equal(rng.stream(5, 7, 2).random(4), first)


class TestLikelihood:
    def test_matches_direct_sum(self):
        fam = bernoulli([0.1, 0.5, 0.9])
        data = DataSample([0, 1, 1, 0, 1], 2)
        ll = log_likelihoods(fam, data)
        assert ll[0] == pytest.approx(2 * math.log(0.9) + 3 * math.log(0.1))

    def test_zero_density_gives_minus_inf(self):
        fam = bernoulli([0.0, 0.5])
        ll = log_likelihoods(fam, DataSample([1, 0], 2))
        assert ll[0] == -math.inf and math.isfinite(ll[1])


class TestEnvelope:
    def test_bernoulli_envelope(self):
        fam = bernoulli(np.linspace(0.2, 0.8, 7))
        fit = fit_hellinger_euclidean_envelope(fam, 1.0)
        assert 0 < fit.a <= fit.A and fit.violations == []
        h, eu = fam.distances[0, 6], 0.6
        assert fit.a <= h / eu <= fit.A

    def test_coincident_points_reported(self):
        fam = ModelFamily([[0.3, 0.7], [0.6, 0.4], [0.5, 0.5]], [0.0, 1.0, 1.0])
        fit = fit_hellinger_euclidean_envelope(fam, 1.0)
        assert fit.violations == [(1, 2, "coincident")]

    def test_domain(self):
        with pytest.raises(DomainError):
            fit_hellinger_euclidean_envelope(bernoulli([0.2, 0.4]), 0.0)


def test_log_likelihood_examples():
    from bcl.models import log_likelihood
    fam = build_grid_family({"kind": "explicit", "densities": [[0.8, 0.2], [0.5, 0.5]]})
    assert log_likelihood(fam, 0, DataSample([0, 0, 1], 2)) == pytest.approx(-2.05573, abs=1e-5)
    assert log_likelihood(fam, 1, DataSample([0, 1, 1, 0], 2)) == pytest.approx(-4 * math.log(2))
    d1, d2 = DataSample([0, 1], 2), DataSample([1, 1, 0], 2)
    assert log_likelihood(fam, 0, d1.concat(d2)) == pytest.approx(
        log_likelihood(fam, 0, d1) + log_likelihood(fam, 0, d2))


def test_envelope_single_pair_and_near_linear_grid():
    fam = build_grid_family({"kind": "bernoulli", "grid": [0.1, 0.7]})
    h = fam.distances[0, 1]
    fit = fit_hellinger_euclidean_envelope(fam, 1.0)
    assert fit.a == fit.A == pytest.approx(h / 0.6)
    fam = build_grid_family({"kind": "bernoulli", "grid": [0.3, 0.4, 0.5, 0.6, 0.7]})
    fit = fit_hellinger_euclidean_envelope(fam, 1.0)
    assert fit.A / fit.a <= 1.1


def test_singleton_family():
    fam = build_grid_family({"kind": "bernoulli", "grid": [0.4]})
    assert fam.size == 1 and fam.distances[0, 0] == 0


def test_fair_coin_frequency():
    s = sample_iid([0.5, 0.5], 100_000, seed=123)
    assert abs(s.counts[0] / 1e5 - 0.5) <= 3 * math.sqrt(0.25 / 1e5)
