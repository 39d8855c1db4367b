import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcl.errors import BoundViolation, DimensionError, DomainError, NormalizationError, PreconditionError
from bcl.hellinger import (ProbabilityTable, affinity, check_kl_hellinger_sandwich, hellinger_affinity,
                           hellinger_distance, hellinger_matrix, kl_divergence, kl_ratio_bound,
                           max_likelihood_ratio, mixture_affinity, product_affinity, product_hellinger_sq)


def tables(size=4, allow_zero=True):
    lo = 0.0 if allow_zero else 1e-3
    return st.lists(st.floats(lo, 1.0), min_size=size, max_size=size).filter(lambda w: sum(w) > 1e-3).map(
        lambda w: np.array(w) / math.fsum(w))


class TestProbabilityTable:
    def test_rejects_bad_weights(self):
        with pytest.raises(NormalizationError):
            ProbabilityTable([0.5, 0.6])
        with pytest.raises(NormalizationError):
            ProbabilityTable([1.5, -0.5])
        with pytest.raises(NormalizationError):
            ProbabilityTable([float("nan"), 1.0])

    def test_support_size(self):
        assert ProbabilityTable([0.25, 0.75]).support_size == 2

    def test_mismatched_sizes(self):
        with pytest.raises(DimensionError):
            affinity([0.5, 0.5], [1 / 3, 1 / 3, 1 / 3])


class TestAffinity:
    def test_examples(self):
        assert hellinger_affinity([0.5, 0.5], [0.5, 0.5]) == pytest.approx(1.0)
        assert hellinger_affinity([1, 0], [0, 1]) == 0.0
        assert hellinger_affinity([0.1, 0.9], [0.9, 0.1]) == pytest.approx(0.6, abs=1e-15)
        assert hellinger_distance([0.1, 0.9], [0.9, 0.1]) == pytest.approx(math.sqrt(0.4), abs=1e-12)
        assert hellinger_distance([1, 0], [0, 1]) == 1.0

    @given(tables(), tables())
    def test_identity_and_symmetry(self, p, q):
        res = affinity(p, q)
        assert res.rho == 1.0 - res.h2
        assert res.h == math.sqrt(res.h2)
        assert hellinger_affinity(q, p) == pytest.approx(res.rho, abs=1e-15)
        assert 0.0 <= res.h2 <= 1.0

    @given(tables(), tables(), tables())
    def test_triangle_inequality(self, p, q, r):
        assert hellinger_distance(p, r) <= hellinger_distance(p, q) + hellinger_distance(q, r) + 1e-10

    def test_matrix_matches_pairwise(self):
        dens = np.array([[0.2, 0.8], [0.5, 0.5], [0.9, 0.1]])
        h = hellinger_matrix(dens)
        for i in range(3):
            for j in range(3):
                assert h[i, j] == pytest.approx(hellinger_distance(dens[i], dens[j]), abs=1e-15)
        assert np.all(np.diag(h) == 0)


class TestProducts:
    def test_examples(self):
        assert product_affinity(1.0, 7).value == 1.0
        v, b = product_affinity(0.6, 3)
        assert v == pytest.approx(0.216) and b == pytest.approx(math.exp(-1.2))
        assert product_affinity(0.0, 1).value == 0.0
        assert product_hellinger_sq(0.0, 5).value == 0.0
        assert product_hellinger_sq(0.3, 1).value == pytest.approx(0.3)
        v, b = product_hellinger_sq(0.4, 3)
        assert v == pytest.approx(0.784) and b == 1.0
        assert product_hellinger_sq(0.1, 3).bound == pytest.approx(0.3)

    def test_tiny_h2_keeps_precision(self):
        v, _ = product_hellinger_sq(1e-17, 10)
        assert v == pytest.approx(1e-16, rel=1e-12)

    @settings(max_examples=300)
    @given(st.floats(0.0, 1.0), st.integers(1, 10_000))
    def test_product_bound(self, rho, n):
        v, b = product_affinity(rho, n)
        assert v <= b + 1e-10

    def test_domain(self):
        with pytest.raises(DomainError):
            product_affinity(1.2, 1)
        with pytest.raises(DomainError):
            product_affinity(0.5, 0)
        with pytest.raises(DomainError):
            product_hellinger_sq(-0.1, 2)


class TestKullback:
    def test_examples(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
            0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-15)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.143841, abs=1e-6)
        assert kl_divergence([1, 0], [0, 1]) == math.inf
        # zero mass in p contributes nothing
        assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_near_identical_is_accurate(self):
        p = np.array([0.5 + 1e-9, 0.5 - 1e-9])
        q = np.array([0.5, 0.5])
        # K ~ 2 * (1e-9)^2 for this perturbation
        assert kl_divergence(p, q) == pytest.approx(2e-18, rel=1e-6)

    def test_max_ratio(self):
        assert max_likelihood_ratio([1, 0], [0.5, 0.5]) == 2.0
        assert max_likelihood_ratio([0.5, 0.5], [1, 0]) == math.inf


class TestRatioBound:
    def test_spot_values(self):
        assert kl_ratio_bound(0.0) == 2.0
        assert kl_ratio_bound(1.0) == pytest.approx(4.0, abs=1e-14)
        assert kl_ratio_bound(4.0) == pytest.approx(5.090355, abs=1e-6)
        assert kl_ratio_bound(2.0) == pytest.approx(4.502977, abs=1e-6)

    def test_continuous_across_series_switch(self):
        for u in (0.0099, -0.0099, 0.0101, -0.0101, 1e-7):
            assert kl_ratio_bound(1 + u, check=False) == pytest.approx(kl_ratio_bound(1 + u, check=False), abs=0)
        left, right = kl_ratio_bound(1 - 0.01 + 1e-12), kl_ratio_bound(1 - 0.01 - 1e-12)
        assert left == pytest.approx(right, abs=1e-9)
        left, right = kl_ratio_bound(1 + 0.01 - 1e-12), kl_ratio_bound(1 + 0.01 + 1e-12)
        assert left == pytest.approx(right, abs=1e-9)

    def test_monotone_and_log_cap(self):
        z = np.linspace(0.0, 100.0, 20001)
        vals = np.array([kl_ratio_bound(x) for x in z])
        assert np.all(np.diff(vals) >= -1e-12)
        big = z >= 1
        assert np.all(vals[big] <= 4 + 2 * np.log(z[big]) + 1e-10)

    def test_huge_ratio_is_finite(self):
        assert math.isfinite(kl_ratio_bound(8.98846567431158e307))
        assert kl_ratio_bound(1e7) == pytest.approx((1e7 * math.log(1e7) - 1e7 + 1) / (0.5 * (math.sqrt(1e7) - 1) ** 2),
                                                     rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            kl_ratio_bound(-1.0)
        assert kl_ratio_bound(math.inf) == math.inf


class TestSandwich:
    def test_identical(self):
        rep = check_kl_hellinger_sandwich([0.2, 0.8], [0.2, 0.8])
        assert rep.kl == rep.neg2_log_rho == rep.two_h2 == 0.0 and rep.ok

    def test_worked_pair(self):
        rep = check_kl_hellinger_sandwich([0.5, 0.5], [0.25, 0.75])
        assert rep.kl == pytest.approx(0.143841, abs=1e-6)
        assert rep.neg2_log_rho == pytest.approx(0.0693365, abs=1e-7)
        assert rep.two_h2 == pytest.approx(0.068148, abs=1e-6)
        assert rep.ratio == pytest.approx(4.22141, abs=1e-5)
        assert rep.kl_ratio_cap == pytest.approx(4.502977, abs=1e-6)
        assert rep.ok

    def test_point_mass_pair(self):
        rep = check_kl_hellinger_sandwich([1, 0], [0.5, 0.5])
        assert rep.M == 2.0
        assert rep.kl == pytest.approx(math.log(2))
        assert rep.h2 == pytest.approx(1 - math.sqrt(0.5))
        assert rep.ratio == pytest.approx(2.36655, abs=1e-5)
        assert rep.ok

    def test_infinite_ratio_skips_bracket(self):
        rep = check_kl_hellinger_sandwich([0.5, 0.5], [1, 0])
        assert rep.kl == math.inf and rep.ratio_ok is None and rep.ok

    @settings(max_examples=300)
    @given(tables(5), tables(5))
    def test_chain_holds(self, p, q):
        rep = check_kl_hellinger_sandwich(p, q)
        assert rep.chain_ok
        assert rep.ok


class TestMixtureAffinity:
    def test_single_component(self):
        assert mixture_affinity([0.3, 0.7], [[0.3, 0.7]], [1.0], 0.0) == pytest.approx(1.0)

    def test_point_mass_case_is_tight(self):
        p, c = [0.5, 0.5], [0.9, 0.1]
        r = hellinger_distance(p, c)
        assert mixture_affinity(p, [c], [1.0], r) == pytest.approx(1 - r * r, abs=1e-14)

    def test_two_components(self):
        p = np.array([0.5, 0.5])
        # Bernoulli parameters at distance 0.1 on either side
        from scipy.optimize import brentq
        f = lambda t: hellinger_distance(p, [1 - t, t]) - 0.1
        lo, hi = brentq(f, 0.05, 0.5), brentq(f, 0.5, 0.95)
        rho = mixture_affinity(p, [[1 - lo, lo], [1 - hi, hi]], [0.5, 0.5], 0.1)
        assert rho >= 0.99

    def test_component_outside_radius(self):
        with pytest.raises(PreconditionError):
            mixture_affinity([0.5, 0.5], [[0.9, 0.1]], [1.0], 0.1)

    def test_bad_weights(self):
        with pytest.raises(NormalizationError):
            mixture_affinity([0.5, 0.5], [[0.5, 0.5]], [0.5], 0.1)
        with pytest.raises(DimensionError):
            mixture_affinity([0.5, 0.5], [[0.5, 0.5]], [0.5, 0.5], 0.1)

    @given(tables(3), st.lists(tables(3), min_size=1, max_size=4), st.data())
    def test_lower_bound(self, p, comps, data):
        w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=len(comps), max_size=len(comps))))
        w /= w.sum()
        r = max(hellinger_distance(p, c) for c in comps)
        assert mixture_affinity(p, comps, w, r) >= 1 - r * r - 1e-10


def test_kl_with_subnormal_reference_is_finite():
    q = np.array([1.1125369292536007e-308, 1.0])
    q = q / q.sum()
    assert kl_divergence([1.0, 0.0], q) == pytest.approx(-math.log(q[0]), rel=1e-12)
