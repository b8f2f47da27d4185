import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmstop.errors import DomainError
from rmstop.targets import (
    CountPath,
    GaussianPath,
    bernoulli_jeffreys_mean,
    beta_prior_all_failure_mean,
    exact_reverse_defect,
    gaussian_posterior_mean,
    poisson_jeffreys_mean,
    running_mean,
    running_mean_reverse_defect,
)


class TestMeans:
    @pytest.mark.parametrize("s,n,expected", [(0, 9, 0.05), (0, 0, 0.5), (19, 19, 0.975)])
    def test_bernoulli_jeffreys(self, s, n, expected):
        assert bernoulli_jeffreys_mean(s, n) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("k,expected", [(0, 0.5), (1, 0.25), (4, 0.1), (9, 0.05), (19, 0.025)])
    def test_all_failure_table(self, k, expected):
        assert beta_prior_all_failure_mean(0.5, 0.5, k) == pytest.approx(expected, abs=1e-15)

    def test_uniform_prior(self):
        assert beta_prior_all_failure_mean(1, 1, 3) == pytest.approx(0.2, abs=1e-15)

    @pytest.mark.parametrize("a,b", [(0, 1), (1, -1)])
    def test_prior_domain(self, a, b):
        with pytest.raises(DomainError):
            beta_prior_all_failure_mean(a, b, 3)

    @pytest.mark.parametrize("s,n,expected", [(0, 1, 0.25), (0, 99, 0.005), (10, 9, 1.05)])
    def test_poisson_jeffreys(self, s, n, expected):
        assert poisson_jeffreys_mean(s, n) == pytest.approx(expected, abs=1e-15)

    def test_poisson_needs_data(self):
        with pytest.raises(DomainError):
            poisson_jeffreys_mean(0, 0)

    def test_gaussian(self):
        assert gaussian_posterior_mean(3.7, 0, 1.0) == 0.0
        assert gaussian_posterior_mean(1.0, 1, 1.0) == pytest.approx(0.5)
        assert gaussian_posterior_mean(0.0, 50, 1.0) == 0.0
        with pytest.raises(DomainError):
            gaussian_posterior_mean(1.0, 5, 0.0)

    @pytest.mark.parametrize("s,n,expected", [(0, 30, 0.0), (3, 4, 0.75), (1, 1000, 0.001)])
    def test_running_mean(self, s, n, expected):
        assert running_mean(s, n) == pytest.approx(expected, abs=1e-15)

    def test_running_mean_needs_data(self):
        with pytest.raises(DomainError):
            running_mean(0, 0)

    def test_bernoulli_count_checked(self):
        with pytest.raises(DomainError):
            bernoulli_jeffreys_mean(5, 4)

    def test_arrays(self):
        out = bernoulli_jeffreys_mean(np.array([0, 1]), np.array([1, 1]))
        np.testing.assert_allclose(out, [0.25, 0.75])

    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    def test_jeffreys_interior_and_symmetric(self, s, extra):
        n = s + extra
        value = bernoulli_jeffreys_mean(s, n)
        assert 0.0 < value < 1.0
        assert value + bernoulli_jeffreys_mean(n - s, n) == pytest.approx(1.0, abs=1e-15)


class TestPaths:
    def test_count_path_invariants(self):
        CountPath(n=5, s=5)
        CountPath(n=5, s=9, family="poisson")
        with pytest.raises(DomainError):
            CountPath(n=5, s=6)
        with pytest.raises(DomainError):
            CountPath(n=-1, s=0)

    def test_gaussian_path_invariants(self):
        with pytest.raises(DomainError):
            GaussianPath(n=3, xbar=0.0, sigma2=0.0)


class TestReverseDefect:
    def test_running_mean_exhaustive(self):
        for n in range(1, 201):
            for s in range(0, n + 2):
                assert exact_reverse_defect("running_mean", s, n) == 0.0

    def test_jeffreys_small_case(self):
        assert exact_reverse_defect("jeffreys_mean", 0, 1) == pytest.approx(1 / 12, abs=1e-15)

    @pytest.mark.parametrize("n", range(1, 101))
    def test_jeffreys_zero_count_closed_form(self, n):
        expected = 0.5 / ((n + 1) * (n + 2))
        assert abs(exact_reverse_defect("jeffreys_mean", 0, n) - expected) <= 1e-12

    def test_jeffreys_bound_exhaustive(self):
        for n in range(0, 201):
            bound = 1.0 / ((n + 1) * (n + 2))
            for s in range(0, n + 2):
                assert abs(exact_reverse_defect("jeffreys_mean", s, n)) <= bound * (1 + 1e-12)

    def test_running_mean_is_only_exact_target(self):
        nonzero = [exact_reverse_defect("jeffreys_mean", s, n)
                   for n in range(1, 201) for s in range(n + 2)]
        assert any(v != 0.0 for v in nonzero)

    @pytest.mark.parametrize("kind,s,n", [("running_mean", 5, 3), ("running_mean", 0, 0),
                                          ("jeffreys_mean", -1, 3), ("other", 0, 3)])
    def test_domain(self, kind, s, n):
        with pytest.raises(DomainError):
            exact_reverse_defect(kind, s, n)

    @pytest.mark.parametrize("n,s_next", [(7, 3), (5, 0), (6, 7)])
    def test_enumeration_oracle(self, n, s_next):
        # E[S_n | S_{n+1}] averaged over every exchangeable arrangement
        seqs = [seq for seq in itertools.product((0, 1), repeat=n + 1) if sum(seq) == s_next]
        expected_sn = Fraction(sum(sum(seq[:n]) for seq in seqs), len(seqs))
        jeff = (expected_sn + Fraction(1, 2)) / (n + 1) - Fraction(2 * s_next + 1, 2 * (n + 2))
        assert exact_reverse_defect("jeffreys_mean", s_next, n) == float(jeff)

    def test_float_path_defect(self):
        n = np.arange(1, 6)
        s = np.array([0, 0, 1, 1, 2])
        d = running_mean_reverse_defect(s, n)
        assert np.isinf(d[0])
        assert np.all(d[1:] <= 1e-15)
