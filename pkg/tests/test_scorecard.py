import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from rmstop.errors import ConfigError, DomainError
from rmstop.scorecard import (
    ScorecardConfig,
    ScoreTrace,
    StepScore,
    StopReport,
    boundary_distance,
    evaluate_rules,
    evaluate_rules_lazy,
    increments,
    region_scorecard,
    region_trace,
    stability_defect,
)
from rmstop.uncertainty import jeffreys_beta_width


def all_failure_trace(n_max=300, alpha=0.05):
    n = np.arange(1, n_max + 1)
    m = np.zeros(n_max)
    width = np.array([jeffreys_beta_width(0, k, alpha).width for k in n])
    return ScoreTrace(n=n, m=m, b=m.copy(), width=width, r=increments(m))


@pytest.fixture
def config():
    return ScorecardConfig(epsilon=0.01, width_max=0.02, eta=1e-6, n_min=30, n_max=300)


@st.composite
def traces(draw, max_len=60):
    size = draw(st.integers(1, max_len))
    unit = st.floats(0.0, 1.0, allow_nan=False)
    m = draw(hnp.arrays(float, size, elements=unit))
    width = draw(hnp.arrays(float, size, elements=st.floats(0.0, 0.2)))
    r = draw(hnp.arrays(float, size, elements=st.floats(0.0, 0.05)))
    r[0] = np.inf
    return ScoreTrace(n=np.arange(1, size + 1), m=m, b=np.minimum(m, 1 - m), width=width, r=r)


configs = st.builds(
    ScorecardConfig,
    epsilon=st.floats(0.01, 0.49),
    width_max=st.floats(0.001, 0.2),
    eta=st.one_of(st.floats(0.0, 0.05), st.just(math.inf)),
    n_min=st.integers(1, 10),
    n_max=st.integers(10, 80),
)


class TestPrimitives:
    @pytest.mark.parametrize("m,expected", [(0.5, 0.5), (0.05, 0.05), (0.975, 0.025)])
    def test_boundary_distance(self, m, expected):
        assert boundary_distance(m) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("m", [-0.01, 1.01, float("nan")])
    def test_boundary_distance_domain(self, m):
        with pytest.raises(DomainError):
            boundary_distance(m)

    @given(st.floats(0.0, 1.0))
    def test_boundary_distance_symmetric(self, m):
        assert boundary_distance(m) == pytest.approx(boundary_distance(1.0 - m), abs=1e-15)

    @pytest.mark.parametrize("cur,prev,expected", [(0.25, 0.5, 0.25), (0.3, 0.3, 0.0), (0.1, 0.05, 0.05)])
    def test_stability_defect(self, cur, prev, expected):
        assert stability_defect(cur, prev) == pytest.approx(expected, abs=1e-15)

    def test_increments_first_is_inf(self):
        r = increments([0.5, 0.25, 0.25])
        assert np.isinf(r[0])
        np.testing.assert_array_equal(r[1:], [0.25, 0.0])


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(epsilon=0.5, width_max=0.1, eta=0.1),
        dict(epsilon=0.0, width_max=0.1, eta=0.1),
        dict(epsilon=0.1, width_max=0.0, eta=0.1),
        dict(epsilon=0.1, width_max=0.1, eta=-1.0),
        dict(epsilon=0.1, width_max=0.1, eta=0.1, n_min=0),
        dict(epsilon=0.1, width_max=0.1, eta=0.1, n_min=50, n_max=40),
        dict(epsilon=0.1, width_max=0.1, eta=0.1, alpha=1.0),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            ScorecardConfig(**kwargs)

    def test_real_scale_accepts_large_epsilon(self):
        assert ScorecardConfig(epsilon=1.5, width_max=0.2, eta=0.01, probability_scale=False).epsilon == 1.5

    def test_stop_report_invariant(self):
        with pytest.raises(DomainError):
            StopReport(rule="rm", stopped=True)
        assert StopReport.censored("rm").tau_or_inf == math.inf


class TestEvaluateRules:
    def test_all_failure_path(self, config):
        reports = evaluate_rules(all_failure_trace(), config)
        assert reports.boundary_only.tau == 30
        assert reports.two_cond.tau == 125
        assert reports.rm.tau == 125

    def test_accepts_step_records(self, config):
        trace = all_failure_trace()
        assert evaluate_rules(trace.steps(), config) == evaluate_rules(trace, config)

    def test_far_from_boundary_censors(self, config):
        size = 100
        trace = ScoreTrace(n=np.arange(1, size + 1), m=np.full(size, 0.3), b=np.full(size, 0.3),
                           width=np.zeros(size), r=np.zeros(size))
        assert all(not r.stopped for r in evaluate_rules(trace, config))

    def test_empty(self, config):
        with pytest.raises(DomainError):
            evaluate_rules([], config)

    def test_non_contiguous(self, config):
        steps = [StepScore(1, 0.0, 0.0, 0.0, math.inf), StepScore(3, 0.0, 0.0, 0.0, 0.0)]
        with pytest.raises(DomainError):
            evaluate_rules(steps, config)

    def test_no_latching(self):
        # conditions hold at different steps but never together
        cfg = ScorecardConfig(epsilon=0.1, width_max=0.1, eta=0.1, n_min=1, n_max=4)
        trace = ScoreTrace(n=np.arange(1, 5), m=np.array([0.05, 0.3, 0.05, 0.3]),
                           b=np.array([0.05, 0.3, 0.05, 0.3]), width=np.array([0.5, 0.0, 0.5, 0.0]),
                           r=np.array([math.inf, 0.0, 0.0, 0.0]))
        reports = evaluate_rules(trace, cfg)
        assert reports.boundary_only.tau == 1
        assert not reports.two_cond.stopped

    def test_stops_within_window(self):
        cfg = ScorecardConfig(epsilon=0.1, width_max=1.0, eta=1.0, n_min=3, n_max=5)
        size = 8
        trace = ScoreTrace(n=np.arange(1, size + 1), m=np.zeros(size), b=np.zeros(size),
                           width=np.zeros(size), r=np.zeros(size))
        assert evaluate_rules(trace, cfg).rm.tau == 3

    @given(traces(), configs)
    def test_nesting(self, trace, cfg):
        reports = evaluate_rules(trace, cfg)
        taus = [r.tau_or_inf for r in reports]
        assert taus[0] <= taus[1] <= taus[2]
        for r in reports:
            if r.stopped:
                assert cfg.n_min <= r.tau <= cfg.n_max

    @given(traces(), configs)
    def test_infinite_eta_matches_two_cond(self, trace, cfg):
        cfg = ScorecardConfig(cfg.epsilon, cfg.width_max, math.inf, cfg.n_min, cfg.n_max)
        reports = evaluate_rules(trace, cfg)
        assert reports.rm.tau == reports.two_cond.tau
        assert reports.rm.m_at_tau == reports.two_cond.m_at_tau

    @given(traces(), configs)
    def test_pure(self, trace, cfg):
        assert evaluate_rules(trace, cfg) == evaluate_rules(trace, cfg)

    @given(traces(), configs)
    def test_lazy_matches_full(self, trace, cfg):
        calls = []

        def width_at(i):
            calls.append(i)
            return float(trace.width[i])

        lazy = evaluate_rules_lazy(trace.m, trace.b, trace.r, width_at, cfg)
        full = evaluate_rules(trace, cfg)
        assert [r.tau for r in lazy] == [r.tau for r in full]
        assert calls == sorted(calls)
        if full.rm.stopped:
            assert max(calls) == full.rm.tau - 1
        for i in calls:
            assert trace.b[i] <= cfg.epsilon


class TestRegion:
    def test_single_point(self, config):
        trace = all_failure_trace()
        assert region_scorecard([trace], config) == evaluate_rules(trace, config).rm

    def test_interior_point_censors(self, config):
        size = 300
        interior = ScoreTrace(n=np.arange(1, size + 1), m=np.full(size, 0.5), b=np.full(size, 0.5),
                              width=np.zeros(size), r=np.zeros(size))
        assert not region_scorecard([all_failure_trace(), interior], config).stopped

    @given(traces(max_len=30), st.data())
    def test_componentwise_max(self, first, data):
        size = len(first)
        m = data.draw(hnp.arrays(float, size, elements=st.floats(0.0, 1.0)))
        second = ScoreTrace(n=first.n, m=m, b=np.minimum(m, 1 - m),
                            width=data.draw(hnp.arrays(float, size, elements=st.floats(0.0, 0.2))),
                            r=np.concatenate([[np.inf], np.abs(np.diff(m))]))
        agg = region_trace([first, second])
        for i in range(size):
            assert agg.b[i] == max(first.b[i], second.b[i])
            assert agg.width[i] == max(first.width[i], second.width[i])
            assert agg.r[i] == max(first.r[i], second.r[i])

    def test_empty_grid(self, config):
        with pytest.raises(DomainError):
            region_scorecard([], config)

    def test_mismatched_indexing(self, config):
        a = all_failure_trace(50)
        b = all_failure_trace(40)
        with pytest.raises(DomainError):
            region_trace([a, b])
