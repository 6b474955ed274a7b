"""Tests for the truth dynamics, observation model, and seeded streams."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netcredit.model import (
    ClientTruth,
    GaussianBelief,
    ModelParams,
    ParameterError,
    ReplicationStreams,
    init_belief,
    init_population,
    observe,
    step_truth,
)


def make_params(**kwargs):
    defaults = dict(n_clients=4, horizon=5)
    defaults.update(kwargs)
    return ModelParams(**defaults)


class TestModelParams:
    def test_scalar_schedules_broadcast(self):
        p = make_params(a_schedule=0.9, r_schedule=2.0)
        assert p.a_schedule.shape == (5,)
        assert p.r_schedule.shape == (6,)
        assert np.all(p.a_schedule == 0.9)

    def test_prior_mean_defaults_to_half_cap(self):
        p = make_params(score_cap=15.0)
        assert p.prior_mean == 7.5
        assert make_params(prior_mean=3.0).prior_mean == 3.0

    @pytest.mark.parametrize(
        "bad",
        [
            dict(a_schedule=0.0),
            dict(a_schedule=1.5),
            dict(q_schedule=-0.1),
            dict(r_schedule=0.0),
            dict(nu=0.0),
            dict(nu=1.5),
            dict(score_cap=0.0),
            dict(initial_belief_var=0.0),
            dict(b_schedule=-1.0),
            dict(n_clients=0),
            dict(horizon=0),
        ],
    )
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ParameterError):
            make_params(**bad)

    def test_wrong_schedule_length(self):
        with pytest.raises(ParameterError):
            make_params(a_schedule=[0.5, 0.5])


def test_belief_requires_positive_variance():
    with pytest.raises(ParameterError):
        GaussianBelief(mean=0.0, variance=0.0)


class TestStepTruth:
    def test_identity_dynamics_keep_score_constant(self):
        rng = np.random.default_rng(0)
        assert step_truth(7.0, 0.0, a=1.0, b=0.0, q=0.0, rng=rng) == 7.0

    def test_zero_noise_arithmetic(self):
        rng = np.random.default_rng(0)
        assert step_truth(4.0, 2.0, a=0.5, b=1.0, q=0.0, rng=rng) == pytest.approx(4.0)

    def test_noise_moments(self):
        # mean of a*x+b*u = 4 with noise sd 0.5; tolerance 3 sigma / sqrt(n)
        rng = np.random.default_rng(7)
        draws = np.array(
            [step_truth(4.0, 2.0, a=0.5, b=1.0, q=0.25, rng=rng) for _ in range(10**5)]
        )
        assert abs(draws.mean() - 4.0) < 3 * 0.5 / math.sqrt(10**5)
        assert abs(draws.var() - 0.25) < 0.25 * 0.05

    def test_negative_q_rejected(self):
        with pytest.raises(ParameterError):
            step_truth(1.0, 0.0, a=1.0, b=0.0, q=-1e-9, rng=np.random.default_rng(0))

    def test_a_outside_range_rejected(self):
        with pytest.raises(ParameterError):
            step_truth(1.0, 0.0, a=1.2, b=0.0, q=0.0, rng=np.random.default_rng(0))

    @given(x=st.floats(-50, 50), steps=st.integers(1, 20))
    def test_unit_weight_no_noise_is_constant(self, x, steps):
        rng = np.random.default_rng(0)
        value = x
        for _ in range(steps):
            value = step_truth(value, 0.0, a=1.0, b=0.0, q=0.0, rng=rng)
        assert value == x


class TestObserve:
    def test_vanishing_noise(self):
        rng = np.random.default_rng(1)
        assert observe(5.0, 1e-12, rng) == pytest.approx(5.0, abs=1e-4)

    def test_variance_moment(self):
        rng = np.random.default_rng(2)
        draws = np.array([observe(5.0, 1.0, rng) for _ in range(10**5)])
        assert abs(draws.var() - 1.0) < 0.05

    def test_seeded_replay(self):
        a = observe(5.0, 1.0, np.random.default_rng(42))
        b = observe(5.0, 1.0, np.random.default_rng(42))
        assert a == b

    def test_nonpositive_r_rejected(self):
        with pytest.raises(ParameterError):
            observe(5.0, 0.0, np.random.default_rng(0))


class TestInitPopulation:
    def test_explicit_passthrough(self):
        p = make_params(n_clients=3, score_cap=15.0)
        truths = init_population(p, [1.0, 7.0, 14.0])
        assert [c.x for c in truths] == [1.0, 7.0, 14.0]
        assert all(c.u_schedule.shape == (5,) for c in truths)

    def test_explicit_out_of_range_rejected(self):
        p = make_params(n_clients=2, score_cap=15.0)
        with pytest.raises(ParameterError):
            init_population(p, [1.0, 15.5])
        with pytest.raises(ParameterError):
            init_population(p, [-0.1, 1.0])

    def test_explicit_wrong_length_rejected(self):
        with pytest.raises(ParameterError):
            init_population(make_params(n_clients=3), [1.0, 2.0])

    def test_uniform_law_of_large_numbers(self):
        p = make_params(n_clients=10**5, score_cap=15.0)
        truths = init_population(p, "uniform", np.random.default_rng(3))
        assert abs(np.mean([c.x for c in truths]) - 7.5) < 0.1

    def test_uniform_reproducible(self):
        p = make_params(n_clients=50, score_cap=15.0)
        a = init_population(p, "uniform", np.random.default_rng(11))
        b = init_population(p, "uniform", np.random.default_rng(11))
        assert [c.x for c in a] == [c.x for c in b]

    def test_uniform_needs_cap_above_three(self):
        p = make_params(score_cap=2.5)
        with pytest.raises(ParameterError):
            init_population(p, "uniform", np.random.default_rng(0))

    def test_stratified_draws_stay_in_their_bins(self):
        p = make_params(n_clients=10, score_cap=15.0)
        truths = init_population(p, "stratified", np.random.default_rng(4))
        width = 1.5
        for i, c in enumerate(truths):
            assert i * width <= c.x < (i + 1) * width

    def test_unknown_mode_rejected(self):
        with pytest.raises(ParameterError):
            init_population(make_params(), "gaussian", np.random.default_rng(0))


class TestInitBelief:
    def test_vanishing_spread(self):
        belief = init_belief(ClientTruth(x=5.0), 1e-12, np.random.default_rng(5))
        assert belief.mean == pytest.approx(5.0, abs=1e-4)
        assert belief.variance == 1e-12

    def test_variance_moment(self):
        rng = np.random.default_rng(6)
        truth = ClientTruth(x=5.0)
        means = np.array([init_belief(truth, 1.0, rng).mean for _ in range(10**5)])
        assert abs(means.var() - 1.0) < 0.05

    def test_seeded_replay(self):
        truth = ClientTruth(x=5.0)
        a = init_belief(truth, 1.0, np.random.default_rng(9))
        b = init_belief(truth, 1.0, np.random.default_rng(9))
        assert a == b

    def test_nonpositive_p0_rejected(self):
        with pytest.raises(ParameterError):
            init_belief(ClientTruth(x=5.0), 0.0, np.random.default_rng(0))


class TestReplicationStreams:
    def test_streams_are_deterministic(self):
        a = ReplicationStreams(123, 4)
        b = ReplicationStreams(123, 4)
        assert a.process_noise(2).normal(size=5).tolist() == b.process_noise(2).normal(size=5).tolist()

    def test_purposes_and_clients_are_independent(self):
        s = ReplicationStreams(123, 0)
        w0 = s.process_noise(0).normal(size=4)
        w1 = s.process_noise(1).normal(size=4)
        v0 = s.observation_noise(0).normal(size=4)
        assert not np.allclose(w0, w1)
        assert not np.allclose(w0, v0)

    def test_bad_seed_rejected(self):
        with pytest.raises(ParameterError):
            ReplicationStreams(-1, 0)
        with pytest.raises(ParameterError):
            ReplicationStreams(2**64, 0)

    def test_adding_clients_does_not_move_existing_draws(self):
        # client-keyed streams: noise for clients 0..1 is identical whether
        # the population has 2 or 5 clients
        small = [ReplicationStreams(99, 0).process_noise(i).normal(size=3) for i in range(2)]
        large = [ReplicationStreams(99, 0).process_noise(i).normal(size=3) for i in range(5)]
        for i in range(2):
            assert small[i].tolist() == large[i].tolist()
