"""Tests for the risk-prediction filter against the fusion oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netcredit.filtering import fuse_gaussians, gains, predict, run_filter, update
from netcredit.model import (
    GaussianBelief,
    ModelParams,
    ParameterError,
    ReplicationStreams,
    init_population,
)
from netcredit.network import neighbors

variances = st.floats(1e-3, 50.0)
means = st.floats(-30.0, 30.0)
scores = st.floats(-30.0, 30.0)


def oracle_update(predicted, y_i, neighbor_scores, r):
    """Independent route: fuse the observation (variance r) and one
    unit-variance term per neighbor into the prediction."""
    terms = [(y_i, r)] + [(s, 1.0) for s in neighbor_scores]
    return fuse_gaussians(predicted, terms)


class TestPredict:
    def test_identity_dynamics(self):
        out = predict(GaussianBelief(3.0, 1.0), a=1.0, b=0.0, u=0.0, q=0.0)
        assert (out.mean, out.variance) == (3.0, 1.0)

    def test_direct_arithmetic(self):
        out = predict(GaussianBelief(3.0, 1.0), a=0.5, b=2.0, u=1.0, q=0.75)
        assert out.mean == pytest.approx(3.5)
        assert out.variance == pytest.approx(1.0)

    def test_pure_shift(self):
        out = predict(GaussianBelief(0.0, 2.0), a=1.0, b=1.0, u=-1.0, q=0.0)
        assert (out.mean, out.variance) == (-1.0, 2.0)

    def test_validation(self):
        with pytest.raises(ParameterError):
            predict(GaussianBelief(0.0, 1.0), a=1.5, b=0.0, u=0.0, q=0.0)
        with pytest.raises(ParameterError):
            predict(GaussianBelief(0.0, 1.0), a=1.0, b=0.0, u=0.0, q=-0.1)


class TestGains:
    def test_unit_case_matches_oracle(self):
        # equal prior, observation, and one neighbor: every weight is 1/3
        k, h = gains(1.0, 1.0, 1)
        assert k == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert h == pytest.approx(1.0 / 3.0, abs=1e-15)
        fused = oracle_update(GaussianBelief(0.0, 1.0), 1.0, [1.0], 1.0)
        assert fused.variance == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_no_neighbors_reduces_to_kalman_gain(self):
        k, h = gains(1.0, 1.0, 0)
        assert k == pytest.approx(0.5)
        assert h == pytest.approx(0.5)
        assert k == pytest.approx(1.0 / (1.0 + 1.0))

    def test_direct_formula(self):
        k, h = gains(2.0, 0.5, 3)
        assert k == pytest.approx(2.0 / 5.5, abs=1e-12)
        assert h == pytest.approx(1.0 / 5.5, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ParameterError):
            gains(0.0, 1.0, 0)
        with pytest.raises(ParameterError):
            gains(1.0, 0.0, 0)
        with pytest.raises(ParameterError):
            gains(1.0, 1.0, -1)

    @given(p=variances, r=variances, n=st.integers(0, 40))
    def test_gains_lie_in_unit_interval(self, p, r, n):
        # the neighbor gain is only applied when there are neighbors; at
        # n = 0 it multiplies an empty sum and may exceed 1
        k, h = gains(p, r, n)
        assert 0.0 < k < 1.0
        assert h > 0.0
        if n >= 1:
            assert h < 1.0


class TestUpdate:
    def test_single_neighbor_example(self):
        state = update(GaussianBelief(0.0, 1.0), y_i=2.0, neighbor_scores=[4.0], r=1.0)
        assert state.posterior.mean == pytest.approx(2.0, abs=1e-12)
        assert state.posterior.variance == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_agreeing_observation_kalman_case(self):
        state = update(GaussianBelief(5.0, 1.0), y_i=5.0, neighbor_scores=[], r=1.0)
        assert state.posterior.mean == pytest.approx(5.0)
        assert state.posterior.variance == pytest.approx(0.5)

    def test_symmetric_neighbors_cancel(self):
        state = update(GaussianBelief(2.0, 0.5), y_i=2.0, neighbor_scores=[1.0, 3.0], r=0.5)
        assert state.posterior.mean == pytest.approx(2.0, abs=1e-12)
        assert state.posterior.variance == pytest.approx(1.0 / 6.0, abs=1e-12)

    @given(
        m=means,
        p=variances,
        y=scores,
        r=variances,
        nbrs=st.lists(scores, max_size=8),
    )
    @settings(max_examples=200)
    def test_matches_fusion_oracle(self, m, p, y, r, nbrs):
        state = update(GaussianBelief(m, p), y, nbrs, r)
        fused = oracle_update(GaussianBelief(m, p), y, nbrs, r)
        assert state.posterior.mean == pytest.approx(fused.mean, abs=1e-10)
        assert state.posterior.variance == pytest.approx(fused.variance, abs=1e-10)

    @given(m=means, p=variances, y=scores, r=variances, nbrs=st.lists(scores, max_size=8))
    def test_precision_additivity(self, m, p, y, r, nbrs):
        state = update(GaussianBelief(m, p), y, nbrs, r)
        assert 1.0 / state.posterior.variance == pytest.approx(
            1.0 / p + 1.0 / r + len(nbrs), rel=1e-12
        )

    @given(m=means, p=variances, y=scores, r=variances, nbrs=st.lists(scores, max_size=8))
    def test_strict_improvement(self, m, p, y, r, nbrs):
        state = update(GaussianBelief(m, p), y, nbrs, r)
        assert state.posterior.variance < min(r, p)

    @given(m=means, p=variances, y=scores, r=variances, nbrs=st.lists(scores, max_size=8))
    def test_two_variance_expressions_agree(self, m, p, y, r, nbrs):
        # gain form (1 - K - nH) * P against the precision form
        state = update(GaussianBelief(m, p), y, nbrs, r)
        n = len(nbrs)
        gain_form = (1.0 - state.gain_obs - n * state.gain_net) * p
        precision_form = 1.0 / (1.0 / p + 1.0 / r + n)
        assert gain_form == pytest.approx(precision_form, rel=1e-12)
        assert state.posterior.variance == pytest.approx(precision_form, rel=1e-12)


class TestFuseGaussians:
    def test_two_unit_terms(self):
        fused = fuse_gaussians(GaussianBelief(0.0, 1.0), [(2.0, 1.0), (4.0, 1.0)])
        assert fused.mean == pytest.approx(2.0)
        assert fused.variance == pytest.approx(1.0 / 3.0)

    def test_empty_terms_identity(self):
        prior = GaussianBelief(9.0, 0.3)
        assert fuse_gaussians(prior, []) == prior

    def test_agreeing_evidence_halves_variance(self):
        fused = fuse_gaussians(GaussianBelief(1.0, 1.0), [(1.0, 1.0)])
        assert fused.mean == pytest.approx(1.0)
        assert fused.variance == pytest.approx(0.5)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ParameterError):
            fuse_gaussians(GaussianBelief(0.0, 1.0), [(1.0, 0.0)])

    @given(
        m=means,
        v=variances,
        terms=st.lists(st.tuples(means, variances), max_size=6),
    )
    def test_permutation_invariant_and_in_hull(self, m, v, terms):
        fused = fuse_gaussians(GaussianBelief(m, v), terms)
        reversed_fused = fuse_gaussians(GaussianBelief(m, v), terms[::-1])
        assert fused.mean == pytest.approx(reversed_fused.mean, rel=1e-9, abs=1e-12)
        points = [m] + [t[0] for t in terms]
        assert min(points) - 1e-9 <= fused.mean <= max(points) + 1e-9


def scalar_kalman(prior_mean, prior_var, a, b, u, q, r, observations):
    """Textbook scalar Kalman filter, written independently of the package:
    condition on observations[0] first, then alternate predict/update."""
    m, p = prior_mean, prior_var
    out = []
    for t, y in enumerate(observations):
        if t > 0:
            m = a * m + b * u
            p = a * a * p + q
        k = p / (p + r)
        m = m + k * (y - m)
        p = (1.0 - k) * p
        out.append((m, p))
    return out


class TestRunFilter:
    def make_params(self, **kwargs):
        defaults = dict(
            n_clients=1, horizon=10, a_schedule=1.0, b_schedule=0.0,
            q_schedule=0.0, r_schedule=1.0, score_cap=15.0, initial_belief_var=1.0,
        )
        defaults.update(kwargs)
        return ModelParams(**defaults)

    def test_single_client_variance_closed_form(self):
        # no network: precision grows by 1/R per step, so var(t) = 1/(t+2)
        p = self.make_params()
        truths = init_population(p, [7.0])
        traj = run_filter(p, truths, ReplicationStreams(1, 0))
        expected = np.array([1.0 / (t + 2) for t in range(11)])
        assert np.allclose(traj.var_post[:, 0], expected, atol=1e-14)

    def test_single_client_matches_independent_kalman(self):
        p = self.make_params(horizon=50, a_schedule=0.9, b_schedule=0.3, q_schedule=0.2, r_schedule=1.3)
        truths = init_population(p, [7.0])
        for c in truths:
            c.u_schedule = np.full(50, 0.7)
        traj = run_filter(p, truths, ReplicationStreams(3, 0))
        oracle = scalar_kalman(p.prior_mean, 1.0, 0.9, 0.3, 0.7, 0.2, 1.3, traj.y[:, 0])
        for t, (m, v) in enumerate(oracle):
            assert traj.mean_post[t, 0] == pytest.approx(m, abs=1e-12)
            assert traj.var_post[t, 0] == pytest.approx(v, abs=1e-12)

    def test_posterior_variance_below_observation_noise(self):
        p = self.make_params(n_clients=12, horizon=8, r_schedule=0.8)
        streams = ReplicationStreams(5, 0)
        truths = init_population(p, "uniform", [streams.init_score(i) for i in range(12)])
        traj = run_filter(p, truths, streams)
        assert np.all(traj.var_post < 0.8)

    def test_seeded_replay(self):
        p = self.make_params(n_clients=6, horizon=5, q_schedule=0.1)
        streams = ReplicationStreams(9, 2)
        truths = init_population(p, "uniform", [streams.init_score(i) for i in range(6)])
        a = run_filter(p, truths, ReplicationStreams(9, 2))
        b = run_filter(p, truths, ReplicationStreams(9, 2))
        assert np.array_equal(a.mean_post, b.mean_post)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.y, b.y)

    def test_engine_agrees_with_scalar_operations(self):
        # recompute every recorded step through predict/update on the
        # retained snapshots; engine and operation route must coincide
        p = self.make_params(n_clients=5, horizon=6, a_schedule=0.8, b_schedule=0.4, q_schedule=0.3)
        streams = ReplicationStreams(17, 0)
        truths = init_population(p, "uniform", [streams.init_score(i) for i in range(5)])
        for i, c in enumerate(truths):
            c.u_schedule = np.linspace(-1, 1, 6) + 0.1 * i
        traj = run_filter(p, truths, ReplicationStreams(17, 0), keep_networks=True)
        for t in range(traj.n_steps):
            for i in range(traj.n_clients):
                if t == 0:
                    predicted = GaussianBelief(p.prior_mean, p.initial_belief_var)
                else:
                    prev = GaussianBelief(traj.mean_post[t - 1, i], traj.var_post[t - 1, i])
                    predicted = predict(
                        prev, p.a_schedule[t - 1], p.b_schedule[t - 1],
                        truths[i].u_schedule[t - 1], p.q_schedule[t - 1],
                    )
                assert predicted.mean == pytest.approx(traj.mean_pred[t, i], abs=1e-12)
                assert predicted.variance == pytest.approx(traj.var_pred[t, i], abs=1e-12)
                nbr_scores = [traj.y[t, j] for j in neighbors(traj.snapshots[t], i)]
                state = update(predicted, traj.y[t, i], nbr_scores, p.r_schedule[t])
                assert state.posterior.mean == pytest.approx(traj.mean_post[t, i], abs=1e-10)
                assert state.posterior.variance == pytest.approx(traj.var_post[t, i], abs=1e-12)
                assert state.degree_used == traj.degree[t, i]

    def test_truth_draws_shared_across_population_sizes(self):
        # truth and observation streams are client-keyed, so the first
        # clients' paths match between a 3-client and a 6-client run
        base = dict(horizon=4, a_schedule=0.9, q_schedule=0.2, r_schedule=1.0)
        p3 = self.make_params(n_clients=3, **base)
        p6 = self.make_params(n_clients=6, **base)
        t3 = init_population(p3, "uniform", [ReplicationStreams(8, 0).init_score(i) for i in range(3)])
        t6 = init_population(p6, "uniform", [ReplicationStreams(8, 0).init_score(i) for i in range(6)])
        a = run_filter(p3, t3, ReplicationStreams(8, 0))
        b = run_filter(p6, t6, ReplicationStreams(8, 0))
        assert np.array_equal(a.x[:, :3], b.x[:, :3])
        assert np.array_equal(a.y[:, :3], b.y[:, :3])
