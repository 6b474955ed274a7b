"""Risk-prediction filter.

A recursive Bayesian filter over the published noisy scores plus the
network observations. Because every information source is Gaussian (the
network term acts as a unit-variance pseudo-observation of the true score),
the posterior stays Gaussian and the recursion is closed-form:

    predict:  mean = a*m + b*u,            var = a^2*P + q
    update:   K = P / (R + P + n*R*P)      (attribute gain)
              H = P*R / (R + P + n*R*P)    (per-neighbor gain)
              mean += K*(y_i - mean) + H * sum_j (y_j - mean)
              var   = (1 - K - n*H) * P

which is algebraically the precision-weighted fusion of the prediction with
the observation (variance R) and one unit-variance term per neighbor.
``fuse_gaussians`` implements that generic fusion independently and serves
as the test oracle for the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ClientTruth,
    GaussianBelief,
    ModelParams,
    ParameterError,
    ReplicationStreams,
    Trajectory,
)
from .network import sample_network


@dataclass(frozen=True)
class FilterState:
    """One client's filter step: prediction, posterior, and the gains used."""

    predicted: GaussianBelief
    posterior: GaussianBelief
    gain_obs: float
    gain_net: float
    degree_used: int


def predict(prev_posterior: GaussianBelief, a: float, b: float, u: float, q: float) -> GaussianBelief:
    """Propagate a belief through the linear dynamics."""
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in (0, 1], got {a}")
    if q < 0.0:
        raise ParameterError(f"process-noise variance must be >= 0, got {q}")
    return GaussianBelief(
        mean=a * prev_posterior.mean + b * u,
        variance=a * a * prev_posterior.variance + q,
    )


def gains(p_pred: float, r: float, n: int) -> tuple[float, float]:
    """Observation gain K and per-neighbor gain H for an update with n neighbors."""
    if not p_pred > 0.0:
        raise ParameterError(f"predicted variance must be > 0, got {p_pred}")
    if not r > 0.0:
        raise ParameterError(f"observation-noise variance must be > 0, got {r}")
    if n < 0:
        raise ParameterError(f"neighbor count must be >= 0, got {n}")
    denom = r + p_pred + n * r * p_pred
    return p_pred / denom, p_pred * r / denom


def update(predicted: GaussianBelief, y_i: float, neighbor_scores, r: float) -> FilterState:
    """Condition a predicted belief on the own observation and neighbor scores."""
    scores = [float(s) for s in neighbor_scores]
    n = len(scores)
    k, h = gains(predicted.variance, r, n)
    mean = (
        predicted.mean
        + k * (y_i - predicted.mean)
        + h * sum(s - predicted.mean for s in scores)
    )
    variance = (1.0 - k - n * h) * predicted.variance
    return FilterState(
        predicted=predicted,
        posterior=GaussianBelief(mean=mean, variance=variance),
        gain_obs=k,
        gain_net=h,
        degree_used=n,
    )


def fuse_gaussians(prior: GaussianBelief, likelihood_terms) -> GaussianBelief:
    """Precision-weighted product of a Gaussian prior with Gaussian evidence.

    ``likelihood_terms`` is a list of (mean, variance) pairs; an empty list
    returns the prior unchanged. This is the generic, brute-force fusion
    used as the independent oracle for the closed-form updates.
    """
    precision = 1.0 / prior.variance
    weighted_mean = prior.mean / prior.variance
    for mean, variance in likelihood_terms:
        if not variance > 0.0:
            raise ParameterError(f"evidence variance must be > 0, got {variance}")
        precision += 1.0 / variance
        weighted_mean += mean / variance
    return GaussianBelief(mean=weighted_mean / precision, variance=1.0 / precision)


def run_filter(
    params: ModelParams,
    truths: list[ClientTruth],
    streams: ReplicationStreams,
    keep_networks: bool = False,
) -> Trajectory:
    """Simulate one replication of the risk-prediction scenario.

    Step 0 conditions the common prior (prior_mean, initial_belief_var) on
    the first observations and network; every later step evolves the truths,
    predicts, observes, samples the network from true scores against the
    current noisy scores, and updates. Per-step network edges use the
    current published noisy scores of the partners.
    """
    n = params.n_clients
    if len(truths) != n:
        raise ParameterError(f"got {len(truths)} truths for {n} clients")
    horizon = params.horizon

    u = np.stack(
        [
            np.zeros(horizon) if c.u_schedule is None else np.asarray(c.u_schedule, dtype=float)
            for c in truths
        ]
    )
    if u.shape != (n, horizon):
        raise ParameterError(f"u schedules must have shape {(n, horizon)}, got {u.shape}")

    w_std = np.stack([streams.process_noise(i).normal(size=horizon) for i in range(n)])
    v_std = np.stack([streams.observation_noise(i).normal(size=horizon + 1) for i in range(n)])
    net_rng = streams.network()

    shape = (horizon + 1, n)
    out = {
        name: np.empty(shape)
        for name in ("x", "y", "mean_pred", "var_pred", "mean_post", "var_post")
    }
    degree = np.empty(shape, dtype=int)
    snapshots: list | None = [] if keep_networks else None

    x = np.array([c.x for c in truths], dtype=float)
    mean_post = np.full(n, params.prior_mean)
    var_post = np.full(n, params.initial_belief_var)

    for t in range(horizon + 1):
        if t == 0:
            mean_pred = mean_post.copy()
            var_pred = var_post.copy()
        else:
            a = params.a_schedule[t - 1]
            b = params.b_schedule[t - 1]
            q = params.q_schedule[t - 1]
            x = a * x + b * u[:, t - 1] + np.sqrt(q) * w_std[:, t - 1]
            mean_pred = a * mean_post + b * u[:, t - 1]
            var_pred = a * a * var_post + q

        r_t = params.r_schedule[t]
        y_t = x + np.sqrt(r_t) * v_std[:, t]

        snap = sample_network(x, y_t, params.nu, t, net_rng)
        deg = snap.degrees
        denom = r_t + var_pred + deg * r_t * var_pred
        k = var_pred / denom
        h = var_pred * r_t / denom
        neighbor_sum = snap.adjacency @ y_t
        mean_post = mean_pred + k * (y_t - mean_pred) + h * (neighbor_sum - deg * mean_pred)
        var_post = (1.0 - k - deg * h) * var_pred

        out["x"][t] = x
        out["y"][t] = y_t
        out["mean_pred"][t] = mean_pred
        out["var_pred"][t] = var_pred
        out["mean_post"][t] = mean_post
        out["var_post"][t] = var_post
        degree[t] = deg
        if snapshots is not None:
            snapshots.append(snap)

    return Trajectory(
        estimator="risk_prediction",
        x=out["x"],
        y=out["y"],
        mean_pred=out["mean_pred"],
        var_pred=out["var_pred"],
        mean_post=out["mean_post"],
        var_post=out["var_post"],
        degree=degree,
        snapshots=snapshots,
    )
