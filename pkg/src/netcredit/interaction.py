"""Recursive scoring loop with network feedback.

Each period runs four steps in order: the true scores evolve, the lender
publishes the propagated estimates, clients form a fresh network from their
own true score against the published scores of others, and the lender
corrects each estimate with the published scores of that client's neighbors:

    corrected mean = published + P/(1 + P*n) * sum_j (published_j - published)
    corrected var  = P / (1 + P*n)

with P the published variance and n the neighbor count. The correction is
again a precision-weighted fusion (one unit-variance term per neighbor), so
it shares the same oracle as the filter. The bound helpers at the bottom
compute the published-score envelope and the variance sandwich that hold
along any trajectory whose schedules satisfy their hypotheses.
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
    init_belief,
)
from .network import sample_network


class BoundNotApplicableError(ValueError):
    """The hypotheses of a bound are not met by the given schedules."""


@dataclass(frozen=True)
class InteractionState:
    """One client's period: published belief, corrected belief, degree used."""

    published: GaussianBelief
    corrected: GaussianBelief
    degree_used: int


def publish(prev_corrected: GaussianBelief, a: float, b: float, u: float, q: float) -> GaussianBelief:
    """Propagate last period's corrected belief into this period's publication."""
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in (0, 1], got {a}")
    if q < 0.0:
        raise ParameterError(f"process-noise variance must be >= 0, got {q}")
    return GaussianBelief(
        mean=a * prev_corrected.mean + b * u,
        variance=a * a * prev_corrected.variance + q,
    )


def correct(published_i: GaussianBelief, neighbor_published) -> GaussianBelief:
    """Condition a published belief on the neighbors' published scores."""
    scores = [float(s) for s in neighbor_published]
    n = len(scores)
    shrink = published_i.variance / (1.0 + published_i.variance * n)
    mean = published_i.mean + shrink * sum(s - published_i.mean for s in scores)
    return GaussianBelief(mean=mean, variance=shrink)


def run_interaction(
    params: ModelParams,
    truths: list[ClientTruth],
    streams: ReplicationStreams,
    keep_networks: bool = False,
    correction_optout=(),
) -> Trajectory:
    """Simulate one replication of the recursive scoring scenario.

    Initial corrected beliefs are drawn around each true score with variance
    ``initial_belief_var``; step 0 records them as both published and
    corrected. Clients listed in ``correction_optout`` keep their published
    belief each period instead of applying the network correction.
    """
    n = params.n_clients
    if len(truths) != n:
        raise ParameterError(f"got {len(truths)} truths for {n} clients")
    horizon = params.horizon
    optout = np.zeros(n, dtype=bool)
    for i in correction_optout:
        if not 0 <= i < n:
            raise ParameterError(f"opt-out client index {i} out of range")
        optout[i] = True

    u = np.stack(
        [
            np.zeros(horizon) if c.u_schedule is None else np.asarray(c.u_schedule, dtype=float)
            for c in truths
        ]
    )
    if u.shape != (n, horizon):
        raise ParameterError(f"u schedules must have shape {(n, horizon)}, got {u.shape}")

    w_std = np.stack([streams.process_noise(i).normal(size=horizon) for i in range(n)])
    net_rng = streams.network()

    shape = (horizon + 1, n)
    x_rec = np.empty(shape)
    pub_mean_rec = np.empty(shape)
    pub_var_rec = np.empty(shape)
    corr_mean_rec = np.empty(shape)
    corr_var_rec = np.empty(shape)
    degree = np.zeros(shape, dtype=int)
    snapshots: list | None = [None] if keep_networks else None

    x = np.array([c.x for c in truths], dtype=float)
    p0 = params.initial_belief_var
    corr_mean = np.array([init_belief(truths[i], p0, streams.belief(i)).mean for i in range(n)])
    corr_var = np.full(n, p0)

    x_rec[0] = x
    pub_mean_rec[0] = corr_mean
    pub_var_rec[0] = corr_var
    corr_mean_rec[0] = corr_mean
    corr_var_rec[0] = corr_var

    for t in range(1, horizon + 1):
        a = params.a_schedule[t - 1]
        b = params.b_schedule[t - 1]
        q = params.q_schedule[t - 1]

        x = a * x + b * u[:, t - 1] + np.sqrt(q) * w_std[:, t - 1]
        pub_mean = a * corr_mean + b * u[:, t - 1]
        pub_var = a * a * corr_var + q

        snap = sample_network(x, pub_mean, params.nu, t, net_rng)
        deg = snap.degrees
        shrink = pub_var / (1.0 + pub_var * deg)
        neighbor_sum = snap.adjacency @ pub_mean
        corr_mean = pub_mean + shrink * (neighbor_sum - deg * pub_mean)
        corr_var = shrink
        corr_mean[optout] = pub_mean[optout]
        corr_var[optout] = pub_var[optout]

        x_rec[t] = x
        pub_mean_rec[t] = pub_mean
        pub_var_rec[t] = pub_var
        corr_mean_rec[t] = corr_mean
        corr_var_rec[t] = corr_var
        degree[t] = deg
        if snapshots is not None:
            snapshots.append(snap)

    return Trajectory(
        estimator="recursive_scoring",
        x=x_rec,
        y=np.full(shape, np.nan),
        mean_pred=pub_mean_rec,
        var_pred=pub_var_rec,
        mean_post=corr_mean_rec,
        var_post=corr_var_rec,
        degree=degree,
        published_mean=pub_mean_rec,
        published_var=pub_var_rec,
        snapshots=snapshots,
    )


def prediction_bound(m0: float, a_schedule, bu_schedule, t: int) -> float:
    """Envelope on |published score| after t periods.

    Every correction is a convex combination of published scores, so the
    largest magnitude contracts by a(k) and grows by |b(k)u(k)| each period:

        bound(t) = m0 * prod_k a(k) + sum_k (prod_{l>k} a(l)) * |b(k)u(k)|

    with m0 the largest initial magnitude. Requires every a(k) in (0, 1);
    with a(k) = 1 the geometric contraction argument gives no finite limit.
    """
    a = np.asarray(a_schedule, dtype=float)
    bu = np.asarray(bu_schedule, dtype=float)
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if a.ndim != 1 or bu.ndim != 1 or a.size < t or bu.size < t:
        raise ParameterError(f"schedules must cover {t} steps")
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise BoundNotApplicableError("prediction bound requires every a(k) in (0, 1)")
    bound = float(m0)
    for k in range(t):
        bound = a[k] * bound + abs(bu[k])
    return bound


@dataclass(frozen=True)
class PrecisionBounds:
    """Variance sandwich for the corrected belief; ``upper`` is per step."""

    lower: float
    upper: np.ndarray
    lower_degenerate: bool


def precision_bounds(
    q_l: float,
    q_u: float,
    n_clients: int,
    a_schedule,
    p0: float,
    degree_history,
) -> PrecisionBounds:
    """Lower and upper bounds on the corrected variance along one trajectory.

    lower = 1 / (1/q_l + N) holds from step 1 on whenever every Q_t >= q_l > 0;
    a nonpositive q_l is reported as a degenerate lower bound of 0. The upper
    bound unrolls the per-step precision inequality with the contraction
    factor m0 = 1 / (abar^2 + (1/q_l + N) * q_u), abar the largest a(k):

        upper(t) = 1 / (m0^t / p0 + sum_{k=0..t} m0^k * degree(t-k))

    ``degree_history[t]`` is the client's neighbor count at step t (index 0
    is step 0, where the scoring loop has no network yet).
    """
    if q_u < q_l:
        raise ParameterError(f"need q_l <= q_u, got {q_l} > {q_u}")
    if q_u < 0.0:
        raise ParameterError(f"q_u must be >= 0, got {q_u}")
    if not p0 > 0.0:
        raise ParameterError(f"p0 must be > 0, got {p0}")
    if n_clients < 1:
        raise ParameterError(f"n_clients must be >= 1, got {n_clients}")
    a = np.asarray(a_schedule, dtype=float)
    if np.any(a <= 0.0) or np.any(a > 1.0):
        raise ParameterError("every a(k) must lie in (0, 1]")
    deg = np.asarray(degree_history, dtype=float)
    if deg.ndim != 1 or deg.size < 1:
        raise ParameterError("degree_history must be a non-empty vector")

    if q_l <= 0.0:
        lower = 0.0
        degenerate = True
        m0 = 0.0
    else:
        lower = 1.0 / (1.0 / q_l + n_clients)
        degenerate = False
        abar = float(np.max(a))
        m0 = 1.0 / (abar * abar + (1.0 / q_l + n_clients) * q_u)

    steps = deg.size
    powers = m0 ** np.arange(steps)
    inv_upper = powers / p0 + np.convolve(powers, deg)[:steps]
    with np.errstate(divide="ignore"):
        upper = 1.0 / inv_upper
    return PrecisionBounds(lower=lower, upper=upper, lower_degenerate=degenerate)
