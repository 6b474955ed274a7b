"""Estimator evaluation: Fisher information, CRLB, Monte Carlo aggregation.

The network likelihood of a true score given its observed edges has
curvature equal to the neighbor count, so the Fisher information is n and
the CRLB is 1/n (infinite without neighbors). Aggregation reduces a stack
of replications to per-(client, step) bias, variance, MSE, CRLB, and
box statistics of the error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterError, Trajectory


def fisher_information(n: int) -> float:
    """Information about a true score carried by one period's edges."""
    if n < 0:
        raise ParameterError(f"neighbor count must be >= 0, got {n}")
    return float(n)


def crlb(n: int) -> float:
    """Minimal variance of any unbiased estimator given n neighbors."""
    info = fisher_information(n)
    return 1.0 / info if info > 0 else float("inf")


@dataclass
class McSummary:
    """Per-(client, step) aggregates over replications.

    All arrays are shaped ``(n_clients, horizon + 1)``. ``variance`` is the
    population variance of the error (so mse = variance + bias^2 holds as an
    identity), ``crlb`` is the across-replication mean of 1/degree (infinite
    whenever any replication has no neighbors) or its harmonic variant, and
    ``outliers[client][t]`` lists errors beyond 1.5 IQR of the quartiles.
    """

    estimator: str
    n_replications: int
    x_true: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    mse: np.ndarray
    crlb: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    outliers: list[list[list[float]]]

    @property
    def n_clients(self) -> int:
        return self.bias.shape[0]

    @property
    def n_steps(self) -> int:
        return self.bias.shape[1]


def aggregate(trajectories: list[Trajectory], estimator: str, crlb_mode: str = "mean") -> McSummary:
    """Reduce replications to a per-(client, step) summary table.

    ``crlb_mode`` selects how the random per-replication CRLB 1/n is pooled:
    ``"mean"`` averages 1/n across replications, ``"harmonic"`` uses
    1 / mean(n).
    """
    if len(trajectories) < 2:
        raise ParameterError(f"need at least 2 replications, got {len(trajectories)}")
    if crlb_mode not in ("mean", "harmonic"):
        raise ParameterError(f"unknown crlb_mode {crlb_mode!r}")
    shape = trajectories[0].x.shape
    for traj in trajectories:
        if traj.x.shape != shape:
            raise ParameterError(
                f"replication shapes differ: {traj.x.shape} vs {shape}"
            )

    x = np.stack([traj.x for traj in trajectories])            # (reps, T+1, N)
    est = np.stack([traj.mean_post for traj in trajectories])
    deg = np.stack([traj.degree for traj in trajectories]).astype(float)
    err = est - x

    bias = err.mean(axis=0)
    variance = err.var(axis=0)
    mse = (err**2).mean(axis=0)
    q25, median, q75 = np.percentile(err, [25.0, 50.0, 75.0], axis=0)

    with np.errstate(divide="ignore"):
        if crlb_mode == "mean":
            per_rep = np.where(deg >= 1, 1.0 / np.maximum(deg, 1), np.inf)
            crlb_arr = per_rep.mean(axis=0)
        else:
            crlb_arr = 1.0 / deg.mean(axis=0)

    iqr = q75 - q25
    lo = q25 - 1.5 * iqr
    hi = q75 + 1.5 * iqr
    n_steps, n_clients = shape
    outliers = [
        [
            err[(err[:, t, i] < lo[t, i]) | (err[:, t, i] > hi[t, i]), t, i].tolist()
            for t in range(n_steps)
        ]
        for i in range(n_clients)
    ]

    return McSummary(
        estimator=estimator,
        n_replications=len(trajectories),
        x_true=x.mean(axis=0).T,
        bias=bias.T,
        variance=variance.T,
        mse=mse.T,
        crlb=crlb_arr.T,
        median=median.T,
        q25=q25.T,
        q75=q75.T,
        outliers=outliers,
    )
