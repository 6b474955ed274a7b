"""CSV export and import with locale-independent, bit-stable formatting.

Floats are written with 12 significant digits via ``repr``-free ``%.12g``
formatting so re-runs under the same seed produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .metrics import McSummary
from .model import ParameterError, Trajectory

FILTER_COLUMNS = [
    "replication", "t", "client", "x_true", "y_obs",
    "mean_pred", "var_pred", "mean_post", "var_post", "degree",
]
INTERACTION_COLUMNS = FILTER_COLUMNS + ["mean_published", "var_published"]
SUMMARY_COLUMNS = [
    "estimator", "client", "t", "x_true", "bias", "variance",
    "mse", "crlb", "median", "q25", "q75",
]
BOUNDS_COLUMNS = ["replication", "t", "client", "p_hat", "p_l", "p_u", "crlb"]
EDGE_COLUMNS = ["t", "i", "j"]


def format_number(value) -> str:
    """12-significant-digit decimal rendering; ints stay ints."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _open_writer(path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_trajectories(path, trajectories: list[Trajectory]) -> Path:
    """Write replications of one estimator as a long-form trajectory table."""
    if not trajectories:
        raise ParameterError("no trajectories to write")
    interaction = trajectories[0].published_mean is not None
    columns = INTERACTION_COLUMNS if interaction else FILTER_COLUMNS
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(columns)
        for rep, traj in enumerate(trajectories):
            for t in range(traj.n_steps):
                for i in range(traj.n_clients):
                    row = [
                        rep, t, i,
                        format_number(traj.x[t, i]),
                        format_number(traj.y[t, i]),
                        format_number(traj.mean_pred[t, i]),
                        format_number(traj.var_pred[t, i]),
                        format_number(traj.mean_post[t, i]),
                        format_number(traj.var_post[t, i]),
                        int(traj.degree[t, i]),
                    ]
                    if interaction:
                        row += [
                            format_number(traj.published_mean[t, i]),
                            format_number(traj.published_var[t, i]),
                        ]
                    writer.writerow(row)
    return Path(path)


def write_summary(path, summary: McSummary) -> Path:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(SUMMARY_COLUMNS)
        for i in range(summary.n_clients):
            for t in range(summary.n_steps):
                writer.writerow(
                    [
                        summary.estimator, i, t,
                        format_number(summary.x_true[i, t]),
                        format_number(summary.bias[i, t]),
                        format_number(summary.variance[i, t]),
                        format_number(summary.mse[i, t]),
                        format_number(summary.crlb[i, t]),
                        format_number(summary.median[i, t]),
                        format_number(summary.q25[i, t]),
                        format_number(summary.q75[i, t]),
                    ]
                )
    return Path(path)


def write_bounds(path, rows) -> Path:
    """Write (replication, t, client, p_hat, p_l, p_u, crlb) records."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(BOUNDS_COLUMNS)
        for rep, t, client, p_hat, p_l, p_u, crlb_value in rows:
            writer.writerow(
                [
                    rep, t, client,
                    format_number(p_hat),
                    format_number(p_l),
                    format_number(p_u),
                    format_number(crlb_value),
                ]
            )
    return Path(path)


def write_edges(path, snapshots) -> Path:
    """Write the retained snapshots of one replication as (t, i, j) rows."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(EDGE_COLUMNS)
        for snap in snapshots:
            if snap is None:
                continue
            rows, cols = np.nonzero(snap.adjacency)
            for i, j in zip(rows.tolist(), cols.tolist()):
                writer.writerow([snap.time_index, i, j])
    return Path(path)


def read_trajectories(path) -> list[Trajectory]:
    """Rebuild per-replication trajectories from a trajectory CSV."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParameterError(f"{path}: empty trajectory file") from None
        if header == INTERACTION_COLUMNS:
            interaction = True
        elif header == FILTER_COLUMNS:
            interaction = False
        else:
            raise ParameterError(f"{path}: unrecognized trajectory header {header}")
        records = [row for row in reader if row]

    if not records:
        raise ParameterError(f"{path}: no data rows")
    reps = max(int(r[0]) for r in records) + 1
    steps = max(int(r[1]) for r in records) + 1
    n = max(int(r[2]) for r in records) + 1
    if len(records) != reps * steps * n:
        raise ParameterError(f"{path}: ragged trajectory table")

    def blank():
        return np.full((reps, steps, n), np.nan)

    x, y = blank(), blank()
    mean_pred, var_pred = blank(), blank()
    mean_post, var_post = blank(), blank()
    pub_mean, pub_var = blank(), blank()
    degree = np.zeros((reps, steps, n), dtype=int)
    for row in records:
        rep, t, i = int(row[0]), int(row[1]), int(row[2])
        x[rep, t, i] = float(row[3])
        y[rep, t, i] = float(row[4])
        mean_pred[rep, t, i] = float(row[5])
        var_pred[rep, t, i] = float(row[6])
        mean_post[rep, t, i] = float(row[7])
        var_post[rep, t, i] = float(row[8])
        degree[rep, t, i] = int(row[9])
        if interaction:
            pub_mean[rep, t, i] = float(row[10])
            pub_var[rep, t, i] = float(row[11])

    estimator = "recursive_scoring" if interaction else "risk_prediction"
    return [
        Trajectory(
            estimator=estimator,
            x=x[rep],
            y=y[rep],
            mean_pred=mean_pred[rep],
            var_pred=var_pred[rep],
            mean_post=mean_post[rep],
            var_post=var_post[rep],
            degree=degree[rep],
            published_mean=pub_mean[rep] if interaction else None,
            published_var=pub_var[rep] if interaction else None,
        )
        for rep in range(reps)
    ]
