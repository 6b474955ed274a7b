"""The five figure kinds rendered from netcredit CSV exports.

network    one period's directed graph, nodes colored by true score
estimation true scores (sorted) overlaid with estimates at chosen steps
variance   posterior/corrected variance per client over time
mse_crlb   per-client MSE against the CRLB at two steps
errorbox   box plot of final-step errors per client

Rendering is read-only over its inputs and deterministic: figure geometry is
fixed and date metadata is stripped from vector outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# stable element ids in SVG output; rendering must be deterministic
matplotlib.rcParams["svg.hashsalt"] = "netcredit"

import matplotlib.pyplot as plt
import numpy as np

from .csvtable import FigureError, load_table, require_columns

FIGURE_KINDS = ("network", "estimation", "variance", "mse_crlb", "errorbox")


@dataclass
class FigureSpec:
    """What to draw, from which CSVs, into which file."""

    kind: str
    inputs: list[Path]
    output: Path
    t: int = 15
    times: tuple[int, ...] = (1, 5, 15)
    estimator: str | None = None
    replication: int = 0
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")
        if not self.inputs:
            raise FigureError("no input CSVs given")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)
        if self.output.suffix == "":
            self.output = self.output.with_suffix(".svg")


def _save(fig, spec: FigureSpec) -> Path:
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    metadata = None
    if spec.output.suffix == ".svg":
        metadata = {"Date": None}
    elif spec.output.suffix == ".pdf":
        metadata = {"CreationDate": None}
    fig.savefig(spec.output, dpi=spec.dpi, metadata=metadata)
    plt.close(fig)
    return spec.output


def _pick_replication(table, spec, path):
    require_columns(table, ["replication"], path)
    mask = table["replication"] == spec.replication
    if not np.any(mask):
        raise FigureError(f"{path}: no rows for replication {spec.replication}")
    return {name: col[mask] for name, col in table.items()}


def _grid(table, value_column, path):
    """Reshape long-form (t, client, value) rows to a (T+1, N) array."""
    t = table["t"].astype(int)
    client = table["client"].astype(int)
    steps, n = t.max() + 1, client.max() + 1
    grid = np.full((steps, n), np.nan)
    grid[t, client] = table[value_column]
    if np.any(np.isnan(grid)):
        raise FigureError(f"{path}: ragged table for column {value_column!r}")
    return grid


def _render_network(spec: FigureSpec):
    if len(spec.inputs) < 2:
        raise FigureError("network figure needs the edge CSV and the trajectory CSV")
    edge_path, traj_path = spec.inputs[0], spec.inputs[1]
    edges = load_table(edge_path)
    require_columns(edges, ["t", "i", "j"], edge_path)
    mask = edges["t"].astype(int) == spec.t
    if not np.any(mask):
        raise FigureError(f"{edge_path}: no edges at step {spec.t}")
    src = edges["i"].astype(int)[mask]
    dst = edges["j"].astype(int)[mask]

    traj = load_table(traj_path)
    require_columns(traj, ["replication", "t", "client", "x_true"], traj_path)
    rep = _pick_replication(traj, spec, traj_path)
    at_t = rep["t"].astype(int) == spec.t
    clients = rep["client"].astype(int)[at_t]
    truths = rep["x_true"][at_t]
    order = np.argsort(clients)
    truths = truths[order]
    n = len(truths)

    angles = 2 * math.pi * np.arange(n) / n
    xs, ys = np.cos(angles), np.sin(angles)
    fig, ax = plt.subplots(figsize=(7, 7))
    for i, j in zip(src, dst):
        ax.plot([xs[i], xs[j]], [ys[i], ys[j]], color="gray", alpha=0.15, lw=0.6, zorder=1)
    scatter = ax.scatter(xs, ys, c=truths, cmap="viridis", s=60, zorder=2)
    fig.colorbar(scatter, ax=ax, label="true score")
    ax.set_title(f"directed network at step t={spec.t} ({n} clients, {mask.sum()} edges)")
    ax.set_aspect("equal")
    ax.axis("off")
    return _save(fig, spec)


def _render_estimation(spec: FigureSpec):
    path = spec.inputs[0]
    table = load_table(path)
    require_columns(table, ["replication", "t", "client", "x_true", "mean_post"], path)
    rep = _pick_replication(table, spec, path)
    truth = _grid(rep, "x_true", path)
    estimate = _grid(rep, "mean_post", path)
    times = [t for t in spec.times if t < truth.shape[0]]
    if not times:
        raise FigureError(f"{path}: none of the steps {spec.times} exist")

    clients = np.arange(truth.shape[1])
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(clients, truth[max(times)], color="red", lw=1.5, label="true score")
    markers = ["o", "s", "^", "v", "d"]
    for k, t in enumerate(times):
        ax.scatter(clients, estimate[t], s=14, marker=markers[k % len(markers)],
                   alpha=0.7, label=f"estimate t={t}")
    ax.set_xlabel("client (sorted by true score)")
    ax.set_ylabel("score")
    ax.set_title("score estimates against sorted truths")
    ax.legend()
    return _save(fig, spec)


def _render_variance(spec: FigureSpec):
    path = spec.inputs[0]
    table = load_table(path)
    require_columns(table, ["replication", "t", "client", "var_post"], path)
    rep = _pick_replication(table, spec, path)
    variance = _grid(rep, "var_post", path)
    fig, ax = plt.subplots(figsize=(8, 5))
    steps = np.arange(variance.shape[0])
    for i in range(variance.shape[1]):
        ax.plot(steps, variance[:, i], color="steelblue", alpha=0.25, lw=0.8)
    ax.set_xlabel("step t")
    ax.set_ylabel("estimate variance")
    ax.set_title("per-client variance of the estimate over time")
    return _save(fig, spec)


def _render_mse_crlb(spec: FigureSpec):
    path = spec.inputs[0]
    table = load_table(path)
    require_columns(table, ["estimator", "client", "t", "mse", "crlb"], path)
    if spec.estimator is not None:
        mask = table["estimator"] == spec.estimator
        if not np.any(mask):
            raise FigureError(f"{path}: no rows for estimator {spec.estimator!r}")
        table = {name: col[mask] for name, col in table.items()}
    t_col = table["t"].astype(int)
    times = [t for t in (10, spec.t) if np.any(t_col == t)]
    times = sorted(set(times)) or []
    if not times:
        raise FigureError(f"{path}: no rows at steps (10, {spec.t})")

    fig, axes = plt.subplots(1, len(times), figsize=(6 * len(times), 4.5), squeeze=False)
    for ax, t in zip(axes[0], times):
        at_t = t_col == t
        clients = table["client"].astype(int)[at_t]
        order = np.argsort(clients)
        finite_crlb = table["crlb"][at_t][order]
        ax.plot(clients[order], table["mse"][at_t][order], label="MSE", color="tab:blue")
        ax.plot(clients[order], finite_crlb, label="CRLB", color="tab:orange")
        ax.set_yscale("log")
        ax.set_xlabel("client (sorted by true score)")
        ax.set_ylabel("MSE / CRLB")
        ax.set_title(f"t = {t}")
        ax.legend()
    return _save(fig, spec)


def _render_errorbox(spec: FigureSpec):
    path = spec.inputs[0]
    table = load_table(path)
    require_columns(table, ["replication", "t", "client", "x_true", "mean_post"], path)
    at_t = table["t"].astype(int) == spec.t
    if not np.any(at_t):
        raise FigureError(f"{path}: no rows at step {spec.t}")
    clients = table["client"].astype(int)[at_t]
    errors = table["mean_post"][at_t] - table["x_true"][at_t]
    n = clients.max() + 1
    per_client = [errors[clients == i] for i in range(n)]

    fig, ax = plt.subplots(figsize=(9, 5))
    ax.boxplot(
        per_client,
        positions=np.arange(n),
        whis=1.5,
        flierprops={"marker": "+", "markersize": 3},
        medianprops={"color": "red"},
        showcaps=False,
        widths=0.6,
    )
    ax.axhline(0.0, color="gray", lw=0.8)
    step = max(1, n // 10)
    ax.set_xticks(np.arange(0, n, step))
    ax.set_xticklabels(np.arange(0, n, step))
    ax.set_xlabel("client (sorted by true score)")
    ax.set_ylabel("estimation error at t=%d" % spec.t)
    ax.set_title("error boxes across replications")
    return _save(fig, spec)


_RENDERERS = {
    "network": _render_network,
    "estimation": _render_estimation,
    "variance": _render_variance,
    "mse_crlb": _render_mse_crlb,
    "errorbox": _render_errorbox,
}


def render(spec: FigureSpec) -> Path:
    """Validate inputs and write the requested figure; raises FigureError
    (and writes nothing) when the inputs cannot produce it."""
    return _RENDERERS[spec.kind](spec)
