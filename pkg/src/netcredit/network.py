"""Homophily network formation.

Each period, client i links to client j with probability
nu * exp(-(x_i - s_j)^2 / 2), where x_i is i's true score and s_j is the
score of j that i can see (a published estimate or a noisy reading). The
graph is directed and has no self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterError


@dataclass(frozen=True)
class NetworkSnapshot:
    """Directed boolean adjacency at one step; row i holds i's connections."""

    adjacency: np.ndarray
    time_index: int

    def __post_init__(self):
        adj = self.adjacency
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ParameterError(f"adjacency must be square, got shape {adj.shape}")
        if adj.dtype != np.bool_:
            raise ParameterError("adjacency must be boolean")
        if np.any(np.diagonal(adj)):
            raise ParameterError("adjacency must have an all-zero diagonal")

    @property
    def n_clients(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


def connection_probability(x_i, s_j, nu: float):
    """Edge probability nu * exp(-(x_i - s_j)^2 / 2); works elementwise."""
    if not 0.0 < nu <= 1.0:
        raise ParameterError(f"nu must lie in (0, 1], got {nu}")
    return nu * np.exp(-0.5 * (np.asarray(x_i, dtype=float) - np.asarray(s_j, dtype=float)) ** 2)


def sample_network(truths, published, nu: float, t: int, rng) -> NetworkSnapshot:
    """Draw one directed snapshot.

    For every ordered pair i != j, the edge i -> j is an independent
    Bernoulli draw with probability connection_probability(truths[i],
    published[j], nu).
    """
    truths = np.asarray(truths, dtype=float)
    published = np.asarray(published, dtype=float)
    if truths.ndim != 1 or truths.shape != published.shape:
        raise ParameterError(
            f"truths and published must be equal-length vectors, got "
            f"{truths.shape} and {published.shape}"
        )
    if truths.size < 1:
        raise ParameterError("need at least one client")
    probs = connection_probability(truths[:, None], published[None, :], nu)
    adjacency = rng.random(probs.shape) < probs
    np.fill_diagonal(adjacency, False)
    return NetworkSnapshot(adjacency=adjacency, time_index=int(t))


def neighbors(snap: NetworkSnapshot, i: int) -> list[int]:
    """Clients j that i is connected to in this snapshot."""
    if not 0 <= i < snap.n_clients:
        raise IndexError(f"client index {i} out of range for {snap.n_clients} clients")
    return np.flatnonzero(snap.adjacency[i]).tolist()


def edge_list(snap: NetworkSnapshot) -> list[tuple[int, int]]:
    """All directed edges (i, j) of a snapshot, row-major order."""
    rows, cols = np.nonzero(snap.adjacency)
    return list(zip(rows.tolist(), cols.tolist()))
