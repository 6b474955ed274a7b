"""Ground-truth credit dynamics and the noisy view the lender gets of them.

True scores follow a scalar linear recursion driven by Gaussian process
noise; observations add independent Gaussian noise on top. Every random
draw comes from a numpy Generator handed in by the caller. The substream
helpers at the bottom give each (replication, client, purpose) its own
independent stream, so runs replay bit-identically and adding clients never
disturbs the truth, observation, or belief draws of existing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when a model parameter is outside its documented range."""


def _as_schedule(value, length: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(length, arr.item())
    if arr.shape != (length,):
        raise ParameterError(
            f"{name} must be a scalar or a length-{length} sequence, got shape {arr.shape}"
        )
    return arr


@dataclass
class ModelParams:
    """Scalar constants and per-step schedules of the scoring model.

    ``a_schedule[k]``, ``b_schedule[k]`` and ``q_schedule[k]`` weight the
    transition from step k to step k+1, so they have length ``horizon``.
    ``r_schedule[t]`` is the observation-noise variance at step t and has
    length ``horizon + 1``. Scalars broadcast to full schedules.

    ``prior_mean`` is the common prior mean used by the risk-prediction
    filter; it defaults to ``score_cap / 2``.
    """

    n_clients: int
    horizon: int
    a_schedule: np.ndarray | float = 1.0
    b_schedule: np.ndarray | float = 0.0
    q_schedule: np.ndarray | float = 0.0
    r_schedule: np.ndarray | float = 1.0
    nu: float = 1.0
    score_cap: float = 15.0
    initial_belief_var: float = 1.0
    prior_mean: float | None = None

    def __post_init__(self):
        if int(self.n_clients) != self.n_clients or self.n_clients < 1:
            raise ParameterError(f"n_clients must be an integer >= 1, got {self.n_clients}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterError(f"horizon must be an integer >= 1, got {self.horizon}")
        self.n_clients = int(self.n_clients)
        self.horizon = int(self.horizon)
        self.a_schedule = _as_schedule(self.a_schedule, self.horizon, "a_schedule")
        self.b_schedule = _as_schedule(self.b_schedule, self.horizon, "b_schedule")
        self.q_schedule = _as_schedule(self.q_schedule, self.horizon, "q_schedule")
        self.r_schedule = _as_schedule(self.r_schedule, self.horizon + 1, "r_schedule")
        if np.any(self.a_schedule <= 0.0) or np.any(self.a_schedule > 1.0):
            raise ParameterError("every a(t) must lie in (0, 1]")
        if np.any(self.b_schedule < 0.0):
            raise ParameterError("every b(t) must be >= 0")
        if np.any(self.q_schedule < 0.0):
            raise ParameterError("every Q_t must be >= 0")
        if np.any(self.r_schedule <= 0.0):
            raise ParameterError("every R_t must be > 0")
        if not 0.0 < self.nu <= 1.0:
            raise ParameterError(f"nu must lie in (0, 1], got {self.nu}")
        if self.score_cap <= 0.0:
            raise ParameterError(f"score_cap must be > 0, got {self.score_cap}")
        if self.initial_belief_var <= 0.0:
            raise ParameterError(
                f"initial_belief_var must be > 0, got {self.initial_belief_var}"
            )
        if self.prior_mean is None:
            self.prior_mean = self.score_cap / 2.0
        self.prior_mean = float(self.prior_mean)


@dataclass
class ClientTruth:
    """One client's initial true score plus its attribute-change schedule."""

    x: float
    u_schedule: np.ndarray | None = None


@dataclass(frozen=True)
class GaussianBelief:
    """A (mean, variance) pair; the belief representation used everywhere."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0.0:
            raise ParameterError(f"belief variance must be > 0, got {self.variance}")


@dataclass
class Trajectory:
    """Per-client time series recorded by one simulated replication.

    All arrays are shaped ``(horizon + 1, n_clients)`` and indexed by step t
    on the first axis. ``y`` is NaN where a scenario draws no attribute
    observations, and the published columns are None for the filter scenario.
    ``snapshots[t]`` holds the step-t network when networks were retained
    (None entries where no network exists, e.g. step 0 of the scoring loop).
    """

    estimator: str
    x: np.ndarray
    y: np.ndarray
    mean_pred: np.ndarray
    var_pred: np.ndarray
    mean_post: np.ndarray
    var_post: np.ndarray
    degree: np.ndarray
    published_mean: np.ndarray | None = None
    published_var: np.ndarray | None = None
    snapshots: list | None = None

    @property
    def n_steps(self) -> int:
        return self.x.shape[0]

    @property
    def n_clients(self) -> int:
        return self.x.shape[1]


def step_truth(x_prev: float, u_prev: float, a: float, b: float, q: float, rng) -> float:
    """Advance one true score a single step: a*x + b*u plus N(0, q) noise.

    With q = 0 the draw collapses to zero and the step is deterministic.
    """
    if q < 0.0:
        raise ParameterError(f"process-noise variance must be >= 0, got {q}")
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in (0, 1], got {a}")
    return a * x_prev + b * u_prev + rng.normal(0.0, math.sqrt(q))


def observe(x: float, r: float, rng) -> float:
    """Return a noisy reading x + v with v ~ N(0, r)."""
    if not r > 0.0:
        raise ParameterError(f"observation-noise variance must be > 0, got {r}")
    return x + rng.normal(0.0, math.sqrt(r))


def init_population(params: ModelParams, mode, rng=None) -> list[ClientTruth]:
    """Create the initial population of true scores.

    ``mode`` is one of:

    * ``"uniform"``: N i.i.d. scores from Uniform[0, score_cap];
    * ``"stratified"``: one uniform draw per width-score_cap/N bin, so the
      population is uniform on [0, score_cap] with a locally flat empirical
      density (the large-N idealization of the uniform population);
    * an explicit sequence of scores, each in [0, score_cap].

    For the random modes ``rng`` is a Generator, or a sequence of per-client
    Generators when the caller wants client draws isolated from each other.
    """
    n = params.n_clients
    if isinstance(mode, str):
        if mode not in ("uniform", "stratified"):
            raise ParameterError(f"unknown population mode {mode!r}")
        if params.score_cap <= 3.0:
            raise ParameterError(
                f"{mode} population requires score_cap > 3 "
                f"(got {params.score_cap})"
            )
        if rng is None:
            raise ParameterError(f"{mode} population mode needs an rng")
        rngs = rng if isinstance(rng, (list, tuple)) else [rng] * n
        if len(rngs) != n:
            raise ParameterError("need one generator per client")
        if mode == "uniform":
            scores = [float(rngs[i].uniform(0.0, params.score_cap)) for i in range(n)]
        else:
            width = params.score_cap / n
            scores = [float(rngs[i].uniform(i * width, (i + 1) * width)) for i in range(n)]
    else:
        scores = [float(s) for s in mode]
        if len(scores) != n:
            raise ParameterError(
                f"explicit population has {len(scores)} scores, expected {n}"
            )
        for s in scores:
            if not 0.0 <= s <= params.score_cap:
                raise ParameterError(
                    f"explicit score {s} outside [0, {params.score_cap}]"
                )
    return [ClientTruth(x=s, u_schedule=np.zeros(params.horizon)) for s in scores]


def init_belief(truth: ClientTruth, p0: float, rng) -> GaussianBelief:
    """Initial estimate for one client: mean ~ N(true score, p0), variance p0."""
    if not p0 > 0.0:
        raise ParameterError(f"initial belief variance must be > 0, got {p0}")
    return GaussianBelief(mean=float(rng.normal(truth.x, math.sqrt(p0))), variance=p0)


# Substream purposes. Each (replication, purpose, client) triple gets its own
# deterministic stream, so truth/observation/belief draws for a client do not
# move when clients are added or another estimator consumes its own streams.
_INIT_SCORE, _PROCESS, _OBSERVATION, _BELIEF, _NETWORK = range(5)


class ReplicationStreams:
    """Named, independent random substreams for one Monte Carlo replication."""

    def __init__(self, master_seed: int, replication: int = 0):
        if not 0 <= int(master_seed) < 2**64:
            raise ParameterError(f"master seed must fit in 64 unsigned bits, got {master_seed}")
        if replication < 0:
            raise ParameterError(f"replication index must be >= 0, got {replication}")
        self.master_seed = int(master_seed)
        self.replication = int(replication)

    def _stream(self, purpose: int, index: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.replication, purpose, index),
        )
        return np.random.default_rng(seq)

    def init_score(self, client: int) -> np.random.Generator:
        return self._stream(_INIT_SCORE, client)

    def process_noise(self, client: int) -> np.random.Generator:
        return self._stream(_PROCESS, client)

    def observation_noise(self, client: int) -> np.random.Generator:
        return self._stream(_OBSERVATION, client)

    def belief(self, client: int) -> np.random.Generator:
        return self._stream(_BELIEF, client)

    def network(self) -> np.random.Generator:
        return self._stream(_NETWORK)


def population_streams(streams: ReplicationStreams, n_clients: int) -> list[np.random.Generator]:
    """Per-client init-score generators, one per client index."""
    return [streams.init_score(i) for i in range(n_clients)]
