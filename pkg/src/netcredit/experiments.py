"""Scenario presets, the Monte Carlo driver, and deterministic orchestration.

An experiment is fully described by a flat key-value config (see
``CONFIG_KEYS``). Running one produces trajectory/summary/bounds/edge CSVs
plus a manifest that is itself a loadable config, so any run can be
reproduced byte-for-byte from its manifest alone.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import csvio
from .filtering import run_filter
from .interaction import precision_bounds, run_interaction
from .metrics import McSummary, aggregate
from .model import (
    ClientTruth,
    ModelParams,
    ParameterError,
    ReplicationStreams,
    Trajectory,
    init_population,
    population_streams,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCENARIOS = ("risk_prediction", "recursive_scoring")


class ConfigError(ValueError):
    """A config file or override is malformed or names unknown keys."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one Monte Carlo experiment."""

    params: ModelParams
    scenario: str = "recursive_scoring"
    replications: int = 100
    master_seed: int = 12345
    out_dir: Path | None = None
    truth_mode: str = "uniform"
    truth_values: tuple[float, ...] | None = None
    u_schedules: np.ndarray | None = None
    correction_optout: tuple[int, ...] = ()
    crlb_mode: str = "mean"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if self.truth_mode not in ("uniform", "stratified", "explicit"):
            raise ConfigError(
                f"truth_mode must be uniform, stratified, or explicit, got {self.truth_mode!r}"
            )
        if self.truth_mode == "explicit" and not self.truth_values:
            raise ConfigError("explicit truth_mode needs truth_values")
        if self.crlb_mode not in ("mean", "harmonic"):
            raise ConfigError(f"crlb_mode must be mean or harmonic, got {self.crlb_mode!r}")
        if self.u_schedules is not None:
            u = np.asarray(self.u_schedules, dtype=float)
            n, horizon = self.params.n_clients, self.params.horizon
            if u.ndim == 0:
                u = np.full((n, horizon), u.item())
            elif u.ndim == 1:
                if u.shape != (horizon,):
                    raise ConfigError(f"shared u schedule must have length {horizon}")
                u = np.tile(u, (n, 1))
            elif u.shape != (n, horizon):
                raise ConfigError(f"u schedules must have shape {(n, horizon)}, got {u.shape}")
            self.u_schedules = u
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


def preset_config(name: str, out_dir=None) -> ExperimentConfig:
    """A named parameter set reproducing the reference simulation study."""
    presets = {"paper-n50": 50, "paper-n100": 100}
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(presets)}")
    params = ModelParams(
        n_clients=presets[name],
        horizon=15,
        a_schedule=1.0,
        b_schedule=0.0,
        q_schedule=0.0,
        r_schedule=1.0,
        nu=1.0,
        score_cap=15.0,
        initial_belief_var=1.0,
    )
    return ExperimentConfig(
        params=params,
        scenario="recursive_scoring",
        replications=100,
        master_seed=12345,
        out_dir=out_dir,
        truth_mode="stratified",
    )


PRESET_NAMES = ("paper-n50", "paper-n100")


# ---------------------------------------------------------------------------
# Flat key-value config format
# ---------------------------------------------------------------------------

def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip() != ""]


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip() != ""]


# key -> (description, required)
CONFIG_KEYS = {
    "schema_version": ("config schema version, must be 1", True),
    "scenario": ("risk_prediction or recursive_scoring", True),
    "n_clients": ("number of clients N", True),
    "horizon": ("number of scoring periods T", True),
    "a": ("history weight, scalar or comma list of length T", False),
    "b": ("attribute weight, scalar or comma list of length T", False),
    "q": ("process-noise variance, scalar or comma list of length T", False),
    "r": ("observation-noise variance, scalar or comma list of length T+1", False),
    "nu": ("meeting probability in (0, 1]", False),
    "score_cap": ("upper end M of the score interval [0, M]", False),
    "initial_belief_var": ("variance of the initial estimate", False),
    "prior_mean": ("common prior mean for the filter scenario", False),
    "truth_mode": ("uniform, stratified, or explicit", False),
    "truth_values": ("comma list of N scores for explicit truth_mode", False),
    "u": ("attribute changes: scalar, comma list (T), or ';'-joined per-client lists", False),
    "correction_optout": ("comma list of client indices that skip correction", False),
    "replications": ("number of Monte Carlo replications", False),
    "master_seed": ("64-bit master seed", False),
    "crlb_mode": ("mean or harmonic pooling of per-replication CRLB", False),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in mapping:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def apply_overrides(mapping: dict[str, str], overrides) -> dict[str, str]:
    """Apply `key=value` override strings on top of a parsed mapping."""
    merged = dict(mapping)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        merged[key.strip()] = value.strip()
    return merged


def config_from_mapping(mapping: dict[str, str], out_dir=None) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a flat string mapping."""
    unknown = sorted(set(mapping) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(k for k, (_, required) in CONFIG_KEYS.items() if required and k not in mapping)
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    if mapping["schema_version"].strip() != str(SCHEMA_VERSION):
        raise ConfigError(
            f"unsupported schema_version {mapping['schema_version']!r}, expected {SCHEMA_VERSION}"
        )

    def get(key, default=None):
        value = mapping.get(key)
        return default if value in (None, "") else value

    try:
        n_clients = int(mapping["n_clients"])
        horizon = int(mapping["horizon"])
        params = ModelParams(
            n_clients=n_clients,
            horizon=horizon,
            a_schedule=_parse_float_list(get("a", "1.0")),
            b_schedule=_parse_float_list(get("b", "0.0")),
            q_schedule=_parse_float_list(get("q", "0.0")),
            r_schedule=_parse_float_list(get("r", "1.0")),
            nu=float(get("nu", "1.0")),
            score_cap=float(get("score_cap", "15.0")),
            initial_belief_var=float(get("initial_belief_var", "1.0")),
            prior_mean=None if get("prior_mean") is None else float(get("prior_mean")),
        )
        truth_values = get("truth_values")
        u_text = get("u")
        if u_text is None:
            u_schedules = None
        elif ";" in u_text:
            u_schedules = np.array([_parse_float_list(part) for part in u_text.split(";")])
        else:
            values = _parse_float_list(u_text)
            u_schedules = values[0] if len(values) == 1 else np.asarray(values)
        cfg = ExperimentConfig(
            params=params,
            scenario=get("scenario"),
            replications=int(get("replications", "100")),
            master_seed=int(get("master_seed", "12345")),
            out_dir=out_dir,
            truth_mode=get("truth_mode", "uniform"),
            truth_values=None if truth_values is None else tuple(_parse_float_list(truth_values)),
            u_schedules=u_schedules,
            correction_optout=tuple(_parse_int_list(get("correction_optout", ""))),
            crlb_mode=get("crlb_mode", "mean"),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (ConfigError, ParameterError)):
            raise
        raise ConfigError(f"invalid config value: {exc}") from exc
    return cfg


def _format_schedule(values: np.ndarray) -> str:
    values = np.asarray(values)
    if np.all(values == values.flat[0]):
        return csvio.format_number(float(values.flat[0]))
    return ",".join(csvio.format_number(float(v)) for v in values)


def mapping_from_config(cfg: ExperimentConfig) -> dict[str, str]:
    """Serialize a config back to its flat form; round-trips exactly."""
    p = cfg.params
    mapping = {
        "schema_version": str(SCHEMA_VERSION),
        "scenario": cfg.scenario,
        "n_clients": str(p.n_clients),
        "horizon": str(p.horizon),
        "a": _format_schedule(p.a_schedule),
        "b": _format_schedule(p.b_schedule),
        "q": _format_schedule(p.q_schedule),
        "r": _format_schedule(p.r_schedule),
        "nu": csvio.format_number(p.nu),
        "score_cap": csvio.format_number(p.score_cap),
        "initial_belief_var": csvio.format_number(p.initial_belief_var),
        "prior_mean": csvio.format_number(p.prior_mean),
        "truth_mode": cfg.truth_mode,
        "replications": str(cfg.replications),
        "master_seed": str(cfg.master_seed),
        "crlb_mode": cfg.crlb_mode,
    }
    if cfg.truth_values is not None:
        mapping["truth_values"] = ",".join(csvio.format_number(v) for v in cfg.truth_values)
    if cfg.u_schedules is not None:
        mapping["u"] = ";".join(_format_schedule(row) for row in np.atleast_2d(cfg.u_schedules))
    if cfg.correction_optout:
        mapping["correction_optout"] = ",".join(str(i) for i in cfg.correction_optout)
    return mapping


def load_config(path, out_dir=None) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    return config_from_mapping(parse_config_text(text, source=str(path)), out_dir=out_dir)


def write_manifest(path, cfg: ExperimentConfig, outputs: list[Path]) -> Path:
    """Write the resolved config as a reloadable manifest listing its outputs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# experiment manifest: reload with `netcredit montecarlo --config <this file>`"]
    lines += [f"{key} = {value}" for key, value in mapping_from_config(cfg).items()]
    lines.append("# outputs:")
    lines += [f"#   {out.name}" for out in outputs]
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# Monte Carlo driver
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectories: list[Trajectory]
    summary: McSummary | None
    files: dict[str, Path] = field(default_factory=dict)


def _sorted_by_truth(traj: Trajectory) -> Trajectory:
    """Relabel clients by ascending initial true score (rank order)."""
    order = np.argsort(traj.x[0], kind="stable")

    def pick(arr):
        return None if arr is None else arr[:, order]

    snapshots = traj.snapshots
    if snapshots is not None:
        from .network import NetworkSnapshot

        snapshots = [
            None
            if snap is None
            else NetworkSnapshot(
                adjacency=snap.adjacency[np.ix_(order, order)], time_index=snap.time_index
            )
            for snap in snapshots
        ]
    return Trajectory(
        estimator=traj.estimator,
        x=pick(traj.x),
        y=pick(traj.y),
        mean_pred=pick(traj.mean_pred),
        var_pred=pick(traj.var_pred),
        mean_post=pick(traj.mean_post),
        var_post=pick(traj.var_post),
        degree=pick(traj.degree),
        published_mean=pick(traj.published_mean),
        published_var=pick(traj.published_var),
        snapshots=snapshots,
    )


def run_replication(cfg: ExperimentConfig, replication: int, keep_networks: bool = False) -> Trajectory:
    """Run one seeded replication and relabel its clients by truth rank."""
    streams = ReplicationStreams(cfg.master_seed, replication)
    if cfg.truth_mode in ("uniform", "stratified"):
        truths = init_population(
            cfg.params, cfg.truth_mode, population_streams(streams, cfg.params.n_clients)
        )
    else:
        truths = init_population(cfg.params, list(cfg.truth_values))
    if cfg.u_schedules is not None:
        for i, truth in enumerate(truths):
            truth.u_schedule = cfg.u_schedules[i]

    if cfg.scenario == "risk_prediction":
        traj = run_filter(cfg.params, truths, streams, keep_networks=keep_networks)
    else:
        traj = run_interaction(
            cfg.params,
            truths,
            streams,
            keep_networks=keep_networks,
            correction_optout=cfg.correction_optout,
        )
    return _sorted_by_truth(traj)


def _replication_worker(args):
    cfg, replication, keep = args
    return run_replication(cfg, replication, keep_networks=keep)


def bound_rows(trajectories: list[Trajectory], cfg: ExperimentConfig):
    """Per-(replication, t, client) variance-bound records for the scoring loop."""
    p = cfg.params
    q_l = float(np.min(p.q_schedule))
    q_u = float(np.max(p.q_schedule))
    rows = []
    for rep, traj in enumerate(trajectories):
        for i in range(traj.n_clients):
            bounds = precision_bounds(
                q_l, q_u, p.n_clients, p.a_schedule, p.initial_belief_var, traj.degree[:, i]
            )
            for t in range(traj.n_steps):
                deg = traj.degree[t, i]
                rows.append(
                    (
                        rep, t, i,
                        traj.var_post[t, i],
                        bounds.lower,
                        bounds.upper[t],
                        1.0 / deg if deg >= 1 else float("inf"),
                    )
                )
    return rows


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run all replications, aggregate, and (if configured) write outputs.

    Replication r of an experiment depends only on (master_seed, r), so the
    result is identical no matter how many workers execute it. Networks of
    replication 0 are retained for the edge-list export.
    """
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    jobs = [(cfg, rep, rep == 0) for rep in range(cfg.replications)]
    if threads == 1 or cfg.replications == 1:
        trajectories = []
        for job in jobs:
            trajectories.append(_replication_worker(job))
            log.info("replication %d/%d done", job[1] + 1, cfg.replications)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            trajectories = []
            for rep, traj in enumerate(pool.map(_replication_worker, jobs)):
                trajectories.append(traj)
                log.info("replication %d/%d done", rep + 1, cfg.replications)

    summary = (
        aggregate(trajectories, cfg.scenario, crlb_mode=cfg.crlb_mode)
        if cfg.replications >= 2
        else None
    )

    files: dict[str, Path] = {}
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = cfg.scenario
        files["trajectory"] = csvio.write_trajectories(out / f"trajectory_{tag}.csv", trajectories)
        if summary is not None:
            files["summary"] = csvio.write_summary(out / f"summary_{tag}.csv", summary)
        if cfg.scenario == "recursive_scoring":
            files["bounds"] = csvio.write_bounds(
                out / f"bounds_{tag}.csv", bound_rows(trajectories, cfg)
            )
        if trajectories[0].snapshots is not None:
            files["edges"] = csvio.write_edges(out / f"edges_{tag}.csv", trajectories[0].snapshots)
        files["manifest"] = write_manifest(
            out / f"manifest_{tag}.cfg", cfg, sorted(files.values())
        )
    return ExperimentResult(config=cfg, trajectories=trajectories, summary=summary, files=files)


# ---------------------------------------------------------------------------
# Network-size comparison
# ---------------------------------------------------------------------------

@dataclass
class NComparison:
    """Per-score-bin IQR of the final-step error for two runs."""

    bin_edges: np.ndarray
    iqr_a: np.ndarray
    iqr_b: np.ndarray
    middle_mask: np.ndarray
    fraction_b_smaller: float


def _final_errors_by_bin(result: ExperimentResult, edges: np.ndarray):
    errors = [[] for _ in range(len(edges) - 1)]
    for traj in result.trajectories:
        t = traj.n_steps - 1
        idx = np.clip(np.digitize(traj.x[t], edges) - 1, 0, len(edges) - 2)
        err = traj.mean_post[t] - traj.x[t]
        for b, e in zip(idx.tolist(), err.tolist()):
            errors[b].append(e)
    return errors


def compare_n(
    result_a: ExperimentResult,
    result_b: ExperimentResult,
    bin_width: float = 1.0,
    middle_band: tuple[float, float] = (4.0, 12.0),
) -> NComparison:
    """Compare final-step error spread of two runs over true-score bins.

    Reports the IQR of the pooled error per bin for both runs and the
    fraction of middle-band bins where run B's IQR is strictly smaller.
    """
    pa, pb = result_a.config.params, result_b.config.params
    if pa.horizon != pb.horizon:
        raise ParameterError(
            f"horizons differ: {pa.horizon} vs {pb.horizon}"
        )
    cap = max(pa.score_cap, pb.score_cap)
    edges = np.arange(0.0, cap + bin_width, bin_width)
    iqrs = []
    for result in (result_a, result_b):
        by_bin = _final_errors_by_bin(result, edges)
        iqrs.append(
            np.array(
                [
                    np.nan
                    if len(errs) < 2
                    else float(np.subtract(*np.percentile(errs, [75.0, 25.0])))
                    for errs in by_bin
                ]
            )
        )
    iqr_a, iqr_b = iqrs
    lo, hi = middle_band
    middle = (edges[:-1] >= lo) & (edges[1:] <= hi) & ~np.isnan(iqr_a) & ~np.isnan(iqr_b)
    fraction = float(np.mean(iqr_b[middle] < iqr_a[middle])) if np.any(middle) else float("nan")
    return NComparison(
        bin_edges=edges,
        iqr_a=iqr_a,
        iqr_b=iqr_b,
        middle_mask=middle,
        fraction_b_smaller=fraction,
    )
