"""End-to-end experiment: train, build trial sets, evaluate, write results."""

from __future__ import annotations

import json
import os
import platform
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .authloop import PolicyConfig, ReplaySource, SyntheticSource, run_scenario, write_trace_csv
from .baselines import CwmaWeights, cwma_train
from .config import ExperimentConfig, load_config
from .core import ConfigError
from .fusion import NormParams, WindowPolicy, zscore_apply, zscore_fit
from .metrics import det_curve, eer, write_det_csv
from .scheduler import ClassifierProfile, ClassifierSpec, SchedulerParams, schedule
from .synthdata import FusionSetup, ScoreModel, build_trials, draw_training, estimate_auth_prob
from .traces import parse_trace


def stream(seed: int, *tags: str) -> np.random.Generator:
    """Independent generator for a named purpose, stable across runs and platforms."""
    keys = tuple(zlib.crc32(t.encode("utf-8")) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=keys))


@dataclass
class Prepared:
    """Everything derived from the training draw."""

    model: ScoreModel
    setup: FusionSetup
    training: Dict[str, tuple]
    policy_config: PolicyConfig


def prepare(cfg: ExperimentConfig, train_cwma: bool = True) -> Prepared:
    cids = cfg.cids
    contexts = list(cfg.contexts)
    model = ScoreModel.from_eer_targets(
        {(cid, ctx): cc.eer[ctx] for cid, cc in cfg.classifiers.items() for ctx in contexts})
    training = draw_training(model, cids, contexts, cfg.train_trials, stream(cfg.seed, "training"))

    if all(cc.norm is not None for cc in cfg.classifiers.values()):
        norm = NormParams({cid: cc.norm for cid, cc in cfg.classifiers.items()})
    else:
        # pooled over contexts and labels, per classifier
        norm = zscore_fit({
            cid: np.concatenate([np.concatenate([g[:, j], i[:, j]]) for g, i in training.values()])
            for j, cid in enumerate(cids)})

    estimated = estimate_auth_prob(training, cids)
    specs = []
    for cid, cc in cfg.classifiers.items():
        probs = {ctx: cc.auth_prob.get(ctx, estimated[cid][ctx]) for ctx in contexts}
        specs.append(ClassifierSpec(cid, probs, cc.time_ms, cc.cost))
    profile = ClassifierProfile.from_specs(specs)
    policy = WindowPolicy(dict(cfg.contexts))
    sched = SchedulerParams(cfg.th_p, cfg.dt_delay_ms)

    cwma = None
    if train_cwma and "cwma" in cfg.approaches:
        normed = {ctx: tuple(_normalize(m, cids, norm) for m in (g, i)) for ctx, (g, i) in training.items()}
        cwma = cwma_train(normed, cids, cfg.grid_step)

    setup = FusionSetup(cids, profile, policy, norm, sched, cwma)
    pc = PolicyConfig(cfg.th_beta, policy, sched, norm, cfg.latch_lock)
    return Prepared(model, setup, training, pc)


def _normalize(raw: np.ndarray, cids, norm: NormParams) -> np.ndarray:
    return np.column_stack([zscore_apply(norm, cid, raw[:, j]) for j, cid in enumerate(cids)])


def _calcs(values: np.ndarray):
    mean = float(values.mean())
    return int(mean) if np.all(values == values[0]) else mean


def _dump(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "+-_." else "_" for c in name)


def run_experiment(config, out_dir: Optional[str] = None, seed: Optional[int] = None,
                   trials: Optional[int] = None) -> dict:
    """Run every configured approach in every context and write the results.

    ``config`` is a path (or bundled config name) or an :class:`ExperimentConfig`.
    Writes ``summary.json``, ``cwma_weights.json``, ``manifest.json``,
    ``det/<approach>__<context>.csv`` and, when the config has a scenario,
    ``trace.csv``. Returns the summary.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    if seed is not None:
        cfg.seed = seed
    if trials is not None:
        if trials <= 0:
            raise ConfigError(f"trials must be > 0, got {trials}")
        cfg.trials = trials
    out_dir = out_dir or cfg.output_dir
    os.makedirs(os.path.join(out_dir, "det"), exist_ok=True)

    prep = prepare(cfg)
    contexts = list(cfg.contexts)
    files: List[str] = []

    singles = {}
    for cid in cfg.cids:
        ts = build_trials(prep.model, f"single_{cid}", contexts, cfg.trials, prep.setup,
                          stream(cfg.seed, "trials", f"single_{cid}"))
        singles[cid] = {ctx: {"target_eer": cfg.classifiers[cid].eer[ctx], "eer": ts.eer(ctx)} for ctx in contexts}

    rows = []
    for approach in cfg.approaches:
        ts = build_trials(prep.model, approach, contexts, cfg.trials, prep.setup,
                          stream(cfg.seed, "trials", approach))
        row = {"approach": approach, "eer": {}, "score_calculations": None}
        calcs = []
        for ctx in contexts:
            ct = ts.contexts[ctx]
            curve = det_curve(ct.genuine, ct.impostor)
            row["eer"][ctx] = eer(curve)
            name = os.path.join("det", f"{_safe(approach)}__{_safe(ctx)}.csv")
            write_det_csv(os.path.join(out_dir, name), curve)
            files.append(name)
            calcs.append(ct.score_calcs)
        row["score_calculations"] = _calcs(np.concatenate(calcs))
        rows.append(row)

    setup = prep.setup
    summary = {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "train_trials": cfg.train_trials,
        "th_p": cfg.th_p,
        "th_beta": cfg.th_beta,
        "contexts": contexts,
        "classifiers": singles,
        "approaches": rows,
        "auth_prob": {cid: dict(setup.profile.classifiers[cid].auth_prob) for cid in cfg.cids},
        "schedule": {ctx: sorted(schedule(setup.profile, cfg.cids, ctx, cfg.contexts[ctx], setup.sched))
                     for ctx in contexts},
        "norm": setup.norm.to_dict(),
        "cwma_weights": setup.cwma.to_dict() if setup.cwma else None,
    }
    _dump(os.path.join(out_dir, "summary.json"), summary)
    files.append("summary.json")
    _dump(os.path.join(out_dir, "cwma_weights.json"), summary["cwma_weights"])
    files.append("cwma_weights.json")

    if cfg.scenario is not None:
        trace = run_scenario(cfg.scenario, prep.policy_config, setup.profile, SyntheticSource(prep.model))
        write_trace_csv(os.path.join(out_dir, "trace.csv"), trace)
        files.append("trace.csv")

    _dump(os.path.join(out_dir, "manifest.json"), _manifest(cfg, files))
    return summary


def _manifest(cfg: ExperimentConfig, files) -> dict:
    return {
        "package_version": __version__,
        "seed": cfg.seed,
        "config_sha256": cfg.digest,
        "trials": cfg.trials,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": sorted(files + ["manifest.json"]),
    }


def replay(config, trace_path, out_dir: Optional[str] = None, seed: Optional[int] = None) -> list:
    """Run the configured scenario with scores served from a recorded trace."""
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    if seed is not None:
        cfg.seed = seed
    if cfg.scenario is None:
        raise ConfigError("replay needs a [scenario] section in the config")
    records = parse_trace(trace_path)
    prep = prepare(cfg, train_cwma=False)
    trace = run_scenario(cfg.scenario, prep.policy_config, prep.setup.profile, ReplaySource(records))
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    write_trace_csv(os.path.join(out_dir, "trace.csv"), trace)
    _dump(os.path.join(out_dir, "manifest.json"), _manifest(cfg, ["trace.csv"]))
    return trace
