"""Pipeline driver: simulate -> dataset -> train/sghmc -> predict/evaluate.

Every command is a pure function of (config file, flags, input files); reruns
write byte-identical artifacts. The effective merged configuration is echoed
into each output manifest. Usage errors exit 2, runtime failures exit 1.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import gridsim as gs
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import SplitSpec, add_input_noise, build_test, build_train, split_pools
from .deeponet import (
    DeepOnetConfig,
    ensemble_predict,
    init_prob,
    init_vanilla,
    predict,
    predict_prob,
)
from .sghmc import BayesConfig, SamplerError, sghmc_run
from .train import TrainConfig, TrainingError, fit
from . import uqeval


DEFAULTS = {
    "paths": {"workdir": "runs/desk"},
    "simulate": {
        "load_scale": "1.51",
        "monitor_bus": "4",
        "n1": "300",
        "n2": "300",
        "seed": "0",
        "h_max": "1e-3",
    },
    "dataset": {
        "m": "200",
        "queries": "10",
        "train_frac": "0.7",
        "seed": "0",
        "query_seed": "0",
    },
    "deeponet": {"q": "100", "width": "100", "depth": "3"},
    "train": {
        "epochs": "2000",
        "batch_size": "256",
        "lr": "1e-4",
        "patience": "200",
        "factor": "0.5",
        "min_lr": "1e-6",
        "seed": "0",
    },
    "sghmc": {
        "sigma_l": "0.01",
        "prior_lambda": "1.0",
        "eps_t": "1e-5",
        "c": "10.0",
        "b_hat": "0.0",
        "m_inner": "50",
        "n_outer": "2000",
        "burn_in": "1000",
        "thinning": "5",
        "m_ensemble": "100",
        "batch_size": "256",
        "seed": "0",
    },
    "evaluate": {
        "level": "0.95",
        "count": "100",
        "seed": "0",
        "bands": "5",
        "chi_max": "3.0",
        "chi_points": "31",
        "y_star": "2.2",
        "noise_seed": "0",
    },
}


class UsageError(ValueError):
    pass


def load_config(path: str | None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    if not Path(path).exists():
        raise UsageError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(path)
    for section in parser.sections():
        if section not in cfg:
            raise UsageError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in cfg[section]:
                raise UsageError(f"unknown config key [{section}] {key}")
            cfg[section][key] = value
    return cfg


def apply_overrides(cfg: dict, args, mapping: dict) -> None:
    for dest, (section, key) in mapping.items():
        value = getattr(args, dest, None)
        if value is not None:
            cfg[section][key] = str(value)


def cfg_get(cfg, section, key, cast=str):
    raw = cfg[section][key]
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"bad value for [{section}] {key}: {raw!r}")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def workdir(cfg) -> Path:
    return Path(cfg["paths"]["workdir"])


def _model_from_cfg(cfg) -> gs.GridModel:
    return gs.build_model(
        load_scale=cfg_get(cfg, "simulate", "load_scale", float),
        monitor_bus=cfg_get(cfg, "simulate", "monitor_bus", int),
    )


def _net_cfg(cfg, m: int) -> DeepOnetConfig:
    return DeepOnetConfig(
        m=m,
        q=cfg_get(cfg, "deeponet", "q", int),
        width=cfg_get(cfg, "deeponet", "width", int),
        depth=cfg_get(cfg, "deeponet", "depth", int),
    )


# ---------------------------------------------------------------- simulate

def cmd_simulate(cfg) -> int:
    n1 = cfg_get(cfg, "simulate", "n1", int)
    n2 = cfg_get(cfg, "simulate", "n2", int)
    if n1 < 1 or n2 < 1:
        raise UsageError(f"pool sizes must be >= 1, got n1={n1}, n2={n2}")
    seed = cfg_get(cfg, "simulate", "seed", int)
    h_max = cfg_get(cfg, "simulate", "h_max", float)
    model = _model_from_cfg(cfg)
    out = workdir(cfg) / "pools"
    out.mkdir(parents=True, exist_ok=True)
    report = {}
    for kind, count, sub in (("N1", n1, 10), ("N2", n2, 11)):
        offset = 0 if kind == "N1" else n1
        pool, rejections = gs.generate_pool(
            model, count, kind, seed=[seed, sub], id_offset=offset, h_max=h_max
        )
        path = out / f"{kind.lower()}.jsonl"
        gs.save_pool(path, pool, model, seed=[seed, sub], rejections=rejections)
        report[kind] = {
            "accepted": len(pool),
            "rejections": rejections,
            "file": path.name,
            "sha256": file_sha256(path),
        }
        print(f"{kind}: {len(pool)} trajectories accepted, {rejections} rejected")
    write_json(out / "simulate.manifest.json",
               {"config": cfg, "model_hash": gs.model_hash(model), "pools": report})
    return 0


def _load_pools(cfg):
    out = workdir(cfg) / "pools"
    pools = {}
    for kind in ("n1", "n2"):
        path = out / f"{kind}.jsonl"
        if not path.exists():
            raise UsageError(f"missing pool file {path}; run `simulate` first")
        pools[kind] = gs.load_pool(path)[0]
    return pools["n1"], pools["n2"]


# ----------------------------------------------------------------- dataset

def _split_spec(cfg) -> SplitSpec:
    return SplitSpec(
        m=cfg_get(cfg, "dataset", "m", int),
        Q=cfg_get(cfg, "dataset", "queries", int),
        train_frac=cfg_get(cfg, "dataset", "train_frac", float),
    )


def cmd_dataset(cfg) -> int:
    spec = _split_spec(cfg)
    seed = cfg_get(cfg, "dataset", "seed", int)
    n1, n2 = _load_pools(cfg)
    train, test = split_pools(n1, n2, spec.train_frac, seed=seed)
    out = workdir(cfg) / "dataset"
    out.mkdir(parents=True, exist_ok=True)
    pools_dir = workdir(cfg) / "pools"
    doc = {
        "train_ids": [tr.traj_id for tr in train],
        "test_ids": [tr.traj_id for tr in test],
        "spec": {
            "m": spec.m, "queries": spec.Q, "train_frac": spec.train_frac,
            "t_cl": spec.t_cl, "T": spec.T, "n_mesh": spec.n_mesh,
        },
        "seeds": {"split": seed, "queries": cfg_get(cfg, "dataset", "query_seed", int)},
        "pool_sha256": {k: file_sha256(pools_dir / f"{k}.jsonl") for k in ("n1", "n2")},
        "config": cfg,
    }
    write_json(out / "split.json", doc)
    print(f"split: {len(train)} train / {len(test)} test trajectories")
    return 0


def _load_split(cfg):
    path = workdir(cfg) / "dataset" / "split.json"
    if not path.exists():
        raise UsageError(f"missing split manifest {path}; run `dataset` first")
    doc = json.loads(path.read_text())
    n1, n2 = _load_pools(cfg)
    by_id = {tr.traj_id: tr for tr in n1 + n2}
    try:
        train = [by_id[i] for i in doc["train_ids"]]
        test = [by_id[i] for i in doc["test_ids"]]
    except KeyError as e:
        raise UsageError(f"split references unknown trajectory id {e}")
    s = doc["spec"]
    spec = SplitSpec(m=s["m"], Q=s["queries"], train_frac=s["train_frac"],
                     t_cl=s["t_cl"], T=s["T"], n_mesh=s["n_mesh"])
    return train, test, spec, doc


# ------------------------------------------------------------------- train

def _write_csv(path, header, rows):
    uqeval.write_csv(path, header, rows)


def cmd_train(cfg, kind: str) -> int:
    if kind not in ("vanilla", "prob"):
        raise UsageError(f"--model must be vanilla or prob, got {kind!r}")
    train_pool, _, spec, doc = _load_split(cfg)
    net = _net_cfg(cfg, spec.m)
    samples = build_train(train_pool, spec, seed=doc["seeds"]["queries"])
    config = TrainConfig(
        epochs=cfg_get(cfg, "train", "epochs", int),
        batch_size=cfg_get(cfg, "train", "batch_size", int),
        lr=cfg_get(cfg, "train", "lr", float),
        patience=cfg_get(cfg, "train", "patience", int),
        factor=cfg_get(cfg, "train", "factor", float),
        min_lr=cfg_get(cfg, "train", "min_lr", float),
        seed=cfg_get(cfg, "train", "seed", int),
    )
    init = init_vanilla if kind == "vanilla" else init_prob
    params0 = init(net, seed=config.seed)
    params, history = fit(kind, params0, net, samples, config)
    out = workdir(cfg) / "models"
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / f"{kind}.ckpt"
    meta = {"kind": kind, "m": net.m, "q": net.q, "width": net.width, "depth": net.depth}
    save_checkpoint(ckpt, params, meta=meta)
    _write_csv(out / f"{kind}_loss.csv",
               ["epoch", "train_loss", "val_loss", "lr"],
               [[h["epoch"], h["train_loss"], h["val_loss"], h["lr"]] for h in history])
    best = min(h["train_loss"] for h in history)
    write_json(out / f"{kind}.manifest.json", {
        "config": cfg, "checkpoint_sha256": file_sha256(ckpt),
        "best_train_loss": best, "epochs": len(history),
        "n_train_samples": len(samples),
    })
    print(f"{kind}: trained {len(history)} epochs, best loss {best:.6g}")
    return 0


# ------------------------------------------------------------------- sghmc

def cmd_sghmc(cfg, init_path: str | None) -> int:
    train_pool, _, spec, doc = _load_split(cfg)
    net = _net_cfg(cfg, spec.m)
    init_path = Path(init_path or (workdir(cfg) / "models" / "vanilla.ckpt"))
    if not init_path.exists():
        raise UsageError(f"missing init checkpoint {init_path}")
    params0, meta = load_checkpoint(init_path)
    if meta.get("m") != net.m or meta.get("q") != net.q:
        raise UsageError(
            f"checkpoint geometry (m={meta.get('m')}, q={meta.get('q')}) does not "
            f"match the dataset/deeponet config (m={net.m}, q={net.q})"
        )
    bc = BayesConfig(
        sigma_l=cfg_get(cfg, "sghmc", "sigma_l", float),
        prior_lambda=cfg_get(cfg, "sghmc", "prior_lambda", float),
        eps_t=cfg_get(cfg, "sghmc", "eps_t", float),
        C=cfg_get(cfg, "sghmc", "c", float),
        B_hat=cfg_get(cfg, "sghmc", "b_hat", float),
        m_inner=cfg_get(cfg, "sghmc", "m_inner", int),
        n_outer=cfg_get(cfg, "sghmc", "n_outer", int),
        burn_in=cfg_get(cfg, "sghmc", "burn_in", int),
        thinning=cfg_get(cfg, "sghmc", "thinning", int),
        M=cfg_get(cfg, "sghmc", "m_ensemble", int),
        batch_size=cfg_get(cfg, "sghmc", "batch_size", int),
        seed=cfg_get(cfg, "sghmc", "seed", int),
    )
    samples = build_train(train_pool, spec, seed=doc["seeds"]["queries"])
    members, trace = sghmc_run(params0, net, samples, bc)
    out = workdir(cfg) / "models" / "bayes"
    out.mkdir(parents=True, exist_ok=True)
    names, hashes = [], {}
    meta = dict(meta)
    meta["kind"] = "bayes-member"
    for i, member in enumerate(members):
        path = out / f"member_{i:03d}.ckpt"
        save_checkpoint(path, member, meta=meta)
        names.append(path.name)
        hashes[path.name] = file_sha256(path)
    _write_csv(out / "utrace.csv", ["iteration", "potential"],
               [[k, trace[k]] for k in sorted(trace)])
    write_json(out / "chain.manifest.json", {
        "config": cfg, "members": names, "member_sha256": hashes,
        "init": str(init_path), "init_sha256": file_sha256(init_path),
        "final_potential": trace[max(trace)] if trace else None,
    })
    print(f"sghmc: retained ensemble of {len(members)}, "
          f"final U = {trace[max(trace)]:.6g}")
    return 0


# ------------------------------------------------------- prediction loading

def _load_predictor(cfg, which: str):
    """Returns (net_cfg, predict_fn) with predict_fn(u, ys, level) ->
    (mean, std, lo, hi); std/lo/hi are None for the vanilla model."""
    models = workdir(cfg) / "models"
    if which in ("vanilla", "prob"):
        path = models / f"{which}.ckpt"
        if not path.exists():
            raise UsageError(f"missing checkpoint {path}; run `train --model {which}`")
        params, meta = load_checkpoint(path)
        net = DeepOnetConfig(m=meta["m"], q=meta["q"], width=meta["width"],
                             depth=meta["depth"])
        if which == "vanilla":
            def fn(u, ys, level):
                return predict(params, net, u, ys), None, None, None
        else:
            def fn(u, ys, level):
                mu, sigma = predict_prob(params, net, u, ys)
                lo, hi = uqeval.confidence_interval(mu, sigma, level)
                return mu, sigma, lo, hi
        return net, fn
    if which == "bayes":
        manifest = models / "bayes" / "chain.manifest.json"
        if not manifest.exists():
            raise UsageError(f"missing ensemble manifest {manifest}; run `sghmc`")
        doc = json.loads(manifest.read_text())
        members, meta = [], None
        for name in doc["members"]:
            params, meta = load_checkpoint(models / "bayes" / name)
            members.append(params)
        if len(members) < 2:
            raise UsageError("ensemble has fewer than 2 members")
        net = DeepOnetConfig(m=meta["m"], q=meta["q"], width=meta["width"],
                             depth=meta["depth"])

        def fn(u, ys, level):
            mean, std, _ = ensemble_predict(members, net, u, ys)
            lo, hi = uqeval.confidence_interval(mean, std, level)
            return mean, std, lo, hi
        return net, fn
    raise UsageError(f"--which must be vanilla, prob or bayes, got {which!r}")


def _check_geometry(net: DeepOnetConfig, spec: SplitSpec):
    if net.m != spec.m:
        raise UsageError(
            f"checkpoint expects m={net.m} sensors, dataset provides m={spec.m}"
        )


def _maybe_noisy(u, traj_id, sigma, noise_seed):
    if sigma == 0.0:
        return u
    return add_input_noise(u, sigma, np.random.default_rng([noise_seed, 5, traj_id]))


# ---------------------------------------------------------------- evaluate

def cmd_evaluate(cfg, which: str, noise: float) -> int:
    _, test_pool, spec, _ = _load_split(cfg)
    net, predict_fn = _load_predictor(cfg, which)
    _check_geometry(net, spec)
    level = cfg_get(cfg, "evaluate", "level", float)
    count = cfg_get(cfg, "evaluate", "count", int)
    seed = cfg_get(cfg, "evaluate", "seed", int)
    noise_seed = cfg_get(cfg, "evaluate", "noise_seed", int)
    if noise < 0:
        raise UsageError(f"--noise must be >= 0, got {noise}")

    cases = build_test(test_pool, spec)
    ids = [tr.traj_id for tr in test_pool]
    if count < len(cases):
        sel = np.sort(np.random.default_rng([seed, 4]).choice(
            len(cases), size=count, replace=False))
    else:
        sel = np.arange(len(cases))

    reports, mus, sigmas, truths = [], [], [], []
    for k in sel:
        u, mesh, truth = cases[k]
        u = _maybe_noisy(u, ids[k], noise, noise_seed)
        mean, std, lo, hi = predict_fn(u, mesh, level)
        l1, l2 = uqeval.relative_errors(mean, truth)
        eps = np.nan if std is None else uqeval.epsilon_ratio(lo, hi, truth)
        reports.append(uqeval.TrajectoryReport(ids[k], l1, l2, eps))
        if std is not None:
            mus.append(mean)
            sigmas.append(std)
            truths.append(truth)

    out = workdir(cfg) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    tag = which if noise == 0.0 else f"{which}_noise"
    agg = uqeval.aggregate_reports(reports)
    _write_csv(out / f"{tag}_report.csv",
               ["count", "mean_L1", "sd_L1", "mean_L2", "sd_L2", "eps_ratio"],
               [[agg["count"], agg["mean_L1"], agg["sd_L1"], agg["mean_L2"],
                 agg["sd_L2"], agg["eps_ratio"]]])
    _write_csv(out / f"{tag}_per_traj.csv",
               ["traj_id", "l1_pct", "l2_pct", "eps_ratio"],
               [[r.traj_id, r.l1, r.l2, r.eps_ratio] for r in reports])

    outputs = [f"{tag}_report.csv", f"{tag}_per_traj.csv"]
    if mus:
        chis = np.linspace(0.0, cfg_get(cfg, "evaluate", "chi_max", float),
                           cfg_get(cfg, "evaluate", "chi_points", int))
        emp, ana = uqeval.chi_coverage_curve(mus, sigmas, truths, chis)
        _write_csv(out / f"{tag}_chi.csv", ["chi", "empirical", "analytic"],
                   [[float(c), float(e), float(a)] for c, e, a in zip(chis, emp, ana)])
        outputs.append(f"{tag}_chi.csv")

    n_bands = min(cfg_get(cfg, "evaluate", "bands", int), len(sel))
    band_rows = []
    for k in sel[:n_bands]:
        u, mesh, truth = cases[k]
        u = _maybe_noisy(u, ids[k], noise, noise_seed)
        mean, std, lo, hi = predict_fn(u, mesh, level)
        for j in range(len(mesh)):
            band_rows.append([
                ids[k], float(mesh[j]), float(truth[j]), float(mean[j]),
                np.nan if lo is None else float(lo[j]),
                np.nan if hi is None else float(hi[j]),
            ])
    _write_csv(out / f"{tag}_bands.csv",
               ["traj_id", "y", "truth", "mean", "lower", "upper"], band_rows)
    outputs.append(f"{tag}_bands.csv")

    write_json(out / f"{tag}_eval.manifest.json", {
        "config": cfg, "which": which, "noise_sigma": noise, "level": level,
        "aggregate": {k: (None if isinstance(v, float) and np.isnan(v) else v)
                      for k, v in agg.items()},
        "outputs": {name: file_sha256(out / name) for name in outputs},
    })
    print(f"{which}: mean L2 {agg['mean_L2']:.3f}% "
          f"(sd {agg['sd_L2']:.3f}), eps_ratio {agg['eps_ratio']:.2f}%"
          + (f" at sigma={noise}" if noise else ""))
    return 0


# ------------------------------------------------------------------ alarms

def cmd_alarms(cfg, which: str, y_star: float | None) -> int:
    if which == "vanilla":
        raise UsageError("alarm analysis needs a predictive band; use prob or bayes")
    _, test_pool, spec, _ = _load_split(cfg)
    net, predict_fn = _load_predictor(cfg, which)
    _check_geometry(net, spec)
    level = cfg_get(cfg, "evaluate", "level", float)
    y_star = cfg_get(cfg, "evaluate", "y_star", float) if y_star is None else y_star
    cases = build_test(test_pool, spec)
    items = []
    for tr, (u, _, _) in zip(test_pool, cases):
        ys = np.array([y_star])
        mean, _, lo, hi = predict_fn(u, ys, level)
        truth = float(np.interp(y_star, tr.times, tr.values))
        items.append((tr.traj_id, float(mean[0]), float(lo[0]), float(hi[0]), truth))
    outcomes, summary = uqeval.alarm_analysis(items, y_star=y_star, t_cl=spec.t_cl)
    out = workdir(cfg) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"{which}_alarms.csv",
               ["traj_id", "truth", "mean", "lower", "upper",
                "fn", "tp", "fp_conservative", "fp_nonconservative", "tn"],
               [[o.traj_id, o.truth, o.mean, o.lower, o.upper,
                 int(o.flags["FN"]), int(o.flags["TP"]),
                 int(o.flags["FP_conservative"]),
                 int(o.flags["FP_nonconservative"]), int(o.flags["TN"])]
                for o in outcomes])
    write_json(out / f"{which}_alarms.manifest.json",
               {"config": cfg, "which": which, "level": level, "summary": summary})
    print(f"{which} alarms at y*={y_star}: FN={summary['FN']} "
          f"FP_cons={summary['FP_conservative']} "
          f"FP_noncons={summary['FP_nonconservative']} "
          f"TP={summary['TP']} TN={summary['TN']}")
    return 0


# --------------------------------------------------------------- residuals

def cmd_residuals(cfg, which: str) -> int:
    _, test_pool, spec, _ = _load_split(cfg)
    net, predict_fn = _load_predictor(cfg, which)
    _check_geometry(net, spec)
    res = []
    for u, mesh, truth in build_test(test_pool, spec):
        mean = predict_fn(u, mesh, 0.95)[0]
        res.append(mean - truth)
    res = np.concatenate(res)
    report = uqeval.residual_normality(res)
    out = workdir(cfg) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"{which}_residuals.csv", ["bin_left", "bin_right", "count"],
               [[float(report.hist_edges[i]), float(report.hist_edges[i + 1]),
                 int(report.hist_counts[i])] for i in range(len(report.hist_counts))])
    write_json(out / f"{which}_residuals.manifest.json", {
        "config": cfg, "which": which, "n": int(res.size),
        "skewness": report.skewness, "excess_kurtosis": report.excess_kurtosis,
        "normal": report.normal,
    })
    print(f"{which} residuals: skew {report.skewness:+.3f}, "
          f"excess kurtosis {report.excess_kurtosis:+.3f}, "
          f"verdict {'normal' if report.normal else 'not normal'}")
    return 0


# ----------------------------------------------------------------- predict

def cmd_predict(cfg, which: str, traj_id: int | None, out_path: str | None) -> int:
    _, test_pool, spec, _ = _load_split(cfg)
    net, predict_fn = _load_predictor(cfg, which)
    _check_geometry(net, spec)
    level = cfg_get(cfg, "evaluate", "level", float)
    by_id = {tr.traj_id: tr for tr in test_pool}
    if traj_id is None:
        traj_id = min(by_id)
    if traj_id not in by_id:
        raise UsageError(f"trajectory {traj_id} is not in the test split")
    tr = by_id[traj_id]
    idx = [t.traj_id for t in test_pool].index(traj_id)
    u, mesh, truth = build_test([test_pool[idx]], spec)[0]
    mean, std, lo, hi = predict_fn(u, mesh, level)
    out = workdir(cfg) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    path = Path(out_path) if out_path else out / f"predict_{which}_{traj_id}.csv"
    nanv = float("nan")
    _write_csv(path, ["y", "truth", "mean", "std", "lower", "upper"],
               [[float(mesh[j]), float(truth[j]), float(mean[j]),
                 nanv if std is None else float(std[j]),
                 nanv if lo is None else float(lo[j]),
                 nanv if hi is None else float(hi[j])] for j in range(len(mesh))])
    print(f"wrote {path}")
    return 0


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridonet",
        description="Operator-learning pipeline for post-fault voltage prediction",
    )
    p.add_argument("--config", help="INI config file; flags override its keys")
    p.add_argument("--workdir", help="artifact directory (default runs/desk)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate N-1/N-2 trajectory pools")
    s.add_argument("--n1", type=int, help="N-1 pool size")
    s.add_argument("--n2", type=int, help="N-2 pool size")
    s.add_argument("--seed", type=int, help="pool sampling seed")
    s.add_argument("--load-scale", type=float, help="uniform load/generation stress")
    s.add_argument("--monitor-bus", type=int, help="recorded bus (0-based)")
    s.add_argument("--h-max", type=float, help="max RK4 step, s")

    s = sub.add_parser("dataset", help="split pools and fix dataset seeds")
    s.add_argument("--m", type=int, help="branch sensors")
    s.add_argument("--queries", type=int, help="training queries per trajectory")
    s.add_argument("--train-frac", type=float, help="train fraction")
    s.add_argument("--seed", type=int, help="split shuffle seed")
    s.add_argument("--query-seed", type=int, help="query sampling seed")

    s = sub.add_parser("train", help="train the vanilla or probabilistic model")
    s.add_argument("--model", required=True, choices=("vanilla", "prob"))
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--patience", type=int)
    s.add_argument("--seed", type=int)

    s = sub.add_parser("sghmc", help="sample a posterior weight ensemble")
    s.add_argument("--init", help="starting checkpoint (default models/vanilla.ckpt)")
    s.add_argument("--eps-t", type=float, help="step size")
    s.add_argument("--c", type=float, help="friction constant")
    s.add_argument("--sigma-l", type=float, help="likelihood noise scale")
    s.add_argument("--n-outer", type=int)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--thinning", type=int)
    s.add_argument("--m-ensemble", type=int, help="retained ensemble size")
    s.add_argument("--batch-size", type=int)
    s.add_argument("--seed", type=int)

    s = sub.add_parser("predict", help="write one trajectory's predicted curve")
    s.add_argument("--which", required=True, choices=("vanilla", "prob", "bayes"))
    s.add_argument("--traj-id", type=int, help="test trajectory id (default: lowest)")
    s.add_argument("--out", help="output CSV path")

    s = sub.add_parser("evaluate", help="error/coverage reports on the test split")
    s.add_argument("--which", required=True, choices=("vanilla", "prob", "bayes"))
    s.add_argument("--noise", type=float, default=0.0,
                   help="sensor noise sigma (pu) applied to test inputs")
    s.add_argument("--count", type=int, help="random test trajectories to score")
    s.add_argument("--level", type=float, help="CI level")
    s.add_argument("--seed", type=int, help="test subsample seed")

    s = sub.add_parser("alarms", help="under-voltage alarm classification at y*")
    s.add_argument("--which", required=True, choices=("vanilla", "prob", "bayes"))
    s.add_argument("--y-star", type=float, help="probe time, s")
    s.add_argument("--level", type=float, help="CI level")

    s = sub.add_parser("residuals", help="residual normality report")
    s.add_argument("--which", default="vanilla",
                   choices=("vanilla", "prob", "bayes"))
    return p


_OVERRIDES = {
    "simulate": {"n1": ("simulate", "n1"), "n2": ("simulate", "n2"),
                 "seed": ("simulate", "seed"), "load_scale": ("simulate", "load_scale"),
                 "monitor_bus": ("simulate", "monitor_bus"), "h_max": ("simulate", "h_max")},
    "dataset": {"m": ("dataset", "m"), "queries": ("dataset", "queries"),
                "train_frac": ("dataset", "train_frac"), "seed": ("dataset", "seed"),
                "query_seed": ("dataset", "query_seed")},
    "train": {"epochs": ("train", "epochs"), "batch_size": ("train", "batch_size"),
              "lr": ("train", "lr"), "patience": ("train", "patience"),
              "seed": ("train", "seed")},
    "sghmc": {"eps_t": ("sghmc", "eps_t"), "c": ("sghmc", "c"),
              "sigma_l": ("sghmc", "sigma_l"), "n_outer": ("sghmc", "n_outer"),
              "burn_in": ("sghmc", "burn_in"), "thinning": ("sghmc", "thinning"),
              "m_ensemble": ("sghmc", "m_ensemble"),
              "batch_size": ("sghmc", "batch_size"), "seed": ("sghmc", "seed")},
    "predict": {},
    "evaluate": {"count": ("evaluate", "count"), "level": ("evaluate", "level"),
                 "seed": ("evaluate", "seed")},
    "alarms": {"level": ("evaluate", "level")},
    "residuals": {},
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.workdir:
            cfg["paths"]["workdir"] = args.workdir
        apply_overrides(cfg, args, _OVERRIDES[args.command])
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "dataset":
            return cmd_dataset(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.model)
        if args.command == "sghmc":
            return cmd_sghmc(cfg, args.init)
        if args.command == "predict":
            return cmd_predict(cfg, args.which, args.traj_id, args.out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.which, args.noise)
        if args.command == "alarms":
            return cmd_alarms(cfg, args.which, args.y_star)
        if args.command == "residuals":
            return cmd_residuals(cfg, args.which)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (TrainingError, SamplerError, gs.SimulationDiverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
