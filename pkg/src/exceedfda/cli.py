"""Command-line front end.

Subcommands: smooth, exceed, frechet, simulate, version. Configuration
comes from an optional JSON file (--config) with flag overrides winning;
unknown config keys are rejected. All outputs are atomic CSV/JSON files
and are byte-identical across runs for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ExceedanceError
from .exceedance import (
    default_delta,
    exceedance_chain,
    make_threshold_grid,
)
from .frechet import (
    fit_global,
    fit_local,
    predict_conditional,
    threshold_exceedance_function,
)
from .io import (
    fmt,
    read_covariates_csv,
    read_trajectories_csv,
    save_model,
    write_csv,
)
from .kernels import KernelSpec
from .simulation import (
    SimConfig,
    regression_spec,
    run_marginal_rmse,
    run_regression_rmse,
)
from .smoothing import (
    SmoothingConfig,
    cv_bandwidth,
    default_bandwidth,
    smooth_on_grid,
)

_COMMON_KEYS = {"out", "seed", "threads"}
_SMOOTH_KEYS = _COMMON_KEYS | {
    "input", "bandwidth", "bandwidth_rule", "grid_size", "kernel", "domain",
}
_EXCEED_KEYS = _SMOOTH_KEYS | {
    "threshold_grid_size", "prob_grid_size", "delta", "eps_tail",
}
_FRECHET_KEYS = _EXCEED_KEYS | {
    "covariates", "kind", "categorical", "frechet_bandwidth",
    "query", "query_count", "eta_thresholds",
}
_SIMULATE_KEYS = _COMMON_KEYS | {
    "mode", "setting", "model_kind", "n", "N", "B", "nu0",
    "time_grid_size", "dense_grid_size", "threshold_grid_size",
    "prob_grid_size", "bandwidth", "bandwidth_rule", "bandwidth_scale",
    "frechet_bandwidth", "n_query",
}

_SCHEMAS = {
    "smooth": _SMOOTH_KEYS,
    "exceed": _EXCEED_KEYS,
    "frechet": _FRECHET_KEYS,
    "simulate": _SIMULATE_KEYS,
}


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            try:
                cfg = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    allowed = _SCHEMAS[args.command]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {args.command}: {unknown}")
    # flags win over config-file values
    for key in allowed:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if cfg.get("threads") is None:
        env = os.environ.get("EXCEED_THREADS")
        if env:
            cfg["threads"] = int(env)
    cfg.setdefault("threads", 1)
    cfg.setdefault("out", ".")
    return cfg


def _smoothing_setup(trajs, cfg):
    kernel = KernelSpec(cfg.get("kernel", "epanechnikov"))
    rule = cfg.get("bandwidth_rule", "default")
    if rule not in ("default", "cv"):
        raise ConfigError("bandwidth_rule must be 'default' or 'cv'")
    n = len(trajs)
    out = []
    for traj in trajs:
        if cfg.get("bandwidth") is not None:
            h = float(cfg["bandwidth"])
        elif rule == "cv":
            from .simulation import bandwidth_candidates

            cands = bandwidth_candidates(traj.times.size, traj.domain_length)
            h = cv_bandwidth(traj, cands, SmoothingConfig(1.0, kernel))
        else:
            h = default_bandwidth(traj.times.size, n, traj.domain_length)
        out.append(SmoothingConfig(h, kernel))
    return out


def _smooth_all(trajs, cfg):
    grid_size = int(cfg.get("grid_size", 1001))
    return [
        smooth_on_grid(traj, grid_size, scfg)
        for traj, scfg in zip(trajs, _smoothing_setup(trajs, cfg))
    ]


def _read_input(cfg):
    if "input" not in cfg:
        raise ConfigError("missing required input CSV (flag --input or config)")
    domain = tuple(cfg["domain"]) if "domain" in cfg else None
    return read_trajectories_csv(cfg["input"], domain)


def cmd_smooth(args) -> int:
    cfg = _load_config(args)
    trajs = _read_input(cfg)
    smoothed = _smooth_all(trajs, cfg)
    rows = [
        (sm.subject_id, fmt(t), fmt(v))
        for sm in smoothed
        for t, v in zip(sm.grid, sm.values)
    ]
    write_csv(Path(cfg["out"]) / "smoothed.csv", ["subject_id", "t", "value"], rows)
    return 0


def _chains(trajs, cfg):
    smoothed = _smooth_all(trajs, cfg)
    lo = min(sm.values.min() for sm in smoothed)
    hi = max(sm.values.max() for sm in smoothed)
    if hi <= lo:
        hi = lo + 1.0
    grid = make_threshold_grid(lo, hi, int(cfg.get("threshold_grid_size", 201)))
    prob_size = int(cfg.get("prob_grid_size", 201))
    N_min = min(traj.times.size for traj in trajs)
    delta = cfg.get("delta")
    if delta is None:
        delta = default_delta(N_min, len(trajs), grid.range)
    eps_tail = float(cfg.get("eps_tail", 0.05))
    chains = [
        exceedance_chain(sm, grid, prob_size, float(delta), eps_tail)
        for sm in smoothed
    ]
    return smoothed, grid, chains


def cmd_exceed(args) -> int:
    cfg = _load_config(args)
    trajs = _read_input(cfg)
    _, grid, chains = _chains(trajs, cfg)
    out = Path(cfg["out"])
    ids = [t.subject_id for t in trajs]

    def threshold_rows(pick):
        return [
            (sid, fmt(u), fmt(v))
            for sid, ch in zip(ids, chains)
            for u, v in zip(grid.values, pick(ch))
        ]

    write_csv(out / "exceedance.csv", ["subject_id", "u", "value"],
              threshold_rows(lambda c: c.exceedance.s_values))
    write_csv(out / "distribution.csv", ["subject_id", "u", "value"],
              threshold_rows(lambda c: c.distribution.f_values))
    write_csv(out / "density.csv", ["subject_id", "u", "value"],
              threshold_rows(lambda c: c.density.d_values))
    write_csv(out / "quantile.csv", ["subject_id", "q", "value"],
              [(sid, fmt(q), fmt(v))
               for sid, ch in zip(ids, chains)
               for q, v in zip(ch.quantile.prob_grid, ch.quantile.q_values)])
    write_csv(out / "centrality.csv", ["subject_id", "u", "value"],
              [(sid, fmt(u), fmt(v))
               for sid, ch in zip(ids, chains)
               for u, v in zip(ch.centrality.grid, ch.centrality.h_values)])
    return 0


def _format_x(x) -> str:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    return ";".join(fmt(v) for v in arr)


def cmd_frechet(args) -> int:
    cfg = _load_config(args)
    trajs = _read_input(cfg)
    if "covariates" not in cfg:
        raise ConfigError("missing covariates CSV (flag --covariates or config)")
    ids, X, _cols = read_covariates_csv(cfg["covariates"], cfg.get("categorical"))
    by_id = {sid: k for k, sid in enumerate(ids)}
    missing = [t.subject_id for t in trajs if t.subject_id not in by_id]
    if missing:
        raise ConfigError(f"covariates missing for subjects: {missing[:5]}")
    X = X[[by_id[t.subject_id] for t in trajs]]

    smoothed, grid, chains = _chains(trajs, cfg)
    profiles = [ch.quantile for ch in chains]
    kind = cfg.get("kind", "global")
    N_min = min(t.times.size for t in trajs)
    tg_size = int(cfg.get("threshold_grid_size", 201))
    if kind == "global":
        model = fit_global(
            profiles, X, box=(grid.u_min, grid.u_max),
            threshold_grid_size=tg_size, n_obs_per_subject=N_min,
        )
    elif kind == "local":
        if X.shape[1] != 1:
            raise ConfigError("local regression requires exactly one covariate")
        model = fit_local(
            profiles, X[:, 0], bandwidth=cfg.get("frechet_bandwidth"),
            box=(grid.u_min, grid.u_max),
            threshold_grid_size=tg_size, n_obs_per_subject=N_min,
        )
    else:
        raise ConfigError("kind must be 'global' or 'local'")

    out = Path(cfg["out"])
    save_model(out / "model.json", model)

    if "query" in cfg:
        query = np.asarray(cfg["query"], dtype=float)
        if query.ndim == 1 and X.shape[1] > 1:
            raise ConfigError("query rows must match the covariate dimension")
    else:
        if X.shape[1] > 1:
            raise ConfigError("multivariate models need an explicit 'query' list")
        count = int(cfg.get("query_count", 50))
        lo, hi = float(X.min()), float(X.max())
        query = np.linspace(lo, hi, count)

    delta = cfg.get("delta")
    eps_tail = float(cfg.get("eps_tail", 0.05))
    rows = []
    for x in np.atleast_1d(query):
        cond = predict_conditional(
            model, x, None if delta is None else float(delta), eps_tail
        )
        xs = _format_x(x)
        rows += [(xs, fmt(q), fmt(v), "quantile")
                 for q, v in zip(cond.quantile.prob_grid, cond.quantile.q_values)]
        rows += [(xs, fmt(u), fmt(v), "exceedance")
                 for u, v in zip(cond.exceedance.grid.values,
                                 cond.exceedance.s_values)]
        rows += [(xs, fmt(u), fmt(v), "distribution")
                 for u, v in zip(cond.distribution.grid.values,
                                 cond.distribution.f_values)]
        rows += [(xs, fmt(u), fmt(v), "density")
                 for u, v in zip(cond.density.grid.values, cond.density.d_values)]
        rows += [(xs, fmt(u), fmt(v), "centrality")
                 for u, v in zip(cond.centrality.grid, cond.centrality.h_values)]
    for u in cfg.get("eta_thresholds", []):
        domain_length = trajs[0].domain_length
        eta = threshold_exceedance_function(model, float(u), query, domain_length)
        rows += [
            (_format_x(x), fmt(u), fmt(v), "eta") for x, v in zip(query, eta)
        ]
    write_csv(out / "predictions.csv", ["x", "coord", "value", "profile_kind"], rows)
    return 0


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if cfg.get("seed") is None:
        raise ConfigError("simulate requires an explicit seed (--seed or config)")
    mode = cfg.get("mode", "marginal")
    setting = str(cfg.get("setting", "I"))
    sim_kwargs = dict(
        n=int(cfg.get("n", 200)),
        B=int(cfg.get("B", 100 if mode == "marginal" else 50)),
        seed=int(cfg["seed"]),
        threads=int(cfg.get("threads", 1)),
    )
    for key in ("time_grid_size", "dense_grid_size", "threshold_grid_size",
                "prob_grid_size", "n_query"):
        if key in cfg:
            sim_kwargs[key] = int(cfg[key])
    for key in ("bandwidth", "bandwidth_scale", "frechet_bandwidth"):
        if cfg.get(key) is not None:
            sim_kwargs[key] = float(cfg[key])
    if "bandwidth_rule" in cfg:
        sim_kwargs["bandwidth_rule"] = cfg["bandwidth_rule"]

    Ns = [int(v) for v in _as_list(cfg.get("N", 500))]
    nu0s = [float(v) for v in _as_list(cfg.get("nu0", 0.05))]
    model_kind = cfg.get("model_kind", "global")

    table_rows, rep_rows = [], []
    for nu0 in nu0s:
        for N in Ns:
            sim = SimConfig(N=N, **sim_kwargs)
            if mode == "marginal":
                res = run_marginal_rmse(setting, sim, nu0)
                mean, sd = res.mean_rmse, float(res.rmse_by_subject.std(ddof=1))
                per_rep = None
            elif mode == "regression":
                spec = regression_spec(setting, model_kind, nu0)
                res = run_regression_rmse(model_kind, spec, sim, setting)
                mean, sd = res.mean_rmse, res.sd_rmse
                per_rep = res.rmse_by_replicate
            else:
                raise ConfigError("mode must be 'marginal' or 'regression'")
            table_rows.append(
                (setting, mode, model_kind if mode == "regression" else "",
                 sim.n, N, fmt(nu0), sim.B, fmt(mean), fmt(sd))
            )
            if per_rep is not None:
                rep_rows += [
                    (setting, mode, N, fmt(nu0), b, fmt(v))
                    for b, v in enumerate(per_rep)
                ]
            else:
                rep_rows += [
                    (setting, mode, N, fmt(nu0), i, fmt(v))
                    for i, v in enumerate(res.rmse_by_subject)
                ]
    out = Path(cfg["out"])
    write_csv(
        out / "table.csv",
        ["setting", "mode", "model_kind", "n", "N", "nu0", "B",
         "mean_rmse", "sd_rmse"],
        table_rows,
    )
    write_csv(
        out / "replicates.csv",
        ["setting", "mode", "N", "nu0", "index", "rmse"],
        rep_rows,
    )
    return 0


def cmd_version(_args) -> int:
    print(__version__)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exceedfda")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("smooth", help="reconstruct trajectories on a grid")
    common(sp)
    sp.add_argument("--input", help="long-format CSV (subject_id,t,z)")
    sp.add_argument("--bandwidth", type=float)
    sp.add_argument("--grid-size", dest="grid_size", type=int)
    sp.set_defaults(func=cmd_smooth)

    sp = sub.add_parser("exceed", help="exceedance profile chain per subject")
    common(sp)
    sp.add_argument("--input")
    sp.add_argument("--bandwidth", type=float)
    sp.set_defaults(func=cmd_exceed)

    sp = sub.add_parser("frechet", help="Frechet regression of exceedances")
    common(sp)
    sp.add_argument("--input")
    sp.add_argument("--covariates")
    sp.add_argument("--kind", choices=("global", "local"))
    sp.add_argument("--bandwidth", type=float)
    sp.set_defaults(func=cmd_frechet)

    sp = sub.add_parser("simulate", help="Monte Carlo RMSE tables")
    common(sp)
    sp.add_argument("--mode", choices=("marginal", "regression"))
    sp.add_argument("--setting", choices=("I", "II"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--B", type=int)
    sp.add_argument("--nu0", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("version", help="print version")
    sp.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExceedanceError as exc:
        msg = " ".join(str(exc).split())
        print(f"error:{type(exc).__name__}:{msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        msg = " ".join(str(exc).split())
        print(f"error:IOError:{msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
