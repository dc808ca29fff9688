"""Command-line surface: scenario generation, runs, Monte-Carlo experiments."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import digraph, netgen, protocols, spectral, stats, topologies
from .dde_sim import SimConfig, detect_sync, detect_sync_auto, simulate, trajectory_to_csv
from .netgen import DelayMatrix

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_NO_SYNC = 3


class ConfigError(ValueError):
    pass


def _load_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump_json(obj: dict, path: Path) -> None:
    path.write_text(
        json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"
    )


# ---------------------------------------------------------------- scenarios


def _scenario_record(cfg: dict) -> dict:
    keys = (
        "seed n d_side t_step k_gain eta powers threshold delay_mode channel_mode "
        "horizon noise_std c_weights g_values g_mode xi sigma2 tau tau_max topology"
    ).split()
    return {k: cfg[k] for k in keys if k in cfg}


def _write_scenario(
    out: Path, g: digraph.SensorDigraph, delays: DelayMatrix, cfg: dict, geom=None
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "digraph.json").write_text(digraph.to_document(g) + "\n")
    _dump_json(
        {"n": g.n, "tau": delays.tau.tolist(), "tau_max": delays.tau_max},
        out / "delays.json",
    )
    if geom is not None:
        _dump_json(
            {
                "positions": geom.positions.tolist(),
                "powers": geom.powers.tolist(),
                "path_loss_exponent": geom.path_loss_exponent,
                "speed": geom.speed,
            },
            out / "geometry.json",
        )
    _dump_json(_scenario_record(cfg), out / "scenario.json")


def _gen_demo14(cfg: dict, out: Path) -> list[Path]:
    tau = float(cfg.get("tau", 50 * cfg.get("t_step", 1e-3)))
    paths = []
    for name, g in (
        ("sc", topologies.sc_14()),
        ("qsc", topologies.qsc_three_scc_14()),
        ("wc", topologies.wc_two_root_14()),
    ):
        sub = out / name
        _write_scenario(sub, g, DelayMatrix.uniform(g.n, tau), cfg)
        paths.append(sub)
    return paths


def _gen_random(cfg: dict, out: Path) -> list[Path]:
    n = int(cfg["n"])
    if n < 1:
        raise ConfigError("n must be at least 1")
    seed = int(cfg.get("seed", 0))
    geom = netgen.place_nodes(
        n,
        float(cfg.get("d_side", 1.0)),
        seed,
        powers=cfg.get("powers", 1.0),
        path_loss_exponent=float(cfg.get("eta", 2.0)),
    )
    delay_mode = cfg.get("delay_mode", {"mode": "geometry"})
    if delay_mode.get("mode") == "uniform":
        delays = DelayMatrix.uniform(n, float(delay_mode["tau"]))
    else:
        tau_max = cfg.get("tau_max", delay_mode.get("tau_max"))
        if tau_max is not None and n > 1:
            geom = netgen.speed_for_max_delay(geom, float(tau_max))
        delays = netgen.delays_from_geometry(geom)
    channel_mode = cfg.get("channel_mode", {"mode": "rayleigh"})
    if channel_mode.get("mode") == "pathloss":
        g = netgen.channel_pathloss(geom, channel_mode.get("fading", 1.0))
    else:
        g = netgen.channel_rayleigh(geom, seed + 1)
    g = netgen.threshold_prune(g, float(cfg.get("threshold", 0.0)))
    _write_scenario(out, g, delays, cfg, geom=geom)
    return [out]


def cmd_gen(args) -> int:
    cfg = _load_json(Path(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = Path(args.out_dir)
    if cfg.get("topology") == "demo14":
        paths = _gen_demo14(cfg, out)
    else:
        paths = _gen_random(cfg, out)
    for p in paths:
        print(f"scenario written: {p}")
    return EXIT_OK


# ---------------------------------------------------------------- run


def _load_scenario(path: Path):
    g = digraph.from_document((path / "digraph.json").read_text())
    ddoc = _load_json(path / "delays.json")
    delays = DelayMatrix(tau=np.asarray(ddoc["tau"], dtype=float))
    sc = _load_json(path / "scenario.json")
    return g, delays, sc


def _sim_config(sc: dict, args) -> SimConfig:
    kwargs = dict(
        t_step=float(sc.get("t_step", 1e-3)),
        k_gain=float(sc.get("k_gain", 1.0)),
        c_weights=np.asarray(sc.get("c_weights", 1.0), dtype=float),
        horizon=int(args.horizon or sc.get("horizon", 5000)),
        noise_std=float(sc.get("noise_std", 0.0)),
        rng_seed=int(args.seed if args.seed is not None else sc.get("seed", 0)),
    )
    if args.window:
        kwargs["sync_window_frac"] = float(args.window)
    return SimConfig(**kwargs)


def _g_values(sc: dict, g: digraph.SensorDigraph) -> np.ndarray:
    if "g_values" in sc:
        return np.broadcast_to(np.asarray(sc["g_values"], dtype=float), (g.n,)).copy()
    if sc.get("g_mode") == "estimation":
        rng = np.random.default_rng(int(sc.get("seed", 0)) + 2)
        xi = float(sc.get("xi", 1.0))
        sigma2 = float(sc.get("sigma2", 1.0))
        a = rng.uniform(0.5, 1.5, size=g.n)
        y = a * xi + rng.normal(0.0, np.sqrt(sigma2), size=g.n)
        return y / a
    return np.ones(g.n)


def _finalize_report(report: dict, out: Path) -> None:
    body = json.dumps(report, sort_keys=True, default=_json_default)
    report["digest"] = hashlib.sha256(body.encode()).hexdigest()
    report["created_unix"] = time.time()
    _dump_json(report, out)


def cmd_run(args) -> int:
    path = Path(args.scenario)
    g, delays, sc = _load_scenario(path)
    cfg = _sim_config(sc, args)
    gvals = _g_values(sc, g)
    scc = digraph.scc_decompose(g)
    out_dir = Path(args.out_dir or path)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "mode": args.mode,
        "scenario": {
            "path": str(path),
            "n": g.n,
            "seed": sc.get("seed"),
            "connectivity": scc.connectivity_class.value,
        },
    }
    pred = protocols.predict_clusters(g, delays, cfg, gvals, quantize_delays=True)
    report["predicted"] = {
        "global": len(pred.per_cluster) == 1,
        "clusters": [
            {"component": k, "nodes": sorted(nodes), "value": val}
            for k, (nodes, val) in sorted(pred.per_cluster.items())
        ],
        "unpredicted_nodes": sorted(pred.unpredicted),
    }

    if args.mode == "predict":
        _finalize_report(report, out_dir / "report.json")
        return EXIT_OK

    if args.mode in ("unbias2", "gamma_protocol"):
        fn = (
            protocols.two_step_unbias
            if args.mode == "unbias2"
            else protocols.gamma_estimation_protocol
        )
        try:
            rep = fn(g, delays, cfg, gvals, mode=args.exec_mode)
        except protocols.ProtocolError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NO_SYNC
        report["unbias"] = {
            "omega_y": rep.omega_y,
            "omega_one": rep.omega_one,
            "ratio": rep.ratio,
            "mode": rep.mode,
        }
        if rep.gamma_tilde is not None:
            report["unbias"]["gamma_tilde"] = rep.gamma_tilde.tolist()
            report["unbias"]["compensated_c"] = rep.compensated_c.tolist()
        _finalize_report(report, out_dir / "report.json")
        return EXIT_OK

    # mode: simulate
    scale = max(abs(val) for _, val in pred.per_cluster.values())
    traj = simulate(g, delays, cfg, gvals)
    if args.tol:
        window = max(int(cfg.sync_window_frac * len(traj.times)), 2)
        sync = detect_sync(traj, tol=float(args.tol), window=window)
    else:
        sync = detect_sync_auto(traj, cfg, omega_scale=scale)
    trace = out_dir / "trace.csv"
    trajectory_to_csv(traj, trace, downsample=int(args.downsample))
    report["measured"] = {
        "global": sync.global_sync,
        "clusters": [
            {
                "nodes": sorted(c.nodes),
                "value": float(c.value),
                "detection_time": c.detection_time,
            }
            for c in sync.clusters
        ],
        "tol": sync.tol,
        "window": sync.window,
    }
    report["rates"] = _rate_report(g, delays, cfg, scc, traj, pred)
    report["trace"] = trace.name
    _finalize_report(report, out_dir / "report.json")
    # success: every predicted cluster actually synchronized
    predicted_node_sets = {frozenset(nodes) for nodes, _ in pred.per_cluster.values()}
    measured_sets = {c.nodes for c in sync.clusters}
    ok = all(any(p <= m for m in measured_sets) for p in predicted_node_sets)
    if not ok:
        print("synchronization not detected within horizon", file=sys.stderr)
        return EXIT_NO_SYNC
    print(f"report written: {out_dir / 'report.json'}")
    return EXIT_OK


def _rate_report(g, delays, cfg, scc, traj, pred) -> dict:
    rates: dict = {}
    lap = digraph.laplacian(g)
    if len(scc.root_components) == 1:
        # spectrum of the gain-scaled system K D_c^{-1} L
        kdl = digraph.Laplacian(
            matrix=(cfg.k_gain / cfg.c_array(g.n))[:, None] * lap.matrix,
            degree_matrix=lap.degree_matrix,
        )
        rates["no_delay_spectrum"] = spectral.rate_no_delay(kdl, scc).value
        if scc.connectivity_class is digraph.Connectivity.SC:
            gamma = spectral.gamma_left_eigenvector(lap, scc, "inf_norm_one")
            rates["kappa_bound"] = spectral.rate_kappa_bound(kdl, scc, gamma).value
        if traj.clusters is not None and traj.clusters.global_sync:
            omega = next(iter(pred.per_cluster.values()))[1]
            est = spectral.empirical_rate(traj, omega)
            rates["empirical_fit"] = est.value
            rates["empirical_residual"] = est.residual
    return rates


# ---------------------------------------------------------------- montecarlo


def run_estimation_trial(cfg: dict, trial_seed: int):
    """One Fig-2-style estimation realization; returns per-iteration traces."""
    n = int(cfg.get("n", 40))
    t_step = float(cfg.get("t_step", 1e-3))
    rng = np.random.default_rng(trial_seed)
    geom = netgen.place_nodes(n, float(cfg.get("d_side", 5.0)), trial_seed)
    geom = netgen.speed_for_max_delay(geom, float(cfg.get("tau_max", 100 * t_step)))
    g = netgen.channel_rayleigh(geom, trial_seed + 1)
    g = netgen.threshold_prune(g, float(cfg.get("threshold", 0.0)))
    delays = netgen.delays_from_geometry(geom)
    xi = float(cfg.get("xi", 1.0))
    sigma2 = float(cfg.get("sigma2", 1.0))
    a = rng.uniform(0.5, 1.5, size=n)
    y = a * xi + rng.normal(0.0, np.sqrt(sigma2), size=n)
    gvals = y / a
    c = a**2 / sigma2
    sim = SimConfig(
        t_step=t_step,
        k_gain=float(cfg.get("k_gain", 30.0)),
        c_weights=c,
        horizon=int(cfg.get("horizon", 2000)),
        noise_std=float(cfg.get("noise_std", 0.0)),
        rng_seed=trial_seed + 3,
    )
    centralized = stats.consensus_function(lambda v: v, gvals, c)
    zero = DelayMatrix.zero(n)
    d_nodelay = simulate(g, zero, sim, gvals).derivatives.mean(axis=1)
    d_delayed = simulate(g, delays, sim, gvals).derivatives.mean(axis=1)
    d_unit = simulate(g, delays, sim, np.ones(n)).derivatives.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        twostep = np.where(np.abs(d_unit) > 1e-12, d_delayed / d_unit, 0.0)
    return centralized, d_nodelay, d_delayed, twostep


def run_estimation_montecarlo(cfg: dict, trials: int, downsample: int = 10):
    """Aggregate mean/std across trials of the per-iteration estimates."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    seed = int(cfg.get("seed", 0))
    rows_nd, rows_d, rows_ts, cents = [], [], [], []
    for t in range(trials):
        cent, nd, dl, ts = run_estimation_trial(cfg, seed + 1000 * t)
        cents.append(cent)
        rows_nd.append(nd[::downsample])
        rows_d.append(dl[::downsample])
        rows_ts.append(ts[::downsample])
    t_step = float(cfg.get("t_step", 1e-3))
    steps = np.arange(len(rows_nd[0])) * downsample
    agg = {
        "step": steps,
        "t": steps * t_step,
        "nodelay_mean": np.mean(rows_nd, axis=0),
        "nodelay_std": np.std(rows_nd, axis=0),
        "delayed_mean": np.mean(rows_d, axis=0),
        "delayed_std": np.std(rows_d, axis=0),
        "twostep_mean": np.mean(rows_ts, axis=0),
        "twostep_std": np.std(rows_ts, axis=0),
        "centralized_mean": np.full(len(steps), np.mean(cents)),
    }
    final = {
        "xi": float(cfg.get("xi", 1.0)),
        "centralized_mean": float(np.mean(cents)),
        "centralized_std": float(np.std(cents)),
        "final_nodelay_mean": float(np.mean([r[-1] for r in rows_nd])),
        "final_nodelay_std": float(np.std([r[-1] for r in rows_nd])),
        "final_delayed_mean": float(np.mean([r[-1] for r in rows_d])),
        "final_delayed_std": float(np.std([r[-1] for r in rows_d])),
        "final_twostep_mean": float(np.mean([r[-1] for r in rows_ts])),
        "final_twostep_std": float(np.std([r[-1] for r in rows_ts])),
        "trials": trials,
    }
    return agg, final


def cmd_montecarlo(args) -> int:
    cfg = _load_json(Path(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agg, final = run_estimation_montecarlo(cfg, int(args.trials))
    header = ",".join(agg.keys())
    np.savetxt(
        out / "montecarlo.csv",
        np.column_stack(list(agg.values())),
        delimiter=",",
        header=header,
        comments="",
    )
    _dump_json(final, out / "summary.json")
    print(f"wrote {out / 'montecarlo.csv'} and {out / 'summary.json'}")
    return EXIT_OK


# ---------------------------------------------------------------- inspect


def cmd_inspect(args) -> int:
    g, delays, sc = _load_scenario(Path(args.scenario))
    scc = digraph.scc_decompose(g)
    lap = digraph.laplacian(g)
    print(f"nodes: {g.n}")
    print(f"connectivity: {scc.connectivity_class.value}")
    print(f"components: {[sorted(c) for c in scc.components]}")
    print(f"root components: {scc.root_components}")
    print(f"zero eigenvalue multiplicity: {spectral.zero_eigen_multiplicity(lap, scc)}")
    if len(scc.root_components) == 1:
        gamma = spectral.gamma_left_eigenvector(lap, scc)
        print(f"gamma (sum one): {np.array2string(gamma.gamma, precision=6)}")
        print(f"rate (no delay, unit gains): {spectral.rate_no_delay(lap, scc).value:.6g}")
        if scc.connectivity_class is digraph.Connectivity.SC:
            kappa = spectral.rate_kappa_bound(
                lap, scc, spectral.gamma_left_eigenvector(lap, scc, "inf_norm_one")
            )
            print(f"kappa bound: {kappa.value:.6g}")
    print(f"max delay: {delays.tau_max:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selfsync")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate scenario files from a config")
    p.add_argument("config")
    p.add_argument("--out-dir", default="scenario")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="simulate / predict / run protocols on a scenario")
    p.add_argument("scenario")
    p.add_argument(
        "--mode",
        choices=["simulate", "predict", "unbias2", "gamma_protocol"],
        default="simulate",
    )
    p.add_argument("--exec-mode", choices=["predict", "simulate"], default="simulate",
                   help="how protocol passes are executed")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--downsample", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("montecarlo", help="Monte-Carlo estimation experiment")
    p.add_argument("config")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default="montecarlo")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("inspect", help="print structure and rate bounds")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, digraph.GraphValidationError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
