"""Pipeline subcommands over the versioned artifact files.

Configuration precedence is defaults < config file < command-line flags.
The config file holds `key = value` lines (# comments allowed); unknown keys
are rejected. Log verbosity comes from the GRAPH2TS_LOG_LEVEL environment
variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset, fileio, metrics
from .autodiff import grad_check
from .model import (
    TrainConfig,
    batch_objective,
    beta_schedule,
    init_params,
    objective_value,
    train,
)
from .quantile_graph import (
    fit_boundaries,
    transition_matrix,
    windows_to_graphs,
)

logger = logging.getLogger(__name__)

_INT_KEYS = {
    "window_length", "n_states", "embed_dim", "latent_dim",
    "kl_warmup_epochs", "batch_size", "epochs", "seed", "stride",
}
_FLOAT_KEYS = {"w_align", "w_recon", "w_dist", "beta_max", "lr", "eval_fraction"}
_STR_KEYS = {"variant"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_EXTRA_DEFAULTS = {"eval_fraction": 0.2, "stride": None}

ABLATION_GRID = (
    "full", "no_graph", "deterministic",
    "w_recon=0", "w_align=0", "w_dist=0", "beta_max=0",
)

ABLATION_MAGIC = "# graph2ts-ablation v1"
GRADCHECK_MAGIC = "# graph2ts-gradcheck v1"


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


def load_config_file(path) -> dict:
    """Parse `key = value` lines; any key outside the schema is an error."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _ALL_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key '{key}'")
            out[key] = _coerce(key, raw)
    return out


def resolve_config(args) -> tuple[TrainConfig, dict]:
    """Merge defaults, config file, and flags into a TrainConfig plus extras."""
    merged = {f.name: f.default for f in dataclasses.fields(TrainConfig)}
    merged.update(_EXTRA_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    for key in _ALL_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    extras = {k: merged.pop(k) for k in _EXTRA_DEFAULTS}
    config = TrainConfig(**merged)
    if extras["stride"] is None:
        extras["stride"] = config.window_length  # non-overlapping by default
    return config, extras


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    config, extras = resolve_config(args)
    series = dataset.load_series(args.input, args.column)
    windows = dataset.make_windows(series, config.window_length, extras["stride"])
    fileio.write_windows(args.out, windows)
    print(f"ingest: {windows.shape[0]} windows of length {config.window_length} -> {args.out}")
    return 0


def cmd_graph(args) -> int:
    config, _ = resolve_config(args)
    windows = fileio.read_windows(args.windows)
    if args.boundaries:
        bounds = fileio.read_boundaries(args.boundaries)
    else:
        bounds = fit_boundaries(windows.ravel(), config.n_states)
    graphs = windows_to_graphs(windows, bounds)
    fileio.write_graphs(args.out, graphs, bounds.n_states)
    bounds_out = args.boundaries_out or str(args.out) + ".boundaries"
    fileio.write_boundaries(bounds_out, bounds)
    print(f"graph: {graphs.shape[0]} graphs (Q={bounds.n_states}) -> {args.out}")
    return 0


def cmd_train(args) -> int:
    config, extras = resolve_config(args)
    windows = fileio.read_windows(args.windows)
    data = dataset.split(windows, extras["eval_fraction"], config.seed,
                         stride=extras["stride"])
    model, log = train(config, data)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fileio.save_model(outdir / "checkpoint.g2ts", model)
    fileio.write_loss_log(outdir / "loss_log.csv", log)
    fileio.write_boundaries(outdir / "boundaries.txt", model.boundaries)
    fileio.write_windows(outdir / "eval_windows.txt", data.eval)
    fileio.write_graphs(
        outdir / "eval_graphs.txt",
        windows_to_graphs(data.eval, model.boundaries),
        config.n_states,
    )
    print(
        f"train: variant={config.variant} epochs={config.epochs} "
        f"best_epoch={model.best_epoch} best_total={log[model.best_epoch].total:.6f} "
        f"-> {outdir}"
    )
    return 0


def cmd_generate(args) -> int:
    config, _ = resolve_config(args)
    model = fileio.load_model(args.checkpoint)
    graphs, q = fileio.read_graphs(args.graphs)
    if q != model.config.n_states:
        raise ValueError(
            f"graph file Q={q} does not match checkpoint Q={model.config.n_states}"
        )
    seed = args.seed if args.seed is not None else config.seed
    synth = model.generate(graphs, n_per_graph=args.n_per_graph, seed=seed)
    fileio.write_windows(args.out, synth)
    print(f"generate: {synth.shape[0]} windows -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    config, _ = resolve_config(args)
    real = fileio.read_windows(args.real)
    synth = fileio.read_windows(args.synth)
    report = metrics.evaluate(real, synth, seed=config.seed)
    fileio.write_metrics_report(args.out, report)
    for key, value in report.as_items():
        print(f"{key}={value:.6g}")
    if args.curves_dir:
        cdir = Path(args.curves_dir)
        cdir.mkdir(parents=True, exist_ok=True)
        lag = real.shape[1] // 2
        fileio.write_curve(cdir / "acf_real.csv", "acf_real",
                           metrics.acf_mean_curve(real, lag))
        fileio.write_curve(cdir / "acf_synth.csv", "acf_synth",
                           metrics.acf_mean_curve(synth, lag))
        fileio.write_curve(cdir / "psd_real.csv", "psd_real",
                           metrics.psd_mean_curve(real))
        fileio.write_curve(cdir / "psd_synth.csv", "psd_synth",
                           metrics.psd_mean_curve(synth))
    if args.embeddings_dir:
        if not args.checkpoint:
            raise ValueError("--embeddings-dir requires --checkpoint")
        model = fileio.load_model(args.checkpoint)
        edir = Path(args.embeddings_dir)
        edir.mkdir(parents=True, exist_ok=True)
        fileio.write_embeddings(edir / "real_embeddings.txt", model.ts_embeddings(real))
        fileio.write_embeddings(edir / "synth_embeddings.txt", model.ts_embeddings(synth))
    return 0


def cmd_stats(args) -> int:
    windows = fileio.read_windows(args.windows)
    x_stats, dx_stats = metrics.tail_stats(windows)
    fileio.write_tail_stats(args.out, x_stats, dx_stats)
    print(
        f"stats: x kurtosis={x_stats.excess_kurtosis:.4f} "
        f"dx kurtosis={dx_stats.excess_kurtosis:.4f} -> {args.out}"
    )
    return 0


def _ablation_config(base: TrainConfig, label: str) -> TrainConfig:
    if label in ("full", "no_graph", "deterministic"):
        return dataclasses.replace(base, variant=label)
    key, _ = label.split("=")
    return dataclasses.replace(base, variant="full", **{key: 0.0})


def cmd_ablate(args) -> int:
    config, extras = resolve_config(args)
    windows = fileio.read_windows(args.windows)
    data = dataset.split(windows, extras["eval_fraction"], config.seed,
                         stride=extras["stride"])
    columns = [
        "config", "wasserstein", "ks", "acf_mae", "psd_l2",
        "proto_err_avg", "proto_err_med", "mdr", "coverage_0.5", "coverage_0.9",
    ]
    rows = []
    for label in ABLATION_GRID:
        run_cfg = _ablation_config(config, label)
        model, _ = train(run_cfg, data)
        eval_graphs = windows_to_graphs(data.eval, model.boundaries)
        synth = model.generate(eval_graphs, n_per_graph=1, seed=run_cfg.seed)
        report = metrics.evaluate(data.eval, synth, seed=run_cfg.seed)
        rep = dict(report.as_items())
        rows.append([label] + [rep[c] for c in columns[1:]])
        logger.info("ablate: %s done", label)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(ABLATION_MAGIC + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(row[0] + "," + ",".join(repr(float(v)) for v in row[1:]) + "\n")
    print(f"ablate: {len(rows)} configs -> {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    config, _ = resolve_config(args)
    rng = np.random.default_rng(config.seed)
    raw = dataset.synth_generate("sine_mix", args.batch, config.window_length,
                                 config.seed)
    x, _ = dataset.zscore_fit_apply(raw)
    bounds = fit_boundaries(x.ravel(), config.n_states)
    graphs = windows_to_graphs(x, bounds)
    params = init_params(config, rng)
    # jitter off the symmetric init (zero biases breed exact sort ties);
    # gradients should be checked at a generic point in parameter space
    params = {k: v + 0.05 * rng.standard_normal(v.shape) for k, v in params.items()}
    eps = None
    if config.variant != "deterministic":
        eps = rng.standard_normal((args.batch, config.latent_dim))
    beta = beta_schedule(config.kl_warmup_epochs, config.kl_warmup_epochs,
                         config.beta_max)

    def objective(leaves):
        return batch_objective(leaves, x, graphs, eps, config, beta)[0]

    def plain_value(arrs):
        return objective_value(arrs, x, graphs, eps, config, beta)

    worst = grad_check(objective, params, h=args.h, value_fn=plain_value)
    status = "PASS" if worst <= args.tolerance else "FAIL"
    n_coords = sum(p.size for p in params.values())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(GRADCHECK_MAGIC + "\n")
            fh.write(f"batch={args.batch}\n")
            fh.write(f"h={repr(args.h)}\n")
            fh.write(f"coordinates={n_coords}\n")
            fh.write(f"max_rel_err={repr(worst)}\n")
            fh.write(f"tolerance={repr(args.tolerance)}\n")
            fh.write(f"status={status}\n")
    print(f"gradcheck: max_rel_err={worst:.3e} over {n_coords} coordinates: {status}")
    return 0 if status == "PASS" else 1


def cmd_selfcheck(args) -> int:
    ok = True

    # golden transition-graph example: the 3-state sequence and its six
    # labeled edge probabilities, exact as rationals
    states = np.array([1, 2, 3, 3, 2, 1, 1, 2, 3])
    p = transition_matrix(states, 3)
    expected = np.array([
        [1 / 3, 2 / 3, 0.0],
        [1 / 3, 0.0, 2 / 3],
        [0.0, 1 / 2, 1 / 2],
    ])
    fig1_ok = np.array_equal(p, expected)
    print(f"fig1: {'PASS' if fig1_ok else 'FAIL'}")
    ok &= fig1_ok

    ident_ok = True
    for seed in range(3):
        s = np.random.default_rng(seed).standard_normal((24, 16))
        ident_ok &= metrics.wasserstein1_pooled(s, s) == 0.0
        ident_ok &= metrics.ks_pooled(s, s) == 0.0
        ident_ok &= metrics.acf_mae(s, s) == 0.0
        ident_ok &= metrics.psd_l2(s, s) == 0.0
        ident_ok &= metrics.proto_err(s, s) == (0.0, 0.0)
        ident_ok &= metrics.mdr(s, s) == 0.0
        ident_ok &= metrics.coverage(s, s, 0.5) == 1.0
    print(f"metric_identities: {'PASS' if ident_ok else 'FAIL'}")
    ok &= ident_ok
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    g = p.add_argument_group("config overrides")
    for key in sorted(_INT_KEYS):
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int)
    for key in sorted(_FLOAT_KEYS):
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    g.add_argument("--variant", dest="variant",
                   choices=("full", "no_graph", "deterministic"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph2ts",
        description="Quantile-graph conditioned time-series generation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="numeric text file -> window file")
    p.add_argument("--input", required=True)
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("graph", help="window file -> graph file (+ boundaries sidecar)")
    p.add_argument("--windows", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--boundaries", help="reuse fitted boundaries instead of fitting")
    p.add_argument("--boundaries-out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("train", help="window file -> checkpoint, loss log, eval artifacts")
    p.add_argument("--windows", required=True)
    p.add_argument("--outdir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="checkpoint + graph file -> synthetic windows")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-graph", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="real + synthetic window files -> metrics report")
    p.add_argument("--real", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curves-dir", help="emit mean ACF/PSD curves as CSV")
    p.add_argument("--embeddings-dir", help="emit encoder embeddings (needs --checkpoint)")
    p.add_argument("--checkpoint")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="window file -> tail statistics")
    p.add_argument("--windows", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ablate", help="run the variant/loss-knockout grid")
    p.add_argument("--windows", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient report")
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selfcheck", help="golden-value and metric-identity checks")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("GRAPH2TS_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
