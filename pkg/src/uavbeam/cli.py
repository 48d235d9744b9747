"""Command-line harness: ``uavbeam <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 config/schema error, 3 numerical
failure (divergence, degenerate geometry, failed gradient check).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, SchemaError, UavBeamError
from .experiment import SCHEMES, episode_seed, run_episode, run_failover_episode, summarize
from .export import emit_loss_csv, emit_rate_csv, emit_summary_csv, emit_trajectory_csv, render_plot
from .numerics import PRNG_NAME, RandomSource, derive_seed, uniform_array
from .scenario import ScenarioConfig, generate_trajectory

log = logging.getLogger("uavbeam")

GRADCHECK_TOL = 1e-6
FAR_START = (70.0, 70.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def load_config(path):
    """Return (ScenarioConfig, TrainConfig) from a JSON file (or defaults when path is None)."""
    from .lrnet.train import TrainConfig

    if path is None:
        return ScenarioConfig(), TrainConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("config must be a JSON object")
    train_doc = doc.pop("train", {}) or {}
    if not isinstance(train_doc, dict):
        raise SchemaError("'train' must be a JSON object")
    return ScenarioConfig.from_dict(doc), TrainConfig.from_dict(train_doc)


def _setup(args):
    cfg, tcfg = load_config(args.config)
    if getattr(args, "far", False):
        cfg = cfg.replace(uav_start=FAR_START)
    seed = cfg.seed if args.seed is None else args.seed
    cfg = cfg.replace(seed=seed)
    tcfg = tcfg.replace(seed=seed)
    if getattr(args, "epochs", None):
        tcfg = tcfg.replace(epochs=args.epochs)
    if getattr(args, "examples", None):
        tcfg = tcfg.replace(n_examples=args.examples)
    return cfg, tcfg, seed


def _load_model_arg(path):
    from .lrnet.io import load_model

    if not os.path.exists(path):
        raise UsageError(f"model file not found: {path}")
    return load_model(path)


def _progress(rec):
    log.info("epoch %3d  train %.6g  val %.6g", rec["epoch"], rec["train_loss"], rec["val_loss"])


def _train_model(cfg, tcfg, data_path=None):
    from .lrnet.model import init_model
    from .lrnet.train import Dataset, train, train_default, windows_from_positions

    if data_path is None:
        return train_default(cfg, tcfg, _progress)
    with open(data_path) as fh:
        doc = json.load(fh)
    inputs, labels, anchors = [], [], []
    for tr in doc["trajectories"]:
        win, tgt = windows_from_positions(np.asarray(tr, dtype=float), cfg.window_l)
        a = win[:, -1, :]
        inputs.append(win - a[:, None, :]); labels.append(tgt - a); anchors.append(a)
    data = Dataset(np.concatenate(inputs), np.concatenate(labels), np.concatenate(anchors), doc.get("seed"))
    model = init_model(derive_seed(tcfg.seed, 0x494E4954), cfg.window_l)
    trained, history = train(model, data, tcfg, _progress)
    return trained, history, data


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args):
    from .lrnet.train import trajectories_for

    cfg, tcfg, seed = _setup(args)
    n = args.trajectories or trajectories_for(tcfg.n_examples, cfg)
    trajs = [generate_trajectory(cfg, seed=derive_seed(seed, i)).positions.tolist() for i in range(n)]
    doc = {"config": cfg.to_dict(), "seed": seed, "prng": PRNG_NAME, "stream": "derive_seed(seed, i)",
           "trajectories": trajs}
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
    print(f"wrote {n} trajectories x {cfg.k_slots} slots to {args.out}")
    return 0


def cmd_train(args):
    from .lrnet.io import save_model
    from .lrnet.train import persistence_mse, split

    cfg, tcfg, seed = _setup(args)
    model, history, data = _train_model(cfg, tcfg, args.data)
    _, val = split(data, tcfg.validation_fraction)
    meta = {"train": tcfg.to_dict(), "scenario": cfg.to_dict(), "config_hash": cfg.config_hash(),
            "examples": len(data), "best_val_loss": min(h["val_loss"] for h in history)}
    save_model(model, args.out, meta)
    if args.loss_csv:
        emit_loss_csv(history, args.loss_csv)
    print(f"examples {len(data)}  epochs {tcfg.epochs}")
    print(f"initial train loss {history[0]['train_loss']:.6g}  final train loss {history[-1]['train_loss']:.6g}")
    print(f"best val loss {meta['best_val_loss']:.6g}  persistence val loss {persistence_mse(val):.6g}")
    print(f"model written to {args.out}")
    return 0


def gradcheck_suite(seed: int, n_small: int = 10, n_full: int = 0, epsilon: float = 1e-5):
    """Max relative gradient error over random small models and full-size windows."""
    from .lrnet.gradcheck import grad_check
    from .lrnet.model import init_model

    results = []
    for shape, count in (((3, 4, 5), n_small), ((20, 50, 100), n_full)):
        L, h1, h2 = shape
        for i in range(count):
            s = derive_seed(seed, len(results))
            model = init_model(s, L, h1, h2)
            rng = RandomSource(derive_seed(s, 1))
            x = uniform_array(rng, -1.0, 1.0, 2 * L).reshape(L, 2)
            x -= x[-1]
            y = uniform_array(rng, -1.0, 1.0, 2)
            results.append((shape, grad_check(model, (x, y), epsilon)))
    return results


def cmd_gradcheck(args):
    results = gradcheck_suite(args.seed if args.seed is not None else 0, args.small, args.full, args.epsilon)
    worst = max(e for _, e in results)
    for shape, e in results:
        print(f"L={shape[0]:<3d} H1={shape[1]:<3d} H2={shape[2]:<4d} max relative error {e:.3e}")
    print(f"max relative error {worst:.3e}")
    return 0 if worst < GRADCHECK_TOL else 3


def _write_episode(records, out_dir, stem):
    os.makedirs(out_dir, exist_ok=True)
    traj = os.path.join(out_dir, f"{stem}_trajectory.csv")
    rate = os.path.join(out_dir, f"{stem}_rate.csv")
    emit_trajectory_csv(records, traj)
    emit_rate_csv(records, rate)
    return traj, rate


def _print_summary(metrics, title):
    print(title)
    print(f"{'scheme':<8} {'mean_rate':>10} {'rate_std':>10} {'ratio':>8} {'mean_err_m':>11} "
          f"{'median_err_m':>13} {'max_err_m':>10}")
    for name in SCHEMES:
        s = metrics.schemes[name]
        print(f"{name:<8} {s.mean_rate:>10.6f} {s.rate_std:>10.6f} {s.rate_ratio:>8.5f} {s.mean_error_m:>11.6f} "
              f"{s.median_error_m:>13.6f} {s.max_error_m:>10.6f}")
    print("(rate std-dev uses the population 1/n convention; errors exclude warm-up slots)")


def cmd_simulate(args):
    cfg, _, seed = _setup(args)
    model = _load_model_arg(args.model)
    es = episode_seed(seed, args.episode)
    records = run_episode(model, cfg, es, kalman_mode=args.kalman_mode)
    paths = _write_episode(records, args.out_dir, f"episode_{args.episode:03d}")
    _print_summary(summarize(records), f"episode {args.episode} (trajectory seed {es})")
    print("wrote " + ", ".join(paths))
    return 0


def _parse_blackout(spec: str):
    slots = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            slots.update(range(int(a), int(b) + 1))
        else:
            slots.add(int(part))
    return sorted(slots)


def cmd_failover(args):
    cfg, _, seed = _setup(args)
    model = _load_model_arg(args.model)
    try:
        blackout = _parse_blackout(args.blackout)
    except ValueError as exc:
        raise UsageError(f"bad --blackout: {exc}") from exc
    es = episode_seed(seed, args.episode)
    records = run_failover_episode(model, cfg, es, blackout, kalman_mode=args.kalman_mode)
    paths = _write_episode(records, args.out_dir, f"failover_{args.episode:03d}")
    _print_summary(summarize(records), f"failover episode {args.episode}, blackout {blackout[0]}-{blackout[-1]}")
    bo = [r for r in records if r.blackout]
    for name in SCHEMES:
        print(f"blackout mean rate {name:<7} {np.mean([r.schemes[name].rate for r in bo]):.6f}")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_compare(args):
    from .lrnet.io import save_model

    cfg, tcfg, seed = _setup(args)
    os.makedirs(args.out_dir, exist_ok=True)
    if args.model:
        model = _load_model_arg(args.model)
    else:
        model, history, _ = _train_model(cfg, tcfg)
        save_model(model, os.path.join(args.out_dir, "model.json"), {"train": tcfg.to_dict()})
        emit_loss_csv(history, os.path.join(args.out_dir, "loss_history.csv"))
    all_records, per_episode = [], []
    for e in range(args.episodes):
        es = episode_seed(seed, e)
        records = run_episode(model, cfg, es, kalman_mode=args.kalman_mode)
        _write_episode(records, args.out_dir, f"episode_{e:03d}")
        per_episode.append((str(e), summarize(records, {"trajectory_seed": es})))
        all_records.extend(records)
    overall = summarize(all_records, {"seed": seed, "config_hash": cfg.config_hash()})
    per_episode.append(("all", overall))
    emit_summary_csv(per_episode, os.path.join(args.out_dir, "summary.csv"))
    print(f"compare: {args.episodes} episodes, seed {seed}, config {cfg.config_hash()}, prng {PRNG_NAME}")
    _print_summary(overall, "all episodes")
    gl = [m.schemes["genie"].mean_rate - m.schemes["lrnet"].mean_rate for _, m in per_episode[:-1]]
    gk = [m.schemes["genie"].mean_rate - m.schemes["kalman"].mean_rate for _, m in per_episode[:-1]]
    order = all(m.schemes["genie"].mean_rate >= m.schemes["lrnet"].mean_rate >= m.schemes["kalman"].mean_rate
                for _, m in per_episode[:-1])
    print(f"mean rate gap genie-lrnet {np.mean(gl):.6g}  genie-kalman {np.mean(gk):.6g}")
    print(f"per-episode ordering genie >= lrnet >= kalman: {'yes' if order else 'no'}")
    return 0


def cmd_plot(args):
    out = args.out or os.path.splitext(args.csv)[0] + ".svg"
    render_plot(args.csv, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uavbeam", description="Location-aware predictive beamforming simulator.")
    p.add_argument("--version", action="version", version=f"uavbeam {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, far=False):
        sp.add_argument("--config", help="scenario JSON (ScenarioConfig keys plus optional 'train' block)")
        sp.add_argument("--seed", type=int, help="master seed; overrides the config's seed")
        if far:
            sp.add_argument("--far", action="store_true", help="start the UAV at (70, 70) m instead of close in")

    def training(sp):
        sp.add_argument("--epochs", type=int, help="override train.epochs")
        sp.add_argument("--examples", type=int, help="override train.n_examples")

    def episode(sp):
        sp.add_argument("--model", required=True, help="model JSON written by 'train'")
        sp.add_argument("--episode", type=int, default=0, help="evaluation episode index (default 0)")
        sp.add_argument("--out-dir", default="results", help="directory for CSV output")
        sp.add_argument("--kalman-mode", choices=("two-point", "continuous"), default="two-point",
                        help="re-initialise the Kalman baseline every slot, or run one long filter")

    sp = sub.add_parser("generate", help="generate trajectories to a JSON file")
    common(sp)
    training(sp)
    sp.add_argument("--trajectories", type=int, help="number of trajectories (default: enough for n_examples)")
    sp.add_argument("--out", required=True, help="output JSON path")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("train", help="train LRNet; writes the model file and a loss-history CSV")
    common(sp)
    training(sp)
    sp.add_argument("--data", help="trajectories JSON from 'generate' (default: generate from config/seed)")
    sp.add_argument("--out", required=True, help="model JSON path")
    sp.add_argument("--loss-csv", help="per-epoch loss history CSV path")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("gradcheck", help="compare BPTT gradients with central finite differences")
    sp.add_argument("--seed", type=int, help="seed for the random models")
    sp.add_argument("--small", type=int, default=10, help="random L=3/H1=4/H2=5 models (default 10)")
    sp.add_argument("--full", type=int, default=3, help="random windows on full-size L=20/50/100 models (default 3)")
    sp.add_argument("--epsilon", type=float, default=1e-5, help="finite-difference step")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("simulate", help="run one evaluation episode; writes trajectory and rate CSVs")
    common(sp, far=True)
    episode(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("failover", help="run one episode with a telemetry blackout")
    common(sp, far=True)
    episode(sp)
    sp.add_argument("--blackout", required=True, help="blackout slots, e.g. '100-104' or '50,51,52'")
    sp.set_defaults(func=cmd_failover)

    sp = sub.add_parser("compare", help="run all schemes over several episodes and summarise")
    common(sp, far=True)
    training(sp)
    sp.add_argument("--episodes", type=int, default=10, help="number of evaluation episodes")
    sp.add_argument("--model", help="model JSON (default: train one from config/seed)")
    sp.add_argument("--out-dir", default="results", help="directory for CSV output")
    sp.add_argument("--kalman-mode", choices=("two-point", "continuous"), default="two-point",
                    help="Kalman baseline mode")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("plot", help="render a trajectory/rate/loss CSV as an SVG line chart")
    sp.add_argument("csv", help="input CSV")
    sp.add_argument("--out", help="output SVG (default: CSV path with .svg)")
    sp.set_defaults(func=cmd_plot)
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"uavbeam: error: {exc}", file=sys.stderr)
        return 1
    except UavBeamError as exc:
        print(f"uavbeam: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"uavbeam: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
