"""Unified command-line entry point.

Subcommands: gen-data, inspect, train-ae, encode, train-ode, predict,
eval, sweep-lambda, plot, selftest. Exit codes: 0 success, 1 runtime
failure, 2 usage error (argparse), 3 configuration/validation failure
(the offending key or path is named).

Every command writes under a run directory (--out, or a timestamped
directory beneath $JERKROM_RUN_ROOT, default ./runs). Existing
artifacts are never overwritten unless --force is given, and each run
directory stores the resolved config plus its fingerprint.
"""

import argparse
import datetime as _dt
import json
import os
import shutil
import sys

import numpy as np

from . import __version__
from .config import RunConfig
from .data import FieldSnapshot, build_dataset
from .datagen import generate_ns_dataset
from .datastore import (load_checkpoint, load_dataset, read_container,
                        save_checkpoint, save_dataset, save_latents)
from .errors import ConfigError, JerkromError, MissingArtifactError
from .grids import grid_coordinates
from .infer import QuerySpec, evaluate_rollout, predict
from .nets import init_model
from .toy import generate_toy_wave
from .train import (encode_dataset, sweep_lambda, sweep_to_csv, train_stage1,
                    train_stage2)


def _timestamp() -> str:
    return _dt.datetime.now().strftime("%Y%m%d-%H%M%S")


def _resolve_out(args, command: str) -> str:
    out = getattr(args, "out", None)
    if not out:
        root = os.environ.get("JERKROM_RUN_ROOT", "runs")
        out = os.path.join(root, f"{command}-{_timestamp()}")
    os.makedirs(out, exist_ok=True)
    return out


def _claim(out: str, subpath: str, force: bool) -> str:
    """Reserve an artifact path inside the run dir (never overwrite by default)."""
    path = os.path.join(out, subpath)
    if os.path.exists(path):
        if not force:
            raise ConfigError(f"artifact already exists: {path} (use --force)", key=subpath)
        if os.path.isdir(path):
            shutil.rmtree(path)
        else:
            os.remove(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _write_config(cfg: RunConfig, out: str) -> None:
    cfg.to_yaml(os.path.join(out, "config.yaml"))
    with open(os.path.join(out, "fingerprint.txt"), "w") as fh:
        fh.write(cfg.fingerprint() + "\n")


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return RunConfig.from_yaml(args.config)
    return RunConfig()


def _build_model(cfg: RunConfig, grid):
    return init_model(
        cfg.model.encoder(grid.nx, grid.ndim),
        cfg.model.decoder(grid.ndim),
        cfg.model.odefunc(),
        seed=cfg.model.seed,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, "gen-data")
    dataset_path = _claim(out, "dataset", args.force)
    d = cfg.data
    if d.kind == "toy":
        from .toy import ToyWaveParams

        grid = d.grid()
        trajs = generate_toy_wave(grid, d.n_train + d.n_test, d.seed,
                                  ToyWaveParams(dt=d.dt, n_snapshots=d.snapshots))
        bundle = build_dataset(trajs, grid, d.split())
        bundle.meta.update({"seed": d.seed, "kind": "toy"})
    else:
        bundle = generate_ns_dataset(d.grid(), d.ns_params(), d.split(), d.seed,
                                     backend=d.backend, oversample=d.oversample)
        bundle.meta["kind"] = "ns2d"
    bundle.meta["fingerprint"] = cfg.fingerprint()
    save_dataset(bundle, dataset_path)
    _write_config(cfg, out)
    print(f"wrote {dataset_path}: {len(bundle.trajectories)} trajectories "
          f"({d.n_train} train / {d.n_test} test), grid {bundle.grid.shape}, "
          f"windows {bundle.train_window}+{bundle.extrap_window}")
    return 0


def cmd_inspect(args) -> int:
    manifest_path = os.path.join(args.path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ConfigError(f"no container manifest at {args.path}", key=args.path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    print(f"format: {manifest.get('format')} (version {manifest.get('format_version')})")
    for key in ("grid", "dt", "t0", "norm", "splits", "stage", "train_fingerprint", "meta"):
        if key in manifest and manifest[key] not in (None, {}):
            print(f"{key}: {json.dumps(manifest[key], sort_keys=True)}")
    arrays = manifest.get("arrays", {})
    for name, entry in arrays.items():
        print(f"array {name}: {entry['dtype']}{entry['shape']} ({entry['file']})")
    if manifest.get("format") == "jerkrom-checkpoint":
        arch = manifest.get("arch", {})
        print(f"arch: {json.dumps(arch, sort_keys=True)}")
    return 0


def cmd_train_ae(args) -> int:
    cfg = _load_config(args)
    bundle = load_dataset(args.data)
    out = _resolve_out(args, "train-ae")
    ckpt_path = _claim(out, os.path.join("checkpoints", "stage1"), args.force)
    _claim(out, os.path.join("logs", "stage1_history.csv"), args.force)

    model = _build_model(cfg, bundle.grid)
    model, history = train_stage1(bundle, model, cfg.train)
    save_checkpoint(model, ckpt_path, stage="I", train_fingerprint=cfg.fingerprint())
    history.to_csv(os.path.join(out, "logs", "stage1_history.csv"))
    history.epochs_to_csv(os.path.join(out, "logs", "stage1_epochs.csv"))
    _write_config(cfg, out)
    last = history.epochs[-1]
    print(f"stage I done: train recon {last['train_recon']:.3e}, "
          f"test recon {last['test_recon']:.3e}, test jerk {last['test_jerk']:.3e}; "
          f"checkpoint at {ckpt_path}")
    return 0


def cmd_encode(args) -> int:
    state, manifest = load_checkpoint(args.ckpt)
    bundle = load_dataset(args.data)
    out = _resolve_out(args, "encode")
    window = args.window
    for split in ("train", "test"):
        if args.split not in (split, "all"):
            continue
        latents = encode_dataset(state, bundle, split=split, window=window)
        if not latents:
            print(f"{split}: no trajectories, skipped")
            continue
        path = _claim(out, os.path.join("latents", split), args.force)
        save_latents(latents, path, meta={"split": split, "window": window,
                                          "ckpt": os.path.abspath(args.ckpt)})
        print(f"{split}: encoded {len(latents)} trajectories "
              f"x {len(latents[0])} snapshots -> {path}")
    return 0


def cmd_train_ode(args) -> int:
    cfg = _load_config(args)
    state, _ = load_checkpoint(args.ckpt)
    from .datastore import load_latents

    latents = load_latents(args.latents)
    out = _resolve_out(args, "train-ode")
    ckpt_path = _claim(out, os.path.join("checkpoints", "stage2"), args.force)
    _claim(out, os.path.join("logs", "stage2_history.csv"), args.force)

    state, history = train_stage2(latents, state, cfg.train)
    save_checkpoint(state, ckpt_path, stage="II", train_fingerprint=cfg.fingerprint())
    history.to_csv(os.path.join(out, "logs", "stage2_history.csv"))
    _write_config(cfg, out)
    print(f"stage II done: final ode loss {history.epochs[-1]['ode_loss']:.3e}; "
          f"checkpoint at {ckpt_path}")
    return 0


def cmd_predict(args) -> int:
    state, _ = load_checkpoint(args.ckpt)
    u0 = np.load(args.init)
    snapshot = FieldSnapshot(u0.astype(np.float32), time=args.t0)
    times = np.array([float(x) for x in args.times.split(",")])
    coords = grid_coordinates(args.res, state.encoder_cfg.ndim)
    query = QuerySpec(coords, times)
    values = predict(state, snapshot, query)
    out = _resolve_out(args, "predict")
    path = _claim(out, "prediction.npz", args.force)
    shape = (len(times),) + (args.res,) * state.encoder_cfg.ndim
    np.savez(path, times=times, coords=coords, values=values.reshape(shape))
    print(f"wrote {path}: fields {shape}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    state, _ = load_checkpoint(args.ckpt)
    bundle = load_dataset(args.data)
    out = _resolve_out(args, "eval")
    report_path = _claim(out, os.path.join("eval", "report.json"), args.force)

    report = evaluate_rollout(state, bundle, method=cfg.eval.method,
                              max_substep=cfg.eval.max_substep)
    report.save(report_path)
    with open(os.path.join(out, "eval", "rrmse_curve.csv"), "w") as fh:
        fh.write("t,relative_rmse\n")
        for t, v in zip(report.times, report.rrmse_per_time):
            fh.write(f"{t},{v}\n")
    latents = encode_dataset(state, bundle, split="test", window="full")
    if latents:
        path = _claim(out, os.path.join("latents", "test"), args.force)
        save_latents(latents, path, meta={"split": "test", "window": "full"})
    print(f"eval done: interp RMSE {report.rmse_interp:.3e}, "
          f"extrap RMSE {report.rmse_extrap:.3e}, avg jerk {report.avg_jerk:.3e}, "
          f"active {report.active_count}/{report.d_z} -> {report_path}")
    return 0


def cmd_sweep_lambda(args) -> int:
    cfg = _load_config(args)
    bundle = load_dataset(args.data)
    lambdas = [float(x) for x in args.lambdas.split(",")]
    out = _resolve_out(args, "sweep-lambda")
    csv_path = _claim(out, os.path.join("sweep", "sweep.csv"), args.force)

    grid = bundle.grid
    arch = (cfg.model.encoder(grid.nx, grid.ndim), cfg.model.decoder(grid.ndim),
            cfg.model.odefunc())
    rows = sweep_lambda(bundle, lambdas, cfg.train, arch, init_seed=cfg.model.seed)
    sweep_to_csv(rows, csv_path)
    _write_config(cfg, out)
    for row in rows:
        status = row["error"] or "ok"
        print(f"lam={row['lam']:g}: test recon {row['test_recon']:.3e}, "
              f"test jerk {row['test_jerk']:.3e} [{status}]")
    print(f"wrote {csv_path}")
    return 0


def cmd_plot(args) -> int:
    from .plots import export_plots

    written = export_plots(args.run_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jerkrom",
        description="Jerk-regularized latent dynamics for spatiotemporal forecasting.",
    )
    parser.add_argument("--version", action="version", version=f"jerkrom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        return p

    p = add("gen-data", cmd_gen_data, help="generate a solver dataset")
    p.add_argument("--config", required=True, help="YAML config file")
    p.add_argument("--out", help="run directory (default: timestamped under $JERKROM_RUN_ROOT)")
    p.add_argument("--force", action="store_true")

    p = add("inspect", cmd_inspect, help="print shapes, splits, stats of a container")
    p.add_argument("path")

    p = add("train-ae", cmd_train_ae, help="stage I: train the jerk-regularized autoencoder")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="dataset container")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")

    p = add("encode", cmd_encode, help="encode trajectories into latent archives")
    p.add_argument("--ckpt", required=True, help="stage-I (or II) checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--split", choices=["train", "test", "all"], default="all")
    p.add_argument("--window", choices=["train", "full"], default="train")
    p.add_argument("--force", action="store_true")

    p = add("train-ode", cmd_train_ode, help="stage II: train the latent ODE")
    p.add_argument("--config", required=True)
    p.add_argument("--ckpt", required=True, help="stage-I checkpoint (encoder/decoder reused)")
    p.add_argument("--latents", required=True, help="latent archive (training split)")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")

    p = add("predict", cmd_predict, help="forecast from an initial snapshot")
    p.add_argument("--ckpt", required=True, help="stage-II checkpoint")
    p.add_argument("--init", required=True, help=".npy initial snapshot at encoder resolution")
    p.add_argument("--times", required=True, help="comma-separated absolute times")
    p.add_argument("--res", type=int, required=True, help="output grid resolution per axis")
    p.add_argument("--t0", type=float, default=0.0, help="time of the initial snapshot")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")

    p = add("eval", cmd_eval, help="rollout evaluation on the test split")
    p.add_argument("--ckpt", required=True, help="stage-II checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")

    p = add("sweep-lambda", cmd_sweep_lambda, help="train stage I per jerk coefficient")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--lambdas", default="0,0.05,0.1,0.2,0.5")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")

    p = add("plot", cmd_plot, help="export figures/tables from a run directory")
    p.add_argument("run_dir")

    p = add("selftest", cmd_selftest, help="run the built-in analytic-oracle suite")

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        print(f"error: {exc}{key}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 3
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except JerkromError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
