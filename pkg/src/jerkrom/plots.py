"""Static plot/table export from run artifacts.

export_plots() mirrors the four standard report figures: the error
propagation curve with shaded training/extrapolation windows, latent
coordinate time series annotated with their average jerk, the stage-I
loss history, and the jerk-coefficient sweep chart. Inputs are read
from a run directory; all absent inputs are reported together.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .datastore import load_latents
from .errors import MissingArtifactError
from .infer import EvalReport
from .metrics import average_jerk

EXPECTED_INPUTS = (
    os.path.join("eval", "report.json"),
    os.path.join("latents", "test"),
    os.path.join("logs", "stage1_epochs.csv"),
    os.path.join("sweep", "sweep.csv"),
)


def _read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_error_propagation(report: EvalReport, out_png, out_csv) -> None:
    times = np.asarray(report.times)
    curve = np.asarray(report.rrmse_per_time)
    fig, ax = plt.subplots(figsize=(7, 4))
    a, b = report.window_interp
    c, d = report.window_extrap
    ax.axvspan(times[a], times[b - 1], color="green", alpha=0.15, label="training window")
    if d > c:
        ax.axvspan(times[c], times[d - 1], color="red", alpha=0.15, label="extrapolation")
    ax.plot(times, curve, marker="o", ms=3, lw=1.5)
    ax.set_xlabel("t")
    ax.set_ylabel("relative RMSE")
    ax.set_yscale("log")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "relative_rmse"])
        writer.writerows(zip(times, curve))


def plot_latent_trajectories(latents, out_png, max_traj: int = 1) -> None:
    fig, axes = plt.subplots(1, max_traj, figsize=(6 * max_traj, 4), squeeze=False)
    for ax, lt in zip(axes[0], latents[:max_traj]):
        for j in range(lt.d_z):
            ax.plot(lt.times, lt.values[:, j], lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("latent coordinates")
        ax.set_title(f"trajectory {lt.traj_id}: average jerk {average_jerk(lt):.2e}")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def plot_loss_history(epoch_rows, out_png) -> None:
    epochs = [int(r["epoch"]) for r in epoch_rows]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for key, label in (("train_recon", "train"), ("test_recon", "test")):
        vals = [float(r[key]) for r in epoch_rows]
        axes[0].plot(epochs, vals, label=label)
    axes[0].set_ylabel("reconstruction MSE")
    for key, label in (("train_jerk", "train"), ("test_jerk", "test")):
        vals = [float(r[key]) for r in epoch_rows]
        axes[1].plot(epochs, vals, label=label)
    axes[1].set_ylabel("jerk loss")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.set_yscale("log")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def plot_lambda_sweep(rows, out_png) -> None:
    lams = [float(r["lam"]) for r in rows]
    recon = [float(r["test_recon"]) for r in rows]
    jerk = [float(r["test_jerk"]) for r in rows]
    best = int(np.nanargmin(recon))
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    x = np.arange(len(lams))
    axes[0].bar(x, recon, color=["tab:orange" if i == best else "tab:blue" for i in x])
    axes[0].set_ylabel("test reconstruction MSE")
    axes[1].bar(x, jerk, color="tab:gray")
    axes[1].set_ylabel("test jerk loss")
    for ax in axes:
        ax.set_xticks(x, [f"{l:g}" for l in lams])
        ax.set_xlabel("jerk coefficient")
        ax.set_yscale("log")
    axes[0].annotate("min", (best, recon[best]), ha="center", va="bottom")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def export_plots(run_dir) -> list:
    """Render every figure whose inputs exist under run_dir.

    Raises MissingArtifactError listing every absent input. Returns the
    list of files written (plots/ subdirectory of the run).
    """
    run_dir = os.fspath(run_dir)
    missing = [p for p in EXPECTED_INPUTS if not os.path.exists(os.path.join(run_dir, p))]
    if missing:
        raise MissingArtifactError([os.path.join(run_dir, p) for p in missing])

    out_dir = os.path.join(run_dir, "plots")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    report = EvalReport.load(os.path.join(run_dir, "eval", "report.json"))
    png = os.path.join(out_dir, "rmse_vs_time.png")
    csv_path = os.path.join(out_dir, "rmse_vs_time.csv")
    plot_error_propagation(report, png, csv_path)
    written += [png, csv_path]

    latents = load_latents(os.path.join(run_dir, "latents", "test"))
    png = os.path.join(out_dir, "latent_trajectories.png")
    plot_latent_trajectories(latents, png)
    written.append(png)

    rows = _read_csv(os.path.join(run_dir, "logs", "stage1_epochs.csv"))
    png = os.path.join(out_dir, "loss_history.png")
    plot_loss_history(rows, png)
    written.append(png)

    rows = _read_csv(os.path.join(run_dir, "sweep", "sweep.csv"))
    png = os.path.join(out_dir, "lambda_sweep.png")
    plot_lambda_sweep(rows, png)
    written.append(png)
    return written
