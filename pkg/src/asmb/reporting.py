"""CSV and figure output for the long-running command paths.

Reports come in pairs: a delimited file downstream tooling can ingest and a
rendered PNG of the same series for a quick look. Both land in the requested
directory; callers get the paths back to echo in their diagnostics.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

STATS_COLUMNS = (
    "n_objects",
    "n_moving",
    "pair_tests_executed",
    "pairs_colliding",
    "broad_candidates",
)


def write_relax_report(result, out_dir: str) -> dict:
    """Write residuals.csv and residuals.png from a relaxation history."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "residuals.csv")
    png_path = os.path.join(out_dir, "residuals.png")

    history = list(result.residual_history)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "max_residual"])
        for step, value in enumerate(history):
            writer.writerow([step, repr(value)])

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(range(len(history)), history, color="tab:blue")
    ax.set_xlabel("relaxation step")
    ax.set_ylabel("max |length − rest|")
    if history and min(history) > 0.0:
        ax.set_yscale("log")
    verb = "converged in" if result.converged else "not converged after"
    ax.set_title(f"spring relaxation: {verb} {result.steps_used} steps")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "png": png_path}


def write_stats_report(rows: list[dict], out_dir: str) -> dict:
    """Write stats.csv and stats.png from per-step collision statistics.

    Each row is a dict with a "step" key plus the STATS_COLUMNS counters, the
    same shape the stats stream prints.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "stats.csv")
    png_path = os.path.join(out_dir, "stats.png")

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step",) + STATS_COLUMNS)
        for row in rows:
            writer.writerow([row["step"]] + [row[c] for c in STATS_COLUMNS])

    steps = [row["step"] for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for column in ("pair_tests_executed", "broad_candidates", "pairs_colliding"):
        ax.plot(steps, [row[column] for row in rows], label=column)
    ax.set_xlabel("step")
    ax.set_ylabel("count")
    ax.set_title("collision statistics")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "png": png_path}
