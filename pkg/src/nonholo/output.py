"""Trajectory artifacts: CSV table, summary text and SVG plots."""

import csv

import numpy as np

from .car import front_wheel

CAR_COLUMNS = (
    "t", "x1", "y1", "theta", "phi",
    "z1", "z2", "z3", "z4", "w1", "w2", "w3", "w4",
    "p1", "p2", "u1", "u2", "H_d", "Hdot_d", "c_res",
)


def format_float(x, exact=False):
    """Shortest round-trip text, or 17 significant digits with ``exact``."""
    x = float(x)
    return format(x, ".17g") if exact else repr(x)


def trajectory_rows(rec):
    """Yield one tuple per sample in :data:`CAR_COLUMNS` order."""
    names = ("q", "z", "w", "p", "u", "H_d", "Hdot_d", "c_res")
    table = np.column_stack([rec.t] + [rec[name] for name in names])
    if table.shape[1] != len(CAR_COLUMNS):
        raise ValueError(f"record has {table.shape[1]} columns, expected {len(CAR_COLUMNS)}")
    yield from table


def write_csv(path, rec=None, exact=False):
    """Write the trajectory table; ``rec=None`` writes the header only."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CAR_COLUMNS)
        if rec is not None:
            for row in trajectory_rows(rec):
                writer.writerow([format_float(v, exact) for v in row])


def write_summary(path, diag, message=""):
    text = diag.text()
    if message:
        text += f"message: {message}\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def write_plots(out_dir, rec, l):
    """``q`` against time and the paths of both wheels, as standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    q = rec["q"]
    xf, yf = front_wheel(q, l)
    paths = [out_dir / "configuration.svg", out_dir / "path.svg"]
    # fixed metadata and id salt keep the files byte-stable between identical runs
    meta = {"Date": None, "Creator": None}
    with plt.rc_context({"svg.hashsalt": "nonholo"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        for i, name in enumerate((r"$x_1$", r"$y_1$", r"$\theta$", r"$\phi$")):
            ax.plot(rec.t, q[:, i], label=name)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("configuration")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(paths[0], format="svg", metadata=meta)
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(6, 5))
        ax.plot(q[:, 0], q[:, 1], label="rear wheel")
        ax.plot(xf, yf, label="front wheel")
        ax.plot(q[0, 0], q[0, 1], "ko", ms=4)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(paths[1], format="svg", metadata=meta)
        plt.close(fig)
    return paths
