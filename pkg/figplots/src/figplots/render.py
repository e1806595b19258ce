"""Render experiment metrics CSVs into the four standard figures.

Input files follow the harness schema (one row per trial with the columns in
:data:`REQUIRED_COLUMNS`).  Slope fits run on per-grid-point medians of rows
whose ``error`` column is empty; fits with fewer than two distinct abscissae
are omitted from the sidecar with reason ``"degenerate fit"``.  Rendering is
deterministic: the same CSV produces an identical sidecar.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "figplots"
import matplotlib.pyplot as plt
import numpy as np

FIGURES = ("fig1", "fig2", "fig3", "fig4")
FORMATS = ("png", "svg")

REQUIRED_COLUMNS = (
    "experiment", "trial", "seed", "p", "n", "t", "method", "fro_F",
    "l1_P_over_p", "mu_hat", "iters", "wall_ms", "error", "extra_json",
)


@dataclass(frozen=True)
class FigureRequest:
    figure: str
    input_csv: str
    output_path: str
    format: str = "png"

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"figure must be one of {FIGURES}, got {self.figure!r}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")


def load_metrics(path) -> list[dict]:
    """Read and validate a metrics CSV; numeric fields are converted."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: metrics CSV is missing columns: {missing}")
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in ("p", "n", "trial", "iters"):
                row[key] = int(raw[key])
            for key in ("t", "fro_F", "l1_P_over_p", "mu_hat"):
                row[key] = float(raw[key])
            rows.append(row)
    return rows


def clean(rows: list[dict]) -> list[dict]:
    return [r for r in rows if not r["error"]]


def _medians(rows, x_key, y_key, group=lambda r: None):
    """Per-group {x: median(y)} over error-free rows."""
    out = {}
    for row in rows:
        out.setdefault(group(row), {}).setdefault(row[x_key], []).append(row[y_key])
    return {g: {x: statistics.median(ys) for x, ys in sorted(xs.items())}
            for g, xs in out.items()}


def _fit(xs, ys):
    xs = [x for x, y in zip(xs, ys) if y > 0 and x > 0]
    ys = [y for y in ys if y > 0]
    if len(set(xs)) < 2 or len(xs) != len(ys):
        return {"omitted": "degenerate fit"}
    slope, intercept = np.polyfit(np.log(np.asarray(xs, float)),
                                  np.log(np.asarray(ys, float)), 1)
    return {"slope": float(slope), "intercept": float(intercept), "points": len(xs)}


def _loglog_panel(ax, medians, label, annotate):
    xs = list(medians)
    ys = [medians[x] for x in xs]
    ax.loglog(xs, ys, "o-", label=label)
    fit = _fit(xs, ys)
    if annotate and "slope" in fit:
        ax.annotate(f"slope {fit['slope']:.2f}", xy=(0.05, 0.05),
                    xycoords="axes fraction")
    return fit


def _render_fig1(rows, axes):
    slopes = {}
    kinds = sorted({r["method"] for r in rows})
    for ax, kind in zip(axes, kinds):
        for row in rows:
            if row["method"] != kind:
                continue
            extra = json.loads(row["extra_json"])
            trace = extra.get("truth_error_trace") or extra.get("objective_trace") or []
            if trace:
                ax.semilogy(range(1, len(trace) + 1), trace, alpha=0.8)
        ax.set_title(kind)
        ax.set_xlabel("iteration")
        ax.set_ylabel("error to ground truth")
    return slopes


def _render_fig2(rows, axes):
    fro = _medians(rows, "n", "fro_F")[None]
    l1 = _medians(rows, "n", "l1_P_over_p")[None]
    mu = _medians(rows, "n", "mu_hat")[None]
    axes[0].plot(list(fro), list(fro.values()), "o-")
    axes[0].set_xlabel("n")
    axes[0].set_ylabel("frequency error (Frobenius)")
    slopes = {"fro_F": _loglog_panel(axes[1], fro, "fro", True)}
    axes[1].set_xlabel("n")
    slopes["l1_P_over_p"] = _loglog_panel(axes[2], l1, "l1/p", True)
    axes[2].set_xlabel("n")
    axes[2].set_ylabel("transition error (l1/p)")
    axes[3].plot(list(mu), list(mu.values()), "o-")
    axes[3].set_xlabel("n")
    axes[3].set_ylabel("incoherence of the fit")
    return slopes


def _render_fig3(rows, axes):
    by_method = _medians(rows, "p", "fro_F", group=lambda r: r["method"])
    slopes = {}
    for method, medians in sorted(by_method.items()):
        axes[0].plot(list(medians), list(medians.values()), "o-", label=method)
        slopes[method] = _loglog_panel(axes[1], medians, method, True)
    axes[0].set_xlabel("p")
    axes[0].set_ylabel("frequency error (Frobenius)")
    axes[0].legend()
    axes[1].set_xlabel("p")
    axes[1].legend()
    return slopes


def _render_fig4(rows, axes):
    slopes = {}
    for metric, ax in zip(("fro_F", "l1_P_over_p"), axes):
        grouped = _medians(rows, "n", metric,
                           group=lambda r: (r["method"], r["t"]))
        for (method, t), medians in sorted(grouped.items()):
            label = f"{method}, t={t:g}"
            ax.plot(list(medians), list(medians.values()), "o-", label=label)
            slopes[f"{metric}[{label}]"] = _fit(list(medians), list(medians.values()))
        ax.set_xlabel("n")
        ax.set_ylabel(metric)
        ax.legend()
    return slopes


def render(request: FigureRequest) -> dict:
    """Render one figure plus its sidecar; returns the sidecar payload.

    The sidecar lands next to the image as ``<output_path>.slopes.json``.
    Rows with a nonempty error column never crash rendering; they are simply
    excluded.  An empty selection raises before any file is written.
    """
    rows = clean(load_metrics(request.input_csv))
    if not rows:
        raise ValueError(f"{request.input_csv}: no error-free rows to plot")

    n_axes = {"fig1": 3, "fig2": 4, "fig3": 2, "fig4": 2}[request.figure]
    ncols = 2 if n_axes > 2 else n_axes
    nrows = (n_axes + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6 * ncols, 4.5 * nrows))
    axes = np.atleast_1d(axes).ravel()
    try:
        renderer = {"fig1": _render_fig1, "fig2": _render_fig2,
                    "fig3": _render_fig3, "fig4": _render_fig4}[request.figure]
        slopes = renderer(rows, axes)
        for ax in axes[n_axes:]:
            ax.set_visible(False)
        fig.suptitle(request.figure)
        fig.tight_layout()
        fig.savefig(request.output_path, format=request.format,
                    metadata={"Date": None} if request.format == "svg" else None)
    finally:
        plt.close(fig)

    sidecar = {"figure": request.figure, "input": Path(request.input_csv).name,
               "rows_used": len(rows), "slopes": slopes}
    sidecar_path = f"{request.output_path}.slopes.json"
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return sidecar
