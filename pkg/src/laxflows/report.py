"""Report serialization: delimited output, JSON summaries, and figures.

CSV and summary.json are the machine-readable contract; every run also
renders matplotlib figures next to them (disable with ``plots: false``).
JSON output is deterministic: keys sorted, complex numbers as [re, im]
pairs, no timestamps or absolute paths.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .flows import ConservationReport

__all__ = [
    "conservation_figure",
    "jsonify",
    "refinement_figure",
    "residual_figure",
    "write_conservation_csv",
    "write_refinement_csv",
    "write_summary",
]


def jsonify(value):
    """Recursively convert to JSON-serializable data; complex -> [re, im]."""
    if isinstance(value, dict):
        return {str(k): jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonify(v) for v in value]
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return jsonify(value.tolist())
    raise TypeError(f"cannot serialize {type(value)!r}")


def write_summary(path, payload: dict) -> None:
    text = json.dumps(jsonify(payload), sort_keys=True, indent=2) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def write_conservation_csv(path, report: ConservationReport) -> None:
    """Columns: time, then <label>.re / <label>.im per invariant."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["time"]
        for label in report.labels:
            header += [f"{label}.re", f"{label}.im"]
        writer.writerow(header)
        for col, t in enumerate(report.times):
            row = [repr(float(t))]
            for idx in range(len(report.labels)):
                val = report.values[idx, col]
                row += [repr(float(val.real)), repr(float(val.imag))]
            writer.writerow(row)


def write_refinement_csv(path, columns: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


# --------------------------------------------------------------------------
# figures
# --------------------------------------------------------------------------
def conservation_figure(report: ConservationReport, path) -> None:
    """Semilog drift curves |v(t) - v(0)| for every tracked invariant."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    floor = 1e-18
    for idx, label in enumerate(report.labels):
        drift = np.abs(report.values[idx] - report.values[idx, 0])
        ax.semilogy(report.times, np.maximum(drift, floor), label=label, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("|v(t) - v(0)|")
    ax.set_title("invariant drift")
    ax.legend(fontsize=7, ncol=2, frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def residual_figure(checks: list[dict], path) -> None:
    """Log-scale bars of check residuals with tolerance ticks."""
    if not checks:
        return
    names = [c["name"] for c in checks]
    values = [max(c["value"], 1e-18) for c in checks]
    tols = [c["tolerance"] for c in checks]
    colors = ["tab:green" if c["pass"] else "tab:red" for c in checks]
    pos = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(7.5, 0.32 * len(names) + 1.5))
    ax.barh(pos, values, color=colors, log=True, height=0.6)
    ax.scatter(tols, pos, marker="|", s=120, color="black", zorder=3, label="tolerance")
    ax.set_yticks(pos)
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("residual")
    ax.legend(fontsize=7, frameon=False)
    ax.grid(True, axis="x", which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def refinement_figure(hs: list[float], series: dict[str, list[float]], path, order: int = 2) -> None:
    """Log-log refinement curves with an order-`order` guide line."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for label, vals in series.items():
        ax.loglog(hs, np.maximum(vals, 1e-18), "o-", label=label, lw=1.2)
    anchor = max(max(v) for v in series.values() if len(v)) if series else 1.0
    guide = [anchor * (h / hs[0]) ** order for h in hs]
    ax.loglog(hs, guide, "k--", lw=1.0, label=f"order {order}")
    ax.set_xlabel("h")
    ax.set_ylabel("residual / drift")
    ax.legend(fontsize=8, frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
