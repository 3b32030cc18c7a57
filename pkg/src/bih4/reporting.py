"""Deterministic report writers: JSON summaries, CSV series, and figures.

JSON output is byte-identical for identical config + seed (sorted keys, fixed
float formatting, no timestamps).  Figures are rendered to files next to the
delimited output; matplotlib is imported lazily so the numerical core never
depends on it.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload: dict) -> None:
    body = dict(payload)
    body.setdefault("bih4_version", __version__)
    text = json.dumps(_jsonable(body), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])


def _axes(title, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def render_decay_figure(path, ts, sups, slope, intercept, alpha) -> None:
    fig, ax = _axes(f"sup-kernel decay (alpha={alpha:g})", "t", "sup |K(t)|")
    ax.loglog(ts, sups, "o", label="measured")
    ax.loglog(ts, np.exp(intercept) * np.asarray(ts) ** slope, "-",
              label=f"fit slope {slope:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_expansion_figure(path, mus, norms, used, exponent) -> None:
    fig, ax = _axes("resolvent blow-up at threshold", "mu", "||M(mu)^-1||")
    mus, norms, used = np.asarray(mus), np.asarray(norms), np.asarray(used)
    ax.loglog(mus[used], norms[used], "o", label="fit samples")
    if np.any(~used):
        ax.loglog(mus[~used], norms[~used], "x", label="above cond cap")
    ax.loglog(mus, norms[used][0] * (mus / mus[used][0]) ** exponent, "--",
              label=f"slope {exponent:.2f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_classify_figure(path, stage_reports) -> None:
    fig, ax = _axes("stage spectra near the threshold", "stage", "|eigenvalue|")
    ax.set_yscale("log")
    for i, (name, rep) in enumerate(stage_reports.items()):
        if not isinstance(rep, dict) or "eigs_smallest" not in rep:
            continue
        vals = [abs(x) for x in rep["eigs_smallest"] if x != 0]
        ax.plot([i] * len(vals), vals, "o", label=rep.get("stage", name))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_identities_figure(path, residuals: dict) -> None:
    names = list(residuals)
    vals = [max(abs(residuals[n]), 1e-18) for n in names]
    fig, ax = _axes("identity residuals", "", "residual")
    ax.bar(range(len(names)), vals)
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_strichartz_figure(path, windows, ratios, label) -> None:
    fig, ax = _axes("Strichartz window stability", "window end", "norm ratio")
    ax.plot(windows, ratios, "o-", label=label)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def _close(fig):
    import matplotlib.pyplot as plt

    plt.close(fig)
