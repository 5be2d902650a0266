"""Figures written next to the CSV and JSON artifacts of a run.

Only the report path of the command line tool uses this module; nothing
certified depends on it.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=path.suffix)
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=120)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def plot_beta_intervals(trace, path, P0=None, modes: int | None = None) -> Path:
    """Lower and upper ends of the leading coordinates against time."""
    t = np.array([rec.t.mid for rec in trace])
    lo = np.array([rec.leading.lo for rec in trace])
    hi = np.array([rec.leading.hi for rec in trace])
    if P0 is not None:
        t = np.concatenate([[0.0], t])
        lo = np.vstack([P0.lo, lo])
        hi = np.vstack([P0.hi, hi])
    n = lo.shape[1] if modes is None else min(modes, lo.shape[1])
    cols = min(n, 4)
    rows = int(np.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.4 * rows), squeeze=False, sharex=True)
    for j in range(rows * cols):
        ax = axes[j // cols][j % cols]
        if j >= n:
            ax.set_visible(False)
            continue
        ax.fill_between(t, lo[:, j], hi[:, j], color="tab:blue", alpha=0.35, linewidth=0)
        ax.plot(t, 0.5 * (lo[:, j] + hi[:, j]), color="tab:blue", linewidth=0.8)
        ax.set_title(f"beta_{j + 1}", fontsize=9)
        ax.tick_params(labelsize=7)
    for ax in axes[-1]:
        ax.set_xlabel("t", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_widths(trace, path) -> Path:
    """Largest residual width and the largest set widths per step (log scale)."""
    t = np.array([rec.t.mid for rec in trace])
    eps = np.array([rec.eps_max for rec in trace])
    eps_rem = np.array([rec.eps_remainder_max for rec in trace])
    lead = np.array([float(np.max(rec.leading.width)) for rec in trace])
    tail = np.array([float(np.max(rec.tail.width)) if len(rec.tail) else 0.0 for rec in trace])
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.semilogy(t, eps, label="max eps")
    ax.semilogy(t, eps_rem, label="max eps, remainder part", linestyle="--")
    ax.semilogy(t, lead, label="max leading width")
    if np.any(tail > 0):
        ax.semilogy(t, tail, label="max tail width")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
