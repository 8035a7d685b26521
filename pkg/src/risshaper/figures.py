"""Render campaign CSV outputs to PNG figures.

Each campaign figure gets a matching plot next to its CSV: CDF curves,
coverage heatmaps, and rate-versus-sweep lines.  Plotting is best effort
presentation; the CSV stays the authoritative output.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STRATEGY_COLORS = {"hpg": "tab:blue", "mpg": "tab:red", "rpg": "tab:green",
                    "no-ris": "tab:gray"}


def _read_rows(csv_path: str | Path) -> list[dict]:
    with open(csv_path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_figure(csv_path: str | Path, figure: str, png_path: str | Path) -> Path:
    rows = _read_rows(csv_path)
    png_path = Path(png_path)
    if figure == "erank-cdf":
        _render_cdf(rows, png_path, metric_col="metric", value_col="value",
                    xlabel="rank / effective rank")
    elif figure == "tcn-cdf":
        _render_cdf(rows, png_path, metric_col=None, value_col="value",
                    xlabel="truncated condition number", logx=True)
    elif figure == "heatmap":
        _render_heatmap(rows, png_path)
    elif figure == "se-power":
        _render_sweep(rows, png_path, x_col="power_dbm",
                      xlabel="transmit power (dBm)")
    elif figure == "se-rician":
        _render_sweep(rows, png_path, x_col="rician_db",
                      xlabel="Rician factor (dB)")
    else:
        raise ValueError(f"no renderer for figure '{figure}'")
    return png_path


def _render_cdf(rows, png_path, metric_col, value_col, xlabel, logx=False):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    groups: dict[tuple, list] = {}
    for r in rows:
        key = (r["strategy"], r["s"], r[metric_col] if metric_col else "")
        groups.setdefault(key, []).append((float(r[value_col]), float(r["cdf"])))
    for (strategy, s, metric), pts in sorted(groups.items()):
        xs = [p[0] for p in pts if math.isfinite(p[0])]
        ys = [p[1] for p in pts if math.isfinite(p[0])]
        if not xs:
            continue
        label = f"{strategy} s={s}" + (f" {metric}" if metric else "")
        style = "--" if metric == "erank" else "-"
        ax.plot(xs, ys, style, lw=1.0, label=label,
                color=_STRATEGY_COLORS.get(strategy))
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def _render_heatmap(rows, png_path):
    panels: dict[tuple, list] = {}
    for r in rows:
        panels.setdefault((r["strategy"], r["s"]), []).append(
            (float(r["x_m"]), float(r["y_m"]), float(r["t_s"])))
    keys = sorted(panels)
    n = len(keys)
    cols = min(n, 2)
    rows_n = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows_n, cols, figsize=(5.5 * cols, 4.5 * rows_n),
                             squeeze=False)
    for ax in axes.flat[n:]:
        ax.axis("off")
    for ax, key in zip(axes.flat, keys):
        pts = panels[key]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ts = [min(p[2], 1e3) if math.isfinite(p[2]) else 1e3 for p in pts]
        sc = ax.scatter(xs, ys, c=ts, s=6, cmap="viridis",
                        norm=matplotlib.colors.LogNorm(vmin=1.0, vmax=max(ts)))
        fig.colorbar(sc, ax=ax, label="T_s")
        ax.set_title(f"{key[0]} s={key[1]}")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def _render_sweep(rows, png_path, x_col, xlabel):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    groups: dict[tuple, list] = {}
    for r in rows:
        alloc = r.get("allocation", "")
        key = (r["strategy"], r["scheme"], alloc)
        groups.setdefault(key, []).append(
            (float(r[x_col]), float(r["mean_se"]), float(r["ci95"])))
    markers = {"cc-hybrid": "o", "svd": "s", "truncated-svd": "^"}
    for (strategy, scheme, alloc), pts in sorted(groups.items()):
        pts.sort()
        xs, ys, ci = zip(*pts)
        label = f"{strategy} {scheme}" + (f" ({alloc})" if alloc else "")
        ax.errorbar(xs, ys, yerr=ci, marker=markers.get(scheme, "."),
                    ms=3, lw=1.0, capsize=2, label=label,
                    color=_STRATEGY_COLORS.get(strategy),
                    ls="--" if alloc == "equal" else "-")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("average SE (bits/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
