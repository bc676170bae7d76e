"""Figure emission: delimited data, a gnuplot script and a rendered PNG per figure."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "line"  # or "points"


def _style_axes(ax):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.grid(True, which="major", alpha=0.3)


def line_figure(out_dir, name, series, xlabel, ylabel, logx=False, logy=False, title=""):
    """Write ``name.csv`` (series, x, y), ``name.plt`` and ``name.png``; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["series", "x", "y"])
        for s in series:
            for xv, yv in zip(np.asarray(s.x, float), np.asarray(s.y, float)):
                wr.writerow([s.label, repr(float(xv)), repr(float(yv))])

    # one data block per series so gnuplot can address them by index
    dat_path = os.path.join(out_dir, f"{name}.dat")
    with open(dat_path, "w") as fh:
        for s in series:
            fh.write(f"# {s.label}\n")
            for xv, yv in zip(np.asarray(s.x, float), np.asarray(s.y, float)):
                fh.write(f"{float(xv)!r} {float(yv)!r}\n")
            fh.write("\n\n")
    plt_path = os.path.join(out_dir, f"{name}.plt")
    with open(plt_path, "w") as fh:
        fh.write("set terminal pngcairo size 800,560\n")
        fh.write(f"set output '{name}_gnuplot.png'\n")
        if title:
            fh.write(f"set title '{title}'\n")
        fh.write(f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n")
        if logx:
            fh.write("set logscale x\n")
        if logy:
            fh.write("set logscale y\n")
        fh.write("set key top right\n")
        parts = []
        for i, s in enumerate(series):
            how = "points pt 7 ps 0.6" if s.style == "points" else "lines lw 2"
            parts.append(f"'{name}.dat' index {i} using 1:2 with {how} title '{s.label}'")
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")

    png_path = os.path.join(out_dir, f"{name}.png")
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for s in series:
        if s.style == "points":
            ax.plot(s.x, s.y, "o", ms=3, label=s.label)
        else:
            ax.plot(s.x, s.y, lw=1.6, label=s.label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _style_axes(ax)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return csv_path, plt_path, png_path


def heatmap_figure(out_dir, name, matrix, x, y, xlabel, ylabel, title=""):
    """Heatmap of ``log10|matrix|`` with rows indexed by ``y`` and columns by ``x``."""
    os.makedirs(out_dir, exist_ok=True)
    z = np.log10(np.maximum(np.abs(np.asarray(matrix, float)), 1e-300))
    mat_path = os.path.join(out_dir, f"{name}_matrix.dat")
    # gnuplot "nonuniform matrix" layout: first row holds x, first column holds y
    with open(mat_path, "w") as fh:
        fh.write(" ".join([repr(float(len(x)))] + [repr(float(v)) for v in x]) + "\n")
        for yv, row in zip(y, z):
            fh.write(" ".join([repr(float(yv))] + [repr(float(v)) for v in row]) + "\n")
    plt_path = os.path.join(out_dir, f"{name}.plt")
    with open(plt_path, "w") as fh:
        fh.write("set terminal pngcairo size 800,640\n")
        fh.write(f"set output '{name}_gnuplot.png'\n")
        if title:
            fh.write(f"set title '{title}'\n")
        fh.write(f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n")
        fh.write("set view map\nset cblabel 'log10 |value|'\n")
        fh.write(f"plot '{name}_matrix.dat' nonuniform matrix with image notitle\n")
    png_path = os.path.join(out_dir, f"{name}.png")
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    zmax = np.max(z)
    im = ax.pcolormesh(x, y, z, shading="auto", cmap="viridis", vmin=zmax - 12, vmax=zmax)
    fig.colorbar(im, ax=ax, label="log10 |value|")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return mat_path, plt_path, png_path
