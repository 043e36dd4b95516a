#!/usr/bin/env python3
"""Plots for polyflux output directories.

usage: plot.py <out_dir> [--save prefix]

Draws whatever it finds: solution_t*.csv / discrete_t*.csv (w and y*),
convergence.csv (log-log errors), ensemble.csv (mean and variance of w)
and conjugate.csv.
"""
import argparse
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def read(path):
    with open(path) as f:
        header = f.readline().strip()
    data = np.genfromtxt(path, delimiter=",", names=True, skip_header=1, dtype=None, encoding=None)
    return header, data


def fields(out, stem, prefix):
    paths = sorted(glob.glob(os.path.join(out, f"{stem}_t*.csv")))
    if not paths:
        return
    fig, (aw, ay) = plt.subplots(1, 2, figsize=(10, 4))
    for p in paths:
        _, d = read(p)
        label = os.path.basename(p)[:-4]
        aw.plot(d["x"], d["w"], ".-", ms=2, label=label)
        ay.plot(d["x"], d["y_star"], ".-", ms=2, label=label)
    aw.set_xlabel("x")
    aw.set_ylabel("w")
    ay.set_xlabel("x")
    ay.set_ylabel("y*")
    aw.legend()
    fig.tight_layout()
    fig.savefig(f"{prefix}{stem}.png", dpi=120)


def convergence(out, prefix):
    p = os.path.join(out, "convergence.csv")
    if not os.path.exists(p):
        return
    _, d = read(p)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(d["epsilon"], d["w_err"], "o-", label="sup |w_eps - w|")
    ax.loglog(d["epsilon"], d["conj_gap"], "s-", label="conjugate gap")
    ax.set_xlabel("eps")
    ax.legend()
    fig.tight_layout()
    fig.savefig(f"{prefix}convergence.png", dpi=120)


def ensemble(out, prefix):
    p = os.path.join(out, "ensemble.csv")
    if not os.path.exists(p):
        return
    _, d = read(p)
    fig, (am, av) = plt.subplots(1, 2, figsize=(10, 4))
    am.errorbar(d["x"], d["mean_w"], yerr=d["ci_half"], fmt="o-")
    am.axhline(0.0, color="k", lw=0.5)
    am.set_xlabel("x")
    am.set_ylabel("mean w")
    av.plot(d["x"], d["var_w"], "o-", label="var w")
    av.plot(d["x"], np.abs(d["mean_ystar"]), "s--", label="|E y*|")
    av.set_xlabel("x")
    av.legend()
    fig.tight_layout()
    fig.savefig(f"{prefix}ensemble.png", dpi=120)


def conjugate(out, prefix):
    p = os.path.join(out, "conjugate.csv")
    if not os.path.exists(p):
        return
    _, d = read(p)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(d["m"], d["L"], "o-")
    ax.set_xlabel("p")
    ax.set_ylabel("L(p)")
    fig.tight_layout()
    fig.savefig(f"{prefix}conjugate.png", dpi=120)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--save", default=None, help="file prefix, default <out_dir>/")
    a = ap.parse_args()
    prefix = a.save if a.save is not None else os.path.join(a.out_dir, "")
    fields(a.out_dir, "solution", prefix)
    fields(a.out_dir, "discrete", prefix)
    convergence(a.out_dir, prefix)
    ensemble(a.out_dir, prefix)
    conjugate(a.out_dir, prefix)


if __name__ == "__main__":
    main()
