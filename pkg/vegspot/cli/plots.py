"""deterministic SVG figures for the subcommands"""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "vegspot"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def profile_plot(profile, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    r = profile.grid.nodes
    ax.plot(r, profile.u, label="u")
    ax.plot(r, profile.v, label="v")
    for radius in profile.interfaces:
        ax.axvline(radius, color="grey", linewidth=0.5)
    ax.set_xlabel("r")
    ax.set_title(f"{profile.kind.value}, a = {profile.params.a:g}")
    ax.legend()
    return _save(fig, path)


def spectrum_plot(rows, path):
    """rightmost Re lambda against l"""
    rows = np.asarray(rows, dtype=float).reshape(-1, 4)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rows[:, 0], rows[:, 1], "o-", markersize=3)
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("l")
    ax.set_ylabel("Re lambda")
    return _save(fig, path)


def regions_plot(a_over_m, b_values, admissible, classification, path):
    """admissible cells shaded by their spot (1) / gap (-1) label"""
    fig, ax = plt.subplots(figsize=(6, 4))
    image = np.where(admissible, classification, np.nan)
    ax.pcolormesh(a_over_m, b_values, image.T, shading="nearest", cmap="coolwarm", vmin=-1, vmax=1)
    ax.set_xlabel("a / m")
    ax.set_ylabel("b")
    return _save(fig, path)


def front_plot(front, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(front.xi, front.u, label="u")
    ax.plot(front.xi, front.v, label="v")
    ax.set_xlabel("xi")
    ax.set_title(f"c = {front.speed:.4g}")
    ax.legend()
    return _save(fig, path)


def branch_plot(rows, path):
    rows = np.asarray(rows, dtype=float).reshape(-1, 2)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rows[:, 0], rows[:, 1], "-")
    ax.set_xlabel("a")
    ax.set_ylabel("r_I")
    return _save(fig, path)


def field_plot(field, path):
    fig, ax = plt.subplots(figsize=(5, 5))
    extent = (0.0, field.length, 0.0, field.length)
    ax.imshow(field.v.T, origin="lower", extent=extent, cmap="Greens")
    ax.set_title(f"v at t = {field.t:g}")
    return _save(fig, path)
