"""The five figure kinds.

Each maker returns a matplotlib Figure so tests can inspect geometry
without touching pixels; ``render`` drives them from a FigureSpec JSON and
writes the image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import SchemaError, load_csv

__all__ = ["FigureSpec", "render", "FIGURE_KINDS"]

# crossover thresholds of the time exponent a against the asymmetry decay
# kappa: fractional line a = 3/2 + 3 kappa/2 up to the triple point at
# kappa = 1/3, diffusive line a = 2 beyond it
KAPPA_STAR = 1.0 / 3.0
A_DIFFUSIVE = 2.0


def a_threshold(kappa: np.ndarray) -> np.ndarray:
    return np.minimum(1.5 + 1.5 * np.asarray(kappa), A_DIFFUSIVE)


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict = field(default_factory=dict)
    output: str = "figure.png"
    options: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path: str | Path) -> "FigureSpec":
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - {"kind", "inputs", "output", "options"}
        if unknown:
            raise SchemaError(f"unknown figure-spec fields {sorted(unknown)}")
        if "kind" not in doc:
            raise SchemaError("figure spec needs a 'kind'")
        return cls(kind=doc["kind"], inputs=doc.get("inputs", {}),
                   output=doc.get("output", "figure.png"),
                   options=doc.get("options", {}))


def make_phase_diagram(spec: FigureSpec) -> plt.Figure:
    """(kappa, a) plane with the three threshold lines; optional markers from
    options['points'] = [[kappa, a, label], ...]."""
    fig, ax = plt.subplots(figsize=(5, 4))
    kap_frac = np.linspace(0.0, KAPPA_STAR, 100)
    ax.plot(kap_frac, 1.5 + 1.5 * kap_frac, color="tab:red", lw=2,
            label="3/2-stable line a = 3/2 + 3k/2")
    kap_diff = np.linspace(KAPPA_STAR, 1.0, 100)
    ax.plot(kap_diff, np.full_like(kap_diff, A_DIFFUSIVE), color="tab:green",
            lw=2, label="diffusive line a = 2")
    ax.axvline(KAPPA_STAR, ls="--", color="gray", lw=1, label="kappa = 1/3")
    ax.fill_between(np.linspace(0, 1, 50), 0,
                    a_threshold(np.linspace(0, 1, 50)), alpha=0.15,
                    color="tab:orange")
    for pt in spec.options.get("points", []):
        kappa, a = float(pt[0]), float(pt[1])
        ax.plot([kappa], [a], "ko", ms=5)
        if len(pt) > 2:
            ax.annotate(str(pt[2]), (kappa, a), textcoords="offset points",
                        xytext=(4, 4), fontsize=8)
    ax.set_xlabel("kappa (asymmetry decay)")
    ax.set_ylabel("a (time exponent)")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 2.6)
    ax.legend(fontsize=7, loc="lower right")
    ax.set_title("crossover phase diagram")
    return fig


def make_kernel_overlay(spec: FigureSpec) -> plt.Figure:
    """Normalized correlation profiles against fundamental-solution kernels,
    one panel per time.  inputs: correlation=..., kernels={t: path}."""
    corr = load_csv(spec.inputs["correlation"], "correlation")
    kernels = spec.inputs.get("kernels", {})
    times = np.unique(corr["t"])
    fig, axes = plt.subplots(1, len(times), figsize=(4 * len(times), 3.2),
                             squeeze=False)
    for ax, t in zip(axes[0], times):
        sel = corr["t"] == t
        j = corr["j"][sel]
        S = corr["S"][sel]
        n = len(j)
        mass = S.sum()
        ax.plot(j / n, n * S / mass, ".", ms=3, label="chain (normalized)")
        key = next((k for k in kernels if np.isclose(float(k), t)), None)
        if key is not None:
            kern = load_csv(kernels[key], "kernel")
            ax.plot(kern["x"], kern["P"], "-", lw=1.2, label="kernel")
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
        ax.legend(fontsize=7)
    axes[0][0].set_ylabel("density")
    fig.tight_layout()
    return fig


def make_scaling_loglog(spec: FigureSpec) -> plt.Figure:
    """Log-log norm scalings with fitted slope annotations."""
    data = load_csv(spec.inputs["norms"], "norms")
    fig, ax = plt.subplots(figsize=(5, 4))
    for name in sorted(set(data["norm_name"])):
        sel = data["norm_name"] == name
        ns = data["n"][sel]
        vals = data["value"][sel]
        order = np.argsort(ns)
        ns, vals = ns[order], vals[order]
        slope = np.polyfit(np.log(ns), np.log(np.maximum(vals, 1e-300)), 1)[0]
        ax.loglog(ns, vals, "o-", ms=4, label=f"{name} (slope {slope:+.2f})")
    ax.set_xlabel("n")
    ax.set_ylabel("scaled norm")
    ax.legend(fontsize=7)
    ax.set_title("Poisson-solution norm scalings")
    return fig


def make_spectrum_flatness(spec: FigureSpec) -> plt.Figure:
    data = load_csv(spec.inputs["spectrum"], "spectrum")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(data["k"], data["variance"], yerr=3 * data["stderr"], fmt="o",
                ms=4, capsize=2, label="per-mode variance (3 sigma)")
    level = spec.options.get("level")
    if level is None:
        level = float(np.mean(data["variance"]))
    ax.axhline(float(level), color="tab:red", lw=1.2,
               label=f"white-noise level {float(level):g}")
    ax.set_xlabel("mode k")
    ax.set_ylabel("variance")
    ax.legend(fontsize=8)
    ax.set_title("stationary spectrum flatness")
    return fig


def make_classification_grid(spec: FigureSpec) -> plt.Figure:
    """Universality-class pairs at a list of state points from nlfh JSON
    reports.  inputs: reports=[path, ...]."""
    reports = [json.loads(Path(p).read_text()) for p in spec.inputs["reports"]]
    if not reports:
        raise SchemaError("classification grid needs at least one report")
    fig, ax = plt.subplots(figsize=(5.5, 0.7 + 0.45 * len(reports)))
    ax.axis("off")
    rows = [["v", "e", "beta", "sound mode", "heat mode"]]
    for doc in reports:
        pt = doc["point"]
        pair = doc.get("class_pair") or ["?", "?"]
        rows.append([f"{pt['v']:g}", f"{pt['e']:g}", f"{pt['beta']:g}",
                     str(pair[0]), str(pair[1])])
    table = ax.table(cellText=rows[1:], colLabels=rows[0], loc="center")
    table.scale(1.0, 1.3)
    ax.set_title("mode-coupling classification")
    return fig


FIGURE_KINDS = {
    "PhaseDiagram": make_phase_diagram,
    "KernelOverlay": make_kernel_overlay,
    "ScalingLogLog": make_scaling_loglog,
    "SpectrumFlatness": make_spectrum_flatness,
    "ClassificationGrid": make_classification_grid,
}


def render(spec: FigureSpec) -> Path:
    """Build and save the figure; returns the output path."""
    if spec.kind not in FIGURE_KINDS:
        raise SchemaError(
            f"unknown figure kind {spec.kind!r}; choose from {sorted(FIGURE_KINDS)}"
        )
    fig = FIGURE_KINDS[spec.kind](spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.options.get("dpi", 150))
    plt.close(fig)
    return out
