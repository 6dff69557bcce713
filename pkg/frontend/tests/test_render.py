import json
from pathlib import Path

import numpy as np
import pytest

from oscfluct_plots.render import (
    FIGURE_KINDS,
    A_DIFFUSIVE,
    KAPPA_STAR,
    FigureSpec,
    a_threshold,
    render,
)
from oscfluct_plots.schemas import SchemaError, load_csv

GOLD = Path(__file__).parent / "golden"


def spec_for(kind, out, **kw):
    inputs = kw.pop("inputs", {})
    options = kw.pop("options", {})
    return FigureSpec(kind=kind, inputs=inputs, output=str(out), options=options)


def all_specs(tmp_path):
    return {
        "PhaseDiagram": spec_for(
            "PhaseDiagram", tmp_path / "phase.png",
            options={"points": [[1.0, 2.0, "diffusive run"], [0.1, 1.65, "levy run"]]},
        ),
        "KernelOverlay": spec_for(
            "KernelOverlay", tmp_path / "overlay.png",
            inputs={
                "correlation": str(GOLD / "correlation.csv"),
                "kernels": {"0.1": str(GOLD / "kernel_t0.1.csv"),
                            "0.2": str(GOLD / "kernel_t0.2.csv")},
            },
        ),
        "ScalingLogLog": spec_for(
            "ScalingLogLog", tmp_path / "scaling.png",
            inputs={"norms": str(GOLD / "norms.csv")},
        ),
        "SpectrumFlatness": spec_for(
            "SpectrumFlatness", tmp_path / "spectrum.png",
            inputs={"spectrum": str(GOLD / "spectrum.csv")},
            options={"level": 1.0},
        ),
        "ClassificationGrid": spec_for(
            "ClassificationGrid", tmp_path / "classes.png",
            inputs={"reports": [str(GOLD / "nlfh_point1.json"),
                                str(GOLD / "nlfh_point2.json")]},
        ),
    }


def test_all_five_kinds_render_from_golden(tmp_path):
    specs = all_specs(tmp_path)
    assert set(specs) == set(FIGURE_KINDS)
    for kind, spec in specs.items():
        out = render(spec)
        assert out.exists() and out.stat().st_size > 2000, kind


def test_phase_diagram_threshold_lines(tmp_path):
    """The drawn lines sit exactly on a = 3/2 + 3 kappa/2 (kappa <= 1/3),
    a = 2 (kappa >= 1/3), and the vertical kappa = 1/3."""
    fig = FIGURE_KINDS["PhaseDiagram"](spec_for("PhaseDiagram", tmp_path / "p.png"))
    ax = fig.axes[0]
    lines = {ln.get_label(): ln for ln in ax.get_lines()}
    frac = lines["3/2-stable line a = 3/2 + 3k/2"]
    x, y = frac.get_xdata(), frac.get_ydata()
    assert np.max(x) == pytest.approx(KAPPA_STAR)
    np.testing.assert_allclose(y, 1.5 + 1.5 * np.asarray(x), atol=1e-12)
    assert y[0] == pytest.approx(1.5) and y[-1] == pytest.approx(2.0)
    diff = lines["diffusive line a = 2"]
    np.testing.assert_allclose(diff.get_ydata(), A_DIFFUSIVE, atol=1e-12)
    assert np.min(diff.get_xdata()) == pytest.approx(KAPPA_STAR)
    vert = lines["kappa = 1/3"]
    np.testing.assert_allclose(vert.get_xdata(), KAPPA_STAR, atol=1e-12)
    # the threshold function itself
    assert a_threshold(0.0) == pytest.approx(1.5)
    assert a_threshold(1.0 / 3.0) == pytest.approx(2.0)
    assert a_threshold(0.8) == pytest.approx(2.0)


def test_phase_diagram_renders_without_data(tmp_path):
    out = render(spec_for("PhaseDiagram", tmp_path / "bare.png"))
    assert out.exists()


def test_kernel_overlay_normalization(tmp_path):
    fig = FIGURE_KINDS["KernelOverlay"](all_specs(tmp_path)["KernelOverlay"])
    assert len(fig.axes) == 2  # one panel per time
    for ax in fig.axes:
        chain_line = ax.get_lines()[0]
        y = np.asarray(chain_line.get_ydata())
        n = len(y)
        assert np.sum(y) / n == pytest.approx(1.0, rel=1e-9)  # unit mass


def test_scaling_loglog_slope_annotations(tmp_path):
    fig = FIGURE_KINDS["ScalingLogLog"](all_specs(tmp_path)["ScalingLogLog"])
    labels = [ln.get_label() for ln in fig.axes[0].get_lines()]
    assert len(labels) == 4
    assert all("slope" in lab for lab in labels)


def test_schema_rejection(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        load_csv(bad, "correlation")
    with pytest.raises(SchemaError):
        load_csv(bad, "nope")
    missing_col = tmp_path / "col.csv"
    missing_col.write_text("t,j,S\n0,0,1\n")
    with pytest.raises(SchemaError):
        load_csv(missing_col, "correlation")
    spec = spec_for("KernelOverlay", tmp_path / "x.png",
                    inputs={"correlation": str(bad), "kernels": {}})
    with pytest.raises(SchemaError):
        render(spec)


def test_unknown_kind_and_spec_fields(tmp_path):
    with pytest.raises(SchemaError):
        render(spec_for("Sparkline", tmp_path / "x.png"))
    doc = tmp_path / "spec.json"
    doc.write_text(json.dumps({"kind": "PhaseDiagram", "bogus": 1}))
    with pytest.raises(SchemaError):
        FigureSpec.from_json(doc)


def test_rendering_is_read_only(tmp_path):
    src = GOLD / "correlation.csv"
    before = src.read_bytes()
    render(all_specs(tmp_path)["KernelOverlay"])
    assert src.read_bytes() == before


def test_cli_render(tmp_path):
    from oscfluct_plots.cli import main

    doc = tmp_path / "fig.json"
    doc.write_text(json.dumps({
        "kind": "SpectrumFlatness",
        "inputs": {"spectrum": str(GOLD / "spectrum.csv")},
        "output": str(tmp_path / "out.png"),
    }))
    assert main(["render", "--spec", str(doc)]) == 0
    assert (tmp_path / "out.png").exists()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "Nope"}))
    assert main(["render", "--spec", str(bad)]) == 2
