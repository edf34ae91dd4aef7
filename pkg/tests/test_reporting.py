import json
import os

import numpy as np
import pytest

from chemorepel.reporting import (MANIFEST_NAME, RunDirectory, csv_text,
                                  format_float, json_text, read_manifest,
                                  sha256_hex)
from chemorepel.svgplot import emit_plot, render_plot


def test_format_float_roundtrips():
    for x in (0.1, 1.0 / 3.0, 1e-300, 123456.789, np.float64(0.25)):
        assert float(format_float(x)) == float(x)


def test_csv_text_layout():
    text = csv_text(["t", "v", "tag"], [[0.0, 0.1, "a"], [1.0, 0.2, "b"]])
    assert text == "t,v,tag\n0.0,0.1,a\n1.0,0.2,b\n"
    with pytest.raises(ValueError, match="width"):
        csv_text(["a", "b"], [[1.0]])


def test_json_text_sorted_and_stable():
    assert json_text({"b": 1, "a": 2}) == json_text({"a": 2, "b": 1})
    assert json_text({"x": 0.1}).endswith("\n")


def test_run_directory_lifecycle(tmp_path):
    out = tmp_path / "run"
    with RunDirectory(out) as rd:
        rd.write_text("notes.txt", "hello\n")
        rd.write_json("data.json", {"k": 1})
        rd.write_csv("rows.csv", ["a"], [[1.0]])
        assert (out / ".lock").exists()
        rd.finalize("config text", seed=5)
    assert not (out / ".lock").exists()
    man = read_manifest(out)
    assert man["seed"] == 5
    assert man["config_sha256"] == sha256_hex("config text")
    assert sorted(man["artifacts"]) == ["data.json", "notes.txt", "rows.csv"]
    assert man["artifacts"]["notes.txt"] == sha256_hex("hello\n")
    for k in ("chemorepel", "numpy", "scipy", "python"):
        assert man["versions"][k]


def test_run_directory_refuses_completed(tmp_path):
    out = tmp_path / "done"
    with RunDirectory(out) as rd:
        rd.finalize("", seed=0)
    with pytest.raises(FileExistsError, match="completed run"):
        RunDirectory(out).__enter__()


def test_run_directory_lock_conflict(tmp_path):
    out = tmp_path / "busy"
    with RunDirectory(out):
        with pytest.raises(FileExistsError, match="locked"):
            RunDirectory(out).__enter__()
    # lock released on exit; and no manifest was written, so re-entry works
    with RunDirectory(out) as rd:
        rd.finalize("", seed=0)


def test_finalize_is_single_use(tmp_path):
    with RunDirectory(tmp_path / "x") as rd:
        rd.finalize("", seed=0)
        with pytest.raises(RuntimeError):
            rd.finalize("", seed=0)


def test_partial_run_leaves_no_manifest(tmp_path):
    out = tmp_path / "part"
    try:
        with RunDirectory(out) as rd:
            rd.write_text("partial.txt", "x")
            raise KeyboardInterrupt
    except KeyboardInterrupt:
        pass
    assert not (out / MANIFEST_NAME).exists()
    assert not (out / ".lock").exists()
    assert (out / "partial.txt").exists()


def test_subdirectory_artifacts(tmp_path):
    with RunDirectory(tmp_path / "s") as rd:
        rd.write_text(os.path.join("plots", "a.svg"), "<svg/>")
        rd.finalize("", seed=0)
    man = read_manifest(tmp_path / "s")
    assert "plots/a.svg" in man["artifacts"] or "plots\\a.svg" in man["artifacts"]


DECAY_SPEC = {
    "series": [
        {"label": "a", "t": [0.0, 1.0, 2.0], "values": [1.0, 0.1, 0.01]},
        {"label": "b", "t": [0.0, 1.0, 2.0], "values": [0.5, 0.05, 0.005]},
    ],
    "title": "decay",
    "logy": True,
    "reference_rate": 2.3,
}


def test_render_plot_deterministic_and_self_contained():
    svg1 = render_plot(DECAY_SPEC)
    svg2 = render_plot(DECAY_SPEC)
    assert svg1 == svg2
    assert svg1.startswith("<svg")
    assert svg1.rstrip().endswith("</svg>")
    assert "href" not in svg1 and "script" not in svg1
    assert "exp(-2.3 t)" in svg1
    assert svg1.count("<polyline") == 3  # two series plus the guide


def test_render_plot_validation():
    with pytest.raises(ValueError, match="no series"):
        render_plot({"series": []})
    with pytest.raises(ValueError, match="empty"):
        render_plot({"series": [{"label": "e", "t": [], "values": []}]})
    with pytest.raises(ValueError, match="mismatched"):
        render_plot({"series": [{"label": "m", "t": [0.0], "values": [1.0, 2.0]}]})
    with pytest.raises(ValueError, match="positive"):
        render_plot({"series": [{"label": "n", "t": [0.0], "values": [-1.0]}],
                     "logy": True})


def test_emit_plot_bad_spec_leaves_no_file(tmp_path):
    path = tmp_path / "p.svg"
    with pytest.raises(ValueError):
        emit_plot(path, {"series": []})
    assert not path.exists()
    emit_plot(path, DECAY_SPEC)
    assert path.read_text().startswith("<svg")
