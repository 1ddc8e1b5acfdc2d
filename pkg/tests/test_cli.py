import csv

import numpy as np
import pytest

from stbi.cli import main
from stbi.fileio import read_field_file, read_manifest
from stbi.field_core import PhaseMap
from stbi.morphometry import segment_cells
from stbi.simulator import OpticalConfig, generate_focus_stack, read_scene

SMALL_SCENE = """\
# one cell in a 128 px field
fov 128 128
rbc 12 30 4 2.4 0.4
"""
SMALL_OPTICS = ["--shear-px", "64"]


@pytest.fixture
def small_scene(tmp_path):
    p = tmp_path / "small.scn"
    p.write_text(SMALL_SCENE)
    return p


def _stats(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_stack_manifest(tmp_path, small_scene):
    out = tmp_path / "sim"
    assert main(["simulate", "--scene", str(small_scene), "--out", str(out),
                 "--stack", "11", "--zrange", "10", *SMALL_OPTICS]) == 0
    rows, meta = read_manifest(out / "manifest.csv")
    assert len(rows) == 11
    cfg = OpticalConfig(shear_px=64)
    stack, truth = generate_focus_stack(read_scene(small_scene), cfg, -10, 10, 11)
    assert int(meta["truth_index"]) == truth == 5
    assert [z for _, _, z in rows] == [stack.defocus_of(k) for k in range(11)]
    np.testing.assert_array_equal(read_field_file(rows[3][1]).values, stack.frames[3].values)


def test_focus_stride_30_on_90_frames(tmp_path, small_scene, capsys):
    out = tmp_path / "sim"
    main(["simulate", "--scene", str(small_scene), "--out", str(out),
          "--stack", "90", "--zrange", "30", *SMALL_OPTICS])
    capsys.readouterr()
    assert main(["focus", "--manifest", str(out / "manifest.csv"), "--csv", str(tmp_path / "tv.csv")]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("focus_index ") and line.endswith("evaluated 3")
    idx = [r["index"] for r in _stats(tmp_path / "tv.csv")]
    assert idx == ["0", "30", "60"]


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipe")
    args = ["pipeline", "--out", str(out), "--stride", "5", "--refine", "--threshold", "0.1"]
    assert main(args) == 0
    return out, args


def test_pipeline_mean_phase_matches_truth(pipeline_run):
    out, _ = pipeline_run
    stats = _stats(out / "stats.csv")
    assert len(stats) >= 1
    truth = read_field_file(out / "truth_phase.fld")
    phase = read_field_file(out / "phase.fld")
    labels = segment_cells(phase, 0.1, 20)
    for row in stats:
        sel = labels == int(row["label"])
        expected = truth.values[sel].mean()
        assert float(row["mean_phase_rad"]) == pytest.approx(expected, rel=0.05)


def test_pipeline_deterministic(pipeline_run, tmp_path):
    out, args = pipeline_run
    again = tmp_path / "again"
    args = list(args)
    args[args.index("--out") + 1] = str(again)
    assert main(args) == 0
    for name in ("phase.fld", "phase.pgm", "stats.csv", "tv.csv", "frame_030.fld"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_pipeline_equals_composition(pipeline_run, tmp_path, capsys):
    out, _ = pipeline_run
    d = tmp_path / "steps"
    assert main(["simulate", "--out", str(d), "--stack", "61"]) == 0
    assert main(["focus", "--manifest", str(d / "manifest.csv"), "--stride", "5", "--refine",
                 "--csv", str(d / "tv.csv")]) == 0
    k = int(capsys.readouterr().out.split()[1])
    assert main(["reconstruct", "--hologram", str(d / f"frame_{k:03d}.fld"),
                 "--background", str(d / "background.fld"), "--out", str(d / "phase.fld"),
                 "--pgm", str(d / "phase.pgm")]) == 0
    assert main(["analyze", "--phase", str(d / "phase.fld"), "--threshold", "0.1",
                 "--csv", str(d / "stats.csv")]) == 0
    for name in ("tv.csv", "phase.fld", "phase.pgm", "stats.csv"):
        assert (out / name).read_bytes() == (d / name).read_bytes()


def test_single_hologram_and_dump(tmp_path, small_scene, capsys):
    out = tmp_path / "one"
    assert main(["simulate", "--scene", str(small_scene), "--out", str(out), *SMALL_OPTICS]) == 0
    assert main(["reconstruct", "--hologram", str(out / "hologram.fld"),
                 "--background", str(out / "background.fld"), "--out", str(out / "phase.fld")]) == 0
    assert isinstance(read_field_file(out / "phase.fld"), PhaseMap)
    capsys.readouterr()
    assert main(["dump", str(out / "phase.fld")]) == 0
    assert "phase map 128x128" in capsys.readouterr().out


def test_validation_errors_exit_1(tmp_path, small_scene):
    assert main(["simulate", "--bogus-flag"]) == 1
    assert main([]) == 1
    assert main(["simulate", "--scene", str(small_scene), "--out", str(tmp_path), "--shear-px", "100"]) == 1
    bad = tmp_path / "bad.scn"
    bad.write_text("fov 64 64\nrbc 1 2 3\n")
    assert main(["simulate", "--scene", str(bad), "--out", str(tmp_path)]) == 1


def test_io_errors_exit_2(tmp_path):
    assert main(["dump", str(tmp_path / "missing.fld")]) == 2
    assert main(["analyze", "--phase", str(tmp_path / "missing.fld")]) == 2
