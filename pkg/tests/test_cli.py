import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from roofvec.cli import main
from roofvec.ingest import faces_from_geojson
from roofvec.metrics import EvalReport, aggregate


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "syn"
    assert main(["synth", "-o", str(out), "--kind", "gable", "--kind", "hip", "--kind", "L-shape", "--seed", "3", "--truncate", "3"]) == 0
    return out


def detections(tmp_path, synth_dir):
    det = tmp_path / "det"
    det.mkdir()
    for p in synth_dir.glob("*.segments.json"):
        (det / p.name).write_text(p.read_text())
    return det


def test_polygonize_three_buildings(tmp_path, synth_dir):
    det = detections(tmp_path, synth_dir)
    out = tmp_path / "pred"
    assert main(["polygonize", str(det), "-o", str(out)]) == 0
    assert len(list(out.glob("*.geojson"))) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert [b["status"] for b in man["buildings"]] == ["ok"] * 3
    assert {"roofvec", "numpy", "scipy", "python"} <= set(man["versions"])
    assert man["config"]["eps"] is None


def test_one_malformed(tmp_path, synth_dir, capsys):
    det = detections(tmp_path, synth_dir)
    (det / "broken.txt").write_text("0 0.5 0.5\n")
    out = tmp_path / "pred"
    assert main(["polygonize", str(det), "-o", str(out)]) == 1
    assert len(list(out.glob("*.geojson"))) == 3
    assert "broken.txt" in capsys.readouterr().err
    man = json.loads((out / "manifest.json").read_text())
    assert {b["id"]: b["status"] for b in man["buildings"]}["broken"] == "error"


def test_empty_directory(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["polygonize", str(tmp_path / "empty"), "-o", str(tmp_path / "o")]) != 0
    assert "no detection files" in capsys.readouterr().err


def test_missing_output_is_usage_error(tmp_path):
    assert main(["polygonize", str(tmp_path)]) == 2
    assert main(["frobnicate"]) == 2


def test_yolo_obb_input(tmp_path):
    det = tmp_path / "det"
    det.mkdir()
    # a 400 px square in a 1000 px image, as four thin boxes
    lines = [
        "0 0.5 0.3 0.4 0.006 0", "0 0.7 0.5 0.4 0.006 1.5707963", "0 0.5 0.7 0.4 0.006 0", "0 0.3 0.5 0.4 0.006 1.5707963",
    ]
    (det / "sq.txt").write_text("\n".join(lines) + "\n")
    out = tmp_path / "o"
    assert main(["polygonize", str(det), "-o", str(out), "--image-size", "1000", "1000", "--dump-labels"]) == 0
    fs, bid, size = faces_from_geojson((out / "sq.geojson").read_text())
    assert bid == "sq" and size == (1000, 1000) and len(fs) == 1
    assert (out / "sq.labels.pgm").read_bytes().startswith(b"P5")


def test_config_file_and_flag_precedence(tmp_path, synth_dir):
    det = detections(tmp_path, synth_dir)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"eps": 5.0, "tau_line": 4.0}))
    out = tmp_path / "o"
    assert main(["polygonize", str(det), "-o", str(out), "--config", str(cfg), "--eps", "9"]) == 0
    conf = json.loads((out / "manifest.json").read_text())["config"]
    assert conf["eps"] == 9 and conf["tau_line"] == 4
    cfg.write_text(json.dumps({"epsilon": 5.0}))
    assert main(["polygonize", str(det), "-o", str(out), "--config", str(cfg)]) == 2


def test_invalid_parameter(tmp_path, synth_dir):
    assert main(["polygonize", str(synth_dir), "-o", str(tmp_path / "o"), "--eps", "-1"]) == 2


def test_rerun_identical(tmp_path, synth_dir):
    det = detections(tmp_path, synth_dir)
    out = tmp_path / "a"
    argv = ["polygonize", str(det), "-o", str(out), "--dump-labels"]
    main(argv)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    main(argv)
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_workers_match_serial(tmp_path, synth_dir):
    det = detections(tmp_path, synth_dir)
    main(["polygonize", str(det), "-o", str(tmp_path / "s")])
    assert main(["polygonize", str(det), "-o", str(tmp_path / "p"), "--workers", "2"]) == 0
    for p in (tmp_path / "s").glob("*.geojson"):
        assert p.read_bytes() == (tmp_path / "p" / p.name).read_bytes()


def test_evaluate_identical_pair(tmp_path, synth_dir):
    ref = tmp_path / "ref"
    ref.mkdir()
    pred = tmp_path / "pred"
    pred.mkdir()
    for p in synth_dir.glob("*.ref.geojson"):
        (ref / p.name).write_text(p.read_text())
        (pred / p.name.replace(".ref", "")).write_text(p.read_text())
    out = tmp_path / "ev"
    assert main(["evaluate", "--pred", str(pred), "--ref", str(ref), "-o", str(out)]) == 0
    for p in out.glob("*.eval.json"):
        r = json.loads(p.read_text())
        assert r["miou"] == 1 and r["q_h"] == 1
    assert len((out / "reports.csv").read_text().strip().split("\n")) == 4


def test_evaluate_summary_matches_aggregate(tmp_path):
    syn = tmp_path / "syn"
    main(["synth", "-o", str(syn), "--seeds", "0", "1", "--truncate", "4", "--jitter", "1"])
    det, ref = tmp_path / "det", tmp_path / "ref"
    det.mkdir()
    ref.mkdir()
    for p in syn.glob("*.segments.json"):
        (det / p.name).write_text(p.read_text())
    for p in syn.glob("*.ref.geojson"):
        (ref / p.name).write_text(p.read_text())
    main(["polygonize", str(det), "-o", str(tmp_path / "pred")])
    out = tmp_path / "ev"
    assert main(["evaluate", "--pred", str(tmp_path / "pred"), "--ref", str(ref), "-o", str(out)]) == 0
    reports = [EvalReport.from_dict(json.loads(p.read_text())) for p in sorted(out.glob("*.eval.json"))]
    assert len(reports) == 10
    summary = json.loads((out / "summary.json").read_text())
    assert summary == json.loads(json.dumps(aggregate(reports).to_dict()))


def test_evaluate_missing_reference(tmp_path, synth_dir, capsys):
    ref, pred = tmp_path / "ref", tmp_path / "pred"
    ref.mkdir()
    pred.mkdir()
    for i, p in enumerate(sorted(synth_dir.glob("*.ref.geojson"))):
        (pred / p.name.replace(".ref", "")).write_text(p.read_text())
        if i:
            (ref / p.name).write_text(p.read_text())
    out = tmp_path / "ev"
    assert main(["evaluate", "--pred", str(pred), "--ref", str(ref), "-o", str(out)]) == 0
    assert "missing reference" in capsys.readouterr().err
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["unpaired"]) == 1 and len(man["buildings"]) == 2


def test_synth_deterministic(tmp_path):
    a = tmp_path / "a"
    argv = ["synth", "-o", str(a), "--kind", "gable", "--seed", "7", "--jitter", "1", "--drop", "0.1"]
    assert main(argv) == 0
    first = {p: p.read_bytes() for p in a.rglob("*") if p.is_file()}
    assert main(argv) == 0
    assert first and first == {p: p.read_bytes() for p in a.rglob("*") if p.is_file()}
    assert (a / "labels" / "gable_0007.txt").read_text().count("\n") == 7


def test_synth_too_small(tmp_path, capsys):
    assert main(["synth", "-o", str(tmp_path / "s"), "--kind", "gable", "--footprint", "0", "0", "8", "8"]) == 2
    assert "too small" in capsys.readouterr().err


def test_render(tmp_path, synth_dir):
    det = detections(tmp_path, synth_dir)
    pred = tmp_path / "pred"
    main(["polygonize", str(det), "-o", str(pred)])
    out = tmp_path / "svg"
    assert main(["render", str(pred), "-o", str(out), "--ref", str(synth_dir), "--layers", "faces", "graph", "edges", "reference"]) == 0
    svgs = sorted(out.glob("*.svg"))
    assert len(svgs) == 3
    for p in svgs:
        ET.fromstring(p.read_text())


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "roofvec.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "polygonize" in r.stdout
