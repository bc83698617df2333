import json
from importlib import resources

import numpy as np
import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from swdtau.cli import main
from swdtau.signal_model import DEFAULT_CHANNELS
from swdtau.synthgen import SynthConfig, aligned_starts

SCHEMAS = {
    p.name: json.loads(p.read_text())
    for p in resources.files("swdtau").joinpath("schemas").iterdir()
    if p.name.endswith(".schema.json")
}
REGISTRY = Registry().with_resources(
    (name, Resource.from_contents(doc)) for name, doc in SCHEMAS.items()
)


def validate(doc, name):
    Draft202012Validator(SCHEMAS[name], registry=REGISTRY).validate(doc)


def load(path):
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    base = SynthConfig(duration_s=40, num_channels=4)
    starts = aligned_starts(base, [1, 5, 9, 14, 20])
    events = [{"channel": DEFAULT_CHANNELS[ch], "start_s": s} for ch, s in zip([0, 1, 2, 3, 0], starts)]
    cfg = {"synth": {"seed": 11, "duration_s": 40, "num_channels": 4, "snr_db": 20, "events": events}}
    cfg_path = root / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = root / "out"
    codes = {
        "synth": main(["synth", "--config", str(cfg_path), "--out", str(out)]),
        "detect": main(["detect", str(out / "recording.csv"), str(out / "templates"), "--out", str(out)]),
        "evaluate": main(["evaluate", str(out / "scan_report.csv"), str(out / "annotations.json"),
                          "--out", str(out)]),
        "classify": main(["classify", str(out / "features.csv"), "--kind", "all",
                          "--per-class", "8", "--out", str(out)]),
    }
    return root, out, cfg_path, codes


def test_pipeline_exit_codes(pipeline):
    *_, codes = pipeline
    assert codes == {"synth": 0, "detect": 0, "evaluate": 0, "classify": 0}


def test_synth_outputs(pipeline):
    _, out, _, _ = pipeline
    header = (out / "recording.csv").read_text().splitlines()[:2]
    assert "sample_rate_hz=256" in header[0]
    assert len(header[1].split(",")) == 4
    ann = load(out / "annotations.json")
    validate(ann, "annotations.schema.json")
    assert len(ann["events"]) == 5
    assert len(list((out / "templates").glob("*.csv"))) == 10


def test_default_synth_is_22_channels(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synth": {"duration_s": 2}}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    header = (tmp_path / "recording.csv").read_text().splitlines()
    assert "sample_rate_hz=256" in header[0]
    assert len(header[1].split(",")) == 22


def test_synth_same_seed_same_bytes(tmp_path, pipeline):
    _, out, cfg_path, _ = pipeline
    assert main(["synth", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    for name in ("recording.csv", "annotations.json"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()
    assert main(["synth", "--config", str(cfg_path), "--seed", "12", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "recording.csv").read_bytes() != (out / "recording.csv").read_bytes()


def test_synth_bad_duration(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synth": {"duration_s": 0}}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "duration_s" in capsys.readouterr().err


def test_detect_outputs(pipeline):
    _, out, _, _ = pipeline
    doc = load(out / "detections.json")
    validate(doc, "detections.schema.json")
    assert doc["positives"] >= 5
    ann = load(out / "annotations.json")["events"]
    for ev in ann:
        assert any(d["channel"] == ev["channel"] and d["start_s"] < ev["end_s"] and d["end_s"] > ev["start_s"]
                   for d in doc["detections"])


def test_detect_is_deterministic(tmp_path, pipeline):
    _, out, _, _ = pipeline
    assert main(["detect", str(out / "recording.csv"), str(out / "templates"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scan_report.csv").read_bytes() == (out / "scan_report.csv").read_bytes()


def test_detect_patient_filter(tmp_path, pipeline):
    _, out, _, _ = pipeline
    args = ["detect", str(out / "recording.csv"), str(out / "templates"), "--out", str(tmp_path)]
    assert main(args + ["--patient", "P01"]) == 0
    assert main(args + ["--patient", "nobody"]) == 3


def test_detect_empty_template_dir(tmp_path, pipeline):
    _, out, _, _ = pipeline
    (tmp_path / "empty").mkdir()
    assert main(["detect", str(out / "recording.csv"), str(tmp_path / "empty"), "--out", str(tmp_path)]) == 3


def test_detect_missing_input(tmp_path):
    assert main(["detect", "--out", str(tmp_path)]) == 2


def test_evaluate_outputs(pipeline):
    _, out, _, _ = pipeline
    doc = load(out / "metrics.json")
    validate(doc, "metrics.schema.json")
    assert doc["specificity"] > 0.95
    roc_lines = (out / "roc.csv").read_text().splitlines()
    assert roc_lines[0] == "threshold,fpr,tpr"


def _write_report(path, rows):
    lines = ["channel,segment,L,start_s,end_s,tau,z,p,best_template,positive,degenerate"]
    for i, (start, tau, positive) in enumerate(rows):
        lines.append(f"Cz,{i},256,{start},{start + 1},{tau},0,0.01,t,{int(positive)},0")
    path.write_text("\n".join(lines) + "\n")


def test_evaluate_perfect(tmp_path):
    rows = [(float(i), 0.9 if 10 <= i < 20 else 0.1, 10 <= i < 20) for i in range(40)]
    _write_report(tmp_path / "r.csv", rows)
    (tmp_path / "a.json").write_text(json.dumps({"events": [
        {"channel": "Cz", "start_s": 10.0, "end_s": 20.0, "label": "SWD"}]}))
    assert main(["evaluate", str(tmp_path / "r.csv"), str(tmp_path / "a.json"), "--out", str(tmp_path)]) == 0
    doc = load(tmp_path / "metrics.json")
    assert (doc["sensitivity"], doc["specificity"], doc["auc"]) == (1.0, 1.0, 1.0)


def test_evaluate_shuffled(tmp_path):
    rng = np.random.default_rng(4)
    rows = [(float(i), float(t), bool(t >= 0.5)) for i, t in enumerate(rng.uniform(-1, 1, 600))]
    _write_report(tmp_path / "r.csv", rows)
    events = [{"channel": "Cz", "start_s": float(i), "end_s": float(i + 1), "label": "SWD"}
              for i in np.flatnonzero(rng.random(600) < 0.5)]
    (tmp_path / "a.json").write_text(json.dumps({"events": events}))
    assert main(["evaluate", str(tmp_path / "r.csv"), str(tmp_path / "a.json"), "--out", str(tmp_path)]) == 0
    assert abs(load(tmp_path / "metrics.json")["auc"] - 0.5) < 0.1


def test_evaluate_unknown_channel(tmp_path):
    _write_report(tmp_path / "r.csv", [(0.0, 0.9, True), (1.0, 0.1, False)])
    (tmp_path / "a.json").write_text(json.dumps({"events": [
        {"channel": "T9", "start_s": 0.0, "end_s": 1.0, "label": "SWD"}]}))
    assert main(["evaluate", str(tmp_path / "r.csv"), str(tmp_path / "a.json"), "--out", str(tmp_path)]) == 2


def test_classify_outputs(pipeline):
    _, out, _, _ = pipeline
    doc = load(out / "loocv_report.json")
    validate(doc, "loocv.schema.json")
    assert [r["kind"] for r in doc["reports"]] == ["lda", "qda", "linear_svm"]
    assert doc["n"] == 16


def _separable_csv(path, per_class=10):
    rng = np.random.default_rng(1)
    lines = ["tau,p,label"]
    for _ in range(per_class):
        lines.append(f"{0.9 + rng.uniform(-0.02, 0.02)},{0.001 + rng.uniform(0, 0.001)},1")
        lines.append(f"{0.05 + rng.uniform(-0.02, 0.02)},{0.8 + rng.uniform(-0.02, 0.02)},0")
    path.write_text("\n".join(lines) + "\n")


def test_classify_separable(tmp_path):
    _separable_csv(tmp_path / "f.csv")
    assert main(["classify", str(tmp_path / "f.csv"), "--kind", "all", "--out", str(tmp_path)]) == 0
    doc = load(tmp_path / "loocv_report.json")
    validate(doc, "loocv.schema.json")
    assert len(doc["reports"]) == 3
    assert all(r["specificity"] == 1.0 and r["sensitivity"] == 1.0 for r in doc["reports"])


def test_classify_single_kind(tmp_path):
    _separable_csv(tmp_path / "f.csv")
    assert main(["classify", str(tmp_path / "f.csv"), "--kind", "svm", "--out", str(tmp_path)]) == 0
    assert [r["kind"] for r in load(tmp_path / "loocv_report.json")["reports"]] == ["linear_svm"]


def test_classify_three_rows(tmp_path):
    (tmp_path / "f.csv").write_text("tau,p,label\n0.9,0.01,1\n0.1,0.5,0\n0.8,0.02,1\n")
    assert main(["classify", str(tmp_path / "f.csv"), "--out", str(tmp_path)]) == 4


def test_bench_rows(tmp_path):
    assert main(["bench", "--sizes", "64", "256", "1024", "4096", "--repeats", "1", "--out", str(tmp_path)]) == 0
    doc = load(tmp_path / "bench.json")
    validate(doc, "bench.schema.json")
    assert len(doc["rows"]) == 8
    assert doc["assertion_passed"]


def test_bench_empty(tmp_path):
    assert main(["bench", "--sizes", "--out", str(tmp_path)]) == 0
    doc = load(tmp_path / "bench.json")
    assert doc["rows"] == [] and doc["speedup"] == {}


def test_bench_rejects_tiny(tmp_path):
    assert main(["bench", "--sizes", "1", "--out", str(tmp_path)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
