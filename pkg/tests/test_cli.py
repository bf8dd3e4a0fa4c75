import json
import re
import subprocess
import sys
import time

import jsonschema
import pytest

from hbmatch.cli import main
from hbmatch.evaluation.report import load_schema


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "ds"
    assert main(["synth", "--out", str(out), "--subjects", "6", "--sessions", "3", "--seed", "3"]) == 0
    return out


def test_synth_summary(dataset, capsys):
    out = dataset.parent / "again"
    main(["synth", "--out", str(out), "--subjects", "6", "--sessions", "3", "--seed", "3"])
    info = json.loads(capsys.readouterr().out)
    assert info["subjects"] == 6
    assert sorted(p.name for p in out.iterdir()) == sorted(p.name for p in dataset.iterdir())


def test_keygen_writes_no_surprises(tmp_path, capsys):
    assert main(["keygen", "--out", str(tmp_path / "k"), "--params", "toy", "--seed", "1"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert len(info["fingerprint"]) == 32
    assert (tmp_path / "k" / "params.hbpr").exists()


def test_eval_plain_report_validates(dataset, tmp_path, capsys):
    out = tmp_path / "r.json"
    rc = main(["eval", "--dataset", str(dataset), "--mode", "plain", "--modality", "face-only",
               "--modality", "single-iris", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, load_schema("eval"))
    assert [r["modality"] for r in report["rows"]] == ["face-only", "single-iris"]
    assert report["rows"][0]["modes"]["euclid"] is None
    assert "face-only" in capsys.readouterr().out


def test_pca_train_and_reuse(dataset, tmp_path, capsys):
    pca = tmp_path / "iris.pcam"
    assert main(["pca-train", "--dataset", str(dataset), "--modality", "single-iris", "--out", str(pca)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["k"] <= info["n_train"] - 1
    out = tmp_path / "r.json"
    assert main(["eval", "--dataset", str(dataset), "--mode", "plain", "--modality", "single-iris",
                 "--pca", f"single-iris={pca}", "--out", str(out)]) == 0
    row = json.loads(out.read_text())["rows"][0]
    assert row["pca"]["k"] == info["k"]


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["eval", "--dataset", str(tmp_path / "missing"), "--out", str(tmp_path / "x.json")]) == 2


def test_bench_small(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert main(["bench", "--reps", "1", "--dim", "32", "--no-eval-keys", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, load_schema("bench"))
    assert report["sizes"]["ciphertext"] == 131094


@pytest.mark.slow
def test_serve_enroll_verify(dataset, tmp_path):
    cli = [sys.executable, "-m", "hbmatch.cli"]
    subprocess.run(cli + ["keygen", "--out", str(tmp_path / "keys"), "--seed", "5"], check=True, capture_output=True)
    subprocess.run(cli + ["templates", "--dataset", str(dataset), "--subject", "s0000", "--modality", "face-only",
                          "--out", str(tmp_path / "t")], check=True, capture_output=True)
    srv = subprocess.Popen(cli + ["serve", "--listen", "127.0.0.1:0", "--store", str(tmp_path / "store"),
                                  "--params", str(tmp_path / "keys")], stderr=subprocess.PIPE, text=True)
    try:
        line = srv.stderr.readline()
        addr = re.search(r"serving on (\S+),", line).group(1)
        r = subprocess.run(cli + ["enroll", "--server", addr, "--subject", "s0000", "--gallery",
                                  str(tmp_path / "t" / "gallery"), "--keys", str(tmp_path / "keys")],
                           check=True, capture_output=True, text=True)
        assert json.loads(r.stdout)["generation"] == 1
        probe = sorted((tmp_path / "t" / "probes").glob("*.fvec"))[0]
        r = subprocess.run(cli + ["verify", "--server", addr, "--subject", "s0000", "--probe", str(probe),
                                  "--keys", str(tmp_path / "keys"), "--threshold", "0.5"],
                           check=True, capture_output=True, text=True)
        assert json.loads(r.stdout)["decision"] is True
        for p in (tmp_path / "store").rglob("*"):
            if p.is_file() and p.name != "manifest.json":
                assert p.read_bytes()[:4] in (b"HBCT", b"HBPK")
    finally:
        srv.terminate()
        srv.wait(10)
