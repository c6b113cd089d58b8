from __future__ import annotations

import json
from pathlib import Path

import pytest

from kdetector.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def workspace(tmp_path, capsys):
    """A synthesized corpus with mined map and derived stop list."""
    out = tmp_path / "corpus"
    code, _, _ = run(
        capsys, "synth", "--out", out, "--groups", "8", "--per-group", "3",
        "--noise", "0.2", "--seed", "3",
    )
    assert code == 0
    code, _, _ = run(
        capsys, "mine", out / "src", "--out", tmp_path / "map.tsv"
    )
    assert code == 0
    code, _, _ = run(
        capsys, "stopwords", out / "dumps", "--out", tmp_path / "stop.tsv",
        "--cutoff", "2",
    )
    assert code == 0
    return tmp_path


def pipeline_args(workspace):
    return [
        "--dumps", workspace / "corpus" / "dumps",
        "--map", workspace / "map.tsv",
        "--stoplist", workspace / "stop.tsv",
    ]


def test_synth_is_byte_identical_per_seed(tmp_path, capsys):
    for name in ("one", "two"):
        code, _, _ = run(
            capsys, "synth", "--out", tmp_path / name, "--groups", "4",
            "--per-group", "3", "--noise", "0.1", "--seed", "7",
        )
        assert code == 0
    files_one = sorted((tmp_path / "one").rglob("*"))
    files_two = sorted((tmp_path / "two").rglob("*"))
    assert [p.relative_to(tmp_path / "one") for p in files_one if p.is_file()] == [
        p.relative_to(tmp_path / "two") for p in files_two if p.is_file()
    ]
    for p in files_one:
        if p.is_file():
            twin = tmp_path / "two" / p.relative_to(tmp_path / "one")
            assert p.read_bytes() == twin.read_bytes()


def test_mine_reports_summary(workspace, capsys):
    code, out, _ = run(
        capsys, "mine", workspace / "corpus" / "src", "--out", workspace / "m2.tsv"
    )
    assert code == 0
    assert out.startswith("functions=")
    assert (workspace / "m2.tsv").read_text() == (workspace / "map.tsv").read_text()


def test_stopwords_output(workspace):
    text = (workspace / "stop.tsv").read_text()
    assert text.splitlines()[0] == "#cutoff: 2"
    names = [line.split("\t")[0] for line in text.splitlines()[1:3]]
    assert names == ["rt::Frame::enter0", "rt::Frame::enter1"]


def test_train_then_evaluate(workspace, capsys):
    corpus = workspace / "corpus"
    code, out, _ = run(
        capsys, "train", corpus / "pairs_train.tsv", *pipeline_args(workspace),
        "--params-out", workspace / "params.txt",
        "--grid-out", workspace / "grid.tsv",
    )
    assert code == 0
    assert out.startswith("m=")
    grid_lines = (workspace / "grid.tsv").read_text().strip().splitlines()
    assert len(grid_lines) == 442  # 21x21 grid plus the summary line

    code, out, _ = run(
        capsys, "evaluate", corpus / "pairs_test.tsv", *pipeline_args(workspace),
        "--params", workspace / "params.txt",
    )
    assert code == 0
    rows = dict(line.split("\t") for line in out.strip().splitlines())
    assert set(rows) == {"kdetector", "edit-distance", "prefix-match"}
    assert float(rows["kdetector"]) >= float(rows["prefix-match"])
    assert float(rows["kdetector"]) >= float(rows["edit-distance"])


def test_ingest_then_detect_binds_duplicate(workspace, capsys):
    corpus = workspace / "corpus"
    (workspace / "params.txt").write_text("#version 1\nm=1.0 n=1.0 threshold=0.5\n")
    store = workspace / "store"
    dump = corpus / "dumps" / "d000_0.dump"
    code, out, _ = run(
        capsys, "ingest", dump, *pipeline_args(workspace), "--store", store
    )
    assert code == 0
    assert json.loads(out)["ingested"] == "d000_0"

    # same stack under a fresh dump id must come back as a duplicate
    probe = workspace / "probe.dump"
    probe.write_text(dump.read_text().replace("dump_id: d000_0", "dump_id: probe-1"))
    code, out, _ = run(
        capsys, "detect", probe, *pipeline_args(workspace),
        "--store", store, "--params", workspace / "params.txt",
    )
    assert code == 0
    report = json.loads(out)
    assert report["verdict"] == "duplicate"
    assert report["score"] == 1.0
    assert report["bug_id"] == 1


def test_detect_bind_files_new_bug(workspace, capsys):
    corpus = workspace / "corpus"
    (workspace / "params.txt").write_text("#version 1\nm=1.0 n=1.0 threshold=0.5\n")
    store = workspace / "store2"
    dump = corpus / "dumps" / "d001_0.dump"
    code, out, _ = run(
        capsys, "detect", dump, *pipeline_args(workspace),
        "--store", store, "--params", workspace / "params.txt", "--bind",
    )
    assert code == 0
    report = json.loads(out)
    assert report["verdict"] == "new"
    assert report["bug_id"] == 1
    code, out, _ = run(
        capsys, "detect", dump.with_name("d001_1.dump"), *pipeline_args(workspace),
        "--store", store, "--params", workspace / "params.txt", "--bind",
    )
    assert code == 0
    follow_up = json.loads(out)
    assert follow_up["verdict"] == "duplicate"
    assert follow_up["bug_id"] == 1


def test_usage_error_exits_one(capsys):
    assert run(capsys, "no-such-command")[0] == 1
    assert run(capsys)[0] == 1


def test_data_error_exits_two(tmp_path, capsys):
    code, _, err = run(
        capsys, "stopwords", tmp_path, "--out", tmp_path / "stop.tsv"
    )
    assert code == 2
    assert "error:" in err
    code, _, err = run(capsys, "mine", tmp_path / "missing")
    assert code == 2


def test_config_file_supplies_defaults(workspace, capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "dumps": str(workspace / "corpus" / "dumps"),
                "map": str(workspace / "map2.tsv"),
            }
        )
    )
    code, _, _ = run(
        capsys, "--config", config, "mine", workspace / "corpus" / "src"
    )
    assert code == 0
    assert (workspace / "map2.tsv").is_file()


def test_malformed_dump_reports_data_error(workspace, capsys, tmp_path):
    bad = tmp_path / "bad.dump"
    bad.write_text("[HEADER]\npid: 1\ntime: now\n[BUILD]\n")
    (workspace / "params.txt").write_text("#version 1\nm=1.0 n=1.0 threshold=0.5\n")
    code, _, err = run(
        capsys, "detect", bad, *pipeline_args(workspace),
        "--store", workspace / "store3", "--params", workspace / "params.txt",
    )
    assert code == 2
    assert "error:" in err
