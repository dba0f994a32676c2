import json

import pytest

from dedupkit.cli import main

SMALL_GEN = {"n_clients": 3, "invoices_per_client": 300}
FAST_NN = {"epochs": 5}
FAST_GBDT = {"n_estimators": 20}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def featurized(tmp_path_factory):
    """generate -> clean -> pairs -> featurize on a small corpus."""
    d = tmp_path_factory.mktemp("stages")
    gen = write_json(d / "gen.json", SMALL_GEN)
    assert main(["generate", "--config", gen, "--out", str(d)]) == 0
    assert main(["clean", "--corpus", str(d / "corpus.csv"), "--out", str(d)]) == 0
    assert main(["pairs", "--corpus", str(d / "corpus.clean.csv"), "--truth", str(d / "truth.csv"),
                 "--out", str(d)]) == 0
    assert main(["featurize", "--pairs", str(d / "pairs.csv"), "--corpus", str(d / "corpus.clean.csv"),
                 "--out", str(d)]) == 0
    return d


def test_sim_prints_score(capsys):
    assert main(["sim", "--metric", "jaro", "--a", "MARTHA", "--b", "MARHTA"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.9444, abs=1e-4)
    assert main(["sim", "--metric", "ngram", "--a", "ab", "--b", "ab", "--params", '{"n": 9}']) == 2


def test_missing_file_is_a_usage_error(tmp_path, capsys):
    code = main(["clean", "--corpus", str(tmp_path / "nope.csv"), "--out", str(tmp_path)])
    assert code == 2
    assert "file not found" in capsys.readouterr().err


def test_bad_arguments_and_configs(tmp_path, capsys):
    assert main(["train", "--model", "forest", "--features", "x"]) == 2
    assert main(["generate", "--config", write_json(tmp_path / "g.json", {"colour": 1}),
                 "--out", str(tmp_path)]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert main(["generate", "--config", str(tmp_path / "broken.json"), "--out", str(tmp_path)]) == 2
    assert main([]) == 2


def test_stage_outputs_and_manifests(featurized):
    d = featurized
    for name in ("corpus.csv", "truth.csv", "generation_report.json", "corpus.clean.csv",
                 "pairs.csv", "pairs_report.json", "features.jsonl", "schema.json"):
        assert (d / name).exists(), name
    assert not list(d.glob("*.partial"))
    manifest = json.loads((d / "manifest-featurize.json").read_text())
    assert manifest["tool"] == "dedupkit" and manifest["version"]
    assert [i["path"] for i in manifest["inputs"]] == ["pairs.csv", "corpus.clean.csv"]
    assert all(len(i["sha256"]) == 64 for i in manifest["inputs"] + manifest["outputs"])
    report = json.loads((d / "pairs_report.json").read_text())
    assert report["n_duplicates"] > 0 and report["recall"]["recall"] > 0.95


def test_train_predict_evaluate(featurized, tmp_path):
    d = featurized
    out = str(tmp_path)
    cfg = write_json(tmp_path / "gbdt.json", FAST_GBDT)
    assert main(["train", "--model", "gbdt", "--features", str(d / "features.jsonl"),
                 "--config", cfg, "--out", out]) == 0
    assert main(["predict", "--model-file", str(tmp_path / "model_gbdt.json"),
                 "--features", str(d / "features.jsonl"), "--schema", str(d / "schema.json"),
                 "--out", out]) == 0
    lines = (tmp_path / "predictions.csv").read_text().splitlines()
    assert lines[0] == "left_id,right_id,probability"
    assert len(lines) - 1 == sum(1 for _ in open(d / "features.jsonl"))
    assert main(["evaluate", "--predictions", str(tmp_path / "predictions.csv"),
                 "--labels", str(d / "pairs.csv"), "--out", out]) == 0
    report = json.loads((tmp_path / "evaluation.json").read_text())
    assert 0.5 < report["roc_auc"] <= 1.0
    for name in ("roc.csv", "pr.csv", "fbeta_1.csv", "fbeta_5.csv"):
        assert (tmp_path / name).exists()


def test_crossval_loco_gridscan(featurized, tmp_path):
    d = featurized
    out = str(tmp_path)
    nn = write_json(tmp_path / "nn.json", FAST_NN)
    assert main(["crossval", "--model", "nn", "--features", str(d / "features.jsonl"),
                 "--config", nn, "--out", out]) == 0
    cv = json.loads((tmp_path / "crossval_nn.json").read_text())
    assert len(cv["fold_roc_auc"]) == 5 and cv["echo"]["protocol"] == "kfold"
    assert main(["loco", "--model", "nn", "--features", str(d / "features.jsonl"),
                 "--corpus", str(d / "corpus.clean.csv"), "--config", nn, "--out", out]) == 0
    loco = json.loads((tmp_path / "loco_nn.json").read_text())
    assert [r["client"] for r in loco["breakdown"]] == ["C01", "C02", "C03"]
    grid = write_json(tmp_path / "grid.json", {"max_depth": [1, 2], "n_estimators": [5]})
    assert main(["gridscan", "--model", "gbdt", "--features", str(d / "features.jsonl"),
                 "--grid", grid, "--k", "3", "--out", out]) == 0
    scan = json.loads((tmp_path / "gridscan_gbdt.json").read_text())
    assert len(scan["table"]) == 2


def test_verify_detects_tampering(featurized, tmp_path, capsys):
    import shutil
    d = tmp_path / "copy"
    shutil.copytree(featurized, d)
    assert main(["verify", str(d)]) == 0
    with open(d / "corpus.clean.csv", "a") as fh:
        fh.write("\n")
    assert main(["verify", str(d)]) == 1
    assert "digest mismatch for corpus.clean.csv" in capsys.readouterr().err


def test_failed_stage_keeps_partial_output(featurized, tmp_path):
    pairs = tmp_path / "pairs.csv"
    good = (featurized / "pairs.csv").read_text().splitlines()
    pairs.write_text("\n".join(good[:4] + ["1,99999999,0"]) + "\n")
    code = main(["featurize", "--pairs", str(pairs), "--corpus", str(featurized / "corpus.clean.csv"),
                 "--out", str(tmp_path)])
    assert code == 1
    assert len((tmp_path / "features.jsonl.partial").read_text().splitlines()) == 3
    assert not (tmp_path / "features.jsonl").exists()
    assert not (tmp_path / "manifest-featurize.json").exists()


def test_reruns_are_byte_identical(tmp_path):
    gen = write_json(tmp_path / "gen.json", SMALL_GEN)
    for name in ("a", "b"):
        assert main(["generate", "--config", gen, "--seed", "9", "--out", str(tmp_path / name)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_seed_changes_only_seed_dependent_manifest_fields(tmp_path):
    gen = write_json(tmp_path / "gen.json", SMALL_GEN)
    for seed in ("1", "2"):
        assert main(["generate", "--config", gen, "--seed", seed, "--out", str(tmp_path / seed)]) == 0
    m1 = json.loads((tmp_path / "1" / "manifest-generate.json").read_text())
    m2 = json.loads((tmp_path / "2" / "manifest-generate.json").read_text())
    assert m1["seed"] == 1 and m2["seed"] == 2
    assert m1["inputs"] == m2["inputs"]
    assert {k for k in m1 if m1[k] != m2[k]} == {"seed", "config", "outputs"}
    assert {k for k in m1["config"] if m1["config"][k] != m2["config"][k]} == {"seed"}


def test_run_pipeline_end_to_end(tmp_path):
    cfg = write_json(tmp_path / "pipe.json", {
        "generate": SMALL_GEN,
        "models": {"gbdt": FAST_GBDT, "nn": FAST_NN},
    })
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "pipeline_report.json").read_text())
    assert summary["seed"] == 42
    for key in ("generate", "clean", "pairs", "featurize", "train_gbdt", "crossval_gbdt", "loco_gbdt",
                "train_nn", "crossval_nn", "loco_nn"):
        assert key in summary
    assert main(["verify", str(out)]) == 0
