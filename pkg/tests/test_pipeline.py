import json
import shutil

import pytest

from ocralign.cli import main
from ocralign.pipeline import (ConfigError, PipelineConfig, config_from_manifest, load_config,
                               parse_config_text, run_pipeline)


@pytest.fixture
def toy(tmp_path, toy_dir):
    shutil.copytree(toy_dir, tmp_path / "toy")
    return tmp_path / "toy"


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_toy_run(toy):
    cfg = load_config(toy / "toy.cfg")
    reports = run_pipeline(cfg)
    assert set(reports) == {"cc", "cn", "nc", "nn"}
    out = toy / "toy-out"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format"] == "ocralign-manifest"
    assert set(manifest["inputs"]) >= {"train_src", "gold", "ocr_clean"}
    assert manifest["outputs"]["report.txt"]
    assert reports["cc"].aer <= reports["nn"].aer


def test_rerun_from_manifest_is_identical(toy, capsys):
    assert main(["pipeline", str(toy / "toy.cfg"), "--out-dir", str(toy / "a")]) == 0
    first = read_all(toy / "a")
    assert main(["pipeline", "--manifest", str(toy / "a" / "manifest.json"),
                 "--out-dir", str(toy / "b")]) == 0
    second = read_all(toy / "b")
    first.pop("manifest.json"), second.pop("manifest.json")
    assert first == second


def test_manifest_detects_changed_input(toy):
    run_pipeline(load_config(toy / "toy.cfg"))
    with open(toy / "toy.src", "a") as fh:
        fh.write("extra\n")
    with pytest.raises(ConfigError, match="changed"):
        config_from_manifest(toy / "toy-out" / "manifest.json")


def test_missing_file_fails_before_any_stage(toy, capsys):
    (toy / "ocr.noisy").unlink()
    assert main(["pipeline", str(toy / "toy.cfg"), "--out-dir", str(toy / "out")]) == 1
    assert not (toy / "out").exists()
    assert "ocr_noisy" in capsys.readouterr().err


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign\n", str(tmp_path))
    assert parse_config_text("bogus = 1\n", str(tmp_path)).extra == {"bogus": "1"}
    with pytest.raises(ConfigError):
        parse_config_text("seed = abc\n", str(tmp_path))


def test_stage_failure_names_stage(toy, capsys):
    (toy / "bad.gold").write_text("0-0\n")
    code = main(["pipeline", str(toy / "toy.cfg"), "--out-dir", str(toy / "out"),
                 "--set", f"gold={toy / 'bad.gold'}"])
    assert code == 2
    assert "evaluate" in capsys.readouterr().err


def test_unknown_key_rejected(toy):
    text = (toy / "toy.cfg").read_text() + "bogus = 1\n"
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        parse_config_text(text, str(toy)).validate()


def test_overrides(toy):
    cfg = load_config(toy / "toy.cfg")
    assert isinstance(cfg, PipelineConfig)
    assert cfg.aligner == "diag"
    assert cfg.train_src == str(toy / "toy.src")
