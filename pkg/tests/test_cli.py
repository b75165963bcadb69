"""Command line pipeline: exit codes, file outputs, and rerun stability.

Most tests drive main() in process for speed; one subprocess test checks
the module entry point.  The full pipeline runs once on a small planted
model and later tests assert on its outputs.
"""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from genlens.clustering import match_labelings
from genlens.cli import _parse_channel_spec, _parse_int_list, main
from genlens.errors import ValidationError
from genlens.modelio import load_eims, read_csv


MODEL_FLAGS = [
    "--planted", "--blocks", "3", "--latents-per-block", "2",
    "--channels-per-block", "4", "--image-size", "16", "--seed", "11",
]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("pipeline")
    rc = main([
        "make-model", *MODEL_FLAGS,
        "--out-manifest", str(ws / "model.json"),
        "--out-partition", str(ws / "truth.csv"),
    ])
    assert rc == 0
    rc = main([
        "eim", "--manifest", str(ws / "model.json"), "--layer", "mid",
        "--pairs", "16", "--seed", "3", "--out", str(ws / "maps.eims"),
        "--png", str(ws / "maps.png"),
    ])
    assert rc == 0
    rc = main([
        "cluster", "--eims", str(ws / "maps.eims"), "--k", "3", "--seed", "1",
        "--out", str(ws / "labels.csv"),
    ])
    assert rc == 0
    return ws


# -- parsing helpers ------------------------------------------------------------


def test_parse_int_list():
    assert _parse_int_list("3") == [3]
    assert _parse_int_list("2..6") == [2, 3, 4, 5, 6]
    assert _parse_int_list("2,4,8") == [2, 4, 8]
    with pytest.raises(ValidationError, match="empty range"):
        _parse_int_list("6..2")


def test_parse_channel_spec():
    assert _parse_channel_spec("all", 4) == [0, 1, 2, 3]
    assert _parse_channel_spec("0-2,5", 8) == [0, 1, 2, 5]
    with pytest.raises(ValidationError, match="outside"):
        _parse_channel_spec("9", 4)
    with pytest.raises(ValidationError, match="repeats"):
        _parse_channel_spec("1,1", 4)


# -- pipeline outputs -----------------------------------------------------------


def test_pipeline_files_exist(workspace):
    for name in ("model.json", "model.cgmb", "truth.csv", "maps.eims", "maps.png", "labels.csv"):
        assert (workspace / name).exists(), name


def test_cluster_recovers_planted_truth(workspace):
    _, truth_rows, _ = read_csv(workspace / "truth.csv")
    _, label_rows, _ = read_csv(workspace / "labels.csv")
    truth = np.array([int(r[1]) for r in truth_rows])
    labels = np.array([int(r[1]) for r in label_rows])
    _, consistency = match_labelings(truth, labels)
    assert consistency == 1.0


def test_eims_header_records_run(workspace):
    stack = load_eims(workspace / "maps.eims")
    assert stack.layer == "mid"
    assert stack.rows.shape == (12, 256)
    assert (stack.seed, stack.n_pairs) == (3, 16)


def test_csv_provenance_has_version_and_options(workspace):
    _, _, prov = read_csv(workspace / "labels.csv")
    assert prov is not None and prov.startswith("genlens ")
    assert "| cluster |" in prov and "k=3" in prov and "seed=1" in prov


def test_eim_rerun_is_byte_identical(workspace, tmp_path):
    rc = main([
        "eim", "--manifest", str(workspace / "model.json"), "--layer", "mid",
        "--pairs", "16", "--seed", "3", "--out", str(tmp_path / "again.eims"),
    ])
    assert rc == 0
    assert (tmp_path / "again.eims").read_bytes() == (workspace / "maps.eims").read_bytes()


def test_cluster_rerun_is_byte_identical(workspace, tmp_path):
    out = tmp_path / "labels2.csv"
    rc = main(["cluster", "--eims", str(workspace / "maps.eims"), "--k", "3",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    first = (workspace / "labels.csv").read_text().replace("labels.csv", "labels2.csv")
    assert out.read_text() == first.replace("labels2.csv", "labels2.csv")


def test_gen_and_latent_replay(workspace, tmp_path):
    d1, d2 = tmp_path / "gen1", tmp_path / "gen2"
    rc = main(["gen", "--manifest", str(workspace / "model.json"), "--seed", "21",
               "--count", "3", "--out-dir", str(d1)])
    assert rc == 0
    pngs = sorted(p.name for p in d1.glob("*.png"))
    assert pngs == ["sample_000.png", "sample_001.png", "sample_002.png"]
    # replaying the written latents reproduces the images byte for byte
    rc = main(["gen", "--manifest", str(workspace / "model.json"),
               "--latents", str(d1 / "latents.csv"), "--out-dir", str(d2)])
    assert rc == 0
    for name in pngs:
        assert (d2 / name).read_bytes() == (d1 / name).read_bytes()


def test_hybrid_with_cluster_module(workspace, tmp_path):
    out = tmp_path / "hyb"
    rc = main([
        "hybrid", "--manifest", str(workspace / "model.json"), "--layer", "mid",
        "--module", "cluster:0", "--clusters", str(workspace / "labels.csv"),
        "--pairs", "2", "--seed", "4", "--out-dir", str(out), "--save-raw",
    ])
    assert rc == 0
    assert (out / "hybrids.png").exists()
    raws = np.load(out / "hybrids.npy")
    assert raws.shape == (2, 3, 3, 16, 16)
    # hybrids differ from both originals somewhere
    assert not np.array_equal(raws[0, 2], raws[0, 0])
    assert not np.array_equal(raws[0, 2], raws[0, 1])


def test_stability_command(workspace, tmp_path, capsys):
    out = tmp_path / "stab.csv"
    rc = main([
        "stability", "--eims", str(workspace / "maps.eims"), "--k", "2..4",
        "--reps", "3", "--method", "nmf", "--seed", "2", "--out", str(out),
    ])
    assert rc == 0
    header, rows, _ = read_csv(out)
    assert header == ["method", "k", "consistency_mean", "consistency_std", "cosine_mean", "cosine_std"]
    assert [r[1] for r in rows] == ["2", "3", "4"]
    printed = capsys.readouterr().out
    assert "nmf K=3" in printed


def test_check_layer_says_yes(workspace, capsys):
    rc = main(["check-layer", "--manifest", str(workspace / "model.json"), "--layer", "mid"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("yes:")


def test_check_ancestors_disjoint_blocks(workspace, capsys):
    rc = main([
        "check-ancestors", "--manifest", str(workspace / "model.json"),
        "--layer", "mid", "--channels", "0-3", "--against-rest",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "latent ancestors of 4 variables" in out
    assert "[0, 1]" in out
    assert "shares a latent ancestor with the rest of the layer: False" in out


def test_influence_stats_regression(workspace, tmp_path, capsys):
    out = tmp_path / "infl.csv"
    rc = main([
        "influence-stats", "--manifest", str(workspace / "model.json"), "--layer", "mid",
        "--k", "2..3", "--pairs", "8", "--seed", "6", "--out", str(out),
        "--regression-out", str(tmp_path / "reg.csv"),
    ])
    assert rc == 0
    header, rows, _ = read_csv(out)
    assert header == ["k", "cluster", "channel_count", "individual_influence"]
    assert len(rows) == 5  # 2 + 3 modules
    _, reg_rows, _ = read_csv(tmp_path / "reg.csv")
    assert float(reg_rows[0][1]) > 0  # larger modules move more pixels
    assert "influence vs module size" in capsys.readouterr().out


# -- config file -----------------------------------------------------------------


def test_config_supplies_defaults_and_cli_wins(workspace, tmp_path):
    config = tmp_path / "conf.json"
    config.write_text(json.dumps({"pairs": 4, "seed": 9, "layer": "mid"}))
    rc = main([
        "--config", str(config), "eim",
        "--manifest", str(workspace / "model.json"),
        "--seed", "3",  # explicit flag beats the config value
        "--out", str(tmp_path / "c.eims"),
    ])
    assert rc == 0
    stack = load_eims(tmp_path / "c.eims")
    assert stack.n_pairs == 4  # from config
    assert stack.seed == 3  # from the command line
    assert stack.layer == "mid"  # from config


def test_config_must_be_object(workspace, tmp_path):
    config = tmp_path / "bad.json"
    config.write_text("[1, 2]")
    rc = main(["--config", str(config), "check-layer",
               "--manifest", str(workspace / "model.json"), "--layer", "mid"])
    assert rc == 2


# -- failure paths ----------------------------------------------------------------


def test_missing_manifest_is_exit_2(tmp_path, capsys):
    rc = main(["gen", "--manifest", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_corrupt_manifest_is_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    rc = main(["gen", "--manifest", str(bad), "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "JSON" in capsys.readouterr().err


def test_make_model_needs_a_choice(tmp_path):
    rc = main(["make-model", "--out-manifest", str(tmp_path / "m.json")])
    assert rc == 2


def test_missing_required_flag_is_exit_2(capsys):
    rc = main(["check-layer", "--layer", "mid"])
    assert rc == 2
    assert "--manifest is required" in capsys.readouterr().err


def test_module_flag_validation(workspace, tmp_path, capsys):
    base = ["hybrid", "--manifest", str(workspace / "model.json"), "--layer", "mid",
            "--pairs", "1", "--out-dir", str(tmp_path)]
    assert main(base) == 2  # no module selection at all
    assert main(base + ["--module", "cluster:0"]) == 2  # missing --clusters
    assert main(base + ["--module", "group-0", "--clusters", str(workspace / "labels.csv")]) == 2
    assert main(base + ["--module", "cluster:9", "--clusters", str(workspace / "labels.csv")]) == 2
    capsys.readouterr()


def test_bad_channel_spec_is_exit_2(workspace, tmp_path):
    rc = main(["hybrid", "--manifest", str(workspace / "model.json"), "--layer", "mid",
               "--channels", "0-99", "--pairs", "1", "--out-dir", str(tmp_path)])
    assert rc == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "genlens.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("genlens ")
