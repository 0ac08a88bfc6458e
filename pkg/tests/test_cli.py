import json

import numpy as np
import pytest

from timegci.cli import main
from timegci.data import load_csv

SMOKE = ["--max-joint-steps", "6", "--early-stop-interval", "3", "--pretrain-policy-steps", "5",
         "--pretrain-energy-steps", "3", "--pretrain-critic-steps", "3", "--val-rollouts", "40",
         "--val-predictor-steps", "5", "--initial-buffer-rollouts", "16", "--M", "16", "--hidden", "8",
         "--head-hidden", "8"]


@pytest.fixture(scope="module")
def prepared(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert main(["prepare", "--dataset", "sines", "--n", "300", "--T", "8", "--D", "3", "--seed", "7",
                 "--out", str(d)]) == 0
    return d


def test_prepare_is_byte_identical_and_reports_stats(prepared, tmp_path):
    assert main(["prepare", "--dataset", "sines", "--n", "300", "--T", "8", "--D", "3", "--seed", "7",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "dataset.csv").read_bytes() == (prepared / "dataset.csv").read_bytes()
    meta = json.loads((prepared / "dataset.json").read_text())
    assert meta["T"] == 8 and meta["D"] == 3 and "autocorr_lag1" in meta["stats"]


def test_prepare_sines_table_statistics(tmp_path):
    assert main(["prepare", "--dataset", "sines", "--n", "10000", "--T", "24", "--D", "5", "--seed", "7",
                 "--out", str(tmp_path)]) == 0
    st = json.loads((tmp_path / "dataset.json").read_text())["stats"]
    for lag, want in ((1, 0.875), (3, 0.623), (5, 0.377)):
        assert abs(st[f"autocorr_lag{lag}"] - want) <= 0.05


def test_prepare_csv_round_trip(prepared, tmp_path):
    assert main(["prepare", "--dataset", "csv", "--csv", str(prepared / "dataset.csv"), "--T", "8",
                 "--out", str(tmp_path)]) == 0
    assert load_csv(tmp_path / "dataset.csv", 8).values.shape == (300, 8, 3)


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["prepare", "--dataset", "csv", "--out", str(tmp_path)]) == 2
    assert "--csv" in capsys.readouterr().err
    assert main(["prepare", "--dataset", "csv", "--csv", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert main(["train", "--print-config", "--alpha", "abc"]) == 2
    assert main(["train", "--data", str(tmp_path / "missing")]) == 2
    with pytest.raises(SystemExit) as e:
        main(["train", "--method", "gail"])
    assert e.value.code == 2


def test_print_config_reproduces_defaults(capsys, tmp_path):
    assert main(["train", "--print-config"]) == 0
    text = capsys.readouterr().out
    for line in ("M = 64", "lr_energy = 0.0001", "lr_policy = 0.0001", "lr_critic = 0.001", "alpha = 0.2",
                 "buffer_capacity = 10000", "pretrain_policy_steps = 2000", "pretrain_energy_steps = 4000",
                 "pretrain_critic_steps = 20000", "max_joint_steps = 50000", "polyak_rate = 0.005"):
        assert line in text.splitlines()
    cfg = tmp_path / "c.txt"
    cfg.write_text("alpha = 0.5\nkappa = 2\n")
    assert main(["train", "--print-config", "--config", str(cfg), "--kappa", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "alpha = 0.5" in lines and "kappa = 3.0" in lines


@pytest.fixture(scope="module")
def trained(prepared, tmp_path_factory):
    runs = tmp_path_factory.mktemp("runs")
    out = {}
    for method in ("timegci", "tforcing"):
        assert main(["train", "--data", str(prepared), "--out", str(runs / method), "--method", method, *SMOKE]) == 0
        (run,) = (runs / method).iterdir()
        out[method] = run
    return out


def test_train_writes_run_directory(trained):
    for method, run in trained.items():
        assert run.name.endswith("-seed0")
        man = json.loads((run / "manifest.json").read_text())
        assert man["status"] == "done" and man["method"] == method
        assert man["constructed_energy_critic"] == (method == "timegci")
        assert (run / "best.ckpt").read_bytes()[0] == 1
        assert (run / "metrics.csv").read_text().startswith("step,loss_actor,loss_energy,loss_critic,loss_mle,")


def test_generate_is_deterministic_and_in_envelope(trained, prepared, tmp_path):
    ck = trained["timegci"] / "best.ckpt"
    for name in ("a.csv", "b.csv"):
        assert main(["generate", "--checkpoint", str(ck), "--n", "50", "--seed", "3", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    syn = load_csv(tmp_path / "a.csv", 8).values
    norm = json.loads((prepared / "normalizer.json").read_text())
    assert syn.shape == (50, 8, 3)
    assert np.all(syn >= np.array(norm["min"]) - 1e-9) and np.all(syn <= np.array(norm["max"]) + 1e-9)


def test_evaluate_with_energy_scores(trained, prepared, tmp_path):
    ck = trained["timegci"] / "best.ckpt"
    syn = tmp_path / "s.csv"
    assert main(["generate", "--checkpoint", str(ck), "--n", "60", "--out", str(syn)]) == 0
    out = tmp_path / "ev"
    assert main(["evaluate", "--real", str(prepared), "--synthetic", str(syn), "--checkpoint", str(ck),
                 "--energy-scores", "--out", str(out), "--steps", "10"]) == 0
    assert (out / "report.csv").exists()
    rows = (out / "energy_scores.csv").read_text().splitlines()
    assert rows[0] == "index,score" and len(rows) == 61
    assert main(["evaluate", "--real", str(prepared), "--synthetic", str(syn), "--energy-scores",
                 "--out", str(out)]) == 2
    tf = trained["tforcing"] / "best.ckpt"
    assert main(["evaluate", "--real", str(prepared), "--synthetic", str(syn), "--checkpoint", str(tf),
                 "--energy-scores", "--out", str(out), "--steps", "5"]) == 2


def test_evaluate_shape_mismatch(prepared, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("series_id,t,f1\n" + "".join(f"0,{t},0.5\n" for t in range(8)))
    assert main(["evaluate", "--real", str(prepared), "--synthetic", str(bad), "--out", str(tmp_path / "e")]) == 2


def test_generate_rejects_bad_checkpoint(trained, tmp_path):
    raw = (trained["tforcing"] / "best.ckpt").read_bytes()
    bad = tmp_path / "v9.ckpt"
    bad.write_bytes(bytes([9]) + raw[1:])
    assert main(["generate", "--checkpoint", str(bad), "--out", str(tmp_path / "x.csv")]) == 2


def test_theorycheck_exit_codes(tmp_path):
    assert main(["theorycheck", "--suite", "eqd", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())[0]["passed"] is True


def test_threads_flag(capsys):
    assert main(["--threads", "1", "train", "--print-config"]) == 0
