import math

import numpy as np
import pytest

from ramandenoise.bench import BenchConfig, read_per_spectrum, run_bench
from ramandenoise.cli import main, parse_snr_grid
from ramandenoise.core import Spectrum, read_dataset, read_spectrum_csv, write_spectrum_csv
from ramandenoise.errors import InvalidConfig, MissingCheckpoint
from ramandenoise.metrics import aggregate

SMALL = """length = 128
peak_count_range = [2, 5]
width_range = [1.5, 4.0]
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    (root / "gen.toml").write_text(SMALL)
    assert main(["gen", "--config", str(root / "gen.toml"), "--n-train", "12", "--n-test", "4",
                 "--seed", "5", "--out", str(root)]) == 0
    ckpt = root / "model.rsdn"
    assert main(["train", str(root / "train.jsonl"), "--epochs", "3", "--batch-size", "4",
                 "--ckpt", str(ckpt), "--out", str(root)]) == 0
    return root


def test_parse_snr_grid():
    assert parse_snr_grid("0:20:5") == (0.0, 5.0, 10.0, 15.0, 20.0)
    assert parse_snr_grid("9.5") == (9.5,)
    assert parse_snr_grid("1,2.5") == (1.0, 2.5)


def test_gen_is_deterministic(tmp_path, capsys):
    cfg = tmp_path / "g.toml"
    cfg.write_text(SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    code, out_a, _ = run(capsys, "--seed", 3, "gen", "--config", cfg, "--n-train", 6, "--n-test", 2,
                         "--out", a)
    assert code == 0
    code, out_b, _ = run(capsys, "gen", "--config", cfg, "--n-train", 6, "--n-test", 2,
                         "--seed", 3, "--out", b)
    assert code == 0 and out_a == out_b
    assert out_a.splitlines()[:2] == ["train,6", "test,2"]
    for name in ("train.jsonl", "test.jsonl", "generator.toml"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len(read_dataset(a / "train.jsonl")) == 6


def test_gen_snr_grid_is_round_robin(tmp_path, capsys):
    (tmp_path / "g.toml").write_text(SMALL)
    code, out, _ = run(capsys, "gen", "--config", tmp_path / "g.toml", "--n-train", 5, "--n-test", 1,
                       "--snr-grid", "0:20:10", "--out", tmp_path)
    assert code == 0
    assert out.splitlines()[:2] == ["train,5", "test,1"]
    targets = [p.target_snr_db for p in read_dataset(tmp_path / "train.jsonl")]
    assert targets == [0.0, 10.0, 20.0, 0.0, 10.0]


def test_gen_rejects_out_of_range_snr(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--snr", 95, "--n-train", 1, "--n-test", 1, "--out", tmp_path)
    assert code == 3 and "InvalidConfig" in err


def test_train_writes_checkpoint_and_loss(small_data):
    loss = (small_data / "model.loss.csv").read_text().splitlines()
    assert loss[0] == "epoch,loss" and len(loss) == 4
    assert (small_data / "model.loss.svg").exists()


def test_train_is_deterministic(small_data, tmp_path):
    other = tmp_path / "again.rsdn"
    assert main(["train", str(small_data / "train.jsonl"), "--epochs", "3", "--batch-size", "4",
                 "--ckpt", str(other), "--out", str(tmp_path)]) == 0
    assert other.read_bytes() == (small_data / "model.rsdn").read_bytes()


@pytest.mark.parametrize("method", ["dl", "universal", "sure", "fdr", "ebayes", "minimax"])
def test_denoise_preserves_length(small_data, tmp_path, capsys, method):
    pair = read_dataset(small_data / "test.jsonl")[0]
    src = tmp_path / "in.csv"
    write_spectrum_csv(pair.noisy, src)
    extra = ["--ckpt", small_data / "model.rsdn"] if method == "dl" else []
    code, _, err = run(capsys, "denoise", src, tmp_path / "out.csv", "--method", method, *extra)
    assert code == 0, err
    out = read_spectrum_csv(tmp_path / "out.csv")
    assert out.length == 128 and np.all(np.isfinite(out.intensities))


def test_denoise_neural_without_checkpoint(tmp_path, capsys):
    src = tmp_path / "in.csv"
    write_spectrum_csv(Spectrum(np.arange(64.0)), src)
    code, _, err = run(capsys, "denoise", src, tmp_path / "o.csv", "--method", "dl")
    assert code == 3 and "MissingCheckpoint" in err


def test_eval_identical_and_mismatched(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_spectrum_csv(Spectrum(np.linspace(1, 5, 20)), a)
    code, out, _ = run(capsys, "eval", a, a)
    assert code == 0
    assert out.splitlines() == ["snr_db,rmse,mape_pct", "inf,0,0"]
    write_spectrum_csv(Spectrum(np.ones(21)), b)
    code, _, err = run(capsys, "eval", a, b)
    assert code == 3 and "LengthMismatch" in err


def test_eval_zero_signal_is_numeric_failure(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_spectrum_csv(Spectrum(np.zeros(8)), a)
    write_spectrum_csv(Spectrum(np.ones(8)), b)
    code, _, _ = run(capsys, "eval", a, b)
    assert code == 4


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--snr", "1", "--snr-grid", "1,2"])
    assert exc.value.code == 2


def test_missing_input_file(tmp_path, capsys):
    code, _, err = run(capsys, "bench", tmp_path / "nope.jsonl", "--methods", "universal")
    assert code == 3 and "IoFailure" in err


def test_bench_requires_checkpoints():
    with pytest.raises(MissingCheckpoint):
        BenchConfig(methods=("dl",))
    with pytest.raises(InvalidConfig):
        BenchConfig(methods=("median",))


def test_bench_outputs_are_deterministic_and_consistent(small_data, tmp_path, capsys):
    args = ["bench", small_data / "test.jsonl", "--ckpt", small_data / "model.rsdn",
            "--methods", "dl,universal,sure,fdr,ebayes,minimax"]
    code, out_a, err = run(capsys, *args, "--out", tmp_path / "a")
    assert code == 0, err
    code, out_b, _ = run(capsys, *args, "--out", tmp_path / "b")
    assert out_a == out_b
    for name in ("report.csv", "per_spectrum.csv", "overlay.csv", "figures/overlay.svg",
                 "figures/snr.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    lines = out_a.splitlines()
    assert lines[0] == "method,snr_db,rmse,mape_pct,n_spectra"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["noisy", "dl", "universal", "sure", "fdr",
                                                      "ebayes", "minimax"]
    per = read_per_spectrum((tmp_path / "a" / "per_spectrum.csv").read_text())
    for ln in lines[1:]:
        method, snr, rmse, mape, n = ln.split(",")
        agg = aggregate(per[method])
        assert int(n) == len(per[method]) == 4
        assert math.isclose(float(snr), agg.snr_db, rel_tol=1e-12)
        assert math.isclose(float(rmse), agg.rmse, rel_tol=1e-12)
        assert math.isclose(float(mape), agg.mape_pct, rel_tol=1e-12)


def test_bench_noisy_row_scores_corrected_input(small_data):
    test = read_dataset(small_data / "test.jsonl")
    result = run_bench(test, BenchConfig(methods=("universal",)))
    assert result.row("noisy").snr_db < result.row("universal").snr_db
    assert set(result.overlay) == {"clean", "noisy", "input", "universal"}
