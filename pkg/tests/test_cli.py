import json

import numpy as np
import pytest

from sagin_slicing import cli
from sagin_slicing.analysis import nondominated_mask

TINY = "K = 2, 2, 2\nhidden = 8, 8\nbatch_central = 2\nbatch_distributed = 2\nE = 1\nT = 4\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return str(p)


def test_train_writes_all_artifacts(cfg, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["train", "--config", cfg, "--seed", "3", "--out", str(out)]) == 0
    for name in ("metrics.csv", "pareto.csv", "manifest.json"):
        assert (out / name).is_file()
    assert (out / "checkpoints" / "central" / "actor.bin").is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    for f in manifest["files"]:
        assert (out / f).exists()
    m = cli.read_metrics_csv(out / "metrics.csv")
    assert m.shape == (4, 10)
    assert cli.read_pareto_csv(out / "pareto.csv").shape[1] == 8


def test_rerun_is_bit_identical(cfg, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["train", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a/metrics.csv").read_bytes() == (tmp_path / "b/metrics.csv").read_bytes()
    ha = json.loads((tmp_path / "a/manifest.json").read_text())["content_hash"]
    hb = json.loads((tmp_path / "b/manifest.json").read_text())["content_hash"]
    assert ha == hb


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert cli.main(["train", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert "not found" in capsys.readouterr().err


def test_output_dir_from_environment(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["train", "--config", cfg, "--seed", "5"]) == 0
    assert (tmp_path / "envout" / "run-seed5" / "metrics.csv").is_file()


@pytest.mark.parametrize("weights", ["1:1:1", "1:1:4", "4:4:1"])
def test_utility_baseline(cfg, tmp_path, weights):
    out = tmp_path / "u"
    assert cli.main(["baseline", "utility", "--weights", weights, "--config", cfg,
                     "--out", str(out)]) == 0
    assert (out / "metrics.csv").is_file()


def test_baseline_errors(cfg, tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["baseline", "nope", "--config", cfg])
    assert cli.main(["baseline", "utility", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert cli.main(["baseline", "utility", "--weights", "1:0:1", "--config", cfg]) == 2


def test_maddpg_baseline(cfg, tmp_path):
    assert cli.main(["baseline", "maddpg", "--config", cfg, "--out", str(tmp_path / "m")]) == 0


def test_ablate(cfg, tmp_path):
    out = tmp_path / "ab"
    assert cli.main(["ablate", "--config", cfg, "--out", str(out)]) == 0
    assert len(cli.read_metrics_csv(out / "fixed_uav" / "metrics.csv")) == 4
    trace = np.loadtxt(out / "fixed_uav" / "uav_trace.csv", delimiter=",", skiprows=1)[:, 1:]
    assert np.all(trace == [500, 500, 1500, 1500, 2500, 2500])
    for v in ("full", "single_allocation"):
        assert (out / v / "metrics.csv").is_file()


def _fake_run(path, rows):
    path.mkdir()
    cli.write_pareto_csv(path / "pareto.csv", [])
    from sagin_slicing.analysis import write_points_csv
    write_points_csv(path / "pareto.csv", rows, extra_header=cli.PARETO_EXTRA)


def test_pareto_merge_vs_brute_force(tmp_path):
    rng = np.random.default_rng(0)
    a = [(*rng.uniform(size=3), 0.5, 0.5, 0.5, 0, i) for i in range(20)]
    b = [(*rng.uniform(size=3), 0.5, 0.5, 0.5, 1, i) for i in range(20)]
    _fake_run(tmp_path / "a", a)
    _fake_run(tmp_path / "b", b)
    front = cli.merge_fronts([tmp_path / "a", tmp_path / "b"])
    both = np.array(a + b)
    want = both[nondominated_mask(both[:, :3])]
    assert sorted(map(tuple, front)) == sorted(map(tuple, want))
    single = cli.merge_fronts([tmp_path / "a"])
    assert np.array_equal(single, cli.merge_fronts([tmp_path / "a", tmp_path / "a"]))
    out = tmp_path / "merged.csv"
    assert cli.main(["pareto", str(tmp_path / "a"), str(tmp_path / "b"), "--out", str(out)]) == 0
    assert out.is_file() and (tmp_path / "merged_surface.csv").is_file()


def test_pareto_empty_merge_fails(tmp_path):
    (tmp_path / "e").mkdir()
    cli.write_pareto_csv(tmp_path / "e" / "pareto.csv", [])
    assert cli.main(["pareto", str(tmp_path / "e"), "--out", str(tmp_path / "x.csv")]) == 1
    assert cli.main(["pareto", str(tmp_path / "missing")]) == 2


def test_export_svg(cfg, tmp_path):
    run = tmp_path / "run"
    cli.main(["train", "--config", cfg, "--out", str(run)])
    assert cli.main(["export", str(run)]) == 0
    svg = (run / "rewards.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg
