import pytest
from click.testing import CliRunner

from pathclass.cli import main
from tests.conftest import write_corpus

HIERARCHY = "data/20ng_hierarchy.txt"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workspace(tmp_path):
    hierarchy = tmp_path / "h.txt"
    hierarchy.write_text("root\ta\nroot\tb\na\ta1\na\ta2\nb\tb1\nb\tb2\n")
    train = write_corpus(tmp_path / "train.txt", [
        "d1\ta1\tcar:3 wheel:1",
        "d2\ta2\tcar:1 boat:2",
        "d3\tb1\tsky:2 star:2",
        "d4\tb2\tsky:1 moon:3",
    ])
    test = write_corpus(tmp_path / "test.txt", [
        "t1\ta1\tcar:2 wheel:1",
        "t2\tb1\tsky:2 star:1",
    ])
    return str(hierarchy), train, test


def test_inspect_command(runner):
    result = runner.invoke(main, ["inspect", "--hierarchy", HIERARCHY])
    assert result.exit_code == 0, result.output
    assert "nodes=27 depth=2 leaves=20" in result.output
    assert "comp > comp.graphics" in result.output


def test_inspect_missing_file_fails_cleanly(runner):
    result = runner.invoke(main, ["inspect", "--hierarchy", "nope.txt"])
    assert result.exit_code == 1
    assert "error:" in result.output


def test_train_eval_predict_commands(runner, workspace, tmp_path):
    hierarchy, train, test = workspace
    model = str(tmp_path / "model.json")
    result = runner.invoke(main, [
        "train", "--hierarchy", hierarchy, "--train", train, "--test", test,
        "--algo", "pcnb", "--out", model])
    assert result.exit_code == 0, result.output
    assert "trained pcnb" in result.output

    result = runner.invoke(main, ["eval", "--model", model, "--test", test, "--per-class"])
    assert result.exit_code == 0, result.output
    assert "micro_f1=1.0000" in result.output
    assert "a1\tP=" in result.output

    result = runner.invoke(main, ["predict", "--model", model, "--docs", test])
    assert result.exit_code == 0, result.output
    assert "t1\t0\ta,a1" in result.output


def test_sweep_command_writes_csvs(runner, workspace, tmp_path):
    hierarchy, train, test = workspace
    out_dir = str(tmp_path / "runs")
    result = runner.invoke(main, [
        "sweep", "--hierarchy", hierarchy, "--train", train, "--test", test,
        "--algo", "pcnb", "--algo", "pcem", "--rates", "0.5,1.0",
        "--seeds", "0 1", "--out", out_dir])
    assert result.exit_code == 0, result.output
    assert "mean_micro_f1" in result.output
    assert (tmp_path / "runs" / "aggregate.csv").exists()
    assert (tmp_path / "runs" / "metadata.json").exists()


def test_synth_command(runner, tmp_path):
    result = runner.invoke(main, [
        "synth", "--hierarchy", HIERARCHY, "--n-docs", "50", "--vocab-size", "80",
        "--out", str(tmp_path / "train.txt")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "train.txt").exists()


def test_train_propagates_corpus_error(runner, workspace, tmp_path):
    hierarchy, _, _ = workspace
    bad = write_corpus(tmp_path / "bad.txt", ["d1\tmystery\tw:1"])
    result = runner.invoke(main, [
        "train", "--hierarchy", hierarchy, "--train", bad,
        "--algo", "pcnb", "--out", str(tmp_path / "m.json")])
    assert result.exit_code == 1
    assert "bad.txt:1" in result.output


def test_unreachable_server_exits_2(runner):
    result = runner.invoke(main, ["--server", "http://127.0.0.1:1",
                                  "inspect", "--hierarchy", HIERARCHY])
    assert result.exit_code == 2
    assert "cannot reach service" in result.output
