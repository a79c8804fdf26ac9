"""
コマンドラインのテストコード
"""
import json

import pytest

from main import dispatch

SBM_PARAMS = "q0: 12\nq1: 0.5\nq2: 6\nq3: 0.5\nrho: 0.5\n"


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "params.yaml"
    path.write_text(SBM_PARAMS, encoding="utf-8")
    return path


@pytest.fixture
def graph_file(tmp_path, params_file):
    path = tmp_path / "graph.json"
    assert dispatch(["sample", "--params", str(params_file), "--n", "10", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_help(capsys):
    """--help は終了コード 0"""
    assert dispatch(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_sample_to_stdout(capsys):
    """--q の略記で生成したグラフを標準出力へ"""
    code = dispatch(["sample", "--q", "9,1,3,1", "--rho", "0.5", "--xi", "0.1", "--n", "12", "--seed", "5"])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    assert document["n"] == 12
    assert len(document["x"]) == 12
    assert sum(document["x"]) == 6


def test_sample_needs_one_model_source(capsys, params_file):
    """--params と --q の両方、あるいはどちらもなければドメインエラー"""
    assert dispatch(["sample", "--n", "10"]) == 1
    assert dispatch(["sample", "--params", str(params_file), "--q", "9,1,3,1", "--rho", "0.5", "--n", "10"]) == 1
    assert "Error:" in capsys.readouterr().err


def test_thresholds(capsys, params_file):
    """閾値レポートの JSON 配列"""
    assert dispatch(["thresholds", "--params", str(params_file)]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert isinstance(reports, list)
    assert reports
    assert all("which" in r and "value" in r and "exact_recovery" in r for r in reports)
    # 二値モデルの SDP 閾値 (y 既知・未知) が先頭
    assert reports[0]["exact_recovery"]
    assert reports[1]["exact_recovery"]


def test_thresholds_as_text(capsys, params_file):
    """--format text は列幅をそろえた表"""
    assert dispatch(["thresholds", "--params", str(params_file), "--format", "text"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["which", "value", "exact_recovery", "critical"]
    assert lines[1].split()[0] == "eta1"
    assert lines[1].split()[2] == "true"
    # 2 列目はどの行も同じ位置から始まる
    start = lines[0].index("value")
    assert all(line[start - 2:start] == "  " and line[start] != " " for line in lines[1:])


def test_region(capsys, tmp_path):
    """境界曲線の CSV"""
    path = tmp_path / "table1.yaml"
    path.write_text("q0: 9\nq1: 1\nq2: 3\nq3: 1\nrho: 0.5\n", encoding="utf-8")
    code = dispatch(["region", "--params", str(path), "--scenario", "sbm_unknown_y",
                     "--rho", "0.3", "--rho", "0.5"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "rho,q0_star,scenario"
    assert lines[1].startswith("0.300000,")
    assert lines[2].startswith("0.500000,")


def test_detect(capsys, graph_file, params_file):
    """MAP と総当たり最尤推定の結果"""
    assert dispatch(["detect", "--graph", str(graph_file), "--params", str(params_file),
                     "--scenario", "sbm_known_y"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert len(result["x_hat"]) == 10

    assert dispatch(["detect", "--graph", str(graph_file), "--params", str(params_file),
                     "--scenario", "sbm_unknown_y", "--detector", "ml_bruteforce"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert sum(result["x_hat"]) == 0
    assert result["objective"] is not None


def test_solve_with_certificate(tmp_path, graph_file, params_file):
    """SDP の解と証明書をファイルへ"""
    out = tmp_path / "solution.json"
    code = dispatch(["solve", "--graph", str(graph_file), "--params", str(params_file),
                     "--scenario", "sbm_unknown_y", "--certify", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text())
    assert sum(document["solution"]["x_hat"]) == 0
    assert document["solution"]["V"] is None
    assert document["certificate"]["attempts"] >= 1
    assert document["errors"] is not None


def test_solve_full_includes_factor(graph_file, params_file, capsys):
    """--full で因子 V も出力する"""
    code = dispatch(["solve", "--graph", str(graph_file), "--params", str(params_file),
                     "--scenario", "sbm_unknown_y", "--full"])
    assert code == 0
    solution = json.loads(capsys.readouterr().out)["solution"]
    assert len(solution["V"]) == 10
    assert solution["stopped_by"] in ("gradient", "objective", "max_iter")


def test_simulate_with_config(tmp_path, capsys):
    """設定ファイルからの実行、CSV は標準出力へ"""
    config = tmp_path / "experiment.yaml"
    config.write_text(
        "binary: {q0: 40, q1: 1, q2: 3, q3: 1, rho: 0.5}\n"
        "scenario: sbm_known_y\n"
        "detector: map\n"
        "n_values: [40]\n"
        "trials: 5\n",
        encoding="utf-8",
    )
    assert dispatch(["--threads", "2", "simulate", "--config", str(config), "--trials", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("scenario,n,q0,")
    fields = lines[1].split(",")
    assert fields[0] == "sbm_known_y"
    assert fields[5] == "3"


def test_simulate_preset_overrides(tmp_path, monkeypatch):
    """プリセットの試行数・n・出力先を上書き"""
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "table.csv"
    journal = tmp_path / "table.ndjson"
    code = dispatch(["simulate", "--preset", "table1_sbm_unknown", "--trials", "1", "--n", "10",
                     "--out", str(out), "--journal", str(journal)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert len(journal.read_text().splitlines()) == 2
    assert not (tmp_path / "results").exists()


def test_simulate_unknown_preset(capsys):
    """未知のプリセットはドメインエラー"""
    assert dispatch(["simulate", "--preset", "nope"]) == 1
    assert "unknown preset" in capsys.readouterr().err


def test_figures(tmp_path, capsys):
    """図 3 の境界を出力"""
    assert dispatch(["figures", "--figure", "3", "--out", str(tmp_path)]) == 0
    (report,) = json.loads(capsys.readouterr().out)
    assert report["figure"] == 3
    assert (tmp_path / "figure3.csv").exists()
    assert (tmp_path / "figure3.gp").exists()


def test_usage_errors():
    """未知のオプションや選択肢は終了コード 1"""
    assert dispatch(["sample", "--bogus"]) == 1
    assert dispatch(["region", "--params", "x.yaml", "--scenario", "nope"]) == 1
    assert dispatch(["nosuchcommand"]) == 1


def test_missing_file_exit_code(tmp_path, params_file):
    """読めないファイルは終了コード 2"""
    code = dispatch(["solve", "--graph", str(tmp_path / "missing.json"), "--params", str(params_file),
                     "--scenario", "sbm_unknown_y"])
    assert code == 2


def test_invalid_parameters_exit_code(tmp_path):
    """パラメータの検証エラーは終了コード 1"""
    path = tmp_path / "bad.yaml"
    path.write_text("q0: -1\nq1: 1\nq2: 1\nq3: 1\nrho: 0.5\n", encoding="utf-8")
    assert dispatch(["thresholds", "--params", str(path)]) == 1
