import json

import pytest
from click.testing import CliRunner

from qmparse.cli import main
from qmparse.builtins import builtin
from qmparse.scenario import serialize


@pytest.fixture
def runner():
    return CliRunner()


def test_builtin_text_output(runner):
    result = runner.invoke(main, ["builtin", "wigner_friend_XX"])
    assert result.exit_code == 0
    assert "NoParseCertified" in result.output


def test_builtin_json_output(runner):
    result = runner.invoke(main, ["builtin", "wigner_friend_Z", "--format", "json",
                                  "--seed", "3"])
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["seed"] == 3
    assert report["results"][0]["verdict"]["status"] == "Parsed"


def test_run_scenario_file(runner, tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(serialize(builtin("quantum_eraser")))
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["run", str(path), "--format", "json",
                                  "--report", str(out)])
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert report["results"][0]["verdict"]["status"] == "NoParseCertified"


def test_bad_scenario_file_exits_1(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"systems": oops}')
    result = runner.invoke(main, ["run", str(path)])
    assert result.exit_code == 1
    assert "scenario error" in result.output


def test_unknown_builtin_exits_nonzero(runner):
    result = runner.invoke(main, ["builtin", "nonsense"])
    assert result.exit_code != 0


def test_semantic_error_names_field(runner, tmp_path):
    path = tmp_path / "bad.json"
    doc = json.loads(serialize(builtin("wigner_friend_Z")))
    doc["claims"][0]["context_times"] = [99]
    path.write_text(json.dumps(doc))
    result = runner.invoke(main, ["run", str(path)])
    assert result.exit_code == 1
    assert "context_times" in result.output
