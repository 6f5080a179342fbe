"""命令行入口：帮助、示例 JSON、正则化乘积与错误输出。"""

from __future__ import annotations

import json

import pytest

from apps.backend import cli
from apps.backend.cli import build_parser, main


def test_help_exits_cleanly(capsys) -> None:
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["expand", "--help"])
    assert excinfo.value.code == 0
    assert "--no-prefactor" in capsys.readouterr().out


def test_expand_prints_table(capsys) -> None:
    assert main(["expand", "--no-prefactor"]) == 0
    output = capsys.readouterr().out
    assert "source.sm" in output
    assert "pipeline: expand" in output


def test_example_json_contains_brackets(capsys) -> None:
    assert main(["example", "setting-sun-hat", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema"] == "smx/1"
    brackets = payload["documents"]["ms"]["v21"]["brackets"]
    assert sorted(brackets) == ["1", "2"]


def test_dimreg_json(capsys) -> None:
    assert main(["dimreg", "--factor", "1,2", "--factor", "1,2", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["expansion"]["lines"] == 2
    assert payload["check"]["passed"] is True


def test_errors_are_reported_as_json(capsys) -> None:
    assert main(["dimreg", "--d", "5", "--json"]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"]["type"] == "OddDimension"
    assert error["schema"] == "smx/1"


def test_verify_direct_limit_exits_cleanly(capsys) -> None:
    assert main(["verify", "direct-limit", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is True
    assert payload["pipeline"] == "verify.direct-limit"


def test_unexpected_errors_are_reported_as_json(capsys, monkeypatch) -> None:
    def crash(args) -> int:
        raise OverflowError("math range error")

    monkeypatch.setitem(cli.COMMANDS, "dimreg", crash)
    assert main(["dimreg", "--json"]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == {"type": "OverflowError", "message": "math range error"}
