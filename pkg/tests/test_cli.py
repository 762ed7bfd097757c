"""测试命令行：子命令输出与退出码"""
import json

import pytest

from phdae.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestValidateAndClassify:
    """测试 validate / classify"""

    def test_fixtures_listing(self, capsys):
        code, out, _ = run(capsys, "fixtures")
        assert code == 0
        assert "two_capacitor" in out
        assert "预期失败: MorseRankFailure" in out

    def test_validate(self, capsys):
        code, out, _ = run(capsys, "validate", "two_capacitor")
        assert code == 0
        assert "验证通过" in out

    def test_validate_expected_failure(self, capsys):
        code, _, err = run(capsys, "validate", "morse_cubic")
        assert code == 2
        assert "MorseRankFailure" in err

    def test_classify_dirac(self, capsys):
        code, out, _ = run(capsys, "classify", "two_capacitor")
        assert code == 0
        assert "1 条 Dirac 约束" in out
        assert "index-1" in out

    def test_classify_input_state_output(self, capsys):
        code, out, _ = run(capsys, "classify", "oscillator")
        assert code == 0
        assert "没有代数约束；输入-状态-输出形式" in out

    def test_classify_json(self, capsys):
        code, out, _ = run(capsys, "classify", "two_capacitor", "--json")
        assert code == 0
        payload = json.loads(out)
        assert len(payload["dirac"]) == 1
        assert payload["index"]["sigma_min"] == pytest.approx(2.0)
        assert payload["index"]["index_one"]
        assert payload["input_state_output"] is False


class TestConvert:
    """测试 convert"""

    def test_convert_and_validate(self, capsys, tmp_path):
        out_path = tmp_path / "tc_lagrange.json"
        code, _, err = run(capsys, "convert", "two_capacitor", "--to", "lagrange", "--out", str(out_path))
        assert code == 0
        assert "lam1" in err
        data = json.loads(out_path.read_text(encoding="utf-8"))
        assert data["storage"]["generating"]["J_idx"] == [3]

        code, out, _ = run(capsys, "validate", str(out_path))
        assert code == 0
        assert "验证通过" in out

    def test_convert_to_stdout(self, capsys):
        code, out, _ = run(capsys, "convert", "lq_optimal_control_implicit", "--to", "dirac")
        assert code == 0
        assert json.loads(out)["state_names"] == ["q", "p", "u"]

    def test_nothing_to_convert(self, capsys):
        code, _, err = run(capsys, "convert", "oscillator", "--to", "lagrange")
        assert code == 2
        assert "NothingToConvert" in err


class TestSimulate:
    """测试 simulate"""

    def test_csv_to_stdout(self, capsys):
        code, out, _ = run(
            capsys, "simulate", "two_capacitor", "--x0", "0,0", "--t1", "0.1", "--dt", "0.01", "--u", "1"
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("t,x1,x2,lam_star_1")
        assert len(lines) == 12
        assert float(lines[-1].split(",")[1]) == pytest.approx(0.05)

    def test_csv_to_file(self, capsys, tmp_path):
        path = tmp_path / "osc.csv"
        code, out, _ = run(capsys, "simulate", "oscillator", "--x0", "1,0", "--dt", "0.1", "--out", str(path))
        assert code == 0
        assert out == ""
        assert len(path.read_text(encoding="utf-8").strip().split("\n")) == 12

    def test_bad_step(self, capsys):
        code, _, _ = run(capsys, "simulate", "oscillator", "--x0", "1,0", "--dt", "0")
        assert code == 1

    def test_index_violation(self, capsys, tmp_path):
        path = tmp_path / "quartic.json"
        path.write_text(json.dumps({
            "name": "quartic",
            "n": 1,
            "state_names": ["x1"],
            "J": [["0"]],
            "B": [["1"]],
            "storage": {"hamiltonian": "0.25*x1^4"},
        }), encoding="utf-8")
        code, out, err = run(capsys, "simulate", str(path), "--x0", "0", "--t1", "0.1", "--dt", "0.01")
        assert code == 2
        assert "IndexViolation" in err
        assert len(out.strip().split("\n")) == 2


class TestLegendre:
    """测试 legendre"""

    def test_single_point(self, capsys):
        code, out, _ = run(capsys, "legendre", "--P", "x^2", "--vars", "x", "--at", "2")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "input\tx*\tP*"
        assert lines[1] == "2\t1\t1"

    def test_non_convex(self, capsys):
        code, _, err = run(capsys, "legendre", "--P", "x^3", "--vars", "x", "--at", "0")
        assert code == 2
        assert "非凸点" in err

    def test_grid_with_check(self, capsys):
        code, out, _ = run(capsys, "legendre", "--P", "x^2", "--vars", "x", "--grid=-1:1:21", "--check")
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 22
        assert lines[0].endswith("inverse\ttilde\ttilde_grad")

    def test_partial(self, capsys):
        code, out, _ = run(
            capsys, "legendre", "--P", "x^2 + 0.5*y^2 + x*y", "--vars", "x,y", "--at", "1,3", "--partial", "1/2"
        )
        assert code == 0
        assert out.strip().split("\n")[1] == "1,3\t2\t1"

    def test_wrong_point_length(self, capsys):
        code, _, _ = run(capsys, "legendre", "--P", "x^2", "--vars", "x", "--at", "1,2")
        assert code == 1


class TestUsageErrors:
    """测试输入错误的退出码"""

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"n": 2,', encoding="utf-8")
        code, _, err = run(capsys, "validate", str(path))
        assert code == 1
        assert "JSON 格式错误" in err

    def test_unknown_system(self, capsys):
        code, _, err = run(capsys, "classify", "no_such_system")
        assert code == 1
        assert "no_such_system" in err

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1
