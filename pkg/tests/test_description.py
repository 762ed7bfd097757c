"""测试系统描述文件的解析、组装与序列化"""
import json

import numpy as np
import pytest

from phdae.description import SystemDescription, load_description, parse_description, save_description
from phdae.errors import DescriptionError, DimensionMismatch, ExprSyntaxError
from phdae.fixtures import FixtureManager
from phdae.system import dirac_to_lagrange

TWO_CAPACITOR = {
    "name": "tc",
    "n": 2,
    "state_names": ["x1", "x2"],
    "J": [["0", "0"], ["0", "0"]],
    "B": [["1"], ["-1"]],
    "G": [["1"], ["0"]],
    "storage": {"hamiltonian": "0.5*x1^2 + 0.5*x2^2"},
    "sample_box": [-1, 1],
}


def description(**changes) -> str:
    data = dict(TWO_CAPACITOR)
    data.update(changes)
    return json.dumps(data)


class TestParseDescription:
    """测试解析与格式校验"""

    def test_parse_and_build(self):
        system = parse_description(description()).build()
        assert system.name == "tc"
        assert (system.n, system.k, system.m_P) == (2, 1, 1)

    def test_malformed_json(self):
        with pytest.raises(DescriptionError) as exc:
            parse_description('{"n": 2,\n  "J": [}', "broken.json")
        assert "broken.json" in str(exc.value)
        assert "第 2 行" in str(exc.value)

    def test_unknown_field(self):
        with pytest.raises(DescriptionError):
            parse_description(description(colour="blue"))

    def test_two_storage_kinds(self):
        storage = {"hamiltonian": "x1^2", "morse": {"k": 1, "F": "lam1^2"}}
        with pytest.raises(DescriptionError):
            parse_description(description(storage=storage))

    def test_state_names_length(self):
        with pytest.raises(DescriptionError):
            parse_description(description(state_names=["x1"]))

    def test_dissipation_needs_both_fields(self):
        with pytest.raises(DescriptionError):
            parse_description(description(G_R=[["0"], ["1"]]))

    def test_bad_expression(self):
        desc = parse_description(description(storage={"hamiltonian": "x1^"}))
        with pytest.raises(ExprSyntaxError):
            desc.build()

    def test_numbers_are_accepted_as_cells(self):
        system = parse_description(description(J=[[0, 1], [-1, 0]], B=None)).build()
        assert system.k == 0

    def test_generating_indices_are_one_based(self):
        storage = {"generating": {"I": [1], "J_idx": [2], "V": "0.5*x1^2 - 0.5*e_x2^2"}}
        system = parse_description(description(J=[["0", "1"], ["-1", "0"]], B=None, storage=storage)).build()
        assert system.storage.I == (0,)
        assert system.storage.J == (1,)

    def test_generating_index_out_of_range(self):
        storage = {"generating": {"I": [1], "J_idx": [3], "V": "x1"}}
        desc = parse_description(description(B=None, storage=storage))
        with pytest.raises(DimensionMismatch):
            desc.build_storage()

    def test_missing_file(self, tmp_path):
        with pytest.raises(DescriptionError):
            load_description(tmp_path / "missing.json")


class TestSerialization:
    """测试从系统导出描述"""

    def test_round_trip(self, tmp_path):
        desc = parse_description(description())
        path = tmp_path / "tc.json"
        save_description(SystemDescription.from_system(desc.build()), path)
        again = load_description(path)
        assert again.J == desc.J
        assert again.B == desc.B
        assert again.storage.hamiltonian == "0.5*x1^2 + 0.5*x2^2"
        assert again.build().k == 1

    def test_converted_system(self):
        extended = dirac_to_lagrange(parse_description(description()).build())
        desc = SystemDescription.from_system(extended)
        assert desc.state_names == ["x1", "x2", "lam1"]
        assert desc.B is None
        assert desc.storage.generating.I == [1, 2]
        assert desc.storage.generating.J_idx == [3]
        assert desc.J[2] == ["-1", "1", "0"]

    def test_normalized_drops_empty_fields(self):
        data = json.loads(SystemDescription.from_system(parse_description(description()).build()).to_json())
        assert "reference" not in data
        assert "G_R" not in data
        assert data["storage"] == {"hamiltonian": "0.5*x1^2 + 0.5*x2^2"}

    @pytest.mark.parametrize("name", FixtureManager().list_fixtures())
    def test_fixture_round_trip_is_fixed_point(self, name):
        """解析 → 组装 → 导出 → 再解析：一次规范化之后文本不再变化"""
        desc = FixtureManager().load_description(name)
        validate = desc.expected_failure is None
        extra = dict(
            reference=desc.reference,
            simulation=desc.simulation,
            expected_failure=desc.expected_failure,
        )
        first = SystemDescription.from_system(desc.build(validate=validate), **extra)
        text = first.to_json()
        second = parse_description(text, f"{name}.json")
        third = SystemDescription.from_system(second.build(validate=validate), **extra)
        assert third.to_json() == text
        assert second.state_names == desc.state_names
        assert second.n == desc.n
        zeros = [0.0] * desc.n
        assert np.array_equal(second.build_dirac().J.evaluate(zeros), desc.build_dirac().J.evaluate(zeros))
