from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given

from hrcalc import io as hio
from hrcalc import fusion
from hrcalc.errors import StructureError
from hrcalc.experiments import common
from hrcalc.experiments.common import ConfigError

from conftest import quaternions


@given(quaternions((3, 2)))
def test_qmatrix_round_trip_is_exact(m):
    back = hio.parse_qmatrix(hio.qmatrix_lines(m))
    assert np.array_equal(back, m)


def test_qmatrix_header_names_columns():
    lines = hio.qmatrix_lines(np.zeros((1, 2, 4)))
    assert lines[0] == "qn_0_r,qn_0_i,qn_0_j,qn_0_k,qn_1_r,qn_1_i,qn_1_j,qn_1_k"


def test_qvector_is_a_column(rng, tmp_path):
    v = rng.standard_normal((3, 4))
    path = tmp_path / "v.csv"
    hio.write_qmatrix(path, v)
    assert np.array_equal(hio.read_qmatrix(path)[:, 0], v)


@pytest.mark.parametrize("lines", [[], ["a,b,c,d", "1,2,3,4"], ["qn_0_r,qn_0_i,qn_0_j,qn_0_k", "1,2,3"]])
def test_malformed_qmatrix(lines):
    with pytest.raises(StructureError):
        hio.parse_qmatrix(lines)


def test_model_round_trip(rng, tmp_path):
    F, H = rng.standard_normal((2, 2, 4)), rng.standard_normal((1, 2, 4))
    path = tmp_path / "model.txt"
    hio.write_model(path, {"dt": 0.1, "name": "cv"}, {"F": F, "H": H})
    scalars, blocks = hio.read_model(path)
    assert scalars == {"dt": "0.1", "name": "cv"}
    assert np.array_equal(blocks["F"], F) and np.array_equal(blocks["H"], H)


def test_topology_round_trip():
    net = fusion.AgentNetwork.ring(5)
    back = hio.load_topology(hio.dump_topology(net))
    assert back.n_agents == 5 and sorted(back.edges) == sorted(net.edges)
    assert np.array_equal(back.weights, net.weights)


@pytest.mark.parametrize("text", ["edge 0 1\n", "agents 3\nedge 0\n", "agents x\n", "nodes 3\n"])
def test_malformed_topology(text):
    with pytest.raises(ConfigError):
        hio.load_topology(text)


def test_topology_comments_ignored():
    net = hio.load_topology("# ring\nagents 3\nedge 0 1 # first\nedge 1 2\n")
    assert net.n_agents == 3 and len(net.edges) == 2


@dataclass
class _Params:
    steps: int = 10
    rate: float = 0.5
    flag: bool = False
    name: str = "a"
    pair: tuple = (1.0, 2.0)


def test_config_overrides_and_types():
    p = common.apply_config(_Params(), common.parse_config(
        "steps = 20  # comment\nrate=1e-3\nflag = yes\nname = b c\npair = 3, 4\n"))
    assert p == _Params(20, 1e-3, True, "b c", (3.0, 4.0))


@pytest.mark.parametrize("text", ["bogus = 1", "steps = 1.5", "flag = maybe", "steps", " = 2"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        common.apply_config(_Params(), common.parse_config(text))


def test_csv_round_trip(tmp_path):
    path = tmp_path / "out.csv"
    header = common.params_header("demo", 7, _Params())
    text = common.write_csv(path, header, ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    assert text.startswith("# scenario = demo\n# seed = 7\n# version = ")
    assert "# pair = 1.0 2.0\n" in text
    meta, columns, rows = common.read_csv(path)
    assert meta["scenario"] == "demo" and columns == ["a", "b"]
    assert np.array_equal(rows, [[1, 0.1], [2, 1 / 3]])


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(common.fmt(x)) == x


def test_child_streams_are_distinct_and_reproducible():
    a = common.child_rng(3, 0).random(4)
    assert np.array_equal(a, common.child_rng(3, 0).random(4))
    assert not np.array_equal(a, common.child_rng(3, 1).random(4))
    assert not np.array_equal(a, common.child_rng(4, 0).random(4))
