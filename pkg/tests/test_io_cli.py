import json
from fractions import Fraction

import numpy as np
import pytest
from conftest import NILPOTENT, PAULI_X, PAULI_Z

from cpdil import io
from cpdil.channel import Channel, choi_distance, from_kraus, random_channel
from cpdil.cli import main
from cpdil.errors import SchemaError
from cpdil.semigroup import decay, dephasing
from cpdil.strongcomm import make_aut_cp_pair


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# -- serialization ------------------------------------------------------------------


def test_complex_and_matrix_parsing():
    assert io.parse_complex([1.5, -2]) == 1.5 - 2j
    assert io.parse_complex(3) == 3
    m = io.parse_matrix([[1, [0, 1]], [[0, -1], 2]])
    assert m[0, 1] == 1j and m[1, 0] == -1j
    with pytest.raises(SchemaError):
        io.parse_matrix([[1, 2], [3]])


def test_matrix_encoding_is_exact(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.array_equal(io.parse_matrix(io.encode_matrix(a)), a)


def test_channel_round_trip(rng):
    ch = random_channel(rng, 3, 2)
    for kraus in (True, False):
        back = io.channel_from_doc(json.loads(json.dumps(io.channel_to_doc(ch, kraus=kraus))))
        assert choi_distance(back, ch) < 1e-13


def test_semigroup_round_trip():
    r, s = make_aut_cp_pair(2, seeds=4)
    back = io.semigroup_from_doc(json.loads(json.dumps(io.semigroup_to_doc(s))))
    assert choi_distance(back.at(0.7), s.at(0.7)) < 1e-13


def test_table_round_trip():
    table = {Fraction(0): Channel.identity(2), Fraction(1, 8): dephasing(0.3).at(Fraction(1, 8))}
    back = io.table_from_doc(json.loads(json.dumps(io.table_to_doc(table))))
    assert set(back) == set(table)
    assert choi_distance(back[Fraction(1, 8)], table[Fraction(1, 8)]) < 1e-13


def test_schema_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        io.read_json(bad)
    with pytest.raises(SchemaError):
        io.channel_from_doc({"dim": 2})


# -- command line ------------------------------------------------------------------------


@pytest.fixture
def files(tmp_path):
    f = {}
    f["x"] = _write(tmp_path / "x.json", io.channel_to_doc(from_kraus([PAULI_X])))
    f["z"] = _write(tmp_path / "z.json", io.channel_to_doc(from_kraus([PAULI_Z])))
    f["nil"] = _write(tmp_path / "nil.json", io.channel_to_doc(from_kraus([NILPOTENT])))
    amp = from_kraus([np.diag([1.0, np.sqrt(0.5)]), np.array([[0, np.sqrt(0.5)], [0, 0]])])
    f["amp"] = _write(tmp_path / "amp.json", io.channel_to_doc(amp))
    f["deph"] = _write(tmp_path / "deph.json", io.semigroup_to_doc(dephasing(0.8)))
    f["decay"] = _write(tmp_path / "decay.json", io.semigroup_to_doc(decay(0.5)))
    table = {t: dephasing(0.6).at(t) for t in [Fraction(1, 2 ** j) for j in range(13)] + [Fraction(1)]}
    f["table"] = _write(tmp_path / "table.json", io.table_to_doc(table))
    f["dir"] = tmp_path
    return f


def test_check_cp_line(capsys, files):
    code, out, _ = _run(capsys, ["check-cp", files["x"]])
    assert code == 0
    assert "CP: true, unital: true, contractive: true" in out


def test_kraus_rank(capsys, files):
    code, out, _ = _run(capsys, ["kraus", files["amp"], "--json"])
    doc = json.loads(out)
    assert code == 0 and doc["rank"] == 2 and doc["passed"]


def test_sc_witness_pauli(capsys, files):
    code, out, _ = _run(capsys, ["sc-witness", files["x"], files["z"], "--json"])
    assert code == 0
    u = io.parse_matrix(json.loads(out)["u"])
    assert abs(u[0, 0] + 1) < 1e-12


def test_sc_witness_noncommuting_exits_one(capsys, files):
    code, out, _ = _run(capsys, ["sc-witness", files["x"], files["amp"]])
    assert code == 1
    assert "failed gate: commute" in out


def test_malformed_input_exits_two(capsys, files):
    bad = files["dir"] / "broken.json"
    bad.write_text("[1, 2")
    code, _, err = _run(capsys, ["check-cp", str(bad)])
    assert code == 2 and "error" in err
    code, _, _ = _run(capsys, ["check-cp", str(files["dir"] / "missing.json")])
    assert code == 2


def test_bad_config_exits_two(capsys, files):
    cfg = _write(files["dir"] / "cfg.json", {"no_such_key": 1})
    code, _, _ = _run(capsys, ["check-cp", files["x"], "--config", cfg])
    assert code == 2


def test_config_file_applies(capsys, files):
    cfg = _write(files["dir"] / "cfg.json", {"tol_verify": 1e-6})
    code, out, _ = _run(capsys, ["check-cp", files["x"], "--config", cfg, "--json"])
    assert json.loads(out)["reports"][0]["tol"] == 1e-6


def test_nilpotent_pipeline_exits_three(capsys, files):
    code, out, _ = _run(capsys, ["pipeline", files["nil"], files["nil"], "--radius", "2", "--json"])
    assert code == 3
    doc = json.loads(out)
    assert not doc["passed"]


def test_prodsys_verify(capsys, files):
    code, out, _ = _run(capsys, ["prodsys-verify", files["deph"], files["decay"], "--level", "1", "--horizon", "2"])
    assert code == 0
    assert out.count("PASS") == 3


def test_dilate_then_verify_round_trip(capsys, files):
    out_path = str(files["dir"] / "dil.json")
    argv = ["dilate", files["deph"], files["decay"], "--level", "1", "--radius", "2", "--out", out_path, "--json"]
    code, out1, _ = _run(capsys, argv)
    assert code == 0
    first = json.loads(out1)
    code, out2, _ = _run(capsys, ["verify", out_path, "--json"])
    assert code == 0
    second = json.loads(out2)
    names = {r["name"] for r in second["reports"]}
    # verify reuses the stored factorization, so the PD gate is not rerun
    assert {r["name"] for r in first["reports"]} - {"check_pd"} <= names
    ds, r, s, level, stored = io.dilation_from_doc(io.read_json(out_path))
    assert level == 1 and stored < 1e-10


def test_json_output_is_deterministic(capsys, files):
    argv = ["prodsys-verify", files["deph"], files["decay"], "--level", "1", "--horizon", "2", "--json"]
    _, a, _ = _run(capsys, argv)
    _, b, _ = _run(capsys, argv)
    assert a == b


def test_extend_command(capsys, files):
    code, out, _ = _run(capsys, ["extend", files["table"], "--t", str(1 / 3), "--depth", "12", "--json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"]


def test_pipeline_aut_cp(capsys, tmp_path):
    r, s = make_aut_cp_pair(2, seeds=0)
    a = _write(tmp_path / "r.json", io.semigroup_to_doc(r))
    b = _write(tmp_path / "s.json", io.semigroup_to_doc(s))
    code, out, _ = _run(capsys, ["pipeline", a, b, "--level", "1", "--radius", "2", "--json"])
    assert code == 0
    assert json.loads(out)["failed_gate"] is None
