import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from qlang import circuit as C
from qlang import cli, qnum


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.dispatch([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(argv):
    code, out, _ = run(list(argv) + ["--json"])
    obj = json.loads(out)
    jsonschema.validate(obj, cli.load_schema(obj["command"]))
    assert obj["status"] == code
    return code, obj


@pytest.fixture
def d(data_dir):
    return data_dir


@pytest.fixture
def mats(tmp_path, rng):
    def write(name, m):
        p = tmp_path / name
        p.write_text(qnum.format_matrix_text(m))
        return p
    return write


@pytest.fixture
def circs(tmp_path):
    def write(name, c):
        p = tmp_path / name
        p.write_text(C.dumps(c))
        return p
    return write


class TestConfig:
    def test_defaults(self):
        cfg = cli.RunConfig()
        assert cfg.as_json() == {"seed": 0, "shots": 1024, "max_qubits": qnum.MAX_QUBITS, "tolerance": 1e-9}

    @pytest.mark.parametrize("kw", [{"seed": -1}, {"tolerance": 0.0}, {"shots": 0}, {"max_qubits": 0}])
    def test_invalid(self, kw):
        with pytest.raises(cli.UsageError):
            cli.RunConfig(**kw)

    def test_rng_is_seeded(self):
        a = cli.RunConfig(seed=5).rng().random(4)
        b = cli.RunConfig(seed=5).rng().random(4)
        assert np.array_equal(a, b)


class TestReport:
    def test_empty_circuit(self):
        r = cli.circuit_report(C.Circuit.identity(0))
        assert r == {"gates": {}, "total_gates": 0, "qubits": 0, "ancillas": 0, "init": 0,
                     "measurements": 0, "discards": 0}

    def test_stable_order(self):
        r = cli.emit_report({"gates": {"X": 1, "CNOT": 2}, "total_gates": 3, "qubits": 2}, errors={"max": 0.0})
        assert list(r)[:7] == ["gates", "total_gates", "qubits", "ancillas", "init", "measurements", "discards"]
        assert list(r["gates"]) == ["CNOT", "X"] and r["total_gates"] == 3 and "errors" in r

    def test_schemas_exist(self):
        for cmd in ["qlc check", "qlc run", "oracle synth", "oracle verify", "usynth householder",
                    "usynth ion", "usynth bound", "pathsum verify", "iso check", "iso run", "iso matrix"]:
            s = cli.load_schema(cmd)
            jsonschema.Draft202012Validator.check_schema(s)


class TestQlc:
    def test_check(self, d):
        code, obj = run_json(["qlc", "check", d / "coin.q"])
        assert code == 0 and obj["type"] == "bit"

    def test_check_rejects(self, tmp_path):
        p = tmp_path / "dup.q"
        p.write_text("fun x -> CNOT (x, x)")
        code, obj = run_json(["qlc", "check", p])
        assert code == 1 and obj["ok"] is False

    def test_parse_error_position(self, tmp_path):
        p = tmp_path / "bad.q"
        p.write_text("let x = \n  in x")
        code, out, err = run(["qlc", "check", p])
        assert code == 1 and f"{p}:2:" in err

    def test_run_coin(self, d):
        code, obj = run_json(["qlc", "run", d / "coin.q", "--seed", 7, "--shots", 10000])
        assert code == 0 and obj["tt"] + obj["ff"] == 10000
        assert abs(obj["tt"] / 10000 - 0.5) <= 0.015

    def test_run_boxed(self, d):
        code, obj = run_json(["qlc", "run", d / "boxed.q", "--shots", 200])
        assert code == 0 and sum(obj["counts"].values()) == 200

    def test_human_output(self, d):
        code, out, _ = run(["qlc", "check", d / "coin.q"])
        assert code == 0 and "bit" in out

    def test_missing_file(self, tmp_path):
        code, _, _ = run(["qlc", "check", tmp_path / "nope.q"])
        assert code == 2


class TestOracle:
    def test_synth_and_verify(self, d, tmp_path):
        out = tmp_path / "or.json"
        code, obj = run_json(["oracle", "synth", d / "or.b", "--inputs", "x,y", "-o", out])
        assert code == 0 and obj["inputs"] == ["x", "y"]
        c = C.from_json_obj(obj["circuit"])
        assert C.to_json_obj(c) == obj["circuit"]
        code, obj = run_json(["oracle", "verify", out, d / "or.b", "--inputs", "x,y"])
        assert code == 0 and obj["ok"] and obj["checked"] == 8

    def test_verify_counterexample(self, d, tmp_path):
        out = tmp_path / "and.json"
        run_json(["oracle", "synth", d / "and.b", "--inputs", "x,y", "-o", out])
        code, obj = run_json(["oracle", "verify", out, d / "or.b", "--inputs", "x,y"])
        assert code == 1 and not obj["ok"] and obj["counterexample"] is not None

    def test_landauer_report(self, tmp_path):
        p = tmp_path / "c7.b"
        p.write_text("let (a, b) = (x, y) in if a then (not b, ff) else (b, tt)")
        code, obj = run_json(["oracle", "synth", p, "--inputs", "x,y", "--landauer"])
        assert code == 0 and obj["kind"] == "landauer"


class TestUsynth:
    def test_householder(self, mats, rng):
        code, obj = run_json(["usynth", "householder", mats("u.mat", qnum.random_unitary(4, rng))])
        assert code == 0 and obj["error"] <= 1e-6 and obj["cnot"] == obj["report"]["gates"].get("CNOT", 0)

    def test_householder_bad_matrix(self, tmp_path):
        p = tmp_path / "bad.mat"
        p.write_text("dim 2\n1 1\n1 1\n")
        code, obj = run_json(["usynth", "householder", p])
        assert code in (1, 2) and "error" in obj

    def test_ion_identity(self, mats):
        code, obj = run_json(["usynth", "ion", mats("i.mat", np.eye(4)), "--layers", 1, "--restarts", 1])
        assert code == 0 and obj["error"] <= 1e-8

    def test_bound(self):
        code, out, _ = run(["usynth", "bound", "--n", 4])
        assert code == 0 and out.strip() == "3"

    def test_bound_invalid(self):
        code, obj = run_json(["usynth", "bound", "--n", 0])
        assert code == 2


class TestPathsum:
    def test_equiv(self, circs):
        hh = C.Circuit.from_gates(1, [C.gate("H", 0), C.gate("H", 0)])
        code, obj = run_json(["pathsum", "verify", circs("a.json", hh), circs("b.json", C.Circuit.identity(1))])
        assert code == 0 and obj["verdict"] == "EQUIV"

    def test_distinct(self, circs):
        a = C.Circuit.from_gates(2, [C.gate("CNOT", 0, 1)])
        code, obj = run_json(["pathsum", "verify", circs("a.json", a), circs("b.json", C.Circuit.identity(2))])
        assert code == 1 and obj["verdict"] == "DISTINCT" and obj["witness"][0] == 1

    def test_unsupported(self, circs):
        a = C.Circuit.from_gates(1, [C.gate("RY", 0, params=[0.3])])
        code, obj = run_json(["pathsum", "verify", circs("a.json", a), circs("b.json", a)])
        assert code == 1 and obj["verdict"] == "UNSUPPORTED" and obj["reason"]


class TestIso:
    def test_check(self, d):
        code, obj = run_json(["iso", "check", d / "circuits.iso"])
        assert code == 0 and [i["name"] for i in obj["isos"]] == ["ch", "notall", "main"]

    def test_check_rejects(self, d):
        code, obj = run_json(["iso", "check", d / "bad.iso"])
        assert code == 1 and all(not i["ok"] for i in obj["isos"])

    def test_run(self, d):
        code, obj = run_json(["iso", "run", d / "circuits.iso", "--iso", "notall", "--value", "ff :: tt :: nil"])
        assert code == 0 and obj["output"] == "tt :: ff :: nil"

    def test_run_quantum(self, d):
        code, obj = run_json(["iso", "run", d / "circuits.iso", "--iso", "had", "--value", "ff"])
        assert code == 0 and abs(obj["norm"] - 1) <= 1e-12 and len(obj["terms"]) == 2

    def test_matrix_text(self, d):
        code, out, _ = run(["iso", "matrix", d / "circuits.iso", "--iso", "ch"])
        assert code == 0
        m = qnum.parse_matrix_text(out)
        expect = np.eye(4, dtype=complex)
        expect[2:, 2:] = qnum.gate_matrix("H")
        assert np.allclose(m, expect)

    def test_parse_error(self, tmp_path):
        p = tmp_path / "x.iso"
        p.write_text("iso f : bool <-> bool {\n  | ff <-> \n}")
        code, out, err = run(["iso", "check", p])
        assert code == 1 and f"{p}:3:" in err


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["qlc"], ["nope", "x"], ["usynth", "bound"],
                                      ["qlc", "run", "x", "--shots", "zero"]])
    def test_usage_errors(self, argv):
        assert run(argv)[0] == 2

    def test_bad_seed(self, d):
        assert run(["qlc", "run", d / "coin.q", "--seed", "-3"])[0] == 2


class TestDeterminism:
    def test_byte_identical(self, d, mats, rng):
        u = mats("u.mat", qnum.random_unitary(4, rng))
        for argv in (["qlc", "run", d / "coin.q", "--seed", 11, "--shots", 500],
                     ["usynth", "ion", u, "--layers", 2, "--seed", 3, "--budget", 200, "--restarts", 2],
                     ["oracle", "synth", d / "or.b", "--inputs", "x,y"],
                     ["iso", "matrix", d / "circuits.iso", "--json"]):
            outs = {run(argv + ["--json"])[1] for _ in range(3)}
            assert len(outs) == 1

    def test_seed_changes_samples(self, d):
        a = run(["qlc", "run", d / "coin.q", "--seed", 1, "--json"])[1]
        b = run(["qlc", "run", d / "coin.q", "--seed", 2, "--json"])[1]
        assert a != b

    def test_module_entry_point(self, d):
        p = subprocess.run([sys.executable, "-m", "qlang", "usynth", "bound", "--n", "3"],
                           capture_output=True, text=True)
        assert p.returncode == 0 and p.stdout.strip() == "2"
