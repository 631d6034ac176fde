import csv
import io
import json
import math

import numpy as np
import pytest

from augustin.cli import CSV_HEADER, main

BSC_MI = math.log(2) - (0.1 * math.log(10) + 0.9 * math.log(10 / 9))


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def fields(text):
    out = {}
    for line in text.splitlines():
        k, _, v = line.partition(": ")
        out[k] = v
    return out


def table(text):
    return list(csv.reader(io.StringIO(text)))


class TestChannel:
    def test_describe(self):
        code, text = run("channel", "preset:bsc?delta=0.2")
        assert code == 0
        f = fields(text)
        assert f["inputs"] == "2" and f["outputs"] == "2" and f["cost_dimension"] == "0"

    def test_export_round_trip(self, tmp_path):
        path = tmp_path / "w.json"
        assert run("channel", "preset:random?nx=3&ny=4", "--seed", "5", "--out", str(path))[0] == 0
        doc = json.loads(path.read_text())
        assert doc["schema"] == 1 and len(doc["rows"]) == 3 and len(doc["cost"]) == 3
        a = run("capacity", "preset:random?nx=3&ny=4", "--seed", "5", "--alpha", "2")
        b = run("capacity", str(path), "--alpha", "2")
        assert a == b

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps({"schema": 1, "name": "x", "rows": [[1.0]], "colour": "red"}))
        assert run("channel", str(path))[0] == 2

    def test_wrong_schema(self, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps({"schema": 2, "name": "x", "rows": [[1.0]]}))
        assert run("channel", str(path))[0] == 2

    def test_invalid_rows(self, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps({"schema": 1, "name": "x", "rows": [[0.5, 0.6]]}))
        assert run("channel", str(path))[0] == 2

    def test_negative_cost(self, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps({"schema": 1, "name": "x", "rows": [[1.0], [1.0]], "cost": [[0.0], [-1.0]]}))
        assert run("channel", str(path))[0] == 2

    @pytest.mark.parametrize("spec", ["preset:nosuch", "preset:bsc?gamma=1", "preset:identity?n=x", "missing.json",
                                      "preset:affine?N=8"])
    def test_bad_sources(self, spec):
        assert run("channel", spec)[0] == 2

    def test_presets(self):
        for spec in ["preset:identity?n=3", "preset:affine?N=1", "preset:nonusc?N=2&neg=3",
                     "preset:gauss-disc?cells=100&inputs=11"]:
            assert run("channel", spec)[0] == 0


class TestDivergence:
    def test_identical(self):
        code, text = run("divergence", "preset:identity?n=2", "--alpha", "2", "--q", "1,0")
        assert code == 0 and float(fields(text)["divergence"]) == 0

    def test_bsc_row(self):
        code, text = run("divergence", "preset:bsc?delta=0.1", "--alpha", "1")
        assert code == 0 and fields(text)["divergence"] == "0.368064207168"
        assert float(fields(text)["divergence"]) == pytest.approx(BSC_MI, abs=1e-11)

    def test_infinite(self):
        code, text = run("divergence", "preset:identity?n=2", "--alpha", "2", "--q", "0,1")
        assert code == 0 and fields(text)["divergence"] == "inf"
        assert run("divergence", "preset:identity?n=2", "--alpha", "2", "--q", "0,1", "--finite-required")[0] == 3

    def test_tilted(self):
        code, text = run("divergence", "preset:bsc?delta=0.1", "--alpha", "2", "--tilted")
        assert code == 0
        t = [float(v) for v in fields(text)["tilted"].split()]
        assert t == pytest.approx([81 / 82, 1 / 82], abs=1e-12)

    def test_bits(self):
        _, nats = run("divergence", "preset:bsc?delta=0.1", "--alpha", "1")
        _, bits = run("divergence", "preset:bsc?delta=0.1", "--alpha", "1", "--bits")
        assert float(fields(bits)["divergence"]) == pytest.approx(float(fields(nats)["divergence"]) / math.log(2), rel=1e-11)
        assert fields(bits)["unit"] == "bits"

    def test_bad_row(self):
        assert run("divergence", "preset:bsc", "--alpha", "1", "--row", "5")[0] == 2

    def test_bad_alpha(self):
        with pytest.raises(SystemExit) as e:
            run("divergence", "preset:bsc", "--alpha", "-1")
        assert e.value.code == 2


class TestMean:
    def test_order_one(self):
        code, text = run("info", "preset:bsc?delta=0.1", "--alpha", "1")
        f = fields(text)
        assert code == 0 and f["iterations"] == "0" and f["converged"] == "true"
        assert float(f["info"]) == pytest.approx(BSC_MI, abs=1e-11)

    def test_affine_class(self):
        code, text = run("info", "preset:affine", "--alpha", "2", "--p", "cost=2")
        assert code == 0 and float(fields(text)["info"]) == pytest.approx(3.0, abs=1e-5)

    def test_seed_determinism(self):
        a = run("mean", "preset:random?nx=4&ny=5", "--alpha", "0.5", "--p", "random", "--seed", "9")
        b = run("mean", "preset:random?nx=4&ny=5", "--alpha", "0.5", "--p", "random", "--seed", "9")
        c = run("mean", "preset:random?nx=4&ny=5", "--alpha", "0.5", "--p", "random", "--seed", "10")
        assert a == b and a != c

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "m.json"
        code, text = run("mean", "preset:bsc?delta=0.2", "--alpha", "3", "--p", "0.3,0.7", "--out", str(path))
        assert code == 0
        doc = json.loads(path.read_text())
        assert doc["kind"] == "distribution" and np.isclose(sum(doc["weights"]), 1)
        printed = [float(v) for v in fields(text)["mean"].split()]
        assert printed == pytest.approx(doc["weights"], abs=1e-11)
        # a dumped mean is accepted as a reference distribution and reproduces itself
        q1 = run("divergence", "preset:bsc?delta=0.2", "--alpha", "3", "--q", str(path))
        q2 = run("divergence", "preset:bsc?delta=0.2", "--alpha", "3", "--q", "mean:0.3,0.7")
        assert q1 == q2

    def test_unconverged(self):
        argv = ["mean", "preset:random?nx=5&ny=5", "--alpha", "3", "--p", "random", "--tol", "1e-300", "--max-iter", "2"]
        assert run(*argv)[0] == 4
        assert run(*argv, "--allow-unconverged")[0] == 0

    def test_bad_distribution(self):
        assert run("info", "preset:bsc", "--alpha", "1", "--p", "0.5,0.2")[0] == 2
        assert run("info", "preset:bsc", "--alpha", "1", "--p", "1,0,0")[0] == 2
        assert run("info", "preset:bsc", "--alpha", "1", "--p", "cost=1")[0] == 2


class TestCapacity:
    def test_bsc(self):
        code, text = run("capacity", "preset:bsc?delta=0.1", "--alpha", "1")
        rows = table(text)
        assert code == 0 and tuple(rows[0]) == CSV_HEADER
        assert float(rows[1][1]) == pytest.approx(BSC_MI, abs=1e-10)
        assert rows[1][2] == "" and rows[1][3] == "true"

    def test_order_sweep_identity(self):
        code, text = run("capacity", "preset:identity?n=4", "--sweep", "order", "--grid", "2,0.5,1")
        rows = table(text)[1:]
        assert code == 0 and [float(r[0]) for r in rows] == [0.5, 1, 2]
        assert len({r[1] for r in rows}) == 1

    def test_order_sweep_monotone(self):
        _, text = run("capacity", "preset:bsc", "--sweep", "order", "--grid", "0.25:4:6")
        v = [float(r[1]) for r in table(text)[1:]]
        assert np.all(np.diff(v) >= -1e-12)

    def test_affine_rho(self):
        code, text = run("capacity", "preset:affine", "--rho", "1.5")
        row = table(text)[1]
        assert code == 0
        assert float(row[1]) == pytest.approx(2.5, abs=1e-6)
        assert float(row[2]) == pytest.approx(1.0, abs=1e-6)

    def test_lambda_and_cost_sweeps(self):
        c1, t1 = run("capacity", "preset:random?nx=4&ny=3", "--sweep", "lambda", "--grid", "0:1:3", "--alpha", "2")
        assert c1 == 0 and len(table(t1)) == 4
        c2, t2 = run("capacity", "preset:random?nx=4&ny=3", "--sweep", "cost", "--grid", "0.6,0.3")
        assert c2 == 0
        v = [float(r[1]) for r in table(t2)[1:]]
        assert v[0] <= v[1] + 1e-12

    def test_lambda_vector(self):
        code, text = run("capacity", "preset:random?nx=4&ny=3&cost=2", "--lambda", "0.1,0.2;0.3,0.4")
        rows = table(text)
        assert code == 0 and rows[1][0] == "0.1 0.2" and rows[2][2] == "0.3 0.4"

    def test_csv_out(self, tmp_path):
        path = tmp_path / "c.csv"
        code, text = run("capacity", "preset:bsc", "--out", str(path))
        assert code == 0 and text == ""
        assert path.read_text().startswith(",".join(CSV_HEADER) + "\n")

    def test_exit_codes(self):
        assert run("capacity", "preset:nonusc?N=2&neg=3", "--rho", "0")[0] == 6
        assert run("capacity", "preset:affine?N=1", "--rho", "-1")[0] == 5
        assert run("capacity", "preset:bsc", "--rho", "0.5")[0] == 2
        assert run("capacity", "preset:bsc", "--sweep", "order")[0] == 2

    def test_boundary_message(self, capsys):
        run("capacity", "preset:nonusc?N=2&neg=3", "--rho", "0")
        err = capsys.readouterr().err
        assert "boundary" in err and "ln(3/2)" in err


class TestGaussian:
    def test_scalar(self):
        code, text = run("gaussian", "--alpha", "1", "--sigma2", "1", "--rho", "1")
        f = fields(text)
        assert code == 0
        assert float(f["capacity"]) == pytest.approx(0.5 * math.log(2), abs=1e-11)
        assert float(f["theta"]) == 2 and float(f["derivative"]) == 0.25

    def test_al(self):
        code, text = run("gaussian", "--alpha", "1", "--lambda", "0.25")
        assert code == 0 and float(fields(text)["derivative"]) == pytest.approx(-1)

    def test_parallel(self):
        code, text = run("gaussian", "--alpha", "2", "--parallel", "1,1", "--rho", "2")
        assert code == 0
        assert [float(v) for v in fields(text)["allocations"].split()] == pytest.approx([1, 1], abs=1e-9)

    def test_discretize(self):
        code, text = run("gaussian", "--alpha", "1", "--rho", "1", "--discretize", "1600", "8")
        assert code == 0 and float(fields(text)["gap"]) <= 1e-3

    @pytest.mark.parametrize("argv", [["--alpha", "1"], ["--alpha", "1", "--rho", "1", "--lambda", "1"],
                                      ["--alpha", "1", "--parallel", "1,2"],
                                      ["--alpha", "1", "--lambda", "1", "--discretize", "10", "2"]])
    def test_bad_parameters(self, argv):
        assert run("gaussian", *argv)[0] == 2

    def test_nonpositive(self):
        with pytest.raises(SystemExit) as e:
            run("gaussian", "--alpha", "1", "--sigma2", "0", "--rho", "1")
        assert e.value.code == 2
