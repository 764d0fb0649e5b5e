import pytest

import conepart as cp
from conepart.cli import main, parse_body, parse_measure
from conepart.report import body_lines


def run(args):
    return main(args)


def read_body(path):
    return body_lines(open(path).read())


def kv(lines):
    out = {}
    for ln in lines:
        if ": " in ln:
            key, val = ln.split(": ", 1)
            out.setdefault(key, val)
    return out


def test_parse_measure_forms():
    ball = parse_measure("ball:0,0,0:1", 3)
    assert isinstance(ball, cp.UniformBall) and ball.radius == 1.0
    gmm = parse_measure("gmm:0.5,0.5:0,0,0,1,1,1:0.1,0.1,0.1,0.2,0.2,0.2", 3)
    assert isinstance(gmm, cp.GaussianMixture)
    assert gmm.covs.shape == (2, 3, 3)
    with pytest.raises(cp.ConfigError):
        parse_measure("ball:0,0:1", 3)
    with pytest.raises(cp.ConfigError):
        parse_measure("blob:1", 3)


def test_parse_body_forms():
    ell = parse_body("ellipsoid:0,0,0:1,1.3,0.7", 3)
    assert isinstance(ell, cp.Ellipsoid)
    lq = parse_body("lq:0,0,0:1,1,1:4", 3)
    assert isinstance(lq, cp.LqBall) and lq.exponent == 4
    with pytest.raises(cp.ConfigError):
        parse_body("ellipsoid:0,0,0:1,2", 3)


def test_validate_fan_degenerate_exit_1(capfd):
    assert run(["validate-fan", "--p", "3", "--k", "1", "--fan-v", "1,1,1"]) == 1
    assert "distinct" in capfd.readouterr().err


def test_validate_fan_valid_exit_0(tmp_path):
    out = tmp_path / "vf.txt"
    rc = run(["validate-fan", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
              "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    assert vals["status"] == "valid"
    assert vals["detail.rank_certificate"] == "true"
    fracs = [float(v) for k, v in vals.items() if k.startswith("fraction.")]
    assert len(fracs) == 6
    assert sum(fracs) == pytest.approx(1.0, abs=1e-12)


def test_masses_identity_symmetric(tmp_path):
    out = tmp_path / "m.txt"
    rc = run(["masses", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
              "--measure", "ball:0,0,0:1", "--n", "60000", "--seed", "3",
              "--identity", "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    for g in range(3):
        for sign in ("plus", "minus"):
            assert float(vals[f"mass.{sign}.{g}"]) == pytest.approx(1 / 6, abs=0.01)
    assert float(vals["mass.total"]) == pytest.approx(1.0, abs=1e-11)


def test_masses_explicit_motion_matches_identity(tmp_path):
    base = ["masses", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
            "--measure", "ball:0,0,0:1", "--n", "20000", "--seed", "3"]
    out_id = tmp_path / "id.txt"
    out_ex = tmp_path / "ex.txt"
    assert run(base + ["--identity", "--out", str(out_id)]) == 0
    assert run(base + ["--rotation", "1,0,0,0,1,0,0,0,1",
                       "--translation", "0,0,0", "--out", str(out_ex)]) == 0
    id_masses = {k: v for k, v in kv(read_body(str(out_id))).items()
                 if k.startswith("mass.")}
    ex_masses = {k: v for k, v in kv(read_body(str(out_ex))).items()
                 if k.startswith("mass.")}
    assert id_masses == ex_masses


def test_masses_non_orthogonal_exit_1(capfd):
    rc = run(["masses", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
              "--measure", "ball:0,0,0:1", "--rotation",
              "1,0.5,0,0,1,0,0,0,1", "--translation", "0,0,0"])
    assert rc == 1
    assert "rotation" in capfd.readouterr().err


def test_masses_report_deterministic(tmp_path):
    args = ["masses", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
            "--measure", "ball:0,0,0:1", "--n", "20000", "--seed", "11",
            "--identity"]
    out1, out2 = tmp_path / "r1.txt", tmp_path / "r2.txt"
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert read_body(str(out1)) == read_body(str(out2))


def test_equipartition_end_to_end(tmp_path):
    out = tmp_path / "eq.txt"
    rc = run(["equipartition", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
              "--measure", "ball:0,0,0:1", "--n", "12000", "--seed", "7",
              "--multistarts", "2", "--threads", "2", "--oracle-n", "150000",
              "--tol", "0.01", "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    assert vals["status"] == "certified"
    assert vals["certificate.passed"] == "true"
    assert float(vals["residual.norm"]) <= 1e-6
    for g in range(3):
        for sign in ("plus", "minus"):
            assert float(vals[f"oracle.mass.{sign}.{g}"]) == pytest.approx(1 / 6, abs=0.01)
    # effective config embedded, flags included
    assert vals["config.solve.n"] == "12000"
    assert vals["config.certify.tol"] == "0.01"


def test_equipartition_report_deterministic(tmp_path):
    args = ["equipartition", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
            "--measure", "ball:0,0,0:1", "--n", "6000", "--seed", "5",
            "--multistarts", "1", "--threads", "1", "--oracle-n", "100000",
            "--tol", "0.02"]
    out1, out2 = tmp_path / "e1.txt", tmp_path / "e2.txt"
    rc1 = run(args + ["--out", str(out1)])
    rc2 = run(args + ["--out", str(out2)])
    assert rc1 == rc2
    assert read_body(str(out1)) == read_body(str(out2))


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "group.p = 3\n"
        "group.k = 1\n"
        "fan.v = 1,0,0\n"
        "measure.spec = ball:0,0,0:1\n"
        "solve.n = 5000\n"
        "solve.seed = 2\n"
        "validate.n = 10000\n"
    )
    out = tmp_path / "vf.txt"
    rc = run(["validate-fan", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    assert vals["config.solve.n"] == "5000"
    # flags win over config
    out2 = tmp_path / "vf2.txt"
    rc = run(["validate-fan", "--config", str(cfg), "--fan-v", "1,0.2,-0.2",
              "--out", str(out2)])
    assert rc == 0
    assert kv(read_body(str(out2)))["config.fan.v"] == "1,0.2,-0.2"


def test_malformed_config_exit_1(tmp_path, capfd):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("group.p = 3\nthis line has no equals sign\n")
    rc = run(["validate-fan", "--config", str(cfg)])
    assert rc == 1
    assert "bad.cfg:2" in capfd.readouterr().err


def test_missing_required_exit_1(capfd):
    rc = run(["equipartition", "--p", "3", "--k", "1",
              "--measure", "ball:0,0,0:1"])
    assert rc == 1
    assert "fan.v" in capfd.readouterr().err


def test_usage_error_exit_1():
    with pytest.raises(SystemExit) as exc:
        run(["equipartition", "--p", "not-a-number"])
    assert exc.value.code == 1


def test_inscribe_exit_codes(tmp_path):
    out = tmp_path / "ins.txt"
    rc = run(["inscribe", "--p", "3", "--k", "1",
              "--body", "ellipsoid:0,0,0:1,1.3,0.7", "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    assert vals["status"] == "inscribed"
    assert float(vals["max.gauge.error"]) <= 1e-6
    # unreachable tolerance: completed but not converged
    rc = run(["inscribe", "--p", "3", "--k", "1",
              "--body", "ellipsoid:0,0,0:1,1.3,0.7", "--tol", "1e-16"])
    assert rc == 2


def test_sample_round_trip(tmp_path):
    csv = tmp_path / "cloud.csv"
    rc = run(["sample", "--measure", "gmm:1:0.5,0.5,0.5:0.2,0.2,0.2",
              "--dim", "3", "--n", "500", "--seed", "4", "--out", str(csv)])
    assert rc == 0
    pts, w = cp.load_point_cloud_csv(str(csv), d=3)
    assert pts.shape == (500, 3)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    # the emitted cloud is usable as a measure spec
    out = tmp_path / "m.txt"
    rc = run(["masses", "--p", "3", "--k", "1", "--fan-v", "1,0,0",
              "--measure", f"cloud:{csv}", "--identity", "--out", str(out)])
    assert rc == 0
    vals = kv(read_body(str(out)))
    assert float(vals["mass.total"]) == pytest.approx(1.0, abs=1e-11)
