import json

import pytest

from localtime_clt import cli


def test_parse_valid_verify():
    rc = cli.parse_and_validate("verify-clt --kind single_t --t 256 --paths 10000 --seed 7".split())
    v = rc.checked["verify"]
    assert v.kind == "single_t" and v.ladder == (256.0,) and v.n_paths == 10_000
    assert v.stat_seed == 7 and v.law_seed == 8


@pytest.mark.parametrize("argv,code", [
    ([], cli.EXIT_USAGE),
    (["simulate", "--bogus", "1"], cli.EXIT_USAGE),
    (["frobnicate"], cli.EXIT_USAGE),
    (["simulate", "--t", "abc"], cli.EXIT_TYPE),
    (["simulate", "--paths", "2.5"], cli.EXIT_TYPE),
    (["simulate", "--dt", "0.01", "--bin-width", "0.05"], cli.EXIT_PRECONDITION),
    (["verify-clt", "--seed", "3", "--law-seed", "3"], cli.EXIT_PRECONDITION),
    (["verify-cross", "--kind", "single_t"], cli.EXIT_PRECONDITION),
    (["kac", "--target", "beta_moment", "--n", "5"], cli.EXIT_PRECONDITION),
    (["mean-check", "--t", "64,256"], cli.EXIT_PRECONDITION),
])
def test_exit_codes(argv, code, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)] if argv else argv) == code


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for a run\npaths = 3\nbin-width = 0.25\nseed=11\n")
    rc = cli.parse_and_validate(["simulate", "--config", str(cfg), "--paths", "5"])
    assert rc.params["paths"] == 5 and rc.params["bin_width"] == [0.25] and rc.params["seed"] == 11
    cfg.write_text("nonsense = 1\n")
    with pytest.raises(cli.CliError) as e:
        cli.parse_and_validate(["simulate", "--config", str(cfg)])
    assert e.value.code == cli.EXIT_USAGE


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    rc = cli.parse_and_validate(["simulate"])
    assert rc.output_dir == tmp_path / "env"
    rc = cli.parse_and_validate(["simulate", "--out", str(tmp_path / "flag")])
    assert rc.output_dir == tmp_path / "flag"


def test_kac_command(tmp_path, capsys):
    code = cli.main("kac --target limit_prediction_cross --m 2 --zeta 1 --zeta2 1 --out".split()
                    + [str(tmp_path)])
    assert code == 0
    assert "3.77123" in capsys.readouterr().out
    rec = json.loads((tmp_path / "kac.json").read_text())[0]
    assert abs(rec["value"] - 3.771236) < 1e-6


def test_mean_check_command(tmp_path):
    code = cli.main(["mean-check", "--t", "64,128,256", "--bin-width", "0.5", "--paths", "400",
                     "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "mean_check.json").read_text())
    assert "fitted_exponent" in rep and code in (0, 1)
    assert rep["report"]["config_digest"]


def test_simulate_and_scaling(tmp_path):
    assert cli.main(["simulate", "--paths", "2", "--plot", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "field_0001.csv").exists() and (tmp_path / "field_0000.svg").exists()
    assert cli.main(["scaling-check", "--mode", "lattice_walk", "--h", "1", "--bin-width", "0.125",
                     "--format", "csv", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scaling_check.csv").read_text().startswith("bin_width,h,t,paths")


def test_rerun_byte_identical(tmp_path):
    args = ["verify-clt", "--t", "16", "--paths", "120", "--seed", "3", "--plot"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--workers", "2", "--out", str(tmp_path / "b")])
    for name in ("samples.csv", "limit_law.csv", "histogram.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rep = json.loads((tmp_path / "a" / "verify_report.json").read_text())
    assert all(r["config_digest"] == rep["config_digest"] for r in rep["reports"])
