import json
import subprocess
import sys

import numpy as np
import pytest

from zetacascade.cli import main, parse_phi, round12, CliError


def run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "zetacascade.cli", *argv], capture_output=True, text=True
    )
    return proc


def test_sieve_stats_output(tmp_path):
    out = tmp_path / "sieve.csv"
    code = main(["sieve-stats", "--limit", "100", "--output", str(out)])
    assert code == 0
    text = out.read_text()
    assert "# command = sieve-stats" in text
    assert "100,25,97" in text


def test_field_eval_csv_columns(tmp_path):
    out = tmp_path / "field.csv"
    code = main([
        "field-eval", "--T", "1e4", "--alphas", "0.5,1.0",
        "--n-grid", "8", "--seed", "3", "--output", str(out),
    ])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "h,alpha,value"
    assert len(lines) == 1 + 16  # two alphas x 8 grid points


def test_two_overlap_determinism_bytes(tmp_path):
    args = ["two-overlap", "--T", "1e4", "--beta", "4", "--seed", "7",
            "--n-disorder", "4", "--n-draws", "200"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_free_energy_curve_has_limit_2_at_u0(tmp_path):
    out = tmp_path / "curve.csv"
    code = main([
        "free-energy-curve", "--beta", "3", "--alpha", "0.5", "--T", "1e4",
        "--n-disorder", "2", "--u-grid", "default", "--output", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")]
    header = rows[0]
    u_col = header.index("u")
    limit_col = header.index("f_limit")
    at_zero = [r for r in rows[1:] if float(r[u_col]) == 0.0]
    assert len(at_zero) == 1
    assert float(at_zero[0][limit_col]) == 2.0


def test_pd_moments_near_closed_form(tmp_path):
    out = tmp_path / "pd.json"
    code = main([
        "pd-moments", "--beta", "4", "--m", "3", "--n-samples", "2000",
        "--format", "json", "--output", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    row = payload["results"][0]
    assert row["closed_form"] == 0.375
    assert abs(row["estimate"] - 0.375) < 0.02
    assert payload["config"]["command"] == "pd-moments"


def test_pd_sample_rows(tmp_path):
    out = tmp_path / "pd.csv"
    code = main(["pd-sample", "--theta", "0.5", "--seed", "2", "--max-weights", "5",
                 "--output", str(out)])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "theta,rank,weight"
    weights = [float(l.split(",")[2]) for l in lines[1:]]
    assert len(weights) == 5
    assert weights == sorted(weights, reverse=True)


def test_gg_pd_runs(tmp_path):
    out = tmp_path / "gg.csv"
    code = main([
        "gg-pd", "--beta", "4", "--s", "2", "--k", "1", "--psi", "0,1",
        "--phi", "pair-equal", "--n-samples", "500", "--output", str(out),
    ])
    assert code == 0
    assert "gg_pd_residual_s2_k1" in out.read_text()


def test_unknown_subcommand_fails():
    proc = run_cli("does-not-exist")
    assert proc.returncode != 0


def test_invalid_parameter_is_diagnosed():
    proc = run_cli("pd-moments", "--theta", "1.5", "--m", "2")
    assert proc.returncode == 2
    assert "error:" in proc.stderr


def test_theta_beta_exclusivity_diagnostic():
    proc = run_cli("pd-moments", "--m", "2")
    assert proc.returncode == 2
    assert "theta" in proc.stderr


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n-disorder = 3\nn_draws = 150\nbeta = 4.0\n")
    out = tmp_path / "out.csv"
    code = main([
        "two-overlap", "--T", "1e4", "--config", str(cfg),
        "--n-draws", "100", "--output", str(out),
    ])
    assert code == 0
    text = out.read_text()
    assert "# n_disorder = 3" in text  # from config file
    assert "# n_draws = 100" in text  # explicit flag wins


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_setting = 1\n")
    code = main(["two-overlap", "--T", "1e4", "--config", str(cfg)])
    assert code == 2


def test_output_embeds_full_config(tmp_path):
    out = tmp_path / "o.csv"
    main(["two-overlap", "--T", "1e4", "--seed", "9", "--n-disorder", "2",
          "--n-draws", "50", "--output", str(out)])
    text = out.read_text()
    for key in ("T", "beta", "epsilon", "seed", "n_disorder", "n_draws", "command", "version"):
        assert f"# {key} = " in text


def test_prime_cache_flag(tmp_path):
    cache = tmp_path / "primes.bin"
    main(["sieve-stats", "--limit", "1e4", "--prime-cache", str(cache),
          "--output", str(tmp_path / "s.csv")])
    assert cache.exists()
    out = tmp_path / "f.csv"
    code = main(["field-eval", "--T", "1e3", "--n-grid", "4", "--prime-cache",
                 str(cache), "--output", str(out)])
    assert code == 0


def test_parse_phi_names():
    assert parse_phi("one", 2).table == (1.0, 1.0)
    assert parse_phi("all-equal", 2).table == (0.0, 1.0)
    assert parse_phi("pair-equal", 3).s == 3
    phi = parse_phi("high-band", 2)
    assert phi.kind.startswith("callable")
    with pytest.raises(CliError):
        parse_phi("nope", 2)


def test_round12():
    assert round12(0.12345678901234567) == 0.123456789012
    assert round12({"a": [1.0 / 3.0]}) == {"a": [0.333333333333]}


def test_json_format(tmp_path):
    out = tmp_path / "o.json"
    main(["sieve-stats", "--limit", "10", "--format", "json", "--output", str(out)])
    payload = json.loads(out.read_text())
    assert payload["results"][0]["count"] == 4
