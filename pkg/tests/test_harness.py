import json
import re
import subprocess
import sys

import numpy as np
import pytest

from cfnet import cli
from cfnet.config import ConfigError, NetworkConfig
from cfnet.harness import (CSV_HEADER, ExperimentSpec, load_experiment, read_csv,
                           rows_to_csv, run_experiment)

TINY = dict(total_users_K=16, antenna_ratio_beta=4, num_subnetworks_M=2, seed=5,
            mc_realizations=2, network_realizations=1)


def _spec(kind, tmp_path, **kw):
    args = dict(K_list=[16], beta_list=[4], M_list=[2], realizations=1, mc_draws=2,
                seed=5, output=str(tmp_path))
    args.update(kw)
    return ExperimentSpec(kind, **args)


def test_minimal_sweep_rows_and_header(tmp_path):
    rows = run_experiment(_spec("error_and_timing", tmp_path), NetworkConfig(**TINY))
    assert [r.solver for r in rows] == ["mc", "svt"]
    text = (tmp_path / "fig3.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert text.splitlines()[0] == ("kind,K,beta,M,rho_dB,precoder,solver,mean_rate,"
                                    "rel_error,time_s,unstable_flag,seed")
    recs = read_csv(text)
    assert len(recs) == 2
    mc, svt = recs
    assert mc["rel_error"] is None
    # one network: mean of per-network errors is the plain relative error
    assert svt["rel_error"] == pytest.approx(abs(svt["mean_rate"] - mc["mean_rate"]) / mc["mean_rate"])
    assert all(r["time_s"] > 0 for r in recs)
    assert (tmp_path / "fig3.svg").exists()


def test_rel_error_is_mean_over_networks(tmp_path):
    from cfnet.linkops import mc_ergodic_rate
    from cfnet.sere import sere_rate
    from cfnet.topology import generate_network

    rows = run_experiment(_spec("error_and_timing", tmp_path, realizations=3),
                          NetworkConfig(**TINY), write=False)
    cfg = NetworkConfig(**TINY).replace(mc_realizations=2, network_realizations=3)
    errs = []
    for i in range(3):
        topo, prof = generate_network(cfg, i)
        mc = mc_ergodic_rate(topo, prof, cfg, network_index=i).central_rate
        errs.append(abs(sere_rate(topo, prof, cfg).central_rate - mc) / mc)
    assert rows[1].rel_error == pytest.approx(np.mean(errs), rel=1e-12)


def test_csv_round_trip_is_exact(tmp_path):
    rows = run_experiment(_spec("rate_vs_k", tmp_path, beta_list=[2, 4]), NetworkConfig(**TINY))
    for r, rec in zip(rows, read_csv(rows_to_csv(rows))):
        assert rec["mean_rate"] == r.mean_rate


def test_svg_markers_come_from_csv(tmp_path):
    run_experiment(_spec("svt_vs_snr", tmp_path, rho_list=[0, 20]), NetworkConfig(**TINY))
    recs = read_csv((tmp_path / "fig4.csv").read_text())
    svg = (tmp_path / "fig4.svg").read_text()
    assert svg.startswith("<?xml") and "<svg" in svg
    pairs = set(re.findall(r'data-x="([^"]+)" data-y="([^"]+)"', svg))
    assert pairs
    values = {float(v) for r in recs for v in (r["rho_dB"], r["mean_rate"], r["rel_error"])
              if v is not None}
    for x, y in pairs:
        assert float(x) in values and float(y) in values


def test_svt_rows_never_flagged(tmp_path):
    rows = run_experiment(_spec("svt_vs_snr", tmp_path, rho_list=[0, 40, 200]),
                          NetworkConfig(**TINY))
    svt = [r for r in rows if r.solver == "svt"]
    assert len(svt) == 3 and not any(r.unstable_flag for r in svt)
    assert all(np.isfinite(r.mean_rate) for r in svt)
    assert {r.solver for r in rows} == {"mc", "svt", "original"}
    # the untransformed iteration breaks down at extreme SNR
    assert [r for r in rows if r.solver == "original"][-1].unstable_flag


def test_zf_requires_more_antennas(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(_spec("zf_error", tmp_path, beta_list=[1]), NetworkConfig(**TINY))


def test_zf_rows(tmp_path):
    rows = run_experiment(_spec("zf_error", tmp_path), NetworkConfig(**TINY))
    assert {r.precoder for r in rows} == {"zf"}
    assert (tmp_path / "fig5.csv").exists()


def test_spec_rejects_bad_values():
    with pytest.raises(ConfigError):
        ExperimentSpec("nope")
    with pytest.raises(ConfigError):
        ExperimentSpec("rate_vs_k", K_list=[0], M_list=[1]).validate()


def test_load_experiment_unknown_key(tmp_path):
    with pytest.raises(ConfigError):
        load_experiment({"kind": "rate_vs_k", "bogus": 1})
    cfg, spec = load_experiment({**TINY, "K_list": [16]}, "fig2", seed=11)
    assert cfg.seed == 11 and spec.seed == 11 and spec.figure == "fig2"
    assert spec.mc_draws == 2 and spec.M_list == [2]


def test_reproducible_across_runs_and_threads(tmp_path):
    base = NetworkConfig(**TINY)
    a = run_experiment(_spec("rate_vs_k", tmp_path / "a", realizations=3), base, timing=False)
    b = run_experiment(_spec("rate_vs_k", tmp_path / "b", realizations=3), base, timing=False,
                       threads=3)
    ta, tb = (tmp_path / "a" / "fig2.csv").read_bytes(), (tmp_path / "b" / "fig2.csv").read_bytes()
    assert ta == tb
    assert rows_to_csv(a) == rows_to_csv(b)


# -- CLI ---------------------------------------------------------------------

@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(TINY))
    return p


def test_cli_estimate_json(config_file, capsys):
    assert cli.main(["estimate", "--method", "sere", "--config", str(config_file)]) == 0
    sere = json.loads(capsys.readouterr().out)
    assert cli.main(["estimate", "--method", "mc", "--config", str(config_file)]) == 0
    mc = json.loads(capsys.readouterr().out)
    assert sere["central_index"] == mc["central_index"]
    assert [len(r) for r in sere["per_user_rates"]] == [len(r) for r in mc["per_user_rates"]]
    assert sere["seed"] == 5 and mc["method"] == "mc"
    assert abs(sere["central_mean_rate"] - mc["central_mean_rate"]) < 0.5 * mc["central_mean_rate"]


def test_cli_seed_precedence(config_file, capsys, monkeypatch):
    monkeypatch.setenv("CFNET_SEED", "41")
    cli.main(["estimate", "--method", "sere", "--config", str(config_file)])
    assert json.loads(capsys.readouterr().out)["seed"] == 41
    cli.main(["estimate", "--method", "sere", "--config", str(config_file), "--seed", "3"])
    assert json.loads(capsys.readouterr().out)["seed"] == 3
    monkeypatch.setenv("CFNET_SEED", "abc")
    assert cli.main(["estimate", "--method", "sere", "--config", str(config_file)]) == 2


def test_cli_generate(config_file, tmp_path):
    out = tmp_path / "net.json"
    assert cli.main(["generate", "--config", str(config_file), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["total_users_K"] == 16
    assert len(doc["large_scale"]) == 2


def test_cli_sweep_and_no_timing(config_file, tmp_path):
    out = tmp_path / "res"
    assert cli.main(["sweep", "--experiment", "fig3", "--config", str(config_file),
                     "--out", str(out), "--no-timing"]) == 0
    recs = read_csv((out / "fig3.csv").read_text())
    assert all(r["time_s"] is None for r in recs)


def test_cli_validate(config_file, capsys, monkeypatch):
    assert cli.main(["validate", "--config", str(config_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(l.startswith("PASS") for l in lines)

    from cfnet import validate

    monkeypatch.setattr(validate, "run_checks",
                        lambda cfg, net: [validate.Check("forced", False, "")])
    assert cli.main(["validate", "--config", str(config_file)]) == 1


def test_cli_bad_input(tmp_path, config_file, capsys):
    missing = tmp_path / "missing.json"
    assert cli.main(["validate", "--config", str(missing)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["estimate", "--method", "mc", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"total_users_K": -1}))
    assert cli.main(["estimate", "--method", "mc", "--config", str(bad)]) == 2
    assert cli.main(["estimate", "--method", "mc", "--config", str(config_file),
                     "--threads", "0"]) == 2


def test_module_entry_point(config_file):
    proc = subprocess.run([sys.executable, "-m", "cfnet", "estimate", "--method", "sere",
                           "--config", str(config_file)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "central_mean_rate" in json.loads(proc.stdout)
