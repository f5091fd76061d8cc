import math

import numpy as np
import pytest

from spinrod.cli import EXIT_CONFIG, EXIT_NEWTON, EXIT_NOT_STEADY, EXIT_OK, main
from spinrod.runner import (ConfigError, RunConfig, config_from_mapping, load_config, parse_config_text,
                            restrict, run_converge, run_simulate, run_steady, sweep)
from spinrod.verify import mass_balance

SMALL = dict(setup="b", dim=2, Re=1.0, Rb=1.0, ds=0.1, tEnd=0.1)


def test_parse_config_text():
    text = "# comment\nsetup = a\nRe = 2 # trailing\n\nRb = inf\n"
    assert parse_config_text(text) == {"setup": "a", "Re": "2", "Rb": "inf"}
    with pytest.raises(ConfigError):
        parse_config_text("just words")


def test_config_aliases_and_inf():
    cfg = config_from_mapping({"setup": "a", "dsigma": "0.05", "Rb": "inf", "Fr": "2", "stages": "1"})
    p = cfg.params()
    assert cfg.ds == 0.05 and cfg.radauStages == 1
    assert p.RbInv == 0.0 and p.FrInv == 0.5 and p.lagrangian


@pytest.mark.parametrize("bad", [{"dt": "-1"}, {"tEnd": "0"}, {"radauStages": "3"}, {"Re": "0"},
                                 {"unknown": "1"}, {"ds": "0.3"}, {"Re": "abc"}])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        config_from_mapping({**{k: str(v) for k, v in SMALL.items()}, **bad})


def test_default_time_steps():
    assert RunConfig(setup="a", ds=0.02).time_step() == 0.02
    assert RunConfig(setup="b", ds=0.02).time_step(u_max=2.0) == pytest.approx(0.9 * 0.01)


def test_simulate_records_and_invariants():
    rec = run_simulate(RunConfig(**SMALL, snapshotEvery=1))
    times = [t for t, _ in rec.snapshots]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert times[-1] == pytest.approx(0.1)
    assert mass_balance(rec) <= rec.config.newtonTol * rec.steps
    assert max(rec.constraint_history) <= rec.config.newtonTol


def test_lagrangian_simulation_grows():
    rec = run_simulate(RunConfig(setup="a", dim=2, Re=1, Rb=1, ds=0.05, tEnd=0.2, snapshotEvery=1))
    counts = [len(f) for _, f in rec.snapshots]
    assert counts == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        mass_balance(rec)


def test_determinism(tmp_path):
    a = run_simulate(RunConfig(**SMALL, outputPath=str(tmp_path / "a")))
    b = run_simulate(RunConfig(**SMALL, outputPath=str(tmp_path / "b")))
    for name in ("snapshot_00001.csv", "summary.txt", "snapshots.csv"):
        ta = (tmp_path / "a" / name).read_text()
        tb = (tmp_path / "b" / name).read_text().replace(str(tmp_path / "b"), str(tmp_path / "a"))
        assert ta == tb
    np.testing.assert_array_equal(a.final, b.final)


def test_csv_schema(tmp_path):
    run_simulate(RunConfig(**{**SMALL, "dim": 3}, outputPath=str(tmp_path)))
    lines = (tmp_path / "snapshot_00001.csv").read_text().splitlines()
    assert lines[0] == ("cell_index,s_center,n1,n2,u,r1,r2,r3,q0,q1,q2,q3,k1,k2,k3,A,v1,v2,v3,w1,w2,w3")
    assert len(lines) == 11
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == pytest.approx(0.05)
    summary = (tmp_path / "summary.txt").read_text()
    assert "Re = 1.0" in summary and "mass_drift" in summary


def test_steady_uniform_free_jet_is_immediate():
    rec = run_steady(RunConfig(setup="b", Re=1.0, ds=0.1, tEnd=1.0))
    assert rec.reached_threshold and rec.steps == 0


def test_steady_zero_threshold_runs_to_end():
    rec = run_steady(RunConfig(**SMALL), threshold=0.0)
    assert not rec.reached_threshold
    assert rec.t_final == pytest.approx(0.1)


def test_restrict_block_average():
    fine = np.arange(8.0).reshape(4, 2)
    np.testing.assert_allclose(restrict(fine, 2), [[1, 2], [5, 6]])
    with pytest.raises(ValueError):
        restrict(fine, 3)


def test_converge_requires_levels():
    with pytest.raises(ConfigError):
        run_converge(RunConfig(**SMALL), levels=2)


def test_converge_space_mode_runs():
    t = run_converge(RunConfig(setup="b", Re=1, Rb=1, ds=0.25, dt=0.05, tEnd=0.2), "space", levels=3,
                     ref_factor=2)
    assert len(t.steps) == 3 and all(e > 0 for e in t.err_diff)


def test_sweep_preserves_order():
    cfgs = [RunConfig(**{**SMALL, "Re": re}) for re in (1.0, 2.0)]
    recs = sweep(cfgs, workers=2)
    assert [r.config.Re for r in recs] == [1.0, 2.0]


def _write_cfg(tmp_path, **kw):
    body = "".join(f"{k} = {v}\n" for k, v in {**SMALL, **kw}.items())
    path = tmp_path / "run.cfg"
    path.write_text(body)
    return str(path)


def test_cli_exit_codes(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    assert main(["simulate", "--config", cfg]) == EXIT_OK
    assert main(["simulate", "--config", cfg, "--Re", "-1"]) == EXIT_CONFIG
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["steady", "--config", cfg, "--threshold", "0"]) == EXIT_NOT_STEADY
    assert main(["simulate", "--config", cfg, "--newtonMaxIter", "1", "--dt", "0.1"]) == EXIT_NEWTON
    err = capsys.readouterr().err
    assert "residual trace" in err


def test_cli_converge_and_sweep(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, dt=0.05, tEnd=0.2)
    assert main(["converge", "--config", cfg, "--levels", "3", f"--outputPath={tmp_path / 'conv'}"]) == EXIT_OK
    assert (tmp_path / "conv" / "convergence_time.csv").read_text().startswith("step,err_diff")
    assert main(["sweep", "--config", cfg, "--config", cfg]) == EXIT_OK
    assert capsys.readouterr().out.count("# run") == 2


def test_load_config_overrides(tmp_path):
    cfg = load_config(_write_cfg(tmp_path), {"Re": "5"})
    assert cfg.Re == 5.0 and math.isclose(cfg.params().RbInv, 1.0)
