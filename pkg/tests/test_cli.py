import csv
import io
import math

import numpy as np
import pytest

from conftest import PRESET_GRID, golden_path
from lambdakerr import cli, parse_config, preset, sweep
from lambdakerr.blocks import with_upsilon
from lambdakerr.observables import atomic_eigenvalues, inversion, von_neumann_entropy
from lambdakerr.oracle import oracle_grid_amplitudes
from lambdakerr.state import atomic_density, state_from_amplitudes

RNG = np.random.default_rng(42)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_format_value():
    assert sweep.format_value(1.0) == "1.00000000"
    assert sweep.format_value(0.0) == "0.00000000"
    assert sweep.format_value(-1e-20) == "-0.0000000000000000000100000000"
    assert sweep.format_value(-0.0) == "0.00000000"
    assert sweep.format_value(123456.789012) == "123456.789"
    assert sweep.format_value(math.pi) == "3.14159265"


def test_simulate_inversion_only(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tau_steps = 3\nmeasures = inversion\n", encoding="utf-8")
    out = tmp_path / "out.csv"
    code, _, _ = run(["simulate", "--config", str(cfg), "--preset", "fig-a", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_bytes().decode()
    assert "\r" not in text
    rows = read_csv(text)
    assert list(rows[0]) == ["tau", "W"] and len(rows) == 3
    assert float(rows[0]["W"]) == pytest.approx(1.0, abs=1e-8)


def test_simulate_header_order(capsys):
    cfg = parse_config("tau_steps = 2\nmeasures = quadrature, inversion", preset("fig-a"))
    assert sweep.header(cfg) == ["tau", "W", "E_x", "E_p"]


def test_first_row_is_pure(preset_sweeps):
    row = preset_sweeps[("fig-a", 1)]["rows"][0]
    assert row["S_vn"] <= 1e-8 and row["S_lin"] <= 1e-8 and row["W"] == pytest.approx(1.0, abs=1e-8)


def test_output_independent_of_threads():
    cfg = parse_config("tau_steps = 41\ntau_max = 10", preset("fig-b", 2))
    assert sweep.simulate(cfg, workers=1) == sweep.simulate(cfg, workers=4)


@pytest.mark.parametrize("name, gamma", PRESET_GRID)
def test_golden_files_reproduce(preset_sweeps, name, gamma):
    assert preset_sweeps[(name, gamma)]["csv"] == golden_path(name, gamma).read_text(encoding="utf-8")


@pytest.mark.parametrize("name, gamma", PRESET_GRID)
def test_golden_agrees_with_oracle_path(name, gamma):
    cfg = preset(name, gamma)
    eff, spec, trunc = cfg.effective(), cfg.coherent(), cfg.truncation()
    rows = read_csv(golden_path(name, gamma).read_text(encoding="utf-8"))
    idx = np.sort(RNG.choice(len(rows), size=6, replace=False))
    taus = np.array([0.0] + [float(rows[i]["tau"]) for i in idx])
    a, b, c = oracle_grid_amplitudes(eff, trunc, taus)
    for k, i in enumerate(idx, start=1):
        rho = atomic_density(state_from_amplitudes(spec, trunc, taus[k], a[..., k], b[..., k], c[..., k]))
        assert float(rows[i]["W"]) == pytest.approx(inversion(rho), abs=1e-8)
        assert float(rows[i]["S_vn"]) == pytest.approx(von_neumann_entropy(atomic_eigenvalues(rho)), abs=1e-8)


def test_snapshot_vacuum_phase(tmp_path, capsys):
    cfg = tmp_path / "vac.cfg"
    cfg.write_text("alpha1_sq = 0\nalpha2_sq = 0\nphase_points = 16\n", encoding="utf-8")
    code, out, _ = run(["snapshot", "--config", str(cfg), "--tau", "0", "--kind", "phase"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 256
    # nine significant digits bound the CSV rounding at 5e-9 relative
    for r in rows:
        assert float(r["P"]) == pytest.approx(1 / (4 * math.pi**2), rel=5e-9)
    _, raw = sweep.snapshot_rows(parse_config(cfg.read_text()), 0.0, "phase")
    assert max(abs(p - 1 / (4 * math.pi**2)) for _, _, p in raw) <= 1e-12


def test_snapshot_position_mean(capsys):
    code, out, _ = run(["snapshot", "--preset", "fig-a", "--tau", "0", "--kind", "position"], capsys)
    assert code == 0
    rows = read_csv(out)
    u = np.array([float(r["u"]) for r in rows])
    p = np.array([float(r["P"]) for r in rows])
    du = (u[-1] - u[0]) / (u.size - 1)
    mass = np.trapezoid(p, dx=du)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert np.trapezoid(u * p, dx=du) / mass == pytest.approx(math.sqrt(2) * math.sqrt(10), abs=1e-6)


@pytest.mark.parametrize("kind", ["phase", "position", "momentum"])
def test_snapshot_mass_check_passes(kind):
    cfg = preset("fig-d", 2)
    cols, rows = sweep.snapshot_rows(cfg, 9.0, kind)
    assert cols[-1] == "P" and len(list(rows)) > 0


def test_snapshot_negative_tau(capsys):
    code, _, err = run(["snapshot", "--preset", "fig-a", "--tau", "-1", "--kind", "phase"], capsys)
    assert code == 1 and "tau" in err


@pytest.mark.parametrize("name", ["fig-a", "fig-d"])
def test_verify_passes(name, capsys):
    code, out, _ = run(["verify", "--preset", name], capsys)
    assert code == 0
    assert "agree" in out


def test_verify_canary_fails(monkeypatch, capsys):
    def flip(sol):
        ups = np.array(sol.upsilon, copy=True)
        ups[..., 0] = -ups[..., 0]
        return with_upsilon(sol, ups)

    monkeypatch.setattr(sweep, "SOLUTION_HOOK", flip)
    code, out, err = run(["verify", "--preset", "fig-a"], capsys)
    assert code == 3
    assert "first failing block n1=0, n2=0" in err
    assert "FAIL" in out


def test_preset_print(capsys):
    code, out, _ = run(["preset", "--name", "fig-d", "--gamma", "2", "--print"], capsys)
    assert code == 0
    assert "chi_over_g = 0.4" in out and "delta3_over_g = 15.0" in out and "gamma = 2.0" in out


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma = 1\nspeed = 3\n", encoding="utf-8")
    code, _, err = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 1 and "line 2" in err


def test_bad_preset_gamma_exit_code(capsys):
    code, _, _ = run(["simulate", "--preset", "fig-a", "--gamma", "3"], capsys)
    assert code == 1


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def broken(state, cfg):
        raise FloatingPointError("W is not finite")

    monkeypatch.setattr(sweep, "measure_state", broken)
    code, _, err = run(["simulate", "--preset", "fig-a"], capsys)
    assert code == 2 and "not finite" in err


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "lambdakerr", "preset", "--name", "fig-a", "--print"], capture_output=True, text=True)
    assert res.returncode == 0 and "gamma = 1.0" in res.stdout
