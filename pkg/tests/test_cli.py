import json
import os

import numpy as np
import pytest

from kinlab.cli import main
from kinlab.config import ConfigError, RunConfig, parse_config
from kinlab.reports import read_csv


def test_defaults_from_empty_file(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    cfg = parse_config(str(path))
    assert cfg == RunConfig()
    assert cfg.d == 2 and cfg.K == 6 and cfg.grid_n == 32
    assert cfg.eps == (0.4, 0.2, 0.1, 0.05)
    assert cfg.dt == pytest.approx(1 / 256)
    assert cfg.T == 0.5 and cfg.ell == 2.0 and cfg.k == 3.0


def test_config_file_parsing_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("K = 4\neps = 0.2, 0.1\n# comment\ngrid-n = 16\n")
    cfg = parse_config(str(path), {"T": "0.25"})
    assert cfg.K == 4 and cfg.grid_n == 16 and cfg.T == 0.25
    assert cfg.eps == (0.2, 0.1)


def test_invalid_k_names_constraint():
    with pytest.raises(ConfigError, match="k > d/2\\+1 required"):
        parse_config(None, {"k": "1"})


def test_unknown_key_lists_valid(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("frobnicate = 1\n")
    with pytest.raises(ConfigError, match="valid keys"):
        parse_config(str(path))


def test_grid_must_be_power_of_two():
    with pytest.raises(ConfigError, match="power of two"):
        parse_config(None, {"grid_n": "24"})


def test_override_changes_fingerprint():
    a = parse_config(None, {})
    b = parse_config(None, {"K": "8"})
    assert a.fingerprint() != b.fingerprint()
    assert a.fingerprint() == parse_config(None, {}).fingerprint()
    # output location does not affect the physics fingerprint
    c = parse_config(None, {"output_dir": "elsewhere"})
    assert c.fingerprint() == a.fingerprint()


def _run(args):
    return main(args)


def test_spectrum_command_bgk(tmp_path):
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    code = _run(["spectrum", "--model", "bgk", "--K", "4",
                 "--output-dir", out, "--cache-dir", cache])
    assert code == 0
    header, rows = read_csv(os.path.join(out, "branches_2_4_32.csv"))
    assert header == ["j", "xi", "re_lambda", "im_lambda"]
    assert {r[0] for r in rows} == {"1", "2", "3", "4"}
    assert all(float(r[2]) <= 1e-10 for r in rows)
    payload = json.load(open(os.path.join(out, "branches_2_4_32.json")))
    assert abs(payload["alpha3"]) < 1e-8
    assert abs(payload["alpha4"]) < 1e-8
    assert payload["projector_sum_defect"] < 1e-8


def test_viscosity_command_bgk_unit_coefficients(tmp_path):
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    code = _run(["viscosity", "--model", "bgk", "--K", "4",
                 "--output-dir", out, "--cache-dir", cache])
    assert code == 0
    payload = json.load(open(os.path.join(out, "viscosity_2_4_32.json")))
    assert payload["mu1"] == pytest.approx(1.0, abs=1e-10)
    assert payload["mu2"] == pytest.approx(1.0, abs=1e-10)
    assert payload["warning"] is None


def test_validation_error_exit_code(tmp_path):
    code = _run(["viscosity", "--k", "1", "--output-dir", str(tmp_path)])
    assert code == 1


def test_numerical_abort_exit_code(tmp_path):
    # hard-sphere keeps the quadratic term: huge data trips the blow-up guard
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    code = _run(["simulate-boltzmann", "--model", "hard_sphere", "--K", "4",
                 "--grid-n", "8", "--amplitude", "50000", "--T", "0.5",
                 "--dt", "0.015625", "--eps", "0.1",
                 "--output-dir", out, "--cache-dir", cache])
    assert code == 2


def test_corrupted_cache_triggers_reassembly(tmp_path):
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    assert _run(["viscosity", "--model", "bgk", "--K", "4",
                 "--output-dir", out, "--cache-dir", cache]) == 0
    files = [f for f in os.listdir(cache) if f.endswith(".kcc")]
    assert len(files) == 1
    path = os.path.join(cache, files[0])
    blob = bytearray(open(path, "rb").read())
    blob[-4] ^= 0xFF
    open(path, "wb").write(bytes(blob))
    assert _run(["viscosity", "--model", "bgk", "--K", "4",
                 "--output-dir", out, "--cache-dir", cache]) == 0
    log = open(os.path.join(out, "run.log")).read()
    assert "re-assembling" in log
    # cache was rewritten and is valid again
    from kinlab.basis import build_basis
    from kinlab.collision import read_cache

    read_cache(path, build_basis(2, 4))


def test_converge_outputs_deterministic(tmp_path):
    args_common = ["converge", "--model", "bgk", "--K", "4", "--grid-n", "8",
                   "--eps", "0.4,0.2,0.1,0.05", "--T", "0.0625",
                   "--dt", "0.015625", "--cache-dir", str(tmp_path / "cache")]
    out1 = str(tmp_path / "o1")
    out2 = str(tmp_path / "o2")
    assert _run(args_common + ["--output-dir", out1]) == 0
    assert _run(args_common + ["--output-dir", out2]) == 0
    for name in ("converge_2_4_8.csv", "converge_2_4_8_timeseries.csv"):
        b1 = open(os.path.join(out1, name), "rb").read()
        b2 = open(os.path.join(out2, name), "rb").read()
        assert b1 == b2
    payload = json.load(open(os.path.join(out1, "converge_2_4_8.json")))
    assert "slope" in payload and "fingerprint" in payload


def test_simulate_commands_write_summaries(tmp_path):
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    base = ["--model", "bgk", "--K", "4", "--grid-n", "8", "--T", "0.0625",
            "--dt", "0.015625", "--eps", "0.2",
            "--output-dir", out, "--cache-dir", cache]
    assert _run(["simulate-boltzmann"] + base) == 0
    header, rows = read_csv(os.path.join(out, "boltzmann_2_4_8.csv"))
    assert header[:2] == ["t", "l2"]
    assert len(rows) >= 2
    snaps = [f for f in os.listdir(out) if f.endswith(".snap")]
    assert snaps
    assert _run(["simulate-nsf"] + base) == 0
    header, rows = read_csv(os.path.join(out, "nsf_2_4_8.csv"))
    assert header == ["t", "u_l2", "theta_l2", "div_defect", "u_hhalf"]
    assert all(float(r[3]) <= 1e-12 for r in rows)


def test_decay_and_illprepared_commands(tmp_path):
    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    base = ["--model", "bgk", "--K", "4", "--grid-n", "8",
            "--eps", "0.15,0.075", "--T", "0.125", "--dt", "0.015625",
            "--output-dir", out, "--cache-dir", cache]
    assert _run(["decay"] + base) == 0
    payload = json.load(open(os.path.join(out, "decay_2_4_8.json")))
    assert all(3.6 <= r <= 4.4 for r in payload["sharp_ratios"])
    assert _run(["ill-prepared"] + base) == 0
    payload = json.load(open(os.path.join(out, "illprepared_2_4_8.json")))
    assert payload["max_rel_error"] <= 0.05
    assert payload["wellprepared_acoustic_sup"] <= 1e-6
    header, rows = read_csv(os.path.join(out, "illprepared_2_4_8.csv"))
    assert header == ["eps", "m1", "m2", "fitted_freq", "predicted_freq", "rel_error"]
    assert rows


def test_snapshot_roundtrip(tmp_path, basis6, grid16, rng):
    from kinlab.grids import KineticState
    from kinlab.reports import read_snapshot, write_snapshot

    coeffs = rng.normal(size=grid16.shape + (basis6.size,)) \
        + 1j * rng.normal(size=grid16.shape + (basis6.size,))
    st = KineticState(grid=grid16, basis=basis6, coeffs=coeffs, time=0.75, eps=0.2)
    path = str(tmp_path / "state.snap")
    write_snapshot(path, st)
    back = read_snapshot(path, grid16, basis6)
    assert np.array_equal(back.coeffs, st.coeffs)
    assert back.time == st.time and back.eps == st.eps
