import subprocess

import numpy as np
import pytest

from dataclasses import replace

from abfsim.cli import main
from abfsim.config import (
    ExperimentConfig,
    apply_overrides,
    build_potential,
    parse_config_text,
    serialize_config,
    validate_config,
)
from abfsim.dynamics import nw_profile, sample_initial
from abfsim.errors import ConfigurationError
from abfsim.experiments import PRESETS, preset_config
from abfsim.metrics import grid_l1
from abfsim.reference import mean_force


# ---------------------------------------------------------------------------
# config text format


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_config_round_trips_every_preset(name):
    cfg = preset_config(name)
    text = serialize_config(cfg)
    assert parse_config_text(text) == cfg
    assert serialize_config(parse_config_text(text)) == text


def test_parse_reports_line_numbers():
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_config_text("experiment=v1-abf\nsim.dtx=3\n")
    with pytest.raises(ConfigurationError, match="line 3"):
        parse_config_text("experiment=v1-abf\n\nno equals sign\n")
    with pytest.raises(ConfigurationError, match="line 1"):
        parse_config_text("sim.steps=abc\n")
    with pytest.raises(ConfigurationError, match="line 1"):
        parse_config_text("sim.steps=-3\n")


def test_parse_comments_blanks_and_minimal_text():
    cfg = parse_config_text("# header\n\nexperiment=sweep-n\n")
    assert cfg.experiment == "sweep-n"
    assert cfg.sim.steps == ExperimentConfig().sim.steps
    cfg = parse_config_text("sim.steps=7 # trailing note\n")
    assert cfg.sim.steps == 7


def test_parse_tuple_fields():
    cfg = parse_config_text("sweep.n_values=10,20,40\ninit.center=0.5,-0.25\n")
    assert cfg.sweep.n_values == (10, 20, 40)
    assert cfg.init.center == (0.5, -0.25)


def test_apply_overrides_order_and_errors():
    cfg = ExperimentConfig()
    out = apply_overrides(cfg, ["sim.steps=5", "sim.steps=7", "seeds=4"])
    assert out.sim.steps == 7
    assert out.seeds == 4
    assert cfg.sim.steps == ExperimentConfig().sim.steps  # original untouched
    with pytest.raises(ConfigurationError, match="key=value"):
        apply_overrides(cfg, ["sim.steps"])
    with pytest.raises(ConfigurationError, match="unknown config section"):
        apply_overrides(cfg, ["simm.steps=5"])
    with pytest.raises(ConfigurationError, match="valid:"):
        apply_overrides(cfg, ["sim.stepz=5"])
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, ["steps=5"])


def test_validate_config_bounds():
    cfg = preset_config("v1-abf")
    potential, kernel = validate_config(cfg)
    assert potential.name == "v1"
    assert kernel.period == potential.period
    for pair in ("kernel.epsilon=3.0", "seeds=0", "profile.burn_frac=1.0",
                 "profile.every=0", "grid.m=0", "pde.m1=1"):
        with pytest.raises(ConfigurationError):
            validate_config(apply_overrides(cfg, [pair]))


def test_build_potential_custom_matches_named():
    cfg = apply_overrides(ExperimentConfig(), [
        "potential.name=custom",
        "potential.gaussians=5.0:0:0;-5.0:1:0;-5.0:-1:0",
        "potential.quartics=0:0.2;1:0.2",
    ])
    pot, _ = validate_config(cfg)
    ref = build_potential(preset_config("v1-abf").potential)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-2, 2, 50), rng.uniform(-3, 3, 50)])
    np.testing.assert_array_equal(pot.energy(pts), ref.energy(pts))
    np.testing.assert_array_equal(pot.gradient(pts), ref.gradient(pts))


def test_build_potential_rejects_bad_terms():
    base = ExperimentConfig()
    with pytest.raises(ConfigurationError, match="term #1"):
        build_potential(apply_overrides(base, [
            "potential.name=custom", "potential.gaussians=5:0",
        ]).potential)
    with pytest.raises(ConfigurationError, match="term #2"):
        build_potential(apply_overrides(base, [
            "potential.name=custom", "potential.quartics=0:0.2;1",
        ]).potential)


def test_build_potential_sine_period():
    cfg = apply_overrides(ExperimentConfig(), [
        "potential.name=sine_quadratic", "potential.period=2.5",
    ])
    assert build_potential(cfg.potential).period == 2.5


# ---------------------------------------------------------------------------
# command-line entry points (in-process)


def test_cli_list_presets(capsys):
    assert main(["run", "--list"]) == 0
    out = capsys.readouterr().out.split()
    assert out == sorted(PRESETS)


def test_cli_run_zero_steps_matches_library(tmp_path):
    out = tmp_path / "o"
    rc = main(["run", "v1-abf", "--steps", "0", "--seeds", "1",
               "--out", str(out)])
    assert rc == 0
    summary = dict(
        line.split("=", 1)
        for line in (out / "summary.txt").read_text().splitlines()
    )
    # a zero-step run reports the instantaneous estimate on the initial
    # ensemble; rebuild it through the library and compare
    cfg = preset_config("v1-abf")
    potential = build_potential(cfg.potential)
    _, kernel = validate_config(cfg)
    sim = replace(cfg.sim, steps=0)
    ens = sample_initial(potential, sim, cfg.init)
    grad1 = potential.gradient(ens.positions)[:, 0]
    profile = nw_profile(ens.positions[:, 0], grad1, kernel, m=cfg.grid.m)
    exact = mean_force(potential, cfg.sim.beta, m=cfg.grid.m,
                       y_max=cfg.reference.y_max, n_quad=cfg.reference.n_quad)
    expected = grid_l1(profile.values, exact.values, potential.period)
    assert float(summary["mean_l1"]) == pytest.approx(expected, rel=1e-12)
    assert summary["preset"] == "v1-abf"
    assert int(summary["missing_nodes_seed0"]) == profile.n_missing
    assert profile.n_missing > 0  # tight initial blob covers few nodes
    header = (out / "force_profile.csv").read_text().splitlines()[:2]
    assert header[0] == "# abfsim-csv v1 force_profile"
    assert header[1] == "x1,estimate,exact,missing"


def test_cli_check_mode_exit_code(tmp_path):
    rc = main(["run", "v1-abf", "--steps", "0", "--seeds", "1", "--check",
               "--out", str(tmp_path / "o")])
    assert rc == 4


def test_cli_usage_errors(tmp_path):
    assert main(["run", "no-such-preset", "--out", str(tmp_path / "x")]) == 2
    assert main(["run"]) == 2
    assert main(["run", "v1-abf", "sim.bogus=1",
                 "--out", str(tmp_path / "y")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code == 2


def test_cli_config_file_round_trip(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg = apply_overrides(preset_config("v1-abf"),
                          ["sim.steps=0", "seeds=1"])
    cfg_file.write_text(serialize_config(cfg))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "v1-abf", "--config", str(cfg_file),
                 "--out", str(out_a)]) == 0
    # the echoed config reruns to an identical summary
    assert main(["run", "v1-abf", "--config", str(out_a / "config.txt"),
                 "--out", str(out_b)]) == 0
    assert (out_a / "summary.txt").read_bytes() == \
        (out_b / "summary.txt").read_bytes()
    # a config whose experiment disagrees with the preset argument is refused
    assert main(["run", "v2-short", "--config", str(cfg_file),
                 "--out", str(tmp_path / "c")]) == 2


def test_cli_reference_csv(tmp_path, capsys):
    out = tmp_path / "ref.csv"
    rc = main(["reference", "--potential", "sine_quadratic", "--beta", "1",
               "--m", "32", "--y-max", "12", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# abfsim-csv v1 reference_profile"
    assert lines[1] == "x1,free_energy,mean_force"
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    assert data.shape == (32, 3)
    assert np.max(np.abs(data[:, 2])) <= 1e-10  # flat free energy


def test_cli_reference_tail_failure_exit_code(tmp_path, capsys):
    rc = main(["reference", "--potential", "sine_quadratic", "--beta", "1",
               "--m", "8", "--y-max", "6",
               "--out", str(tmp_path / "ref.csv")])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_pde_outputs(tmp_path, capsys):
    out = tmp_path / "pde"
    rc = main(["pde", "--potential", "v1", "--beta", "1", "--m1", "16",
               "--m2", "12", "--y-max", "3", "--t", "0.01",
               "--epsilon", "0.5", "--alpha", "0.1", "--sigma", "0.5",
               "--out", str(out)])
    assert rc == 0
    marg = (out / "marginal.csv").read_text().splitlines()
    assert marg[0] == "# abfsim-csv v1 pde_marginal"
    assert marg[1] == "x1,marginal,heat_reference"
    assert len(marg) == 2 + 16
    dens = (out / "density.csv").read_text().splitlines()
    assert dens[1] == "x1,x2,density"
    assert len(dens) == 2 + 16 * 12
    assert "mass drift" in capsys.readouterr().out


def test_console_script_installed():
    proc = subprocess.run(["abf", "run", "--list"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    assert sorted(PRESETS) == proc.stdout.split()
