from pathlib import Path

import numpy as np
import pytest

from services.errors import ConfigurationError
from services.run_config import SCHEMA, build_experiment, build_setup, load_config, parse_config

PRESETS = Path(__file__).resolve().parents[1] / "presets"


def test_far_field_preset():
    config = load_config(PRESETS / "far_field.cfg")
    assert config.grid.shape == (32, 512)
    assert config.crystal.gain == pytest.approx(1.0)
    assert config.engine.engine == "finite-pump"
    assert config.engine.seed == 2024
    assert config.engine.pulses == 10000
    assert config.z_config == "f"
    assert config.tau_D == pytest.approx(1.5e-12)
    assert config.relay is True
    # mismatch coefficients come from the coherence-length calibration
    assert config.crystal.c_diffr_q > 0
    assert config.crystal.c_gvd_t > 0


def test_near_field_preset_differs_only_in_the_idler_plane():
    far = load_config(PRESETS / "far_field.cfg")
    near = load_config(PRESETS / "near_field.cfg")
    differing = {key for key in SCHEMA if far.values[key] != near.values[key]}
    assert differing == {"z_config", "output_dir"}
    assert near.z_config == "2f"


def test_defaults_fill_optional_keys(small_config_text):
    config = parse_config(small_config_text)
    assert config.model == "pure"
    assert config.tau_D is None
    assert config.object == "double_slit"
    assert config.chunk_size == 8
    assert config.engine.steps == 64


def test_negative_pulses_name_key_and_line(small_config_text):
    text = small_config_text.replace("pulses = 40", "pulses = -1")
    line = text.splitlines().index("pulses = -1") + 1
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    assert info.value.key == "pulses"
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
    assert "pulses" in str(info.value)


def test_duplicate_key_names_both_lines():
    text = "n_x = 64\ndx = 1e-6\nn_x = 128\n"
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    assert info.value.key == "n_x"
    assert "lines 1 and 3" in str(info.value)


def test_unknown_missing_and_malformed_keys(small_config_text):
    with pytest.raises(ConfigurationError) as info:
        parse_config(small_config_text + "colour = blue\n")
    assert info.value.key == "colour"
    with pytest.raises(ConfigurationError) as info:
        parse_config(small_config_text.replace("sigma = 250.0", ""))
    assert info.value.key == "sigma"
    with pytest.raises(ConfigurationError) as info:
        parse_config(small_config_text + "just some words\n")
    assert info.value.line is not None
    with pytest.raises(ConfigurationError) as info:
        parse_config(small_config_text.replace("n_x = 256", "n_x = 25.5"))
    assert info.value.key == "n_x"


@pytest.mark.parametrize("line, key", [
    ("model = bell", "model"),
    ("engine = rk4", "engine"),
    ("object = file", "object_file"),
    ("tau_D = 5e-12", "tau_D"),
    ("fixed_point = 1.0", "fixed_point"),
    ("relay = maybe", "relay"),
])
def test_range_errors_carry_their_key(small_config_text, line, key):
    with pytest.raises(ConfigurationError) as info:
        parse_config(small_config_text + line + "\n")
    assert info.value.key == key


@pytest.mark.parametrize("line, key", [
    ("pulses = inf", "pulses"),
    ("fixed_point = nan", "fixed_point"),
    ("tau_D = nan", "tau_D"),
    ("dx = -inf", "dx"),
    ("c_diffr_q = nan", "c_diffr_q"),
])
def test_non_finite_values_name_key_and_line(small_config_text, line, key):
    kept = [entry for entry in small_config_text.splitlines() if not entry.startswith(key + " ")]
    text = "\n".join(kept + [line]) + "\n"
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    assert info.value.key == key
    assert "finite" in str(info.value)
    assert info.value.line == text.splitlines().index(line) + 1


def test_text_round_trip(small_config_text):
    config = parse_config(small_config_text + "tau_D = none\nrelay = false\n")
    again = parse_config(config.to_text())
    assert again.values == config.values
    assert again.crystal == config.crystal


def test_with_values_revalidates(small_config_text):
    config = parse_config(small_config_text)
    variant = config.with_values(z_config="2f", w_p=np.float64(2e-4), tau_D=None)
    assert variant.z_config == "2f"
    assert variant.w_p == pytest.approx(2e-4)
    assert config.z_config == "f"
    with pytest.raises(ConfigurationError):
        config.with_values(scheme="c")


def test_with_values_can_reset_optional_keys(small_config_text):
    windowed = parse_config(small_config_text + "tau_D = 1e-12\n")
    assert windowed.tau_D == pytest.approx(1e-12)
    assert windowed.with_values(tau_D=None).tau_D is None
    assert windowed.with_values(seed=5).tau_D == pytest.approx(1e-12)
    with pytest.raises(ConfigurationError):
        windowed.with_values(sigma=None)
    with pytest.raises(ConfigurationError) as info:
        windowed.with_values(colour="blue")
    assert info.value.key == "colour"


def test_build_experiment(small_config_text):
    config = parse_config(small_config_text)
    grid, table, setup = build_experiment(config)
    assert table.U_S.shape == grid.shape
    assert setup.relay_beta > 0
    assert np.count_nonzero(setup.object) == 34
    uniform = parse_config(small_config_text + "object = uniform\nrelay = off\n")
    flat = build_setup(uniform)
    assert flat.relay_beta == 0.0
    assert np.all(flat.object == 1.0)


def test_object_file(tmp_path, small_config_text):
    path = tmp_path / "mask.txt"
    np.savetxt(path, np.linspace(0, 1, 256))
    config = parse_config(small_config_text + f"object = file\nobject_file = {path}\n")
    np.testing.assert_allclose(build_setup(config).object, np.linspace(0, 1, 256))


def test_plane_wave_table_drops_walk_off(small_config_text):
    tilted = parse_config(small_config_text + "c_walkoff_q = 2e-5\nc_gvm_t = 1e-13\n")
    _, table, _ = build_experiment(tilted)
    assert table.params.c_walkoff_q == 0.0
    assert table.params.c_gvm_t == 0.0
    assert tilted.crystal.c_walkoff_q == pytest.approx(2e-5)
    _, straight, _ = build_experiment(parse_config(small_config_text))
    np.testing.assert_array_equal(table.mean_n, straight.mean_n)

    finite = tilted.with_values(engine="finite-pump")
    _, kept, _ = build_experiment(finite)
    assert kept.params.c_walkoff_q == pytest.approx(2e-5)
    assert kept.params.c_gvm_t == pytest.approx(1e-13)
