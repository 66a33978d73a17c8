import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionlattice.config import (
    ConfigError,
    ExperimentConfig,
    embedded_config,
    format_value,
    parse_grid,
    replace_section,
    resolve,
)
from ionlattice.model import PLANCK, ChainModel


def test_defaults_reproduce_reference_model():
    cfg = resolve()
    m = cfg.model(power=0.0)
    ref = ChainModel.reference(35)
    assert m.species.mass == pytest.approx(ref.species.mass, rel=1e-12)
    assert m.trap == ref.trap
    assert m.lattice.depth_per_watt == pytest.approx(PLANCK * 4.6e6)
    assert m.lattice.optical_wavelength == pytest.approx(405e-9)
    assert cfg.model().lattice.power == 1.5


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[trap]\nion_count = 9\n\n[lattice]\npower_w = 0.7\n")
    cfg = resolve(path, ["trap.ion_count=11", "samples=17"])
    assert cfg["trap"].ion_count == 11
    assert cfg["lattice"].power_w == 0.7
    assert cfg["fidelity"].samples == 17


def test_ambiguous_bare_key_rejected():
    with pytest.raises(ConfigError) as info:
        resolve(overrides=["power_step_w=0.1"])
    assert "power_step_w" in str(info.value)


@pytest.mark.parametrize(
    "text, key",
    [
        ("[trap]\nion_count = many\n", "trap.ion_count"),
        ("[trap]\nspeed = 3\n", "trap.speed"),
        ("[warp]\nx = 1\n", "warp"),
        ("[trap]\nion_count = 0\n", "trap.ion_count"),
        ("[fidelity]\nrelative_depth_change = 1.5\n", "fidelity.relative_depth_change"),
        ("[statics-sweep]\npower_grid_w = 1, 0.5\n", "statics-sweep.power_grid_w"),
        ("[trap]\nion_count = 3\nion_count = 4\n", "trap.ion_count"),
    ],
)
def test_invalid_configs_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        resolve(text=text)
    assert info.value.key == key


def test_malformed_ini_rejected():
    with pytest.raises(ConfigError):
        resolve(text="ion_count = 3\n")


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        resolve(tmp_path / "absent.ini")


def test_ini_round_trip():
    cfg = resolve(overrides=["lattice.laser_wavelength_nm=410", "fidelity.all_ions=yes", "run.seed=42"])
    again = resolve(text=cfg.to_ini())
    assert again == cfg
    assert again.to_ini() == cfg.to_ini()


def test_optional_value_cleared_by_empty_string():
    cfg = resolve(overrides=["heating-rates.trap_frequency_hz=1.2e6"])
    assert cfg["heating-rates"].trap_frequency_hz == 1.2e6
    assert resolve(text=cfg.to_ini(), overrides=["heating-rates.trap_frequency_hz="])["heating-rates"].trap_frequency_hz is None


def test_csv_header_is_a_config():
    cfg = resolve(overrides=["trap.ion_count=7"])
    header = "# ionlattice 0.1.0\n# seed: 0\n# config:\n"
    header += "".join(f"# {line}\n" for line in cfg.to_ini().splitlines() if line)
    text = header + "a,b\n1,2\n"
    assert resolve(text=text) == cfg


def test_csv_without_config_rejected():
    with pytest.raises(ConfigError):
        embedded_config("# just a comment\nx,y\n")


@pytest.mark.parametrize(
    "spec, expected",
    [
        ("0:1:0.25", [0, 0.25, 0.5, 0.75, 1.0]),
        ("0:2.0:0.01", np.round(np.arange(201) * 0.01, 12)),
        ("0.5", [0.5]),
        ("0, 0.5, 1.0, 1.5", [0, 0.5, 1.0, 1.5]),
    ],
)
def test_grid_syntax(spec, expected):
    assert np.allclose(parse_grid(spec, "g"), expected, atol=1e-12)


@pytest.mark.parametrize("spec", ["", "  ", "1:0:0.1", "0:1:0", "0:1:-1", "a,b", "0:1", "1,1"])
def test_bad_grids_rejected(spec):
    with pytest.raises(ConfigError):
        parse_grid(spec, "g")


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_float_format_round_trips_to_12_digits(x):
    assert float(format_value(x)) == pytest.approx(x, rel=1e-11, abs=1e-300)


def test_format_value_types():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(0.1 + 0.2) == "0.3"


def test_replace_section_copies():
    cfg = ExperimentConfig()
    new = replace_section(cfg, "trap", ion_count=3)
    assert new["trap"].ion_count == 3 and cfg["trap"].ion_count == 35
