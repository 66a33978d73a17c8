"""INI configuration for the batch CLI.

Every key carries its unit in the name. Values resolve in the order
built-in defaults < config file < ``--set`` overrides. A CSV written by the
CLI can itself serve as a config file: its ``#`` header embeds the resolved
configuration.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .model import ATOMIC_MASS_UNIT, PLANCK, TWO_PI, ChainModel, IonSpecies, LatticeConfig, TrapConfig

CONFIG_MARKER = "config:"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending ``section.key`` when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass
class SpeciesSection:
    mass_u: float = 40.0
    cooling_wavelength_nm: float = 397.0
    natural_linewidth_mhz: float = 21.6  # Gamma / 2 pi


@dataclass
class TrapSection:
    axial_frequency_hz: float = 100e3  # omega_a / 2 pi
    ion_count: int = 35


@dataclass
class LatticeSection:
    period_nm: float = 202.5
    depth_per_watt_mhz_per_w: float = 4.6  # K / h per watt
    power_w: float = 1.5
    phase_origin_nm: float = 0.0
    laser_wavelength_nm: float | None = None  # defaults to twice the period


@dataclass
class RunSection:
    tolerance: float = 1e-10
    seed: int = 0
    output_path: str = ""


@dataclass
class StaticsSweepSection:
    power_grid_w: str = "0:2.0:0.01"


@dataclass
class HullSection:
    power_step_w: float = 0.01


@dataclass
class ModesSection:
    power_step_w: float = 0.01
    source_ion: int = 0


@dataclass
class TransportSection:
    powers_w: str = "0, 0.5, 1.0, 1.5"
    power_step_w: float = 0.01
    t_end_trap_periods: float = 500.0
    sample_step_trap_periods: float = 0.01
    source_ion: int = 0
    target_ion: int = -1
    fraction: float = 0.5


@dataclass
class BathSection:
    left_temperature_mk: float = 1.0
    right_temperature_mk: float = 2.0
    coupling_rate_per_s: float = 5e4
    t_end_trap_periods: float = 200.0
    dt_trap_periods: float | None = None
    runs: int = 1


@dataclass
class PulseHeatingSection:
    mode_frequency_hz: float = 1e6
    n_pulses: int = 5
    beam_angle_deg: float = 45.0


@dataclass
class HeatingRatesSection:
    intensity_noise_per_hz: float = 1e-14
    trap_frequency_hz: float | None = None  # defaults to the well-bottom frequency
    beam_angle_deg: float = 0.0


@dataclass
class BoundStatesSection:
    points_per_period: int | None = None
    rel_tol: float = 1e-4


@dataclass
class FidelitySection:
    ion_index: int = 0
    relative_depth_change: float = 0.05
    all_ions: bool = False
    power_step_w: float = 0.01
    t_end_us: float = 10.0
    samples: int = 201


@dataclass
class FkReferenceSection:
    ion_count: int = 34
    wells: int = 21
    strength_grid_std: str = "0:1.5:0.01"
    tolerance: float = 1e-11


SECTIONS: dict[str, type] = {
    "species": SpeciesSection,
    "trap": TrapSection,
    "lattice": LatticeSection,
    "run": RunSection,
    "statics-sweep": StaticsSweepSection,
    "hull": HullSection,
    "modes": ModesSection,
    "transport": TransportSection,
    "bath": BathSection,
    "pulse-heating": PulseHeatingSection,
    "heating-rates": HeatingRatesSection,
    "bound-states": BoundStatesSection,
    "fidelity": FidelitySection,
    "fk-reference": FkReferenceSection,
}


@dataclass
class ExperimentConfig:
    sections: dict[str, Any] = field(default_factory=lambda: {name: cls() for name, cls in SECTIONS.items()})

    def __getitem__(self, name: str):
        return self.sections[name]

    def to_ini(self) -> str:
        """Canonical INI text; parsing it back gives an identical config."""
        out = []
        for name, sec in self.sections.items():
            out.append(f"[{name}]")
            for f in fields(sec):
                out.append(f"{f.name} = {format_value(getattr(sec, f.name))}")
            out.append("")
        return "\n".join(out)

    def model(self, power: float | None = None, ion_count: int | None = None) -> ChainModel:
        sp, tr, la = self["species"], self["trap"], self["lattice"]
        species = IonSpecies(
            mass=sp.mass_u * ATOMIC_MASS_UNIT,
            cooling_wavelength=sp.cooling_wavelength_nm * 1e-9,
            natural_linewidth=TWO_PI * sp.natural_linewidth_mhz * 1e6,
        )
        trap = TrapConfig(TWO_PI * tr.axial_frequency_hz, tr.ion_count if ion_count is None else ion_count)
        lattice = LatticeConfig(
            period=la.period_nm * 1e-9,
            depth_per_watt=PLANCK * la.depth_per_watt_mhz_per_w * 1e6,
            power=la.power_w if power is None else power,
            phase_origin=la.phase_origin_nm * 1e-9,
            laser_wavelength=None if la.laser_wavelength_nm is None else la.laser_wavelength_nm * 1e-9,
        )
        return ChainModel(species, trap, lattice)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _convert(raw: str, typ, key: str):
    text = raw.strip()
    optional = isinstance(typ, str) and "None" in typ
    base = typ.replace(" | None", "") if isinstance(typ, str) else typ.__name__
    if text == "" and optional:
        return None
    try:
        if base == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base == "int":
            return int(text)
        if base == "float":
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: expected {base}, got {raw!r}", key) from None


def _assign(cfg: ExperimentConfig, section: str, key: str, raw: str):
    if section not in cfg.sections:
        raise ConfigError(f"unknown section [{section}]", section)
    sec = cfg.sections[section]
    types = {f.name: f.type for f in fields(sec)}
    if key not in types:
        raise ConfigError(f"unknown key {section}.{key}", f"{section}.{key}")
    setattr(sec, key, _convert(raw, types[key], f"{section}.{key}"))


def embedded_config(text: str) -> str:
    """Return the INI text embedded in a CLI CSV header, or ``text`` unchanged if it is plain INI."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        return text
    body, inside = [], False
    for line in lines:
        if not line.startswith("#"):
            break
        content = line[1:].strip()
        if inside:
            body.append(content)
        elif content == CONFIG_MARKER:
            inside = True
    if not inside:
        raise ConfigError("CSV header carries no embedded config")
    return "\n".join(body)


def parse_override(item: str, cfg: ExperimentConfig) -> tuple[str, str, str]:
    """Split ``section.key=value`` (or bare ``key=value`` when the key is unique)."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    lhs, value = item.split("=", 1)
    lhs = lhs.strip()
    if "." in lhs:
        section, key = lhs.rsplit(".", 1)
        return section, key, value
    owners = [name for name, sec in cfg.sections.items() if lhs in {f.name for f in fields(sec)}]
    if not owners:
        raise ConfigError(f"unknown key {lhs}", lhs)
    if len(owners) > 1:
        raise ConfigError(f"key {lhs} is ambiguous; qualify it as one of " + ", ".join(f"{o}.{lhs}" for o in owners), lhs)
    return owners[0], lhs, value


def resolve(path: str | Path | None = None, overrides=(), text: str | None = None) -> ExperimentConfig:
    """Build a config from defaults, then the file (or ``text``), then ``overrides``."""
    cfg = ExperimentConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    if text is not None:
        parser = configparser.ConfigParser(strict=True, interpolation=None, delimiters=("=",))
        parser.optionxform = str
        try:
            parser.read_file(io.StringIO(embedded_config(text)))
        except configparser.DuplicateOptionError as exc:
            raise ConfigError(f"duplicate key {exc.section}.{exc.option}", f"{exc.section}.{exc.option}") from None
        except configparser.DuplicateSectionError as exc:
            raise ConfigError(f"duplicate section [{exc.section}]", exc.section) from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc.message}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                _assign(cfg, section, key, raw)
    for item in overrides:
        _assign(cfg, *parse_override(item, cfg))
    validate(cfg)
    return cfg


def parse_grid(spec: str, key: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    text = spec.strip()
    if not text:
        raise ConfigError(f"{key}: empty grid", key)
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ConfigError(f"{key}: step must be positive", key)
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = start + step * np.arange(max(count, 0))
            values = np.round(values, 12)
        else:
            values = np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise ConfigError(f"{key}: cannot parse grid {spec!r}", key) from None
    if values.size == 0:
        raise ConfigError(f"{key}: empty grid", key)
    if np.any(np.diff(values) <= 0):
        raise ConfigError(f"{key}: grid must be strictly ascending", key)
    return values


def _positive(cfg, dotted):
    section, key = dotted.split(".")
    v = getattr(cfg[section], key)
    if v is not None and not v > 0:
        raise ConfigError(f"{dotted} must be positive", dotted)


def validate(cfg: ExperimentConfig) -> None:
    for dotted in (
        "species.mass_u",
        "species.cooling_wavelength_nm",
        "species.natural_linewidth_mhz",
        "trap.axial_frequency_hz",
        "trap.ion_count",
        "lattice.period_nm",
        "lattice.laser_wavelength_nm",
        "run.tolerance",
        "hull.power_step_w",
        "modes.power_step_w",
        "transport.power_step_w",
        "transport.t_end_trap_periods",
        "transport.sample_step_trap_periods",
        "bath.t_end_trap_periods",
        "bath.dt_trap_periods",
        "bath.runs",
        "pulse-heating.mode_frequency_hz",
        "heating-rates.trap_frequency_hz",
        "fidelity.power_step_w",
        "fidelity.samples",
        "fk-reference.ion_count",
        "fk-reference.wells",
    ):
        _positive(cfg, dotted)
    for dotted in ("lattice.depth_per_watt_mhz_per_w", "lattice.power_w", "bath.left_temperature_mk",
                   "bath.right_temperature_mk", "bath.coupling_rate_per_s", "heating-rates.intensity_noise_per_hz",
                   "pulse-heating.n_pulses"):
        section, key = dotted.split(".")
        if getattr(cfg[section], key) < 0:
            raise ConfigError(f"{dotted} must be non-negative", dotted)
    if not abs(cfg["fidelity"].relative_depth_change) < 1:
        raise ConfigError("fidelity.relative_depth_change must lie in (-1, 1)", "fidelity.relative_depth_change")
    parse_grid(cfg["statics-sweep"].power_grid_w, "statics-sweep.power_grid_w")
    parse_grid(cfg["transport"].powers_w, "transport.powers_w")
    parse_grid(cfg["fk-reference"].strength_grid_std, "fk-reference.strength_grid_std")


def replace_section(cfg: ExperimentConfig, name: str, **changes) -> ExperimentConfig:
    """Copy of ``cfg`` with fields of one section changed."""
    new = ExperimentConfig({k: dataclasses.replace(v) for k, v in cfg.sections.items()})
    new.sections[name] = dataclasses.replace(new.sections[name], **changes)
    return new
