"""Batch command line: ``ionlattice <subcommand> [--config PATH] [--set section.key=value ...] [--out PATH]``.

Each subcommand writes one CSV table preceded by a ``#`` header carrying the
package version, the subcommand, the seed and the fully resolved config.
Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures; failures also print a one-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import CONFIG_MARKER, ConfigError, ExperimentConfig, format_value, parse_grid, resolve
from .errors import ConvergenceError, IonLatticeError
from .fk import FKChainParams, fk_reference
from .heating import heating_rates, pulse_heating_energy
from .model import PLANCK, TWO_PI, ChainModel
from .modes import normal_modes, spectrum_sweep
from .quantum import SpinPerturbation, bound_states, fidelity_scan
from .statics import hull, order_parameter_delta, relax_from_scratch, sweep_power
from .transport import BathSpec, arrival_metrics, decompose, langevin_ensemble, transport_curve

SUBCOMMANDS = (
    "statics-sweep",
    "hull",
    "modes",
    "transport",
    "bath",
    "pulse-heating",
    "heating-rates",
    "bound-states",
    "fidelity",
    "fk-reference",
)

SCHEMAS = {
    "statics-sweep": ("power_W", "omega0_over_omega_a", "delta_over_lambda", "chain_length_um"),
    "hull": ("ion", "position_um", "phase_over_lambda", "reference_phase_over_lambda", "distance_to_max_over_lambda"),
    "modes": ("mode", "frequency_hz", "omega_over_omega_a", "parity", "imaginary", "amplitude"),
    "transport": ("power_W", "threshold_time_omega_a", "first_peak_time_omega_a", "peak_relative_energy"),
    "bath": ("ion", "temperature_mK", "error_mK"),
    "pulse-heating": ("n_pulses", "x_eq_nm", "e0_quanta", "energy_quanta"),
    "heating-rates": (
        "power_W",
        "depth_mhz",
        "trap_frequency_hz",
        "lamb_dicke",
        "ground_size_nm",
        "parametric_quanta_per_ms",
        "gradient_quanta_per_ms",
        "scattering_quanta_per_s",
    ),
    "bound-states": ("level", "energy_over_hbar_omega", "below_depth"),
    "fidelity": ("time_us", "contrast"),
    "fk-reference": ("k_std", "omega0", "imaginary"),
}


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _relaxed_along(model: ChainModel, target: float, step: float, tol: float):
    """Relax at P = 0, then continue in steps of ``step`` up to ``target``; returns (reference, final)."""
    base = relax_from_scratch(model.with_power(0.0), 0.0, tol)
    if target == 0:
        return base, base
    grid = np.append(np.arange(0.0, target, step), target)
    grid = np.unique(np.round(grid, 12))
    sweep = sweep_power(base, model, grid, tol)
    return base, sweep.states[-1]


def run_statics_sweep(cfg: ExperimentConfig):
    model = cfg.model(power=0.0)
    grid = parse_grid(cfg["statics-sweep"].power_grid_w, "statics-sweep.power_grid_w")
    tol = cfg["run"].tolerance
    base = relax_from_scratch(model, 0.0, tol)
    # continuation always starts from the bare chain
    sweep = sweep_power(base, model, np.unique(np.concatenate([[0.0], grid])), tol)
    table = spectrum_sweep(sweep, model)
    lam = model.lattice.period
    rows = []
    for p, res, w in zip(sweep.powers, sweep.states, table.omega[:, 0]):
        if p < grid[0]:
            continue
        delta = order_parameter_delta(res, model) / lam if res.state.ion_count % 2 else float("nan")
        length = model.to_meters(res.state.positions[-1] - res.state.positions[0]) * 1e6
        rows.append((p, w, delta, length))
    return rows


def run_hull(cfg):
    model = cfg.model()
    sec = cfg["hull"]
    base, res = _relaxed_along(model, model.lattice.power, sec.power_step_w, cfg["run"].tolerance)
    h = hull(res, base, model)
    h0 = hull(base, base, model)
    lam = model.lattice.period
    dist = h.distance_to_maximum()
    pos = model.to_meters(res.state.positions) * 1e6
    return [(i, pos[i], h.phases[i] / lam, h0.phases[i] / lam, dist[i] / lam) for i in range(len(pos))]


def run_modes(cfg):
    model = cfg.model()
    sec = cfg["modes"]
    _, res = _relaxed_along(model, model.lattice.power, sec.power_step_w, cfg["run"].tolerance)
    spec = normal_modes(res, model)
    amp = decompose(spec, sec.source_ion).amplitudes
    return [
        (k, spec.frequencies[k] / TWO_PI, spec.omega[k], spec.parities[k], bool(spec.imaginary[k]), amp[k])
        for k in range(len(spec))
    ]


def run_transport(cfg):
    sec = cfg["transport"]
    model = cfg.model(power=0.0)
    tol = cfg["run"].tolerance
    powers = parse_grid(sec.powers_w, "transport.powers_w")
    base = relax_from_scratch(model, 0.0, tol)
    step = sec.power_step_w
    grid = np.unique(np.round(np.concatenate([np.arange(0.0, powers[-1], step), powers, [0.0]]), 12))
    sweep = sweep_power(base, model, grid, tol)
    times = TWO_PI * np.arange(0.0, sec.t_end_trap_periods, sec.sample_step_trap_periods)
    rows = []
    for p in powers:
        k = int(np.argmin(np.abs(sweep.powers - p)))
        spec = normal_modes(sweep.states[k], model)
        e = transport_curve(spec, times, sec.source_ion, sec.target_ion)
        m = arrival_metrics(times, e, sec.fraction)
        rows.append((p, _opt(m.threshold_time), _opt(m.first_peak_time), m.peak_value))
    return rows


def _opt(v):
    return float("nan") if v is None else v


def run_bath(cfg):
    sec = cfg["bath"]
    model = cfg.model()
    tol = cfg["run"].tolerance
    _, res = _relaxed_along(model, model.lattice.power, 0.01, tol)
    n = res.state.ion_count
    baths = [
        BathSpec(0, sec.left_temperature_mk * 1e-3, sec.coupling_rate_per_s),
        BathSpec(n - 1, sec.right_temperature_mk * 1e-3, sec.coupling_rate_per_s),
    ]
    kwargs = {"t_end": sec.t_end_trap_periods * TWO_PI}
    if sec.dt_trap_periods is not None:
        kwargs["dt"] = sec.dt_trap_periods * TWO_PI
    results = langevin_ensemble(res, model, baths, runs=sec.runs, seed=cfg["run"].seed, **kwargs)
    temps = np.mean([r.temperatures for r in results], axis=0)
    if len(results) > 1:
        errs = np.std([r.temperatures for r in results], axis=0, ddof=1) / np.sqrt(len(results))
    else:
        errs = results[0].errors
    return [(i, temps[i] * 1e3, errs[i] * 1e3) for i in range(n)]


def run_pulse_heating(cfg):
    sec = cfg["pulse-heating"]
    model = cfg.model()
    r = pulse_heating_energy(model.species, TWO_PI * sec.mode_frequency_hz, sec.n_pulses, sec.beam_angle_deg)
    return [(n, r.x_eq * 1e9, r.e0_quanta, e) for n, e in enumerate(r.energies_quanta)]


def run_heating_rates(cfg):
    sec = cfg["heating-rates"]
    model = cfg.model()
    p = model.lattice.power
    h = heating_rates(p, model, sec.intensity_noise_per_hz, sec.trap_frequency_hz, sec.beam_angle_deg)
    return [
        (
            p,
            h.depth / PLANCK / 1e6,
            h.trap_frequency,
            h.lamb_dicke,
            h.ground_size * 1e9,
            h.parametric_rate,
            h.gradient_rate,
            h.scattering_rate,
        )
    ]


def run_bound_states(cfg):
    sec = cfg["bound-states"]
    model = cfg.model()
    depth = model.lattice.depth_per_watt * model.lattice.power
    if not depth > 0:
        raise ConfigError("bound-states needs a positive lattice depth (lattice.power_w > 0)", "lattice.power_w")
    r = bound_states(depth, model.lattice.period, model.species, sec.points_per_period, sec.rel_tol)
    levels = r.levels_in_quanta
    k_q = r.depth / r.hbar_omega
    return [(i, e, bool(e < k_q)) for i, e in enumerate(levels)]


def run_fidelity(cfg):
    sec = cfg["fidelity"]
    model = cfg.model()
    _, res = _relaxed_along(model, model.lattice.power, sec.power_step_w, cfg["run"].tolerance)
    pert = SpinPerturbation(sec.ion_index, sec.relative_depth_change, sec.all_ions)
    t_us = np.linspace(0.0, sec.t_end_us, sec.samples)
    times = t_us * 1e-6 / model.scales.time_unit
    scan = fidelity_scan(res, model, pert, times)
    return list(zip(t_us, scan.contrast))


def run_fk_reference(cfg):
    sec = cfg["fk-reference"]
    params = FKChainParams(ion_count=sec.ion_count, wells=sec.wells)
    k_std = parse_grid(sec.strength_grid_std, "fk-reference.strength_grid_std")
    sweep = fk_reference(params, [params.from_standard(k) for k in k_std], sec.tolerance)
    return [(k, w, bool(im)) for k, w, im in zip(k_std, sweep.omega0, sweep.imaginary)]


RUNNERS = {
    "statics-sweep": run_statics_sweep,
    "hull": run_hull,
    "modes": run_modes,
    "transport": run_transport,
    "bath": run_bath,
    "pulse-heating": run_pulse_heating,
    "heating-rates": run_heating_rates,
    "bound-states": run_bound_states,
    "fidelity": run_fidelity,
    "fk-reference": run_fk_reference,
}


def render(subcommand: str, cfg: ExperimentConfig, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# ionlattice {__version__}\n")
    buf.write(f"# subcommand: {subcommand}\n")
    buf.write(f"# seed: {cfg['run'].seed}\n")
    buf.write(f"# {CONFIG_MARKER}\n")
    for line in cfg.to_ini().splitlines():
        if line:
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCHEMAS[subcommand])
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def run(subcommand: str, cfg: ExperimentConfig) -> str:
    if subcommand not in RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand}")
    return render(subcommand, cfg, RUNNERS[subcommand](cfg))


def _fail(code: int, kind: str, exc: Exception, **extra) -> int:
    record = {"error": kind, "message": str(exc), **{k: v for k, v in extra.items() if v is not None}}
    print(json.dumps(record, sort_keys=True, default=format_value), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionlattice", description="Ion chain in an optical lattice: batch experiments.")
    parser.add_argument("--version", action="version", version=f"ionlattice {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file, or a CSV previously written by this tool")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        p.add_argument("--out", help="output CSV path (default: run.output_path, else stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve(args.config, args.overrides)
        text = run(args.subcommand, cfg)
    except ConfigError as exc:
        return _fail(2, "config", exc, key=exc.key)
    except (ConvergenceError, IonLatticeError, np.linalg.LinAlgError) as exc:
        return _fail(3, "numerical", exc, parameter=getattr(exc, "parameter", None), value=getattr(exc, "value", None))
    except ValueError as exc:
        return _fail(2, "config", exc)
    out = args.out or cfg["run"].output_path
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
