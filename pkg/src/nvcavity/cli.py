"""Config-driven command-line front end.

Five commands: ``steady`` (one operating point, printed), ``sweep-green`` and
``sweep-grid`` (CSV per the experiments module), ``xsection`` (emission
cross-section curve plus the 721 nm summary), and ``fit-peaks`` (multi-peak
fit report for a spectrum CSV).

No physics lives here. Every command is a thin composition of library calls;
the module's own work is unit conversion at the config boundary, file
placement, and error-to-exit-code mapping (ConfigError 2, SolverError 3,
IoError 4).

Config files are INI-style with sections [parameters], [geometry], [sweep],
[io]. Values are written in bench units (MHz, mW, uW, um, ppm or cm^-3);
each also has an SI-suffixed spelling, which is what the tool itself writes
when it echoes the effective config into CSV metadata. The echo sits between
'# config-begin' and '# config-end' lines, and feeding it back in as a config
file reproduces the run exactly.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, IoError, NVCavityError, SchemaMismatch, SolverError
from .experiments import (
    SweepConfig,
    default_green_sweep,
    default_grid_sweep,
    read_sweep_csv,
    sweep_green,
    sweep_grid,
    write_sweep_csv,
)
from .kinetics import FULL, NV_MINUS_ONLY, build_rate_matrix, steady_state
from .model import (
    GREEN_WAVELENGTH,
    RED_WAVELENGTH,
    CavityGeometry,
    LaserDrive,
    default_geometry,
    default_parameters,
    driving_rates,
    intensity,
    ppm_to_density,
    validate,
)
from .observables import GainContext, ObservablePoint
from .spectroscopy import (
    cross_section_at,
    default_emission_peaks,
    fit_peaks,
    fit_report,
    fl_cross_section,
    load_spectrum,
    synthesize_spectrum,
)

__all__ = ["RunConfig", "load_config", "run", "main", "emit_plot", "extract_embedded_config"]

COMMANDS = ("steady", "sweep-green", "sweep-grid", "xsection", "fit-peaks")

_RATE_FIELDS = ("r31", "r42", "r35", "r45", "r51", "r52", "r76")
_SIGMA_FIELDS = (
    "sigma_g", "sigma_r", "sigma_se",
    "sigma_I_g", "sigma_I_r", "sigma_I_s",
    "sigma_R_g", "sigma_R_r",
)

# key -> (field, scale-to-SI); None scale marks the ppm special case
_PARAM_KEYS = {}
for _f in _RATE_FIELDS:
    _PARAM_KEYS[f"{_f}_mhz"] = (_f, 1e6)
    _PARAM_KEYS[f"{_f}_hz"] = (_f, 1.0)
for _f in _SIGMA_FIELDS:
    _PARAM_KEYS[f"{_f}_m2"] = (_f, 1.0)
for _f in ("xi", "eta", "beta"):
    _PARAM_KEYS[_f] = (_f, 1.0)
_PARAM_KEYS["rho_nv_ppm"] = ("rho_nv", None)
_PARAM_KEYS["rho_nv_per_cm3"] = ("rho_nv", 1e6)
_PARAM_KEYS["rho_nv_per_m3"] = ("rho_nv", 1.0)
_PARAM_KEYS["sample_length_um"] = ("sample_length", 1e-6)
_PARAM_KEYS["sample_length_m"] = ("sample_length", 1.0)

_GEOM_KEYS = {
    "spot_radius_um": ("spot_radius", 1e-6),
    "spot_radius_m": ("spot_radius", 1.0),
    "field_enhancement_F": ("field_enhancement_F", 1.0),
    "green_transmission": ("green_transmission", 1.0),
}

_SWEEP_LIST_KEYS = {
    "green_powers_mw": ("green_powers", 1e-3),
    "green_powers_w": ("green_powers", 1.0),
    "red_powers_mw": ("red_powers", 1e-3),
    "red_powers_uw": ("red_powers", 1e-6),
    "red_powers_w": ("red_powers", 1.0),
}

_IO_KEYS = ("output_dir", "formats")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Effective run configuration, already converted to SI."""

    params: object
    geometry: CavityGeometry
    green_powers: tuple | None
    red_powers: tuple | None
    variant: str
    output_dir: str
    formats: tuple


def _parse_float(section, key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from exc


def _parse_list(section, key, raw):
    tokens = raw.replace(",", " ").split()
    if not tokens:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_parse_float(section, key, tok) for tok in tokens)


def load_config(path=None) -> RunConfig:
    """Parse an INI config file into SI values; None gives pure defaults.

    Unknown sections or keys are rejected, as are two spellings of the same
    field. Parameter overrides go through model.validate.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"config {path} does not parse: {exc}") from exc

    known_sections = {"parameters", "geometry", "sweep", "io"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    param_overrides = {}
    seen_fields = {}
    if parser.has_section("parameters"):
        for key, raw in parser.items("parameters"):
            if key not in _PARAM_KEYS:
                raise ConfigError(f"[parameters] unknown key {key!r}")
            field, scale = _PARAM_KEYS[key]
            if field in seen_fields:
                raise ConfigError(
                    f"[parameters] {key!r} and {seen_fields[field]!r} set the same field"
                )
            seen_fields[field] = key
            value = _parse_float("parameters", key, raw)
            param_overrides[field] = (
                ppm_to_density(value) if scale is None else value * scale
            )
    params = default_parameters().with_overrides(**param_overrides)
    problems = validate(params)
    if problems:
        raise ConfigError("invalid parameters: " + "; ".join(problems))

    geom_overrides = {}
    geom_seen = {}
    if parser.has_section("geometry"):
        for key, raw in parser.items("geometry"):
            if key not in _GEOM_KEYS:
                raise ConfigError(f"[geometry] unknown key {key!r}")
            field, scale = _GEOM_KEYS[key]
            if field in geom_seen:
                raise ConfigError(
                    f"[geometry] {key!r} and {geom_seen[field]!r} set the same field"
                )
            geom_seen[field] = key
            geom_overrides[field] = _parse_float("geometry", key, raw) * scale
    try:
        geometry = dataclasses.replace(default_geometry(), **geom_overrides)
    except ValueError as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc

    green = red = None
    variant = FULL
    sweep_seen = {}
    if parser.has_section("sweep"):
        for key, raw in parser.items("sweep"):
            if key == "variant":
                if raw not in (FULL, NV_MINUS_ONLY):
                    raise ConfigError(f"[sweep] unknown variant {raw!r}")
                variant = raw
                continue
            if key not in _SWEEP_LIST_KEYS:
                raise ConfigError(f"[sweep] unknown key {key!r}")
            field, scale = _SWEEP_LIST_KEYS[key]
            if field in sweep_seen:
                raise ConfigError(
                    f"[sweep] {key!r} and {sweep_seen[field]!r} set the same field"
                )
            sweep_seen[field] = key
            values = tuple(v * scale for v in _parse_list("sweep", key, raw))
            if field == "green_powers":
                green = values
            else:
                red = values

    output_dir = "."
    formats = ("csv",)
    if parser.has_section("io"):
        for key, raw in parser.items("io"):
            if key not in _IO_KEYS:
                raise ConfigError(f"[io] unknown key {key!r}")
            if key == "output_dir":
                output_dir = raw.strip()
            else:
                tokens = tuple(tok for tok in raw.replace(",", " ").split())
                bad = [t for t in tokens if t not in ("csv", "svg")]
                if bad:
                    raise ConfigError(f"[io] formats: unknown format(s) {bad}")
                formats = tokens or formats

    return RunConfig(
        params=params,
        geometry=geometry,
        green_powers=green,
        red_powers=red,
        variant=variant,
        output_dir=output_dir,
        formats=formats,
    )


def _echo_lines(config: RunConfig, greens, reds) -> list:
    """Effective config as INI text, SI spellings, exact repr floats.

    Omits [io]: output placement is plumbing, not part of what was computed.
    """
    p, g = config.params, config.geometry
    lines = ["config-begin", f"version = {__version__}", "[parameters]"]
    for f in _RATE_FIELDS:
        lines.append(f"{f}_hz = {getattr(p, f)!r}")
    for f in _SIGMA_FIELDS:
        lines.append(f"{f}_m2 = {getattr(p, f)!r}")
    for f in ("xi", "eta", "beta"):
        lines.append(f"{f} = {getattr(p, f)!r}")
    lines.append(f"rho_nv_per_m3 = {p.rho_nv!r}")
    lines.append(f"sample_length_m = {p.sample_length!r}")
    lines.append("[geometry]")
    lines.append(f"spot_radius_m = {g.spot_radius!r}")
    lines.append(f"field_enhancement_F = {g.field_enhancement_F!r}")
    lines.append(f"green_transmission = {g.green_transmission!r}")
    lines.append("[sweep]")
    lines.append("green_powers_w = " + ",".join(repr(v) for v in greens))
    lines.append("red_powers_w = " + ",".join(repr(v) for v in reds))
    lines.append(f"variant = {config.variant}")
    lines.append("config-end")
    return lines


def extract_embedded_config(csv_path) -> str:
    """Pull the config-begin/config-end block back out of a CSV's metadata."""
    _, metadata = read_sweep_csv(csv_path)
    try:
        start = metadata.index("config-begin")
        stop = metadata.index("config-end")
    except ValueError as exc:
        raise SchemaMismatch(f"{csv_path} has no embedded config block") from exc
    body = [line for line in metadata[start + 1 : stop] if not line.startswith("version =")]
    return "\n".join(body) + "\n"


def _resolve_sweep(config: RunConfig, command: str) -> SweepConfig:
    if command == "sweep-green":
        fallback = default_green_sweep()
    else:
        fallback = default_grid_sweep()
    return SweepConfig(
        green_powers=config.green_powers or fallback.green_powers,
        red_powers=config.red_powers or fallback.red_powers,
        geometry=config.geometry,
        params=config.params,
        variant=config.variant,
    )


def _out_path(config: RunConfig, name: str) -> Path:
    directory = Path(config.output_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output dir {directory}: {exc}") from exc
    return directory / name


def _print_steady(config: RunConfig, overrides, out):
    green_w = float(overrides.get("green_mw", 50.0)) * 1e-3
    red_w = float(overrides.get("red_uw", 67.0)) * 1e-6
    ig = intensity(LaserDrive(GREEN_WAVELENGTH, green_w), config.geometry, "green")
    ir = intensity(LaserDrive(RED_WAVELENGTH, red_w), config.geometry, "red")

    def solve(i_red):
        rates = driving_rates(config.params, ig, i_red)
        return steady_state(build_rate_matrix(config.params, rates, config.variant))

    reference = solve(0.0)
    populations = solve(ir) if red_w > 0 else reference
    point = ObservablePoint.from_populations(
        green_w, red_w, populations, reference,
        GainContext.from_parts(config.params, config.geometry),
    )
    print(f"green_power_mW = {green_w * 1e3!r}", file=out)
    print(f"red_power_uW = {red_w * 1e6!r}", file=out)
    for i in range(7):
        print(f"p{i + 1} = {float(populations.p[i])!r}", file=out)
    print(f"f_amp = {point.f_amp!r}", file=out)
    print(f"f_sp = {point.f_sp!r}", file=out)
    print(f"p_minus_excited = {point.p_minus_excited!r}", file=out)
    print(f"p_zero_excited = {point.p_zero_excited!r}", file=out)
    print(f"nv_minus_total = {point.nv_minus_total!r}", file=out)
    print(f"nv_zero_total = {point.nv_zero_total!r}", file=out)


def _cmd_sweep(config: RunConfig, command: str, out):
    sweep = _resolve_sweep(config, command)
    meta = _echo_lines(config, sweep.green_powers, sweep.red_powers)
    if command == "sweep-green":
        rows = sweep_green(sweep)
        csv_path = _out_path(config, "sweep_green.csv")
        plot_kinds = ("observables", "populations")
    else:
        rows = sweep_grid(sweep).rows
        csv_path = _out_path(config, "sweep_grid.csv")
        plot_kinds = ("cuts",)
    write_sweep_csv(csv_path, rows, meta)
    print(f"wrote {csv_path}", file=out)
    if "svg" in config.formats:
        for kind in plot_kinds:
            print(f"wrote {emit_plot(csv_path, kind)}", file=out)


def _cmd_xsection(config: RunConfig, overrides, out):
    source = overrides.get("input")
    if source:
        spectrum = load_spectrum(source)
        label = str(source)
    else:
        spectrum = synthesize_spectrum(
            default_emission_peaks(), 600e-9, 850e-9, 2000, normalized=True
        )
        label = "builtin-eight-band"
    n = float(overrides.get("n", 2.4))
    gamma = float(overrides.get("gamma_mhz", 63.93)) * 1e6
    sigma = fl_cross_section(spectrum, refractive_index=n, gamma=gamma)
    at_721 = cross_section_at((spectrum.wavelengths, sigma), 721e-9)
    csv_path = _out_path(config, "xsection.csv")
    lines = [
        "# source = " + label,
        f"# refractive_index = {n!r}",
        f"# gamma_hz = {gamma!r}",
        f"# sigma_721nm_m2 = {at_721!r}",
        "wavelength_nm,cross_section_m2",
    ]
    for wl, value in zip(spectrum.wavelengths, sigma):
        lines.append(f"{float(wl) * 1e9!r},{float(value)!r}")
    try:
        with open(csv_path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {csv_path}: {exc}") from exc
    print(f"wrote {csv_path}", file=out)
    print(f"sigma_721nm_m2 = {at_721!r}", file=out)


def _cmd_fit_peaks(config: RunConfig, overrides, out):
    source = overrides.get("input")
    if not source:
        raise ConfigError("fit-peaks needs --input pointing at a spectrum CSV")
    spectrum = load_spectrum(source)
    result = fit_peaks(
        spectrum,
        default_emission_peaks(),
        max_iter=int(overrides.get("max_iter", 200)),
    )
    report = fit_report(result)
    json_path = _out_path(config, "fit_peaks.json")
    try:
        with open(json_path, "w") as fh:
            fh.write(report + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {json_path}: {exc}") from exc
    print(report, file=out)


def _dispatch(command, config_path, overrides, out):
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    config = load_config(config_path)
    if "output_dir" in overrides:
        config = dataclasses.replace(config, output_dir=overrides["output_dir"])
    if command == "steady":
        _print_steady(config, overrides, out)
    elif command in ("sweep-green", "sweep-grid"):
        _cmd_sweep(config, command, out)
    elif command == "xsection":
        _cmd_xsection(config, overrides, out)
    else:
        _cmd_fit_peaks(config, overrides, out)


def run(command, config_path=None, overrides=None, out=None, err=None) -> int:
    """Execute one command; returns the process exit status.

    Errors are reported as one machine-readable JSON line on err and mapped
    to exit codes: ConfigError 2, SolverError 3, IoError 4.
    """
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        _dispatch(command, config_path, dict(overrides or {}), out)
    except NVCavityError as exc:
        code = _exit_code(exc)
        print(_error_line(type(exc).__name__, code, exc), file=err)
        return code
    except ValueError as exc:
        # library precondition failures on user-supplied values
        print(_error_line("ConfigError", 2, exc), file=err)
        return 2
    return 0


def _exit_code(exc) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, SolverError):
        return 3
    if isinstance(exc, IoError):
        return 4
    return 3


def _error_line(name, code, exc) -> str:
    message = str(exc).replace("\n", " ")
    return json.dumps({"error": name, "exit_code": code, "message": message})


_PLOT_REQUIREMENTS = {
    "observables": ("green_power_mW", "f_amp", "f_sp"),
    "cuts": ("green_power_mW", "red_power_mW", "f_amp"),
    "populations": (
        "green_power_mW",
        "p_minus_excited",
        "p_zero_excited",
        "nv_minus_total",
        "nv_zero_total",
    ),
}


def emit_plot(csv_path, kind, output_path=None):
    """Render a CSV produced by this tool to a deterministic SVG file.

    kinds: 'observables' (two panels, f_amp and f_sp vs green power, with the
    factor-1 reference line), 'cuts' (f_amp vs red power, one curve per green
    power), 'populations' (excited fractions and charge totals vs green
    power). Raises SchemaMismatch when the CSV lacks the needed columns or
    has no data rows.
    """
    if kind not in _PLOT_REQUIREMENTS:
        raise ValueError(f"unknown plot kind {kind!r}")
    columns, _ = read_sweep_csv(csv_path)
    missing = [name for name in _PLOT_REQUIREMENTS[kind] if name not in columns]
    if missing:
        raise SchemaMismatch(f"{csv_path} lacks column(s) {missing} for {kind!r}")
    first = columns[_PLOT_REQUIREMENTS[kind][0]]
    if first.size == 0:
        raise SchemaMismatch(f"{csv_path} has no data rows")

    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    target = Path(output_path) if output_path else Path(csv_path).with_suffix(f".{kind}.svg")
    # fixed hashsalt and stripped Date keep the SVG byte-stable across runs
    with plt.rc_context({"svg.hashsalt": "nvcavity", "svg.fonttype": "path"}):
        if kind == "observables":
            fig, (ax_amp, ax_sp) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 6.0))
            green = columns["green_power_mW"]
            ax_amp.plot(green, columns["f_amp"], color="tab:red")
            ax_amp.axhline(1.0, color="black", linestyle=":")
            ax_amp.set_ylabel("amplification factor")
            ax_sp.plot(green, columns["f_sp"], color="tab:orange")
            ax_sp.axhline(1.0, color="black", linestyle=":")
            ax_sp.set_ylabel("spontaneous factor")
            ax_sp.set_xlabel("green pump power (mW)")
            ax_sp.set_xscale("log")
        elif kind == "cuts":
            fig, ax = plt.subplots(figsize=(6.0, 4.5))
            green = columns["green_power_mW"]
            red = columns["red_power_mW"]
            famp = columns["f_amp"]
            for value in sorted(set(green.tolist())):
                mask = green == value
                order = red[mask].argsort()
                ax.plot(
                    red[mask][order],
                    famp[mask][order],
                    marker="o",
                    label=f"{value:g} mW green",
                )
            ax.axhline(1.0, color="black", linestyle=":")
            ax.set_xlabel("red seed power (mW)")
            ax.set_ylabel("amplification factor")
            ax.legend()
        else:
            fig, ax = plt.subplots(figsize=(6.0, 4.5))
            green = columns["green_power_mW"]
            for name in _PLOT_REQUIREMENTS["populations"][1:]:
                ax.plot(green, columns[name], label=name)
            ax.set_xscale("log")
            ax.set_xlabel("green pump power (mW)")
            ax.set_ylabel("population fraction")
            ax.legend()
        fig.tight_layout()
        try:
            fig.savefig(target, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise IoError(f"cannot write {target}: {exc}") from exc
        finally:
            plt.close(fig)
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nvcavity",
        description="Seven-level photokinetics: steady states, sweeps, spectra.",
    )
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--output-dir", default=None, help="override [io] output_dir")
    sub = parser.add_subparsers(dest="command", required=True)

    steady = sub.add_parser("steady", help="print one operating point")
    steady.add_argument("--green-mw", type=float, default=50.0)
    steady.add_argument("--red-uw", type=float, default=67.0)

    sub.add_parser("sweep-green", help="observables along the green power axis")
    sub.add_parser("sweep-grid", help="observables on the green x red grid")

    xsection = sub.add_parser("xsection", help="emission cross-section curve")
    xsection.add_argument("--input", default=None, help="spectrum CSV (default: builtin model)")
    xsection.add_argument("--n", type=float, default=2.4, help="refractive index")
    xsection.add_argument("--gamma-mhz", type=float, default=63.93)

    fit = sub.add_parser("fit-peaks", help="multi-peak fit of a spectrum CSV")
    fit.add_argument("--input", required=True, help="spectrum CSV")
    fit.add_argument("--max-iter", type=int, default=200)

    args = parser.parse_args(argv)
    overrides = {}
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    for name in ("green_mw", "red_uw", "input", "n", "gamma_mhz", "max_iter"):
        if hasattr(args, name) and getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    return run(args.command, config_path=args.config, overrides=overrides)


if __name__ == "__main__":
    sys.exit(main())
