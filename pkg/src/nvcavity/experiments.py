"""Power sweeps over the pump/seed plane and the gain-suppression law fit.

Connects the solver stack to the quantities actually plotted: curves of the
observables against green pump power at fixed seed power, full green x red
grids, constant-green line cuts, and the inverse-square law fitted to the
decay of the amplification factor with seed power. Powers are Watts inside
this module; milliwatt formatting exists only in the CSV boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._lm import levenberg_marquardt
from .errors import IoError, NotInGrid, SolverError
from .kinetics import FULL, NV_MINUS_ONLY, build_rate_matrix, steady_state
from .model import (
    GREEN_WAVELENGTH,
    RED_WAVELENGTH,
    CavityGeometry,
    LaserDrive,
    NVParameters,
    default_geometry,
    default_parameters,
    driving_rates,
    intensity,
)
from .observables import GainContext, ObservablePoint

__all__ = [
    "SweepConfig",
    "GridRow",
    "GridResult",
    "LawFit",
    "default_green_sweep",
    "default_grid_sweep",
    "sweep_green",
    "sweep_grid",
    "line_cut",
    "fit_inverse_square",
    "SWEEP_COLUMNS",
    "write_sweep_csv",
    "read_sweep_csv",
]

STEADY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SweepConfig:
    """One sweep request: power axes plus the physical configuration."""

    green_powers: tuple
    red_powers: tuple
    geometry: CavityGeometry = field(default_factory=CavityGeometry)
    params: NVParameters = field(default_factory=default_parameters)
    variant: str = FULL

    def __post_init__(self):
        for name in ("green_powers", "red_powers"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} must not be empty")
            if min(values) < 0:
                raise ValueError(f"{name} must be non-negative")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, values)
        if self.variant not in (FULL, NV_MINUS_ONLY):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class GridRow:
    """One grid pair; either an evaluated point or the error that stopped it."""

    green_power: float
    red_power: float
    point: ObservablePoint | None = None
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    """All grid rows in green-major order plus reproducibility metadata."""

    rows: tuple
    metadata: dict


@dataclass(frozen=True)
class LawFit:
    """Result of the inverse-square suppression fit f = 1 + A/(1 + P/B)^2.

    b_unconstrained marks the degenerate all-flat input, where A = 0 is exact
    and B carries no information.
    """

    amplitude_A: float
    scale_B: float
    residual_norm: float
    converged: bool
    b_unconstrained: bool = False

    def __post_init__(self):
        if self.converged:
            if self.amplitude_A < 0:
                raise ValueError("converged fit must have A >= 0")
            if self.scale_B <= 0:
                raise ValueError("converged fit must have B > 0")


def default_green_sweep() -> SweepConfig:
    """Pump sweep behind the two-panel observable figure.

    1 to 150 mW of green in 150 log-spaced points against the 67 uW seed.
    """
    return SweepConfig(
        green_powers=tuple(np.geomspace(1e-3, 150e-3, 150)),
        red_powers=(67e-6,),
    )


def default_grid_sweep() -> SweepConfig:
    """Seed-power grid at the four standard pump cuts (25/50/75/100 mW)."""
    return SweepConfig(
        green_powers=(25e-3, 50e-3, 75e-3, 100e-3),
        red_powers=(1e-3, 5e-3, 15e-3, 47e-3),
    )


def _intensities(config: SweepConfig, green_w: float, red_w: float):
    ig = intensity(LaserDrive(GREEN_WAVELENGTH, green_w), config.geometry, "green")
    ir = intensity(LaserDrive(RED_WAVELENGTH, red_w), config.geometry, "red")
    return ig, ir


def _solve_point(config: SweepConfig, ig: float, ir: float):
    rates = driving_rates(config.params, ig, ir)
    matrix = build_rate_matrix(config.params, rates, config.variant)
    return steady_state(matrix, tolerance=STEADY_TOLERANCE)


def _observe(config: SweepConfig, ctx: GainContext, green_w, red_w, reference=None):
    """Evaluate one operating point; reference is the cached green-only solve."""
    ig, ir = _intensities(config, green_w, red_w)
    if reference is None:
        reference = _solve_point(config, ig, 0.0)
    with_red = _solve_point(config, ig, ir) if red_w > 0 else reference
    return ObservablePoint.from_populations(green_w, red_w, with_red, reference, ctx)


def sweep_green(config: SweepConfig) -> list:
    """Observable curve along the green-power axis at one fixed seed power.

    Each point pairs the full solve with a zero-seed reference solve at the
    same pump, which feeds the spontaneous-emission ratio. Zero pump is
    rejected up front because the stationary state is not unique there.
    """
    if len(config.red_powers) != 1:
        raise ValueError("sweep_green needs exactly one red power")
    if config.green_powers[0] <= 0:
        raise ValueError("sweep_green needs strictly positive green powers")
    ctx = GainContext.from_parts(config.params, config.geometry)
    red_w = config.red_powers[0]
    return [_observe(config, ctx, g, red_w) for g in config.green_powers]


def sweep_grid(config: SweepConfig) -> GridResult:
    """Evaluate the full green x red Cartesian product, green-major order.

    A point that fails to solve is recorded in its row with the error text;
    the rest of the grid still completes. The zero-seed reference solve is
    shared across the red axis at each green power.
    """
    ctx = GainContext.from_parts(config.params, config.geometry)
    rows = []
    for green_w in config.green_powers:
        reference = None
        ref_error = None
        try:
            ig, _ = _intensities(config, green_w, 0.0)
            reference = _solve_point(config, ig, 0.0)
        except SolverError as exc:
            ref_error = f"{type(exc).__name__}: {exc}"
        for red_w in config.red_powers:
            if reference is None:
                rows.append(GridRow(green_w, red_w, error=ref_error))
                continue
            try:
                point = _observe(config, ctx, green_w, red_w, reference=reference)
                rows.append(GridRow(green_w, red_w, point=point))
            except SolverError as exc:
                rows.append(GridRow(green_w, red_w, error=f"{type(exc).__name__}: {exc}"))
    metadata = {
        "version": __version__,
        "variant": config.variant,
        "steady_tolerance": STEADY_TOLERANCE,
        "green_powers_w": list(config.green_powers),
        "red_powers_w": list(config.red_powers),
        "field_enhancement_F": config.geometry.field_enhancement_F,
    }
    return GridResult(rows=tuple(rows), metadata=metadata)


def line_cut(grid: GridResult, green_power: float) -> list:
    """(red_power, f_amp) pairs of one constant-green slice, ordered by red.

    The requested power must be a grid value (matched to 1e-12 relative);
    rows that failed to solve are omitted from the cut.
    """
    matched = [
        row
        for row in grid.rows
        if abs(row.green_power - green_power) <= 1e-12 * max(abs(green_power), 1e-300)
    ]
    if not matched:
        raise NotInGrid(f"green power {green_power!r} W is not on the grid")
    pairs = [(row.red_power, row.point.f_amp) for row in matched if row.point is not None]
    return sorted(pairs)


def fit_inverse_square(points, max_iter: int = 200, tol: float = 1e-12) -> LawFit:
    """Least-squares fit of f_amp(P) = 1 + A / (1 + P/B)^2.

    The form is finite at P = 0, falls off as P^-2, and asymptotes to 1.
    Needs at least three points with f_amp >= 1. A flat input (every value
    exactly 1) is returned as A = 0 with b_unconstrained set instead of
    attempting a fit.
    """
    pts = sorted((float(p), float(f)) for p, f in points)
    if len(pts) < 3:
        raise ValueError("need at least three points")
    power = np.array([p for p, _ in pts])
    famp = np.array([f for _, f in pts])
    if famp.min() < 1.0:
        raise ValueError("f_amp below 1 is outside the model family")

    if np.all(famp == 1.0):
        b0 = float(power[power > 0][0]) if np.any(power > 0) else 1e-3
        return LawFit(
            amplitude_A=0.0,
            scale_B=b0,
            residual_norm=0.0,
            converged=True,
            b_unconstrained=True,
        )

    a0 = float(famp.max() - 1.0)
    # quarter-height crossing sits at P = B for this law
    below = power[famp - 1.0 <= a0 / 4.0]
    b0 = float(below[0]) if below.size and below[0] > 0 else float(max(power.max(), 1e-6))

    def residual_jac(x):
        a, b = x
        u = 1.0 + power / b
        model = 1.0 + a / u**2
        jac = np.column_stack((1.0 / u**2, 2.0 * a * power / (b**2 * u**3)))
        return model - famp, jac

    def project(x):
        return np.array([max(x[0], 0.0), max(x[1], 1e-12)])

    x, res_norm, converged, _ = levenberg_marquardt(
        residual_jac, np.array([a0, b0]), max_iter=max_iter, tol=tol, project=project
    )
    return LawFit(
        amplitude_A=float(x[0]),
        scale_B=float(x[1]),
        residual_norm=res_norm,
        converged=converged,
    )


SWEEP_COLUMNS = (
    "green_power_mW",
    "red_power_mW",
    "f_amp",
    "f_sp",
    "p_minus_excited",
    "p_zero_excited",
    "nv_minus_total",
    "nv_zero_total",
)


def _format_row(point: ObservablePoint) -> str:
    cells = (
        point.green_power * 1e3,
        point.red_power * 1e3,
        point.f_amp,
        point.f_sp,
        point.p_minus_excited,
        point.p_zero_excited,
        point.nv_minus_total,
        point.nv_zero_total,
    )
    return ",".join(repr(float(c)) for c in cells)


def write_sweep_csv(path, rows, metadata_lines=()) -> None:
    """Write sweep rows as CSV with a '#' metadata block on top.

    rows may hold ObservablePoint or GridRow items; grid rows that carry an
    error become '#'-prefixed comment lines in their grid position, keeping
    the data columns purely numeric. Floats are written in shortest
    round-trip form, so identical inputs give byte-identical files.
    """
    lines = [f"# {text}".rstrip() for text in metadata_lines]
    lines.append(",".join(SWEEP_COLUMNS))
    for row in rows:
        if isinstance(row, GridRow):
            if row.error is not None:
                lines.append(
                    f"# error at green_mW={row.green_power * 1e3!r} "
                    f"red_mW={row.red_power * 1e3!r}: {row.error}"
                )
                continue
            row = row.point
        lines.append(_format_row(row))
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_sweep_csv(path):
    """Read a CSV written by this package: (columns dict, metadata lines).

    Metadata is returned with the '#' prefix stripped. Column names come
    from the first non-comment line; every later line must be numeric with
    the same arity.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    metadata = []
    header = None
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            metadata.append(line[2:] if line.startswith("# ") else line[1:])
            continue
        if header is None:
            header = [cell.strip() for cell in line.split(",")]
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise IoError(f"row arity {len(cells)} does not match header in {path}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise IoError(f"malformed row in {path}: {line!r}") from exc
    if header is None:
        raise IoError(f"{path} has no header line")
    data = np.array(rows) if rows else np.empty((0, len(header)))
    columns = {name: data[:, i].copy() for i, name in enumerate(header)}
    return columns, metadata
