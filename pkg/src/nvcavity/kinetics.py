"""Seven-level rate matrix, its steady state, and a time-integration cross-check.

The populations obey dp/dt = M p with a matrix M assembled from the
spontaneous rates and the optical driving rates. Level indexing (1-based in
names, 0-based in arrays): 1,2 ground spin states and 3,4 excited spin
states of the negative charge state, 5 its singlet, 6,7 ground and excited
neutral state. M is a proper generator matrix: off-diagonal entries are
non-negative and every column sums to zero, so the flow conserves the total
population and preserves the simplex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateSteadyState, NumericalFailure, StepFailure
from .model import DrivingRates, NVParameters, validate

__all__ = [
    "FULL",
    "NV_MINUS_ONLY",
    "Populations",
    "RateMatrix",
    "build_rate_matrix",
    "steady_state",
    "evolve",
    "integrate",
    "residual",
]

N_LEVELS = 7

# Matrix variants. The nv_minus_only variant freezes the charge state:
# ionization, recombination, every neutral-state channel, and the red
# absorption pump are all switched off, leaving a closed five-level system
# driven by the green pump and probed by stimulated emission only.
FULL = "full"
NV_MINUS_ONLY = "nv_minus_only"
_VARIANTS = (FULL, NV_MINUS_ONLY)

_SUM_TOL = 1e-12
_CLIP = 1e-9  # most negative component from_vector will forgive


@dataclass(frozen=True, eq=False)
class Populations:
    """Occupation fractions of the seven levels.

    Components live in [0, 1] and sum to one within 1e-12. Use from_vector
    for solver output; it clips roundoff-sized negatives and renormalizes.
    """

    p: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.p, dtype=float)
        if v.shape != (N_LEVELS,):
            raise ValueError(f"expected {N_LEVELS} populations, got shape {v.shape}")
        if v.min() < 0.0 or v.max() > 1.0 + _SUM_TOL:
            raise ValueError(f"populations outside [0, 1]: {v}")
        if abs(v.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"populations sum to {v.sum()!r}, not 1")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "p", v)

    @classmethod
    def from_vector(cls, v, clip: float = _CLIP) -> "Populations":
        v = np.asarray(v, dtype=float)
        if v.shape != (N_LEVELS,):
            raise ValueError(f"expected {N_LEVELS} populations, got shape {v.shape}")
        if v.min() < -clip:
            raise ValueError(f"component {v.min()!r} below -{clip}")
        v = np.where(v < 0.0, 0.0, v)
        total = v.sum()
        if total <= 0.0:
            raise ValueError("populations sum to zero, cannot normalize")
        return cls(v / total)

    def as_vector(self) -> np.ndarray:
        return np.array(self.p)

    # 1-based accessors matching the level names used throughout
    @property
    def p1(self):
        return float(self.p[0])

    @property
    def p2(self):
        return float(self.p[1])

    @property
    def p3(self):
        return float(self.p[2])

    @property
    def p4(self):
        return float(self.p[3])

    @property
    def p5(self):
        return float(self.p[4])

    @property
    def p6(self):
        return float(self.p[5])

    @property
    def p7(self):
        return float(self.p[6])


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator matrix of the population flow, plus which variant built it."""

    m: np.ndarray
    variant: str = FULL

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (N_LEVELS, N_LEVELS):
            raise ValueError(f"expected {N_LEVELS}x{N_LEVELS} matrix, got {m.shape}")
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @property
    def active_size(self) -> int:
        """Number of levels that can carry population in this variant."""
        return 5 if self.variant == NV_MINUS_ONLY else N_LEVELS


def build_rate_matrix(
    params: NVParameters, rates: DrivingRates, variant: str = FULL
) -> RateMatrix:
    """Assemble the generator matrix for one driving condition.

    Column j holds the outflow of level j+1 on the diagonal and its inflows
    to the other levels off the diagonal. In the nv_minus_only variant the
    charge state is frozen: levels 6 and 7 are left with no couplings at
    all and the pump consists of the green channel alone.

    Raises ValueError for parameter sets that fail validate() or for an
    unknown variant name.
    """
    problems = validate(params)
    if problems:
        raise ValueError("invalid parameters: " + "; ".join(problems))
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")

    k_stim = rates.k_stim
    if variant == NV_MINUS_ONLY:
        k_pump = rates.k_pump_g
        k_ion = 0.0
        k_ion_s = 0.0
        k_rec = 0.0
        k_pump0 = 0.0
        k_stim0 = 0.0
        r76 = 0.0
    else:
        k_pump = rates.k_pump_g + rates.k_pump_r
        k_ion = rates.k_ion_g + rates.k_ion_r
        k_ion_s = rates.k_ion_s
        k_rec = rates.k_rec_g + rates.k_rec_r
        k_pump0 = rates.k_pump_nv0
        k_stim0 = rates.k_stim_nv0
        r76 = params.r76

    m = np.zeros((N_LEVELS, N_LEVELS))

    # ground spin states (levels 1, 2)
    m[0, 0] = -k_pump
    m[0, 2] = params.r31 + k_stim
    m[0, 4] = params.r51
    m[0, 6] = 0.5 * k_rec
    m[1, 1] = -k_pump
    m[1, 3] = params.r42 + k_stim
    m[1, 4] = params.r52
    m[1, 6] = 0.5 * k_rec

    # excited spin states (levels 3, 4)
    m[2, 0] = k_pump
    m[2, 2] = -(params.r31 + params.r35 + k_ion + k_stim)
    m[3, 1] = k_pump
    m[3, 3] = -(params.r42 + params.r45 + k_ion + k_stim)

    # singlet (level 5)
    m[4, 2] = params.r35
    m[4, 3] = params.r45
    m[4, 4] = -(params.r51 + params.r52 + k_ion_s)

    # neutral state (levels 6, 7)
    m[5, 2] = k_ion
    m[5, 3] = k_ion
    m[5, 4] = k_ion_s
    m[5, 5] = -k_pump0
    m[5, 6] = r76 + k_stim0
    m[6, 5] = k_pump0
    m[6, 6] = -(r76 + k_stim0 + k_rec)

    return RateMatrix(m=m, variant=variant)


def steady_state(
    matrix: RateMatrix, tolerance: float = 1e-12, kernel_rtol: float = 1e-10
) -> Populations:
    """Unique stationary distribution of the rate matrix.

    Solves M p = 0 with the normalization constraint sum(p) = 1 by replacing
    the first (redundant) row of the active block with ones. The kernel
    dimension is checked first via singular values: anything other than one
    stationary direction raises DegenerateSteadyState. A solution whose
    residual infinity-norm exceeds tolerance times the largest matrix entry,
    or with a meaningfully negative component, raises NumericalFailure.

    In the nv_minus_only variant only the five negative-charge levels are
    solved; the inert levels 6, 7 come back exactly zero.
    """
    n = matrix.active_size
    a = matrix.m[:n, :n]
    scale = float(np.abs(a).max())
    if scale == 0.0:
        raise DegenerateSteadyState("rate matrix is identically zero")

    s = np.linalg.svd(a, compute_uv=False)
    kernel_dim = int(np.sum(s <= s[0] * kernel_rtol))
    if kernel_dim != 1:
        raise DegenerateSteadyState(
            f"stationary space is {kernel_dim}-dimensional, expected 1 "
            "(disconnected level groups under this driving)"
        )

    b = a.copy()
    b[0, :] = 1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0
    try:
        x = np.linalg.solve(b, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"normalized linear solve failed: {exc}") from exc

    resid = float(np.abs(a @ x).max())
    if not resid < tolerance * scale:
        raise NumericalFailure(
            f"steady-state residual {resid:.3e} exceeds {tolerance:.1e} * {scale:.3e}"
        )
    if x.min() < -_CLIP:
        raise NumericalFailure(f"steady state left the simplex: min component {x.min():.3e}")

    full = np.zeros(N_LEVELS)
    full[:n] = x
    return Populations.from_vector(full)


def integrate(
    matrix: RateMatrix,
    initial: Populations,
    duration: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """Integrate dp/dt = M p and return the raw trajectory (times, states).

    Uses an implicit stiff-capable scheme; the rates span roughly 1e6 to
    1e8 1/s so explicit integration is not an option. The total population
    must stay within 1e-9 of one along the whole trajectory, otherwise
    StepFailure is raised. states has one column per time point.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    y0 = initial.as_vector()
    if duration == 0.0:
        return np.array([0.0]), y0.reshape(N_LEVELS, 1)

    sol = solve_ivp(
        lambda t, y: matrix.m @ y,
        (0.0, duration),
        y0,
        method="Radau",
        jac=matrix.m,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        # the stepper can stall a few ulp short of the endpoint when the
        # remaining interval underflows; the interval is covered at that point
        covered = sol.t.size > 1 and sol.t[-1] >= duration * (1.0 - 1e-10)
        if not covered:
            raise StepFailure(f"integration failed: {sol.message}")
    drift = float(np.abs(sol.y.sum(axis=0) - 1.0).max())
    if drift > 1e-9:
        raise StepFailure(f"population sum drifted by {drift:.3e} during integration")
    return sol.t, sol.y


def evolve(
    matrix: RateMatrix,
    initial: Populations,
    duration: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> Populations:
    """Populations after evolving `initial` for `duration` seconds."""
    if duration == 0.0:
        return initial
    _, y = integrate(matrix, initial, duration, rtol=rtol, atol=atol)
    return Populations.from_vector(y[:, -1])


def residual(matrix: RateMatrix, p: Populations) -> np.ndarray:
    """Instantaneous dp/dt at p; zero (to tolerance) exactly at steady state."""
    return matrix.m @ p.p
