"""Fixed-point (Picard) time stepping of the coupled Westervelt-Pennes system.

Each time step freezes the iterate ``(p*, theta*)`` at the new level, builds

    alpha = 1 - 2 k(theta*) p*,   r = q(theta*),   f1 = 2 k(theta*) (p*_t)^2 + sources,

solves the linear wave equation, then the heat equation with the absorbed
energy of the new ``p_t``, and repeats until the relative change of
``(p, theta)`` drops below the tolerance.  The previous time level is the
initial iterate.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .absorption import AbsorptionHistory, AbsorptionModel
from .energy import EnergyReport, acoustic_energies, heat_energy, lambda_F
from .errors import (
    DegeneracyError,
    InvalidParameterError,
    NonConvergenceError,
    ThermolensError,
)
from .grid import Grid
from .linear import (
    AcousticState,
    FrozenCoefficients,
    ThermalState,
    heat_rate,
    heat_step,
    initial_ptt,
    pressure_step,
)
from .manufactured import ManufacturedSolution, mms_forcing
from .materials import MediumParams, SoundSpeedLaw, clamp_count, k_of_theta, q_of_theta

log = logging.getLogger(__name__)

PROFILE_KINDS = ("zero", "gaussian", "sine", "mms")
SOURCE_KINDS = ("none", "gaussian", "arc")
RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class Profile:
    """Initial-data provider sampled on a grid."""

    kind: str = "zero"
    amplitude: float = 0.0
    center: tuple = ()
    width: float = 0.0
    modes: tuple = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidParameterError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "modes", tuple(int(m) for m in np.atleast_1d(self.modes)))
        if self.kind == "gaussian" and not self.width > 0:
            raise InvalidParameterError("gaussian profile needs width > 0")

    def sample(self, grid):
        if self.kind == "zero":
            return grid.zeros()
        if self.kind == "gaussian":
            if len(self.center) != grid.dims:
                raise InvalidParameterError("profile center must have one entry per axis")
            r2 = sum((x - c) ** 2 for x, c in zip(grid.coords(), self.center))
            return self.amplitude * np.exp(-r2 / self.width**2)
        if self.kind == "sine":
            modes = self.modes or (1,) * grid.dims
            return self.amplitude * grid.sine_mode(modes)
        raise InvalidParameterError("'mms' profiles are resolved from the manufactured solution")


@dataclass(frozen=True)
class AcousticSource:
    """Time-harmonic volume source ``A S(x) sin(2 pi f t)`` active for ``0 <= t <= duration``.

    ``gaussian`` places a Gaussian blob at ``center``.  ``arc`` (2D) is a
    Gaussian-thickened circular arc of ``radius`` around the focus ``center``,
    spanning ``+-aperture`` degrees about ``direction``.  The amplitude is
    ramped in over ``ramp_cycles`` periods with a ``sin^2`` taper.
    """

    kind: str = "none"
    amplitude: float = 0.0
    frequency: float = 0.0
    duration: float = np.inf
    center: tuple = ()
    width: float = 0.0
    radius: float = 0.0
    aperture: float = 60.0
    direction: float = 180.0
    ramp_cycles: float = 0.0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise InvalidParameterError(f"unknown source kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.kind != "none":
            if not self.frequency > 0:
                raise InvalidParameterError("source frequency must be > 0")
            if not self.width > 0:
                raise InvalidParameterError("source width must be > 0")
        if self.kind == "arc" and not self.radius > 0:
            raise InvalidParameterError("arc source needs radius > 0")

    def profile(self, grid):
        if self.kind == "none":
            return grid.zeros()
        if len(self.center) != grid.dims:
            raise InvalidParameterError("source center must have one entry per axis")
        offsets = [x - c for x, c in zip(grid.coords(), self.center)]
        if self.kind == "gaussian":
            return np.exp(-sum(o**2 for o in offsets) / self.width**2)
        if grid.dims != 2:
            raise InvalidParameterError("arc sources need a 2D grid")
        dist = np.hypot(offsets[0], offsets[1])
        angle = np.arctan2(offsets[1], offsets[0])
        rel = np.angle(np.exp(1j * (angle - np.deg2rad(self.direction))))
        inside = np.abs(rel) <= np.deg2rad(self.aperture)
        return np.exp(-((dist - self.radius) / self.width) ** 2) * inside

    def envelope(self, t):
        if self.kind == "none" or t < 0 or t > self.duration:
            return 0.0
        ramp = 1.0
        if self.ramp_cycles > 0:
            x = t * self.frequency / self.ramp_cycles
            ramp = np.sin(0.5 * np.pi * min(x, 1.0)) ** 2
        return self.amplitude * ramp * np.sin(2 * np.pi * self.frequency * t)


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    medium: MediumParams
    law: SoundSpeedLaw
    absorption: AbsorptionModel
    dt: float
    t_end: float
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    degeneracy_floor: float = 0.1
    p0: Profile = field(default_factory=Profile)
    p1: Profile = field(default_factory=Profile)
    theta0: Profile = field(default_factory=Profile)
    source: AcousticSource = field(default_factory=AcousticSource)
    output_every: int = 1
    freeze_temperature: bool = False
    gamma_fraction: float = 1.0
    gronwall_cap: float = np.inf
    mms: ManufacturedSolution = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("time.dt must be > 0")
        if not self.t_end > 0:
            raise InvalidParameterError("time.t_end must be > 0")
        if not self.picard_tol > 0:
            raise InvalidParameterError("picard.tol must be > 0")
        if int(self.picard_max_iter) < 1:
            raise InvalidParameterError("picard.max_iter must be >= 1")
        if not 0 < self.degeneracy_floor < 1:
            raise InvalidParameterError("diagnostics.degeneracy_floor must lie in (0, 1)")
        if int(self.output_every) < 1:
            raise InvalidParameterError("output.every must be >= 1")
        if not 0 < self.gamma_fraction <= 1:
            raise InvalidParameterError("diagnostics.gamma_fraction must lie in (0, 1]")
        uses_mms = "mms" in (self.p0.kind, self.p1.kind, self.theta0.kind)
        if uses_mms and self.mms is None:
            raise InvalidParameterError("'mms' initial data needs an [mms] section")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def with_grid(self, n, dt=None):
        """Copy on a grid with ``n`` interior nodes per axis (same extents)."""
        n = tuple(np.broadcast_to(np.atleast_1d(n), (self.grid.dims,)))
        return replace(self, grid=Grid(self.grid.extents, n), dt=self.dt if dt is None else dt)


# -- coefficient evaluation -------------------------------------------------


def _temperature_for_coefficients(cfg, theta):
    if cfg.freeze_temperature:
        return np.full(cfg.grid.shape, cfg.medium.Theta_a)
    return theta


def coupled_coefficients(cfg, p, pt, theta, f1_ext):
    """Frozen linear-problem coefficients for the iterate ``(p, p_t, theta)``."""
    th = _temperature_for_coefficients(cfg, theta)
    k = np.asarray(k_of_theta(cfg.medium, cfg.law, th))
    r = np.asarray(q_of_theta(cfg.law, th))
    return FrozenCoefficients(alpha=1 - 2 * k * p, r=r, f1=2 * k * pt * pt + f1_ext)


def check_nondegeneracy(p, theta, medium, law):
    """Pointwise minimum of ``1 - 2 k(theta) p``."""
    k = np.asarray(k_of_theta(medium, law, theta))
    return float(np.min(1 - 2 * k * np.asarray(p)))


def _nondegeneracy_location(p, theta, medium, law):
    alpha = 1 - 2 * np.asarray(k_of_theta(medium, law, theta)) * np.asarray(p)
    i = np.unravel_index(int(np.argmin(alpha)), alpha.shape)
    return float(alpha[i]), tuple(int(k) for k in i)


def make_forcing(cfg):
    """Callable ``t -> (f1_ext, f2_ext)`` from the config's source and manufactured solution."""
    grid = cfg.grid
    shape = cfg.source.profile(grid)
    zeros = grid.zeros()

    def forcing(t):
        f1 = cfg.source.envelope(t) * shape if cfg.source.kind != "none" else zeros
        f2 = zeros
        if cfg.mms is not None:
            m1, m2 = mms_forcing(
                cfg.mms, grid, cfg.medium, cfg.law, cfg.absorption, t, cfg.freeze_temperature
            )
            f1, f2 = f1 + m1, f2 + m2
        return f1, f2

    return forcing


def initial_fields(cfg):
    """``(p0, p1, theta0)`` sampled on the grid."""
    grid = cfg.grid
    out = []
    for which, prof in (("p0", cfg.p0), ("p1", cfg.p1), ("theta0", cfg.theta0)):
        if prof.kind == "mms":
            p, pt, _ = cfg.mms.pressure(grid, 0.0)
            th, _ = cfg.mms.temperature(grid, 0.0)
            out.append({"p0": p, "p1": pt, "theta0": th}[which])
        else:
            out.append(prof.sample(grid))
    return tuple(out)


# -- state -------------------------------------------------------------------


@dataclass
class Diagnostics:
    min_alpha: float = np.inf
    min_alpha_location: tuple = ()
    clamp_events: int = 0
    picard_iterations: list = field(default_factory=list)
    picard_residuals: list = field(default_factory=list)
    max_abs_p: np.ndarray = None
    steps: int = 0

    def record_alpha(self, value, location):
        if value < self.min_alpha:
            self.min_alpha = value
            self.min_alpha_location = location


@dataclass
class CoupledState:
    acoustic: AcousticState
    thermal: ThermalState
    pt_history: AbsorptionHistory
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def t(self):
        return self.acoustic.t


def initial_state(cfg, forcing=None, p0=None, p1=None, theta0=None):
    """Build the state at ``t = 0``; raises :class:`DegeneracyError` on inadmissible data."""
    forcing = forcing or make_forcing(cfg)
    d0, d1, dth = initial_fields(cfg)
    p0 = d0 if p0 is None else p0
    p1 = d1 if p1 is None else p1
    theta0 = dth if theta0 is None else theta0

    th = _temperature_for_coefficients(cfg, theta0)
    value, loc = _nondegeneracy_location(p0, th, cfg.medium, cfg.law)
    if value < cfg.degeneracy_floor:
        raise DegeneracyError(value, loc, cfg.degeneracy_floor, t=0.0)

    f1_ext, f2_ext = forcing(0.0)
    coeffs = coupled_coefficients(cfg, p0, p1, theta0, f1_ext)
    acoustic = AcousticState(p0, p1, initial_ptt(cfg.grid, p0, p1, coeffs, cfg.medium.b), 0.0)
    history = AbsorptionHistory(cfg.absorption)
    Q = history.evaluate(0.0, p1)
    history.push(0.0, p1)
    thermal = ThermalState(theta0, heat_rate(cfg.grid, theta0, cfg.medium, Q, f2_ext), 0.0)

    diag = Diagnostics(max_abs_p=np.abs(p0))
    diag.record_alpha(value, loc)
    diag.clamp_events += clamp_count(cfg.law, th)
    return CoupledState(acoustic, thermal, history, diag)


def _relative_change(grid, new, old):
    delta = grid.lp(new - old, 2)
    if delta == 0:
        return 0.0
    return delta / max(grid.lp(new, 2), RESIDUAL_FLOOR)


def picard_step(state, cfg, forcing=None):
    """Advance ``state`` by one time step.

    Returns ``(new_state, iterations, residuals)`` where ``residuals`` holds the
    relative change after every iteration.
    """
    forcing = forcing or make_forcing(cfg)
    grid, medium, dt = cfg.grid, cfg.medium, cfg.dt
    t_new = state.t + dt
    f1_ext, f2_ext = forcing(t_new)

    p_it, pt_it = state.acoustic.p, state.acoustic.pt
    th_it = state.thermal.theta
    residuals = []
    for it in range(1, int(cfg.picard_max_iter) + 1):
        coeffs = coupled_coefficients(cfg, p_it, pt_it, th_it, f1_ext)
        amin = float(coeffs.alpha.min())
        if amin < cfg.degeneracy_floor:
            i = np.unravel_index(int(np.argmin(coeffs.alpha)), grid.shape)
            raise DegeneracyError(amin, tuple(int(k) for k in i), cfg.degeneracy_floor, t=t_new)
        acoustic = pressure_step(grid, state.acoustic, coeffs, medium.b, dt)
        Q = state.pt_history.evaluate(t_new, acoustic.pt)
        thermal = heat_step(grid, state.thermal, medium, Q, f2_ext, dt)
        res = max(
            _relative_change(grid, acoustic.p, p_it),
            _relative_change(grid, thermal.theta, th_it),
        )
        residuals.append(res)
        p_it, pt_it, th_it = acoustic.p, acoustic.pt, thermal.theta
        if res < cfg.picard_tol:
            break
    else:
        raise NonConvergenceError(cfg.picard_max_iter, residuals[-1], t=t_new)

    state.pt_history.push(t_new, acoustic.pt)
    diag = state.diagnostics
    th = _temperature_for_coefficients(cfg, thermal.theta)
    value, loc = _nondegeneracy_location(acoustic.p, th, medium, cfg.law)
    diag.record_alpha(value, loc)
    if value < cfg.degeneracy_floor:
        raise DegeneracyError(value, loc, cfg.degeneracy_floor, t=t_new)
    diag.clamp_events += clamp_count(cfg.law, th)
    diag.picard_iterations.append(it)
    diag.picard_residuals.append(residuals)
    diag.max_abs_p = np.maximum(diag.max_abs_p, np.abs(acoustic.p))
    diag.steps += 1
    return CoupledState(acoustic, thermal, state.pt_history, diag), it, residuals


# -- reporting ---------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    t: float
    p: np.ndarray
    pt: np.ndarray
    ptt: np.ndarray
    theta: np.ndarray
    theta_t: np.ndarray

    @classmethod
    def of(cls, state):
        a, th = state.acoustic, state.thermal
        return cls(a.t, a.p.copy(), a.pt.copy(), a.ptt.copy(), th.theta.copy(), th.theta_t.copy())


def energy_report(cfg, snapshot, coeffs, previous=None):
    """Energy report at one output time; ``previous`` is ``(t, coeffs)`` of the last report."""
    grid = cfg.grid
    acoustic = AcousticState(snapshot.p, snapshot.pt, snapshot.ptt, snapshot.t)
    E0, E1, E2, D_p = acoustic_energies(grid, acoustic, coeffs, cfg.medium.b)
    E_th, D_th = heat_energy(grid, ThermalState(snapshot.theta, snapshot.theta_t, snapshot.t))
    if previous is None:
        Lam = 0.0
        F = grid.lp(coeffs.f1, 2) ** 2 + grid.weighted_grad_sq(coeffs.f1)
    else:
        t_prev, c_prev = previous
        Lam, F = lambda_F(grid, c_prev, coeffs, snapshot.t - t_prev)
    return EnergyReport(
        t=snapshot.t, E0=E0, E1=E1, E2=E2, D_p=D_p, E_theta=E_th, D_theta=D_th,
        Lambda=Lam, Fterm=F, min_alpha=float(coeffs.alpha.min()),
    )


@dataclass
class SimulationResult:
    snapshots: list
    reports: list
    diagnostics: Diagnostics
    state: CoupledState = None
    error: ThermolensError = None

    @property
    def ok(self):
        return self.error is None

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])


def run_simulation(cfg, forcing=None, p0=None, p1=None, theta0=None, progress=None):
    """Time loop from 0 to ``t_end``; errors end the run and are returned, not raised.

    ``p0``, ``p1``, ``theta0`` override the configured initial data.
    ``progress`` is an optional callable ``(step, n_steps, state)``.
    """
    forcing = forcing or make_forcing(cfg)
    snapshots, reports = [], []
    try:
        state = initial_state(cfg, forcing, p0, p1, theta0)
    except ThermolensError as exc:
        return SimulationResult([], [], Diagnostics(), None, exc)

    previous = None

    def record(st):
        nonlocal previous
        snap = Snapshot.of(st)
        f1_ext, _ = forcing(snap.t)
        coeffs = coupled_coefficients(cfg, snap.p, snap.pt, snap.theta, f1_ext)
        snapshots.append(snap)
        reports.append(energy_report(cfg, snap, coeffs, previous))
        previous = (snap.t, coeffs)

    record(state)
    n_steps = cfg.n_steps
    error = None
    for step in range(1, n_steps + 1):
        try:
            state, _, _ = picard_step(state, cfg, forcing)
        except ThermolensError as exc:
            log.warning("run stopped at step %d: %s", step, exc)
            error = exc
            break
        if step % cfg.output_every == 0 or step == n_steps:
            record(state)
        if progress is not None:
            progress(step, n_steps, state)
    return SimulationResult(snapshots, reports, state.diagnostics, state, error)


# -- ball diagnostics --------------------------------------------------------


@dataclass
class BallDiagnostics:
    gamma_observed: float
    R1_style_norm: float
    R2_style_norm: float
    k1: float
    margin: float  # 1 - 2 k1 gamma_observed
    gamma_cap: float  # gamma_fraction / (2 k1)
    within_cap: bool


def pressure_norm(grid, snapshots):
    """Discrete surrogate of the pressure solution-space norm (sup over snapshots)."""
    return (
        max(grid.norm(s.p, "H3viaGradLap") for s in snapshots)
        + max(grid.norm(s.pt, "H2viaLap") for s in snapshots)
        + max(grid.norm(s.ptt, "L2") for s in snapshots)
    )


def temperature_norm(grid, snapshots):
    return max(grid.norm(s.theta, "H2viaLap") for s in snapshots) + max(
        grid.norm(s.theta_t, "L2") for s in snapshots
    )


def ball_diagnostics(cfg, snapshots):
    if not snapshots:
        raise InvalidParameterError("ball diagnostics need a nonempty trajectory")
    grid = cfg.grid
    gamma = max(float(np.abs(s.p).max()) for s in snapshots)
    k1 = cfg.medium.k1
    cap = cfg.gamma_fraction / (2 * k1) if k1 > 0 else np.inf
    return BallDiagnostics(
        gamma_observed=gamma,
        R1_style_norm=pressure_norm(grid, snapshots),
        R2_style_norm=temperature_norm(grid, snapshots),
        k1=k1,
        margin=1 - 2 * k1 * gamma,
        gamma_cap=cap,
        within_cap=gamma <= cap,
    )
