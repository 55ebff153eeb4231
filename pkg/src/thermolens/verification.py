"""Closed-form modal oracles, convergence studies and the continuous-dependence probe."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .absorption import lipschitz_probe
from .coupled import (
    initial_fields,
    make_forcing,
    pressure_norm,
    run_simulation,
    temperature_norm,
)
from .errors import InvalidParameterError
from .linear import AcousticState, FrozenCoefficients, ThermalState, heat_step, initial_ptt, pressure_step
from .manufactured import ManufacturedSolution, TimeEnvelope, mms_forcing

__all__ = [
    "ManufacturedSolution",
    "TimeEnvelope",
    "mms_forcing",
    "modal_oracle_damped_wave",
    "modal_oracle_heat",
    "fit_order",
    "convergence_study",
    "continuous_dependence_probe",
    "modal_heat_run",
    "modal_wave_run",
    "sampled_lipschitz_ratios",
    "lensing_comparison",
]

log = logging.getLogger(__name__)


def modal_oracle_damped_wave(kappa_h, c2, b, p0_amp, p1_amp, t):
    """Exact amplitude ``(p, p_t)`` of ``p'' + b kappa p' + c2 kappa p = 0``.

    Handles the complex-conjugate, repeated and distinct real root branches.
    ``t`` may be complex (useful for complex-step differentiation).
    """
    if not kappa_h > 0:
        raise InvalidParameterError("kappa_h must be > 0")
    damping = b * kappa_h
    stiffness = c2 * kappa_h
    disc = damping * damping - 4 * stiffness
    sigma = 0.5 * damping
    if abs(disc) <= 1e-12 * (damping * damping + 4 * stiffness):
        lin = p1_amp + sigma * p0_amp
        decay = np.exp(-sigma * t)
        p = (p0_amp + lin * t) * decay
        pt = (lin - sigma * (p0_amp + lin * t)) * decay
        return p, pt
    if disc < 0:
        w = 0.5 * np.sqrt(-disc)
        A, B = p0_amp, (p1_amp + sigma * p0_amp) / w
        decay = np.exp(-sigma * t)
        cos, sin = np.cos(w * t), np.sin(w * t)
        p = decay * (A * cos + B * sin)
        pt = decay * ((B * w - sigma * A) * cos - (A * w + sigma * B) * sin)
        return p, pt
    # distinct real roots; the product form avoids cancellation in the small root
    big = -0.5 * (damping + np.sqrt(disc))
    small = stiffness / big
    c_small = (p1_amp - big * p0_amp) / (small - big)
    c_big = p0_amp - c_small
    e_small, e_big = np.exp(small * t), np.exp(big * t)
    return c_small * e_small + c_big * e_big, small * c_small * e_small + big * c_big * e_big


def modal_oracle_heat(kappa_h, medium, amp0, t):
    """Amplitude of a Dirichlet mode of the Pennes equation with zero ambient temperature."""
    if not kappa_h > 0:
        raise InvalidParameterError("kappa_h must be > 0")
    rate = (medium.kappa_a * kappa_h + medium.perfusion) / medium.heat_capacity
    return amp0 * np.exp(-rate * t)


def modal_heat_run(grid, medium, amp0, dt, t_end, modes=None):
    """Run the heat stepper on a single sine mode; returns the relative L2 error at ``t_end``."""
    if medium.Theta_a != 0:
        medium = replace(medium, Theta_a=0.0)
    modes = modes or (1,) * grid.dims
    shape = grid.sine_mode(modes)
    kappa = grid.mode_eigenvalue(modes)
    theta = amp0 * shape
    state = ThermalState(theta, -(medium.kappa_a * kappa + medium.perfusion) / medium.heat_capacity * theta)
    zero = grid.zeros()
    for _ in range(int(round(t_end / dt))):
        state = heat_step(grid, state, medium, zero, zero, dt)
    exact = modal_oracle_heat(kappa, medium, amp0, state.t) * shape
    return grid.lp(state.theta - exact, 2) / grid.lp(exact, 2)


def modal_wave_run(grid, c2, b, p0_amp, p1_amp, dt, t_end, modes=None):
    """Run the Newmark stepper on a single sine mode; returns the relative L2 error of ``p``."""
    modes = modes or (1,) * grid.dims
    shape = grid.sine_mode(modes)
    kappa = grid.mode_eigenvalue(modes)
    coeffs = FrozenCoefficients.constant(grid, 1.0, c2, 0.0)
    p0, p1 = p0_amp * shape, p1_amp * shape
    state = AcousticState(p0, p1, initial_ptt(grid, p0, p1, coeffs, b))
    for _ in range(int(round(t_end / dt))):
        state = pressure_step(grid, state, coeffs, b, dt)
    amp, _ = modal_oracle_damped_wave(kappa, c2, b, p0_amp, p1_amp, state.t)
    exact = amp * shape
    return grid.lp(state.p - exact, 2) / max(grid.lp(exact, 2), 1e-300)


def fit_order(steps, errors, finest=3):
    """Least-squares slope of ``log(error)`` against ``log(step)`` on the finest levels."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    order = np.argsort(steps)[:finest]
    s, e = steps[order], errors[order]
    if len(np.unique(s)) < 2 or np.any(e <= 0):
        return float("nan")
    return float(np.polyfit(np.log(s), np.log(e), 1)[0])


@dataclass
class StudyResult:
    rows: list  # dicts: level, n, h, dt, error_p, error_theta, error
    spatial_order: float
    temporal_order: float
    orders: dict = field(default_factory=dict)


def _level_error(cfg):
    result = run_simulation(cfg)
    if result.error is not None:
        raise result.error
    final = result.snapshots[-1]
    p_ex, _, _ = cfg.mms.pressure(cfg.grid, final.t)
    th_ex, _ = cfg.mms.temperature(cfg.grid, final.t)
    ep = cfg.grid.lp(final.p - p_ex, 2)
    et = cfg.grid.lp(final.theta - th_ex, 2)
    return ep, et


def convergence_study(cfg_base, levels=None, threads=1):
    """Errors against the manufactured solution on a list of ``(n, dt)`` levels.

    Orders are least-squares log-log slopes on the three finest levels:
    against the grid spacing (spatial) and against ``dt`` (temporal).  When one
    of the two is held fixed the corresponding order is ``nan``.
    """
    if cfg_base.mms is None:
        raise InvalidParameterError("convergence study needs a manufactured solution")
    levels = list(levels if levels is not None else cfg_base.mms.levels)
    if len(levels) < 3:
        raise InvalidParameterError("convergence study needs at least 3 levels")
    cfgs = [cfg_base.with_grid(n, dt) for n, dt in levels]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        errors = list(pool.map(_level_error, cfgs))
    rows = []
    for i, (cfg, (ep, et)) in enumerate(zip(cfgs, errors)):
        rows.append({
            "level": i, "n": cfg.grid.n[0], "h": cfg.grid.h[0], "dt": cfg.dt,
            "error_p": ep, "error_theta": et, "error": ep + et,
        })
    h = [r["h"] for r in rows]
    dts = [r["dt"] for r in rows]
    err = [r["error"] for r in rows]
    orders = {
        "p_spatial": fit_order(h, [r["error_p"] for r in rows]),
        "theta_spatial": fit_order(h, [r["error_theta"] for r in rows]),
    }
    return StudyResult(rows, fit_order(h, err), fit_order(dts, err), orders)


def _difference_norm(grid, base, other):
    diffs = [
        replace(a, p=a.p - b.p, pt=a.pt - b.pt, ptt=a.ptt - b.ptt,
                theta=a.theta - b.theta, theta_t=a.theta_t - b.theta_t)
        for a, b in zip(base, other)
    ]
    return pressure_norm(grid, diffs) + temperature_norm(grid, diffs)


def continuous_dependence_probe(cfg, delta_list, threads=1):
    """Perturb ``p0`` by ``delta`` times the lowest sine mode and measure the response.

    Returns ``{"deltas", "norms", "ratios"}`` with ``norms[i]`` the sup-in-time
    combined difference norm and ``ratios[i] = norms[i] / deltas[i]`` (0 for
    ``delta = 0``).
    """
    p0, p1, theta0 = initial_fields(cfg)
    mode = cfg.grid.sine_mode((1,) * cfg.grid.dims)
    forcing = make_forcing(cfg)

    def run(delta):
        res = run_simulation(cfg, forcing, p0=p0 + delta * mode, p1=p1, theta0=theta0)
        if res.error is not None:
            raise res.error
        return res.snapshots

    deltas = [float(d) for d in delta_list]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        base, *perturbed = list(pool.map(run, [0.0] + deltas))
    norms = [_difference_norm(cfg.grid, base, snaps) for snaps in perturbed]
    ratios = [n / d if d != 0 else 0.0 for n, d in zip(norms, deltas)]
    return {"deltas": deltas, "norms": norms, "ratios": ratios}


def _random_smooth_history(grid, rng, times, bound, n_modes=3):
    """Random combination of low sine modes with random temporal harmonics, ``|u| <= bound``."""
    spatial = []
    for _ in range(n_modes):
        modes = tuple(int(m) for m in rng.integers(1, 4, size=grid.dims))
        spatial.append(grid.sine_mode(modes))
    coef = rng.uniform(-1, 1, size=(n_modes, 2))
    freq = rng.uniform(0.5, 3.0, size=n_modes)
    hist = [
        sum(s * (c[0] * np.cos(2 * np.pi * f * t) + c[1] * np.sin(2 * np.pi * f * t))
            for s, c, f in zip(spatial, coef, freq))
        for t in times
    ]
    peak = max(np.abs(h).max() for h in hist)
    scale = rng.uniform(0.1, 1.0) * bound / peak if peak > 0 else 0.0
    return [scale * h for h in hist]


def sampled_lipschitz_ratios(grid, model, n_pairs=100, n_times=21, t_end=1.0, bound=1.0, seed=0):
    """Lipschitz ratios of the absorbed-energy map over random bounded history pairs.

    The histories are smooth in space and time, so the ratios converge under
    grid refinement; their maximum estimates the Lipschitz constant.
    """
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, t_end, n_times)
    ratios = np.empty(n_pairs)
    for i in range(n_pairs):
        u = _random_smooth_history(grid, rng, times, bound)
        v = _random_smooth_history(grid, rng, times, bound)
        ratios[i] = lipschitz_probe(grid, model, times, u, v)["ratio"]
    return ratios


@dataclass
class LensingComparison:
    coupled_peak: tuple
    frozen_peak: tuple
    shift_cells: int  # largest per-axis index difference of the two peaks
    max_theta: np.ndarray  # max temperature at each output time of the coupled run
    coupled: object = field(repr=False)
    frozen: object = field(repr=False)

    @property
    def theta_nondecreasing(self):
        return bool(np.all(np.diff(self.max_theta) >= 0))


def lensing_comparison(cfg, threads=1):
    """Run ``cfg`` with and without temperature feedback on the sound speed.

    The peak of each run is the node where ``|p|`` reached its largest value
    over the whole run.
    """
    runs = [replace(cfg, freeze_temperature=False), replace(cfg, freeze_temperature=True)]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        coupled, frozen = pool.map(run_simulation, runs)
    for res in (coupled, frozen):
        if res.error is not None:
            raise res.error

    def peak(res):
        m = res.diagnostics.max_abs_p
        return tuple(int(i) for i in np.unravel_index(int(np.argmax(m)), m.shape))

    a, b = peak(coupled), peak(frozen)
    return LensingComparison(
        coupled_peak=a,
        frozen_peak=b,
        shift_cells=max(abs(i - j) for i, j in zip(a, b)),
        max_theta=np.array([s.theta.max() for s in coupled.snapshots]),
        coupled=coupled,
        frozen=frozen,
    )
