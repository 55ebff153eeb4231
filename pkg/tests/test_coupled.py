from dataclasses import replace

import numpy as np
import pytest

from thermolens import (
    AbsorptionModel,
    AcousticSource,
    DegeneracyError,
    FrozenCoefficients,
    Grid,
    InvalidParameterError,
    MediumParams,
    NonConvergenceError,
    Profile,
    SimConfig,
    SoundSpeedLaw,
    ball_diagnostics,
    check_nondegeneracy,
    load_config,
    picard_step,
    pressure_step,
    run_simulation,
)
from thermolens.coupled import coupled_coefficients, initial_state, make_forcing
from thermolens.materials import k_of_theta, q_of_theta


def make_cfg(beta=1.0, law=None, amplitude=0.05, n=31, **kw):
    med = MediumParams(rho=1.0, beta_acou=beta, b=0.1, rho_a=1.0, C_a=1.0, kappa_a=0.1,
                       rho_b=1.0, C_b=1.0, c_a=1.0, q0=0.5, W=0.2)
    law = law or SoundSpeedLaw((1.0, 0.1), floor_q0=med.q0)
    base = dict(
        grid=Grid((1.0,), (n,)), medium=med, law=law,
        absorption=AbsorptionModel.from_medium(med), dt=0.01, t_end=0.2,
        p0=Profile("sine", amplitude, modes=(1,)),
        theta0=Profile("gaussian", 0.5, center=(0.5,), width=0.2),
    )
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(InvalidParameterError, match="time.dt"):
        make_cfg(dt=0.0)
    with pytest.raises(InvalidParameterError, match="degeneracy_floor"):
        make_cfg(degeneracy_floor=1.0)
    with pytest.raises(InvalidParameterError, match="max_iter"):
        make_cfg(picard_max_iter=0)
    with pytest.raises(InvalidParameterError):
        make_cfg(p0=Profile("mms"))
    with pytest.raises(InvalidParameterError):
        Profile("gaussian", 1.0, center=(0.5,), width=0.0)
    with pytest.raises(InvalidParameterError):
        AcousticSource("arc", 1.0, 1.0, width=0.1)
    with pytest.raises(InvalidParameterError):
        AcousticSource("gaussian", 1.0, frequency=0.0, width=0.1)


def test_with_grid_keeps_everything_else():
    cfg = make_cfg()
    fine = cfg.with_grid(63, 0.005)
    assert fine.grid.n == (63,) and fine.dt == 0.005 and fine.medium == cfg.medium


def test_check_nondegeneracy_examples():
    g = Grid((1.0,), (7,))
    med = MediumParams(rho=1000.0, beta_acou=4.5, b=1, rho_a=1, C_a=1, kappa_a=1, rho_b=1, C_b=1,
                       c_a=1500.0, q0=1e6)
    law = SoundSpeedLaw.constant(1500.0)
    assert k_of_theta(med, law, 0.0) == pytest.approx(2e-9)
    assert check_nondegeneracy(g.zeros(), g.zeros(), med, law) == 1.0
    assert check_nondegeneracy(np.full(7, 5e7), g.zeros(), med, law) == pytest.approx(0.8, rel=1e-12)
    p = np.zeros(7)
    p[3] = 1 / (2 * 2e-9)
    assert check_nondegeneracy(p, g.zeros(), med, law) == pytest.approx(0.0, abs=1e-12)


def test_decoupled_linear_problem_converges_at_second_iteration():
    cfg = make_cfg(beta=0.0, law=SoundSpeedLaw.constant(1.0, 0.5))
    state = initial_state(cfg)
    for _ in range(5):
        state, it, res = picard_step(state, cfg)
        assert it == 2 and res[-1] < cfg.picard_tol


def test_zero_data_zero_trajectory():
    cfg = make_cfg(p0=Profile(), theta0=Profile())
    result = run_simulation(cfg)
    assert result.ok
    for s in result.snapshots:
        assert not s.p.any() and not s.theta.any()
    for r in result.reports:
        assert r.E_total == 0 and r.E_theta == 0 and r.Fterm == 0 and r.Lambda == 0


def test_degenerate_initial_data_stops_before_stepping():
    cfg = make_cfg(amplitude=0.6, beta=1.0, law=SoundSpeedLaw.constant(1.0, 1.0),
                   medium=replace(make_cfg().medium, q0=1.0))
    assert 2 * cfg.medium.k1 * 0.6 == pytest.approx(1.2)
    result = run_simulation(cfg)
    assert isinstance(result.error, DegeneracyError)
    assert result.error.t == 0.0 and result.error.min_value == pytest.approx(-0.2)
    assert result.snapshots == [] and result.diagnostics.steps == 0


def test_nonconvergence_is_reported():
    cfg = make_cfg(picard_max_iter=1)
    result = run_simulation(cfg)
    assert isinstance(result.error, NonConvergenceError)
    assert len(result.snapshots) == 1  # initial level only


def test_converged_step_is_a_fixed_point():
    cfg = make_cfg(amplitude=0.1)
    forcing = make_forcing(cfg)
    state = initial_state(cfg, forcing)
    for _ in range(3):
        prev = state
        state, _, _ = picard_step(state, cfg, forcing)
    f1_ext, _ = forcing(state.t)
    coeffs = coupled_coefficients(cfg, state.acoustic.p, state.acoustic.pt, state.thermal.theta, f1_ext)
    again = pressure_step(cfg.grid, prev.acoustic, coeffs, cfg.medium.b, cfg.dt)
    change = cfg.grid.lp(again.p - state.acoustic.p, 2) / cfg.grid.lp(state.acoustic.p, 2)
    assert change < 10 * cfg.picard_tol


def test_converged_step_satisfies_the_nonlinear_equation():
    cfg = make_cfg(amplitude=0.1)
    forcing = make_forcing(cfg)
    state = initial_state(cfg, forcing)
    g, b = cfg.grid, cfg.medium.b
    for _ in range(5):
        state, _, _ = picard_step(state, cfg, forcing)
        a = state.acoustic
        k = k_of_theta(cfg.medium, cfg.law, state.thermal.theta)
        r = q_of_theta(cfg.law, state.thermal.theta)
        alpha = 1 - 2 * k * a.p
        residual = (alpha * a.ptt - r * g.laplacian(a.p) - b * g.laplacian(a.pt)
                    - 2 * k * a.pt**2 - forcing(state.t)[0])
        scale = g.lp(a.ptt, 2) * alpha.max() + g.lp(r * g.laplacian(a.p), 2)
        assert g.lp(residual, 2) < cfg.picard_tol * scale


def test_runs_are_bitwise_deterministic():
    cfg = make_cfg(amplitude=0.1)
    a, b = run_simulation(cfg), run_simulation(cfg)
    for x, y in zip(a.snapshots, b.snapshots):
        assert np.array_equal(x.p, y.p) and np.array_equal(x.theta, y.theta)
    assert a.reports == b.reports


def test_output_cadence():
    cfg = make_cfg(output_every=5, t_end=0.22)
    result = run_simulation(cfg)
    steps = [round(t / cfg.dt) for t in result.times]
    assert steps == [0, 5, 10, 15, 20, 22]


def test_ball_diagnostics_zero_trajectory():
    cfg = make_cfg(p0=Profile(), theta0=Profile())
    ball = ball_diagnostics(cfg, run_simulation(cfg).snapshots)
    assert ball.gamma_observed == 0 and ball.R1_style_norm == 0 and ball.R2_style_norm == 0
    assert ball.margin == 1 and ball.within_cap


def test_ball_gamma_doubles_in_linear_limit():
    cfg = make_cfg(beta=0.0, law=SoundSpeedLaw.constant(1.0, 0.5), theta0=Profile())
    g1 = ball_diagnostics(cfg, run_simulation(cfg).snapshots).gamma_observed
    cfg2 = replace(cfg, p0=replace(cfg.p0, amplitude=2 * cfg.p0.amplitude))
    g2 = ball_diagnostics(cfg2, run_simulation(cfg2).snapshots).gamma_observed
    assert g2 == pytest.approx(2 * g1, rel=1e-12)


def test_ball_diagnostics_requires_snapshots():
    with pytest.raises(InvalidParameterError):
        ball_diagnostics(make_cfg(), [])


def test_small_data_demo_margin_positive():
    cfg = load_config("small-data-demo.cfg")
    result = run_simulation(replace(cfg, t_end=20 * cfg.dt))
    ball = ball_diagnostics(cfg, result.snapshots)
    assert result.ok and 0 < ball.margin <= 1 and ball.within_cap


def test_frozen_temperature_ignores_heating_in_coefficients():
    cfg = make_cfg(freeze_temperature=True)
    coeffs = coupled_coefficients(cfg, cfg.grid.zeros(), cfg.grid.zeros(), np.full(cfg.grid.shape, 50.0), 0.0)
    assert np.all(coeffs.r == q_of_theta(cfg.law, cfg.medium.Theta_a))


def test_sources():
    g = Grid((1.0, 1.0), (21, 21))
    arc = AcousticSource("arc", 2.0, 10.0, center=(0.5, 0.5), width=0.05, radius=0.3,
                         aperture=30.0, direction=180.0, ramp_cycles=1.0)
    shape = arc.profile(g)
    x, y = g.coords()
    assert shape.max() <= 1 and np.all(shape[x > 0.5] == 0)
    assert arc.envelope(0.0) == 0 and arc.envelope(-1.0) == 0
    # a quarter into the ramp: taper sin^2(pi/8), carrier at its crest
    assert arc.envelope(0.025) == pytest.approx(2.0 * np.sin(np.pi / 8) ** 2, rel=1e-12)
    # after the ramp the envelope is the plain harmonic
    assert arc.envelope(0.125) == pytest.approx(2.0 * np.sin(2 * np.pi * 10 * 0.125))
    with pytest.raises(InvalidParameterError):
        arc.profile(Grid((1.0,), (5,)))
