import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolens import (
    AcousticState,
    EnergyReport,
    FrozenCoefficients,
    Grid,
    InvalidParameterError,
    ThermalState,
    acoustic_energies,
    gronwall_certificate,
    gronwall_check,
    heat_energy,
    lambda_F,
    pressure_step,
)
from thermolens.energy import gronwall_log_bound
from thermolens.linear import initial_ptt


def report(t, E, D=0.0, Lam=0.0, F=0.0):
    return EnergyReport(t=t, E0=E, E1=0.0, E2=0.0, D_p=D, E_theta=0.0, D_theta=0.0,
                        Lambda=Lam, Fterm=F, min_alpha=1.0)


def damped_run(grid, b, dt, steps, seed=0, every=1):
    coeffs = FrozenCoefficients.constant(grid, 1.0, 1.0, 0.0)
    rng = np.random.default_rng(seed)
    p0 = sum(rng.standard_normal() * grid.sine_mode((m,) * grid.dims) for m in (1, 2, 3))
    p1 = sum(rng.standard_normal() * grid.sine_mode((m,) * grid.dims) for m in (1, 2))
    state = AcousticState(p0, p1, initial_ptt(grid, p0, p1, coeffs, b))
    out = []
    for n in range(steps + 1):
        if n % every == 0:
            E0, E1, E2, D = acoustic_energies(grid, state, coeffs, b)
            out.append(EnergyReport(state.t, E0, E1, E2, D, 0.0, 0.0, 0.0, 0.0, 1.0))
        if n < steps:
            state = pressure_step(grid, state, coeffs, b, dt)
    return out


def test_zero_state(grid2d):
    z = grid2d.zeros()
    assert acoustic_energies(grid2d, AcousticState(z, z, z), FrozenCoefficients.constant(grid2d), 0.3) == (0, 0, 0, 0)
    assert heat_energy(grid2d, ThermalState(z, z)) == (0, 0)


def test_sine_mode_energies_from_mode_integrals():
    L, n, m, b = 2.0, 40, 3, 0.25
    g = Grid((L,), (n,))
    p = g.sine_mode((m,))
    kappa = g.mode_eigenvalue((m,))
    z = g.zeros()
    # sum of sin^2 over interior nodes is (n+1)/2 exactly, so |p|^2 = L/2
    norm_sq = L / 2
    E0, E1, E2, D = acoustic_energies(g, AcousticState(p, z, z), FrozenCoefficients.constant(g), b)
    assert E0 == pytest.approx(0.5 * kappa * norm_sq, rel=1e-12)
    assert E1 == pytest.approx(0.5 * kappa**2 * norm_sq, rel=1e-12)
    assert E2 == pytest.approx(0.5 * b * kappa**3 * norm_sq, rel=1e-12)
    assert D == pytest.approx(kappa**3 * norm_sq, rel=1e-12)


def test_heat_energy_of_sine_mode():
    L, n, m, A = 1.5, 30, 2, 0.7
    g = Grid((L,), (n,))
    kappa = g.mode_eigenvalue((m,))
    th = A * g.sine_mode((m,))
    E, D = heat_energy(g, ThermalState(th, g.zeros()))
    assert E == pytest.approx(0.5 * A**2 * (L / 2) * (1 + kappa + kappa**2), rel=1e-12)
    assert D == 0


def test_heat_energy_rate_only(grid1d):
    v = np.random.default_rng(0).standard_normal(grid1d.shape)
    E, D = heat_energy(grid1d, ThermalState(grid1d.zeros(), v))
    assert E == pytest.approx(0.5 * grid1d.lp(v, 2) ** 2, rel=1e-14)
    assert D == pytest.approx(grid1d.lp(v, 2) ** 2 + grid1d.norm(v, "H1semi") ** 2, rel=1e-14)


@given(st.integers(0, 2**31), st.floats(-100, 100).filter(lambda c: c != 0))
@settings(max_examples=25, deadline=None)
def test_energies_are_quadratic(seed, c):
    g = Grid((1.0, 1.0), (7, 9))
    rng = np.random.default_rng(seed)
    s = AcousticState(*(rng.standard_normal(g.shape) for _ in range(3)))
    coeffs = FrozenCoefficients(rng.uniform(0.5, 1, g.shape), rng.uniform(1, 2, g.shape), g.zeros())
    base = acoustic_energies(g, s, coeffs, 0.3)
    scaled = acoustic_energies(g, s.scaled(c), coeffs, 0.3)
    for x, y in zip(scaled, base):
        assert x == pytest.approx(c * c * y, rel=1e-12)
    th = ThermalState(rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    for x, y in zip(heat_energy(g, ThermalState(c * th.theta, c * th.theta_t)), heat_energy(g, th)):
        assert x == pytest.approx(c * c * y, rel=1e-12)


def test_negative_weight_rejected(grid1d):
    z = grid1d.zeros()
    coeffs = FrozenCoefficients(-np.ones(grid1d.shape), np.ones(grid1d.shape), z)
    with pytest.raises(InvalidParameterError):
        acoustic_energies(grid1d, AcousticState(z, np.ones(grid1d.shape), z), coeffs, 0.1)


def test_initial_energy_matches_hand_assembled_sum():
    g = Grid((1.0,), (31,))
    rng = np.random.default_rng(5)
    p0 = g.sine_mode((1,)) + 0.3 * g.sine_mode((2,))
    p1 = 0.5 * g.sine_mode((3,))
    alpha = rng.uniform(0.7, 1.0, g.shape)
    r = rng.uniform(1.0, 2.0, g.shape)
    f1 = rng.standard_normal(g.shape)
    b = 0.2
    coeffs = FrozenCoefficients(alpha, r, f1)
    ptt0 = initial_ptt(g, p0, p1, coeffs, b)
    np.testing.assert_allclose(ptt0, (r * g.laplacian(p0) + b * g.laplacian(p1) + f1) / alpha)

    # each term spelled out with raw sums over nodes and edges
    h = g.h[0]
    grad = lambda u: np.diff(np.pad(u, 1)) / h  # noqa: E731
    wedge = np.pad(r, 1, mode="edge")
    redge = 0.5 * (wedge[:-1] + wedge[1:])
    lap_p0 = g.laplacian(p0)
    hand = 0.5 * h * (
        np.sum(alpha * p1**2) + np.sum(redge * grad(p0) ** 2)
        + np.sum(alpha * ptt0**2) + np.sum(redge * grad(p1) ** 2) + np.sum(r * lap_p0**2)
        + b * np.sum(grad(lap_p0) ** 2)
    )
    E0, E1, E2, _ = acoustic_energies(g, AcousticState(p0, p1, ptt0), coeffs, b)
    assert E0 + E1 + E2 == pytest.approx(hand, rel=1e-12)


# -- Lambda and F -------------------------------------------------------------


def test_lambda_F_constant_coefficients(grid2d):
    c = FrozenCoefficients.constant(grid2d, 0.9, 2.0, 0.0)
    assert lambda_F(grid2d, c, c, 0.1) == (0.0, 0.0)


def test_lambda_alpha_ramp(grid1d):
    s, dt = 0.3, 0.01
    a0 = FrozenCoefficients.constant(grid1d, 0.9, 1.0, 0.0)
    a1 = FrozenCoefficients.constant(grid1d, 0.9 + s * dt, 1.0, 0.0)
    Lam, F = lambda_F(grid1d, a0, a1, dt)
    vol = grid1d.size * grid1d.h[0]
    # only the alpha_t terms survive: |a_t|_L2 + |a_t|_L3^2
    assert Lam == pytest.approx(s * np.sqrt(vol) + (s**3 * vol) ** (2 / 3), rel=1e-10)
    assert F == 0


def test_F_constant_sine_forcing(grid1d):
    f = grid1d.sine_mode((2,))
    c = FrozenCoefficients(np.ones(grid1d.shape), np.ones(grid1d.shape), f)
    Lam, F = lambda_F(grid1d, c, c, 0.05)
    assert Lam == 0
    assert F == pytest.approx(grid1d.lp(f, 2) ** 2 + grid1d.norm(f, "H1semi") ** 2, rel=1e-14)


def test_lambda_needs_previous(grid1d):
    c = FrozenCoefficients.constant(grid1d)
    with pytest.raises(InvalidParameterError):
        lambda_F(grid1d, None, c, 0.1)


# -- Gronwall -----------------------------------------------------------------


def test_gronwall_zero_trajectory():
    res = gronwall_check([report(t, 0.0) for t in range(5)])
    assert res.passes and res.fitted_C == 0 and res.worst_step == -1


def test_gronwall_needs_three_reports():
    with pytest.raises(InvalidParameterError):
        gronwall_check([report(0, 1.0), report(1, 1.0)])


def test_gronwall_localizes_injected_jump():
    E = [1.0, 0.9, 0.8, 5.0, 4.9, 4.8]
    res = gronwall_check([report(float(t), e) for t, e in enumerate(E)], cap=1.0)
    assert not res.passes
    assert res.worst_step == 2
    assert res.max_violation == pytest.approx(4.2 - 0.8)
    assert res.fitted_C == pytest.approx(4.2 / 0.8)


def test_gronwall_on_damped_wave():
    g = Grid((1.0,), (31,))
    reports = damped_run(g, b=1.0, dt=0.01, steps=200)
    res = gronwall_check(reports)
    assert res.passes and np.isfinite(res.fitted_C)
    # dissipation is not a decay rate of the energy, so C > 0 once it is counted
    assert res.fitted_C > 0
    pure = gronwall_check(reports, include_dissipation=False)
    assert pure.fitted_C == 0
    assert gronwall_certificate(reports, res.fitted_C).all()
    assert gronwall_certificate(reports, res.fitted_C, forcing_factor=1.0).all()


def test_integrated_bound_by_explicit_sum():
    rng = np.random.default_rng(0)
    t = np.cumsum(rng.uniform(0.1, 0.2, 12))
    E = rng.uniform(1, 2, 12)
    Lam = rng.uniform(0, 1, 12)
    F = rng.uniform(0, 1, 12)
    reps = [report(*x) for x in zip(t, E, np.zeros(12), Lam, F)]
    C = 0.7
    lb = gronwall_log_bound(reps, C, forcing_factor=1.0)
    for n in range(12):
        intF = sum((t[i + 1] - t[i]) * max(F[i], F[i + 1]) for i in range(n))
        intL = sum((t[i + 1] - t[i]) * (1 + Lam[i + 1]) for i in range(n))
        assert np.exp(lb[n]) == pytest.approx((E[0] + intF) * np.exp(C * intL), rel=1e-12)


@given(st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_fitted_constant_always_certifies(seed):
    rng = np.random.default_rng(seed)
    n = 10
    t = np.cumsum(rng.uniform(0.01, 0.5, n))
    reps = [report(t[i], rng.uniform(0, 3), rng.uniform(0, 1), rng.uniform(0, 2), rng.uniform(0, 1))
            for i in range(n)]
    res = gronwall_check(reps)
    if np.isfinite(res.fitted_C):
        assert gronwall_certificate(reps, res.fitted_C).all()
