"""Acoustic and thermal energy functionals and a discrete Gronwall checker.

``H^{-1}`` norms (of ``d/dt f1`` in the forcing term and of ``theta_tt`` in
the heat dissipation) are not computed; ``f1_t`` is measured in ``L^2``,
which bounds the ``H^{-1}`` norm from above on the grid, and the
``theta_tt`` term is omitted from the heat dissipation.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

HNEG_SURROGATE = "H^-1 norms replaced by L^2 (f1_t); theta_tt term omitted"


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E0: float
    E1: float
    E2: float
    D_p: float
    E_theta: float
    D_theta: float
    Lambda: float
    Fterm: float
    min_alpha: float
    surrogate: str = field(default=HNEG_SURROGATE, compare=False, repr=False)

    @property
    def E_total(self):
        return self.E0 + self.E1 + self.E2


CSV_COLUMNS = ("t", "E0", "E1", "E2", "D_p", "E_theta", "D_theta", "Lambda", "Fterm", "min_alpha")


def acoustic_energies(grid, state, coeffs, b):
    """Return ``(E0, E1, E2, D_p)`` for an acoustic state and its coefficients.

    ``E0 = (|sqrt(alpha) p_t|^2 + |sqrt(r) grad p|^2) / 2``,
    ``E1 = (|sqrt(alpha) p_tt|^2 + |sqrt(r) grad p_t|^2 + |sqrt(r) lap p|^2) / 2``,
    ``E2 = b |grad lap p|^2 / 2`` and
    ``D_p = b |grad p_tt|^2 + b |lap p_t|^2 + |sqrt(r) grad lap p|^2 + b |grad p_t|^2``.
    """
    alpha, r = coeffs.alpha, coeffs.r
    lap_p = grid.laplacian(state.p)
    E0 = 0.5 * (grid.weighted_l2(state.pt, alpha) ** 2 + grid.weighted_grad_sq(state.p, r))
    E1 = 0.5 * (
        grid.weighted_l2(state.ptt, alpha) ** 2
        + grid.weighted_grad_sq(state.pt, r)
        + grid.weighted_l2(lap_p, r) ** 2
    )
    E2 = 0.5 * b * grid.weighted_grad_sq(lap_p)
    D_p = (
        b * grid.weighted_grad_sq(state.ptt)
        + b * grid.lp(grid.laplacian(state.pt), 2) ** 2
        + grid.weighted_grad_sq(lap_p, r)
        + b * grid.weighted_grad_sq(state.pt)
    )
    return E0, E1, E2, D_p


def total_acoustic_energy(grid, state, coeffs, b):
    E0, E1, E2, _ = acoustic_energies(grid, state, coeffs, b)
    return E0 + E1 + E2


def heat_energy(grid, state):
    """Return ``(E_theta, D_theta_partial)``.

    ``E_theta = (|theta|^2 + |grad theta|^2 + |lap theta|^2 + |theta_t|^2) / 2`` and
    ``D_theta_partial = |theta_t|^2 + |grad theta_t|^2``.
    """
    th, tht = state.theta, state.theta_t
    E = 0.5 * (
        grid.lp(th, 2) ** 2
        + grid.weighted_grad_sq(th)
        + grid.lp(grid.laplacian(th), 2) ** 2
        + grid.lp(tht, 2) ** 2
    )
    D = grid.lp(tht, 2) ** 2 + grid.weighted_grad_sq(tht)
    return E, D


def lambda_F(grid, previous, current, dt):
    """Coefficient growth ``Lambda`` and forcing ``F`` from two coefficient levels.

    Time derivatives are backward differences over ``dt``.  Gradients of
    ``alpha`` and ``r`` replicate the boundary-adjacent value; ``f1`` is
    treated as vanishing on the boundary.
    """
    if previous is None:
        raise InvalidParameterError("lambda_F needs the previous coefficient level")
    if not dt > 0:
        raise InvalidParameterError("dt must be > 0")
    r_t = (current.r - previous.r) / dt
    a_t = (current.alpha - previous.alpha) / dt
    f_t = (current.f1 - previous.f1) / dt
    grad_alpha_l3 = grid.grad_lp(current.alpha, 3, ghost="edge")
    Lam = (
        grid.lp(r_t, 2) ** 2
        + grid.grad_lp(current.r, 4, ghost="edge")
        + grid.lp(a_t, 2)
        + grid.lp(a_t, 3) ** 2
        + grad_alpha_l3**2
    )
    F = (
        grid.lp(current.f1, 2) ** 2
        + grid.weighted_grad_sq(current.f1)
        + (1 + grad_alpha_l3**2) * grid.lp(f_t, 2) ** 2
    )
    return Lam, F


@dataclass
class GronwallResult:
    passes: bool
    fitted_C: float
    max_violation: float
    worst_step: int  # index n of the step (t_n, t_n+1) that fixes C; -1 if none
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def _series(reports):
    t = np.array([r.t for r in reports], dtype=float)
    E = np.array([r.E_total for r in reports], dtype=float)
    D = np.array([r.D_p for r in reports], dtype=float)
    Lam = np.array([r.Lambda for r in reports], dtype=float)
    F = np.array([r.Fterm for r in reports], dtype=float)
    return t, E, D, Lam, F


def _interval_terms(Lam, F):
    """Growth and forcing attached to each interval ``[t_n, t_n+1]``.

    ``Lambda`` is a backward difference, so its value at ``t_n+1`` belongs to
    the interval.  The forcing is the larger of its two endpoint values: a run
    that starts from rest under a ramped source has ``E = F = 0`` at ``t_0``
    and would otherwise admit no finite constant.
    """
    return Lam[1:], np.maximum(F[:-1], F[1:])


def gronwall_check(reports, dt=None, cap=np.inf, rtol=1e-10, include_dissipation=True):
    """Fit the smallest ``C >= 0`` with
    ``(E[n+1] - E[n]) / dt + D[n] <= C ((1 + Lambda_n) E[n] + F_n)`` for all ``n``.

    ``Lambda_n`` and ``F_n`` are the interval values of :func:`_interval_terms`.
    ``dt`` defaults to the spacing of the report times.  Left-hand sides below
    ``rtol`` times the energy scale count as nonpositive.  ``passes`` is true
    when the fitted ``C`` is finite and at most ``cap``.
    """
    if len(reports) < 3:
        raise InvalidParameterError("gronwall_check needs at least 3 reports")
    t, E, D, Lam, F = _series(reports)
    steps = np.diff(t) if dt is None else np.full(len(t) - 1, float(dt))
    if np.any(steps <= 0):
        raise InvalidParameterError("report times must be strictly increasing")
    lhs = (E[1:] - E[:-1]) / steps
    if include_dissipation:
        lhs = lhs + D[:-1]
    lam_i, F_i = _interval_terms(Lam, F)
    rhs = (1 + lam_i) * E[:-1] + F_i

    scale = max(float(np.max(np.abs(E))), float(np.max(np.abs(D)) * steps.max()), 1e-300)
    tol = rtol * scale / steps
    active = lhs > tol
    ratios = np.zeros_like(lhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios[active] = np.where(rhs[active] > 0, lhs[active] / rhs[active], np.inf)
    C = float(ratios.max(initial=0.0))
    worst = int(np.argmax(ratios)) if active.any() else -1

    if np.isfinite(cap):
        violation = np.where(active, lhs - cap * rhs, 0.0)
        max_violation = float(max(violation.max(initial=0.0), 0.0))
    else:
        max_violation = 0.0 if np.isfinite(C) else np.inf
    return GronwallResult(
        passes=bool(np.isfinite(C) and C <= cap),
        fitted_C=C,
        max_violation=max_violation,
        worst_step=worst,
        lhs=lhs,
        rhs=rhs,
    )


def gronwall_log_bound(reports, C, forcing_factor=None):
    """Logarithm of the integrated bound at every report time.

    ``E(t_n) <= (E(0) + K sum dt F) exp(C sum dt (1 + Lambda))`` with sums over
    the intervals before ``t_n``; ``K = max(C, 1)`` unless ``forcing_factor`` is
    given.  Logs avoid overflow of the exponential.
    """
    t, E, _, Lam, F = _series(reports)
    if not np.isfinite(C):
        return np.full(len(t), np.inf)
    steps = np.diff(t)
    lam_i, F_i = _interval_terms(Lam, F)
    K = max(C, 1.0) if forcing_factor is None else forcing_factor
    intF = np.concatenate([[0.0], np.cumsum(steps * F_i)])
    intL = np.concatenate([[0.0], np.cumsum(steps * (1 + lam_i))])
    with np.errstate(divide="ignore"):
        return np.log(E[0] + K * intF) + C * intL


def gronwall_certificate(reports, C, forcing_factor=None):
    """True where ``E(t_n)`` sits below the integrated bound (all entries must hold)."""
    _, E, _, _, _ = _series(reports)
    log_bound = gronwall_log_bound(reports, C, forcing_factor)
    with np.errstate(divide="ignore"):
        logE = np.log(E)
    # 1e-12 relative slack for rounding in the accumulated sums
    return (logE <= log_bound + 1e-12) | (E <= 0)
