"""One-step implicit solvers for the two linear sub-problems.

Pressure: ``alpha p_tt - r lap p - b lap p_t = f1`` advanced with the
average-acceleration Newmark scheme (``gamma = 1/2``, ``beta = 1/4``); the
equation is enforced at the new time level, so ``alpha``, ``r`` and ``f1``
passed to :func:`pressure_step` belong to ``t + dt``.

Heat: ``rho_a C_a theta_t - kappa_a lap theta + rho_b C_b W (theta - theta_a)
= Q + f2`` advanced with Crank-Nicolson.  The stored ``theta_t`` carries the
old-level right-hand side, so only new-level sources are needed.
"""
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .errors import DegeneracyError, InvalidParameterError, LinearSolveError

NEWMARK_BETA = 0.25
NEWMARK_GAMMA = 0.5
SOLVE_RTOL = 1e-10
CG_RTOL = 1e-13


@dataclass(frozen=True)
class AcousticState:
    p: np.ndarray
    pt: np.ndarray
    ptt: np.ndarray
    t: float = 0.0

    def scaled(self, c):
        return replace(self, p=c * self.p, pt=c * self.pt, ptt=c * self.ptt)


@dataclass(frozen=True)
class ThermalState:
    theta: np.ndarray
    theta_t: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class FrozenCoefficients:
    """Coefficients ``alpha``, ``r`` and source ``f1`` of the linear wave equation."""

    alpha: np.ndarray
    r: np.ndarray
    f1: np.ndarray

    @classmethod
    def constant(cls, grid, alpha=1.0, r=1.0, f1=0.0):
        ones = np.ones(grid.shape)
        return cls(alpha * ones, r * ones, f1 * ones)

    @property
    def alpha_bounds(self):
        return float(np.min(self.alpha)), float(np.max(self.alpha))

    @property
    def r_bounds(self):
        return float(np.min(self.r)), float(np.max(self.r))

    def check(self):
        alpha = np.asarray(self.alpha)
        if np.any(~np.isfinite(alpha)) or alpha.min() <= 0:
            i = np.unravel_index(int(np.argmin(alpha)), alpha.shape)
            raise DegeneracyError(float(alpha.min()), tuple(int(k) for k in i))
        r = np.asarray(self.r)
        if np.any(~np.isfinite(r)) or r.min() <= 0:
            raise InvalidParameterError(f"wave speed coefficient must be positive, min {r.min():g}")


def initial_ptt(grid, p0, p1, coeffs, b):
    """``p_tt(0) = (r lap p0 + b lap p1 + f1) / alpha`` at the initial level."""
    coeffs.check()
    return (coeffs.r * grid.laplacian(p0) + b * grid.laplacian(p1) + coeffs.f1) / coeffs.alpha


def _is_uniform(a):
    a = np.asarray(a)
    return a.size == 0 or bool(np.all(a == a.flat[0]))


@lru_cache(maxsize=16)
def _uniform_wave_factor(grid, alpha, r, b, dt):
    lap = grid.laplacian_matrix
    mat = alpha * sp.identity(grid.size, format="csc") - (
        NEWMARK_BETA * dt * dt * r + NEWMARK_GAMMA * dt * b
    ) * lap
    return mat.tocsc(), splu(mat.tocsc())


def _solve(mat, factor, rhs):
    x = factor.solve(rhs)
    res = np.linalg.norm(mat @ x - rhs)
    scale = np.linalg.norm(rhs)
    if not np.all(np.isfinite(x)) or res > max(SOLVE_RTOL * scale, 1e-300) * 1e2:
        raise LinearSolveError(f"linear solve residual {res:.3e} (rhs norm {scale:.3e})", res)
    return x


def pressure_step(grid, state, coeffs, b, dt):
    """Advance the linear damped wave equation by one Newmark step.

    Solves ``(alpha - beta dt^2 r lap - gamma dt b lap) a = f1 + r lap p~ + b lap v~``
    for the new acceleration ``a`` with predictors
    ``p~ = p + dt v + dt^2 (1 - 2 beta) a_old / 2`` and ``v~ = v + dt (1 - gamma) a_old``.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be > 0")
    coeffs.check()
    beta, gamma = NEWMARK_BETA, NEWMARK_GAMMA
    p_pred = state.p + dt * state.pt + 0.5 * dt * dt * (1 - 2 * beta) * state.ptt
    v_pred = state.pt + dt * (1 - gamma) * state.ptt

    rhs = coeffs.f1 + coeffs.r * grid.laplacian(p_pred) + b * grid.laplacian(v_pred)
    rhs = rhs.ravel()
    if _is_uniform(coeffs.alpha) and _is_uniform(coeffs.r):
        mat, factor = _uniform_wave_factor(
            grid, float(coeffs.alpha.flat[0]), float(coeffs.r.flat[0]), float(b), float(dt)
        )
        acc = _solve(mat, factor, rhs)
    else:
        acc = _variable_wave_solve(grid, coeffs, b, dt, rhs, state.ptt.ravel())
    acc = acc.reshape(grid.shape)
    return AcousticState(
        p=p_pred + beta * dt * dt * acc,
        pt=v_pred + gamma * dt * acc,
        ptt=acc,
        t=state.t + dt,
    )


def _variable_wave_solve(grid, coeffs, b, dt, rhs, guess):
    """Solve ``(diag(alpha) - diag(s) lap) a = rhs`` with ``s = beta dt^2 r + gamma dt b``.

    Dividing each row by ``s`` leaves ``diag(alpha / s) - lap``, which is
    symmetric positive definite, so warm-started Jacobi CG converges in a few
    iterations.  Falls back to sparse LU if CG stalls.
    """
    lap = grid.laplacian_matrix
    stiff = (NEWMARK_BETA * dt * dt * coeffs.r + NEWMARK_GAMMA * dt * b).ravel()
    mass = coeffs.alpha.ravel() / stiff
    sym = (sp.diags(mass) - lap).tocsr()
    jacobi = sp.diags(1.0 / sym.diagonal())
    acc, info = cg(sym, rhs / stiff, x0=guess, rtol=CG_RTOL, atol=0.0, maxiter=10 * grid.size, M=jacobi)
    mat = (sp.diags(coeffs.alpha.ravel()) - sp.diags(stiff) @ lap).tocsc()
    if info == 0:
        res = np.linalg.norm(mat @ acc - rhs)
        if np.all(np.isfinite(acc)) and res <= SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-300):
            return acc
    return _solve(mat, splu(mat), rhs)


def heat_rate(grid, theta, medium, Q, f2):
    """``theta_t`` from the heat equation residual at one time level."""
    return (
        medium.kappa_a * grid.laplacian(theta)
        - medium.perfusion * (theta - medium.Theta_a)
        + Q
        + f2
    ) / medium.heat_capacity


@lru_cache(maxsize=16)
def _heat_factor(grid, kappa, perfusion, heat_capacity, dt):
    lap = grid.laplacian_matrix
    mat = (
        (1 + 0.5 * dt * perfusion / heat_capacity) * sp.identity(grid.size, format="csc")
        - (0.5 * dt * kappa / heat_capacity) * lap
    ).tocsc()
    return mat, splu(mat)


def heat_step(grid, state, medium, Q, f2, dt):
    """Crank-Nicolson step of the Pennes equation; ``Q`` and ``f2`` are new-level sources."""
    if not dt > 0:
        raise InvalidParameterError("dt must be > 0")
    Q = np.broadcast_to(np.asarray(Q, dtype=float), grid.shape)
    f2 = np.broadcast_to(np.asarray(f2, dtype=float), grid.shape)
    rc = medium.heat_capacity
    rhs = (
        state.theta
        + 0.5 * dt * state.theta_t
        + 0.5 * dt * (medium.perfusion * medium.Theta_a + Q + f2) / rc
    )
    mat, factor = _heat_factor(grid, medium.kappa_a, medium.perfusion, rc, float(dt))
    theta = _solve(mat, factor, rhs.ravel()).reshape(grid.shape)
    return ThermalState(theta=theta, theta_t=heat_rate(grid, theta, medium, Q, f2), t=state.t + dt)
