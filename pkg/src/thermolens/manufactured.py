"""Closed-form manufactured solutions and the forcings that make them exact.

Each field is ``amplitude * g(t) * prod_i sin(m_i pi x_i / L_i)`` so that the
field and its Laplacian vanish on the boundary.  The time envelope is
``g(t) = c0 + c1 t + a sin(w t) + b cos(w t)``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .materials import k_of_theta, q_of_theta


@dataclass(frozen=True)
class TimeEnvelope:
    c0: float = 1.0
    c1: float = 0.0
    a: float = 0.0
    b: float = 0.0
    omega: float = 0.0

    def __call__(self, t, derivative=0):
        w = self.omega
        s, c = np.sin(w * t), np.cos(w * t)
        if derivative == 0:
            return self.c0 + self.c1 * t + self.a * s + self.b * c
        if derivative == 1:
            return self.c1 + w * (self.a * c - self.b * s)
        if derivative == 2:
            return -w * w * (self.a * s + self.b * c)
        raise InvalidParameterError("only derivatives up to order 2 are available")

    def as_tuple(self):
        return (self.c0, self.c1, self.a, self.b)


@dataclass(frozen=True)
class ManufacturedSolution:
    p_amplitude: float = 0.0
    p_modes: tuple = (1,)
    p_envelope: TimeEnvelope = field(default_factory=TimeEnvelope)
    theta_amplitude: float = 0.0
    theta_modes: tuple = (1,)
    theta_envelope: TimeEnvelope = field(default_factory=TimeEnvelope)
    # refinement levels for convergence studies: (n, dt) pairs
    levels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "p_modes", tuple(int(m) for m in np.atleast_1d(self.p_modes)))
        object.__setattr__(
            self, "theta_modes", tuple(int(m) for m in np.atleast_1d(self.theta_modes))
        )
        object.__setattr__(
            self, "levels", tuple((int(n), float(dt)) for n, dt in self.levels)
        )

    @staticmethod
    def _shape(grid, modes):
        if len(modes) != grid.dims:
            raise InvalidParameterError(f"need {grid.dims} mode numbers, got {modes}")
        return grid.sine_mode(modes)

    @staticmethod
    def _kappa(grid, modes):
        """Continuum eigenvalue magnitude ``sum (m pi / L)^2``."""
        return float(sum((m * np.pi / L) ** 2 for m, L in zip(modes, grid.extents)))

    def pressure(self, grid, t):
        """Exact ``(p, p_t, p_tt)`` sampled on the grid."""
        s = self.p_amplitude * self._shape(grid, self.p_modes)
        g = self.p_envelope
        return g(t) * s, g(t, 1) * s, g(t, 2) * s

    def temperature(self, grid, t):
        """Exact ``(theta, theta_t)`` sampled on the grid."""
        s = self.theta_amplitude * self._shape(grid, self.theta_modes)
        g = self.theta_envelope
        return g(t) * s, g(t, 1) * s


def mms_forcing(ms, grid, medium, law, absorption, t, freeze_temperature=False):
    """Sources ``(f1, f2)`` that make ``ms`` an exact solution of the coupled system.

    All derivatives, Laplacians included, are analytic.  Only the
    instantaneous absorption model is supported, since averaged models depend
    on the whole pressure history.
    """
    if absorption.variant != "instantaneous":
        raise InvalidParameterError("manufactured forcing requires instantaneous absorption")
    p, pt, ptt = ms.pressure(grid, t)
    theta, theta_t = ms.temperature(grid, t)
    kp = ms._kappa(grid, ms.p_modes)
    kt = ms._kappa(grid, ms.theta_modes)
    lap_p, lap_pt, lap_theta = -kp * p, -kp * pt, -kt * theta

    th = np.full(grid.shape, medium.Theta_a) if freeze_temperature else theta
    k = k_of_theta(medium, law, th)
    q = q_of_theta(law, th)
    f1 = (1 - 2 * k * p) * ptt - q * lap_p - medium.b * lap_pt - 2 * k * pt * pt
    Q = absorption.scale * pt * pt
    f2 = (
        medium.heat_capacity * theta_t
        - medium.kappa_a * lap_theta
        + medium.perfusion * (theta - medium.Theta_a)
        - Q
    )
    return f1, f2
