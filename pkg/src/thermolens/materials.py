"""Temperature-dependent and constant medium coefficients.

Temperatures are in degrees Celsius throughout.
"""
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidParameterError

# Sound speed of water (m/s) as a quintic in temperature (deg C).
WATER_QUINTIC = (1402.39, 5.0371, -5.8085e-2, 3.3420e-4, -1.4780e-6, 3.1464e-9)

_NONNEGATIVE = {"W", "Theta_a", "gamma1", "gamma2", "beta_acou"}


@dataclass(frozen=True)
class MediumParams:
    """Physical constants of the coupled Westervelt-Pennes system (SI units)."""

    rho: float  # mass density, kg/m^3
    beta_acou: float  # acoustic nonlinearity coefficient
    b: float  # sound diffusivity, m^2/s
    rho_a: float  # tissue density, kg/m^3
    C_a: float  # tissue heat capacity, J/(kg K)
    kappa_a: float  # tissue thermal conductivity, W/(m K)
    rho_b: float  # blood density, kg/m^3
    C_b: float  # blood heat capacity, J/(kg K)
    c_a: float  # ambient sound speed, m/s
    q0: float  # lower bound for q = c^2, m^2/s^2
    W: float = 0.0  # perfusion rate, 1/s
    Theta_a: float = 0.0  # ambient temperature, deg C
    omega: float = 2 * np.pi * 1e6  # angular excitation frequency, rad/s
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise InvalidParameterError(f"medium.{f.name} must be finite")
            if f.name in _NONNEGATIVE:
                if value < 0:
                    raise InvalidParameterError(f"medium.{f.name} must be >= 0, got {value}")
            elif value <= 0:
                raise InvalidParameterError(f"medium.{f.name} must be > 0, got {value}")

    @property
    def perfusion(self):
        """``rho_b C_b W`` (W/(m^3 K))."""
        return self.rho_b * self.C_b * self.W

    @property
    def heat_capacity(self):
        """Volumetric heat capacity ``rho_a C_a`` (J/(m^3 K))."""
        return self.rho_a * self.C_a

    @property
    def k1(self):
        """Uniform bound ``beta / (rho q0)`` on ``|k(theta)|``."""
        return self.beta_acou / (self.rho * self.q0)


@dataclass(frozen=True)
class SoundSpeedLaw:
    """Polynomial ``c(theta) = sum c_n theta^n`` with ``c^2`` floored at ``floor_q0``."""

    coefficients: tuple
    floor_q0: float = 0.0
    name: str = field(default="polynomial", compare=False)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        if not coeffs:
            raise InvalidParameterError("sound speed law needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        if self.floor_q0 < 0:
            raise InvalidParameterError("floor_q0 must be >= 0")

    @classmethod
    def water(cls, floor_q0=0.0):
        return cls(WATER_QUINTIC, floor_q0, name="water")

    @classmethod
    def constant(cls, c, floor_q0=0.0):
        return cls((c,), floor_q0, name="constant")

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def raw_speed(self, theta):
        """Unclamped polynomial value by Horner's rule."""
        theta = np.asarray(theta, dtype=float)
        acc = np.full(theta.shape, self.coefficients[-1])
        for c in reversed(self.coefficients[:-1]):
            acc = acc * theta + c
        return acc if acc.ndim else float(acc)

    def raw_derivative(self, theta, order=1):
        """Analytic derivative of the raw polynomial."""
        poly = np.polynomial.Polynomial(self.coefficients).deriv(order)
        return poly(np.asarray(theta, dtype=float))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def q_of_theta(law, theta):
    """``q = max(c(theta)^2, floor_q0)`` (m^2/s^2)."""
    c = np.asarray(law.raw_speed(theta))
    return _scalar(np.maximum(c * c, law.floor_q0))


def sound_speed(law, theta):
    """Sound speed (m/s), clamped so that ``c >= sqrt(floor_q0)``."""
    return _scalar(np.sqrt(np.asarray(q_of_theta(law, theta))))


def clamp_count(law, theta):
    """Number of nodes where the floor on ``c^2`` is active."""
    c = np.asarray(law.raw_speed(theta))
    return int(np.count_nonzero(c * c < law.floor_q0))


def k_of_theta(medium, law, theta):
    """Nonlinearity coefficient ``k = beta / (rho q(theta))`` (1/Pa)."""
    return _scalar(medium.beta_acou / (medium.rho * np.asarray(q_of_theta(law, theta))))


def sound_diffusivity(alpha_abs, c_a, omega):
    """Sound diffusivity ``b = alpha c_a^3 / omega^2`` from an absorption coefficient (Np/m)."""
    if omega == 0 or not np.isfinite(omega):
        raise InvalidParameterError("omega must be nonzero")
    if c_a <= 0:
        raise InvalidParameterError("c_a must be > 0")
    if alpha_abs < 0:
        raise InvalidParameterError("absorption coefficient must be >= 0")
    return alpha_abs * c_a**3 / omega**2


@dataclass
class AssumptionReport:
    theta: np.ndarray
    min_q: float  # sampled minimum of the clamped q
    min_raw_q: float  # sampled minimum of c^2 before clamping
    q0: float
    clamped: int
    max_dq: float
    max_d2q: float
    max_dk: float
    max_d2k: float
    # fitted constants C in |g(theta)| <= C (1 + |theta|^gamma); descriptive only
    growth_constants: dict
    violations: list

    @property
    def ok(self):
        return not self.violations


def validate_assumptions(medium, law, theta_range, samples=1000):
    """Sample ``q`` and ``k`` on a temperature range and check the structural assumptions.

    Derivatives are centred finite differences of the clamped functions.
    The growth constants are the smallest ``C`` with
    ``|q''| <= C (1 + |theta|^gamma1)``, ``|q'| <= C (1 + |theta|^(gamma1+1))``,
    ``|k'| <= C (1 + |theta|^(gamma2+1))`` and ``|k''| <= C (1 + |theta|^gamma2)``.
    """
    lo, hi = float(theta_range[0]), float(theta_range[1])
    if not hi > lo:
        raise InvalidParameterError("theta_range must be a nonempty interval")
    if samples < 2:
        raise InvalidParameterError("need at least 2 samples")
    theta = np.linspace(lo, hi, int(samples))
    q = np.asarray(q_of_theta(law, theta))
    k = np.asarray(k_of_theta(medium, law, theta))
    raw = np.asarray(law.raw_speed(theta)) ** 2

    spacing = theta[1] - theta[0]
    # first-order one-sided ends keep constant inputs at exactly zero slope
    dq = np.gradient(q, spacing)
    d2q = np.gradient(dq, spacing)
    dk = np.gradient(k, spacing)
    d2k = np.gradient(dk, spacing)

    a = np.abs(theta)
    g1, g2 = medium.gamma1, medium.gamma2
    growth = {
        "q''": float(np.max(np.abs(d2q) / (1 + a**g1))),
        "q'": float(np.max(np.abs(dq) / (1 + a ** (g1 + 1)))),
        "k'": float(np.max(np.abs(dk) / (1 + a ** (g2 + 1)))),
        "k''": float(np.max(np.abs(d2k) / (1 + a**g2))),
    }

    violations = []
    if raw.min() < medium.q0:
        i = int(np.argmin(raw))
        violations.append(
            f"c^2 = {raw[i]:.6g} below q0 = {medium.q0:.6g} at theta = {theta[i]:.6g}"
        )
    if q.min() < medium.q0:
        violations.append(f"clamped q = {q.min():.6g} still below q0 = {medium.q0:.6g}")
    for name, value in growth.items():
        if not np.isfinite(value):
            violations.append(f"growth constant for {name} is not finite")

    return AssumptionReport(
        theta=theta,
        min_q=float(q.min()),
        min_raw_q=float(raw.min()),
        q0=medium.q0,
        clamped=int(np.count_nonzero(raw < law.floor_q0)),
        max_dq=float(np.abs(dq).max()),
        max_d2q=float(np.abs(d2q).max()),
        max_dk=float(np.abs(dk).max()),
        max_d2k=float(np.abs(d2k).max()),
        growth_constants=growth,
        violations=violations,
    )
