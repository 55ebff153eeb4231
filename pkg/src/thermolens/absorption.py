"""Absorbed acoustic energy models ``Q(p_t)`` feeding the heat equation.

Three variants share one scale ``2 b / (rho_a c_a^4)``:

* ``instantaneous``: ``Q = scale * p_t^2`` at the current time;
* ``windowed``: time average of ``scale * p_t^2`` over ``[t_start, t_start + window]``;
* ``full``: time average over ``[0, horizon]``.

Averages use the trapezoidal rule over the stored samples.  Before an
averaging range is complete the average runs over the covered part of it;
before a window opens no energy is absorbed.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidParameterError

VARIANTS = ("instantaneous", "windowed", "full")


@dataclass(frozen=True)
class AbsorptionModel:
    variant: str = "instantaneous"
    scale: float = 0.0
    t_start: float = 0.0
    window: float = None
    horizon: float = None
    decimation: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"unknown absorption variant {self.variant!r}")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise InvalidParameterError("absorption scale must be >= 0")
        if self.variant == "windowed":
            if self.window is None or not self.window > 0:
                raise InvalidParameterError("windowed absorption needs window > 0")
            if self.t_start < 0:
                raise InvalidParameterError("window start must be >= 0")
        if self.variant == "full" and (self.horizon is None or not self.horizon > 0):
            raise InvalidParameterError("full-average absorption needs horizon > 0")
        if int(self.decimation) < 1:
            raise InvalidParameterError("decimation must be >= 1")

    @classmethod
    def from_medium(cls, medium, variant="instantaneous", **kwargs):
        """Build a model with ``scale = 2 b / (rho_a c_a^4)``."""
        scale = 2.0 * medium.b / (medium.rho_a * medium.c_a**4)
        return cls(variant=variant, scale=scale, **kwargs)

    @classmethod
    def windowed_periods(cls, medium, periods, period, t_start):
        """Window of ``periods`` excitation periods of length ``period`` starting at ``t_start``."""
        if int(periods) < 1:
            raise InvalidParameterError("number of averaging periods must be a positive integer")
        return cls.from_medium(medium, "windowed", t_start=t_start, window=int(periods) * period)

    @property
    def averaging_range(self):
        if self.variant == "windowed":
            return (self.t_start, self.t_start + self.window)
        if self.variant == "full":
            return (0.0, self.horizon)
        return None


def _check_history(history):
    if len(history) == 0:
        raise InvalidParameterError("absorption history is empty")
    times = np.array([float(t) for t, _ in history])
    if np.any(np.diff(times) <= 0):
        raise InvalidParameterError("absorption history times must be strictly increasing")
    return times


def absorbed_energy(model, pt_history):
    """Absorbed energy field for a time-ordered list of ``(t, p_t)`` pairs.

    The result is evaluated at the latest time in the history.
    """
    times = _check_history(pt_history)
    latest = np.asarray(pt_history[-1][1], dtype=float)
    if model.variant == "instantaneous":
        return model.scale * latest * latest
    lo, hi = model.averaging_range
    inside = [(t, np.asarray(v, dtype=float)) for t, v in pt_history if lo <= t <= hi]
    if not inside:
        return np.zeros_like(latest)
    if len(inside) == 1:
        return model.scale * inside[0][1] ** 2
    integral = np.zeros_like(latest)
    for (t0, v0), (t1, v1) in zip(inside[:-1], inside[1:]):
        integral += 0.5 * (t1 - t0) * (v0 * v0 + v1 * v1)
    return model.scale * integral / (inside[-1][0] - inside[0][0])


class AbsorptionHistory:
    """Running trapezoidal accumulator of ``p_t^2`` for use inside a time loop.

    Memory is bounded: only the running integral and the last committed
    sample are kept.  With ``decimation = m`` every ``m``-th pushed sample is
    committed.  :meth:`evaluate` gives the absorbed energy a trial sample
    would produce without committing it.
    """

    def __init__(self, model):
        self.model = model
        self._integral = None
        self._t_first = None
        self._t_last = None
        self._last_sq = None
        self._pushed = 0

    def _takes(self, t):
        if self._pushed % int(self.model.decimation) != 0:
            return False
        lo, hi = self.model.averaging_range
        return lo <= t <= hi

    def _accumulated(self, t, sq):
        if self._t_last is None:
            return np.zeros_like(sq), t, t, sq
        integral = self._integral + 0.5 * (t - self._t_last) * (self._last_sq + sq)
        return integral, self._t_first, t, sq

    def _average(self, integral, t_first, t_last, last_sq):
        if t_last is None:
            return None
        if t_last == t_first:
            return self.model.scale * last_sq
        return self.model.scale * integral / (t_last - t_first)

    def evaluate(self, t, pt):
        pt = np.asarray(pt, dtype=float)
        sq = pt * pt
        if self.model.variant == "instantaneous":
            return self.model.scale * sq
        if self._t_last is not None and t <= self._t_last:
            raise InvalidParameterError("absorption history times must be strictly increasing")
        if self._takes(t):
            state = self._accumulated(t, sq)
        else:
            state = (self._integral, self._t_first, self._t_last, self._last_sq)
        q = self._average(*state)
        return np.zeros_like(sq) if q is None else q

    def push(self, t, pt):
        pt = np.asarray(pt, dtype=float)
        if self.model.variant != "instantaneous":
            if self._t_last is not None and t <= self._t_last:
                raise InvalidParameterError("absorption history times must be strictly increasing")
            if self._takes(t):
                self._integral, self._t_first, self._t_last, self._last_sq = self._accumulated(
                    t, pt * pt
                )
        self._pushed += 1

    @property
    def complete(self):
        """True once the averaging range has been fully covered."""
        if self.model.variant == "instantaneous":
            return True
        return self._t_last is not None and self._t_last >= self.model.averaging_range[1]


def _time_l2(grid, times, fields):
    """``L^2(0,T; L^2)`` norm by trapezoidal rule in time."""
    sq = np.array([grid.inner(f, f) for f in fields])
    if len(times) == 1:
        return float(np.sqrt(sq[0]))
    return float(np.sqrt(trapezoid(sq, times)))


def _time_l2_linf(times, fields):
    """``L^2(0,T; L^inf)`` norm."""
    sup = np.array([np.abs(f).max(initial=0.0) for f in fields])
    if len(times) == 1:
        return float(sup[0])
    return float(np.sqrt(trapezoid(sup**2, times)))


def q_series(model, times, fields):
    """Absorbed energy at every sample time, each computed from the prefix up to it."""
    hist = AbsorptionHistory(model)
    out = []
    for t, f in zip(times, fields):
        out.append(hist.evaluate(t, f))
        hist.push(t, f)
    return out


def lipschitz_probe(grid, model, times, u_history, v_history, u_t_history=None, v_t_history=None):
    """Empirical Lipschitz ratio of ``Q`` between two ``p_t`` histories.

    Returns a dict with ``lhs = ||Q(u) - Q(v)||_{L2 L2}``,
    ``rhs_factor = (||u||_{Linf Linf} + ||v||_{Linf Linf}) ||u - v||_{L2 L2}``
    and ``ratio = lhs / rhs_factor`` (``0/0 -> 0``).

    If the time derivatives ``u_t``, ``v_t`` (i.e. ``p_tt``) are given, the
    second bound on ``d/dt [Q(u) - Q(v)]`` is probed as well.  It is only
    computed for the instantaneous model; a completed average is constant in
    time, so its derivative is reported as identically zero.
    """
    times = np.asarray(times, dtype=float)
    u_history = [np.asarray(u, dtype=float) for u in u_history]
    v_history = [np.asarray(v, dtype=float) for v in v_history]
    if len(u_history) != len(times) or len(v_history) != len(times):
        raise InvalidParameterError("histories and times must have equal length")
    for u, v in zip(u_history, v_history):
        if u.shape != grid.shape or v.shape != grid.shape:
            raise InvalidParameterError("history fields must match the grid")
    if np.any(np.diff(times) <= 0):
        raise InvalidParameterError("times must be strictly increasing")

    qu = q_series(model, times, u_history)
    qv = q_series(model, times, v_history)
    lhs = _time_l2(grid, times, [a - b for a, b in zip(qu, qv)])
    sup = max(np.abs(u).max(initial=0.0) for u in u_history) + max(
        np.abs(v).max(initial=0.0) for v in v_history
    )
    rhs = sup * _time_l2(grid, times, [u - v for u, v in zip(u_history, v_history)])
    out = {"lhs": lhs, "rhs_factor": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0}

    if u_t_history is not None and v_t_history is not None:
        if model.variant == "instantaneous":
            # d/dt Q(u) = 2 scale u u_t
            diff = [
                2 * model.scale * (u * ut - v * vt)
                for u, ut, v, vt in zip(u_history, u_t_history, v_history, v_t_history)
            ]
            lhs_t = _time_l2(grid, times, diff)
            dut = max(grid.lp(ut - vt, 2) for ut, vt in zip(u_t_history, v_t_history))
            vt_sup = max(grid.lp(vt, 2) for vt in v_t_history)
            rhs_t = _time_l2_linf(times, u_history) * dut + vt_sup * _time_l2_linf(
                times, [u - v for u, v in zip(u_history, v_history)]
            )
            out.update(
                dt_lhs=lhs_t,
                dt_rhs_factor=rhs_t,
                dt_ratio=lhs_t / rhs_t if rhs_t > 0 else 0.0,
                dt_identically_zero=False,
            )
        else:
            out.update(dt_lhs=0.0, dt_rhs_factor=0.0, dt_ratio=0.0, dt_identically_zero=True)
    return out
