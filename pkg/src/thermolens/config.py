"""INI-style configuration documents.

Sections: ``[grid] [medium] [sound_speed] [absorption] [time] [picard]
[initial] [source] [output] [diagnostics] [mms]``.  Keys are case
sensitive (``C_a`` is a heat capacity, ``c_a`` a sound speed).  Unknown
sections and keys are rejected.  See the README for the defaults table.
"""
import configparser
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .absorption import AbsorptionModel
from .coupled import AcousticSource, Profile, SimConfig
from .errors import ConfigError, InvalidParameterError
from .grid import Grid
from .manufactured import ManufacturedSolution, TimeEnvelope
from .materials import WATER_QUINTIC, MediumParams, SoundSpeedLaw, sound_diffusivity

_PROFILE_KEYS = ("", "_amplitude", "_center", "_width", "_modes")

SCHEMA = {
    "grid": {"extent", "n"},
    "medium": {
        "rho", "beta_acou", "b", "alpha_abs", "rho_a", "C_a", "kappa_a", "rho_b", "C_b",
        "W", "Theta_a", "c_a", "omega", "q0", "gamma1", "gamma2",
    },
    "sound_speed": {"law", "coefficients", "speed", "freeze_temperature"},
    "absorption": {"variant", "t_start", "periods", "period", "window", "horizon", "decimation"},
    "time": {"dt", "t_end"},
    "picard": {"tol", "max_iter"},
    "initial": {f"{f}{s}" for f in ("p0", "p1", "theta0") for s in _PROFILE_KEYS},
    "source": {
        "kind", "amplitude", "frequency", "duration", "center", "width", "radius",
        "aperture", "direction", "ramp_cycles",
    },
    "output": {"every"},
    "diagnostics": {"degeneracy_floor", "gamma_fraction", "gronwall_cap"},
    "mms": {
        "p_amplitude", "p_modes", "p_envelope", "p_omega",
        "theta_amplitude", "theta_modes", "theta_envelope", "theta_omega",
        "levels_n", "levels_dt",
    },
}
REQUIRED_SECTIONS = ("grid", "medium", "time")
REQUIRED = {
    "grid": ("extent", "n"),
    "medium": ("rho", "beta_acou", "rho_a", "C_a", "kappa_a", "rho_b", "C_b", "c_a", "q0"),
    "time": ("dt", "t_end"),
}
DEFAULTS = {
    "picard.tol": 1e-10,
    "picard.max_iter": 50,
    "diagnostics.degeneracy_floor": 0.1,
    "diagnostics.gamma_fraction": 1.0,
    "diagnostics.gronwall_cap": float("inf"),
    "absorption.variant": "instantaneous",
    "sound_speed.law": "constant",
    "output.every": 1,
}


def _lineno(text, section, key):
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return i
    return None


class _Reader:
    def __init__(self, parser, text):
        self.parser = parser
        self.text = text

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def _raw(self, section, key):
        return self.parser.get(section, key).strip()

    def _fail(self, section, key, message):
        name = f"{section}.{key}"
        raise ConfigError(f"{name}: {message}", key=name, lineno=_lineno(self.text, section, key))

    def get(self, section, key, convert, default=None):
        if not self.has(section, key):
            dotted = f"{section}.{key}"
            if dotted in DEFAULTS and default is None:
                return DEFAULTS[dotted]
            return default
        raw = self._raw(section, key)
        try:
            return convert(raw)
        except (TypeError, ValueError) as exc:
            self._fail(section, key, f"cannot parse {raw!r} ({exc})")

    def require(self, section, key, convert):
        if not self.has(section, key):
            raise ConfigError(f"{section}.{key}: required key missing", key=f"{section}.{key}")
        return self.get(section, key, convert)


def _floats(raw):
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _ints(raw):
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _make_parser():
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True
    )
    parser.optionxform = str
    return parser


def _read(text):
    parser = _make_parser()
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any section", lineno=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"line {lineno}: cannot parse {exc.errors[0][1]!r}", lineno=lineno) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message}", lineno=exc.lineno) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]", key=section, lineno=_lineno(text, section, "")
            )
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"{section}.{key}: unknown key",
                    key=f"{section}.{key}",
                    lineno=_lineno(text, section, key),
                )
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing required section [{section}]", key=section)
    for section in SCHEMA:
        if not parser.has_section(section):
            parser.add_section(section)
    return _Reader(parser, text)


def _medium(r):
    kw = {key: r.require("medium", key, float) for key in REQUIRED["medium"]}
    for key in ("W", "Theta_a", "omega", "gamma1", "gamma2"):
        if r.has("medium", key):
            kw[key] = r.get("medium", key, float)
    if r.has("medium", "b"):
        kw["b"] = r.get("medium", "b", float)
        if r.has("medium", "alpha_abs"):
            raise ConfigError("medium: give either b or alpha_abs, not both", key="medium.alpha_abs")
    elif r.has("medium", "alpha_abs"):
        omega = kw.get("omega", MediumParams.__dataclass_fields__["omega"].default)
        kw["b"] = sound_diffusivity(r.get("medium", "alpha_abs", float), kw["c_a"], omega)
    else:
        raise ConfigError("medium.b: required key missing (or give medium.alpha_abs)", key="medium.b")
    return MediumParams(**kw)


def _law(r, medium):
    law = r.get("sound_speed", "law", str).lower()
    if law == "water":
        return SoundSpeedLaw.water(floor_q0=medium.q0)
    if law == "constant":
        return SoundSpeedLaw.constant(r.get("sound_speed", "speed", float, medium.c_a), medium.q0)
    if law == "polynomial":
        return SoundSpeedLaw(r.require("sound_speed", "coefficients", _floats), medium.q0)
    raise ConfigError(
        f"sound_speed.law: unknown law {law!r}", key="sound_speed.law",
        lineno=_lineno(r.text, "sound_speed", "law"),
    )


def _absorption(r, medium):
    variant = r.get("absorption", "variant", str).lower()
    kw = {"decimation": r.get("absorption", "decimation", int, 1)}
    if variant == "windowed":
        kw["t_start"] = r.get("absorption", "t_start", float, 0.0)
        if r.has("absorption", "window"):
            kw["window"] = r.get("absorption", "window", float)
        else:
            periods = r.require("absorption", "periods", int)
            if periods < 1:
                raise ConfigError("absorption.periods must be a positive integer", key="absorption.periods")
            kw["window"] = periods * r.require("absorption", "period", float)
    elif variant == "full":
        kw["horizon"] = r.require("absorption", "horizon", float)
    return AbsorptionModel.from_medium(medium, variant, **kw)


def _profile(r, name):
    return Profile(
        kind=r.get("initial", name, str, "zero").lower(),
        amplitude=r.get("initial", f"{name}_amplitude", float, 0.0),
        center=r.get("initial", f"{name}_center", _floats, ()),
        width=r.get("initial", f"{name}_width", float, 0.0),
        modes=r.get("initial", f"{name}_modes", _ints, ()),
    )


def _source(r):
    return AcousticSource(
        kind=r.get("source", "kind", str, "none").lower(),
        amplitude=r.get("source", "amplitude", float, 0.0),
        frequency=r.get("source", "frequency", float, 0.0),
        duration=r.get("source", "duration", float, float("inf")),
        center=r.get("source", "center", _floats, ()),
        width=r.get("source", "width", float, 0.0),
        radius=r.get("source", "radius", float, 0.0),
        aperture=r.get("source", "aperture", float, 60.0),
        direction=r.get("source", "direction", float, 180.0),
        ramp_cycles=r.get("source", "ramp_cycles", float, 0.0),
    )


def _envelope(r, prefix):
    coeffs = r.get("mms", f"{prefix}_envelope", _floats, (1.0, 0.0, 0.0, 0.0))
    if len(coeffs) != 4:
        raise ConfigError(f"mms.{prefix}_envelope needs 4 numbers (c0, c1, a, b)", key=f"mms.{prefix}_envelope")
    return TimeEnvelope(*coeffs, omega=r.get("mms", f"{prefix}_omega", float, 0.0))


def _mms(r):
    if not r.parser.options("mms"):
        return None
    ns = r.get("mms", "levels_n", _ints, ())
    dts = r.get("mms", "levels_dt", _floats, ())
    if len(ns) != len(dts):
        raise ConfigError("mms.levels_n and mms.levels_dt must have equal length", key="mms.levels_dt")
    return ManufacturedSolution(
        p_amplitude=r.get("mms", "p_amplitude", float, 0.0),
        p_modes=r.get("mms", "p_modes", _ints, (1,)),
        p_envelope=_envelope(r, "p"),
        theta_amplitude=r.get("mms", "theta_amplitude", float, 0.0),
        theta_modes=r.get("mms", "theta_modes", _ints, (1,)),
        theta_envelope=_envelope(r, "theta"),
        levels=tuple(zip(ns, dts)),
    )


def parse_config(text):
    """Parse and validate a configuration document into a :class:`SimConfig`."""
    r = _read(text)
    try:
        grid = Grid(r.require("grid", "extent", _floats), r.require("grid", "n", _ints))
        medium = _medium(r)
        return SimConfig(
            grid=grid,
            medium=medium,
            law=_law(r, medium),
            absorption=_absorption(r, medium),
            dt=r.require("time", "dt", float),
            t_end=r.require("time", "t_end", float),
            picard_tol=r.get("picard", "tol", float),
            picard_max_iter=r.get("picard", "max_iter", int),
            degeneracy_floor=r.get("diagnostics", "degeneracy_floor", float),
            p0=_profile(r, "p0"),
            p1=_profile(r, "p1"),
            theta0=_profile(r, "theta0"),
            source=_source(r),
            output_every=r.get("output", "every", int),
            freeze_temperature=r.get("sound_speed", "freeze_temperature", _bool, False),
            gamma_fraction=r.get("diagnostics", "gamma_fraction", float),
            gronwall_cap=r.get("diagnostics", "gronwall_cap", float),
            mms=_mms(r),
        )
    except InvalidParameterError as exc:
        m = re.match(r"([a-z_]+\.[A-Za-z_0-9]+)", str(exc))
        key = m.group(1) if m else None
        lineno = _lineno(text, *key.split(".")) if key else None
        raise ConfigError(str(exc), key=key, lineno=lineno) from exc


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def render_config(cfg):
    """Canonical text form; ``parse_config(render_config(cfg)) == cfg``."""
    m = cfg.medium
    sections = {
        "grid": {"extent": cfg.grid.extents, "n": cfg.grid.n},
        "medium": {
            key: getattr(m, key)
            for key in ("rho", "beta_acou", "b", "rho_a", "C_a", "kappa_a", "rho_b", "C_b",
                        "W", "Theta_a", "c_a", "omega", "q0", "gamma1", "gamma2")
        },
    }
    law = cfg.law
    if law.coefficients == tuple(WATER_QUINTIC):
        ss = {"law": "water"}
    elif law.degree == 0:
        ss = {"law": "constant", "speed": law.coefficients[0]}
    else:
        ss = {"law": "polynomial", "coefficients": law.coefficients}
    ss["freeze_temperature"] = cfg.freeze_temperature
    sections["sound_speed"] = ss

    a = cfg.absorption
    ab = {"variant": a.variant, "decimation": int(a.decimation)}
    if a.variant == "windowed":
        ab.update(t_start=a.t_start, window=a.window)
    elif a.variant == "full":
        ab["horizon"] = a.horizon
    sections["absorption"] = ab
    sections["time"] = {"dt": cfg.dt, "t_end": cfg.t_end}
    sections["picard"] = {"tol": cfg.picard_tol, "max_iter": int(cfg.picard_max_iter)}

    init = {}
    for name in ("p0", "p1", "theta0"):
        prof = getattr(cfg, name)
        init[name] = prof.kind
        init[f"{name}_amplitude"] = prof.amplitude
        if prof.center:
            init[f"{name}_center"] = prof.center
        init[f"{name}_width"] = prof.width
        if prof.modes:
            init[f"{name}_modes"] = prof.modes
    sections["initial"] = init

    s = cfg.source
    src = {"kind": s.kind}
    if s.kind != "none":
        src.update(
            amplitude=s.amplitude, frequency=s.frequency, duration=s.duration, center=s.center,
            width=s.width, radius=s.radius, aperture=s.aperture, direction=s.direction,
            ramp_cycles=s.ramp_cycles,
        )
    sections["source"] = src
    sections["output"] = {"every": int(cfg.output_every)}
    sections["diagnostics"] = {
        "degeneracy_floor": cfg.degeneracy_floor,
        "gamma_fraction": cfg.gamma_fraction,
        "gronwall_cap": cfg.gronwall_cap,
    }
    if cfg.mms is not None:
        ms = cfg.mms
        mm = {}
        for prefix in ("p", "theta"):
            env = getattr(ms, f"{prefix}_envelope")
            mm[f"{prefix}_amplitude"] = getattr(ms, f"{prefix}_amplitude")
            mm[f"{prefix}_modes"] = getattr(ms, f"{prefix}_modes")
            mm[f"{prefix}_envelope"] = env.as_tuple()
            mm[f"{prefix}_omega"] = env.omega
        if ms.levels:
            mm["levels_n"] = tuple(n for n, _ in ms.levels)
            mm["levels_dt"] = tuple(dt for _, dt in ms.levels)
        sections["mms"] = mm

    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in entries.items())
        lines.append("")
    return "\n".join(lines)


def preset_names():
    return sorted(
        p.name for p in resources.files("thermolens").joinpath("configs").iterdir()
        if p.name.endswith(".cfg")
    )


def read_config_text(name_or_path):
    """Text of a config file, falling back to the shipped presets by name."""
    path = Path(name_or_path)
    if path.exists():
        return path.read_text()
    preset = resources.files("thermolens").joinpath("configs", path.name)
    if preset.is_file():
        return preset.read_text()
    raise FileNotFoundError(f"no config file or preset named {str(name_or_path)!r}")


def load_config(name_or_path):
    return parse_config(read_config_text(name_or_path))
