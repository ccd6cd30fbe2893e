"""Flat ``key = value`` experiment configuration with sections.

Example::

    [ic]
    name = example_A

    [grid]
    N = 124

    [stepping]
    tau0 = 1e-6
    tau1 = 1e-6
    tau_min = 1e-9

A built-in IC supplies the problem parameters; keys in ``[problem]``
override them. Explicit coefficients ``c0, c1, c2`` need ``a``, ``p`` and
``q`` in ``[problem]``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .core import ExperimentConfig, PhiSpec, ProblemSpec
from .ic import BUILTIN_ICS, InitialCondition

__all__ = ["ConfigError", "LoadedConfig", "load_config", "parse_config"]

SCHEMA = {
    "problem": {"a": float, "p": float, "q": float, "r": float, "phi": str, "m": float},
    "ic": {"name": str, "c0": float, "c1": float, "c2": float},
    "grid": {"N": int},
    "stepping": {
        "tau0": float, "tau1": float, "tau_min": float, "tau_max": float,
        "epsilon_quench": float, "mode": str, "max_time": float, "max_steps": int,
    },
    "analysis": {
        "window_decades": float, "fit_floor": float,
        "tau": float, "t_compare": float, "ref_divisor": int,
    },
    "output": {"output_dir": str, "sample_stride": int, "tail_samples": int},
}


class ConfigError(ValueError):
    def __init__(self, message, lineno=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
        self.lineno = lineno


@dataclass
class LoadedConfig:
    """Parsed configuration plus the raw values for the manifest snapshot."""

    experiment: ExperimentConfig
    analysis: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    source: Path | None = None


def _line_index(text):
    """Map (section, key) to its 1-based line number."""
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = lineno
            continue
        if section and "=" in stripped and not stripped.startswith(("#", ";")):
            key = stripped.split("=", 1)[0].strip()
            index[(section, key)] = lineno
    return index


def _convert(kind, value):
    if kind is int:
        f = float(value)
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(f)
    if kind is float:
        f = float(value)
        if math.isnan(f):
            raise ValueError("NaN is not allowed")
        return f
    return value.strip()


def parse_config(text: str, path=None) -> LoadedConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path or "<config>"))
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", lineno, path) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), path) from None

    lines = _line_index(text)
    values = {}
    raw = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)), path)
        raw[section] = dict(parser[section])
        for key, value in parser[section].items():
            kind = SCHEMA[section].get(key)
            if kind is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]", lines.get((section, key)), path)
            try:
                values[(section, key)] = _convert(kind, value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", lines.get((section, key)), path) from None

    def get(section, key, default=None):
        return values.get((section, key), default)

    def fail(message, section, key=None):
        return ConfigError(message, lines.get((section, key)) or lines.get((section, None)), path)

    name = get("ic", "name")
    coeffs = [get("ic", c) for c in ("c0", "c1", "c2")]
    if name is not None:
        if name not in BUILTIN_ICS:
            raise fail(f"unknown initial condition {name!r}; built-ins: {sorted(BUILTIN_ICS)}", "ic", "name")
        if any(c is not None for c in coeffs):
            raise fail("give either ic name or coefficients, not both", "ic", "name")
        base, ic = BUILTIN_ICS[name]()
    else:
        if any(c is None for c in coeffs):
            raise fail("[ic] needs a name or all of c0, c1, c2", "ic")
        base, ic = None, None

    try:
        kind = get("problem", "phi", base.phi.kind if base else "identity")
        m = get("problem", "m", base.phi.m if base else None)
        phi = PhiSpec(kind, m if kind == "power" else None)
        params = {}
        for key in ("a", "p", "q", "r"):
            default = getattr(base, key) if base else (2.0 if key == "r" else None)
            params[key] = get("problem", key, default)
            if params[key] is None:
                raise fail(f"missing [problem] {key}", "problem")
        spec = ProblemSpec(phi=phi, **params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise fail(str(exc), "problem") from None

    try:
        if ic is None or ic.domain_length != spec.a:
            ic = InitialCondition(tuple(coeffs) if ic is None else ic.coeffs, spec.a)
    except ValueError as exc:
        raise fail(str(exc), "ic") from None

    N = get("grid", "N")
    if N is None:
        raise fail("missing [grid] N", "grid")

    kwargs = {}
    for key in SCHEMA["stepping"]:
        if (v := get("stepping", key)) is not None:
            kwargs[key] = v
    for key in ("sample_stride", "tail_samples", "output_dir"):
        if (v := get("output", key)) is not None:
            kwargs[key] = v
    for key in ("window_decades", "fit_floor"):
        if (v := get("analysis", key)) is not None:
            kwargs[key] = v
    if "output_dir" in kwargs and path is not None:
        out = Path(kwargs["output_dir"])
        kwargs["output_dir"] = out if out.is_absolute() else Path(path).parent / out
    try:
        experiment = ExperimentConfig(problem=spec, ic=ic, N=N, **kwargs)
    except (TypeError, ValueError) as exc:
        raise fail(str(exc), "stepping") from None

    analysis = {key: get("analysis", key) for key in ("tau", "t_compare", "ref_divisor")}
    return LoadedConfig(experiment, analysis, raw, Path(path) if path else None)


def load_config(path) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return parse_config(text, path)
