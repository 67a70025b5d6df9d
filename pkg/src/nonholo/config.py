"""Run configuration files.

A run is described by four sections::

    [system]        model = "car" plus CarParams fields, or
                    model = "custom" with factory = "pkg.module:function"
    [controller]    L, k, Dhat, eps_w1
    [simulation]    dt, duration, initial_q, initial_p, log_stride, converge_tol
    [output]        directory, formats

TOML is the primary format; a file ending in ``.json`` is read as JSON with
the same layout.  Every problem is reported as a :class:`ConfigError` whose
message starts with ``path:line:`` so editors can jump to it.
"""

import importlib
import json
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .car import CarParams, car_chained
from .chained import ChainedSystem
from .control import ControllerParams
from .errors import ConfigError
from .sim import SimConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

FORMATS = ("csv", "summary", "svg")
_CAR_KEYS = tuple(f.name for f in fields(CarParams))
_SECTIONS = {
    "system": ("model", "factory") + _CAR_KEYS,
    "controller": ("L", "k", "Dhat", "eps_w1"),
    "simulation": ("dt", "duration", "initial_q", "initial_p", "log_stride", "converge_tol"),
    "output": ("directory", "formats"),
}
_REQUIRED = {
    "controller": ("L", "k", "Dhat"),
    "simulation": ("initial_q",),
}


@dataclass(frozen=True)
class SimSection:
    initial_q: tuple
    initial_p: Optional[tuple] = None
    dt: float = 1e-3
    duration: float = 60.0
    log_stride: int = 1
    converge_tol: float = 1e-3

    def to_sim_config(self, dt=None, duration=None):
        return SimConfig(
            initial_q=np.array(self.initial_q, dtype=float),
            initial_p=None if self.initial_p is None else np.array(self.initial_p, dtype=float),
            dt=self.dt if dt is None else dt,
            duration=self.duration if duration is None else duration,
            log_stride=self.log_stride,
            converge_tol=self.converge_tol,
        )


@dataclass(frozen=True)
class RunConfig:
    model: str
    car: Optional[CarParams]
    factory: Optional[str]
    controller: ControllerParams
    simulation: SimSection
    out_dir: Path
    formats: tuple
    source: Optional[Path] = None

    def build_system(self):
        """The chained system the run acts on."""
        if self.model == "car":
            return car_chained(self.car)
        mod_name, _, attr = self.factory.partition(":")
        cs = getattr(importlib.import_module(mod_name), attr)()
        if not isinstance(cs, ChainedSystem):
            raise ConfigError(f"factory {self.factory} did not return a ChainedSystem")
        return cs


class _Locator:
    """Maps ``section.key`` to the line it was written on."""

    def __init__(self, path, text, is_json):
        self.path = path
        self.lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), start=1):
            if is_json:
                for key in re.findall(r'"([A-Za-z_][A-Za-z0-9_]*)"\s*:', line):
                    if key in _SECTIONS:
                        section = key
                        self.lines.setdefault(key, no)
                    elif section is not None:
                        self.lines.setdefault(f"{section}.{key}", no)
                continue
            m = re.match(r"\s*\[\s*([A-Za-z_]+)\s*\]", line)
            if m:
                section = m.group(1)
                self.lines.setdefault(section, no)
                continue
            m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=", line)
            if m and section is not None:
                self.lines.setdefault(f"{section}.{m.group(1)}", no)

    def error(self, where, msg):
        line = self.lines.get(where, self.lines.get(where.split(".")[0], 1))
        return ConfigError(f"{self.path}:{line}: {where}: {msg}")


def _parse_text(path, text):
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        line = m.group(1) if m else "1"
        raise ConfigError(f"{path}:{line}: {exc}") from exc


def _number(loc, where, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise loc.error(where, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise loc.error(where, f"expected an integer, got {value!r}")
    if not np.isfinite(value):
        raise loc.error(where, "must be finite")
    return int(value) if integer else float(value)


def _vector(loc, where, value, size=None):
    if not isinstance(value, list):
        raise loc.error(where, f"expected a list of numbers, got {value!r}")
    out = tuple(_number(loc, where, v) for v in value)
    if size is not None and len(out) != size:
        raise loc.error(where, f"expected {size} entries, got {len(out)}")
    return out


def parse_config(data, path="<config>", text=""):
    """Validate a decoded configuration mapping."""
    path = Path(path)
    loc = _Locator(path, text, path.suffix.lower() == ".json")
    if not isinstance(data, dict):
        raise loc.error("config", "top level must be a table")
    for section, body in data.items():
        if section not in _SECTIONS:
            raise loc.error(section, "unknown section")
        if not isinstance(body, dict):
            raise loc.error(section, "must be a table")
        for key in body:
            if key not in _SECTIONS[section]:
                raise loc.error(f"{section}.{key}", "unknown key")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in data.get(section, {}):
                raise loc.error(f"{section}.{key}", "missing required key")

    system = data.get("system", {})
    model = system.get("model", "car")
    car, factory = None, None
    if model == "car":
        if "factory" in system:
            raise loc.error("system.factory", "only valid with model = \"custom\"")
        kw = {k: _number(loc, f"system.{k}", system[k]) for k in _CAR_KEYS if k in system}
        try:
            car = CarParams(**kw)
        except ValueError as exc:
            name = str(exc).split()[0]
            raise loc.error(f"system.{name}", str(exc)) from exc
    elif model == "custom":
        factory = system.get("factory")
        if not isinstance(factory, str) or ":" not in factory:
            raise loc.error("system.factory", "expected \"module:function\"")
        extra = [k for k in system if k in _CAR_KEYS]
        if extra:
            raise loc.error(f"system.{extra[0]}", "car parameters need model = \"car\"")
    else:
        raise loc.error("system.model", f"expected \"car\" or \"custom\", got {model!r}")

    ctrl = data["controller"]
    L = _vector(loc, "controller.L", ctrl["L"])
    k = _number(loc, "controller.k", ctrl["k"])
    Dhat = ctrl["Dhat"]
    if not isinstance(Dhat, list) or not all(isinstance(r, list) for r in Dhat):
        raise loc.error("controller.Dhat", "expected a 2x2 nested list")
    Dhat = [_vector(loc, "controller.Dhat", r, 2) for r in Dhat]
    eps = _number(loc, "controller.eps_w1", ctrl.get("eps_w1", 1e-9))
    if model == "car" and len(L) != 4:
        raise loc.error("controller.L", f"the car needs 4 entries, got {len(L)}")
    try:
        controller = ControllerParams(L=np.array(L), k=k, Dhat=np.array(Dhat), eps_w1=eps)
    except ValueError as exc:
        name = str(exc).split()[0].rstrip(":")
        raise loc.error(f"controller.{name}", str(exc)) from exc

    sim = data["simulation"]
    kw = {"initial_q": _vector(loc, "simulation.initial_q", sim["initial_q"])}
    if "initial_p" in sim:
        kw["initial_p"] = _vector(loc, "simulation.initial_p", sim["initial_p"])
    for key in ("dt", "duration", "converge_tol"):
        if key in sim:
            kw[key] = _number(loc, f"simulation.{key}", sim[key])
    if "log_stride" in sim:
        kw["log_stride"] = _number(loc, "simulation.log_stride", sim["log_stride"], integer=True)
    section = SimSection(**kw)
    if model == "car":
        if len(section.initial_q) != 4:
            raise loc.error("simulation.initial_q", "the car needs 4 entries")
        if section.initial_p is not None and len(section.initial_p) != 2:
            raise loc.error("simulation.initial_p", "the car needs 2 entries")
    checks = (
        ("dt", section.dt > 0, "must be positive"),
        ("duration", section.duration >= 0, "must be non-negative"),
        ("log_stride", section.log_stride >= 1, "must be at least 1"),
        ("converge_tol", section.converge_tol > 0, "must be positive"),
    )
    for key, ok, msg in checks:
        if not ok:
            raise loc.error(f"simulation.{key}", msg)
    if 0 < section.duration < section.dt:
        raise loc.error("simulation.duration", "must be zero or at least dt")

    out = data.get("output", {})
    directory = out.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise loc.error("output.directory", "expected a non-empty string")
    formats = out.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise loc.error("output.formats", f"expected a list drawn from {list(FORMATS)}")

    return RunConfig(
        model=model, car=car, factory=factory, controller=controller,
        simulation=section, out_dir=Path(directory), formats=tuple(formats),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}:0: cannot read: {exc.strerror}") from exc
    cfg = parse_config(_parse_text(path, text), path, text)
    out_dir = cfg.out_dir if cfg.out_dir.is_absolute() else Path(os.path.normpath(path.parent / cfg.out_dir))
    return RunConfig(**{**cfg.__dict__, "out_dir": out_dir, "source": path})
