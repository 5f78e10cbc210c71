"""INI-style problem configuration: loading, validation, defaults, writing.

Sections mirror the modules::

    [model]      rho0 c f0 L multipliers d_lo d_hi a d0
    [integrate]  grid_m
    [optimize]   max_iters tol penalty_w restarts seed phi0_lo phi0_hi
    [cli]        output_dir

``penalty_w = auto`` selects the energy-scaled default weight.  Preset names
(``paper_n2``, ``paper_n5``, ``paper_n10``) resolve to the files shipped in
``hornopt/presets``.
"""

import configparser
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import model
from .errors import ConfigError
from .optimize import OptimizerConfig, Problem

log = logging.getLogger(__name__)


@dataclass
class OptSettings:
    max_iters: int = 500
    tol: float = 1e-5
    penalty_w: Optional[float] = None
    restarts: int = 3
    seed: int = 0
    phi0_lo: float = 1.0
    phi0_hi: float = 1.0

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(self.max_iters, self.tol, self.restarts, self.seed)


@dataclass
class ProblemConfig:
    params: model.PhysicalParams = field(default_factory=model.PhysicalParams)
    harmonics: Optional[model.HarmonicSpec] = None
    bounds: model.ControlBounds = field(default_factory=model.ControlBounds)
    d0: float = 0.02
    grid_m: int = 513
    opt: OptSettings = field(default_factory=OptSettings)
    output_dir: str = "hornopt_out"

    def __post_init__(self):
        if self.harmonics is None:
            self.harmonics = model.HarmonicSpec.from_params((1, 2), self.params)
        if int(self.grid_m) != self.grid_m or self.grid_m < 3:
            raise ConfigError("integrate.grid_m", f"must be an integer >= 3, got {self.grid_m}")
        if not self.d0 >= self.bounds.a:
            raise ConfigError("model.d0", f"must be at least the floor a={self.bounds.a}")

    def problem(self) -> Problem:
        return Problem.build(
            self.params, self.harmonics.multipliers, self.bounds, self.d0, self.grid_m,
            self.opt.penalty_w, phi0_lo=self.opt.phi0_lo, phi0_hi=self.opt.phi0_hi,
        )


# (section, key, parser, default)
def _int(text):
    return int(text)


def _multipliers(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _penalty(text):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


_FIELDS = [
    ("model", "rho0", float, 1.0),
    ("model", "c", float, 340.0),
    ("model", "f0", float, 440.0),
    ("model", "L", float, 0.772),
    ("model", "multipliers", _multipliers, (1, 2)),
    ("model", "d_lo", float, -0.2),
    ("model", "d_hi", float, 0.2),
    ("model", "a", float, 1e-3),
    ("model", "d0", float, 0.02),
    ("integrate", "grid_m", _int, 513),
    ("optimize", "max_iters", _int, 500),
    ("optimize", "tol", float, 1e-5),
    ("optimize", "penalty_w", _penalty, None),
    ("optimize", "restarts", _int, 3),
    ("optimize", "seed", _int, 0),
    ("optimize", "phi0_lo", float, 1.0),
    ("optimize", "phi0_hi", float, 1.0),
    ("cli", "output_dir", str, "hornopt_out"),
]

PRESETS = ("paper_n2", "paper_n5", "paper_n10")


def _resolve(path):
    p = Path(path)
    if p.exists():
        return p.read_text(), str(p)
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    if stem in PRESETS and p.parent == Path("."):
        ref = resources.files("hornopt") / "presets" / f"{stem}.cfg"
        return ref.read_text(), f"preset:{stem}"
    raise FileNotFoundError(f"config file not found: {path}")


def parse_config(text: str, source: str = "<string>") -> ProblemConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep 'L' upper-case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"cannot parse {source}: {exc}") from None

    known = {(s, k) for s, k, _, _ in _FIELDS}
    for section in parser.sections():
        for key in parser[section]:
            if (section, key) not in known:
                raise ConfigError(f"{section}.{key}", "unknown setting")

    values = {}
    defaulted = []
    for section, key, conv, default in _FIELDS:
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                values[key] = conv(raw)
            except ValueError:
                raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}") from None
        else:
            values[key] = default
            defaulted.append(f"{section}.{key}")
    if defaulted:
        log.warning("%s: using defaults for %s", source, ", ".join(defaulted))
    return _build(values)


def _build(v) -> ProblemConfig:
    def qualified(section, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except ConfigError as exc:
            if "." in exc.field:
                raise
            msg = str(exc).split(": ", 1)[-1]
            raise ConfigError(f"{section}.{exc.field}", msg) from None

    params = qualified("model", model.PhysicalParams, v["rho0"], v["c"], v["f0"], v["L"])
    harmonics = qualified("model", model.HarmonicSpec.from_params, v["multipliers"], params)
    bounds = qualified("model", model.ControlBounds, v["d_lo"], v["d_hi"], v["a"])
    opt = OptSettings(v["max_iters"], v["tol"], v["penalty_w"], v["restarts"], v["seed"],
                      v["phi0_lo"], v["phi0_hi"])
    if opt.max_iters < 0:
        raise ConfigError("optimize.max_iters", "must be non-negative")
    if not opt.tol > 0:
        raise ConfigError("optimize.tol", "must be positive")
    if opt.restarts < 1:
        raise ConfigError("optimize.restarts", "must be at least 1")
    if opt.penalty_w is not None and not opt.penalty_w >= 0:
        raise ConfigError("optimize.penalty_w", "must be non-negative")
    if not opt.phi0_lo <= opt.phi0_hi:
        raise ConfigError("optimize.phi0_lo", "must not exceed phi0_hi")
    return ProblemConfig(params, harmonics, bounds, v["d0"], v["grid_m"], opt, v["output_dir"])


def load_config(path) -> ProblemConfig:
    """Read and validate a config file (or a preset name)."""
    text, source = _resolve(path)
    return parse_config(text, source)


def config_values(cfg: ProblemConfig) -> dict:
    return {
        "model": {
            "rho0": cfg.params.rho0, "c": cfg.params.c, "f0": cfg.params.f0, "L": cfg.params.L,
            "multipliers": list(cfg.harmonics.multipliers),
            "d_lo": cfg.bounds.d_lo, "d_hi": cfg.bounds.d_hi, "a": cfg.bounds.a, "d0": cfg.d0,
        },
        "integrate": {"grid_m": cfg.grid_m},
        "optimize": {
            "max_iters": cfg.opt.max_iters, "tol": cfg.opt.tol, "penalty_w": cfg.opt.penalty_w,
            "restarts": cfg.opt.restarts, "seed": cfg.opt.seed,
            "phi0_lo": cfg.opt.phi0_lo, "phi0_hi": cfg.opt.phi0_hi,
        },
        "cli": {"output_dir": cfg.output_dir},
    }


def dump_config(cfg: ProblemConfig) -> str:
    lines = []
    for section, entries in config_values(cfg).items():
        lines.append(f"[{section}]")
        for key, value in entries.items():
            if key == "multipliers":
                text = ", ".join(str(j) for j in value)
            elif value is None:
                text = "auto"
            elif isinstance(value, str):
                text = value
            else:
                text = repr(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


def write_config(cfg: ProblemConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
