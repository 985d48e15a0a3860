"""Run configuration: INI-style files with strict validation.

A run is described by a sectioned key=value file::

    [wave]
    omega = 6.283185307179586
    lambda = 1.0
    mu = 2.0
    theta_deg = 30.0
    period = 1.0
    gamma_height = 1.0

    [grating]
    builtin = flat            # or "sharp", or file = path/to/profile.txt

    [pml]
    sigma_re = 12.0
    sigma_im = 12.0
    m = 2
    # delta = 8.0             # fixed depth; omit to calibrate automatically

    [adapt]
    tolerance = 1e-3
    tau = 0.5
    max_iters = 20
    max_dofs = 200000
    h0 = 0.25

Unknown sections or keys are rejected (typos should fail loudly, not fall
back to defaults).  Every key except the six wave parameters has a default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from math import radians

__all__ = ["ConfigError", "RunConfig", "load_config", "write_config"]


class ConfigError(ValueError):
    """A configuration file is missing, malformed, or inconsistent."""


@dataclass
class RunConfig:
    """All parameters of one adaptive run (angles in degrees, as in files)."""

    # [wave] -- required
    omega: float
    lam: float
    mu: float
    theta_deg: float
    period: float
    gamma_height: float
    # [grating]
    grating: str = "flat"
    grating_file: str | None = None
    # [pml]
    sigma_re: float = 12.0
    sigma_im: float = 12.0
    pml_exponent: int = 2
    delta: float | None = None
    delta0: float = 0.25
    delta_cap: float = 64.0
    target_fhat: float | None = None
    # [modes]
    n_max: int = 20
    resonance_tol: float = 1e-8
    # [adapt]
    tolerance: float = 1e-3
    tau: float = 0.5
    max_iters: int = 20
    max_dofs: int = 200_000
    h0: float = 0.25
    amplitude: float = 1.0
    corner_x: float | None = None
    corner_y: float | None = None
    corner_radius: float | None = None
    # [estimator]
    jump_flux: str = "weighted"
    quad_degree: int = 5
    # [output]
    out_dir: str = "out"
    write_vtk: bool = False
    write_system: bool = False

    @property
    def theta(self) -> float:
        """Incidence angle in radians."""
        return radians(self.theta_deg)

    @property
    def sigma(self) -> complex:
        return complex(self.sigma_re, self.sigma_im)

    @property
    def corner(self) -> tuple[float, float, float] | None:
        """(x, y, radius) of the tracked corner region, if configured."""
        if self.corner_x is None or self.corner_y is None:
            return None
        radius = 0.1 if self.corner_radius is None else self.corner_radius
        return (self.corner_x, self.corner_y, radius)

    def validate(self) -> None:
        """Raise ConfigError on inconsistent values (cheap checks only)."""
        problems = []
        if not abs(self.theta_deg) < 90.0:
            problems.append(
                f"theta_deg = {self.theta_deg} outside the open range (-90, 90)"
            )
        if self.grating not in ("flat", "sharp", "file"):
            problems.append(f"grating kind {self.grating!r} not in flat/sharp/file")
        if self.grating == "file" and not self.grating_file:
            problems.append("grating = file requires grating.file to be set")
        if not 0.0 < self.tau <= 1.0:
            problems.append(f"adapt.tau = {self.tau} outside (0, 1]")
        if self.tolerance <= 0.0:
            problems.append("adapt.tolerance must be positive")
        if self.max_iters < 1:
            problems.append("adapt.max_iters must be >= 1")
        if self.max_dofs < 1:
            problems.append("adapt.max_dofs must be >= 1")
        if self.h0 <= 0.0:
            problems.append("adapt.h0 must be positive")
        if self.jump_flux not in ("weighted", "plain"):
            problems.append(
                f"estimator.jump_flux {self.jump_flux!r} not in weighted/plain"
            )
        if self.quad_degree < 2:
            problems.append("estimator.quad_degree must be >= 2")
        if self.n_max < 1:
            problems.append("modes.n_max must be >= 1")
        if self.delta is not None and self.delta <= 0.0:
            problems.append("pml.delta must be positive when given")
        if (self.corner_x is None) != (self.corner_y is None):
            problems.append("adapt.corner_x and corner_y must be set together")
        if problems:
            raise ConfigError("; ".join(problems))


# (section, key, attribute, converter); "lambda" and "theta_deg" are the
# on-disk names of RunConfig.lam / RunConfig.theta_deg.
_SCHEMA = [
    ("wave", "omega", "omega", float),
    ("wave", "lambda", "lam", float),
    ("wave", "mu", "mu", float),
    ("wave", "theta_deg", "theta_deg", float),
    ("wave", "period", "period", float),
    ("wave", "gamma_height", "gamma_height", float),
    ("grating", "builtin", "grating", str),
    ("grating", "file", "grating_file", str),
    ("pml", "sigma_re", "sigma_re", float),
    ("pml", "sigma_im", "sigma_im", float),
    ("pml", "m", "pml_exponent", int),
    ("pml", "delta", "delta", float),
    ("pml", "delta0", "delta0", float),
    ("pml", "delta_cap", "delta_cap", float),
    ("pml", "target_fhat", "target_fhat", float),
    ("modes", "n_max", "n_max", int),
    ("modes", "resonance_tol", "resonance_tol", float),
    ("adapt", "tolerance", "tolerance", float),
    ("adapt", "tau", "tau", float),
    ("adapt", "max_iters", "max_iters", int),
    ("adapt", "max_dofs", "max_dofs", int),
    ("adapt", "h0", "h0", float),
    ("adapt", "amplitude", "amplitude", float),
    ("adapt", "corner_x", "corner_x", float),
    ("adapt", "corner_y", "corner_y", float),
    ("adapt", "corner_radius", "corner_radius", float),
    ("estimator", "jump_flux", "jump_flux", str),
    ("estimator", "quad_degree", "quad_degree", int),
    ("output", "dir", "out_dir", str),
    ("output", "write_vtk", "write_vtk", bool),
    ("output", "write_system", "write_system", bool),
]

_REQUIRED = {("wave", k) for k in
             ("omega", "lambda", "mu", "theta_deg", "period", "gamma_height")}


def _to_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> RunConfig:
    """Parse and validate a configuration file.

    Raises ConfigError for a missing file, unknown sections/keys, bad
    literals, missing required keys, or inconsistent values.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc

    known = {(s, k): (attr, conv) for s, k, attr, conv in _SCHEMA}
    values: dict[str, object] = {}
    seen = set()
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = known.get((section, key))
            if entry is None:
                raise ConfigError(f"unknown key [{section}] {key} in {path!r}")
            attr, conv = entry
            raw = raw.strip()
            try:
                values[attr] = _to_bool(raw) if conv is bool else conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r} ({exc})"
                ) from exc
            seen.add((section, key))

    missing = sorted(_REQUIRED - seen)
    if missing:
        names = ", ".join(f"[{s}] {k}" for s, k in missing)
        raise ConfigError(f"missing required keys in {path!r}: {names}")

    cfg = RunConfig(**values)  # type: ignore[arg-type]
    cfg.validate()
    return cfg


def write_config(cfg: RunConfig, path) -> None:
    """Write a configuration file that ``load_config`` round-trips."""
    parser = configparser.ConfigParser(interpolation=None)
    defaults = {f.name: f.default for f in fields(RunConfig)}
    for section, key, attr, conv in _SCHEMA:
        value = getattr(cfg, attr)
        if value is None:
            continue
        required = (section, key) in _REQUIRED
        if not required and value == defaults.get(attr):
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        if conv is bool:
            text = "true" if value else "false"
        elif conv is float:
            text = repr(float(value))
        else:
            text = str(value)
        parser.set(section, key, text)
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
