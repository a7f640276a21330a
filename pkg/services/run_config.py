# services/run_config.py
"""Flat `key = value` run configuration.

One pair per line, '#' starts a comment, SI units throughout. Unknown and
duplicate keys are rejected; every validation error names its key and, when
the key came from the text, its line.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from services.core_model import make_grid
from services.errors import ConfigurationError
from services.gain_spectrum import CrystalParams, calibrate_mismatch, emission_plane_defocus, gain_functions
from services.optics_bench import ImagingSetup, double_slit, load_object_profile
from services.wigner_engine import MODELS, PLANEWAVE, EngineConfig

logger = logging.getLogger(__name__)

REQUIRED = object()

OBJECT_KINDS = ("double_slit", "uniform", "file")


def _finite(text):
    number = float(text)
    if not np.isfinite(number):
        raise ValueError(f"{text!r} is not a finite number")
    return number


def _int(text):
    number = _finite(text)
    if number != int(number):
        raise ValueError(f"{text!r} is not an integer")
    return int(number)


def _float(text):
    return _finite(text)


def _optional_float(text):
    if text.lower() in ("none", ""):
        return None
    return _finite(text)


def _bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _str(text):
    return text


def _optional_str(text):
    return None if text.lower() in ("none", "") else text


# key -> (converter, default)
SCHEMA = {
    # grid
    "n_x": (_int, REQUIRED),
    "dx": (_float, REQUIRED),
    "n_t": (_int, REQUIRED),
    "dt": (_float, REQUIRED),
    # crystal and pump
    "sigma": (_float, REQUIRED),
    "l_c": (_float, REQUIRED),
    "w_p": (_float, REQUIRED),
    "tau_p": (_float, REQUIRED),
    "delta0": (_float, 0.0),
    "c_walkoff_q": (_float, 0.0),
    "c_diffr_q": (_optional_float, None),
    "c_gvm_t": (_float, 0.0),
    "c_gvd_t": (_optional_float, None),
    "wavelength": (_float, 702e-9),
    "l_coh_target": (_float, 16.6e-6),
    "tau_coh_target": (_float, 0.87e-12),
    # engine
    "engine": (_str, "planewave"),
    "steps": (_int, 64),
    "seed": (_int, 0),
    "pulses": (_int, 1000),
    # imaging
    "scheme": (_str, "a"),
    "z_config": (_str, "f"),
    "object": (_str, "double_slit"),
    "slit_width": (_float, 17e-6),
    "slit_distance": (_float, 104e-6),
    "object_file": (_optional_str, None),
    "fixed_point": (_float, 0.0),
    "focal_length": (_float, 0.05),
    "relay": (_bool, True),
    # run control
    "model": (_str, "pure"),
    "tau_D": (_optional_float, None),
    "output_dir": (_str, "results"),
    "chunk_size": (_int, 50),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment description; `values` holds every key, defaults included."""

    values: dict = field(repr=False)
    crystal: CrystalParams = None
    engine: EngineConfig = None
    grid: object = None

    def __getattr__(self, name):
        # flat access to the remaining keys (scheme, model, tau_D, ...)
        values = self.__dict__.get("values")
        if values is not None and name in values:
            return values[name]
        raise AttributeError(name)

    def to_text(self):
        """Canonical text; parse_config(to_text()) gives back an equal configuration."""
        lines = []
        for key in SCHEMA:
            value = self.values[key]
            if value is None:
                text = "none"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(float(value))
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def with_values(self, **overrides):
        """Re-validated copy with some keys replaced; None resets an optional key."""
        unknown = set(overrides) - set(SCHEMA)
        if unknown:
            raise ConfigurationError("unknown key", key=sorted(unknown)[0])
        values = dict(self.values)
        values.update(overrides)
        return parse_config(RunConfig(values).to_text())


def _read_entries(text):
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError("unknown key", key=key, line=number)
        if key in entries:
            first = entries[key][1]
            raise ConfigurationError(f"duplicate key (lines {first} and {number})", key=key, line=number)
        converter = SCHEMA[key][0]
        try:
            entries[key] = (converter(value), number)
        except ValueError as e:
            raise ConfigurationError(str(e), key=key, line=number)
    return entries


def _check_ranges(values):
    for key in ("pulses", "steps", "chunk_size"):
        if values[key] < 1:
            raise ConfigurationError(f"must be >= 1, got {values[key]}", key=key)
    if values["model"] not in MODELS:
        raise ConfigurationError(f"must be one of {MODELS}, got {values['model']!r}", key="model")
    if values["object"] not in OBJECT_KINDS:
        raise ConfigurationError(f"must be one of {OBJECT_KINDS}, got {values['object']!r}", key="object")
    if values["object"] == "file" and not values["object_file"]:
        raise ConfigurationError("object = file needs object_file", key="object_file")


def build_crystal(values):
    c_diffr_q = values["c_diffr_q"]
    c_gvd_t = values["c_gvd_t"]
    if c_diffr_q is None or c_gvd_t is None:
        calibrated = calibrate_mismatch(values["l_coh_target"], values["tau_coh_target"])
        c_diffr_q = calibrated[0] if c_diffr_q is None else c_diffr_q
        c_gvd_t = calibrated[1] if c_gvd_t is None else c_gvd_t
    return CrystalParams(
        sigma=values["sigma"], l_c=values["l_c"], w_p=values["w_p"], tau_p=values["tau_p"],
        delta0=values["delta0"], c_walkoff_q=values["c_walkoff_q"], c_diffr_q=c_diffr_q,
        c_gvm_t=values["c_gvm_t"], c_gvd_t=c_gvd_t, wavelength=values["wavelength"])


def build_object(config, grid):
    kind = config.object
    if kind == "double_slit":
        return double_slit(grid, config.slit_width, config.slit_distance)
    if kind == "file":
        return load_object_profile(config.object_file, grid)
    return np.ones(grid.n_x)


def build_setup(config, grid=None):
    grid = grid or config.grid
    beta = emission_plane_defocus(config.crystal) if config.relay else 0.0
    return ImagingSetup(
        grid=grid, scheme=config.scheme, z_config=config.z_config,
        object=build_object(config, grid), fixed_point=config.fixed_point,
        f=config.focal_length, wavelength=config.crystal.wavelength, relay_beta=beta,
        slit_width=config.slit_width, slit_distance=config.slit_distance)


def table_params(config):
    """Crystal parameters behind the gain table; the plane-wave engine drops the walk-off terms."""
    crystal = config.crystal
    if config.engine.engine != PLANEWAVE:
        return crystal
    if crystal.c_walkoff_q or crystal.c_gvm_t:
        logger.info("Plane-wave engine ignores c_walkoff_q=%g and c_gvm_t=%g",
                    crystal.c_walkoff_q, crystal.c_gvm_t)
    return crystal.without_walkoff()


def build_experiment(config):
    """Grid, gain table and imaging setup of a configuration."""
    grid = config.grid
    table = gain_functions(table_params(config), grid)
    return grid, table, build_setup(config, grid)


def parse_config(text):
    """Parse and fully validate a run configuration."""
    entries = _read_entries(text)
    lines = {key: number for key, (_, number) in entries.items()}
    values = {}
    for key, (_, default) in SCHEMA.items():
        if key in entries:
            values[key] = entries[key][0]
        elif default is REQUIRED:
            raise ConfigurationError("missing required key", key=key)
        else:
            values[key] = default

    try:
        _check_ranges(values)
        grid = make_grid(values["n_x"], values["dx"], values["n_t"], values["dt"])
        crystal = build_crystal(values)
        engine = EngineConfig(engine=values["engine"], steps=values["steps"],
                              seed=values["seed"], pulses=values["pulses"])
        config = RunConfig(values, crystal=crystal, engine=engine, grid=grid)
        if values["tau_D"] is not None:
            grid.time_window(values["tau_D"])
        build_setup(config)
    except ConfigurationError as e:
        if e.line is None and e.key in lines:
            raise ConfigurationError(e.message, key=e.key, line=lines[e.key]) from e
        raise
    logger.debug("Parsed configuration with %d explicit keys", len(entries))
    return config


def load_config(path):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read configuration {path}: {e.strerror}")
    return parse_config(text)
