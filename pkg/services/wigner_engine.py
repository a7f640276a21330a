# services/wigner_engine.py
"""Stochastic Wigner fields: vacuum input, crystal propagation, one pulse end to end."""
import logging
from dataclasses import dataclass

import numpy as np

from services.core_model import (Q_OMEGA, X_T, Field, FieldPair,
                                 fft2_direct_to_spectral, fft2_spectral_to_direct,
                                 pair_to_direct, pair_to_spectral)
from services.errors import ConfigurationError, LogicError, NumericError
from services.gain_spectrum import SIGNAL, mismatch

logger = logging.getLogger(__name__)

PLANEWAVE = "planewave"
FINITE_PUMP = "finite-pump"
ENGINES = (PLANEWAVE, FINITE_PUMP)

MODEL_PURE = "pure"
MODEL_W = "W"
MODEL_WPRIME = "Wprime"
MODELS = (MODEL_PURE, MODEL_W, MODEL_WPRIME)

VACUUM_LEVEL = 0.5


@dataclass(frozen=True)
class EngineConfig:
    engine: str = PLANEWAVE
    steps: int = 64
    seed: int = 0
    pulses: int = 1000

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigurationError(f"must be one of {ENGINES}, got {self.engine!r}", key="engine")
        if self.steps < 1:
            raise ConfigurationError(f"must be >= 1, got {self.steps}", key="steps")
        if self.pulses < 1:
            raise ConfigurationError(f"must be >= 1, got {self.pulses}", key="pulses")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"must fit in 64 unsigned bits, got {self.seed}", key="seed")


def pulse_rng(master_seed, pulse_index):
    """Independent generator for one pulse, derived from (master_seed, pulse_index)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(pulse_index,)))


def _complex_noise(shape, rng):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / 2


def sample_vacuum(grid, rng):
    """Circular complex Gaussian per (q, Omega) mode with <|alpha|^2> = 1/2, both beams."""
    signal = Field(_complex_noise(grid.shape, rng), Q_OMEGA, grid)
    idler = Field(_complex_noise(grid.shape, rng), Q_OMEGA, grid)
    return FieldPair(signal, idler)


def apply_planewave_gain(pair_in, table):
    """Two-mode squeeze every (q, Omega) mode with its (-q, -Omega) partner."""
    if pair_in.domain != Q_OMEGA:
        raise LogicError(f"plane-wave gain acts on (q, Omega) fields, got {pair_in.domain}")
    grid = pair_in.grid
    s = pair_in.signal.values
    i = pair_in.idler.values
    s_out = table.U_S * s + table.V_S * np.conj(grid.mirror(i))
    i_out = table.U_I * i + table.V_I * np.conj(grid.mirror(s))
    return FieldPair(pair_in.signal.with_values(s_out), pair_in.idler.with_values(i_out))


def pump_profile(grid, params):
    t, x = grid.direct_mesh
    return np.exp(-(x / params.w_p) ** 2) * np.exp(-(t / params.tau_p) ** 2)


def propagate_crystal_splitstep(pair_in, params, config):
    """Integrate the coupled envelopes through the crystal with Strang splitting.

    Linear half steps (diffraction, walk-off, dispersion as the spectral phase
    -i Delta dz / 2 per beam) alternate with the exact local solution of the
    parametric coupling under a Gaussian pump. The exit phase exp(i Delta l_c / 2)
    of the plane-wave gain functions is applied at the end, so the wide-pump
    limit reproduces apply_planewave_gain on the same input.
    """
    if pair_in.domain != X_T:
        raise LogicError(f"split-step propagation starts from (x, t) fields, got {pair_in.domain}")
    grid = pair_in.grid
    steps = config.steps
    omega, q = grid.spectral_mesh
    delta_s = mismatch(q, omega, params, SIGNAL)
    delta_i = grid.mirror(delta_s)
    worst = float(np.max(np.abs(delta_s)))
    if steps * np.pi < worst:
        logger.warning("Split-step with %d steps under-resolves mismatch up to %.3g; "
                       "phases of the fastest modes alias", steps, worst)

    h = 1.0 / steps
    half_s = np.exp(-0.25j * delta_s * h)
    half_i = np.exp(-0.25j * delta_i * h)
    coupling = params.gain * h * pump_profile(grid, params)
    ch = np.cosh(coupling)
    sh = np.sinh(coupling)

    a_s = fft2_direct_to_spectral(pair_in.signal.values)
    a_i = fft2_direct_to_spectral(pair_in.idler.values)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps):
            s = fft2_spectral_to_direct(a_s * half_s)
            i = fft2_spectral_to_direct(a_i * half_i)
            s, i = ch * s + sh * np.conj(i), ch * i + sh * np.conj(s)
            a_s = fft2_direct_to_spectral(s) * half_s
            a_i = fft2_direct_to_spectral(i) * half_i
            if not (np.isfinite(a_s).all() and np.isfinite(a_i).all()):
                raise NumericError("split-step field is not finite", where=f"step {step}")

    a_s = a_s * np.exp(0.5j * delta_s)
    a_i = a_i * np.exp(0.5j * delta_i)
    signal = Field(fft2_spectral_to_direct(a_s), X_T, grid)
    idler = Field(fft2_spectral_to_direct(a_i), X_T, grid)
    return FieldPair(signal, idler)


@dataclass(frozen=True)
class DetectedPulse:
    """Detected intensities of one pulse: the array arm per pixel and the point detector."""

    index: int
    array: np.ndarray
    point: float


class PulseSimulator:
    """Runs single pulses of a configured experiment.

    Everything derived from the configuration (gain table, imaging setup) is
    built once; run() keeps no state between calls, so distinct instances in
    different processes give identical results for the same pulse.
    """

    def __init__(self, config):
        from services.run_config import build_experiment

        self.config = config
        self.grid, self.table, self.setup = build_experiment(config)

    def _output_pair(self, rng):
        cfg = self.config
        if cfg.model != MODEL_PURE:
            from services.reference_models import sample_mixture_fields
            return sample_mixture_fields(cfg.model, self.table, self.grid, rng)
        vacuum = sample_vacuum(self.grid, rng)
        if cfg.engine.engine == PLANEWAVE:
            return apply_planewave_gain(vacuum, self.table)
        out = propagate_crystal_splitstep(pair_to_direct(vacuum), self.table.params, cfg.engine)
        return pair_to_spectral(out)

    def run(self, pulse_index, master_seed):
        from services.correlator import detect
        from services.optics_bench import detection_fields

        rng = pulse_rng(master_seed, pulse_index)
        wigner = self.config.model == MODEL_PURE
        pair = self._output_pair(rng)
        array_field, point_field = detection_fields(
            pair, self.setup, rng=rng if wigner else None, relay=wigner)
        offset = VACUUM_LEVEL if wigner else 0.0
        array = detect(array_field, self.config.tau_D, vacuum_offset=offset)
        point = detect(point_field, self.config.tau_D, vacuum_offset=offset)
        return DetectedPulse(index=pulse_index, array=array,
                             point=float(point[self.setup.point_index]))


def run_pulse(pulse_index, master_seed, config):
    """One statistical realization of the configured experiment."""
    return PulseSimulator(config).run(pulse_index, master_seed)
