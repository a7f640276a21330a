# services/experiments.py
"""Experiment orchestration shared by the command line, the API and the Celery tasks."""
import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field
from functools import lru_cache
from multiprocessing import Pool
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from services import __version__
from services.core_model import make_grid
from services.correlator import (CorrAccumulator, fringe_component, fringe_contrast,
                                 image_contrast, finalize, merge_all)
from services.errors import BandwidthError, ConfigurationError
from services.gain_spectrum import CrystalParams, bandwidths, gain_functions, resolvable_pixels
from services.photon_statistics import (ModeStatistics, reduced_beam_is_thermal,
                                        sample_pair_numbers, thermal_pmf)
from services.reference_models import oracle_pattern
from services.run_config import build_experiment, parse_config
from services.wigner_engine import (FINITE_PUMP, MODEL_PURE, MODEL_W, MODEL_WPRIME,
                                    PulseSimulator, apply_planewave_gain, sample_vacuum)

logger = logging.getLogger(__name__)

WORKERS_ENV = "PULSE_WORKERS"


@lru_cache(maxsize=4)
def _simulator(config_text):
    # one simulator per worker process and configuration
    return PulseSimulator(parse_config(config_text))


def simulate_pulse_batch(config_text, start, stop):
    """Accumulate pulses [start, stop) of the configured run."""
    simulator = _simulator(config_text)
    seed = simulator.config.engine.seed
    acc = CorrAccumulator.empty(simulator.setup.array_grid.n_x)
    for index in range(start, stop):
        pulse = simulator.run(index, seed)
        acc.add(pulse.array, pulse.point)
    logger.debug("Finished pulses %d-%d for seed %d", start, stop - 1, seed)
    return acc


def _run_chunk(args):
    return simulate_pulse_batch(*args)


def pulse_chunks(pulses, chunk_size):
    """Fixed chunk boundaries; they do not depend on the worker count."""
    return [(start, min(start + chunk_size, pulses)) for start in range(0, pulses, chunk_size)]


def resolve_workers(workers=None):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}", key=WORKERS_ENV)
    return workers


@dataclass
class ExperimentOutput:
    result: object
    x: np.ndarray
    manifest: dict
    files: dict = field(default_factory=dict)

    def to_frame(self):
        return self.result.to_frame(self.x)


def accumulate_pulses(config, workers=None):
    """Run every pulse of the configuration and merge the chunk accumulators in order."""
    text = config.to_text()
    chunks = pulse_chunks(config.engine.pulses, config.chunk_size)
    workers = min(resolve_workers(workers), len(chunks))
    args = [(text, start, stop) for start, stop in chunks]
    if workers == 1:
        partials = [_run_chunk(a) for a in args]
    else:
        with Pool(workers) as pool:
            partials = pool.map(_run_chunk, args)
    return merge_all(partials)


def write_manifest(path, config, elapsed, workers, extra=None):
    manifest = {
        "version": __version__,
        "seed": config.engine.seed,
        "pulses": config.engine.pulses,
        "workers": workers,
        "wall_time_s": round(elapsed, 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": config.to_text(),
    }
    if extra:
        manifest.update(extra)
    if path is not None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(manifest, handle, indent=2)
    return manifest


def _resolvable_pixels(table):
    try:
        return resolvable_pixels(table.params, bandwidths(table))
    except BandwidthError as e:
        logger.warning("No resolvable-cell estimate: %s", e)
        return None


def finish_experiment(config, acc, elapsed, workers, out_dir=None, write=True):
    """Finalize a merged accumulator and, when asked, write correlation.csv and manifest.json."""
    _, table, setup = build_experiment(config)
    output = ExperimentOutput(result=finalize(acc), x=setup.array_grid.x.copy(), manifest={})
    extra = {"resolvable_pixels": _resolvable_pixels(table)}
    if not write:
        output.manifest = write_manifest(None, config, elapsed, workers, extra)
        return output
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "correlation.csv"
    output.to_frame().to_csv(csv_path, index=False)
    manifest_path = out / "manifest.json"
    output.manifest = write_manifest(manifest_path, config, elapsed, workers, extra)
    output.files = {"correlation": str(csv_path), "manifest": str(manifest_path)}
    return output


def run_experiment(config, out_dir=None, workers=None, write=True):
    """Monte-Carlo run: pulses -> merged accumulator -> correlation.csv and manifest.json."""
    start_time = time.time()
    workers = resolve_workers(workers)
    logger.info("Starting %d pulses (%s model, %s engine) on %d worker(s)",
                config.engine.pulses, config.model, config.engine.engine, workers)
    acc = accumulate_pulses(config, workers)
    output = finish_experiment(config, acc, time.time() - start_time, workers, out_dir, write)
    logger.info("Experiment finished in %.2f seconds", time.time() - start_time)
    return output


def run_oracle(config, out_dir=None, model=None, write=True):
    """Quadrature G over the array pixels for the configured (or given) model."""
    start_time = time.time()
    model = model or config.model
    _, table, setup = build_experiment(config)
    result = oracle_pattern(model, setup, table, tau_D=config.tau_D)
    if write:
        out = Path(out_dir or config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"oracle_{model}.csv"
        pd.DataFrame(result.to_records()).to_csv(path, index=False)
        logger.info("Wrote %s", path)
    logger.info("Oracle finished in %.2f seconds", time.time() - start_time)
    return result


# pass/fail thresholds of the entanglement discriminator
FRINGE_MIN = 0.9
IMAGE_MIN = 0.9
FLAT_MAX = 0.05
COMPONENT_MAX = 0.01


def contrast_measures(pattern, x, setup):
    """Fringe contrast and fringe component for z = f, image contrast for z = 2f."""
    if setup.z_config == "f":
        period = setup.wavelength * setup.f / setup.slit_distance
        # the central fringe sits opposite the point detector
        center = -setup.point_grid.x[setup.point_index]
        return {"fringe_contrast": fringe_contrast(pattern, x, period, center),
                "fringe_component": fringe_component(pattern, x, period)}
    return {"image_contrast": image_contrast(pattern, x, setup.slit_distance)}


def _verdict(model, row):
    if model == MODEL_PURE:
        return row["fringe_contrast"] > FRINGE_MIN and row["image_contrast"] > IMAGE_MIN
    if model == MODEL_W:
        return row["fringe_contrast"] > FRINGE_MIN and row["image_contrast"] < FLAT_MAX
    return row["fringe_component"] < COMPONENT_MAX and row["image_contrast"] > IMAGE_MIN


def discriminate(config, out_dir=None, monte_carlo=False, workers=None, write=True):
    """Contrast table for pure / W / Wprime at z = f and z = 2f.

    Oracles by default; monte_carlo=True runs the sampler pipeline for each cell.
    """
    if config.object != "double_slit":
        raise ConfigurationError("the discriminator needs the double-slit object", key="object")
    rows = []
    for model in (MODEL_PURE, MODEL_W, MODEL_WPRIME):
        row = {"model": model}
        for z in ("f", "2f"):
            variant = config.with_values(model=model, z_config=z, scheme="a")
            _, _, setup = build_experiment(variant)
            if monte_carlo:
                output = run_experiment(variant, workers=workers, write=False)
                pattern, x = output.result.G, output.x
            else:
                oracle = run_oracle(variant, write=False)
                pattern, x = oracle.G, oracle.x
            row.update(contrast_measures(pattern, x, setup))
        row["passed"] = bool(_verdict(model, row))
        rows.append(row)
        logger.info("Discriminator %s: %s", model, "pass" if row["passed"] else "FAIL")
    table = pd.DataFrame(rows, columns=["model", "fringe_contrast", "fringe_component",
                                        "image_contrast", "passed"])
    if write:
        out = Path(out_dir or config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / "discriminator.csv", index=False)
    return table


def resolution_sweep(config, ratios=(20, 10, 5, 2, 1), workers=None):
    """Two-band image contrast at z = 2f while the pump shrinks towards l_coh.

    The double slit is scaled with the pump (d = 0.6 w_p, a = 0.15 w_p) so that
    only the number of resolvable cells changes along the sweep. Slits never
    get narrower than two lattice pixels.
    """
    _, table, _ = build_experiment(config)
    l_coh = bandwidths(table).l_coh
    rows = []
    for ratio in ratios:
        w_p = ratio * l_coh
        width = max(0.15 * w_p, 2 * config.grid.dx)
        variant = config.with_values(
            w_p=w_p, slit_distance=0.6 * w_p, slit_width=width, object="double_slit",
            engine=FINITE_PUMP, z_config="2f", scheme="a", model=MODEL_PURE, fixed_point=0.0)
        output = run_experiment(variant, workers=workers, write=False)
        contrast = image_contrast(output.result.G, output.x, 0.6 * w_p)
        rows.append({"w_p": w_p, "w_p_over_l_coh": ratio, "image_contrast": contrast})
        logger.info("w_p = %.3g l_coh: image contrast %.3f", ratio, contrast)
    return pd.DataFrame(rows)


@dataclass
class StatsReport:
    thermal: object
    pmf_chi2: float
    pmf_p_value: float
    difference_variance: float
    twin_covariance: float
    twin_expected: float
    twin_stderr: float

    @property
    def twin_z(self):
        return (self.twin_covariance - self.twin_expected) / self.twin_stderr

    def to_dict(self):
        return {
            "thermal_ks_statistic": self.thermal.statistic,
            "thermal_p_value": self.thermal.p_value,
            "thermal_mean_intensity": self.thermal.mean_intensity,
            "thermal_expected_mean_intensity": self.thermal.expected_mean_intensity,
            "pmf_chi2": self.pmf_chi2,
            "pmf_p_value": self.pmf_p_value,
            "difference_variance": self.difference_variance,
            "twin_covariance": self.twin_covariance,
            "twin_expected": self.twin_expected,
            "twin_stderr": self.twin_stderr,
            "twin_z": self.twin_z,
        }


def phase_matched_table(gain=1.0, n_x=256):
    """Gain table with Delta = 0 on every mode (single-mode statistics)."""
    grid = make_grid(n_x, 1e-6, 1, 1e-12)
    params = CrystalParams(sigma=gain, l_c=1.0, w_p=1.0, tau_p=1.0)
    return gain_functions(params, grid)


def pmf_goodness_of_fit(mean_n, rng, n_samples):
    """Chi-square of the direct pair sampler against the thermal pmf, plus its n_S - n_I draws.

    Bins hold at least 5 expected counts; the tail is lumped into the last bin.
    """
    n_s, n_i = sample_pair_numbers(mean_n, rng, size=n_samples)
    law = ModeStatistics(mean_n)
    support = np.arange(law.n_max + 1)
    expected = thermal_pmf(support, mean_n) * n_samples
    last = int(np.nonzero(expected >= 5)[0][-1])
    observed = np.bincount(np.minimum(n_s, last), minlength=last + 1)[:last + 1]
    expected = np.append(expected[:last], n_samples - expected[:last].sum())
    result = stats.chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue), n_s - n_i


def twin_beam_covariance(table, rng, n_pulses, mode=5):
    """Covariance of |alpha_S(q)|^2 and |alpha_I(-q)|^2 at one symmetric far-field mode pair."""
    grid = table.grid
    partner = int(grid.mirror_x[mode])
    a = np.empty(n_pulses)
    b = np.empty(n_pulses)
    for i in range(n_pulses):
        pair = apply_planewave_gain(sample_vacuum(grid, rng), table)
        a[i] = abs(pair.signal.values[0, mode]) ** 2
        b[i] = abs(pair.idler.values[0, partner]) ** 2
    d = (a - a.mean()) * (b - b.mean())
    expected = float(abs(table.pair_amplitude[0, mode]) ** 2)
    return float(d.mean() * n_pulses / (n_pulses - 1)), expected, float(d.std(ddof=1) / np.sqrt(n_pulses))


def run_stats_suite(seed=0, gain=1.0, n_samples=100000, n_pulses=10000, out_dir=None):
    """Thermal law of one beam, pair-sampler pmf and twin-beam correlation."""
    start_time = time.time()
    rng = np.random.default_rng(seed)
    table = phase_matched_table(gain)
    thermal = reduced_beam_is_thermal(table, table.grid, rng, n_samples)
    mean_n = float(table.mean_n_signal[0, 0])
    chi2, p_value, difference = pmf_goodness_of_fit(mean_n, rng, n_samples)
    difference_variance = float(np.var(difference))
    covariance, expected, stderr = twin_beam_covariance(table, rng, n_pulses)
    report = StatsReport(thermal=thermal, pmf_chi2=chi2, pmf_p_value=p_value,
                         difference_variance=difference_variance, twin_covariance=covariance,
                         twin_expected=expected, twin_stderr=stderr)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "stats.json", "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2)
    logger.info("Statistics suite finished in %.2f seconds", time.time() - start_time)
    return report
