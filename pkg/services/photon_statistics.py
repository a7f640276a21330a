# services/photon_statistics.py
"""Per-mode photon-number laws of the twin-beam state and direct samplers."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from services.errors import DomainError, StatisticsError

logger = logging.getLogger(__name__)

TAIL_MASS = 1e-12


@dataclass(frozen=True)
class ModeStatistics:
    """Thermal (Bose-Einstein) law of one mode."""

    mean_n: float

    def __post_init__(self):
        if self.mean_n < 0:
            raise DomainError(f"mean photon number must be non-negative, got {self.mean_n}")

    @property
    def n_max(self):
        """Smallest cut-off whose geometric tail mass is below TAIL_MASS."""
        if self.mean_n == 0:
            return 0
        ratio = self.mean_n / (1 + self.mean_n)
        return int(np.ceil(np.log(TAIL_MASS) / np.log(ratio)))

    def pmf(self):
        n = np.arange(self.n_max + 1)
        return thermal_pmf(n, self.mean_n)

    def tail_bound(self, n_cut):
        """Probability mass above n_cut."""
        if self.mean_n == 0:
            return 0.0
        return (self.mean_n / (1 + self.mean_n)) ** (n_cut + 1)


def thermal_pmf(n, mean_n):
    """P(n) = <n>^n / (1 + <n>)^(n+1)."""
    n = np.asarray(n)
    if np.any(n < 0) or not np.all(np.equal(np.mod(n, 1), 0)):
        raise DomainError("photon number must be a non-negative integer")
    if np.any(np.asarray(mean_n) < 0):
        raise DomainError("mean photon number must be non-negative")
    mean_n = np.asarray(mean_n, dtype=float)
    # written through logs so large n do not overflow; vacuum handled separately
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = n * np.log(mean_n) - (n + 1) * np.log1p(mean_n)
        result = np.where(mean_n == 0, np.where(n == 0, 1.0, 0.0), np.exp(log_p))
    if result.ndim == 0:
        return float(result)
    return result


def sample_pair_numbers(mean_n, rng, size=None):
    """Draw (n_S, n_I) with n_S = n_I from the thermal law by inverse CDF.

    P(N >= n) = r^n with r = <n>/(1+<n>), so n = floor(log(u) / log(r)).
    mean_n may be an array; size adds leading sample dimensions.
    """
    mean_n = np.asarray(mean_n, dtype=float)
    if np.any(mean_n < 0):
        raise DomainError("mean photon number must be non-negative")
    shape = mean_n.shape if size is None else tuple(np.atleast_1d(size)) + mean_n.shape
    u = 1.0 - rng.random(shape)  # (0, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log(mean_n) - np.log1p(mean_n)
        n = np.floor(np.log(u) / log_r)
    n = np.where(mean_n == 0, 0.0, n)
    n = n.astype(np.int64)
    if n.ndim == 0:
        n = int(n)
    return n, n


@dataclass(frozen=True)
class ThermalFitReport:
    n_samples: int
    statistic: float
    p_value: float
    mean_intensity: float
    expected_mean_intensity: float
    max_mode_z: float


def reduced_beam_is_thermal(table, grid, rng, n_samples, beam="S"):
    """Goodness of fit of single-beam Wigner intensities against the exponential law.

    Each mode's W-intensity |alpha|^2 is exponential with mean <n> + 1/2. Intensities
    are scaled by that mean and pooled before a Kolmogorov-Smirnov test.
    """
    from services.wigner_engine import apply_planewave_gain, sample_vacuum

    if n_samples < 1000:
        raise StatisticsError(f"need at least 1000 samples, got {n_samples}")

    expected = (table.mean_n_signal if beam == "S" else table.mean_n) + 0.5
    per_draw = expected.size
    draws = max(2, int(np.ceil(n_samples / per_draw)))

    intensities = np.empty((draws,) + expected.shape)
    for i in range(draws):
        pair = apply_planewave_gain(sample_vacuum(grid, rng), table)
        field = pair.signal if beam == "S" else pair.idler
        intensities[i] = np.abs(field.values) ** 2

    scaled = (intensities / expected).ravel()[:max(n_samples, per_draw * 2)]
    result = stats.kstest(scaled, "expon")

    mode_mean = intensities.mean(axis=0)
    # exponential variance equals its squared mean
    z = (mode_mean - expected) / (expected / np.sqrt(draws))
    report = ThermalFitReport(
        n_samples=int(scaled.size),
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        mean_intensity=float(intensities.mean()),
        expected_mean_intensity=float(expected.mean()),
        max_mode_z=float(np.max(np.abs(z))),
    )
    logger.info("Thermal fit over %d samples: KS=%.4g p=%.4g", report.n_samples,
                report.statistic, report.p_value)
    return report
