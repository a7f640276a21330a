import numpy as np
import pytest
from scipy import stats

from services.errors import DomainError, StatisticsError
from services.experiments import phase_matched_table, pmf_goodness_of_fit
from services.photon_statistics import (ModeStatistics, reduced_beam_is_thermal,
                                        sample_pair_numbers, thermal_pmf)


def test_thermal_pmf_values():
    assert thermal_pmf(0, 1.0) == pytest.approx(0.5)
    assert thermal_pmf(1, 1.0) == pytest.approx(0.25)
    assert thermal_pmf(0, 0.0) == 1.0
    assert thermal_pmf(3, 0.0) == 0.0


def test_thermal_pmf_is_normalized_with_right_mean():
    mean_n = np.sinh(1.0) ** 2
    law = ModeStatistics(mean_n)
    pmf = law.pmf()
    n = np.arange(pmf.size)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-11)
    assert np.sum(n * pmf) == pytest.approx(mean_n, rel=1e-9)
    assert law.tail_bound(law.n_max) < 1e-12


def test_thermal_pmf_large_n_does_not_overflow():
    assert np.isfinite(thermal_pmf(5000, 10.0))


@pytest.mark.parametrize("n, mean_n", [(-1, 1.0), (1.5, 1.0), (2, -0.1)])
def test_thermal_pmf_domain(n, mean_n):
    with pytest.raises(DomainError):
        thermal_pmf(n, mean_n)


def test_mode_statistics_rejects_negative_mean():
    with pytest.raises(DomainError):
        ModeStatistics(-1.0)


def test_pair_sampler_matches_thermal_law(rng):
    mean_n = np.sinh(1.0) ** 2
    _, p_value, difference = pmf_goodness_of_fit(mean_n, rng, 100000)
    assert p_value > 0.01
    assert np.var(difference) == 0.0


def test_pair_sampler_vacuum_and_arrays(rng):
    n_s, n_i = sample_pair_numbers(0.0, rng, size=100)
    assert not n_s.any() and not n_i.any()
    means = np.array([0.1, 1.0, 5.0])
    n_s, _ = sample_pair_numbers(means, rng, size=40000)
    assert n_s.shape == (40000, 3)
    sigma = np.sqrt(means * (means + 1) / 40000)
    assert np.all(np.abs(n_s.mean(axis=0) - means) < 5 * sigma)


def test_reduced_beam_is_thermal(rng):
    table = phase_matched_table(1.0)
    report = reduced_beam_is_thermal(table, table.grid, rng, 100000)
    assert report.p_value > 0.01
    assert report.expected_mean_intensity == pytest.approx(np.sinh(1.0) ** 2 + 0.5)
    assert report.max_mode_z < 5


def test_reduced_beam_idler_matches_signal_law(rng):
    table = phase_matched_table(0.5, n_x=64)
    report = reduced_beam_is_thermal(table, table.grid, rng, 20000, beam="I")
    assert report.p_value > 0.01
    assert report.mean_intensity == pytest.approx(np.sinh(0.5) ** 2 + 0.5, rel=0.05)


def test_reduced_beam_needs_enough_samples(rng):
    table = phase_matched_table(1.0, n_x=16)
    with pytest.raises(StatisticsError):
        reduced_beam_is_thermal(table, table.grid, rng, 10)


def test_exponential_wigner_intensity_is_not_poissonian(rng):
    # sanity check on the test itself: a coherent amplitude fails the exponential fit
    samples = np.abs(1.5 + (rng.standard_normal(5000) + 1j * rng.standard_normal(5000)) / 2) ** 2
    assert stats.kstest(samples / samples.mean(), "expon").pvalue < 1e-6
