# services/reference_models.py
"""Quadrature oracles for the pure state and the two classical mixtures,
samplers realizing the mixtures inside the Monte-Carlo pipeline, and the
low-gain coincidence mode.

Every pure-state quantity is built from the pair amplitude

    A(j_S, j_I) = sum_k h_S(j_S, k) h_I(j_I, m(k)) U_S(k) V_I(m(k))

with h the spectral kernels of services.optics_bench and m the mirror map.
docs/pair_correlation.md derives the formulas.
"""
import logging
from dataclasses import dataclass

import numpy as np

from services.core_model import Q_OMEGA, X_T, Field, FieldPair
from services.errors import ConfigurationError, StatisticsError
from services.optics_bench import (ARM_I, ARM_S, SCHEME_A, kernel_matrix,
                                   position_kernel_matrix)
from services.photon_statistics import sample_pair_numbers
from services.wigner_engine import MODEL_PURE, MODEL_W, MODEL_WPRIME, MODELS

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OracleResult:
    """G over the array pixels, with the point detector held at setup.fixed_point."""

    G: np.ndarray
    model: str
    x: np.ndarray
    scheme: str
    z_config: str
    fixed_point: float

    @property
    def G_normalized(self):
        peak = np.max(self.G)
        return self.G / peak if peak > 0 else self.G

    def to_records(self):
        return {"x_m": self.x.tolist(), "G": self.G.tolist(),
                "G_normalized": self.G_normalized.tolist()}


def _indices(setup, x_S, x_I):
    j_S = np.vectorize(setup.far_field_grid.x_index, otypes=[int])(x_S)
    j_I = np.vectorize(setup.idler_grid.x_index, otypes=[int])(x_I)
    return np.broadcast_arrays(j_S, j_I)


def _kernel_rows(setup, j_S, j_I, relay=True):
    """h_S(j_S, k) and h_I(j_I, m(k)) rows, the idler already mirrored onto k."""
    mirror = setup.grid.mirror_x
    H_S = kernel_matrix(setup, ARM_S, relay)
    H_I = kernel_matrix(setup, ARM_I, relay)[:, mirror]
    return H_S[j_S], H_I[j_I]


def _scalar(values):
    return float(values) if np.ndim(values) == 0 else values


def pair_amplitudes(setup, table, x_S, x_I):
    """A per Omega row: shape (n_t,) + broadcast shape of the positions."""
    j_S, j_I = _indices(setup, x_S, x_I)
    h_S, h_I = _kernel_rows(setup, j_S, j_I)
    P = table.pair_amplitude
    # (..., n_x) x (n_t, n_x) -> (n_t, ...)
    return np.einsum("...k,...k,wk->w...", h_S, h_I, P)


def g_pure(setup, table, x_S, x_I):
    """|A|^2 on the Omega = 0 slice (quasi-monochromatic pure-state correlation)."""
    return _scalar(np.abs(pair_amplitudes(setup, table, x_S, x_I)[0]) ** 2)


def detected_window_size(grid, tau_D):
    return int(np.count_nonzero(grid.time_window(tau_D)))


def g_pure_detected(setup, table, x_S, x_I, tau_D):
    """Pure-state G for intensities averaged over a detection window of M samples.

    G = (1/M^2) sum_{|d|<M} (M - |d|) |c_d|^2 with c_d the lag-d temporal
    correlation (1/n_t) sum_Omega A_Omega exp(i Omega d dt). It is the exact
    expectation of the plane-wave Monte-Carlo estimate.
    """
    grid = setup.grid
    M = detected_window_size(grid, tau_D)
    A = pair_amplitudes(setup, table, x_S, x_I)
    c = np.fft.ifft(A, axis=0)
    lags = np.arange(-(M - 1), M)
    weights = (M - np.abs(lags)) / M ** 2
    c_lag = c[lags % grid.n_t]
    G = np.tensordot(weights, np.abs(c_lag) ** 2, axes=(0, 0))
    return _scalar(G)


def mean_intensity(setup, table, arm):
    """Vacuum-subtracted mean intensity per pixel of one arm's detection plane."""
    H = kernel_matrix(setup, arm)
    n = table.mean_n_signal if arm == ARM_S else table.mean_n
    n_t = setup.grid.n_t
    return (np.abs(H) ** 2 @ n.sum(axis=0)) / n_t


def g_mixture_W(setup, table, x_S, x_I, tau_D=None):
    """Incoherent q-sum: sum_k |h_S|^2 |h_I(m(k))|^2 |U_S V_I|^2.

    Without tau_D the Omega = 0 slice is used; with it, all Omega rows weighted
    1/n_t^2, which the window does not change for independent mode phases.
    """
    j_S, j_I = _indices(setup, x_S, x_I)
    h_S, h_I = _kernel_rows(setup, j_S, j_I)
    weight = np.abs(table.pair_amplitude) ** 2
    moduli = np.abs(h_S) ** 2 * np.abs(h_I) ** 2
    if tau_D is None:
        G = np.einsum("...k,k->...", moduli, weight[0])
    else:
        setup.grid.time_window(tau_D)  # range check only
        G = np.einsum("...k,k->...", moduli, weight.sum(axis=0)) / setup.grid.n_t ** 2
    return _scalar(G)


def wprime_pair_strength(table):
    """<n>(<n>+1) of the position-diagonal pairs, taken at q = 0, Omega = 0."""
    n0 = float(table.mean_n_signal[0, 0])
    return n0 * (n0 + 1)


def g_mixture_Wprime(setup, table, x_S, x_I, tau_D=None):
    """Incoherent x-sum: w sum_x |h_S(x_S, x)|^2 |h_I(x_I, x)|^2, divided by M for a window of M samples."""
    j_S, j_I = _indices(setup, x_S, x_I)
    h_S = position_kernel_matrix(setup, ARM_S)[j_S]
    h_I = position_kernel_matrix(setup, ARM_I)[j_I]
    G = wprime_pair_strength(table) * np.sum(np.abs(h_S) ** 2 * np.abs(h_I) ** 2, axis=-1)
    if tau_D is not None:
        G = G / detected_window_size(setup.grid, tau_D)
    return _scalar(G)


def _array_positions(setup):
    """(x_S, x_I) pairs along the array with the point detector fixed."""
    x_array = setup.array_grid.x
    if setup.scheme == SCHEME_A:
        return np.full(x_array.shape, setup.point_grid.x[setup.point_index]), x_array
    return x_array, np.full(x_array.shape, setup.point_grid.x[setup.point_index])


def oracle_pattern(model, setup, table, tau_D=None):
    """G over the array pixels for one model, with the point detector fixed."""
    if model not in MODELS:
        raise ConfigurationError(f"must be one of {MODELS}, got {model!r}", key="model")
    x_S, x_I = _array_positions(setup)
    if model == MODEL_PURE:
        if tau_D is None:
            G = g_pure(setup, table, x_S, x_I)
        else:
            G = g_pure_detected(setup, table, x_S, x_I, tau_D)
    elif model == MODEL_W:
        G = g_mixture_W(setup, table, x_S, x_I, tau_D)
    else:
        G = g_mixture_Wprime(setup, table, x_S, x_I, tau_D)
    return OracleResult(G=np.asarray(G, dtype=float), model=model, x=setup.array_grid.x.copy(),
                        scheme=setup.scheme, z_config=setup.z_config,
                        fixed_point=setup.fixed_point)


def _random_phases(shape, rng):
    return np.exp(2j * np.pi * rng.random(shape))


def sample_mixture_fields(model, table, grid, rng):
    """Classical number-correlated fields with random phases.

    W pairs the (q, Omega) mode with (-q, -Omega); Wprime pairs equal near-field
    cells (x, t) with the pair strength of the q = 0 mode. No vacuum noise is
    added, so these fields are detected without subtraction.
    """
    if model == MODEL_W:
        n, _ = sample_pair_numbers(table.mean_n_signal, rng)
        amplitude = np.sqrt(n)
        signal = amplitude * _random_phases(grid.shape, rng)
        idler = grid.mirror(amplitude) * _random_phases(grid.shape, rng)
        return FieldPair(Field(signal, Q_OMEGA, grid), Field(idler, Q_OMEGA, grid))
    if model == MODEL_WPRIME:
        n0 = float(table.mean_n_signal[0, 0])
        n, _ = sample_pair_numbers(np.full(grid.shape, n0), rng)
        amplitude = np.sqrt(n)
        signal = amplitude * _random_phases(grid.shape, rng)
        idler = amplitude * _random_phases(grid.shape, rng)
        return FieldPair(Field(signal, X_T, grid), Field(idler, X_T, grid))
    raise ConfigurationError(f"must be 'W' or 'Wprime', got {model!r}", key="model")


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Coincidence counts over (x_S, x_I) pixels, or over the array when conditional."""

    counts: np.ndarray
    density: np.ndarray
    x_S: np.ndarray
    x_I: np.ndarray
    n_events: int


def _sample_counts(density, n_events, rng):
    cdf = np.cumsum(density.ravel())
    u = rng.random(n_events) * cdf[-1]
    cells = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return np.bincount(cells, minlength=cdf.size).reshape(density.shape)


def biphoton_coincidences(setup, table, n_events, rng, conditional=False):
    """Draw detection pairs from |A(x_S, x_I)|^2 on the Omega = 0 slice.

    conditional=True keeps the point detector at setup.fixed_point and samples
    only the array coordinate.
    """
    if n_events < 1000:
        raise StatisticsError(f"need at least 1000 coincidence events, got {n_events}")
    if table.params.gain > 0.1:
        logger.warning("Coincidence sampling at gain %.3g; pairs are no longer isolated",
                       table.params.gain)
    x_S = setup.far_field_grid.x
    x_I = setup.idler_grid.x
    if conditional:
        xs, xi = _array_positions(setup)
        density = np.asarray(g_pure(setup, table, xs, xi), dtype=float)
    else:
        h_S = kernel_matrix(setup, ARM_S)
        h_I = kernel_matrix(setup, ARM_I)[:, setup.grid.mirror_x]
        A = (h_S * table.pair_amplitude[0]) @ h_I.T
        density = np.abs(A) ** 2
    total = density.sum()
    if not total > 0:
        raise ConfigurationError("coincidence density vanishes for this setup", key="object")
    density = density / total
    counts = _sample_counts(density, n_events, rng)
    logger.info("Sampled %d coincidences over %d cells", n_events, density.size)
    return CoincidenceHistogram(counts=counts, density=density, x_S=x_S, x_I=x_I,
                                n_events=n_events)
