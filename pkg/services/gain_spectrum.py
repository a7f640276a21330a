# services/gain_spectrum.py
"""Phase mismatch and plane-wave gain functions U, V of the parametric amplifier.

All mismatch coefficients absorb the crystal length, so mismatch() returns the
dimensionless product Delta * l_c.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from services.errors import BandwidthError, ConfigurationError, NumericError

logger = logging.getLogger(__name__)

SIGNAL = "S"
IDLER = "I"

# below this |Gamma l_c| the series expansion replaces cosh/sinh ratios
_SERIES_LIMIT = 1e-4


@dataclass(frozen=True)
class CrystalParams:
    """Pump, crystal and mismatch-polynomial parameters."""

    sigma: float
    l_c: float
    w_p: float
    tau_p: float
    delta0: float = 0.0
    c_walkoff_q: float = 0.0
    c_diffr_q: float = 0.0
    c_gvm_t: float = 0.0
    c_gvd_t: float = 0.0
    wavelength: float = 702e-9

    def __post_init__(self):
        if not self.l_c > 0:
            raise ConfigurationError(f"must be positive, got {self.l_c}", key="l_c")
        if not self.sigma >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.sigma}", key="sigma")
        if not self.w_p > 0:
            raise ConfigurationError(f"must be positive, got {self.w_p}", key="w_p")
        if not self.tau_p > 0:
            raise ConfigurationError(f"must be positive, got {self.tau_p}", key="tau_p")
        if not self.wavelength > 0:
            raise ConfigurationError(f"must be positive, got {self.wavelength}", key="wavelength")

    @property
    def gain(self):
        """Dimensionless gain sigma * l_c."""
        return self.sigma * self.l_c

    def without_walkoff(self):
        return replace(self, c_walkoff_q=0.0, c_gvm_t=0.0)


@dataclass(frozen=True, eq=False)
class GainTable:
    """U, V for both beams on the (Omega, q) lattice of a grid."""

    U_S: np.ndarray
    V_S: np.ndarray
    U_I: np.ndarray
    V_I: np.ndarray
    mean_n: np.ndarray
    delta_s: np.ndarray
    params: CrystalParams
    grid: object

    @property
    def pair_amplitude(self):
        """U_S(q, Omega) V_I(-q, -Omega), the amplitude every oracle is built from."""
        return self.U_S * self.grid.mirror(self.V_I)

    @property
    def mean_n_signal(self):
        return np.abs(self.V_S) ** 2


@dataclass(frozen=True)
class Bandwidths:
    q0: float
    omega0: float
    l_coh: float
    tau_coh: float


def mismatch(q, omega, params, beam=SIGNAL):
    """Delta(q, Omega) * l_c; the idler takes the linear terms with opposite sign."""
    sign = 1.0 if beam == SIGNAL else -1.0
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return (params.delta0
            + sign * params.c_walkoff_q * q
            + params.c_diffr_q * q ** 2
            + sign * params.c_gvm_t * omega
            + params.c_gvd_t * omega ** 2)


def _cosh_and_sinhc(gamma_sq):
    """cosh(Gamma) and sinh(Gamma)/Gamma as entire functions of Gamma^2."""
    gamma = np.sqrt(gamma_sq + 0j)
    small = np.abs(gamma) < _SERIES_LIMIT
    safe = np.where(small, 1.0, gamma)
    cosh = np.where(small, 1 + gamma_sq / 2 + gamma_sq ** 2 / 24, np.cosh(safe))
    sinhc = np.where(small, 1 + gamma_sq / 6 + gamma_sq ** 2 / 120, np.sinh(safe) / safe)
    return cosh, sinhc


def gain_from_mismatch(delta, gain):
    """U and V for a dimensionless mismatch array delta = Delta l_c and gain sigma l_c."""
    delta = np.asarray(delta, dtype=float)
    gamma_sq = gain ** 2 - (delta / 2) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        cosh, sinhc = _cosh_and_sinhc(gamma_sq)
        phase = np.exp(0.5j * delta)
        U = phase * (cosh - 0.5j * delta * sinhc)
        V = phase * gain * sinhc
    return U, V


def _check_finite(name, values, grid):
    if np.isfinite(values).all():
        return
    k_t, k_x = np.argwhere(~np.isfinite(values))[0]
    raise NumericError(
        f"{name} is not finite",
        where=f"q={grid.q[k_x]:.6g} rad/m, Omega={grid.omega[k_t]:.6g} rad/s")


def gain_functions(params, grid):
    """Evaluate U_S, V_S, U_I, V_I on every (q, Omega) lattice point.

    The idler mismatch is the signal one read at the mirrored lattice index,
    which is the opposite-linear-sign polynomial except on the self-paired
    Nyquist row and column.
    """
    omega, q = grid.spectral_mesh
    delta_s = mismatch(q, omega, params, SIGNAL)
    delta_i = grid.mirror(delta_s)
    U_S, V_S = gain_from_mismatch(delta_s, params.gain)
    U_I, V_I = gain_from_mismatch(delta_i, params.gain)
    for name, values in (("U_S", U_S), ("V_S", V_S), ("U_I", U_I), ("V_I", V_I)):
        _check_finite(name, values, grid)
    mean_n = np.abs(V_I) ** 2
    for values in (U_S, V_S, U_I, V_I, mean_n, delta_s):
        values.setflags(write=False)
    return GainTable(U_S, V_S, U_I, V_I, mean_n, delta_s, params, grid)


def _characteristic_step(linear, quadratic, lattice_step):
    scales = [lattice_step]
    if linear != 0:
        scales.append(1.0 / abs(linear) / 16)
    if quadratic != 0:
        scales.append(1.0 / np.sqrt(abs(quadratic)) / 16)
    return min(scales)


def _half_point(profile, start, half, step, direction):
    """First crossing of profile below half, walking from start in direction (+1/-1)."""
    previous = start
    for _ in range(200000):
        current = previous + direction * step
        if profile(current) < half:
            lo, hi = sorted((previous, current))
            return brentq(lambda s: profile(s) - half, lo, hi, xtol=1e-14 * max(abs(lo), abs(hi), 1e-300))
        previous = current
        step *= 1.01
    raise BandwidthError("emission profile never falls to half maximum")


def _hwhm(profile, lattice, lattice_values, linear, quadratic, lattice_step):
    peak = float(lattice[int(np.argmax(lattice_values))])
    half = profile(peak) / 2
    if not half > 0:
        raise BandwidthError("emission profile is zero at its peak")
    step = _characteristic_step(linear, quadratic, lattice_step)
    right = _half_point(profile, peak, half, step, +1)
    left = _half_point(profile, peak, half, step, -1)
    return (right - left) / 2


def bandwidths(table):
    """Half-widths at half-maximum of <n> along q (Omega = 0) and along Omega (q = 0).

    The half-maximum point is bracketed on the lattice scale and refined on the
    closed-form profile, so the result does not depend on the lattice pitch.
    """
    params = table.params
    grid = table.grid
    if params.gain == 0 or not np.any(table.mean_n > 0):
        raise BandwidthError("gain table has no emission; bandwidth undefined")

    def n_of(q, omega):
        # mean_n is |V_I|^2 and the idler reads the signal polynomial at (-q, -Omega)
        delta = mismatch(-q, -omega, params, SIGNAL)
        return float(np.abs(gain_from_mismatch(delta, params.gain)[1]) ** 2)

    q0 = _hwhm(lambda q: n_of(q, 0.0), grid.q, table.mean_n[0, :],
               params.c_walkoff_q, params.c_diffr_q, grid.dq)
    omega0 = _hwhm(lambda w: n_of(0.0, w), grid.omega, table.mean_n[:, 0],
                   params.c_gvm_t, params.c_gvd_t, grid.domega)
    logger.debug("Bandwidths q0=%.6g rad/m, Omega0=%.6g rad/s", q0, omega0)
    return Bandwidths(q0=q0, omega0=omega0, l_coh=1.0 / q0, tau_coh=1.0 / omega0)


def resolvable_pixels(params, bw):
    """(w_p / l_coh)^2, the number of resolvable correlation cells."""
    return (params.w_p / bw.l_coh) ** 2


def half_maximum_mismatch(gain=1.0):
    """Mismatch Delta l_c at which <n> falls to half its phase-matched value."""
    peak = float(np.abs(gain_from_mismatch(0.0, gain)[1]) ** 2)

    def excess(delta):
        return float(np.abs(gain_from_mismatch(delta, gain)[1]) ** 2) - peak / 2

    return brentq(excess, 1e-6, 2 * np.pi + 2 * gain, xtol=1e-14)


def calibrate_mismatch(l_coh, tau_coh):
    """Quadratic coefficients giving the requested coherence scales at sigma l_c = 1."""
    if not l_coh > 0:
        raise ConfigurationError(f"must be positive, got {l_coh}", key="l_coh_target")
    if not tau_coh > 0:
        raise ConfigurationError(f"must be positive, got {tau_coh}", key="tau_coh_target")
    delta_half = half_maximum_mismatch(1.0)
    c_diffr_q = delta_half * l_coh ** 2
    c_gvd_t = delta_half * tau_coh ** 2
    logger.info("Calibrated mismatch: c_diffr_q=%.6g m^2, c_gvd_t=%.6g s^2", c_diffr_q, c_gvd_t)
    return c_diffr_q, c_gvd_t


def emission_plane_defocus(params):
    """Per-beam quadratic phase coefficient removing the curvature of arg(U_S V_I) at q = 0."""
    g = params.gain
    if g < 1e-6:
        factor = 0.5
    else:
        factor = 1 - np.tanh(g) / (2 * g)
    return params.c_diffr_q * factor / 2
