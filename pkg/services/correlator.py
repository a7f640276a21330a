# services/correlator.py
"""Detection-time averaging and mergeable accumulation of intensity correlations.

Per pulse the array arm gives a vector a (one value per pixel) and the point
detector a scalar b. The accumulator keeps additive moment sums only, so
partial accumulators from any number of workers merge exactly.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from services.errors import DomainError, LogicError, StatisticsError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["x_m", "G", "G_stderr", "background", "mean_I_array", "mean_I_point",
               "full_correlation", "G_normalized"]


def detect(field, tau_D=None, vacuum_offset=0.5):
    """Window-averaged intensity per pixel minus the vacuum offset.

    tau_D=None averages over the whole time window. Wigner runs subtract 1/2
    per mode; classical runs pass vacuum_offset=0.
    """
    if field.domain != "x-t":
        raise LogicError(f"detection needs an (x, t) field, got {field.domain}")
    power = np.abs(field.values) ** 2
    if tau_D is not None:
        power = power[field.grid.time_window(tau_D)]
    return power.mean(axis=0) - vacuum_offset


@dataclass
class CorrAccumulator:
    """Running moment sums of (a, b) with a the array intensities and b the point intensity."""

    count: int = 0
    sum_a: np.ndarray = None
    sum_b: float = 0.0
    sum_ab: np.ndarray = None
    sum_aa: np.ndarray = None
    sum_bb: float = 0.0
    sum_aabb: np.ndarray = None
    sum_aab: np.ndarray = None
    sum_abb: np.ndarray = None

    _VECTORS = ("sum_a", "sum_ab", "sum_aa", "sum_aabb", "sum_aab", "sum_abb")
    _SCALARS = ("sum_b", "sum_bb")

    @classmethod
    def empty(cls, n_pixels):
        acc = cls()
        for name in cls._VECTORS:
            setattr(acc, name, np.zeros(n_pixels))
        return acc

    @property
    def n_pixels(self):
        return self.sum_a.size

    def add(self, a, b):
        a = np.asarray(a, dtype=float)
        if a.shape != self.sum_a.shape:
            raise LogicError(f"array intensities have shape {a.shape}, accumulator expects {self.sum_a.shape}")
        b = float(b)
        self.count += 1
        self.sum_a += a
        self.sum_b += b
        self.sum_ab += a * b
        self.sum_aa += a * a
        self.sum_bb += b * b
        self.sum_aabb += a * a * b * b
        self.sum_aab += a * a * b
        self.sum_abb += a * b * b
        return self

    def merge(self, other):
        """New accumulator holding the sums of both."""
        if self.sum_a.shape != other.sum_a.shape:
            raise LogicError("cannot merge accumulators over different detector arrays")
        merged = CorrAccumulator(count=self.count + other.count)
        for name in self._VECTORS + self._SCALARS:
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        return merged

    def to_dict(self):
        data = {"count": self.count}
        for name in self._VECTORS:
            data[name] = getattr(self, name).tolist()
        for name in self._SCALARS:
            data[name] = float(getattr(self, name))
        return data

    @classmethod
    def from_dict(cls, data):
        acc = cls(count=int(data["count"]))
        for name in cls._VECTORS:
            setattr(acc, name, np.asarray(data[name], dtype=float))
        for name in cls._SCALARS:
            setattr(acc, name, float(data[name]))
        return acc


def accumulate(acc, I_array, I_point):
    return acc.add(I_array, I_point)


def merge_all(accumulators):
    """Merge in the given order."""
    accumulators = list(accumulators)
    if not accumulators:
        raise StatisticsError("nothing to merge")
    total = accumulators[0]
    for acc in accumulators[1:]:
        total = total.merge(acc)
    return total


@dataclass
class CorrelationResult:
    G: np.ndarray
    background: np.ndarray
    stderr: np.ndarray
    full: np.ndarray
    mean_array: np.ndarray
    mean_point: float
    count: int
    G_normalized: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.G_normalized is None:
            peak = np.max(self.G)
            self.G_normalized = self.G / peak if peak > 0 else self.G.copy()

    def to_frame(self, x):
        return pd.DataFrame({
            "x_m": np.asarray(x, dtype=float),
            "G": self.G,
            "G_stderr": self.stderr,
            "background": self.background,
            "mean_I_array": self.mean_array,
            "mean_I_point": np.full(self.G.shape, self.mean_point),
            "full_correlation": self.full,
            "G_normalized": self.G_normalized,
        }, columns=CSV_COLUMNS)


def finalize(acc):
    """G = n/(n-1) (<ab> - <a><b>) with delete-one jackknife error bars.

    The jackknife variance of the covariance estimator reduces, to first
    order, to Var[(a - <a>)(b - <b>)] / (n - 1), which the moment sums give in
    closed form.
    """
    n = acc.count
    if n < 2:
        raise StatisticsError(f"need at least 2 pulses to estimate G, got {n}")
    mean_a = acc.sum_a / n
    mean_b = acc.sum_b / n
    m_ab = acc.sum_ab / n
    m_aa = acc.sum_aa / n
    m_bb = acc.sum_bb / n
    m_aabb = acc.sum_aabb / n
    m_aab = acc.sum_aab / n
    m_abb = acc.sum_abb / n

    cov = m_ab - mean_a * mean_b
    G = cov * n / (n - 1)
    m_dd = (m_aabb - 2 * mean_b * m_aab - 2 * mean_a * m_abb + mean_b ** 2 * m_aa
            + mean_a ** 2 * m_bb + 4 * mean_a * mean_b * m_ab - 3 * mean_a ** 2 * mean_b ** 2)
    var_d = np.clip(m_dd - cov ** 2, 0, None)
    stderr = np.sqrt(var_d / (n - 1))
    return CorrelationResult(G=G, background=mean_a * mean_b, stderr=stderr, full=m_ab,
                             mean_array=mean_a, mean_point=float(mean_b), count=n)


def _window_mask(size, window):
    if window is None:
        return np.ones(size, dtype=bool)
    mask = np.zeros(size, dtype=bool)
    if isinstance(window, slice):
        mask[window] = True
    elif isinstance(window, tuple):
        mask[window[0]:window[1]] = True
    else:
        mask = np.asarray(window, dtype=bool)
    return mask


def visibility(pattern, window=None):
    """(max - min) / (max + min) over a window (slice, (start, stop) or boolean mask).

    Negative entries, which estimated patterns can show through noise, count as 0.
    """
    pattern = np.clip(np.asarray(pattern, dtype=float), 0, None)
    values = pattern[_window_mask(pattern.size, window)]
    if values.size == 0:
        raise DomainError("visibility window is empty")
    hi = values.max()
    lo = values.min()
    if hi + lo == 0:
        raise DomainError("visibility of an all-zero pattern is undefined")
    return float((hi - lo) / (hi + lo))


def fringe_contrast(pattern, x, period, center=0.0):
    """Visibility within one fringe period either side of the expected central fringe."""
    x = np.asarray(x)
    return visibility(pattern, np.abs(x - center) <= period)


def image_contrast(pattern, x, slit_distance):
    """(G_slits - G_mid) / (G_slits + G_mid), G_slits the mean at +-d/2 and G_mid at x = 0."""
    pattern = np.asarray(pattern, dtype=float)
    x = np.asarray(x)
    at = [int(np.argmin(np.abs(x - p))) for p in (-slit_distance / 2, slit_distance / 2, 0.0)]
    slits = max(0.5 * (pattern[at[0]] + pattern[at[1]]), 0.0)
    mid = max(pattern[at[2]], 0.0)
    if slits + mid == 0:
        raise DomainError("image contrast of an all-zero pattern is undefined")
    return float((slits - mid) / (slits + mid))


def fringe_component(pattern, x, period):
    """|Fourier component of the pattern at the fringe frequency| relative to its mean."""
    pattern = np.asarray(pattern, dtype=float)
    dc = np.sum(pattern)
    if dc == 0:
        raise DomainError("fringe component of a zero-mean pattern is undefined")
    component = np.sum(pattern * np.exp(-2j * np.pi * np.asarray(x) / period))
    return float(np.abs(component) / abs(dc))
