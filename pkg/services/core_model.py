# services/core_model.py
"""Lattices, transform conventions and field containers.

Space and time lattices are centred: x_j = (j - n_x/2) dx, t_j = (j - n_t/2) dt.
Spectra use the standard DFT layout (zero frequency at index 0, negative
frequencies in the upper half), q_k = 2 pi fftfreq(n_x, dx), and the unitary
convention

    a(q, Omega) = (1/sqrt(n_x n_t)) sum_{x,t} alpha(x, t) exp(-i q x - i Omega t)

so forward and inverse transforms both carry 1/sqrt(N).
Field arrays have shape (n_t, n_x): axis 0 is time, axis 1 is space.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from services.errors import ConfigurationError, LogicError, NumericError

SPACE = "space"
TIME = "time"
FORWARD = "forward"
INVERSE = "inverse"

# domain tags: <space part>-<time part>
X_T = "x-t"
Q_T = "q-t"
X_OMEGA = "x-Omega"
Q_OMEGA = "q-Omega"
DOMAINS = (X_T, Q_T, X_OMEGA, Q_OMEGA)

_AXIS = {SPACE: 1, TIME: 0}
_FLIP = {
    SPACE: {"x": "q", "q": "x"},
    TIME: {"t": "Omega", "Omega": "t"},
}


def _is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Transverse-space/time lattice and its conjugate frequency lattices."""

    n_x: int
    dx: float
    n_t: int
    dt: float

    @cached_property
    def x(self):
        return (np.arange(self.n_x) - self.n_x // 2) * self.dx

    @cached_property
    def t(self):
        return (np.arange(self.n_t) - self.n_t // 2) * self.dt

    @cached_property
    def q(self):
        return 2 * np.pi * np.fft.fftfreq(self.n_x, self.dx)

    @cached_property
    def omega(self):
        return 2 * np.pi * np.fft.fftfreq(self.n_t, self.dt)

    @property
    def dq(self):
        return 2 * np.pi / (self.n_x * self.dx)

    @property
    def domega(self):
        return 2 * np.pi / (self.n_t * self.dt)

    @property
    def q_max(self):
        return np.pi / self.dx

    @property
    def window_x(self):
        return self.n_x * self.dx

    @property
    def window_t(self):
        return self.n_t * self.dt

    @property
    def shape(self):
        return (self.n_t, self.n_x)

    @cached_property
    def mirror_x(self):
        """Index of -q for every q index (self-paired at 0 and Nyquist)."""
        return (-np.arange(self.n_x)) % self.n_x

    @cached_property
    def mirror_t(self):
        return (-np.arange(self.n_t)) % self.n_t

    @cached_property
    def spectral_mesh(self):
        """(Omega, q) arrays broadcast to the field shape."""
        omega, q = np.meshgrid(self.omega, self.q, indexing="ij")
        return omega, q

    @cached_property
    def direct_mesh(self):
        t, x = np.meshgrid(self.t, self.x, indexing="ij")
        return t, x

    def mirror(self, values):
        """Return values[m(k_t), m(k_x)], i.e. the array evaluated at (-q, -Omega)."""
        return values[np.ix_(self.mirror_t, self.mirror_x)]

    def x_index(self, position):
        """Nearest lattice index of a transverse position; error when outside the window."""
        if not np.isfinite(position):
            raise ConfigurationError(f"position must be finite, got {position}")
        index = int(round(position / self.dx)) + self.n_x // 2
        if index < 0 or index >= self.n_x:
            raise ConfigurationError(
                f"position {position} m lies outside the {self.window_x} m window")
        return index

    def time_window(self, tau_d):
        """Boolean mask of the time samples inside a detection window centred at t=0."""
        if not np.isfinite(tau_d) or tau_d <= 0:
            raise ConfigurationError(
                f"detection time must be positive and finite, got {tau_d}", key="tau_D")
        if tau_d > self.window_t * (1 + 1e-12):
            raise ConfigurationError(
                f"detection time {tau_d} s exceeds the {self.window_t} s grid window",
                key="tau_D")
        mask = np.abs(self.t) <= tau_d / 2 * (1 + 1e-12)
        mask[self.n_t // 2] = True
        return mask


def make_grid(n_x, dx, n_t, dt):
    """Build a Grid after checking sizes and spacings."""
    if not _is_power_of_two(n_x) or n_x < 2:
        raise ConfigurationError(f"must be a power of two >= 2, got {n_x}", key="n_x")
    if not _is_power_of_two(n_t):
        raise ConfigurationError(f"must be a power of two, got {n_t}", key="n_t")
    if not dx > 0:
        raise ConfigurationError(f"must be positive, got {dx}", key="dx")
    if not dt > 0:
        raise ConfigurationError(f"must be positive, got {dt}", key="dt")
    return Grid(int(n_x), float(dx), int(n_t), float(dt))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex amplitudes on a Grid, tagged with the domain they live in."""

    values: np.ndarray
    domain: str
    grid: Grid

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise LogicError(f"unknown domain tag {self.domain!r}")
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise LogicError(
                f"field shape {values.shape} does not match grid shape {self.grid.shape}")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NumericError("non-finite field amplitude", where=tuple(int(i) for i in bad))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def space_part(self):
        return self.domain.split("-")[0]

    @property
    def time_part(self):
        return self.domain.split("-")[1]

    def power(self):
        return float(np.sum(np.abs(self.values) ** 2))

    def with_values(self, values):
        return Field(values, self.domain, self.grid)


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Signal and idler envelopes sharing one Grid and one domain."""

    signal: Field
    idler: Field

    def __post_init__(self):
        if self.signal.grid != self.idler.grid:
            raise LogicError("signal and idler live on different grids")
        if self.signal.domain != self.idler.domain:
            raise LogicError(
                f"signal is in {self.signal.domain} but idler is in {self.idler.domain}")

    @property
    def grid(self):
        return self.signal.grid

    @property
    def domain(self):
        return self.signal.domain


def transform(field, axis, direction):
    """Unitary DFT along one axis; flips the matching part of the domain tag."""
    if axis not in _AXIS:
        raise LogicError(f"unknown axis {axis!r}")
    part = field.space_part if axis == SPACE else field.time_part
    expected = {SPACE: {FORWARD: "x", INVERSE: "q"}, TIME: {FORWARD: "t", INVERSE: "Omega"}}
    if direction not in (FORWARD, INVERSE):
        raise LogicError(f"unknown direction {direction!r}")
    if part != expected[axis][direction]:
        raise LogicError(
            f"{direction} {axis} transform needs a {expected[axis][direction]!r} field, "
            f"got domain {field.domain}")

    ax = _AXIS[axis]
    if direction == FORWARD:
        values = np.fft.fft(np.fft.ifftshift(field.values, axes=ax), axis=ax, norm="ortho")
    else:
        values = np.fft.fftshift(np.fft.ifft(field.values, axis=ax, norm="ortho"), axes=ax)

    flipped = _FLIP[axis][part]
    if axis == SPACE:
        domain = f"{flipped}-{field.time_part}"
    else:
        domain = f"{field.space_part}-{flipped}"
    return Field(values, domain, field.grid)


def to_spectral(field):
    """Bring a field to the (q, Omega) domain, whatever its current tag."""
    if field.space_part == "x":
        field = transform(field, SPACE, FORWARD)
    if field.time_part == "t":
        field = transform(field, TIME, FORWARD)
    return field


def to_direct(field):
    """Bring a field to the (x, t) domain."""
    if field.space_part == "q":
        field = transform(field, SPACE, INVERSE)
    if field.time_part == "Omega":
        field = transform(field, TIME, INVERSE)
    return field


def pair_to_spectral(pair):
    return FieldPair(to_spectral(pair.signal), to_spectral(pair.idler))


def pair_to_direct(pair):
    return FieldPair(to_direct(pair.signal), to_direct(pair.idler))


# raw-array versions used inside the engines, where building Field objects per step would be waste

def fft2_direct_to_spectral(values):
    shifted = np.fft.ifftshift(values, axes=(0, 1))
    return np.fft.fft2(shifted, norm="ortho")


def fft2_spectral_to_direct(values):
    return np.fft.fftshift(np.fft.ifft2(values, norm="ortho"), axes=(0, 1))
