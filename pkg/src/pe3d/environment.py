"""Physical model: grid, medium, source, starter field and pressure
reconstruction.

Conventions
-----------
Cylindrical grid (r, theta, z): ``r`` range in meters, ``theta`` azimuth in
radians, ``z`` depth in meters measured downward from the sea surface.
Field slabs are complex matrices indexed ``[m, l]`` with ``m`` the azimuth
index and ``l`` the depth index; depth row ``l = 0`` is the pressure-release
surface.  The acoustic pressure at a grid point is ``p = u * w(r)`` where
``w`` is the outgoing cylindrical envelope (:func:`hankel_factor`) and ``u``
the slab value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantError, ShapeError

PERIODIC = "periodic"
SECTOR = "sector"
TOPOLOGIES = (PERIODIC, SECTOR)

# Clamp for zero-magnitude pressure samples so TL fields stay finite.
TL_FLOOR_DB = 300.0

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Grid3D:
    """Cylindrical discretization: counts and spacings per direction.

    ``n_range`` is the number of range steps marched beyond the starter
    range ``r_start``; azimuth and depth counts are grid point counts.
    ``delta_theta`` is stored in radians.
    """

    n_range: int
    n_azimuth: int
    n_depth: int
    delta_r: float
    delta_theta: float
    delta_z: float
    r_start: float
    azimuth_topology: str = PERIODIC

    def __post_init__(self):
        for name in ("n_range", "n_azimuth", "n_depth"):
            if getattr(self, name) < 3:
                raise InvariantError(f"{name} >= 3", f"got {getattr(self, name)}")
        for name in ("delta_r", "delta_theta", "delta_z"):
            if not getattr(self, name) > 0:
                raise InvariantError(f"{name} > 0", f"got {getattr(self, name)}")
        if not self.r_start > 0:
            raise InvariantError("r_start > 0", f"got {self.r_start}")
        if self.azimuth_topology not in TOPOLOGIES:
            raise InvariantError(
                f"azimuth_topology in {TOPOLOGIES}",
                f"got {self.azimuth_topology!r}",
            )
        if self.azimuth_topology == PERIODIC:
            closure = self.n_azimuth * self.delta_theta
            if abs(closure - _TWO_PI) > 1e-9 * _TWO_PI:
                raise InvariantError(
                    "n_azimuth * delta_theta == 2*pi (periodic closure)",
                    f"got {closure!r}",
                )

    @property
    def depth_extent(self) -> float:
        """Depth of the last grid row (the grid bottom), meters."""
        return (self.n_depth - 1) * self.delta_z

    @property
    def max_range(self) -> float:
        return self.r_start + self.n_range * self.delta_r

    def depths(self) -> np.ndarray:
        return np.arange(self.n_depth) * self.delta_z

    def azimuths(self) -> np.ndarray:
        return np.arange(self.n_azimuth) * self.delta_theta

    def range_at(self, j: int) -> float:
        return self.r_start + j * self.delta_r


@dataclass(frozen=True)
class Absorber:
    """Artificial bottom attenuation: imaginary refraction index ramping
    quadratically from 0 at ``start_depth`` to ``max_attenuation`` at the
    grid bottom."""

    start_depth: float
    max_attenuation: float

    def __post_init__(self):
        if self.start_depth < 0:
            raise InvariantError("absorber.start_depth >= 0")
        if self.max_attenuation < 0:
            raise InvariantError("absorber.max_attenuation >= 0")


@dataclass(frozen=True, eq=False)
class SoundSpeedProfile:
    """Depth-sampled sound speed, piecewise-linear in z and clamped at the
    ends.  A single profile applies at every (r, theta) — the nearest-sample
    rule with one station."""

    depths: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=np.float64).copy()
        speeds = np.asarray(self.speeds, dtype=np.float64).copy()
        if depths.ndim != 1 or depths.shape != speeds.shape:
            raise ShapeError("profile depths and speeds must be equal-length vectors")
        if depths.size < 1:
            raise InvariantError("profile has >= 1 sample")
        if depths.size > 1 and not np.all(np.diff(depths) > 0):
            raise InvariantError("profile depths strictly increasing")
        if not np.all((speeds > 100.0) & (speeds < 100000.0)):
            raise InvariantError(
                "sound speeds in (100, 100000) m/s", f"got range "
                f"[{speeds.min()}, {speeds.max()}]"
            )
        depths.setflags(write=False)
        speeds.setflags(write=False)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "speeds", speeds)

    @classmethod
    def uniform(cls, speed: float) -> "SoundSpeedProfile":
        return cls(np.array([0.0]), np.array([float(speed)]))

    def speed_at(self, z):
        """Sound speed at depth(s) ``z`` (scalar or array), m/s."""
        if self.depths.size == 1:
            return np.full_like(np.asarray(z, dtype=np.float64), self.speeds[0]) \
                if np.ndim(z) else float(self.speeds[0])
        return np.interp(z, self.depths, self.speeds)


@dataclass(frozen=True, eq=False)
class Environment:
    """Water column description shared read-only by all solver tasks.

    ``bottom_depth`` is the grid bottom the absorber ramps to; it is filled
    from the grid when loading a config.
    """

    c0: float
    profile: SoundSpeedProfile
    water_depth: float
    absorber: Absorber
    bottom_depth: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise InvariantError("c0 > 0", f"got {self.c0}")
        if not self.water_depth > 0:
            raise InvariantError("water_depth > 0", f"got {self.water_depth}")
        if not self.absorber.start_depth < self.bottom_depth:
            raise InvariantError(
                "absorber.start_depth < grid bottom depth",
                f"got start {self.absorber.start_depth} vs bottom {self.bottom_depth}",
            )

    def sound_speed(self, r, theta, z):
        """c(r, theta, z): linear in z, nearest station in r and theta
        (a single profile, so constant in those directions)."""
        return self.profile.speed_at(z)


@dataclass(frozen=True)
class SourceSpec:
    """Source frequencies, depth and starter-field family."""

    frequencies: tuple
    depth: float
    starter: str = "gaussian"

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) < 1:
            raise InvariantError("source has >= 1 frequency")
        if any(f <= 0 for f in freqs):
            raise InvariantError("every frequency > 0", f"got {freqs}")
        if self.starter != "gaussian":
            raise InvariantError("starter == 'gaussian'", f"got {self.starter!r}")
        object.__setattr__(self, "frequencies", freqs)


@dataclass(eq=False)
class FieldSlab:
    """Complex field on one (azimuth x depth) slice at range ``range_m``.

    The only mutable model type: the marching engine owns it during a step.
    """

    values: np.ndarray
    range_m: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise ShapeError("slab values must be a 2-D (azimuth x depth) matrix")

    def check_grid(self, grid: Grid3D):
        if self.values.shape != (grid.n_azimuth, grid.n_depth):
            raise ShapeError(
                f"slab shape {self.values.shape} != grid "
                f"({grid.n_azimuth}, {grid.n_depth})"
            )

    def copy(self) -> "FieldSlab":
        return FieldSlab(self.values.copy(), self.range_m)


def wavenumber(frequency: float, c0: float) -> float:
    """Reference wavenumber k0 = 2*pi*f / c0 [1/m]."""
    if frequency <= 0:
        raise DomainError(f"frequency must be > 0, got {frequency}")
    if c0 <= 0:
        raise DomainError(f"c0 must be > 0, got {c0}")
    return _TWO_PI * frequency / c0


def refraction_index(env: Environment, r, theta, z):
    """Complex refraction index n(r, theta, z).

    Re(n) = c0 / c; Im(n) ramps quadratically from 0 at the absorber start
    depth to ``max_attenuation`` at the grid bottom.  Accepts scalar or
    array ``z``; points outside [0, bottom_depth] or r < 0 raise.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(z_arr < 0) or np.any(z_arr > env.bottom_depth * (1 + 1e-12)):
        raise DomainError(
            f"depth outside [0, {env.bottom_depth}] m"
        )
    if np.any(np.asarray(r, dtype=np.float64) < 0):
        raise DomainError("range must be >= 0")
    re = env.c0 / np.asarray(env.sound_speed(r, theta, z_arr), dtype=np.float64)
    ab = env.absorber
    if ab.max_attenuation > 0:
        span = env.bottom_depth - ab.start_depth
        ramp = np.clip((z_arr - ab.start_depth) / span, 0.0, None)
        im = ab.max_attenuation * ramp * ramp
    else:
        im = np.zeros_like(z_arr)
    n = re + 1j * im
    return n if np.ndim(z) else complex(n)


def refraction_index_grid(env: Environment, grid: Grid3D, r: float) -> np.ndarray:
    """n over the (azimuth x depth) grid at range ``r``.

    The profile is azimuth-independent, so the depth profile is computed
    once and broadcast — this also keeps azimuth symmetry exact to the bit.
    """
    n_z = refraction_index(env, r, 0.0, grid.depths())
    return np.broadcast_to(n_z, (grid.n_azimuth, grid.n_depth))


def gaussian_starter(grid: Grid3D, source: SourceSpec, k0: float) -> FieldSlab:
    """Gaussian starter slab at r_start:
    u(z) = sqrt(k0) * exp(-(k0^2 / 2) * (z - z_s)^2), identical in azimuth,
    with the surface row forced to zero."""
    z_s = source.depth
    if not 0 < z_s < grid.depth_extent:
        raise DomainError(
            f"source depth {z_s} not strictly inside (0, {grid.depth_extent})"
        )
    z = grid.depths()
    profile = math.sqrt(k0) * np.exp(-0.5 * k0 * k0 * (z - z_s) ** 2)
    values = np.empty((grid.n_azimuth, grid.n_depth), dtype=np.complex128)
    values[:] = profile
    values[:, 0] = 0.0
    return FieldSlab(values, grid.r_start)


def hankel_factor(k0: float, r: float) -> complex:
    """Outgoing cylindrical envelope w(r) = exp(i*k0*r) / sqrt(r).

    Far-field asymptotic form; |w(r)| = 1/sqrt(r) exactly.
    """
    if r <= 0:
        raise DomainError(f"range must be > 0, got {r}")
    return complex(math.cos(k0 * r), math.sin(k0 * r)) / math.sqrt(r)


def transmission_loss(u: complex, w: complex) -> float:
    """TL = -20*log10 |u*w| in dB re unit pressure at 1 m.

    Zero magnitude clamps to ``TL_FLOOR_DB`` instead of +inf.
    """
    mag = abs(u * w)
    if mag == 0.0:
        return TL_FLOOR_DB
    return -20.0 * math.log10(mag)


def transmission_loss_field(values: np.ndarray, w: complex):
    """Vectorized TL over a slab; returns (tl array, clamped sample count)."""
    mag = np.abs(values) * abs(w)
    zero = mag == 0.0
    clamped = int(np.count_nonzero(zero))
    with np.errstate(divide="ignore"):
        tl = np.where(zero, TL_FLOOR_DB, -20.0 * np.log10(np.where(zero, 1.0, mag)))
    return tl, clamped
