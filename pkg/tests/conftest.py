"""Shared builders for grids, environments and configs used across tests."""

import math

from pe3d.config import Config, RunOptions
from pe3d.environment import (
    PERIODIC,
    Absorber,
    Environment,
    Grid3D,
    SoundSpeedProfile,
    SourceSpec,
)


def make_grid(n_range=10, n_azimuth=8, n_depth=32, delta_r=5.0, delta_z=4.0,
              r_start=None, topology=PERIODIC, delta_theta=None):
    if delta_theta is None:
        delta_theta = 2.0 * math.pi / n_azimuth if topology == PERIODIC \
            else math.radians(2.0)
    return Grid3D(
        n_range=n_range, n_azimuth=n_azimuth, n_depth=n_depth,
        delta_r=delta_r, delta_theta=delta_theta, delta_z=delta_z,
        r_start=delta_r if r_start is None else r_start,
        azimuth_topology=topology,
    )


def make_env(grid, speed=1500.0, c0=1500.0, attenuation=0.01, start_frac=0.75,
             water_depth=6000.0, profile=None):
    return Environment(
        c0=c0,
        profile=profile if profile is not None else SoundSpeedProfile.uniform(speed),
        water_depth=water_depth,
        absorber=Absorber(start_frac * grid.depth_extent, attenuation),
        bottom_depth=grid.depth_extent,
    )


def make_config(grid=None, env=None, frequencies=(50.0,), source_depth=None,
                options=None, **grid_kwargs):
    grid = grid if grid is not None else make_grid(**grid_kwargs)
    env = env if env is not None else make_env(grid)
    if source_depth is None:
        source_depth = 0.5 * grid.depth_extent
    source = SourceSpec(frequencies=tuple(frequencies), depth=source_depth)
    return Config(grid, env, source, options if options is not None else RunOptions())


def random_slab_values(rng, grid, zero_surface=True):
    values = rng.standard_normal((grid.n_azimuth, grid.n_depth)) \
        + 1j * rng.standard_normal((grid.n_azimuth, grid.n_depth))
    if zero_surface:
        values[:, 0] = 0.0
    return values
