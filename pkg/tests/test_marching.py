import math

import numpy as np
import pytest

from conftest import make_config, make_env, make_grid, random_slab_values
from pe3d.config import RunOptions
from pe3d.environment import (
    SECTOR,
    FieldSlab,
    gaussian_starter,
    wavenumber,
)
from pe3d.errors import DomainError, StepError
from pe3d.marching import (
    MarchState,
    apply_boundary,
    default_output_stride,
    range_step,
    run_frequency,
)
from pe3d.operators import StepCoefficients


def make_state(config, frequency=50.0, slab_values=None, delta_r=None):
    grid, env, source, _ = config
    k0 = wavenumber(frequency, env.c0)
    coeffs = StepCoefficients.for_step(
        k0, grid.delta_r if delta_r is None else delta_r)
    if slab_values is None:
        slab = gaussian_starter(grid, source, k0)
    else:
        slab = FieldSlab(slab_values, grid.r_start)
    return MarchState(slab, 0, coeffs, env, grid, k0)


class TestApplyBoundary:
    def test_surface_row_zeroed(self):
        rng = np.random.default_rng(1)
        grid = make_grid()
        env = make_env(grid)
        slab = FieldSlab(random_slab_values(rng, grid, zero_surface=False),
                         grid.r_start)
        apply_boundary(slab, grid, env)
        assert np.all(slab.values[:, 0] == 0.0)

    def test_periodic_leaves_azimuth_edges(self):
        rng = np.random.default_rng(2)
        grid = make_grid()
        env = make_env(grid)
        values = random_slab_values(rng, grid, zero_surface=False)
        marker = values[0, 5]
        slab = FieldSlab(values, grid.r_start)
        apply_boundary(slab, grid, env)
        assert slab.values[0, 5] == marker

    def test_sector_edges_zeroed(self):
        rng = np.random.default_rng(3)
        grid = make_grid(topology=SECTOR)
        env = make_env(grid)
        slab = FieldSlab(random_slab_values(rng, grid, zero_surface=False),
                         grid.r_start)
        apply_boundary(slab, grid, env)
        assert np.all(slab.values[0, :] == 0.0)
        assert np.all(slab.values[-1, :] == 0.0)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        grid = make_grid(topology=SECTOR)
        env = make_env(grid)
        slab = FieldSlab(random_slab_values(rng, grid, zero_surface=False),
                         grid.r_start)
        once = apply_boundary(slab, grid, env).values.copy()
        twice = apply_boundary(slab, grid, env).values
        assert np.array_equal(once, twice)


class TestRangeStep:
    def test_delta_zero_identity_bitwise(self):
        rng = np.random.default_rng(5)
        config = make_config(n_azimuth=8, n_depth=24)
        values = random_slab_values(rng, config.grid)
        state = make_state(config, slab_values=values.copy(), delta_r=0.0)
        before = state.slab.values.copy()
        after = range_step(state)
        assert after.range_index == 1
        assert after.slab.values.tobytes() == before.tobytes()

    def test_advances_range_and_index(self):
        config = make_config(n_azimuth=6, n_depth=24)
        state = make_state(config)
        new = range_step(state)
        assert new.range_index == 1
        assert new.slab.range_m == config.grid.range_at(1)

    def test_step_beyond_grid_rejected(self):
        config = make_config(n_range=3)
        state = make_state(config)
        state = range_step(range_step(range_step(state)))
        with pytest.raises(DomainError, match="n_range"):
            range_step(state)

    def test_azimuth_symmetry_preserved_one_step(self):
        config = make_config(n_azimuth=16, n_depth=48)
        state = make_state(config)
        out = range_step(state).slab.values
        mags = np.abs(out)
        spread = (mags.max(axis=0) - mags.min(axis=0)).max()
        assert spread <= 1e-12 * mags.max()

    def test_surface_zero_after_step(self):
        config = make_config()
        out = range_step(make_state(config))
        assert np.all(out.slab.values[:, 0] == 0.0)

    def test_dense_step_oracle_three_by_three(self):
        # full step on a 3x3 slab vs the dense 9x9 factorization
        rng = np.random.default_rng(6)
        grid = make_grid(n_azimuth=3, n_depth=3, delta_r=4.0, delta_z=7.0,
                         r_start=30.0)
        env = make_env(grid, attenuation=0.0, start_frac=0.5)
        config = make_config(grid=grid, env=env, source_depth=7.0)
        u0 = random_slab_values(rng, grid)
        state = make_state(config, slab_values=u0.copy())
        out = range_step(state).slab.values

        k0 = state.k0
        coeffs = state.coeffs

        def second_diff(n, periodic):
            t = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) \
                + np.diag(np.ones(n - 1), -1)
            if periodic:
                t[0, n - 1] += 1.0
                t[n - 1, 0] += 1.0
            return t

        s_z = 1.0 / (k0 * grid.delta_z) ** 2
        x_hat = np.kron(np.eye(3), s_z * second_diff(3, False))
        r_old, r_new = grid.r_start, grid.range_at(1)

        def y_hat(r):
            s_y = 1.0 / (k0 * r * grid.delta_theta) ** 2
            return np.kron(s_y * second_diff(3, True), np.eye(3))

        surface = [m * 3 for m in range(3)]
        z_proj = np.eye(9)
        for q in surface:
            z_proj[q, q] = 0.0
        explicit = (np.eye(9) + coeffs.cx_rhs * x_hat) @ (
            np.eye(9) + coeffs.cy_rhs * y_hat(r_old))
        rhs = z_proj @ explicit @ (z_proj @ u0.ravel())
        a_mat = np.eye(9) + coeffs.cx_lhs * x_hat
        for q in surface:
            a_mat[q, :] = 0.0
            a_mat[q, q] = 1.0
        b_mat = np.eye(9) + coeffs.cy_lhs * y_hat(r_new)
        ref = (z_proj @ np.linalg.solve(
            b_mat, np.linalg.solve(a_mat, rhs))).reshape(3, 3)
        assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(np.abs(ref))

    def test_singular_solve_becomes_step_error(self):
        config = make_config(n_azimuth=4, n_depth=8, delta_z=1.0)
        grid, env, source, _ = config
        # hand-built coefficients making the depth diagonal exactly zero
        coeffs = StepCoefficients(delta=1j, cx_lhs=0.5 + 0.0j, cx_rhs=0.0j,
                                  cy_lhs=0.0j, cy_rhs=0.0j)
        k0 = 1.0  # s_z = 1, diag = 1 + 0.5 * (0 - 2) = 0
        slab = FieldSlab(np.ones((4, 8), dtype=complex), grid.r_start)
        state = MarchState(slab, 0, coeffs, env, grid, k0)
        with pytest.raises(StepError) as info:
            range_step(state)
        assert info.value.sweep == "depth"
        assert info.value.range_index == 1


class TestRunFrequency:
    def test_zero_steps_only_starter_sample(self):
        options = RunOptions(max_range=1.0, output_stride=1)
        config = make_config(options=options, r_start=5.0)
        result = run_frequency(config, 50.0)
        assert result.tl_field.shape[0] == 1
        assert result.ranges.tolist() == [config.grid.r_start]
        assert result.final_slab.range_m == config.grid.r_start

    def test_rerun_bitwise_identical(self):
        config = make_config(n_range=6, n_azimuth=8, n_depth=32)
        first = run_frequency(config, 50.0)
        second = run_frequency(config, 50.0)
        assert first.tl_field.tobytes() == second.tl_field.tobytes()
        assert first.final_slab.values.tobytes() == second.final_slab.values.tobytes()
        assert np.array_equal(first.ranges, second.ranges)

    def test_unknown_frequency_rejected(self):
        config = make_config(frequencies=(50.0,))
        with pytest.raises(DomainError, match="not one of the source"):
            run_frequency(config, 60.0)

    def test_output_stride_shapes(self):
        options = RunOptions(output_stride=4)
        config = make_config(n_range=10, options=options)
        result = run_frequency(config, 50.0)
        # starter sample plus steps 4 and 8
        assert result.tl_field.shape[0] == 3
        assert result.output_stride == 4

    def test_default_stride_caps_samples(self):
        assert default_output_stride(10) == 1
        assert default_output_stride(511) == 1
        assert default_output_stride(512) == 2
        assert default_output_stride(5000) == 10

    def test_max_range_truncates_marching(self):
        options = RunOptions(max_range=26.0, output_stride=1)
        config = make_config(n_range=10, delta_r=5.0, r_start=5.0,
                             options=options)
        result = run_frequency(config, 50.0)
        # steps to 10, 15, 20, 25 then stop (30 > 26)
        assert result.final_slab.range_m == 25.0
        assert result.tl_field.shape[0] == 5

    def test_no_blowup_with_absorber(self):
        config = make_config(n_range=100, n_azimuth=8, n_depth=64,
                             delta_z=4.0, source_depth=100.0)
        starter_max = math.sqrt(wavenumber(50.0, config.environment.c0))
        result = run_frequency(config, 50.0)
        assert np.max(np.abs(result.final_slab.values)) <= 10.0 * starter_max

    def test_tl_field_finite(self):
        config = make_config(n_range=5)
        result = run_frequency(config, 50.0)
        assert np.all(np.isfinite(result.tl_field))

    def test_state_range_invariant(self):
        config = make_config(n_range=4)
        state = make_state(config)
        for j in range(1, 5):
            state = range_step(state)
            assert state.slab.range_m == config.grid.range_at(j)
            assert state.range_index == j
