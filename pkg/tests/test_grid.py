import math

import numpy as np
import pytest

from phasedrop import (
    NumericalFailure,
    ScalarField,
    grad_sq,
    helmholtz_solve,
    integrate,
    laplacian,
    make_grid,
)


def sin_field(grid, k=1):
    return ScalarField.from_function(
        grid, lambda x, y: np.sin(2 * np.pi * k * x) + 0.0 * y
    )


class TestMakeGrid:
    def test_spacing(self):
        g = make_grid([64, 64], [1.0, 1.0])
        assert g.spacing == (0.015625, 0.015625)

    def test_cell_count_3d(self):
        g = make_grid([8, 8, 8], [1.0, 1.0, 1.0])
        assert g.n_cells == 512

    def test_1d_rejected(self):
        with pytest.raises(ValueError, match="2 or 3 axes"):
            make_grid([64], [1.0])

    def test_4d_rejected(self):
        with pytest.raises(ValueError):
            make_grid([8, 8, 8, 8])

    def test_too_coarse_rejected(self):
        with pytest.raises(ValueError, match=">= 8"):
            make_grid([4, 64])

    def test_nonpositive_length_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            make_grid([16, 16], [1.0, 0.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            make_grid([16, 16], [1.0])

    def test_default_unit_lengths(self):
        assert make_grid([16, 32]).lengths == (1.0, 1.0)

    def test_anisotropic_spacing(self):
        g = make_grid([256, 32], [1.0, 1.0])
        assert g.spacing == (1.0 / 256, 1.0 / 32)


class TestScalarField:
    def test_shape_mismatch(self):
        g = make_grid([16, 16])
        with pytest.raises(ValueError, match="shape"):
            ScalarField(g, np.zeros((16, 8)))

    def test_nonfinite_rejected(self):
        g = make_grid([16, 16])
        vals = np.zeros((16, 16))
        vals[3, 4] = np.nan
        with pytest.raises(NumericalFailure):
            ScalarField(g, vals)


class TestLaplacian:
    def test_constant_is_zero(self, unit_grid_64):
        f = ScalarField.full(unit_grid_64, 3.7)
        assert np.all(laplacian(f).values == 0.0)

    def test_sine_matches_second_derivative(self, unit_grid_64):
        # central stencil error bound (2 pi h)^2 / 12 for this eigenfunction
        f = sin_field(unit_grid_64)
        lap = laplacian(f).values
        exact = -4 * np.pi ** 2 * f.values
        bound = (2 * np.pi / 64) ** 2 / 12
        assert np.max(np.abs(lap - exact)) <= bound * 4 * np.pi ** 2

    def test_one_hot_stencil(self):
        g = make_grid([16, 16])
        vals = np.zeros((16, 16))
        vals[5, 7] = 1.0
        lap = laplacian(ScalarField(g, vals)).values
        inv_h2 = 16.0 ** 2
        assert lap[5, 7] == pytest.approx(-4 * inv_h2)
        for i, j in [(4, 7), (6, 7), (5, 6), (5, 8)]:
            assert lap[i, j] == pytest.approx(inv_h2)
        assert np.count_nonzero(lap) == 5

    def test_integral_vanishes(self, unit_grid_64):
        rng = np.random.default_rng(3)
        f = ScalarField(unit_grid_64, rng.random((64, 64)))
        total = integrate(laplacian(f))
        assert abs(total) <= 1e-10 * np.max(np.abs(f.values))

    def test_translation_equivariance(self, unit_grid_64):
        rng = np.random.default_rng(4)
        vals = rng.random((64, 64))
        shifted_then_op = laplacian(
            ScalarField(unit_grid_64, np.roll(vals, 1, axis=0))
        ).values
        op_then_shifted = np.roll(
            laplacian(ScalarField(unit_grid_64, vals)).values, 1, axis=0
        )
        assert np.array_equal(shifted_then_op, op_then_shifted)

    def test_second_order_convergence(self):
        errors = []
        for n in (64, 128):
            g = make_grid([n, n])
            f = sin_field(g)
            err = np.max(np.abs(laplacian(f).values + 4 * np.pi ** 2 * f.values))
            errors.append(err)
        ratio = errors[0] / errors[1]
        assert 3.5 <= ratio <= 4.5


class TestGradSq:
    def test_constant_is_zero(self, unit_grid_64):
        f = ScalarField.full(unit_grid_64, -2.0)
        assert np.all(grad_sq(f).values == 0.0)

    def test_sine_gradient(self):
        g = make_grid([128, 128])
        f = sin_field(g)
        out = grad_sq(f).values
        exact = 4 * np.pi ** 2 * np.cos(
            2 * np.pi * (np.arange(128) + 0.5) / 128
        ) ** 2
        assert np.max(np.abs(out - exact[:, None])) <= 0.01 * 4 * np.pi ** 2

    def test_nonnegative(self, unit_grid_64):
        rng = np.random.default_rng(5)
        f = ScalarField(unit_grid_64, rng.standard_normal((64, 64)))
        assert grad_sq(f).values.min() >= 0.0

    def test_translation_equivariance(self, unit_grid_64):
        rng = np.random.default_rng(9)
        vals = rng.random((64, 64))
        a = grad_sq(ScalarField(unit_grid_64, np.roll(vals, 1, axis=1))).values
        b = np.roll(grad_sq(ScalarField(unit_grid_64, vals)).values, 1, axis=1)
        assert np.array_equal(a, b)


class TestIntegrate:
    def test_unit_constant(self, unit_grid_64):
        assert integrate(ScalarField.full(unit_grid_64, 1.0)) == pytest.approx(
            1.0, abs=1e-14
        )

    def test_sine_is_zero(self, unit_grid_64):
        assert integrate(sin_field(unit_grid_64)) == pytest.approx(0.0, abs=1e-13)

    def test_one_sixth(self, unit_grid_64):
        assert integrate(ScalarField.full(unit_grid_64, 1 / 6)) == pytest.approx(
            1 / 6, abs=1e-14
        )

    def test_bit_identical_repeats(self, unit_grid_64):
        rng = np.random.default_rng(6)
        f = ScalarField(unit_grid_64, rng.random((64, 64)))
        values = {integrate(f) for _ in range(20)}
        assert len(values) == 1


class TestHelmholtz:
    def test_constant_mode(self, unit_grid_64):
        f = ScalarField.full(unit_grid_64, 2.5)
        w = helmholtz_solve(f, a=2.0, b=3.0)
        assert np.allclose(w.values, 0.5, atol=1e-12)

    def test_sine_symbol(self, unit_grid_64):
        f = sin_field(unit_grid_64)
        w = helmholtz_solve(f, a=1.0, b=0.0)
        expected = f.values / (1 + 4 * np.pi ** 2)
        rel = np.max(np.abs(w.values - expected)) / np.max(np.abs(expected))
        assert rel <= 1e-3  # discrete symbol differs at O(h^2)

    def test_zero_rhs(self, unit_grid_64):
        w = helmholtz_solve(ScalarField.full(unit_grid_64, 0.0), a=1.0, b=1.0)
        assert np.all(w.values == 0.0)

    def test_residual_contract(self, unit_grid_64):
        rng = np.random.default_rng(7)
        f = ScalarField(unit_grid_64, rng.standard_normal((64, 64)))
        w = helmholtz_solve(f, a=0.37, b=1.2)
        from phasedrop.grid import laplacian_values

        residual = (0.37 + 1.2) * w.values - laplacian_values(
            w.values, unit_grid_64.spacing
        ) - f.values
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(f.values)

    def test_invalid_coefficients(self, unit_grid_64):
        f = ScalarField.full(unit_grid_64, 1.0)
        with pytest.raises(ValueError):
            helmholtz_solve(f, a=0.0, b=1.0)
        with pytest.raises(ValueError):
            helmholtz_solve(f, a=1.0, b=-0.5)

    def test_3d_solve(self):
        g = make_grid([8, 8, 8])
        rng = np.random.default_rng(8)
        f = ScalarField(g, rng.standard_normal((8, 8, 8)))
        w = helmholtz_solve(f, a=1.0, b=0.0)
        from phasedrop.grid import laplacian_values

        residual = w.values - laplacian_values(w.values, g.spacing) - f.values
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(f.values)
