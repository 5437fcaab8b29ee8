import math

import numpy as np
import pytest

from phasedrop import (
    ScalarField,
    centroid_drift,
    extract_contour,
    hausdorff_to_circle,
    make_grid,
    radius_from_area,
)
from phasedrop.geometry import centroid_velocity

from conftest import tanh_disk


@pytest.fixture
def disk_phi():
    grid = make_grid([128, 128])
    return tanh_disk(grid, (0.5, 0.5), 0.3, 0.02)


class TestExtractContour:
    def test_disk_area(self, disk_phi):
        curve = extract_contour(disk_phi)
        assert curve.area == pytest.approx(math.pi * 0.09, rel=0.005)

    def test_disk_perimeter(self, disk_phi):
        curve = extract_contour(disk_phi)
        assert curve.perimeter == pytest.approx(2 * math.pi * 0.3, rel=0.01)

    def test_disk_single_loop_closed(self, disk_phi):
        curve = extract_contour(disk_phi)
        assert len(curve.polylines) == 1
        assert curve.polylines[0].shape[0] > 100

    def test_uniform_above(self):
        g = make_grid([32, 32])
        curve = extract_contour(ScalarField.full(g, 0.7))
        assert curve.polylines == []
        assert curve.area == pytest.approx(1.0)

    def test_uniform_below(self):
        g = make_grid([32, 32])
        curve = extract_contour(ScalarField.full(g, 0.3))
        assert curve.polylines == []
        assert curve.area == 0.0

    def test_3d_rejected(self):
        g = make_grid([8, 8, 8])
        with pytest.raises(ValueError, match="2D"):
            extract_contour(ScalarField.full(g, 0.7))

    def test_area_matches_cell_count(self, disk_phi):
        curve = extract_contour(disk_phi)
        grid = disk_phi.grid
        cell_area = float(np.sum(disk_phi.values > 0.5)) * grid.cell_volume
        assert abs(curve.area - cell_area) <= 2 * max(grid.spacing) * curve.perimeter

    def test_complement_has_same_geometry(self, disk_phi):
        curve = extract_contour(disk_phi)
        flipped = extract_contour(
            ScalarField(disk_phi.grid, 1.0 - disk_phi.values)
        )
        assert flipped.area == pytest.approx(1.0 - curve.area, abs=1e-12)
        assert flipped.perimeter == pytest.approx(curve.perimeter, abs=1e-9)
        ours = sorted(map(tuple, np.round(curve.vertices(), 9)))
        theirs = sorted(map(tuple, np.round(flipped.vertices(), 9)))
        assert ours == theirs

        # orientation reversed: the loop around the (now excluded) droplet
        # runs clockwise for the complement field
        def signed_area(loop):
            x, y = loop[:, 0] - 0.5, loop[:, 1] - 0.5
            return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

        assert signed_area(curve.polylines[0]) > 0
        assert signed_area(flipped.polylines[0]) < 0

    def test_orientation_counterclockwise_around_droplet(self, disk_phi):
        loop = extract_contour(disk_phi).polylines[0]
        x, y = loop[:, 0] - 0.5, loop[:, 1] - 0.5
        signed_area = 0.5 * float(
            np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        )
        assert signed_area > 0  # droplet kept on the left

    def test_translation_equivariance(self, disk_phi):
        grid = disk_phi.grid
        h = grid.spacing[0]
        shifted = ScalarField(grid, np.roll(disk_phi.values, 1, axis=0))
        base = extract_contour(disk_phi)
        moved = extract_contour(shifted)
        assert moved.area == pytest.approx(base.area, abs=1e-14)
        vs_base = np.sort(base.vertices()[:, 0])
        vs_moved = np.sort((moved.vertices()[:, 0] - h) % 1.0)
        assert np.allclose(np.sort(vs_moved), vs_base, atol=1e-12)

    def test_wrapping_disk(self):
        # droplet across the periodic seam keeps its area and perimeter
        grid = make_grid([128, 128])
        centered = extract_contour(tanh_disk(grid, (0.5, 0.5), 0.3, 0.02))
        seam = extract_contour(tanh_disk(grid, (0.0, 0.5), 0.3, 0.02))
        assert seam.area == pytest.approx(centered.area, rel=1e-3)
        assert seam.perimeter == pytest.approx(centered.perimeter, rel=1e-3)
        assert seam.centroid[0] == pytest.approx(0.0, abs=1e-3) or (
            seam.centroid[0] == pytest.approx(1.0, abs=1e-3)
        )

    def test_stripe_band(self):
        grid = make_grid([256, 32])
        x = grid.cell_centers()[0]
        signed = 0.25 - np.abs((x - 0.5 + 0.5) % 1.0 - 0.5)
        vals = 0.5 * (1 + np.tanh(signed / (2 * math.sqrt(2) * 0.02)))
        curve = extract_contour(
            ScalarField(grid, np.broadcast_to(vals, grid.dims).copy())
        )
        assert curve.area == pytest.approx(0.5, rel=0.01)
        assert curve.perimeter == pytest.approx(2.0, rel=0.01)
        assert len(curve.polylines) == 2  # two wrapping vertical lines


class TestRadiusFromArea:
    def test_inverse_formula(self):
        grid = make_grid([128, 128])
        curve = extract_contour(tanh_disk(grid, (0.5, 0.5), 0.3, 0.02))
        assert radius_from_area(curve) == pytest.approx(0.3, rel=0.005)

    def test_empty(self):
        g = make_grid([32, 32])
        assert radius_from_area(extract_contour(ScalarField.full(g, 0.3))) == 0.0

    def test_full_coverage(self):
        g = make_grid([32, 32])
        curve = extract_contour(ScalarField.full(g, 0.7))
        assert radius_from_area(curve) == pytest.approx(math.sqrt(1 / math.pi))


class TestHausdorffToCircle:
    def test_exact_circle_vertices(self):
        theta = np.linspace(0, 2 * np.pi, 400, endpoint=False)
        loop = np.stack(
            [0.5 + 0.3 * np.cos(theta), 0.5 + 0.3 * np.sin(theta)], axis=1
        )
        from phasedrop.geometry import InterfaceCurve

        curve = InterfaceCurve(polylines=[loop], lengths=(1.0, 1.0))
        assert hausdorff_to_circle(curve, (0.5, 0.5), 0.3) <= 1e-9

    def test_concentric_circles(self):
        theta = np.linspace(0, 2 * np.pi, 400, endpoint=False)
        loop = np.stack(
            [0.5 + 0.3 * np.cos(theta), 0.5 + 0.3 * np.sin(theta)], axis=1
        )
        from phasedrop.geometry import InterfaceCurve

        curve = InterfaceCurve(polylines=[loop], lengths=(1.0, 1.0))
        assert hausdorff_to_circle(curve, (0.5, 0.5), 0.25) == pytest.approx(0.05)

    def test_extracted_disk_close_to_generator(self):
        grid = make_grid([128, 128])
        eps = 0.02
        curve = extract_contour(tanh_disk(grid, (0.5, 0.5), 0.3, eps))
        d = hausdorff_to_circle(curve, (0.5, 0.5), 0.3)
        assert d <= max(grid.spacing[0], 0.5 * eps)

    def test_empty_curve_rejected(self):
        g = make_grid([32, 32])
        curve = extract_contour(ScalarField.full(g, 0.3))
        with pytest.raises(ValueError):
            hausdorff_to_circle(curve, (0.5, 0.5), 0.1)

    def test_missing_arc_penalized(self):
        # half-circle: the uncovered sector contributes its sagitta
        theta = np.linspace(0, np.pi, 200)
        loop = np.stack(
            [0.5 + 0.3 * np.cos(theta), 0.5 + 0.3 * np.sin(theta)], axis=1
        )
        from phasedrop.geometry import InterfaceCurve

        curve = InterfaceCurve(polylines=[loop], lengths=(1.0, 1.0))
        d = hausdorff_to_circle(curve, (0.5, 0.5), 0.3)
        assert d >= 0.3 * (1 - math.cos(math.pi / 2)) - 1e-9

    def test_torus_metric_across_seam(self):
        grid = make_grid([128, 128])
        curve = extract_contour(tanh_disk(grid, (0.0, 0.5), 0.3, 0.02))
        d = hausdorff_to_circle(curve, (0.0, 0.5), 0.3)
        assert d <= 0.01


class TestCentroidDrift:
    def test_stationary(self):
        grid = make_grid([64, 64])
        curves = [
            extract_contour(tanh_disk(grid, (0.5, 0.5), 0.3, 0.03))
            for _ in range(3)
        ]
        drift = centroid_drift(curves)
        assert np.allclose(drift, 0.0, atol=1e-14)

    def test_shift_by_one_cell(self):
        grid = make_grid([64, 64])
        phi = tanh_disk(grid, (0.5, 0.5), 0.3, 0.03)
        h = grid.spacing[0]
        curves = [
            extract_contour(ScalarField(grid, np.roll(phi.values, k, axis=0)))
            for k in range(4)
        ]
        drift = centroid_drift(curves)
        assert np.allclose(drift[:, 0], h, atol=1e-9)
        assert np.allclose(drift[:, 1], 0.0, atol=1e-9)

    def test_continuous_across_seam(self):
        grid = make_grid([64, 64])
        phi = tanh_disk(grid, (1.0 - 1.5 / 64, 0.5), 0.2, 0.03)
        curves = [
            extract_contour(ScalarField(grid, np.roll(phi.values, k, axis=0)))
            for k in range(4)
        ]
        drift = centroid_drift(curves)
        h = grid.spacing[0]
        assert np.all(np.abs(drift[:, 0] - h) < 1e-6)  # no jumps of order 1

    def test_needs_two_samples(self):
        grid = make_grid([64, 64])
        c = extract_contour(tanh_disk(grid, (0.5, 0.5), 0.3, 0.03))
        with pytest.raises(ValueError):
            centroid_drift([c])

    def test_velocity_series(self):
        grid = make_grid([64, 64])
        phi = tanh_disk(grid, (0.5, 0.5), 0.3, 0.03)
        h = grid.spacing[0]
        curves = [
            extract_contour(ScalarField(grid, np.roll(phi.values, k, axis=0)))
            for k in range(3)
        ]
        v = centroid_velocity(curves, [0.0, 0.5, 1.0])
        assert np.allclose(v[:, 0], h / 0.5, atol=1e-9)
        with pytest.raises(ValueError, match="one instant"):
            centroid_velocity(curves, [0.0, 0.5])
