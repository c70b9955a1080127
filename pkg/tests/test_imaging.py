"""Backprojection imaging, peak extraction, and lobe measurement."""

import numpy as np
import pytest

from sarsep.geom import Aperture, LinearTrajectory, compose_velocity, make_frame
from sarsep.imaging import (
    ImageGrid,
    SarImage,
    half_power_width,
    image,
    image_compensated,
    image_points,
    peak_extract,
    profile,
)
from sarsep.scene import Radar, SceneSpec, Target, simulate

pytestmark = pytest.mark.filterwarnings(
    "ignore:.*far-field expansions degrade.*:RuntimeWarning",
    "ignore:.*outside the fast-time gate and contributed zero.*:RuntimeWarning",
)


def near_scene(targets, n=128):
    traj = LinearTrajectory(
        center=np.array([100.0, 0.0, 0.0]),
        tangent=np.array([0.0, 1.0, 0.0]),
        speed=70.0,
    )
    coerced = tuple(
        t if isinstance(t, Target) else Target(rho=np.asarray(t, dtype=float))
        for t in targets
    )
    return SceneSpec(
        traj=traj,
        rho_o=np.zeros(3),
        targets=coerced,
        aperture=Aperture(n=n, ds=0.015),
        radar=Radar(),
    )


@pytest.fixture(scope="module")
def near_trace():
    return simulate(near_scene([(2.0, 4.0, 0.0)]))


class TestImageGrid:
    def test_axes_are_centered_with_odd_counts(self):
        grid = ImageGrid(
            center=np.array([1.0, 2.0, 0.0]), extent_x=4.0, extent_y=2.0,
            spacing=0.5,
        )
        assert grid.shape == (5, 9)
        assert grid.x_axis[4] == 1.0 and grid.y_axis[2] == 2.0
        np.testing.assert_allclose(np.diff(grid.x_axis), 0.5)

    def test_points_vary_x_fastest(self):
        grid = ImageGrid(
            center=np.zeros(3), extent_x=2.0, extent_y=2.0, spacing=1.0
        )
        points = grid.points()
        assert points.shape == (9, 3)
        np.testing.assert_array_equal(points[0], [-1.0, -1.0, 0.0])
        np.testing.assert_array_equal(points[1], [0.0, -1.0, 0.0])
        np.testing.assert_array_equal(points[3], [-1.0, 0.0, 0.0])
        assert np.all(points[:, 2] == 0.0)

    def test_validation(self):
        with pytest.raises(ValueError, match="z = 0"):
            ImageGrid(
                center=np.array([0.0, 0.0, 1.0]), extent_x=1.0, extent_y=1.0,
                spacing=0.1,
            )
        with pytest.raises(ValueError, match="positive"):
            ImageGrid(center=np.zeros(3), extent_x=1.0, extent_y=1.0, spacing=0.0)


class TestImaging:
    def test_peak_sits_on_the_target(self, near_trace):
        grid = ImageGrid(
            center=np.zeros(3), extent_x=12.0, extent_y=12.0, spacing=0.25
        )
        img = image(near_trace, grid)
        (position, value), = peak_extract(img, k=1)
        np.testing.assert_allclose(position[:2], [2.0, 4.0], atol=0.25)
        assert value == pytest.approx(img.peak_value())

    def test_plain_image_equals_zero_velocity_compensation(self, near_trace):
        grid = ImageGrid(
            center=np.array([2.0, 4.0, 0.0]), extent_x=2.0, extent_y=2.0,
            spacing=0.5,
        )
        plain = image(near_trace, grid)
        comp = image_compensated(near_trace, grid, np.zeros(3))
        np.testing.assert_array_equal(plain.raw, comp.raw)
        np.testing.assert_array_equal(plain.envelope, comp.envelope)
        assert not plain.compensated
        assert plain.provenance == "uncompensated"

    def test_compensated_image_focuses_a_mover(self):
        scene0 = near_scene([])
        frame = make_frame(scene0.traj, scene0.rho_o)
        u_vec = compose_velocity(frame, 2.0, 0.0)
        mover = Target(rho=np.array([1.0, 2.0, 0.0]), velocity=tuple(u_vec))
        trace = simulate(near_scene([mover]))
        grid = ImageGrid(
            center=np.array([1.0, 2.0, 0.0]), extent_x=4.0, extent_y=4.0,
            spacing=0.25,
        )
        focused = image_compensated(trace, grid, u_vec)
        blurred = image(trace, grid)
        assert focused.peak_value() > 2.0 * blurred.peak_value()
        assert focused.compensated
        assert "2.000" in focused.provenance

    def test_image_points_is_linear(self):
        a = Target(rho=np.array([1.0, 0.0, 0.0]))
        b = Target(rho=np.array([-1.0, 2.0, 0.0]))
        both = simulate(near_scene([a, b], n=32))
        trace_a = simulate(near_scene([a], n=32), axis=both.axis)
        trace_b = simulate(near_scene([b], n=32), axis=both.axis)
        points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 2.0, 0.0]])
        mixed = trace_a.replace(data=1.5 * trace_a.data - 0.5 * trace_b.data)
        v_mixed, _ = image_points(mixed, points)
        v_a, _ = image_points(trace_a, points)
        v_b, _ = image_points(trace_b, points)
        np.testing.assert_allclose(
            v_mixed, 1.5 * v_a - 0.5 * v_b,
            atol=1e-9 * np.max(np.abs(v_a)),
        )

    def test_missed_samples_warn(self):
        trace = simulate(near_scene([(1.0, 0.0, 0.0)], n=8))
        grid = ImageGrid(
            center=np.zeros(3), extent_x=40.0, extent_y=2.0, spacing=1.0
        )
        with pytest.warns(RuntimeWarning, match="outside the fast-time gate"):
            img = image(trace, grid)
        assert img.missed > 0

    def test_velocity_must_be_in_plane(self, near_trace):
        grid = ImageGrid(
            center=np.zeros(3), extent_x=2.0, extent_y=2.0, spacing=0.5
        )
        with pytest.raises(ValueError, match="in-plane"):
            image_compensated(near_trace, grid, np.array([0.0, 0.0, 1.0]))

    def test_rejects_raw_traces(self, near_trace):
        with pytest.raises(ValueError, match="range-compressed"):
            image_points(near_trace.replace(tag="raw"), np.zeros((1, 3)))


class TestPeakExtract:
    @staticmethod
    def synthetic_image(envelope, spacing=1.0):
        envelope = np.asarray(envelope, dtype=float)
        ny, nx = envelope.shape
        grid = ImageGrid(
            center=np.zeros(3),
            extent_x=spacing * (nx - 1),
            extent_y=spacing * (ny - 1),
            spacing=spacing,
        )
        assert grid.shape == envelope.shape
        return SarImage(
            grid=grid, raw=envelope.copy(), envelope=envelope,
            u_vec=np.zeros(3), missed=0,
        )

    def test_finds_separated_peaks_strongest_first(self):
        env = np.zeros((11, 11))
        env[2, 3] = 5.0
        env[8, 8] = 9.0
        img = self.synthetic_image(env)
        peaks = peak_extract(img, k=2, min_separation=2.0)
        assert len(peaks) == 2
        assert peaks[0][1] == 9.0 and peaks[1][1] == 5.0
        np.testing.assert_allclose(peaks[0][0], [3.0, 3.0, 0.0])
        np.testing.assert_allclose(peaks[1][0], [-2.0, -3.0, 0.0])

    def test_suppression_radius_hides_nearby_peaks(self):
        env = np.zeros((11, 11))
        env[5, 5] = 9.0
        env[5, 7] = 5.0
        img = self.synthetic_image(env)
        assert len(peak_extract(img, k=2, min_separation=3.0)) == 1
        assert len(peak_extract(img, k=2, min_separation=1.5)) == 2

    def test_subpixel_refinement_beats_the_grid(self):
        x = np.arange(11.0)
        bump = np.exp(-0.5 * ((x - 5.3) / 1.2) ** 2)
        env = np.outer(np.exp(-0.5 * ((x - 5.0) / 1.2) ** 2), bump)
        img = self.synthetic_image(env)
        (position, _), = peak_extract(img, k=1)
        assert abs(position[0] - 0.3) < 0.05
        assert abs(position[1] - 0.0) < 0.05

    def test_k_must_be_positive(self):
        img = self.synthetic_image(np.ones((3, 3)))
        with pytest.raises(ValueError, match="at least 1"):
            peak_extract(img, k=0)


class TestProfiles:
    def test_profile_peaks_at_the_target(self, near_trace):
        offsets, values = profile(
            near_trace, np.array([2.0, 4.0, 0.0]),
            np.array([1.0, 0.0, 0.0]), 1.5, 0.05,
        )
        assert offsets[np.argmax(values)] == pytest.approx(0.0, abs=0.05)

    def test_half_power_width_on_a_known_gaussian(self):
        offsets = np.linspace(-4.0, 4.0, 801)
        sigma = 0.8
        envelope = np.exp(-0.5 * (offsets / sigma) ** 2)
        width = half_power_width(offsets, envelope)
        expected = 2.0 * sigma * np.sqrt(np.log(2.0))
        assert width == pytest.approx(expected, rel=1e-3)

    def test_truncated_lobe_raises(self):
        offsets = np.linspace(-0.1, 0.1, 21)
        envelope = np.exp(-0.5 * offsets**2)
        with pytest.raises(ValueError, match="truncated"):
            half_power_width(offsets, envelope)

    def test_range_width_matches_the_pulse_bandwidth(self):
        # Needs a short aperture: at wide angular apertures the carrier
        # interference narrows the response well below the bandwidth
        # limit 1.665 c / (2 B).
        trace = simulate(near_scene([(2.0, 4.0, 0.0)], n=16))
        offsets, values = profile(
            trace, np.array([2.0, 4.0, 0.0]),
            np.array([1.0, 0.0, 0.0]), 1.5, 0.01,
        )
        width = half_power_width(offsets, values)
        nominal = 1.665 * 299_792_458.0 / (2.0 * Radar().bandwidth)
        assert width == pytest.approx(nominal, rel=0.15)
