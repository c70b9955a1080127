"""Pulse model, fast-time grids, shifts, and gate conversions."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sarsep.scene import simulate
from sarsep.signal import (
    GATE_PAD_FACTOR,
    FastTimeAxis,
    TraceMatrix,
    crop_gate,
    fast_time_shift,
    fractional_shift,
    make_gate,
    next_fast_odd,
    pulse,
    range_compress,
    range_expand,
)


class TestPulse:
    def test_matches_the_closed_form(self):
        t = np.linspace(-3e-9, 3e-9, 11)
        nu0, bw = 9.6e9, 622.0e6
        expected = np.cos(2 * np.pi * nu0 * t) * np.exp(-0.5 * (bw * t) ** 2)
        np.testing.assert_allclose(pulse(t, nu0, bw), expected, rtol=1e-15)

    def test_peaks_at_zero_and_is_even_enveloped(self):
        assert pulse(0.0, 9.6e9, 622e6) == 1.0
        t = np.array([1.7e-9])
        assert abs(pulse(t, 9.6e9, 622e6)[0]) <= np.exp(-0.5 * (622e6 * t[0]) ** 2)


class TestNextFastOdd:
    def test_brute_force_agreement(self):
        def smooth_odd(k):
            if k % 2 == 0:
                return False
            for p in (3, 5, 7):
                while k % p == 0:
                    k //= p
            return k == 1

        for n in range(1, 200):
            got = next_fast_odd(n)
            assert got >= n and smooth_odd(got)
            assert not any(smooth_odd(k) for k in range(n, got))

    def test_small_inputs(self):
        assert next_fast_odd(0) == 1
        assert next_fast_odd(1) == 1
        assert next_fast_odd(2) == 3


class TestFastTimeAxis:
    def test_times_are_centered(self):
        axis = FastTimeAxis(m=4, dt=0.5, t_center=10.0)
        np.testing.assert_allclose(axis.times, [9.0, 9.5, 10.0, 10.5, 11.0])
        assert axis.half_width == 1.0

    def test_rejects_odd_m(self):
        with pytest.raises(ValueError, match="even"):
            FastTimeAxis(m=5, dt=0.1, t_center=0.0)


class TestMakeGate:
    def test_covers_padded_interval_with_smooth_count(self):
        axis = make_gate(-1.0e-8, 3.0e-8, 2.0e-11, 5.0e-9)
        assert axis.times[0] <= -1.0e-8 - 5.0e-9
        assert axis.times[-1] >= 3.0e-8 + 5.0e-9
        count = axis.m + 1
        assert count == next_fast_odd(count)

    def test_rejects_inverted_interval(self):
        with pytest.raises(ValueError):
            make_gate(1.0, 0.0, 0.1, 0.0)


def small_trace(flat_scene_builder, targets=((0.0, 0.0, 0.0),), n=16):
    return simulate(flat_scene_builder(targets, n=n))


class TestTraceMatrix:
    def test_shape_validation(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        with pytest.raises(ValueError, match="shape"):
            trace.replace(data=trace.data[:, :-1])

    def test_tag_validation(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        with pytest.raises(ValueError, match="tag"):
            trace.replace(tag="mystery")

    def test_rejects_non_finite_data(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        bad = trace.data.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            trace.replace(data=bad)

    def test_valid_rows_default_and_validation(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        assert trace.valid_rows == (0, trace.n + 1)
        with pytest.raises(ValueError, match="valid_rows"):
            trace.replace(valid_rows=(5, 3))

    def test_energy_counts_valid_rows_only(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        trimmed = trace.replace(valid_rows=(1, trace.n))
        expected = float(np.sum(trace.data[1 : trace.n] ** 2))
        assert trimmed.energy() == pytest.approx(expected, rel=1e-12)


class TestFractionalShift:
    def test_integer_shift_matches_roll(self):
        rng = np.random.default_rng(7)
        dt = 1.0
        # Band-limit the row so circular shifting is exact sample motion.
        spectrum = np.zeros(33, dtype=complex)
        spectrum[1:8] = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        row = np.fft.irfft(spectrum, n=64)
        shifted = fractional_shift(row[None, :], [3.0 * dt], dt)[0]
        np.testing.assert_allclose(shifted, np.roll(row, -3), atol=1e-12)

    def test_round_trip_is_identity(self):
        # Odd length: no Nyquist bin, so fractional phase ramps invert exactly.
        rng = np.random.default_rng(11)
        rows = rng.standard_normal((4, 45))
        delays = rng.uniform(-2.0, 2.0, 4)
        back = fractional_shift(fractional_shift(rows, delays, 0.5), -delays, 0.5)
        np.testing.assert_allclose(back, rows, atol=1e-12)

    def test_warns_on_large_shifts(self):
        rows = np.zeros((1, 16))
        with pytest.warns(RuntimeWarning, match="wrap"):
            fractional_shift(rows, [10.0], 1.0)


class TestFastTimeShift:
    def test_inverse_round_trip(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        shifts = np.linspace(-1.0, 1.0, trace.n + 1) * trace.axis.dt * 3.0
        back = fast_time_shift(fast_time_shift(trace, shifts), -shifts)
        np.testing.assert_allclose(back.data, trace.data, atol=1e-10)

    def test_zeroed_rows_stay_zero(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        trimmed = trace.replace(valid_rows=(2, trace.n - 1))
        data = trimmed.data.copy()
        data[:2] = 0.0
        data[trace.n - 1 :] = 0.0
        trimmed = trimmed.replace(data=data)
        shifted = fast_time_shift(trimmed, np.full(trace.n + 1, trace.axis.dt))
        assert np.all(shifted.data[:2] == 0.0)
        assert np.all(shifted.data[trace.n - 1 :] == 0.0)


class TestGateConversions:
    def test_compress_requires_raw_and_expand_requires_compressed(
        self, flat_scene_builder
    ):
        trace = small_trace(flat_scene_builder)
        assert trace.tag == "range-compressed"
        with pytest.raises(ValueError, match="already"):
            range_compress(trace)
        raw = range_expand(trace)
        assert raw.tag == "raw"
        with pytest.raises(ValueError, match="not range-compressed"):
            range_expand(raw)

    def test_expand_then_compress_round_trip(self, flat_scene_builder):
        trace = small_trace(
            flat_scene_builder, targets=((0.0, 0.0, 0.0), (3.0, -2.0, 0.0))
        )
        raw = range_expand(trace)
        assert raw.m + 1 == next_fast_odd(raw.m + 1)
        back = range_compress(raw, new_center=trace.axis.t_center)
        # The round trip widens the gate; compare on the original columns.
        offset = int(round((trace.t_times[0] - back.t_times[0]) / back.axis.dt))
        np.testing.assert_allclose(
            back.data[:, offset : offset + trace.m + 1],
            trace.data,
            atol=1e-10 * np.abs(trace.data).max(),
        )

    def test_expanded_rows_sit_at_absolute_delay(self, flat_scene_builder):
        scene = flat_scene_builder([(0.0, 0.0, 0.0)], n=8)
        trace = simulate(scene)
        raw = range_expand(trace)
        from sarsep.geom import travel_time

        for j in (0, 4, 8):
            peak_t = raw.t_times[np.argmax(np.abs(raw.data[j]))]
            tau = float(travel_time(scene.traj, raw.s_times[j], np.zeros(3)))
            assert abs(peak_t - tau) <= raw.axis.dt


class TestCropGate:
    def test_crop_keeps_the_requested_window(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        cropped = crop_gate(trace, trace.m - 10)
        assert cropped.m == trace.m - 10
        center_idx = int(
            round((cropped.t_times[0] - trace.t_times[0]) / trace.axis.dt)
        )
        np.testing.assert_array_equal(
            cropped.data, trace.data[:, center_idx : center_idx + cropped.m + 1]
        )

    def test_rejects_bad_sizes(self, flat_scene_builder):
        trace = small_trace(flat_scene_builder)
        with pytest.raises(ValueError):
            crop_gate(trace, trace.m + 2)
        with pytest.raises(ValueError):
            crop_gate(trace, 7)


@given(center_step=st.integers(-3, 3))
def test_compress_round_trip_property(center_step):
    """Expand then re-compress restores the rows at any grid-aligned center."""
    from tests.conftest import flat_scene

    scene = flat_scene([(0.0, 0.0, 0.0)], n=8)
    trace = simulate(scene)
    raw = range_expand(trace)
    shifted_center = trace.axis.t_center + center_step * trace.axis.dt
    back = range_compress(raw, new_center=shifted_center)
    # Re-centering moves the sample grid, not the content, so the original
    # columns reappear at an integer offset inside the widened gate.
    offset = int(round((trace.t_times[0] - back.t_times[0]) / back.axis.dt))
    np.testing.assert_allclose(
        back.data[:, offset : offset + trace.m + 1],
        trace.data,
        atol=1e-9 * np.abs(trace.data).max(),
    )
