"""Pulse model, fast-time sampling, and range compression.

The transmitted pulse is a Gaussian-windowed carrier.  Fast-time grids
always hold an odd number of samples whose count factors into 3, 5, and
7 only, so the real FFT round-trips exactly (no Nyquist bin) and stays
fast.  Fractional-sample delays are applied as spectral phase ramps.

A trace matrix is tagged with its processing state.  Tag ``raw`` means
the fast-time axis measures absolute round-trip delay; all other tags
(``range-compressed``, ``transformed``, ``filtered``) mean the axis
measures differential delay relative to the reference point rho_o.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geom import Aperture, Trajectory, travel_time

#: Gate padding on each side of the delay extremes, in units of 1/bandwidth.
GATE_PAD_FACTOR = 6.0

#: Allowed TraceMatrix provenance tags.
TRACE_TAGS = ("raw", "range-compressed", "transformed", "filtered")

__all__ = [
    "GATE_PAD_FACTOR",
    "TRACE_TAGS",
    "pulse",
    "next_fast_odd",
    "FastTimeAxis",
    "make_gate",
    "TraceMatrix",
    "fractional_shift",
    "fast_time_shift",
    "range_compress",
    "range_expand",
    "crop_gate",
]


def pulse(t, nu0: float, bandwidth: float) -> np.ndarray:
    """Gaussian-windowed carrier cos(2 pi nu0 t) exp(-(B t)^2 / 2).

    The envelope falls to exp(-4.5) (about -39 dB) at |t| = 3/B, so the
    effective support is 6/B.
    """
    t = np.asarray(t, dtype=float)
    return np.cos(2.0 * np.pi * nu0 * t) * np.exp(-0.5 * (bandwidth * t) ** 2)


def next_fast_odd(n: int) -> int:
    """Smallest odd integer >= n whose prime factors are all in {3, 5, 7}."""
    if n < 1:
        return 1
    k = int(n)
    if k % 2 == 0:
        k += 1
    while True:
        r = k
        for p in (3, 5, 7):
            while r % p == 0:
                r //= p
        if r == 1:
            return k
        k += 2


@dataclass(frozen=True)
class FastTimeAxis:
    """Uniform fast-time grid t_i = t_center + (i - m/2) dt, i = 0 .. m.

    m is even, so the grid has an odd number of samples centered on
    t_center.
    """

    m: int
    dt: float
    t_center: float

    def __post_init__(self):
        if self.m % 2 != 0 or self.m < 2:
            raise ValueError("m must be an even integer >= 2")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def half_width(self) -> float:
        return 0.5 * self.m * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_center + (np.arange(self.m + 1) - self.m // 2) * self.dt


def make_gate(t_lo: float, t_hi: float, dt: float, pad: float) -> FastTimeAxis:
    """Fast-time axis covering [t_lo - pad, t_hi + pad].

    The sample count is rounded up to the next odd 7-smooth integer.
    """
    if t_hi < t_lo:
        raise ValueError("t_hi must not be less than t_lo")
    half = 0.5 * (t_hi - t_lo) + pad
    m_min = int(np.ceil(2.0 * half / dt))
    m_min += m_min % 2
    count = next_fast_odd(max(m_min + 1, 3))
    return FastTimeAxis(m=count - 1, dt=dt, t_center=0.5 * (t_lo + t_hi))


@dataclass(frozen=True)
class TraceMatrix:
    """Matrix of echo traces, one row per slow time.

    data[j, i] holds the echo at slow time s_j = (j - n/2) ds and fast
    time t_i on the gate.  ``tag`` records the processing state; see the
    module docstring for the fast-time coordinate convention.
    ``valid_rows`` is the half-open row range untouched by slow-time
    differencing; rows outside it are zero.
    """

    data: np.ndarray
    aperture: Aperture
    axis: FastTimeAxis
    traj: Trajectory
    rho_o: np.ndarray
    tag: str = "raw"
    valid_rows: tuple[int, int] = None  # type: ignore[assignment]
    meta: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rho_o", np.asarray(self.rho_o, dtype=float))
        if self.tag not in TRACE_TAGS:
            raise ValueError(f"unknown trace tag {self.tag!r}")
        if data.shape != (self.aperture.n + 1, self.axis.m + 1):
            raise ValueError(
                f"data shape {data.shape} does not match "
                f"(n+1, m+1) = {(self.aperture.n + 1, self.axis.m + 1)}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("trace data contains non-finite entries")
        if self.valid_rows is None:
            object.__setattr__(self, "valid_rows", (0, self.aperture.n + 1))
        start, stop = self.valid_rows
        if not (0 <= start < stop <= self.aperture.n + 1):
            raise ValueError(f"invalid valid_rows {self.valid_rows}")
        object.__setattr__(self, "valid_rows", (int(start), int(stop)))

    @property
    def n(self) -> int:
        return self.aperture.n

    @property
    def m(self) -> int:
        return self.axis.m

    @property
    def compressed(self) -> bool:
        return self.tag != "raw"

    @property
    def s_times(self) -> np.ndarray:
        return self.aperture.times

    @property
    def t_times(self) -> np.ndarray:
        return self.axis.times

    @property
    def valid_data(self) -> np.ndarray:
        start, stop = self.valid_rows
        return self.data[start:stop]

    def energy(self) -> float:
        """Sum of squared entries over the valid rows."""
        return float(np.sum(self.valid_data**2))

    def replace(self, **changes) -> "TraceMatrix":
        return dataclasses.replace(self, **changes)


def fractional_shift(
    rows: np.ndarray, delays, dt: float, warn_fraction: float = 0.25
) -> np.ndarray:
    """Advance each row by its delay: out_j(t) = rows_j(t + delay_j).

    Implemented as a phase ramp on the real FFT, which is exact for
    band-limited rows and circular at the gate edges.  Warns when any
    delay exceeds ``warn_fraction`` of the gate width, since wrapped
    energy would then corrupt the opposite edge.
    """
    rows = np.asarray(rows, dtype=float)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    count = rows.shape[-1]
    width = (count - 1) * dt
    worst = float(np.max(np.abs(delays)))
    if worst > warn_fraction * width:
        warnings.warn(
            f"fast-time shift of {worst:.3e} s exceeds {warn_fraction:.0%} of "
            f"the {width:.3e} s gate; circular wrap-around may corrupt rows",
            RuntimeWarning,
            stacklevel=2,
        )
    freqs = np.fft.rfftfreq(count, dt)
    spectra = np.fft.rfft(rows, axis=-1)
    if rows.ndim == 2:
        spectra *= np.exp(2j * np.pi * freqs[None, :] * delays[:, None])
    else:
        spectra *= np.exp(2j * np.pi * freqs * delays[..., None])
    return np.fft.irfft(spectra, n=count, axis=-1)


def fast_time_shift(trace: TraceMatrix, shifts) -> TraceMatrix:
    """Per-row fast-time advance of a trace matrix by ``shifts`` seconds.

    Row j of the output samples row j of the input at t + shifts[j].
    Exactly invertible by the negated shifts.
    """
    shifts = np.broadcast_to(
        np.asarray(shifts, dtype=float), (trace.aperture.n + 1,)
    )
    data = fractional_shift(trace.data, shifts, trace.axis.dt)
    start, stop = trace.valid_rows
    if (start, stop) != (0, trace.aperture.n + 1):
        data[:start] = 0.0
        data[stop:] = 0.0
    return trace.replace(data=data)


def range_compress(trace: TraceMatrix, new_center: float | None = None) -> TraceMatrix:
    """Re-center every trace on the reference point's travel time.

    Row j of the output samples the same echo as row j of the input, but
    against the differential delay t' = t - tau(s_j, rho_o).  By default
    the new gate center is chosen so the rows barely move inside the
    gate; pass ``new_center`` to pin the compressed gate center instead.
    """
    if trace.compressed:
        raise ValueError("trace is already range-compressed")
    tau_ref = travel_time(trace.traj, trace.s_times, trace.rho_o)
    if new_center is None:
        new_center = trace.axis.t_center - float(np.mean(tau_ref))
    delays = tau_ref + (new_center - trace.axis.t_center)
    data = fractional_shift(trace.data, delays, trace.axis.dt)
    axis = FastTimeAxis(m=trace.axis.m, dt=trace.axis.dt, t_center=new_center)
    return trace.replace(data=data, axis=axis, tag="range-compressed")


def range_expand(trace: TraceMatrix, new_center: float | None = None) -> TraceMatrix:
    """Undo range compression, restoring absolute-delay rows.

    The gate is widened (odd 7-smooth sample count again) before
    shifting so that content pushed outward by the per-row reference
    delays cannot wrap around the gate edges.
    """
    if not trace.compressed:
        raise ValueError("trace is not range-compressed")
    tau_ref = travel_time(trace.traj, trace.s_times, trace.rho_o)
    if new_center is None:
        new_center = trace.axis.t_center + float(np.mean(tau_ref))
    # Row content at differential t' sits at absolute t' + tau_ref, so the
    # residual shift after re-centering is small (geometry variation only).
    delays = new_center - (trace.axis.t_center + tau_ref)
    dt = trace.axis.dt
    spread = int(np.ceil(float(np.max(np.abs(delays))) / dt)) + 2
    old_count = trace.axis.m + 1
    new_count = next_fast_odd(old_count + 2 * spread)
    offset = (new_count - 1) // 2 - trace.axis.m // 2
    wide = np.zeros((trace.aperture.n + 1, new_count), dtype=float)
    wide[:, offset : offset + old_count] = trace.data
    data = fractional_shift(wide, delays, dt)
    axis = FastTimeAxis(m=new_count - 1, dt=dt, t_center=new_center)
    return trace.replace(data=data, axis=axis, tag="raw")


def crop_gate(trace: TraceMatrix, m_new: int, t_center: float | None = None) -> TraceMatrix:
    """Crop the fast-time gate to m_new + 1 samples about ``t_center``.

    The crop happens on grid points: t_center snaps to the nearest input
    sample.  Defaults to the current gate center.
    """
    if m_new % 2 != 0 or m_new > trace.axis.m:
        raise ValueError("m_new must be even and no larger than the current m")
    if t_center is None:
        t_center = trace.axis.t_center
    center_idx = int(round((t_center - trace.t_times[0]) / trace.axis.dt))
    lo = center_idx - m_new // 2
    hi = center_idx + m_new // 2
    if lo < 0 or hi > trace.axis.m:
        raise ValueError("crop window exceeds the current gate")
    axis = FastTimeAxis(
        m=m_new, dt=trace.axis.dt, t_center=float(trace.t_times[center_idx])
    )
    return trace.replace(data=trace.data[:, lo : hi + 1].copy(), axis=axis)
