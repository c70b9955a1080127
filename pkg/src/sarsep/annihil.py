"""Travel-time-transform annihilation filters.

The forward transform straightens the trace of a hypothesized target
track rho_e + s u_e so it no longer depends on slow time; a slow-time
difference then removes it, and the inverse transform returns to the
original coordinates.  Composing stages removes several targets one by
one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import (
    C_LIGHT,
    Aperture,
    Trajectory,
    delta_tau_moving,
    make_frame,
)
from .scene import Target
from .signal import TraceMatrix, fast_time_shift

__all__ = [
    "AnnihilationStage",
    "AnnihilationPlan",
    "AnnihilationFactorReport",
    "tt_forward",
    "tt_inverse",
    "slow_diff",
    "annihilate",
    "leading_factor",
    "predict_annihilation_factor",
    "energy_ratio_db",
]

_ZERO3 = np.zeros(3)


def _require_compressed(trace: TraceMatrix):
    if not trace.compressed:
        raise ValueError(
            "operation requires a range-compressed trace (differential delays)"
        )


def _track_delays(trace: TraceMatrix, rho_e, u_vec) -> np.ndarray:
    u_vec = _ZERO3 if u_vec is None else np.asarray(u_vec, dtype=float)
    return delta_tau_moving(trace.traj, trace.s_times, rho_e, u_vec, trace.rho_o)


def tt_forward(trace: TraceMatrix, rho_e, u_vec=None) -> TraceMatrix:
    """Straighten the trace of the track rho_e + s u_vec.

    Row j is advanced by the track's differential delay at s_j, so an
    echo that follows the track exactly becomes independent of slow
    time.  With rho_e = rho_o and zero velocity this is the identity.
    """
    _require_compressed(trace)
    out = fast_time_shift(trace, _track_delays(trace, rho_e, u_vec))
    return out.replace(tag="transformed")


def tt_inverse(trace: TraceMatrix, rho_e, u_vec=None) -> TraceMatrix:
    """Exact inverse of ``tt_forward`` for the same track."""
    _require_compressed(trace)
    out = fast_time_shift(trace, -_track_delays(trace, rho_e, u_vec))
    return out.replace(tag="range-compressed")


def slow_diff(trace: TraceMatrix, order: int = 1) -> TraceMatrix:
    """Slow-time difference along rows.

    Order 1 is the forward difference (x[j+1] - x[j]) / ds; order 2 the
    central second difference (x[j+1] - 2 x[j] + x[j-1]) / ds^2.  Rows
    that lose their neighbors are zeroed and dropped from
    ``valid_rows``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    start, stop = trace.valid_rows
    if stop - start <= order:
        raise ValueError(
            f"need more than {order} valid rows, have {stop - start}"
        )
    ds = trace.aperture.ds
    d = trace.data
    out = np.zeros_like(d)
    if order == 1:
        out[start : stop - 1] = (d[start + 1 : stop] - d[start : stop - 1]) / ds
        new_valid = (start, stop - 1)
    else:
        out[start + 1 : stop - 1] = (
            d[start + 2 : stop] - 2.0 * d[start + 1 : stop - 1] + d[start : stop - 2]
        ) / ds**2
        new_valid = (start + 1, stop - 1)
    return trace.replace(data=out, valid_rows=new_valid, tag="transformed")


@dataclass(frozen=True)
class AnnihilationStage:
    """One filter stage: straighten at (rho_e, u_vec), difference, undo."""

    rho_e: np.ndarray
    u_vec: np.ndarray = (0.0, 0.0, 0.0)
    order: int = 1

    def __post_init__(self):
        rho_e = np.asarray(self.rho_e, dtype=float)
        u_vec = np.asarray(self.u_vec, dtype=float)
        object.__setattr__(self, "rho_e", rho_e)
        object.__setattr__(self, "u_vec", u_vec)
        if rho_e.shape != (3,) or u_vec.shape != (3,):
            raise ValueError("rho_e and u_vec must be 3-vectors")
        if u_vec[2] != 0.0:
            raise ValueError("stage velocity must be in-plane")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")

    def to_dict(self) -> dict:
        return {
            "rho_e_meters": list(map(float, self.rho_e)),
            "u_vec_meters_per_second": list(map(float, self.u_vec)),
            "order": self.order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnihilationStage":
        return cls(
            rho_e=d["rho_e_meters"],
            u_vec=d.get("u_vec_meters_per_second", (0.0, 0.0, 0.0)),
            order=d.get("order", 1),
        )


@dataclass(frozen=True)
class AnnihilationPlan:
    """Ordered list of annihilation stages."""

    stages: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    def to_dict(self) -> dict:
        return {"stages": [s.to_dict() for s in self.stages]}

    @classmethod
    def from_dict(cls, d: dict) -> "AnnihilationPlan":
        return cls(stages=[AnnihilationStage.from_dict(s) for s in d["stages"]])

    @classmethod
    def for_points(cls, points, order: int = 1) -> "AnnihilationPlan":
        return cls(
            stages=[AnnihilationStage(rho_e=p, order=order) for p in points]
        )


def annihilate(trace: TraceMatrix, plan: AnnihilationPlan) -> TraceMatrix:
    """Apply each plan stage in order: straighten, difference, undo."""
    if not plan.stages:
        raise ValueError("annihilation plan has no stages")
    out = trace
    for k, stage in enumerate(plan.stages):
        try:
            out = tt_forward(out, stage.rho_e, stage.u_vec)
            out = slow_diff(out, stage.order)
            out = tt_inverse(out, stage.rho_e, stage.u_vec)
        except ValueError as exc:
            raise ValueError(f"annihilation stage {k} failed: {exc}") from exc
    return out


def leading_factor(traj: Trajectory, rho_e, target: Target, s) -> np.ndarray:
    """Leading-order slope of the straightened trace of ``target``.

    Approximates d/ds [tau(s, rho(s)) - tau(s, rho_e)] by

        (2/c) [-u.m_e + (V t - u) . P_e (rho_e - rho) / L
               - s (2 V t - u) . P_e u / L]

    with m_e, P_e, and L taken at rho_e, t the flight tangent at s = 0,
    and u the target velocity.  Zero for a stationary target at rho_e.
    """
    s = np.asarray(s, dtype=float)
    frame = make_frame(traj, rho_e)
    u_vec = target.velocity
    drho = frame.projector @ (np.asarray(rho_e, dtype=float) - target.rho)
    vt = frame.speed * frame.t_hat
    const = -float(u_vec @ frame.m_hat) + float((vt - u_vec) @ drho) / frame.range_L
    slope = float((2.0 * vt - u_vec) @ (frame.projector @ u_vec)) / frame.range_L
    return (2.0 / C_LIGHT) * (const - s * slope)


@dataclass(frozen=True)
class AnnihilationFactorReport:
    """Finite-difference vs. leading-order annihilation factor.

    ``fd`` samples the exact derivative of the straightened delay by
    central differences on the interior slow-time grid; ``predicted``
    samples the leading-order formula there.  ``remainder_bound`` is the
    size of the neglected terms, a(|u_perp|/(cL) + V|drho|/(cL^2)).
    """

    s: np.ndarray
    fd: np.ndarray
    predicted: np.ndarray
    remainder_bound: float
    measured_ratio_db: float | None = None

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.fd - self.predicted)))


def predict_annihilation_factor(
    traj: Trajectory, aperture: Aperture, target: Target, rho_e
) -> AnnihilationFactorReport:
    """Compare the exact straightened-trace slope with its leading order."""
    s = aperture.times
    rho_e = np.asarray(rho_e, dtype=float)
    f = delta_tau_moving(traj, s, target.rho, target.velocity, rho_e)
    fd = (f[2:] - f[:-2]) / (2.0 * aperture.ds)
    s_mid = s[1:-1]
    predicted = leading_factor(traj, rho_e, target, s_mid)
    frame = make_frame(traj, rho_e)
    length = traj.speed * aperture.n * aperture.ds
    u_perp = float(frame.t_hat @ (frame.projector @ target.velocity))
    drho = float(np.linalg.norm(target.rho - rho_e))
    remainder = length * (
        abs(u_perp) / (C_LIGHT * frame.range_L)
        + frame.speed * drho / (C_LIGHT * frame.range_L**2)
    )
    return AnnihilationFactorReport(
        s=s_mid, fd=fd, predicted=predicted, remainder_bound=remainder
    )


def energy_ratio_db(before: TraceMatrix, after: TraceMatrix) -> float:
    """Residual energy of ``after`` relative to ``before``, in dB.

    Both energies are taken over ``after``'s valid rows so boundary rows
    dropped by differencing do not skew the ratio.
    """
    start, stop = after.valid_rows
    e_before = float(np.sum(before.data[start:stop] ** 2))
    e_after = float(np.sum(after.data[start:stop] ** 2))
    if e_before == 0.0:
        raise ValueError("reference trace has zero energy on the valid rows")
    if e_after == 0.0:
        return -np.inf
    return 10.0 * np.log10(e_after / e_before)
