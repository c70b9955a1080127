"""Numerical study of trace-covariance rank.

For point targets whose differential delays are nearly affine in slow
time, delta_tau_j(s) = beta_j + alpha_j s, the slow-time covariance of
the traces is a sum over target pairs of a smooth kernel in
alpha_j s_a - alpha_k s_b.  Same-target pairs give a Toeplitz matrix;
a pair with alpha_2 / alpha_1 = -g for a positive integer g adds a
g-slanted Hankel part and its transpose.  The Szego distribution of
the Toeplitz symbol predicts the numeric rank fraction, which these
routines compare against ranks computed from the covariance itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geom import (
    C_LIGHT,
    Aperture,
    LinearTrajectory,
    Trajectory,
    make_frame,
    travel_time,
)
from .scene import Radar, SceneSpec, Target, simulate
from .signal import TraceMatrix

__all__ = [
    "RankReport",
    "default_rank_frame",
    "alpha_of",
    "beta_of",
    "covariance",
    "theoretical_covariance",
    "toeplitz_sequence",
    "hankel_sequence",
    "build_structured",
    "symbol",
    "numeric_rank",
    "szego_fraction",
    "szego_saturation_speed",
    "bandwidth_beta_product",
    "analyze",
    "rank_study",
]


def default_rank_frame() -> tuple[LinearTrajectory, np.ndarray, Aperture]:
    """Flat broadside geometry used by the rank studies.

    A straight track passing (1e4, 0, 0) in the y direction at 70 m/s,
    imaged toward the origin, with the standard 117-pulse aperture.
    The look direction is horizontal, so delay curvature common to the
    target and the reference cancels and the affine delay model is
    accurate over the full aperture.
    """
    traj = LinearTrajectory(
        center=np.array([1.0e4, 0.0, 0.0]),
        tangent=np.array([0.0, 1.0, 0.0]),
        speed=70.0,
    )
    return traj, np.zeros(3), Aperture(n=116, ds=0.015)


def alpha_of(traj: Trajectory, rho_o, target: Target, linearize: bool = False) -> float:
    """Slow-time slope of the target's differential delay at s = 0.

    The exact form differentiates 2(|r(s) - rho - s u| - |r(s) -
    rho_o|)/c.  With ``linearize`` the first-order frame expansion is
    used instead: (2/c)(-u.m - V t.P (rho-rho_o)/L + u.P (rho-rho_o)/L),
    whose target ratios are exact rationals (used by the structured
    Toeplitz-plus-Hankel construction).
    """
    rho_o = np.asarray(rho_o, dtype=float)
    frame = make_frame(traj, rho_o)
    u_vec = target.velocity
    if linearize:
        delta = target.rho - rho_o
        proj = frame.projector @ delta
        return float(
            (2.0 / C_LIGHT)
            * (
                -u_vec @ frame.m_hat
                - frame.speed * (frame.t_hat @ proj) / frame.range_L
                + (u_vec @ proj) / frame.range_L
            )
        )
    look = traj.position(0.0) - target.rho
    m_rho = look / np.linalg.norm(look)
    vel = frame.speed * frame.t_hat
    return float((2.0 / C_LIGHT) * ((vel - u_vec) @ m_rho - vel @ frame.m_hat))


def beta_of(traj: Trajectory, rho_o, target: Target) -> float:
    """Differential delay of the target at s = 0 (the model intercept).

    Equals (2/c)(|r(0) - rho| - L); to second order in the offset this
    is (2/c)(-m.(rho-rho_o) + |P (rho-rho_o)|^2 / (2 L)).
    """
    return float(
        travel_time(traj, 0.0, target.rho) - travel_time(traj, 0.0, np.asarray(rho_o))
    )


def covariance(trace: TraceMatrix) -> np.ndarray:
    """Empirical slow-time covariance: the Gram matrix of the rows."""
    rows = trace.valid_data
    return rows @ rows.T


def _kernel_coef(radar: Radar) -> float:
    return np.sqrt(np.pi) / (2.0 * radar.bandwidth * radar.dt)


def theoretical_covariance(
    traj: Trajectory,
    rho_o,
    aperture: Aperture,
    radar: Radar,
    targets,
    linearize: bool = False,
) -> np.ndarray:
    """Model covariance from affine delays and the pulse self-kernel.

    Entry (a, b) sums over ordered target pairs (j, k) the kernel
    a_j a_k coef cos(w0 psi) exp(-B^2 psi^2 / 4) with
    psi = alpha_j s_a - alpha_k s_b + (beta_j - beta_k), the delay
    difference between the two echoes.
    """
    s = aperture.times
    alphas = [alpha_of(traj, rho_o, t, linearize) for t in targets]
    betas = [beta_of(traj, rho_o, t) for t in targets]
    amps = [t.amplitude for t in targets]
    coef = _kernel_coef(radar)
    out = np.zeros((s.size, s.size))
    for j, (alpha_j, beta_j, amp_j) in enumerate(zip(alphas, betas, amps)):
        for k, (alpha_k, beta_k, amp_k) in enumerate(zip(alphas, betas, amps)):
            psi = alpha_j * s[:, None] - alpha_k * s[None, :] + (beta_j - beta_k)
            out += (
                amp_j
                * amp_k
                * coef
                * np.cos(radar.omega0 * psi)
                * np.exp(-0.25 * (radar.bandwidth * psi) ** 2)
            )
    return out


def toeplitz_sequence(
    alphas, amps, count: int, ds: float, radar: Radar
) -> np.ndarray:
    """First row y_0 .. y_{count-1} of the same-target Toeplitz part."""
    j = np.arange(count)
    out = np.zeros(count)
    coef = _kernel_coef(radar)
    for alpha, amp in zip(alphas, amps):
        psi = alpha * ds * j
        out += (
            amp**2
            * coef
            * np.cos(radar.omega0 * psi)
            * np.exp(-0.25 * (radar.bandwidth * psi) ** 2)
        )
    return out


def hankel_sequence(
    alpha_1: float,
    alpha_2: float,
    beta_12: float,
    amp_prod: float,
    aperture: Aperture,
    radar: Radar,
) -> tuple[np.ndarray, int, float]:
    """Cross-pair sequence h and slant g with H[a, b] = h[a + g b].

    Requires alpha_2 = -g alpha_1 for a positive integer g; then the
    cross kernel depends on slow-time indices only through a + g b.
    Returns (h, g, zeta) where zeta is the fractional index offset
    collecting the intercept and grid-origin terms.
    """
    if alpha_1 == 0.0 or alpha_2 == 0.0 or alpha_2 / alpha_1 >= 0.0:
        raise ValueError("slant requires nonzero alphas of opposite sign")
    ratio = -alpha_2 / alpha_1
    g = int(round(ratio))
    if g < 1 or abs(ratio - g) > 1.0e-9 * (1.0 + g):
        raise ValueError(
            f"alpha ratio {-ratio:.6g} is not a negative integer; "
            "no slanted-Hankel structure"
        )
    n = aperture.n
    ds = aperture.ds
    s0 = -(n // 2) * ds
    offset = (alpha_1 - alpha_2) * s0 + beta_12
    j = np.arange(n * (1 + g) + 1)
    psi = alpha_1 * ds * j + offset
    coef = _kernel_coef(radar)
    h = (
        amp_prod
        * coef
        * np.cos(radar.omega0 * psi)
        * np.exp(-0.25 * (radar.bandwidth * psi) ** 2)
    )
    zeta = offset / (alpha_1 * ds)
    return h, g, zeta


def build_structured(
    traj: Trajectory,
    rho_o,
    aperture: Aperture,
    radar: Radar,
    target_1: Target,
    target_2: Target,
) -> dict:
    """Toeplitz + slanted-Hankel decomposition for a two-target scene.

    Uses the linearized slopes, for which the integer slant is exact,
    and returns the parts along with their sum; the sum reproduces
    ``theoretical_covariance(..., linearize=True)`` to roundoff.
    """
    alpha_1 = alpha_of(traj, rho_o, target_1, linearize=True)
    alpha_2 = alpha_of(traj, rho_o, target_2, linearize=True)
    beta_12 = beta_of(traj, rho_o, target_1) - beta_of(traj, rho_o, target_2)
    count = aperture.n + 1
    y = toeplitz_sequence(
        [alpha_1, alpha_2],
        [target_1.amplitude, target_2.amplitude],
        count,
        aperture.ds,
        radar,
    )
    idx = np.abs(np.arange(count)[:, None] - np.arange(count)[None, :])
    toeplitz = y[idx]
    h, g, zeta = hankel_sequence(
        alpha_1,
        alpha_2,
        beta_12,
        target_1.amplitude * target_2.amplitude,
        aperture,
        radar,
    )
    a = np.arange(count)
    hankel = h[a[:, None] + g * a[None, :]]
    return {
        "toeplitz": toeplitz,
        "hankel": hankel,
        "total": toeplitz + hankel + hankel.T,
        "y": y,
        "h": h,
        "g": g,
        "zeta": zeta,
        "alpha": (alpha_1, alpha_2),
        "beta_12": beta_12,
    }


def symbol(
    alphas,
    amps,
    ds: float,
    radar: Radar,
    points: int = 4096,
    tol: float = 1.0e-12,
    j_max: int = 65536,
) -> tuple[np.ndarray, np.ndarray]:
    """Toeplitz symbol y(theta) = y_0 + 2 sum_j y_j cos(j theta).

    The sequence is truncated once |y_j| falls below ``tol`` times
    |y_0|; a warning is raised if that never happens before ``j_max``
    terms (the symbol is then slightly truncated).
    """
    block = 1024
    seq = toeplitz_sequence(alphas, amps, block, ds, radar)
    floor = tol * abs(seq[0])
    while np.abs(seq[-block:]).max() > floor and seq.size < j_max:
        grown = toeplitz_sequence(alphas, amps, min(2 * seq.size, j_max), ds, radar)
        block, seq = seq.size, grown
    tail = np.nonzero(np.abs(seq) > floor)[0]
    if tail.size and tail[-1] == seq.size - 1 and seq.size >= j_max:
        warnings.warn(
            "symbol sequence did not decay below tolerance; truncating",
            RuntimeWarning,
            stacklevel=2,
        )
    else:
        seq = seq[: tail[-1] + 1] if tail.size else seq[:1]
    theta = np.linspace(-np.pi, np.pi, points, endpoint=False)
    j = np.arange(1, seq.size)
    values = seq[0] + 2.0 * (seq[1:][None, :] * np.cos(theta[:, None] * j)).sum(axis=1)
    return theta, values


def numeric_rank(matrix: np.ndarray, epsilon: float = 0.01) -> int:
    """Count of eigenvalues above epsilon times the largest."""
    eigs = np.linalg.eigvalsh(matrix)
    top = float(eigs[-1])
    if top <= 0.0:
        return 0
    return int(np.sum(eigs > epsilon * top))


def szego_fraction(alphas, radar: Radar, ds: float, epsilon: float = 0.01) -> float:
    """Predicted numeric-rank fraction from the symbol's support.

    Each slope contributes min(2 |alpha| B ds sqrt(ln 1/eps) / pi, 1);
    contributions add until the spectrum saturates at full rank.
    """
    root = np.sqrt(np.log(1.0 / epsilon))
    total = 0.0
    for alpha in np.atleast_1d(np.asarray(alphas, dtype=float)):
        total += min(2.0 * abs(alpha) * radar.bandwidth * ds * root / np.pi, 1.0)
    return min(total, 1.0)


def szego_saturation_speed(radar: Radar, ds: float, epsilon: float = 0.01) -> float:
    """Range speed at which a single mover saturates the rank fraction."""
    root = np.sqrt(np.log(1.0 / epsilon))
    return np.pi * C_LIGHT / (4.0 * radar.bandwidth * ds * root)


def bandwidth_beta_product(
    traj: Trajectory, rho_o, radar: Radar, target_1: Target, target_2: Target
) -> float:
    """Dimensionless B |beta_1 - beta_2| deciding Hankel significance.

    The cross-pair kernel carries exp(-B^2 beta^2 / 4); when this
    product is large the Hankel part is negligible and the covariance
    rank is set by the Toeplitz part alone.
    """
    beta_12 = beta_of(traj, rho_o, target_1) - beta_of(traj, rho_o, target_2)
    return float(radar.bandwidth * abs(beta_12))


@dataclass(frozen=True)
class RankReport:
    """Spectrum summary of one covariance matrix."""

    eigenvalues: np.ndarray
    numeric_rank: int
    szego_fraction: float
    szego_rank: int
    symbol_theta: np.ndarray
    symbol_values: np.ndarray
    n: int
    epsilon: float


def analyze(
    matrix: np.ndarray,
    alphas,
    radar: Radar,
    ds: float,
    epsilon: float = 0.01,
) -> RankReport:
    """Numeric rank of ``matrix`` with the matching Szego prediction."""
    eigs = np.linalg.eigvalsh(matrix)[::-1].copy()
    top = float(eigs[0])
    rank = int(np.sum(eigs > epsilon * top)) if top > 0.0 else 0
    fraction = szego_fraction(alphas, radar, ds, epsilon)
    amps = np.ones(np.atleast_1d(np.asarray(alphas, dtype=float)).size)
    theta, values = symbol(alphas, amps, ds, radar)
    return RankReport(
        eigenvalues=eigs,
        numeric_rank=rank,
        szego_fraction=fraction,
        szego_rank=int(round(fraction * matrix.shape[0])),
        symbol_theta=theta,
        symbol_values=values,
        n=matrix.shape[0] - 1,
        epsilon=epsilon,
    )


def _study_targets(mode: str, value: float, frame, first_target, second_x):
    if mode == "single-stationary":
        rho = frame.rho_o + value * frame.cross_dir
        return [Target(rho=rho)]
    if mode == "single-mover":
        return [Target(rho=frame.rho_o, velocity=value * frame.range_dir)]
    if mode == "two-target":
        return [
            Target(rho=np.asarray(first_target, dtype=float)),
            Target(rho=np.array([second_x, value, 0.0])),
        ]
    raise ValueError(f"unknown rank-study mode: {mode!r}")


def rank_study(
    mode: str,
    sweep,
    traj: Trajectory | None = None,
    rho_o=None,
    aperture: Aperture | None = None,
    radar: Radar | None = None,
    epsilon: float = 0.01,
    empirical: bool = False,
    first_target=(5.0, 5.0, 0.0),
    second_x: float = -5.0,
) -> list[dict]:
    """Sweep a scene parameter and tabulate covariance ranks.

    Modes: ``single-stationary`` sweeps a cross-range offset,
    ``single-mover`` a range speed, ``two-target`` the second target's
    cross-range position.  Each row reports the rank computed from the
    covariance (model by default, simulated echoes with ``empirical``)
    next to the Szego estimate.
    """
    if traj is None or rho_o is None:
        default_traj, default_rho_o, default_aperture = default_rank_frame()
        traj = default_traj if traj is None else traj
        rho_o = default_rho_o if rho_o is None else np.asarray(rho_o, dtype=float)
        aperture = default_aperture if aperture is None else aperture
    elif aperture is None:
        aperture = default_rank_frame()[2]
    radar = Radar() if radar is None else radar
    frame = make_frame(traj, rho_o)
    rows = []
    for value in np.atleast_1d(np.asarray(sweep, dtype=float)):
        targets = _study_targets(mode, float(value), frame, first_target, second_x)
        if empirical:
            scene = SceneSpec(
                traj=traj,
                rho_o=rho_o,
                aperture=aperture,
                radar=radar,
                targets=tuple(targets),
            )
            matrix = covariance(simulate(scene))
        else:
            matrix = theoretical_covariance(traj, rho_o, aperture, radar, targets)
        alphas = [alpha_of(traj, rho_o, t) for t in targets]
        rank = numeric_rank(matrix, epsilon)
        fraction = szego_fraction(alphas, radar, aperture.ds, epsilon)
        rows.append(
            {
                "parameter": float(value),
                "computed_rank": rank,
                "estimated_rank": int(round(fraction * (aperture.n + 1))),
                "n": aperture.n,
                "epsilon": epsilon,
            }
        )
    return rows
