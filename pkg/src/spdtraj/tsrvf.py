"""Trajectories, their transported square-root vector fields, and time warps.

A sampled trajectory ``alpha`` on a manifold is converted into the pair
``(alpha(0), q)`` where ``q(tau)`` is the velocity ``alpha'(tau)`` divided by
the square root of its speed and parallel-transported backwards *along the
trajectory itself* (step by step through the samples, not along one long
geodesic) into the tangent space at the starting point.  The map is
invertible: the covariant integral walks the trajectory back out of ``q`` by
transporting each sample forward along the partially rebuilt path and taking
an exponential step of length ``delta * |q| * |q|`` (the square undoes the
square-root scaling).

Velocities are estimated with second-order differences (central in the
interior, one-sided at the two ends); the covariant integral remains the
first-order forward scheme, so reconstruction error decays like 1/T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .manifolds.base import Manifold

#: velocities with Riemannian norm below this are treated as zero, giving
#: q = 0 (the continuous extension of v/sqrt(|v|))
VELOCITY_FLOOR = 1e-10


@dataclass
class Trajectory:
    """Uniformly sampled path on a manifold, time grid {0, 1/(T-1), ..., 1}."""

    manifold: Manifold
    points: list

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError("a trajectory needs at least two samples")
        self.points = [self.manifold.validate_point(p) for p in self.points]

    @property
    def T(self) -> int:
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.T)

    @property
    def start(self):
        return self.points[0]

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class TsrvfRepr:
    """Starting point plus TSRVF samples, all expressed at the starting point.

    ``q`` has shape (T, manifold.tangent_dim); row ``i`` is the tangent
    coordinate array of q(i / (T-1)).
    """

    manifold: Manifold
    start: object
    q: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 2 or self.q.shape[1] != self.manifold.tangent_dim:
            raise ValidationError(
                f"q must have shape (T, {self.manifold.tangent_dim}), got {self.q.shape}"
            )

    @property
    def T(self) -> int:
        return len(self.q)

    def fiber_norm(self) -> float:
        """L2 norm of the TSRVF over [0, 1]."""
        return l2_norm(self.q)


class WarpFn:
    """Non-decreasing map of [0,1] onto itself, sampled on a uniform grid."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) < 2:
            raise ValidationError("a warp needs at least two samples")
        if abs(values[0]) > 1e-9 or abs(values[-1] - 1.0) > 1e-9:
            raise ValidationError("warp must fix the endpoints 0 and 1")
        diffs = np.diff(values)
        if diffs.min() < -1e-12:
            raise ValidationError("warp must be non-decreasing")
        values = np.maximum.accumulate(np.clip(values, 0.0, 1.0))
        values[0], values[-1] = 0.0, 1.0
        self.values = values

    @classmethod
    def identity(cls, n: int) -> "WarpFn":
        return cls(np.linspace(0.0, 1.0, n))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.grid, self.values)

    def resample(self, n: int) -> "WarpFn":
        if n == len(self.values):
            return self
        return WarpFn(self(np.linspace(0.0, 1.0, n)))

    def compose(self, inner: "WarpFn") -> "WarpFn":
        """Composition self(inner(t)) on the grid of ``inner``."""
        return WarpFn(self(inner.values))

    def derivative(self) -> np.ndarray:
        """Slope estimate on the grid (central differences, clamped at 0)."""
        d = np.gradient(self.values, 1.0 / (len(self.values) - 1))
        return np.maximum(d, 0.0)

    def deviation_l2(self) -> float:
        """L2 distance to the identity warp."""
        return l2_norm((self.values - self.grid)[:, None])

    def deviation_sup(self) -> float:
        return float(np.abs(self.values - self.grid).max())

    def __repr__(self) -> str:
        return f"WarpFn(n={len(self.values)}, sup-dev={self.deviation_sup():.3g})"


# --------------------------------------------------------------------------
# small L2 helpers for tangent fields sampled on the uniform grid of [0, 1]
def l2_inner(q1: np.ndarray, q2: np.ndarray) -> float:
    vals = np.sum(q1 * q2, axis=1)
    return float(np.trapezoid(vals, dx=1.0 / (len(vals) - 1)))


def l2_norm(q: np.ndarray) -> float:
    return float(np.sqrt(max(l2_inner(q, q), 0.0)))


def resample_rows(arr: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Linear interpolation of the rows of ``arr`` at fractional indices."""
    positions = np.clip(positions, 0.0, len(arr) - 1.0)
    lo = np.minimum(positions.astype(int), len(arr) - 2)
    frac = (positions - lo)[:, None]
    return arr[lo] * (1.0 - frac) + arr[lo + 1] * frac


# --------------------------------------------------------------------------
def _velocities(traj: Trajectory) -> np.ndarray:
    """Velocity coordinates at every sample, second-order difference scheme."""
    man, pts, T = traj.manifold, traj.points, traj.T
    delta = 1.0 / (T - 1)
    vel = np.empty((T, man.tangent_dim))
    if T == 2:
        vel[0] = man.log(pts[0], pts[1]) / delta
        vel[1] = vel[0]
        return vel
    vel[0] = (4.0 * man.log(pts[0], pts[1]) - man.log(pts[0], pts[2])) / (2 * delta)
    for i in range(1, T - 1):
        vel[i] = (man.log(pts[i], pts[i + 1]) - man.log(pts[i], pts[i - 1])) / (2 * delta)
    vel[T - 1] = -(4.0 * man.log(pts[-1], pts[-2]) - man.log(pts[-1], pts[-3])) / (2 * delta)
    return vel


def tsrvf_of(traj: Trajectory) -> TsrvfRepr:
    """Transported square-root vector field of a trajectory.

    Each velocity is scaled by the inverse square root of its speed and then
    carried to the starting point through the chain of single-step transports
    between consecutive samples.  Samples with (numerically) zero velocity
    contribute q = 0 rather than an error.
    """
    man, pts, T = traj.manifold, traj.points, traj.T
    vel = _velocities(traj)
    speeds = np.linalg.norm(vel, axis=1)
    scale = np.where(speeds < VELOCITY_FLOOR, 0.0, 1.0 / np.sqrt(np.maximum(speeds, VELOCITY_FLOOR)))
    scaled = vel * scale[:, None]

    q = np.empty_like(scaled)
    q[0] = scaled[0]
    carried = np.empty((0, man.tangent_dim))
    # sweep j = T-1 ... 1, dragging every later sample one step closer to the start
    for j in range(T - 1, 0, -1):
        carried = np.vstack([scaled[j][None, :], carried])
        carried = man.transport(pts[j], pts[j - 1], carried)
    q[1:] = carried
    return TsrvfRepr(man, pts[0], q)


def reconstruct(repr_: TsrvfRepr) -> Trajectory:
    """Covariant integral of the TSRVF: inverse of :func:`tsrvf_of`.

    Walks forward from the starting point; at each step the remaining q
    samples are transported to the current point and the next point is
    ``exp(delta * q * |q|)``.
    """
    man = repr_.manifold
    T = repr_.T
    delta = 1.0 / (T - 1)
    current = repr_.start
    pts = [current]
    carried = np.array(repr_.q, dtype=float)
    for t in range(T - 1):
        qt = carried[t]
        nxt = man.exp(current, delta * float(np.linalg.norm(qt)) * qt)
        if t + 1 < T:
            carried[t + 1 :] = man.transport(current, nxt, carried[t + 1 :])
        current = nxt
        pts.append(current)
    return Trajectory(man, pts)


def _interpolate_point(traj: Trajectory, position: float):
    """Point at fractional sample index via geodesic interpolation."""
    man = traj.manifold
    position = min(max(position, 0.0), traj.T - 1.0)
    lo = min(int(position), traj.T - 2)
    frac = position - lo
    if frac < 1e-12:
        return traj.points[lo]
    if frac > 1.0 - 1e-12:
        return traj.points[lo + 1]
    return man.geodesic(traj.points[lo], traj.points[lo + 1], frac)


def warp_trajectory(traj: Trajectory, warp: WarpFn) -> Trajectory:
    """Composition alpha(gamma(t)) on the trajectory's grid."""
    gamma = warp(traj.times)
    pts = [_interpolate_point(traj, g * (traj.T - 1)) for g in gamma]
    return Trajectory(traj.manifold, pts)


def resample_trajectory(traj: Trajectory, T: int) -> Trajectory:
    """Uniform resampling with geodesic interpolation between samples."""
    if T == traj.T:
        return traj
    positions = np.linspace(0.0, traj.T - 1.0, T)
    return Trajectory(traj.manifold, [_interpolate_point(traj, s) for s in positions])


def warp_tsrvf(q: np.ndarray, warp: WarpFn) -> np.ndarray:
    """Right action of a warp on a TSRVF: (q o gamma) * sqrt(gamma')."""
    q = np.asarray(q, dtype=float)
    T = len(q)
    warp = warp.resample(T)
    warped = resample_rows(q, warp.values * (T - 1))
    return warped * np.sqrt(warp.derivative())[:, None]


def warp_repr(repr_: TsrvfRepr, warp: WarpFn) -> TsrvfRepr:
    """Warp action on a full representation (starting point is unchanged)."""
    return TsrvfRepr(repr_.manifold, repr_.start, warp_tsrvf(repr_.q, warp))
