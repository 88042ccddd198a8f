"""Common interface for the manifolds that trajectories live on.

Tangent-vector convention
-------------------------
All trajectory-level machinery (velocity fields, bundle integration,
dynamic-programming alignment) manipulates tangent vectors through flat
coordinate arrays of fixed length ``tangent_dim``.  Each manifold chooses
its coordinates so that the Euclidean dot product of two coordinate
arrays equals the Riemannian inner product at the base point.  This makes
inner products, norms, linear combinations and L2 integrals of tangent
fields ordinary numpy operations, while the manifold-specific structure
is confined to exp/log/transport/curvature.

Coordinate arrays may be stacked: every method accepting tangent
coordinates broadcasts over leading axes.
"""

from __future__ import annotations

import abc
from typing import Any

import numpy as np

Point = Any  # SpdPoint for the SPD manifold, a unit (3,) array for the sphere


class Manifold(abc.ABC):
    """Riemannian manifold with closed-form geometry."""

    #: short tag used in serialized trajectory files
    name: str
    #: length of tangent coordinate arrays
    tangent_dim: int

    # -- point handling -------------------------------------------------
    @abc.abstractmethod
    def validate_point(self, point: Point) -> Point:
        """Check invariants and return the (possibly wrapped) point."""

    @abc.abstractmethod
    def allclose(self, p: Point, q: Point, tol: float = 1e-8) -> bool:
        """Whether two points coincide within tolerance."""

    @abc.abstractmethod
    def point_to_array(self, point: Point) -> np.ndarray:
        """Flat float64 serialization of a point."""

    @abc.abstractmethod
    def point_from_array(self, arr: np.ndarray) -> Point:
        """Inverse of :meth:`point_to_array` (validates)."""

    # -- geometry -------------------------------------------------------
    @abc.abstractmethod
    def exp(self, point: Point, vec: np.ndarray) -> Point:
        """Exponential map; ``vec`` is a tangent coordinate array at ``point``."""

    @abc.abstractmethod
    def log(self, p1: Point, p2: Point) -> np.ndarray:
        """Inverse exponential map: coordinates at ``p1`` of the vector reaching ``p2``."""

    @abc.abstractmethod
    def transport(self, p1: Point, p2: Point, vec: np.ndarray) -> np.ndarray:
        """Parallel transport along the geodesic from ``p1`` to ``p2``.

        ``vec`` may be stacked ``(..., tangent_dim)``; one transport map is
        computed and applied to every row.
        """

    @abc.abstractmethod
    def curvature(self, point: Point, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Riemannian curvature tensor R(x, y)z at ``point`` (broadcasts)."""

    def distance(self, p1: Point, p2: Point) -> float:
        return float(np.linalg.norm(self.log(p1, p2)))

    def geodesic(self, p1: Point, p2: Point, t: float) -> Point:
        """Point at parameter ``t`` on the constant-speed geodesic from p1 to p2."""
        return self.exp(p1, t * self.log(p1, p2))

    def curvature_force(
        self, point: Point, v: np.ndarray, w: np.ndarray, xs: np.ndarray
    ) -> np.ndarray:
        """Integral over tau in [0,1] of R(v(tau), w(tau)) xs, trapezoid rule.

        ``v`` and ``w`` are tangent fields of shape (T, tangent_dim) at
        ``point``; ``xs`` is a single tangent there.
        """
        forces = self.curvature(point, v, w, np.broadcast_to(xs, v.shape))
        return np.trapezoid(forces, dx=1.0 / (len(v) - 1), axis=0)

    # -- metric (flat in coordinates by construction) --------------------
    def inner(self, point: Point, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(np.ravel(u), np.ravel(v)))

    def norm(self, point: Point, v: np.ndarray) -> float:
        return float(np.linalg.norm(v))

    def zero_tangent(self) -> np.ndarray:
        return np.zeros(self.tangent_dim)

    # -- sampling (tests, synthetic data) --------------------------------
    @abc.abstractmethod
    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> Point:
        ...

    @abc.abstractmethod
    def random_tangent(
        self, point: Point, rng: np.random.Generator, scale: float = 1.0
    ) -> np.ndarray:
        ...

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}()"
