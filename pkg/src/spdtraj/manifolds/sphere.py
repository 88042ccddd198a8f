"""Unit two-sphere with great-circle geometry.

Used as a validation manifold: its geodesics, transport and curvature are
known in closed form, so the trajectory machinery can be checked against
exact answers before being trusted on the SPD manifold.  Points and tangent
coordinates are both plain length-3 arrays (the ambient dot product is the
round metric on tangent vectors).
"""

from __future__ import annotations

import numpy as np

from ..errors import AntipodalError, ValidationError
from .base import Manifold

_TOL = 1e-8


class UnitSphere(Manifold):
    """The sphere of unit vectors in R^3."""

    def __init__(self):
        self.name = "sphere"
        self.tangent_dim = 3

    # -- point handling -----------------------------------------------
    def validate_point(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float).reshape(-1)
        if p.shape != (3,):
            raise ValidationError(f"sphere points are 3-vectors, got shape {p.shape}")
        if abs(np.linalg.norm(p) - 1.0) > _TOL:
            raise ValidationError("sphere point is not a unit vector")
        return p

    def validate_tangent(self, point, vec) -> np.ndarray:
        v = np.asarray(vec, dtype=float).reshape(-1)
        if abs(float(np.dot(point, v))) > _TOL * max(1.0, float(np.linalg.norm(v))):
            raise ValidationError("tangent vector is not orthogonal to the base point")
        return v

    def allclose(self, p, q, tol: float = 1e-8) -> bool:
        return bool(np.abs(np.asarray(p) - np.asarray(q)).max() <= tol)

    def point_to_array(self, point) -> np.ndarray:
        return np.asarray(point, dtype=float).reshape(-1).copy()

    def point_from_array(self, arr) -> np.ndarray:
        return self.validate_point(arr)

    def project_tangent(self, point, vec) -> np.ndarray:
        return vec - np.dot(point, vec) * point

    # -- geometry --------------------------------------------------------
    def exp(self, point, vec) -> np.ndarray:
        theta = float(np.linalg.norm(vec))
        if theta < 1e-16:
            return np.array(point, dtype=float)
        out = np.cos(theta) * point + np.sin(theta) * (vec / theta)
        return out / np.linalg.norm(out)

    def log(self, p1, p2) -> np.ndarray:
        dot = float(np.clip(np.dot(p1, p2), -1.0, 1.0))
        residual = p2 - dot * p1
        s = float(np.linalg.norm(residual))
        theta = float(np.arctan2(s, dot))
        if theta > np.pi - 1e-6:
            raise AntipodalError("log map is ambiguous for (nearly) antipodal points")
        if s < 1e-16:
            return np.zeros(3)
        return theta * residual / s

    def distance(self, p1, p2) -> float:
        dot = float(np.clip(np.dot(p1, p2), -1.0, 1.0))
        return float(np.arctan2(np.linalg.norm(np.cross(p1, p2)), dot))

    def transport(self, p1, p2, vec) -> np.ndarray:
        u = self.log(p1, p2)
        theta = float(np.linalg.norm(u))
        if theta < 1e-16:
            return np.array(vec, dtype=float)
        u_hat = u / theta
        vec = np.asarray(vec, dtype=float)
        along = vec @ u_hat
        correction = (np.cos(theta) - 1.0) * u_hat - np.sin(theta) * np.asarray(p1, dtype=float)
        return vec + along[..., None] * correction

    def curvature(self, point, x, y, z) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        yz = np.sum(y * z, axis=-1)[..., None]
        xz = np.sum(x * z, axis=-1)[..., None]
        return yz * x - xz * y

    # -- sampling ----------------------------------------------------------
    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        p = rng.normal(size=3)
        return p / np.linalg.norm(p)

    def random_tangent(self, point, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        v = self.project_tangent(np.asarray(point, dtype=float), rng.normal(size=3))
        return scale * v
