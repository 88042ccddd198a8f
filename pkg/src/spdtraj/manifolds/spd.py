"""Geometry of the manifold of symmetric positive-definite matrices.

The space of n x n SPD matrices is treated as a warped product of its
unit-determinant submanifold with the real line carrying the log-determinant
coordinate ``x = log(det)/n``.  The unit-determinant part inherits its metric
from the quotient of the special linear group by the rotation group, which
yields closed-form expressions for every operation needed by the trajectory
machinery: exponential map, inverse exponential map, geodesics, parallel
transport and the curvature tensor.

Charts for tangent vectors
--------------------------
Internally a tangent vector at a point with unit part ``P`` is a pair
``(A, v)`` where ``A`` is a traceless symmetric matrix (the quotient-space
coordinate) and ``v`` is the velocity of the log-determinant coordinate.  In
this chart the metric is flat: ``<(A1,v1),(A2,v2)> = tr(A1 A2) + psi^2 v1 v2``
with the warping weight ``psi = sqrt(n)``, and the closed forms are

* ``exp_P(A) = sqrt(P e^{2A} P)``
* ``A12 = log(sqrt(P1^-1 P2^2 P1^-1))`` reaches ``P2`` from ``P1``
* transport of ``A`` from ``P1`` to ``P2`` is the orthogonal conjugation
  ``T^t A T`` with ``T = P12^-1 P1^-1 P2``, ``P12 = sqrt(P1^-1 P2^2 P1^-1)``
* ``R(A,B)C = -[[A,B],C]`` with the matrix commutator bracket.

The ambient representation of the same tangent vector is the symmetric
matrix ``W`` that is the literal velocity of the geodesic in the space of
matrices.  For the unit part the two charts are linked by the Sylvester
relation ``W P + P W = 2 P A P``, equivalently ``A = sym(P^-1 W)``; the
product ``P A`` itself is generally not symmetric, so it is never stored.
:class:`TangentVec` holds the ambient symmetric matrix and converts to the
``(A, v)`` chart on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..linalg import (
    PD_RTOL,
    require_symmetric,
    sym,
    sym_exp,
    sym_log,
)
from .base import Manifold


class SpdPoint:
    """An SPD matrix with its cached warped-product decomposition."""

    __slots__ = ("mat", "n", "unit_part", "logdet_coord", "_unit_eigvals", "_unit_eigvecs", "_unit_inv")

    def __init__(self, mat: np.ndarray):
        mat = require_symmetric(np.asarray(mat, dtype=float), what="SPD point")
        eigvals, eigvecs = np.linalg.eigh(mat)
        if eigvals[0] <= PD_RTOL * max(eigvals[-1], 0.0):
            raise ValidationError(
                f"matrix is not positive definite: smallest eigenvalue {eigvals[0]:.3e}"
            )
        self.mat = mat
        self.n = mat.shape[0]
        x = float(np.sum(np.log(eigvals))) / self.n
        self.logdet_coord = x
        scale = np.exp(-x)
        self.unit_part = mat * scale
        self._unit_eigvals = eigvals * scale
        self._unit_eigvecs = eigvecs
        self._unit_inv = None

    @classmethod
    def _from_unit(cls, unit: np.ndarray, eigvals: np.ndarray, eigvecs: np.ndarray, x: float) -> "SpdPoint":
        """Internal constructor skipping validation (unit part already factored)."""
        self = cls.__new__(cls)
        self.mat = np.exp(x) * unit
        self.n = unit.shape[0]
        self.unit_part = unit
        self.logdet_coord = x
        self._unit_eigvals = eigvals
        self._unit_eigvecs = eigvecs
        self._unit_inv = None
        return self

    @property
    def unit_inv(self) -> np.ndarray:
        if self._unit_inv is None:
            w, u = self._unit_eigvals, self._unit_eigvecs
            self._unit_inv = sym((u / w) @ u.T)
        return self._unit_inv

    def __repr__(self) -> str:
        return f"SpdPoint(n={self.n}, logdet_coord={self.logdet_coord:.4g})"


@dataclass(frozen=True)
class TangentVec:
    """Tangent vector at an :class:`SpdPoint`, stored as an ambient symmetric matrix.

    The decomposition into the unit component (tangent to the
    unit-determinant submanifold) and the scalar log-determinant component is
    derived on access; the quotient-space coordinate ``A`` is likewise
    computed on demand and never cached, so a vector cannot drift out of sync
    with its base.
    """

    base: SpdPoint
    mat: np.ndarray

    def __post_init__(self):
        mat = require_symmetric(np.asarray(self.mat, dtype=float), what="tangent matrix")
        if mat.shape != (self.base.n, self.base.n):
            raise ValidationError(
                f"tangent shape {mat.shape} does not match base dimension {self.base.n}"
            )
        object.__setattr__(self, "mat", mat)

    @property
    def scalar_component(self) -> float:
        """Velocity ``v`` of the log-determinant coordinate; ``tr(base^-1 mat) = n v``."""
        p = self.base
        return float(np.sum(p.unit_inv * self.mat)) * np.exp(-p.logdet_coord) / p.n

    @property
    def unit_component(self) -> np.ndarray:
        """Ambient symmetric velocity of the unit part (satisfies ``tr(P^-1 V) = 0``)."""
        p = self.base
        return np.exp(-p.logdet_coord) * self.mat - self.scalar_component * p.unit_part

    def quotient_coord(self) -> np.ndarray:
        """Traceless symmetric chart matrix ``A = sym(P^-1 V)`` of the unit component."""
        p = self.base
        a = sym(p.unit_inv @ self.unit_component)
        return a - (np.trace(a) / p.n) * np.eye(p.n)


def _ambient_from_chart(point: SpdPoint, a: np.ndarray, v: float) -> np.ndarray:
    """Ambient symmetric matrix of the chart pair ``(A, v)`` at ``point``.

    Solves ``W P + P W = 2 P A P`` for the unit component in the eigenbasis
    of ``P`` and adds the scalar direction ``v * P``.
    """
    w, u = point._unit_eigvals, point._unit_eigvecs
    a_eig = u.T @ a @ u
    w_pair = w[:, None] + w[None, :]
    unit_vel = u @ (2.0 * np.outer(w, w) * a_eig / w_pair) @ u.T
    return np.exp(point.logdet_coord) * sym(unit_vel + v * point.unit_part)


class SpdManifold(Manifold):
    """SPD matrices of a fixed dimension under the quotient-induced metric.

    Tangent coordinate arrays have length ``n*n + 1``: the flattened chart
    matrix ``A`` followed by ``psi * v``.  Euclidean dot products of
    coordinate arrays equal Riemannian inner products.

    Parameters
    ----------
    n : matrix dimension.
    psi : warping weight of the log-determinant direction. Defaults to
        ``sqrt(n)``; exposed for sensitivity experiments only.
    """

    def __init__(self, n: int, psi: float | None = None):
        if n < 1:
            raise ValidationError("matrix dimension must be positive")
        self.n = int(n)
        self.psi = float(np.sqrt(n)) if psi is None else float(psi)
        self.name = "spd"
        self.tangent_dim = n * n + 1

    # -- chart packing ----------------------------------------------------
    def _pack(self, a: np.ndarray, v) -> np.ndarray:
        flat_a = a.reshape(a.shape[:-2] + (self.n * self.n,))
        scalar = (self.psi * np.asarray(v, dtype=float))[..., None]
        return np.concatenate([flat_a, scalar], axis=-1)

    def _unpack(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vec = np.asarray(vec, dtype=float)
        a = vec[..., : self.n * self.n].reshape(vec.shape[:-1] + (self.n, self.n))
        v = vec[..., -1] / self.psi
        return a, v

    # -- point handling ----------------------------------------------------
    def point(self, mat: np.ndarray) -> SpdPoint:
        """Validate a matrix as a point of this manifold."""
        p = mat if isinstance(mat, SpdPoint) else SpdPoint(mat)
        if p.n != self.n:
            raise ValidationError(f"expected {self.n}x{self.n} matrix, got {p.n}x{p.n}")
        return p

    def validate_point(self, point) -> SpdPoint:
        return self.point(point)

    def allclose(self, p: SpdPoint, q: SpdPoint, tol: float = 1e-8) -> bool:
        return bool(np.abs(p.mat - q.mat).max() <= tol * max(1.0, np.abs(p.mat).max()))

    def point_to_array(self, point: SpdPoint) -> np.ndarray:
        return point.mat.reshape(-1).copy()

    def point_from_array(self, arr: np.ndarray) -> SpdPoint:
        return self.point(np.asarray(arr, dtype=float).reshape(self.n, self.n))

    # -- tangent objects ----------------------------------------------------
    def tangent(self, base: SpdPoint, mat: np.ndarray) -> TangentVec:
        base = self.point(base)
        return TangentVec(base, mat)

    def coords(self, vec: TangentVec) -> np.ndarray:
        """Flat tangent coordinates of a :class:`TangentVec`."""
        return self._pack(vec.quotient_coord(), vec.scalar_component)

    def tangent_from_coords(self, base: SpdPoint, coords: np.ndarray) -> TangentVec:
        a, v = self._unpack(coords)
        return TangentVec(base, _ambient_from_chart(base, sym(a), float(v)))

    def _check_base(self, point: SpdPoint, vec: TangentVec) -> None:
        if vec.base is not point and not self.allclose(vec.base, point):
            raise ValidationError("tangent vector is based at a different point")

    # -- geometry ------------------------------------------------------------
    def exp(self, point: SpdPoint, vec: np.ndarray) -> SpdPoint:
        a, v = self._unpack(vec)
        a = sym(a)
        a -= (np.trace(a) / self.n) * np.eye(self.n)
        # sqrt(P e^{2A} P) = sqrt(Z^t Z) with Z = e^A P, read off a single SVD
        z = sym_exp(a) @ point.unit_part
        _, s, vh = np.linalg.svd(z)
        unit = sym((vh.T * s) @ vh)
        return SpdPoint._from_unit(unit, s, vh.T, point.logdet_coord + float(v))

    def log(self, p1: SpdPoint, p2: SpdPoint) -> np.ndarray:
        a12 = self._quotient_log(p1, p2)
        return self._pack(a12, p2.logdet_coord - p1.logdet_coord)

    def _quotient_log(self, p1: SpdPoint, p2: SpdPoint) -> np.ndarray:
        # log(sqrt(P1^-1 P2^2 P1^-1)) via the SVD of Y = P2 P1^-1 (Y^t Y is the
        # matrix under the root); avoids squaring the condition number
        y = p2.unit_part @ p1.unit_inv
        _, s, vh = np.linalg.svd(y)
        return sym((vh.T * np.log(s)) @ vh)

    def distance(self, p1: SpdPoint, p2: SpdPoint) -> float:
        s = np.linalg.svd(p2.unit_part @ p1.unit_inv, compute_uv=False)
        dx = p2.logdet_coord - p1.logdet_coord
        return float(np.hypot(np.linalg.norm(np.log(s)), self.psi * dx))

    def geodesic(self, p1: SpdPoint, p2: SpdPoint, t: float) -> SpdPoint:
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"geodesic parameter must lie in [0, 1], got {t}")
        return self.exp(p1, t * self.log(p1, p2))

    def _transport_rotation(self, p1: SpdPoint, p2: SpdPoint) -> np.ndarray:
        """Orthogonal matrix conjugating chart coordinates from p1 to p2.

        T = P12^-1 P1^-1 P2 is the orthogonal polar factor of P1^-1 P2, which
        the SVD of Y = P2 P1^-1 delivers exactly orthogonal as V U^t.
        """
        u, _, vh = np.linalg.svd(p2.unit_part @ p1.unit_inv)
        return vh.T @ u.T

    def transport(self, p1: SpdPoint, p2: SpdPoint, vec: np.ndarray) -> np.ndarray:
        rot = self._transport_rotation(p1, p2)
        a, v = self._unpack(vec)
        return self._pack(np.einsum("ij,...jk,kl->...il", rot.T, a, rot), v)

    def curvature(self, point: SpdPoint, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        a, _ = self._unpack(x)
        b, _ = self._unpack(y)
        c, _ = self._unpack(z)
        ab = a @ b - b @ a
        r = -(ab @ c - c @ ab)
        return self._pack(r, np.zeros(r.shape[:-2]))

    # -- sampling -------------------------------------------------------------
    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> SpdPoint:
        s = sym(rng.normal(scale=scale, size=(self.n, self.n)))
        return SpdPoint(sym_exp(s))

    def random_tangent(self, point: SpdPoint, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        a = sym(rng.normal(scale=scale, size=(self.n, self.n)))
        a -= (np.trace(a) / self.n) * np.eye(self.n)
        v = rng.normal(scale=scale) / self.psi
        return self._pack(a, v)

    # -- typed operation surface (validating wrappers) -------------------------
    def exp_vec(self, point: SpdPoint, vec: TangentVec) -> SpdPoint:
        """Exponential map with :class:`TangentVec` input (checks the base)."""
        point = self.point(point)
        self._check_base(point, vec)
        return self.exp(point, self.coords(vec))

    def log_vec(self, p1: SpdPoint, p2: SpdPoint) -> TangentVec:
        p1, p2 = self.point(p1), self.point(p2)
        return self.tangent_from_coords(p1, self.log(p1, p2))

    def transport_vec(self, p1: SpdPoint, p2: SpdPoint, vec: TangentVec) -> TangentVec:
        p1, p2 = self.point(p1), self.point(p2)
        self._check_base(p1, vec)
        return self.tangent_from_coords(p2, self.transport(p1, p2, self.coords(vec)))

    def curvature_vec(self, point: SpdPoint, x: TangentVec, y: TangentVec, z: TangentVec) -> TangentVec:
        point = self.point(point)
        for t in (x, y, z):
            self._check_base(point, t)
        out = self.curvature(point, self.coords(x), self.coords(y), self.coords(z))
        return self.tangent_from_coords(point, out)

    def __repr__(self) -> str:
        return f"SpdManifold(n={self.n})"


def classic_affine_distance(q1: SpdPoint, q2: SpdPoint) -> float:
    """Geodesic distance under the classic quotient metric (squaring-map side).

    The metric inherited through the bijection sending an equivalence class
    to ``G G^t`` (rather than its square root) evaluates to half the usual
    affine-invariant value ``||log(Q1^-1/2 Q2 Q1^-1/2)||_F``.  With this
    normalization the squaring map is an exact isometry:
    ``classic_affine_distance(P1^2, P2^2)`` equals the warped-product
    distance between ``P1`` and ``P2``.
    """
    if not isinstance(q1, SpdPoint):
        q1 = SpdPoint(q1)
    if not isinstance(q2, SpdPoint):
        q2 = SpdPoint(q2)
    if q1.n != q2.n:
        raise ValidationError("dimension mismatch between points")
    w, u = np.linalg.eigh(q1.mat)
    inv_sqrt = (u / np.sqrt(w)) @ u.T
    middle = sym(inv_sqrt @ q2.mat @ inv_sqrt)
    return 0.5 * float(np.linalg.norm(sym_log(middle)))
