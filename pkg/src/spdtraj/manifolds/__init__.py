"""Manifold geometry: SPD matrices (with warped-product structure) and the unit sphere."""

from .base import Manifold
from .spd import SpdManifold, SpdPoint, TangentVec, classic_affine_distance
from .sphere import UnitSphere


def by_name(name: str, n: int | None = None) -> Manifold:
    """Manifold instance from its serialized tag."""
    if name == "spd":
        if n is None:
            raise ValueError("SPD manifold needs the matrix dimension")
        return SpdManifold(n)
    if name == "sphere":
        return UnitSphere()
    raise ValueError(f"unknown manifold tag {name!r}")


__all__ = [
    "Manifold",
    "SpdManifold",
    "SpdPoint",
    "TangentVec",
    "UnitSphere",
    "classic_affine_distance",
    "by_name",
]
