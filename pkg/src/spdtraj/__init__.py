"""Rate-invariant analysis of trajectories on the SPD-matrix manifold.

Trajectories (for instance per-frame covariance descriptors of a video) are
represented by their starting point together with a transported square-root
vector field, compared through a vector-bundle geodesic distance, aligned by
dynamic programming over time warpings, and summarized by Karcher means.
"""

from .manifolds import Manifold, SpdManifold, SpdPoint, TangentVec, UnitSphere, classic_affine_distance

__version__ = "0.1.0"

__all__ = [
    "Manifold",
    "SpdManifold",
    "SpdPoint",
    "TangentVec",
    "UnitSphere",
    "classic_affine_distance",
    "__version__",
]
