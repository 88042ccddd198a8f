import numpy as np
import pytest

from spdtraj.manifolds import SpdManifold, UnitSphere


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def spd3():
    return SpdManifold(3)


@pytest.fixture
def sphere():
    return UnitSphere()


def smooth_trajectory(manifold, rng, T=60, amplitude=1.0, start=None):
    """Random smooth trajectory: two tangent directions swept by smooth profiles."""
    from spdtraj.tsrvf import Trajectory

    p0 = manifold.random_point(rng) if start is None else start
    xi1 = manifold.random_tangent(p0, rng, scale=amplitude)
    xi2 = manifold.random_tangent(p0, rng, scale=amplitude)
    ts = np.linspace(0.0, 1.0, T)
    pts = [manifold.exp(p0, t * xi1 + np.sin(np.pi * t) * 0.5 * xi2) for t in ts]
    return Trajectory(manifold, pts)


def shared_region_trajectory(manifold, rng, T=20, spread=0.35, amplitude=0.45, anchor=None):
    """Smooth trajectory whose start is a bounded perturbation of an anchor point.

    Mirrors the regime the pipeline actually compares (descriptors of
    comparable inputs): starting points within moderate geodesic distance.
    """
    if anchor is None:
        anchor = manifold.random_point(np.random.default_rng(99))
    start = manifold.exp(anchor, manifold.random_tangent(anchor, rng, scale=spread))
    return smooth_trajectory(manifold, rng, T=T, amplitude=amplitude, start=start)


def smooth_warp(rng, N=200, strength=1.0, modes=3):
    """Random smooth diffeomorphism of [0,1] with bounded slope."""
    from spdtraj.tsrvf import WarpFn

    t = np.linspace(0.0, 1.0, N)
    coeffs = rng.normal(scale=strength, size=modes) / (1.0 + np.arange(modes))
    w = np.exp(sum(c * np.sin((k + 1) * np.pi * t) for k, c in enumerate(coeffs)))
    gamma = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]))])
    return WarpFn(gamma / gamma[-1])
