import numpy as np
import pytest

from conftest import shared_region_trajectory, smooth_trajectory
from spdtraj.bundle import (
    BundleTangent,
    bundle_distance,
    bundle_exp,
    bundle_shoot,
    theorem_residuals,
)
from spdtraj.manifolds import SpdManifold, UnitSphere
from spdtraj.tsrvf import TsrvfRepr, l2_norm, tsrvf_of


def make_repr(man, rng, T=30, amplitude=0.6):
    return tsrvf_of(smooth_trajectory(man, rng, T=T, amplitude=amplitude))


# ------------------------------------------------------------- exponential map
def test_zero_direction_gives_constant_path(spd3, rng):
    rep = make_repr(spd3, rng)
    direction = BundleTangent(spd3.zero_tangent(), np.zeros_like(rep.q))
    path = bundle_exp(rep, direction, steps=8)
    for p in path.points:
        assert spd3.distance(rep.start, p) < 1e-10
    assert np.abs(path.fiber[-1] - rep.q).max() < 1e-9


def test_zero_fiber_reduces_to_manifold_geodesic(sphere, rng):
    p = sphere.random_point(rng)
    T = 20
    rep = TsrvfRepr(sphere, p, np.zeros((T, 3)))
    u = sphere.random_tangent(p, rng)
    path = bundle_exp(rep, BundleTangent(u, np.zeros((T, 3))), steps=16)
    for i, x in enumerate(path.points):
        expected = sphere.exp(p, (i / 16) * u)
        assert sphere.distance(x, expected) < 1e-10
    assert np.abs(path.fiber).max() < 1e-12


def test_endpoint_self_convergence_on_sphere(sphere):
    rng = np.random.default_rng(11)
    rep = make_repr(sphere, rng, T=25)
    u = sphere.random_tangent(rep.start, rng, scale=0.5)
    w = np.stack([sphere.random_tangent(rep.start, rng, scale=0.5) for _ in range(rep.T)])
    direction = BundleTangent(u, w)
    ends = [bundle_exp(rep, direction, steps=s).points[-1] for s in (16, 32, 64, 128)]
    gaps = [sphere.distance(a, b) for a, b in zip(ends, ends[1:])]
    assert gaps[-1] < 1e-4
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("manifold_name", ["sphere", "spd"])
def test_theorem_residuals_shrink_with_steps(manifold_name):
    rng = np.random.default_rng(3)
    man = UnitSphere() if manifold_name == "sphere" else SpdManifold(3)
    a = make_repr(man, rng, T=20)
    b = make_repr(man, rng, T=20)
    u = man.log(a.start, b.start)
    w = man.transport(b.start, a.start, b.q) - a.q
    direction = BundleTangent(u, w)
    res = {s: theorem_residuals(bundle_exp(a, direction, steps=s)) for s in (20, 40, 80)}
    for lo, hi in ((20, 40), (40, 80)):
        assert res[lo]["base"] / max(res[hi]["base"], 1e-300) >= 1.8
        assert res[hi]["fiber"] < 1e-8  # covariant-linear fiber: defect at rounding level


def test_energy_nearly_constant_along_geodesic(sphere):
    rng = np.random.default_rng(5)
    a = make_repr(sphere, rng, T=20)
    b = make_repr(sphere, rng, T=20)
    result = bundle_shoot(a, b, steps=40)
    res = theorem_residuals(result.path)
    # constant-speed property: energy spread shrinks with the step
    assert res["energy_spread"] < 0.1


def test_fiber_is_covariant_linear(sphere):
    rng = np.random.default_rng(9)
    a = make_repr(sphere, rng, T=15)
    u = sphere.random_tangent(a.start, rng, scale=0.4)
    w = np.stack([sphere.random_tangent(a.start, rng, scale=0.4) for _ in range(a.T)])
    path = bundle_exp(a, BundleTangent(u, w), steps=32)
    for i in (8, 16, 24, 32):
        s = i / 32
        back = path.transport_back(path.fiber[i], from_index=i)
        assert l2_norm(back - (a.q + s * w)) < 1e-8


# ------------------------------------------------------------------- shooting
def test_shoot_to_itself_is_immediate(spd3, rng):
    rep = make_repr(spd3, rng)
    result = bundle_shoot(rep, rep)
    assert result.converged
    assert result.iterations == 0
    assert result.direction.norm() < 1e-8


def test_flat_fiber_case_solved_at_iteration_zero(spd3, rng):
    base = smooth_trajectory(spd3, rng, T=25)
    a = tsrvf_of(base)
    other = make_repr(spd3, rng, T=25)
    b = TsrvfRepr(spd3, a.start, other.q)  # same starting point, different fiber
    result = bundle_shoot(a, b)
    assert result.converged
    assert result.iterations == 0
    assert np.linalg.norm(result.direction.u) < 1e-9
    np.testing.assert_allclose(result.direction.w, b.q - a.q, atol=1e-9)
    # fiber path is the straight homotopy between the two fields
    mid = result.path.fiber[result.path.segments // 2]
    np.testing.assert_allclose(mid, 0.5 * (a.q + b.q), atol=1e-6)


@pytest.mark.parametrize("manifold_name", ["sphere", "spd"])
def test_shooting_hits_random_targets(manifold_name):
    rng = np.random.default_rng(23)
    man = UnitSphere() if manifold_name == "sphere" else SpdManifold(3)
    hits = 0
    pairs = 5
    for _ in range(pairs):
        a = tsrvf_of(shared_region_trajectory(man, rng, T=20))
        b = tsrvf_of(shared_region_trajectory(man, rng, T=20))
        result = bundle_shoot(a, b)
        if result.converged:
            hits += 1
            assert result.discrepancy < 1e-4
    assert hits >= pairs - 1


def test_shoot_history_decreases(sphere):
    rng = np.random.default_rng(2)
    a = make_repr(sphere, rng, T=20)
    b = make_repr(sphere, rng, T=20)
    result = bundle_shoot(a, b)
    h = result.history
    assert h[-1] <= h[0]
    assert result.converged


# ------------------------------------------------------------------- distance
def test_distance_of_point_to_itself(spd3, rng):
    rep = make_repr(spd3, rng)
    assert bundle_distance(rep, rep, method="shoot") < 1e-8
    assert bundle_distance(rep, rep, method="fast") < 1e-12


def test_distance_equal_starts_is_fiber_gap(spd3, rng):
    a = make_repr(spd3, rng, T=25)
    b = TsrvfRepr(spd3, a.start, make_repr(spd3, rng, T=25).q)
    expected = l2_norm(a.q - b.q)
    assert abs(bundle_distance(a, b, method="shoot") - expected) < 1e-6
    assert abs(bundle_distance(a, b, method="fast") - expected) < 1e-12


def test_distance_dominates_base_distance(sphere):
    rng = np.random.default_rng(31)
    a = make_repr(sphere, rng, T=20)
    b = make_repr(sphere, rng, T=20)
    d = bundle_distance(a, b, method="shoot")
    assert d >= sphere.distance(a.start, b.start) - 1e-9


def test_distance_symmetry(sphere):
    rng = np.random.default_rng(41)
    a = make_repr(sphere, rng, T=20, amplitude=0.5)
    b = make_repr(sphere, rng, T=20, amplitude=0.5)
    dab = bundle_distance(a, b, method="shoot")
    dba = bundle_distance(b, a, method="shoot")
    assert abs(dab - dba) < 1e-3
