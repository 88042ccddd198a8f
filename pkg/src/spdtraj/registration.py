"""Rate-invariant registration of trajectories.

The quotient distance between two trajectories is the bundle distance
minimized over time warps of the second one.  The minimization alternates
two steps: compute the bundle geodesic (or its fast fixed-baseline
approximation) between the current pair, then align the transported fiber
fields with a dynamic program over monotone piecewise-linear warps on an
N x N grid.  The DP is exact over the restricted grid class; slope bounds
keep the warps away from degenerate pinching solutions, which the
unconstrained pointwise baseline :func:`naive_warped_distance` is kept
around to demonstrate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bundle import SHOOT_ITERMAX, SHOOT_TOL, bundle_shoot
from .errors import ValidationError
from .tsrvf import (
    Trajectory,
    TsrvfRepr,
    WarpFn,
    l2_norm,
    resample_rows,
    resample_trajectory,
    tsrvf_of,
    warp_tsrvf,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID = 100
REG_TOL = 1e-3
REG_ITERMAX = 10

# allowed DP segment steps (di, dj): coprime pairs with slope dj/di in [1/5, 5]
_ELASTIC_STEPS = np.array(
    [
        (1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1), (1, 5), (5, 1),
        (2, 3), (3, 2), (2, 5), (5, 2), (3, 4), (4, 3), (3, 5), (5, 3), (4, 5), (5, 4),
    ],
    dtype=np.int64,
)
# the pointwise baseline admits flat and vertical moves (no slope guard)
_NAIVE_STEPS = np.array([(1, 1), (1, 0), (0, 1)], dtype=np.int64)


@njit(cache=True)
def _dp_core(n1, n2, ip, val, steps, elastic, h):  # pragma: no cover - jitted
    N = val.shape[0] if not elastic else n1.shape[0]
    D = np.full((N, N), np.inf)
    DEV = np.full((N, N), np.inf)
    CH = np.full((N, N), -1, dtype=np.int64)
    D[0, 0] = 0.0
    DEV[0, 0] = 0.0
    for i in range(N):
        for j in range(N):
            if i == 0 and j == 0:
                continue
            best = np.inf
            best_dev = np.inf
            best_k = -1
            for k in range(steps.shape[0]):
                di = steps[k, 0]
                dj = steps[k, 1]
                i0 = i - di
                j0 = j - dj
                if i0 < 0 or j0 < 0:
                    continue
                base = D[i0, j0]
                if not np.isfinite(base):
                    continue
                seg = 0.0
                dev = 0.0
                if di == 0:
                    dev = abs(i - j)
                else:
                    slope = dj / di
                    root = np.sqrt(slope)
                    for m in range(di + 1):
                        kk = i0 + m
                        jj = j0 + slope * m
                        fl = int(jj)
                        if fl > N - 2:
                            fl = N - 2
                        fr = jj - fl
                        if elastic:
                            a2 = n2[fl] * (1.0 - fr) + n2[fl + 1] * fr
                            aip = ip[kk, fl] * (1.0 - fr) + ip[kk, fl + 1] * fr
                            v = n1[kk] + slope * a2 - 2.0 * root * aip
                        else:
                            v = val[kk, fl] * (1.0 - fr) + val[kk, fl + 1] * fr
                        wgt = 0.5 if (m == 0 or m == di) else 1.0
                        seg += wgt * v
                        if m > 0:
                            dev += abs(kk - jj)
                    seg *= h
                total = base + seg
                total_dev = DEV[i0, j0] + dev
                if total < best - 1e-12 or (total <= best + 1e-12 and total_dev < best_dev):
                    best = total
                    best_dev = total_dev
                    best_k = k
            D[i, j] = best
            DEV[i, j] = best_dev
            CH[i, j] = best_k
    return D, CH


def _backtrack(choice: np.ndarray, steps: np.ndarray) -> np.ndarray:
    n = choice.shape[0]
    i, j = n - 1, n - 1
    nodes = [(i, j)]
    while i > 0 or j > 0:
        k = choice[i, j]
        if k < 0:
            raise ValidationError("dynamic program produced no admissible path")
        i -= int(steps[k, 0])
        j -= int(steps[k, 1])
        nodes.append((i, j))
    return np.array(nodes[::-1], dtype=float)


def _gamma_from_nodes(nodes: np.ndarray, n: int) -> WarpFn:
    # collapse repeated i (vertical runs) keeping the last j, then interpolate
    xs, ys = [], []
    for i, j in nodes:
        if xs and xs[-1] == i:
            ys[-1] = j
        else:
            xs.append(i)
            ys.append(j)
    values = np.interp(np.arange(n), np.array(xs), np.array(ys)) / (n - 1)
    return WarpFn(values)


def _smooth_monotone(values: np.ndarray, window: int) -> np.ndarray:
    """Boxcar smoothing with odd reflection at the ends.

    Lattice paths alternate between the admissible rational slopes; the
    resulting slope noise feeds the sqrt-derivative factor of the warp
    action, so the path is low-passed before use.  Odd reflection keeps
    linear paths (in particular the identity) and both endpoints exact,
    and averaging preserves monotonicity.
    """
    if window <= 1:
        return values
    half = window // 2
    window = 2 * half + 1
    head = 2.0 * values[0] - values[half:0:-1]
    tail = 2.0 * values[-1] - values[-2 : -2 - half : -1]
    padded = np.concatenate([head, values, tail])
    smoothed = np.convolve(padded, np.full(window, 1.0 / window), mode="valid")
    smoothed = np.clip(smoothed, 0.0, 1.0)
    smoothed[0], smoothed[-1] = 0.0, 1.0
    return np.maximum.accumulate(smoothed)


@njit(cache=True)
def _polish_core(q1, q2, g, sweeps, ncand):  # pragma: no cover - jitted
    """Monotone coordinate descent on the warp values at sampling resolution.

    Each interior node is line-searched inside the open interval between its
    neighbors, so monotonicity and the endpoints are preserved.  The local
    cost uses the same derivative stencil as the warp action (central
    differences, one-sided at the ends, clamped at zero).
    """
    T, D = q1.shape
    delta = 1.0 / (T - 1)

    def row_cost(i, gm, g0, gp):
        # integrand at node i given neighbor values (gm, g0, gp) = g[i-1..i+1];
        # gm is ignored at i = 0 and gp at i = T-1 (one-sided stencils there)
        if i == 0:
            dg = (gp - g0) / delta
        elif i == T - 1:
            dg = (g0 - gm) / delta
        else:
            dg = (gp - gm) / (2.0 * delta)
        if dg < 0.0:
            dg = 0.0
        root = np.sqrt(dg)
        pos = g0 * (T - 1)
        fl = int(pos)
        if fl > T - 2:
            fl = T - 2
        fr = pos - fl
        acc = 0.0
        for d in range(D):
            q2v = q2[fl, d] * (1.0 - fr) + q2[fl + 1, d] * fr
            diff = q1[i, d] - q2v * root
            acc += diff * diff
        return acc

    for _ in range(sweeps):
        for k in range(1, T - 1):
            lo = g[k - 1]
            hi = g[k + 1]
            if hi - lo < 1e-12:
                continue
            wl = 0.5 if k - 1 == 0 else 1.0
            wr = 0.5 if k + 1 == T - 1 else 1.0
            gm2 = g[k - 2] if k >= 2 else 0.0
            gp2 = g[k + 2] if k + 2 <= T - 1 else 1.0
            best_v = g[k]
            best_c = 1e300
            for c in range(ncand + 1):
                v = g[k] if c == ncand else lo + (hi - lo) * (c + 0.5) / ncand
                cost = (
                    wl * row_cost(k - 1, gm2, g[k - 1], v)
                    + row_cost(k, g[k - 1], v, g[k + 1])
                    + wr * row_cost(k + 1, v, g[k + 1], gp2)
                )
                if cost < best_c - 1e-15:
                    best_c = cost
                    best_v = v
            g[k] = best_v
    return g


def polish_warp(q1: np.ndarray, q2: np.ndarray, gamma: WarpFn, sweeps: int = 2, candidates: int = 16) -> WarpFn:
    """Nodewise monotone descent on the alignment objective.

    Cheap local touch-up: each warp value is line-searched between its
    neighbors.  Good at killing pointwise quantization noise, poor at
    long-wavelength corrections (those diffuse one node per sweep).
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    g = np.array(gamma.resample(len(q1)).values)
    g = _polish_core(q1, q2, g, sweeps, candidates)
    return WarpFn(g)


def _alignment_gap(q1: np.ndarray, q2: np.ndarray, gamma: WarpFn) -> float:
    return l2_norm(q1 - warp_tsrvf(q2, gamma))


def gauss_newton_warp(
    q1: np.ndarray, q2: np.ndarray, gamma: WarpFn, iters: int = 6, ridge: float = 1e-8
) -> WarpFn:
    """Damped Gauss-Newton refinement of a warp at sampling resolution.

    Linearizes ``q2(gamma) sqrt(gamma')`` in the warp values (both through
    the evaluation position and through the derivative factor), solves the
    resulting least-squares system for a global correction of the interior
    nodes, and backtracks onto the monotone cone.  Removes the lattice
    quantization of DP paths, including long-wavelength components that
    nodewise descent cannot reach.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    T = len(q1)
    if T < 4:
        return gamma
    h = 1.0 / (T - 1)
    diff = np.zeros((T, T))
    for i in range(1, T - 1):
        diff[i, i - 1], diff[i, i + 1] = -0.5 / h, 0.5 / h
    diff[0, 0], diff[0, 1] = -1.0 / h, 1.0 / h
    diff[-1, -2], diff[-1, -1] = -1.0 / h, 1.0 / h
    weights = np.full(T, h)
    weights[0] = weights[-1] = h / 2.0
    interior = np.arange(1, T - 1)

    g = np.array(gamma.resample(T).values)
    current = _alignment_gap(q1, q2, WarpFn(g))
    for _ in range(iters):
        slope = np.maximum(diff @ g, 1e-6)
        root = np.sqrt(slope)
        pos = np.clip(g * (T - 1), 0.0, T - 1 - 1e-12)
        lo = np.minimum(pos.astype(int), T - 2)
        fr = (pos - lo)[:, None]
        q2_at = q2[lo] * (1.0 - fr) + q2[lo + 1] * fr
        q2_dg = (q2[lo + 1] - q2[lo]) * (T - 1)
        resid = q1 - q2_at * root[:, None]
        jac_val = q2_dg * root[:, None]
        jac_slope = q2_at / (2.0 * root[:, None])
        a = weights * np.einsum("ij,ij->i", jac_val, jac_val)
        b = weights * np.einsum("ij,ij->i", jac_val, jac_slope)
        c = weights * np.einsum("ij,ij->i", jac_slope, jac_slope)
        hess = np.diag(a) + np.diag(b) @ diff + diff.T @ np.diag(b) + diff.T @ np.diag(c) @ diff
        rhs = weights * np.einsum("ij,ij->i", jac_val, resid)
        rhs = rhs + diff.T @ (weights * np.einsum("ij,ij->i", jac_slope, resid))
        reduced = hess[np.ix_(interior, interior)] + ridge * np.eye(T - 2)
        try:
            step = np.linalg.solve(reduced, rhs[interior])
        except np.linalg.LinAlgError:
            break
        improved = False
        for damping in (1.0, 0.5, 0.25, 0.1, 0.03):
            cand = g.copy()
            cand[interior] += damping * step
            cand = np.maximum.accumulate(np.clip(cand, 0.0, 1.0))
            cand[0], cand[-1] = 0.0, 1.0
            value = _alignment_gap(q1, q2, WarpFn(cand))
            if value < current - 1e-14:
                g, current = cand, value
                improved = True
                break
        if not improved:
            break
    return WarpFn(g)


def refine_warp(q1: np.ndarray, q2: np.ndarray, gamma: WarpFn) -> WarpFn:
    """Gauss-Newton refinement followed by a nodewise touch-up; best kept."""
    refined = gauss_newton_warp(q1, q2, gamma)
    touched = polish_warp(q1, q2, refined)
    if _alignment_gap(q1, q2, touched) < _alignment_gap(q1, q2, refined):
        return touched
    return refined


def dp_optimal_warp(
    q1: np.ndarray, q2: np.ndarray, grid: int = DEFAULT_GRID, smooth_window: int = 9
):
    """Optimal warp of ``q2`` towards ``q1`` over the N x N grid.

    Both fields must live in the same tangent space.  Returns the warp and
    the attained squared-L2 alignment cost of the lattice optimum.  Among
    equal-cost paths the one closest to the diagonal wins, so the output is
    reproducible; ``smooth_window`` controls the slope-noise filter applied
    to the winning path (0 or 1 disables it).
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if q1.shape != q2.shape:
        raise ValidationError("fields to align must have matching shape")
    if grid < 2:
        raise ValidationError("DP grid needs at least two nodes")
    if len(q1) != grid:
        positions = np.linspace(0.0, len(q1) - 1.0, grid)
        q1 = resample_rows(q1, positions)
        q2 = resample_rows(q2, positions)
    n1 = np.einsum("ij,ij->i", q1, q1)
    n2 = np.einsum("ij,ij->i", q2, q2)
    ip = q1 @ q2.T
    dummy = np.zeros((grid, grid))
    cost, choice = _dp_core(n1, n2, ip, dummy, _ELASTIC_STEPS, True, 1.0 / (grid - 1))
    nodes = _backtrack(choice, _ELASTIC_STEPS)
    gamma = _gamma_from_nodes(nodes, grid)
    gamma = WarpFn(_smooth_monotone(gamma.values, smooth_window))
    return gamma, float(cost[-1, -1])


@dataclass
class RegistrationResult:
    """Outcome of registering the second trajectory to the first."""

    gamma_star: WarpFn
    d_q: float
    d_c_before: float
    iterations: int
    converged: bool
    method: str
    history: list = field(default_factory=list)


def register_reprs(
    r1: TsrvfRepr,
    r2: TsrvfRepr,
    grid: int = DEFAULT_GRID,
    method: str = "fast",
    tol: float = REG_TOL,
    itermax: int = REG_ITERMAX,
    steps: int = 20,
    shoot_tol: float = SHOOT_TOL,
    shoot_itermax: int = SHOOT_ITERMAX,
    polish: bool = True,
) -> RegistrationResult:
    """Alternating bundle-geodesic / DP-alignment loop on representations.

    ``method='fast'`` fixes the baseline to the geodesic between the two
    starting points (one transport, then pure DP iterations); ``'full'``
    re-shoots the bundle geodesic against the warped target every pass.
    """
    if r1.T != r2.T:
        raise ValidationError("representations must share the sampling rate")
    man = r1.manifold
    if method not in ("fast", "full"):
        raise ValidationError(f"unknown registration method {method!r}")

    gamma_star = WarpFn.identity(grid)
    q2_cur = np.array(r2.q)
    converged = False

    if method == "fast":
        l_x = man.distance(r1.start, r2.start)
        q1_far = man.transport(r1.start, r2.start, r1.q)

        def gap(q2_field):
            return float(np.hypot(l_x, l2_norm(q1_far - q2_field)))

        def aligned_pair(q2_field):
            return q1_far, q2_field

    else:

        def shoot_state(q2_field):
            res = bundle_shoot(
                r1,
                TsrvfRepr(man, r2.start, q2_field),
                steps=steps,
                tol=shoot_tol,
                itermax=shoot_itermax,
            )
            path = res.path
            q1_par = path.transport_forward(np.array(r1.q))
            q1_far = man.transport(path.points[-1], r2.start, q1_par)
            return path.baseline_length(), q1_far

        def gap(q2_field):
            l_x, q1_far = shoot_state(q2_field)
            return float(np.hypot(l_x, l2_norm(q1_far - q2_field)))

        def aligned_pair(q2_field):
            _, q1_far = shoot_state(q2_field)
            return q1_far, q2_field

    d_c_before = gap(q2_cur)
    history = [d_c_before]
    best = (d_c_before, gamma_star)

    iterations = 0
    for iterations in range(1, itermax + 1):
        q1_far, q2_field = aligned_pair(q2_cur)
        gamma, _ = dp_optimal_warp(q1_far, q2_field, grid=grid)
        composed = gamma_star.compose(gamma)
        if polish:
            # remove the lattice quantization of the DP path against the
            # original field at full sampling resolution (baseline frozen)
            composed = refine_warp(q1_far, r2.q, composed)
        q2_new = warp_tsrvf(r2.q, composed)
        d_now = gap(q2_new)
        if d_now > history[-1] + 1e-12:
            # regridding noise has taken over; keep the previous iterate
            converged = True
            break
        gamma_star, q2_cur = composed, q2_new
        history.append(d_now)
        if d_now < best[0]:
            best = (d_now, gamma_star)
        if gamma.deviation_l2() < tol:
            converged = True
            break
    if not converged:
        logger.info("registration stopped at itermax=%d without warp convergence", itermax)

    d_q, gamma_star = best
    return RegistrationResult(
        gamma_star=gamma_star,
        d_q=d_q,
        d_c_before=d_c_before,
        iterations=iterations,
        converged=converged,
        method=method,
        history=history,
    )


def _common_sampling(t1: Trajectory, t2: Trajectory) -> tuple[Trajectory, Trajectory]:
    if t1.manifold.name != t2.manifold.name:
        raise ValidationError("trajectories live on different manifolds")
    T = max(t1.T, t2.T)
    return resample_trajectory(t1, T), resample_trajectory(t2, T)


def pairwise_register(t1: Trajectory, t2: Trajectory, **opts) -> RegistrationResult:
    """Register trajectory ``t2`` to ``t1``; see :func:`register_reprs`."""
    t1, t2 = _common_sampling(t1, t2)
    return register_reprs(tsrvf_of(t1), tsrvf_of(t2), **opts)


def fast_register(t1: Trajectory, t2: Trajectory, **opts) -> RegistrationResult:
    """Registration with the fixed-baseline approximation (the default pipeline)."""
    opts.setdefault("method", "fast")
    return pairwise_register(t1, t2, **opts)


def quotient_distance(t1: Trajectory, t2: Trajectory, **opts) -> float:
    """Rate-invariant distance d_q (bundle distance minimized over warps)."""
    return pairwise_register(t1, t2, **opts).d_q


def naive_warped_distance(t1: Trajectory, t2: Trajectory, grid: int = DEFAULT_GRID):
    """Pointwise warped infimum distance (pedagogical baseline).

    Minimizes the integral of pointwise geodesic distances over unconstrained
    monotone grid warps.  Exhibits pinching (near-vertical warp segments that
    skip mismatched content) and is not symmetric; never used for
    classification.
    """
    t1, t2 = _common_sampling(t1, t2)
    a = resample_trajectory(t1, grid)
    b = resample_trajectory(t2, grid)
    man = a.manifold
    val = np.empty((grid, grid))
    for i, p in enumerate(a.points):
        for j, q in enumerate(b.points):
            val[i, j] = man.distance(p, q)
    dummy = np.zeros(1)
    cost, choice = _dp_core(
        dummy, dummy, np.zeros((1, 1)), val, _NAIVE_STEPS, False, 1.0 / (grid - 1)
    )
    nodes = _backtrack(choice, _NAIVE_STEPS)
    return float(cost[-1, -1]), _gamma_from_nodes(nodes, grid)
