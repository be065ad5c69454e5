"""Brute-force differential geometry of graph surfaces.

Everything here is an oracle: grids, sampled spheres, and exhaustive
minimization, with explicit slack accounting instead of silent guesses.
Dimensions 1 and 2 only for the grid searches; the formulas for normals
and tangents are dimension-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial import cKDTree

from .landscape import Array, Landscape, eval_batch


def normal_from_grad(g: Array) -> Array:
    """Upward unit normal of the graph from a gradient value:
    (-grad f, 1) / sqrt(1 + |grad f|^2)."""
    g = np.asarray(g, dtype=float)
    nu = np.concatenate([-g, [1.0]])
    return nu / math.sqrt(1.0 + float(g @ g))


def tangent_from_grad(g: Array) -> Array:
    """Steepest-ascent tangent lift from a gradient value: (grad f, |grad f|^2).

    Orthogonal to the normal by construction; vanishes exactly at
    stationary points.
    """
    g = np.asarray(g, dtype=float)
    return np.concatenate([g, [float(g @ g)]])


def normal(landscape: Landscape, theta: Array) -> Array:
    """Upward unit normal of the graph at theta."""
    return normal_from_grad(landscape.grad(np.asarray(theta, dtype=float)))


def tangent(landscape: Landscape, theta: Array) -> Array:
    """Steepest-ascent tangent lift at theta."""
    return tangent_from_grad(landscape.grad(np.asarray(theta, dtype=float)))


# ---------------------------------------------------------------------------
# grids and distances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned search box with uniform step, anchored at multiples of step."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same dimension")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty grid: need lo < hi on every axis")
        if len(self.lo) not in (1, 2):
            raise ValueError("brute-force grids support d in {1, 2} only")

    def axes(self) -> list[Array]:
        out = []
        for l, h in zip(self.lo, self.hi):
            j0 = math.ceil(l / self.step - 1e-9)
            j1 = math.floor(h / self.step + 1e-9)
            if j1 < j0:
                raise ValueError("empty grid: no lattice point inside the box")
            out.append(np.arange(j0, j1 + 1) * self.step)
        return out

    def points(self) -> Array:
        axes = self.axes()
        if len(axes) == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def graph_points(landscape: Landscape, grid: GridSpec) -> Array:
    """Sampled graph {(theta, f(theta))} over the grid, shape (n, d+1)."""
    pts = grid.points()
    vals = eval_batch(landscape, pts)
    return np.column_stack([pts, vals])


def distances_to_graph(landscape: Landscape, points: Array, grid: GridSpec) -> Array:
    """Exact min distance from each ambient point to the sampled graph."""
    gp = graph_points(landscape, grid)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d, _ = cKDTree(gp).query(pts)
    return d


def distance_to_graph(landscape: Landscape, point: Array, grid: GridSpec) -> float:
    """Min over the grid of |(theta, f(theta)) - point|.

    Accuracy is O(step * (1 + local Lipschitz)); the returned value never
    underestimates the true distance to the sampled set.
    """
    return float(distances_to_graph(landscape, np.asarray(point, dtype=float), grid)[0])


def hausdorff_distance(a: Array, b: Array) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("hausdorff_distance needs non-empty point sets")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


# ---------------------------------------------------------------------------
# offset manifolds (1D)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffsetSamples:
    """Sampled upper offset phi_rho over a theta interval."""

    thetas: Array
    values: Array
    rho: float
    grid_step: float


def _offset_window(landscape: Landscape, rho: float) -> float:
    """Half-width of the s-window that provably contains the maximizer.

    For a landscape with sup |f| <= B, any s with sqrt(rho^2 - s^2) below
    rho - 2B loses to the s = 0 candidate, so the window can be cut exactly.
    """
    smax = rho * (1.0 - 1e-12)
    b = landscape.value_bound
    if b is not None and rho > 2.0 * b:
        s_eff = math.sqrt(rho * rho - (rho - 2.0 * b) ** 2)
        return min(smax, s_eff)
    return smax


def _check_offset_args(landscape: Landscape, rho: float, h: float) -> None:
    if landscape.dim != 1:
        raise ValueError("offset evaluation is 1D only")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if h <= 0:
        raise ValueError("grid step must be positive")
    if h > rho / 100 * (1 + 1e-9):
        raise ValueError(f"grid step {h} too coarse: need h <= rho/100 = {rho/100}")


def offset_value(landscape: Landscape, rho: float, theta: float, h: float) -> float:
    """Upper offset phi_rho(theta) = max over the s-grid of f(theta+s) + sqrt(rho^2 - s^2).

    The s-grid is the ambient lattice of multiples of h intersected with
    the window, plus theta itself, with |s| clamped to rho * (1 - 1e-12).
    Anchoring the grid in ambient coordinates keeps the sampled peaks of f
    at theta-independent phases, which is what makes sampled offsets of
    nearby thetas comparable.
    """
    _check_offset_args(landscape, rho, h)
    theta = float(theta)
    smax = rho * (1.0 - 1e-12)
    w = _offset_window(landscape, rho)
    j0 = math.ceil((theta - w) / h - 1e-9)
    j1 = math.floor((theta + w) / h + 1e-9)
    tp = np.concatenate([np.arange(j0, j1 + 1) * h, [theta]])
    s = np.clip(tp - theta, -smax, smax)
    vals = eval_batch(landscape, tp) + np.sqrt(np.maximum(rho * rho - s * s, 0.0))
    return float(np.max(vals))


def offset_profile(landscape: Landscape, rho: float, lo: float, hi: float,
                   theta_step: float, h: float | None = None) -> OffsetSamples:
    """Sampled offset over [lo, hi] with theta spacing theta_step.

    When theta_step is an integer multiple of h the lattice is shared and
    the scan runs as a strided sliding-window maximum; otherwise each theta
    falls back to offset_value semantics. Both paths compute the same set
    maximum.
    """
    if h is None:
        h = min(rho / 100.0, theta_step)
    _check_offset_args(landscape, rho, h)
    if hi <= lo:
        raise ValueError("need lo < hi")
    n_t = int(round((hi - lo) / theta_step))
    ratio = theta_step / h
    aligned = abs(ratio - round(ratio)) < 1e-9
    lo_aligned = abs(lo / theta_step - round(lo / theta_step)) < 1e-9

    if aligned and lo_aligned:
        k = int(round(ratio))
        i0 = int(round(lo / theta_step))
        thetas = (np.arange(i0, i0 + n_t + 1) * theta_step)
        smax = rho * (1.0 - 1e-12)
        w = _offset_window(landscape, rho)
        nw = int(math.floor(w / h + 1e-9))
        lat = np.arange(i0 * k - nw, (i0 + n_t) * k + nw + 1) * h
        fv = eval_batch(landscape, lat)
        s = np.clip(np.arange(-nw, nw + 1) * h, -smax, smax)
        circ = np.sqrt(np.maximum(rho * rho - s * s, 0.0))
        win = 2 * nw + 1
        sw = np.lib.stride_tricks.sliding_window_view(fv, win)[::k]
        out = np.empty(n_t + 1)
        chunk = max(1, int(2.5e7 // win))
        for a in range(0, n_t + 1, chunk):
            b = min(a + chunk, n_t + 1)
            out[a:b] = np.max(sw[a:b] + circ, axis=1)
        return OffsetSamples(thetas=thetas, values=out, rho=rho, grid_step=h)

    thetas = lo + np.arange(n_t + 1) * theta_step
    out = np.array([offset_value(landscape, rho, float(t), h) for t in thetas])
    return OffsetSamples(thetas=thetas, values=out, rho=rho, grid_step=h)


def count_local_minima(values: Array) -> int:
    """Strict interior local minima; a plateau flanked by higher values counts once."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("values must be 1D")
    if v.size < 3:
        return 0
    keep = np.ones(v.size, dtype=bool)
    keep[1:] = v[1:] != v[:-1]
    runs = v[keep]
    if runs.size < 3:
        return 0
    return int(np.sum((runs[1:-1] < runs[:-2]) & (runs[1:-1] < runs[2:])))


# ---------------------------------------------------------------------------
# unreachability (1D)
# ---------------------------------------------------------------------------

Verdict = Literal["unreachable", "reachable", "indeterminate"]


@dataclass(frozen=True)
class UnreachabilityReport:
    """Outcome of the sampled sphere-containment test at one point.

    clearance = rho - max distance from any admissible sphere sample to the
    sampled graph. Positive clearance beyond the grid slack certifies that
    no ball of radius rho can touch the point from above; clearance at or
    below slack/2 certifies a tangent ball exists; in between the grid
    cannot tell, which is reported rather than guessed.
    """

    theta: float
    rho: float
    verdict: Verdict
    clearance: float
    slack: float
    grid_step: float
    n_sphere: int

    @property
    def is_unreachable(self) -> bool:
        return self.verdict == "unreachable"


def is_unreachable(landscape: Landscape, theta: float, rho: float,
                   grid_step: float = 1e-4,
                   angular_step: float | None = None) -> UnreachabilityReport:
    """Sphere-containment test for rho-unreachability of (theta, f(theta)).

    Samples the sphere of radius rho around the graph point, keeps the
    samples lying in the closed epigraph (ball centers roll above the
    graph; the sub-graph half of the sphere trivially touches Gamma at the
    base point itself), and measures their brute-force distance to the
    sampled graph. Unreachable iff every admissible sample sits strictly
    deeper than the grid slack 2 * grid_step * (1 + local Lipschitz).
    """
    if landscape.dim != 1:
        raise ValueError("unreachability test is 1D only")
    if rho <= 0:
        raise ValueError("rho must be positive")
    h = grid_step
    theta = float(np.asarray(theta, dtype=float).reshape(()))
    y0 = landscape.f(np.array([theta]))

    # graph box wide enough to contain the true nearest point of any sphere sample
    half = 2.0 * rho + 10.0 * h
    j0 = math.ceil((theta - half) / h - 1e-9)
    j1 = math.floor((theta + half) / h + 1e-9)
    tg = np.arange(j0, j1 + 1) * h
    fg = eval_batch(landscape, tg)
    lip = float(np.max(np.abs(np.diff(fg)))) / h if tg.size > 1 else 0.0
    slack = 2.0 * h * (1.0 + lip)

    if angular_step is None:
        # fine enough that a genuine tangent direction is missed by < slack/2
        n_sphere = max(4096, 4 * math.ceil(2.0 * math.pi * rho / slack / 4.0))
    else:
        if angular_step <= 0:
            raise ValueError("angular step must be positive")
        n_sphere = max(4, 4 * math.ceil(2.0 * math.pi / angular_step / 4.0))
    ang = np.arange(n_sphere) * (2.0 * math.pi / n_sphere)
    sx = theta + rho * np.cos(ang)
    sy = y0 + rho * np.sin(ang)
    keep = sy >= eval_batch(landscape, sx)  # closed epigraph only
    samples = np.column_stack([sx[keep], sy[keep]])

    d = cKDTree(np.column_stack([tg, fg])).query(samples)[0]
    clearance = rho - float(d.max())
    if clearance > slack:
        verdict: Verdict = "unreachable"
    elif clearance <= slack / 2.0:
        verdict = "reachable"
    else:
        verdict = "indeterminate"
    return UnreachabilityReport(theta=theta, rho=rho, verdict=verdict,
                                clearance=clearance, slack=slack,
                                grid_step=h, n_sphere=n_sphere)


# ---------------------------------------------------------------------------
# sharpness
# ---------------------------------------------------------------------------

def sharpness(landscape: Landscape, theta: Array,
              max_iters: int = 200, tol: float = 1e-6) -> float:
    """Spectral norm of the Hessian at theta.

    Exact via the Hessian oracle when the landscape has one; otherwise
    power iteration on central-difference Hessian-vector products. Raises
    if the iteration has not stabilized after max_iters rounds.
    """
    theta = np.asarray(theta, dtype=float)
    if landscape.hessian is not None:
        hess = np.asarray(landscape.hessian(theta), dtype=float)
        return float(np.linalg.norm(hess, 2))

    d = theta.size
    eps = 1e-5 * (1.0 + float(np.max(np.abs(theta))))

    def hvp(v: Array) -> Array:
        return (np.asarray(landscape.grad(theta + eps * v)) -
                np.asarray(landscape.grad(theta - eps * v))) / (2.0 * eps)

    v = np.ones(d) / math.sqrt(d)
    lam = 0.0
    for _ in range(max_iters):
        w = hvp(v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return abs(lam_new)
        lam = lam_new
    raise RuntimeError(f"power iteration did not stabilize after {max_iters} iterations")
