"""
Characteristics of unit divergence-free fields, the ordering principle and
vortex/Lipschitz classification of windows.
"""

from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eikolab.core.config import get_settings
from eikolab.core.errors import NumericalContractError, UnderResolvedLoopError, WindowError
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.core.parallel import parallel_map
from eikolab.tools.fields import GridField2, GridSpec, Window, perp

settings = get_settings()
logger = get_logger()

TraceStatus = Literal["exited", "hit-singularity", "max-steps"]


class Characteristic(BaseModel):
    """Polyline of X(t_i, x) for dX/dt = u^⊥(X)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: Tuple[float, float]
    points: np.ndarray
    dt: float
    status: TraceStatus

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.points))

    @property
    def length(self) -> float:
        seg = np.diff(self.points, axis=0)
        return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))

    @property
    def chord_defect(self) -> float:
        """Largest distance of the polyline points to the chord through its endpoints."""
        if len(self.points) < 3:
            return 0.0
        a, b = self.points[0], self.points[-1]
        chord = b - a
        norm = float(np.hypot(*chord))
        if norm == 0.0:
            return 0.0
        rel = self.points - a
        return float(np.max(np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0])) / norm)


def _velocity(u: GridField2, x: np.ndarray, sign: float) -> Tuple[np.ndarray, np.ndarray]:
    """Renormalized u^⊥ at the points and a mask of usable samples."""
    v = u.sample(x)
    norm = np.hypot(v[:, 0], v[:, 1])
    ok = np.isfinite(norm) & (norm > settings.singularity_threshold)
    safe = np.where(ok, norm, 1.0)
    return sign * perp(v / safe[:, None]), ok


def trace_bundle(
    u: GridField2,
    seeds: np.ndarray,
    dt: Optional[float] = None,
    max_steps: int = 10_000,
    backward: bool = False,
) -> List[Characteristic]:
    """
    RK2 (midpoint) tracing of every seed at once with bilinear interpolation.

    A trace stops when the next point leaves the domain (exited), when |u| interpolates
    to at most the singularity threshold (hit-singularity), or after ``max_steps``.
    """
    dt = settings.trace_dt_factor * u.spec.h if dt is None else dt
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    inside = u.spec.contains(seeds)
    if not np.all(inside):
        bad = seeds[~inside][0]
        raise WindowError(f"seed ({bad[0]:.6g}, {bad[1]:.6g}) lies outside the domain")

    sign = -1.0 if backward else 1.0
    m = len(seeds)
    paths: List[List[np.ndarray]] = [[s.copy()] for s in seeds]
    status: List[str] = ["max-steps"] * m
    pos = seeds.copy()
    active = np.ones(m, dtype=bool)

    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x = pos[idx]
        k1, ok1 = _velocity(u, x, sign)
        mid = x + 0.5 * dt * k1
        k2, ok2 = _velocity(u, mid, sign)
        new = x + dt * k2
        left = ~u.spec.contains(new)
        singular = ~ok1 | ~ok2
        for n, i in enumerate(idx):
            if singular[n]:
                # a midpoint outside the grid samples as NaN
                status[i] = "exited" if ok1[n] and not u.spec.contains(mid[n]) else "hit-singularity"
                active[i] = False
            elif left[n]:
                status[i] = "exited"
                active[i] = False
            else:
                paths[i].append(new[n])
                pos[i] = new[n]

    get_metrics_collector().increment_operation("trace")
    return [
        Characteristic(seed=(float(s[0]), float(s[1])), points=np.asarray(p), dt=dt, status=st)
        for s, p, st in zip(seeds, paths, status)
    ]


def trace(u: GridField2, seed: Tuple[float, float], dt: Optional[float] = None, max_steps: int = 10_000) -> Characteristic:
    return trace_bundle(u, np.asarray([seed]), dt=dt, max_steps=max_steps)[0]


# ---------------------------------------------------------------------------
# Ordering principle
# ---------------------------------------------------------------------------


class OrderingStats(BaseModel):
    pairs_tested: int
    pairs_excluded: int
    violations: int
    fraction: float
    witnesses: List[Tuple[Tuple[float, float], Tuple[float, float]]] = Field(default_factory=list)


def sample_node_pairs(spec: GridSpec, count: int, seed: int = 0, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Random pairs of distinct nodes (optionally restricted to ``mask``), shape (count, 2, 2)."""
    pts = spec.points().reshape(-1, 2)
    if mask is not None:
        pts = pts[np.asarray(mask).reshape(-1)]
    if len(pts) < 2:
        raise WindowError("need at least two nodes to sample pairs")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, len(pts), size=count)
    b = (a + rng.integers(1, len(pts), size=count)) % len(pts)
    return np.stack([pts[a], pts[b]], axis=1)


def all_node_pairs(spec: GridSpec, stride: int = 1) -> np.ndarray:
    """Every unordered pair of nodes on the ``stride`` sub-lattice."""
    pts = spec.points()[::stride, ::stride].reshape(-1, 2)
    i, j = np.triu_indices(len(pts), k=1)
    return np.stack([pts[i], pts[j]], axis=1)


def ordering_check(
    u: GridField2,
    pairs: np.ndarray,
    margin_factor: Optional[float] = None,
    max_witnesses: int = 20,
) -> OrderingStats:
    """
    Count pairs breaking u(x).(y-x) > 0 ⇒ u(y).(y-x) > 0, ignoring pairs whose
    projections fall inside the band |u.(y-x)| < margin * h.
    """
    margin_factor = settings.ordering_margin_factor if margin_factor is None else margin_factor
    band = margin_factor * u.spec.h
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2, 2)
    x, y = pairs[:, 0], pairs[:, 1]
    d = y - x
    ux = u.sample(x)
    uy = u.sample(y)
    px = np.sum(ux * d, axis=-1)
    py = np.sum(uy * d, axis=-1)
    finite = np.isfinite(px) & np.isfinite(py)
    excluded = ~finite | (np.abs(px) < band) | (np.abs(py) < band)
    violating = ~excluded & (px >= band) & (py <= -band)
    tested = int(np.count_nonzero(~excluded))
    count = int(np.count_nonzero(violating))
    witnesses = [
        ((float(a[0]), float(a[1])), (float(b[0]), float(b[1])))
        for a, b in zip(x[violating][:max_witnesses], y[violating][:max_witnesses])
    ]
    get_metrics_collector().increment_operation("ordering_check")
    return OrderingStats(
        pairs_tested=tested,
        pairs_excluded=int(np.count_nonzero(excluded)),
        violations=count,
        fraction=count / tested if tested else 0.0,
        witnesses=witnesses,
    )


# ---------------------------------------------------------------------------
# Degree and traces on segments
# ---------------------------------------------------------------------------


def winding_number(u: GridField2, loop: np.ndarray) -> int:
    """Degree of u along a closed loop from branch-continuous angle increments."""
    pts = np.asarray(loop, dtype=float).reshape(-1, 2)
    v = u.sample(pts)
    if not np.all(np.isfinite(v)):
        raise WindowError("loop leaves the domain")
    nxt = np.roll(v, -1, axis=0)
    step = np.hypot(*(nxt - v).T)
    if np.any(step >= np.sqrt(2.0)):
        raise UnderResolvedLoopError(f"under-resolved loop: max |u(x_i+1) - u(x_i)| = {float(np.max(step)):.4f}")
    cross = v[:, 0] * nxt[:, 1] - v[:, 1] * nxt[:, 0]
    dot = np.sum(v * nxt, axis=-1)
    raw = float(np.sum(np.arctan2(cross, dot))) / (2.0 * np.pi)
    degree = int(round(raw))
    if abs(raw - degree) > settings.winding_tol:
        get_metrics_collector().increment_error("contract")
        raise NumericalContractError(f"winding sum {raw:.9f} is not an integer")
    return degree


class StripDefect(BaseModel):
    radius: float
    defect: float


def strip_trace_defect(
    u: GridField2,
    center: Tuple[float, float],
    tangent: Tuple[float, float],
    half_length: float,
    radii: Sequence[float],
    samples: int = 33,
) -> List[StripDefect]:
    """
    Mean of |u(p + s n) - u(p)| over the strip |t| <= half_length, |s| <= r around the
    segment p = center + t * tangent, for each r. Decays with r where u has a trace.
    """
    c = np.asarray(center, dtype=float)
    t_hat = np.asarray(tangent, dtype=float)
    t_hat = t_hat / np.hypot(*t_hat)
    n_hat = perp(t_hat)
    ts = np.linspace(-half_length, half_length, samples)
    on_segment = c + ts[:, None] * t_hat
    mid = u.sample(on_segment)
    out = []
    for r in radii:
        ss = np.linspace(-r, r, samples)
        pts = on_segment[:, None, :] + ss[None, :, None] * n_hat
        vals = u.sample(pts)
        if not np.all(np.isfinite(vals)):
            raise WindowError("strip leaves the domain")
        diff = vals - mid[:, None, :]
        out.append(StripDefect(radius=float(r), defect=float(np.mean(np.hypot(diff[..., 0], diff[..., 1])))))
    return out


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


class ClassificationReport(BaseModel):
    verdict: Literal["vortex", "lipschitz", "inconsistent"]
    vortex_center: Optional[Tuple[float, float]] = None
    orientation: Optional[int] = None
    fit_residual: Optional[float] = None
    lipschitz_constant_estimate: Optional[float] = None
    d: float
    h: float
    evidence: Dict[str, Any] = Field(default_factory=dict)


def _fit_lines(chars: List[Characteristic]) -> Tuple[np.ndarray, np.ndarray]:
    """Centroid and principal direction of every polyline with at least two points."""
    centers, dirs = [], []
    for c in chars:
        if len(c.points) < 2:
            continue
        mean = c.points.mean(axis=0)
        _, _, vt = np.linalg.svd(c.points - mean)
        centers.append(mean)
        dirs.append(vt[0])
    return np.asarray(centers).reshape(-1, 2), np.asarray(dirs).reshape(-1, 2)


def _pairwise_intersections(centers: np.ndarray, dirs: np.ndarray, min_angle: float) -> np.ndarray:
    pts = []
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            sin = dirs[i, 0] * dirs[j, 1] - dirs[i, 1] * dirs[j, 0]
            if abs(sin) < np.sin(min_angle):
                continue
            delta = centers[j] - centers[i]
            t = (delta[0] * dirs[j, 1] - delta[1] * dirs[j, 0]) / sin
            pts.append(centers[i] + t * dirs[i])
    return np.asarray(pts).reshape(-1, 2)


def least_squares_center(centers: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Point minimizing the summed squared distances to the lines (c_k, d_k)."""
    proj = np.eye(2)[None] - dirs[:, :, None] * dirs[:, None, :]
    a = proj.sum(axis=0)
    b = np.einsum("kij,kj->i", proj, centers)
    return np.linalg.solve(a, b)


def _distance_to_window(points: np.ndarray, window: Window) -> np.ndarray:
    dx = np.maximum.reduce([window.x_min - points[:, 0], np.zeros(len(points)), points[:, 0] - window.x_max])
    dy = np.maximum.reduce([window.y_min - points[:, 1], np.zeros(len(points)), points[:, 1] - window.y_max])
    return np.hypot(dx, dy)


def lipschitz_estimate(u: GridField2, mask: np.ndarray, count: int = 20_000, seed: int = 0) -> float:
    pairs = sample_node_pairs(u.spec, count, seed=seed, mask=mask)
    ux = u.sample(pairs[:, 0])
    uy = u.sample(pairs[:, 1])
    dist = np.hypot(*(pairs[:, 1] - pairs[:, 0]).T)
    return float(np.max(np.hypot(*(uy - ux).T) / dist))


def window_seeds(spec: GridSpec, window: Window, seeds_per_side: int = 8) -> np.ndarray:
    """A sub-lattice of the window nodes, about ``seeds_per_side`` per side, in (y, x) order."""
    mask = window.node_mask(spec)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size < 4 or cols.size < 4:
        raise WindowError(f"window holds {cols.size}x{rows.size} nodes, at least 4x4 required")
    stride = max(1, min(rows.size, cols.size) // seeds_per_side)
    sub = np.zeros_like(mask)
    sub[::stride, ::stride] = True
    pts = spec.points()[mask & sub]
    # sorted seed order keeps the aggregation deterministic
    return pts[np.lexsort((pts[:, 0], pts[:, 1]))]


def classify(u: GridField2, window: Window, d: float, seeds_per_side: int = 8) -> ClassificationReport:
    """
    Either the characteristics from the window meet near one point P with
    dist(P, window) < d and u = α (x-P)^⊥/|x-P| (vortex), or u is 1/d-Lipschitz on the
    window (lipschitz); anything else is inconsistent.
    """
    window.require_inside(u.spec, margin=d)
    spec = u.spec
    h = spec.h
    mask = window.node_mask(spec)
    seed_pts = window_seeds(spec, window, seeds_per_side)

    reach = max(2.0 * h, 0.5 * d)
    steps = max(2, int(np.ceil(reach / (settings.trace_dt_factor * h))))
    forward, backward = parallel_map(
        lambda back: trace_bundle(u, seed_pts, max_steps=steps, backward=back), [False, True]
    )
    merged = [
        Characteristic(
            seed=f.seed,
            points=np.concatenate([b.points[::-1], f.points[1:]]),
            dt=f.dt,
            status=f.status,
        )
        for f, b in zip(forward, backward)
    ]
    centers, dirs = _fit_lines(merged)
    crossings = _pairwise_intersections(centers, dirs, min_angle=0.1)
    near = crossings[_distance_to_window(crossings, window) < d] if len(crossings) else crossings

    evidence: Dict[str, Any] = {
        "seeds": int(len(seed_pts)),
        "lines": int(len(centers)),
        "intersections": int(len(crossings)),
        "intersections_near": int(len(near)),
        "max_chord_defect": float(max((c.chord_defect for c in merged), default=0.0)),
    }
    cluster_tol = settings.cluster_tol_factor * h
    get_metrics_collector().increment_operation("classify")

    if len(near) >= 3:
        median = np.median(near, axis=0)
        in_cluster = np.hypot(*(near - median).T) <= cluster_tol
        evidence["cluster_size"] = int(np.count_nonzero(in_cluster))
        if np.count_nonzero(in_cluster) >= 0.5 * len(near):
            center = least_squares_center(centers, dirs)
            pts = spec.points()[mask]
            rel = pts - center
            r = np.hypot(rel[:, 0], rel[:, 1])
            vals = u.values[mask]
            alpha = 1 if float(np.mean(np.sum(perp(rel) * vals, axis=-1) / r)) >= 0.0 else -1
            model = alpha * perp(rel) / r[:, None]
            residual = float(np.max(np.hypot(*(vals - model).T)))
            evidence["cluster_diameter"] = float(np.ptp(near[in_cluster], axis=0).max())
            if residual <= settings.vortex_residual_factor * h:
                logger.data("Window classified as vortex", center=tuple(center), alpha=alpha, residual=residual)
                return ClassificationReport(
                    verdict="vortex",
                    vortex_center=(float(center[0]), float(center[1])),
                    orientation=alpha,
                    fit_residual=residual,
                    d=d,
                    h=h,
                    evidence=evidence,
                )
            evidence["rejected_vortex_residual"] = residual

    lip = lipschitz_estimate(u, mask, seed=settings.pair_seed)
    verdict = "lipschitz" if lip <= (1.0 + settings.lipschitz_tol) / d else "inconsistent"
    logger.data("Window classified", verdict=verdict, lipschitz=lip, d=d)
    return ClassificationReport(
        verdict=verdict,
        lipschitz_constant_estimate=lip,
        d=d,
        h=h,
        evidence=evidence,
    )
