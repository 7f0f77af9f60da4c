"""
Fractional Sobolev (Gagliardo) sums and the mollifier/commutator pipeline.

Conventions:
    - rho(y) = C * exp(-1/(1-|y|^2)) on |y| < 1, rho_eps(z) = rho(z/eps) / eps^d.
    - Discrete kernels are sampled on grid offsets |z| < eps and renormalized so the
      weights sum to one; the analytic normalization error is kept as a diagnostic.
    - Mollified outputs live on the eps-interior only (no padding).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate, optimize, signal

from eikolab.core.config import get_settings
from eikolab.core.errors import NumericalContractError, UnresolvableMollifierError, ValidationFailure, WindowError
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.core.parallel import parallel_map
from eikolab.tools.fields import GridField2, GridScalar, GridSpec, Window

settings = get_settings()
logger = get_logger()

AnyField = Union[GridField2, GridScalar]


@lru_cache(maxsize=None)
def profile_constant(dim: int) -> float:
    """C_rho such that rho integrates to one over R^dim (dim 1 or 2)."""
    if dim == 1:
        mass, _ = integrate.quad(lambda x: np.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0, epsabs=1e-14)
    elif dim == 2:
        mass, _ = integrate.quad(lambda r: 2.0 * np.pi * r * np.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, epsabs=1e-14)
    else:
        raise ValidationFailure(f"mollifier dimension must be 1 or 2, got {dim}")
    return 1.0 / mass


def _profile(q: np.ndarray) -> np.ndarray:
    """exp(-1/(1-q)) with q = |y|^2, zero for q >= 1."""
    out = np.zeros_like(q, dtype=float)
    inside = q < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
    return out


@lru_cache(maxsize=None)
def gradient_sup(dim: int) -> float:
    """sup |grad rho| of the unit-radius profile."""
    c = profile_constant(dim)
    res = optimize.minimize_scalar(
        lambda r: -c * np.exp(-1.0 / (1.0 - r * r)) * 2.0 * r / (1.0 - r * r) ** 2,
        bounds=(1e-6, 1.0 - 1e-6),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-res.fun)


@dataclass(frozen=True)
class Mollifier:
    """Standard mollifier rho_eps sampled on a grid of spacing h."""

    eps: float
    h: float
    dim: int = 2

    def __post_init__(self):
        if self.eps < 2.0 * self.h * (1.0 - 1e-12):
            raise UnresolvableMollifierError(
                f"unresolvable mollifier: eps = {self.eps:.6g} < 2h = {2.0 * self.h:.6g}"
            )

    @property
    def radius_nodes(self) -> int:
        """Largest offset (in nodes) with |z| < eps along an axis."""
        return max(1, int(np.ceil(self.eps / self.h - 1e-9)) - 1)

    def _offsets(self) -> Tuple[np.ndarray, ...]:
        r = self.radius_nodes
        k = np.arange(-r, r + 1) * self.h
        if self.dim == 1:
            return (k,)
        zx, zy = np.meshgrid(k, k, indexing="xy")
        return zx, zy

    def raw_weights(self) -> np.ndarray:
        """rho_eps(z) h^d at the offsets, not renormalized."""
        offs = self._offsets()
        q = sum(z * z for z in offs) / (self.eps * self.eps)
        return profile_constant(self.dim) * _profile(q) * (self.h / self.eps) ** self.dim

    @property
    def mass(self) -> float:
        return float(np.sum(self.raw_weights()))

    @property
    def normalization_error(self) -> float:
        return abs(self.mass - 1.0)

    def weights(self) -> np.ndarray:
        """Kernel weights summing to one; index [a, b] is offset ((b-r)h, (a-r)h)."""
        w = self.raw_weights()
        return w / np.sum(w)

    def gradient_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        """(d1 rho_eps, d2 rho_eps)(z) h^2, scaled by the same renormalization as ``weights``."""
        if self.dim != 2:
            raise ValidationFailure("gradient kernels are only defined in two dimensions")
        zx, zy = self._offsets()
        q = (zx * zx + zy * zy) / (self.eps * self.eps)
        rho = profile_constant(2) * _profile(q)
        inside = q < 1.0
        factor = np.zeros_like(q)
        factor[inside] = -2.0 * rho[inside] / (1.0 - q[inside]) ** 2
        scale = self.h * self.h / self.eps ** 3 / self.mass
        return factor * (zx / self.eps) * scale, factor * (zy / self.eps) * scale

    def derivative_weights(self) -> np.ndarray:
        """rho_eps'(z) h for the 1-D kernel, scaled like ``weights``."""
        if self.dim != 1:
            raise ValidationFailure("derivative_weights is the one-dimensional kernel derivative")
        (z,) = self._offsets()
        q = z * z / (self.eps * self.eps)
        rho = profile_constant(1) * _profile(q)
        inside = q < 1.0
        factor = np.zeros_like(q)
        factor[inside] = -2.0 * rho[inside] / (1.0 - q[inside]) ** 2
        return factor * (z / self.eps) * self.h / self.eps ** 2 / self.mass

    def max_weight_density(self) -> float:
        """Largest renormalized weight divided by h^d, the discrete ||rho_eps||_inf."""
        return float(np.max(self.weights())) / self.h ** self.dim

    def support_indicator(self) -> np.ndarray:
        offs = self._offsets()
        q = sum(z * z for z in offs)
        return (q < self.eps * self.eps).astype(float)


def _convolve(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode 2-D convolution of (ny, nx) or (ny, nx, c) samples."""
    if values.ndim == 2:
        return signal.convolve2d(values, kernel, mode="valid")
    return np.stack([signal.convolve2d(values[..., c], kernel, mode="valid") for c in range(values.shape[-1])], axis=-1)


def _prepare(spec: GridSpec, eps: float) -> Tuple[Mollifier, GridSpec]:
    kernel = Mollifier(eps=eps, h=spec.h)
    r = kernel.radius_nodes
    if spec.nx <= 2 * r + 1 or spec.ny <= 2 * r + 1:
        raise WindowError(f"grid {spec.nx}x{spec.ny} too small for a mollifier of {2 * r + 1} nodes")
    return kernel, spec.trimmed(r)


def mollify(u: GridField2, eps: float) -> GridField2:
    """u_eps = u * rho_eps on the eps-interior; |u_eps| <= 1 + tol for unit fields."""
    kernel, out_spec = _prepare(u.spec, eps)
    values = _convolve(u.values, kernel.weights())
    get_metrics_collector().increment_operation("mollify")
    if u.unit:
        excess = float(np.max(np.hypot(values[..., 0], values[..., 1]))) - 1.0
        if excess > settings.quadrature_tol:
            get_metrics_collector().increment_error("contract")
            raise NumericalContractError(f"mollified field exceeds unit length by {excess:.3e}")
    logger.data("Mollified field", eps=eps, radius_nodes=kernel.radius_nodes, normalization_error=kernel.normalization_error)
    return GridField2(spec=out_spec, values=values, unit=False)


def mollify_scalar(g: GridScalar, eps: float) -> GridScalar:
    kernel, out_spec = _prepare(g.spec, eps)
    return GridScalar(spec=out_spec, values=_convolve(g.values, kernel.weights()))


def defect(u: GridField2, eps: float) -> GridScalar:
    """1 - |u_eps|^2 in commutator form |u|^2 * rho_eps - |u * rho_eps|^2."""
    kernel, out_spec = _prepare(u.spec, eps)
    w = kernel.weights()
    sq = u.values[..., 0] ** 2 + u.values[..., 1] ** 2
    mean_sq = _convolve(sq, w)
    ue = _convolve(u.values, w)
    values = mean_sq - (ue[..., 0] ** 2 + ue[..., 1] ** 2)
    worst = float(np.min(values))
    if worst < -settings.quadrature_tol:
        get_metrics_collector().increment_error("contract")
        raise NumericalContractError(f"negative defect {worst:.3e} below tolerance")
    get_metrics_collector().increment_operation("defect")
    return GridScalar(spec=out_spec, values=values)


def defect_bound(u: GridField2, eps: float) -> GridScalar:
    """(2 ||rho_eps||_inf) * sum_{|z|<eps} |u(x-z) - u(x)|^2 h^2 at every eps-interior node."""
    kernel, out_spec = _prepare(u.spec, eps)
    r = kernel.radius_nodes
    ind = kernel.support_indicator()
    v = u.values
    sq = v[..., 0] ** 2 + v[..., 1] ** 2
    centre = v[r:-r, r:-r]
    count = float(np.sum(ind))
    cross = _convolve(v, ind)
    increments = (
        _convolve(sq, ind)
        - 2.0 * (centre[..., 0] * cross[..., 0] + centre[..., 1] * cross[..., 1])
        + count * (centre[..., 0] ** 2 + centre[..., 1] ** 2)
    )
    increments = np.maximum(increments, 0.0) * u.spec.h ** 2
    return GridScalar(spec=out_spec, values=2.0 * kernel.max_weight_density() * increments)


def _node_patch(u: GridField2, kernel: Mollifier, i: int, j: int) -> np.ndarray:
    r = kernel.radius_nodes
    if i - r < 0 or j - r < 0 or i + r >= u.spec.ny or j + r >= u.spec.nx:
        raise WindowError(f"node ({i}, {j}) is closer than eps to the boundary")
    return u.values[i - r:i + r + 1, j - r:j + r + 1].reshape(-1, 2)


def defect_double_convolution(u: GridField2, eps: float, nodes: Sequence[Tuple[int, int]]) -> np.ndarray:
    """
    Half the rho_eps x rho_eps average of |u(x-z) - u(x-w)|^2 at the given
    (row, column) nodes of the input grid.
    """
    kernel = Mollifier(eps=eps, h=u.spec.h)
    w = kernel.weights().reshape(-1)
    out = np.empty(len(nodes))
    for n, (i, j) in enumerate(nodes):
        patch = _node_patch(u, kernel, i, j)
        diff = patch[:, None, :] - patch[None, :, :]
        out[n] = 0.5 * float(w @ np.sum(diff * diff, axis=-1) @ w)
    return out


def mollify_gradient(u: GridField2, eps: float) -> Tuple[GridSpec, np.ndarray]:
    """Jacobian J[..., i, j] = d_j (u_i)_eps from differentiated kernels, on the eps-interior."""
    kernel, out_spec = _prepare(u.spec, eps)
    k1, k2 = kernel.gradient_weights()
    d1 = _convolve(u.values, k1)
    d2 = _convolve(u.values, k2)
    return out_spec, np.stack([d1, d2], axis=-1)


class DerivativeBoundReport(BaseModel):
    eps: float
    nodes_checked: int
    max_ratio: float = Field(..., description="max |d_j u_eps| / bound over checked nodes")
    holds: bool


def derivative_bound_check(u: GridField2, eps: float, stride: int = 1) -> DerivativeBoundReport:
    """
    Check |d_j u_eps(x)| <= (||grad rho||_inf / eps^3) * ∫_{B_eps} |u(x-z) - u(x)| dz
    on every ``stride``-th eps-interior node.
    """
    kernel, out_spec = _prepare(u.spec, eps)
    _, jac = mollify_gradient(u, eps)
    r = kernel.radius_nodes
    ind = kernel.support_indicator()
    v = u.values
    ny, nx = out_spec.ny, out_spec.nx
    increments = np.zeros((ny, nx))
    for a in range(2 * r + 1):
        for b in range(2 * r + 1):
            if ind[a, b] == 0.0:
                continue
            shifted = v[2 * r - a:2 * r - a + ny, 2 * r - b:2 * r - b + nx]
            diff = shifted - v[r:r + ny, r:r + nx]
            increments += np.hypot(diff[..., 0], diff[..., 1])
    bound = gradient_sup(2) / (eps ** 3 * kernel.mass) * increments * u.spec.h ** 2
    bound = bound[::stride, ::stride] + settings.quadrature_tol
    partial = np.max(np.abs(jac), axis=-2)[::stride, ::stride]
    ratio = float(np.max(partial / bound[..., None]))
    return DerivativeBoundReport(eps=eps, nodes_checked=int(bound.size), max_ratio=ratio, holds=ratio <= 1.0)


def _points_patch(u: GridField2, eps: float, point: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    spec = u.spec
    if (
        point[0] - eps < spec.x0 or point[0] + eps > spec.x_max
        or point[1] - eps < spec.y0 or point[1] + eps > spec.y_max
    ):
        raise WindowError(f"point ({point[0]:.6g}, {point[1]:.6g}) is closer than eps to the boundary")
    j0 = int(np.floor((point[0] - eps - spec.x0) / spec.h))
    j1 = int(np.ceil((point[0] + eps - spec.x0) / spec.h))
    i0 = int(np.floor((point[1] - eps - spec.y0) / spec.h))
    i1 = int(np.ceil((point[1] + eps - spec.y0) / spec.h))
    i0, j0 = max(i0, 0), max(j0, 0)
    i1, j1 = min(i1, spec.ny - 1), min(j1, spec.nx - 1)
    xs = spec.x_coords()[j0:j1 + 1]
    ys = spec.y_coords()[i0:i1 + 1]
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    w = _profile(((gx - point[0]) ** 2 + (gy - point[1]) ** 2) / (eps * eps))
    return w / np.sum(w), u.values[i0:i1 + 1, j0:j1 + 1]


def mollify_at(u: GridField2, eps: float, points: np.ndarray) -> np.ndarray:
    """u_eps at arbitrary points, weights rho_eps(p - y) h^2 renormalized per point."""
    if eps < 2.0 * u.spec.h * (1.0 - 1e-12):
        raise UnresolvableMollifierError(f"unresolvable mollifier: eps = {eps:.6g} < 2h")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.empty_like(pts)
    for n, p in enumerate(pts):
        w, vals = _points_patch(u, eps, p)
        out[n] = np.tensordot(w, vals, axes=([0, 1], [0, 1]))
    return out


def defect_at(u: GridField2, eps: float, points: np.ndarray) -> np.ndarray:
    if eps < 2.0 * u.spec.h * (1.0 - 1e-12):
        raise UnresolvableMollifierError(f"unresolvable mollifier: eps = {eps:.6g} < 2h")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.empty(len(pts))
    for n, p in enumerate(pts):
        w, vals = _points_patch(u, eps, p)
        mean = np.tensordot(w, vals, axes=([0, 1], [0, 1]))
        out[n] = float(np.sum(w * np.sum(vals * vals, axis=-1)) - mean @ mean)
    return out


# ---------------------------------------------------------------------------
# Gagliardo sums
# ---------------------------------------------------------------------------


class SeminormReport(BaseModel):
    """Discrete Gagliardo W^{s,p} sum over a window."""

    s: float
    p: float
    h: float
    value: float = Field(..., ge=0)
    near_diagonal_cut: float
    node_count: int
    pairs_used: int
    pairs_excluded: int
    stderr: Optional[float] = None
    window: Optional[Window] = None


def _window_block(u: AnyField, window: Window) -> Tuple[np.ndarray, np.ndarray]:
    """Values and node mask restricted to the bounding index box of the window."""
    mask = window.node_mask(u.spec)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size < 4 or cols.size < 4:
        raise WindowError(f"window holds {cols.size}x{rows.size} nodes, at least 4x4 required")
    block = (slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1))
    values = np.asarray(u.values, dtype=float)[block]
    if values.ndim == 2:
        values = values[..., None]
    return values, mask[block]


def _increment_norm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    return np.sqrt(np.sum(d * d, axis=-1))


def _shift_pair(arr: np.ndarray, dy: int, dx: int) -> Tuple[np.ndarray, np.ndarray]:
    """Aligned views of arr[x] and arr[x + (dy, dx)] over all valid x."""
    ny, nx = arr.shape[:2]
    ys_a = slice(max(0, -dy), ny - max(0, dy))
    xs_a = slice(max(0, -dx), nx - max(0, dx))
    ys_b = slice(max(0, dy), ny - max(0, -dy))
    xs_b = slice(max(0, dx), nx - max(0, -dx))
    return arr[ys_a, xs_a], arr[ys_b, xs_b]


def _half_offsets(ny: int, nx: int) -> List[Tuple[int, int]]:
    """One representative of every +/- offset pair, in a fixed order."""
    offs = []
    for dy in range(0, ny):
        for dx in range(-(nx - 1), nx):
            if dy == 0 and dx <= 0:
                continue
            offs.append((dy, dx))
    return offs


def gagliardo_seminorm(
    u: AnyField,
    s: float,
    p: float,
    window: Window,
    near_diagonal_cut: Optional[float] = None,
    max_pairs: Optional[int] = None,
    seed: Optional[int] = None,
) -> SeminormReport:
    """
    h^4 * sum over ordered window node pairs x != y of |u(x) - u(y)|^p / |x - y|^(2 + s p),
    pairs closer than ``near_diagonal_cut * h`` excluded.

    Falls back to stratified random pairs (one stratum per node, reported standard
    error) when the exact pair count exceeds ``max_pairs``.
    """
    if not 0.0 < s < 1.0:
        raise ValidationFailure(f"order s must lie in (0, 1), got {s}")
    if p < 1.0:
        raise ValidationFailure(f"exponent p must be >= 1, got {p}")
    cut = settings.near_diagonal_cut if near_diagonal_cut is None else near_diagonal_cut
    max_pairs = settings.max_pairs if max_pairs is None else max_pairs
    seed = settings.pair_seed if seed is None else seed
    window.require_inside(u.spec)

    values, mask = _window_block(u, window)
    h = u.spec.h
    n = int(np.count_nonzero(mask))
    weight_exp = 2.0 + s * p
    get_metrics_collector().increment_operation("gagliardo_seminorm")

    if n * (n - 1) > max_pairs:
        return _sampled_seminorm(values, mask, h, s, p, cut, max_pairs, seed, window)

    ny, nx = mask.shape

    def offset_sum(offset: Tuple[int, int]) -> Tuple[float, int, int]:
        dy, dx = offset
        dist = float(np.hypot(dx, dy))
        a, b = _shift_pair(values, dy, dx)
        ma, mb = _shift_pair(mask, dy, dx)
        both = ma & mb
        count = int(np.count_nonzero(both))
        if count == 0:
            return 0.0, 0, 0
        if dist < cut:
            return 0.0, 0, count
        inc = _increment_norm(a, b)[both]
        return float(np.sum(inc ** p)) / (dist * h) ** weight_exp, count, 0

    partial = parallel_map(offset_sum, _half_offsets(ny, nx))
    sums = np.array([t[0] for t in partial])
    used = 2 * sum(t[1] for t in partial)
    excluded = 2 * sum(t[2] for t in partial)
    value = 2.0 * float(np.sum(sums)) * h ** 4

    logger.data("Gagliardo sum", s=s, p=p, nodes=n, pairs=used, excluded=excluded, value=value)
    return SeminormReport(
        s=s, p=p, h=h, value=value, near_diagonal_cut=cut, node_count=n,
        pairs_used=used, pairs_excluded=excluded, window=window,
    )


def _sampled_seminorm(
    values: np.ndarray,
    mask: np.ndarray,
    h: float,
    s: float,
    p: float,
    cut: float,
    max_pairs: int,
    seed: int,
    window: Window,
) -> SeminormReport:
    rng = np.random.default_rng(seed)
    rows, cols = np.nonzero(mask)
    pts = np.stack([cols, rows], axis=-1).astype(float)
    vals = values[rows, cols]
    n = len(rows)
    m = max(1, max_pairs // n)
    # partners are drawn among the other n - 1 nodes
    draws = rng.integers(0, n - 1, size=(n, m))
    partners = draws + (draws >= np.arange(n)[:, None])
    dist = np.hypot(pts[partners, 0] - pts[:, None, 0], pts[partners, 1] - pts[:, None, 1])
    inc = _increment_norm(vals[partners], vals[:, None, :])
    keep = dist >= max(cut, 1e-12)
    terms = np.zeros_like(dist)
    terms[keep] = inc[keep] ** p / (dist[keep] * h) ** (2.0 + s * p)
    per_node = (n - 1) * terms.mean(axis=1)
    value = float(np.sum(per_node)) * h ** 4
    var = (n - 1) ** 2 * terms.var(axis=1, ddof=1) / m if m > 1 else np.zeros(n)
    stderr = float(np.sqrt(np.sum(var))) * h ** 4
    logger.data("Sampled Gagliardo sum", s=s, p=p, nodes=n, samples=n * m, value=value, stderr=stderr)
    return SeminormReport(
        s=s, p=p, h=h, value=value, near_diagonal_cut=cut, node_count=n,
        pairs_used=int(np.count_nonzero(keep)), pairs_excluded=int(np.count_nonzero(~keep)),
        stderr=stderr, window=window,
    )


def gagliardo_seminorm_1d(
    values: np.ndarray,
    h: float,
    s: float,
    p: float,
    near_diagonal_cut: Optional[float] = None,
) -> SeminormReport:
    """h^2 * sum over ordered pairs i != j of |v_i - v_j|^p / |(i - j) h|^(1 + s p); values (n,) or (n, c)."""
    if not 0.0 < s < 1.0:
        raise ValidationFailure(f"order s must lie in (0, 1), got {s}")
    cut = settings.near_diagonal_cut if near_diagonal_cut is None else near_diagonal_cut
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = v.shape[0]
    if n < 4:
        raise WindowError(f"1-D window holds {n} nodes, at least 4 required")
    sums = np.zeros(n)
    used = excluded = 0
    for k in range(1, n):
        if k < cut:
            excluded += 2 * (n - k)
            continue
        inc = _increment_norm(v[k:], v[:-k])
        sums[k] = float(np.sum(inc ** p)) / (k * h) ** (1.0 + s * p)
        used += 2 * (n - k)
    value = 2.0 * float(np.sum(sums)) * h * h
    return SeminormReport(
        s=s, p=p, h=h, value=value, near_diagonal_cut=cut, node_count=n,
        pairs_used=used, pairs_excluded=excluded,
    )


class CetReport(BaseModel):
    """Localized commutator quantities at one mollification radius."""

    eps: float
    h: float
    value: float = Field(..., description="(1/eps^3) ∫_W ∫_{B_eps} |u(x-z) - u(x)|^3 dz dx")
    tail: float = Field(..., description="∫_W ∫_{B_eps} |u(x) - u(y)|^3 / |x - y|^3 dy dx")
    node_count: int


def cet_bound(u: GridField2, eps: float, window: Window) -> CetReport:
    """
    Windowed cubic increments over 0 < |z| <= eps, both eps-averaged (``value``)
    and weighted by |z|^-3 (``tail``).
    """
    if eps < 2.0 * u.spec.h * (1.0 - 1e-12):
        raise UnresolvableMollifierError(f"unresolvable mollifier: eps = {eps:.6g} < 2h")
    window.require_inside(u.spec, margin=eps)
    mask = window.node_mask(u.spec)
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise WindowError("window contains no grid nodes")
    h = u.spec.h
    r = int(np.floor(eps / h + 1e-9))
    v = u.values
    ny, nx = mask.shape
    offsets = [
        (dy, dx)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if 0 < dx * dx + dy * dy and np.hypot(dx, dy) * h <= eps * (1.0 + 1e-12)
    ]

    def offset_terms(offset: Tuple[int, int]) -> Tuple[float, float]:
        dy, dx = offset
        a, b = _shift_pair(v, dy, dx)
        ma, _ = _shift_pair(mask, dy, dx)
        cubes = float(np.sum(_increment_norm(a, b)[ma] ** 3))
        return cubes, cubes / (np.hypot(dx, dy) * h) ** 3

    partial = parallel_map(offset_terms, offsets)
    cubes = float(np.sum([t[0] for t in partial])) * h ** 4
    tail = float(np.sum([t[1] for t in partial])) * h ** 4
    get_metrics_collector().increment_operation("cet_bound")
    report = CetReport(eps=eps, h=h, value=cubes / eps ** 3, tail=tail, node_count=n)
    logger.data("Commutator bound", eps=eps, value=report.value, tail=report.tail)
    return report


class EmbeddingReport(BaseModel):
    p: float
    lower: SeminormReport = Field(..., description="W^{1/p,p} sum")
    cubic: SeminormReport = Field(..., description="W^{1/3,3} sum")
    sup_norm: float
    bound: float
    holds: bool


def embedding_comparison(u: AnyField, window: Window, p: float = 2.0) -> EmbeddingReport:
    """
    For bounded u and 1 <= p <= 3, both sums share the weight |x-y|^-3, so the
    cubic sum is at most (2 ||u||_inf)^(3-p) times the W^{1/p,p} sum pair by pair.
    """
    if not 1.0 <= p <= 3.0:
        raise ValidationFailure(f"comparison exponent must lie in [1, 3], got {p}")
    lower = gagliardo_seminorm(u, 1.0 / p, p, window)
    cubic = gagliardo_seminorm(u, 1.0 / 3.0, 3.0, window)
    vals = np.asarray(u.values, dtype=float)
    sup = float(np.max(np.linalg.norm(vals.reshape(vals.shape[0], vals.shape[1], -1), axis=-1)))
    bound = (2.0 * sup) ** (3.0 - p) * lower.value
    holds = cubic.value <= bound * (1.0 + 1e-12)
    return EmbeddingReport(p=p, lower=lower, cubic=cubic, sup_norm=sup, bound=bound, holds=holds)


def observed_order(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.abs(np.asarray(ys, dtype=float)))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
