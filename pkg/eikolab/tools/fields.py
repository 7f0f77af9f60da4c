"""
Grid fields: uniform node-centered grids, the canonical unit divergence-free
generators, discrete differential operators and the EIKO1/EIKS1 text formats.
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from scipy.interpolate import RegularGridInterpolator

from eikolab.core.config import get_settings
from eikolab.core.errors import (
    FieldFormatError,
    GeneratorError,
    GridSpecError,
    NumericalContractError,
    SingularGridError,
    WindowError,
)
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.tools.quadrature import TestBump, flux_pairing

settings = get_settings()
logger = get_logger()

FIELD_TAG = "EIKO1"
SCALAR_TAG = "EIKS1"

# relative distance (in units of h) under which a node counts as sitting on a singular set
_SINGULAR_FRACTION = 1e-9


def perp(v: np.ndarray) -> np.ndarray:
    """Rotate by +90 degrees along the last axis: (a, b) -> (-b, a)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class GridSpec(BaseModel):
    """Uniform node-centered grid on [x0, x0+(nx-1)h] x [y0, y0+(ny-1)h]."""

    model_config = ConfigDict(frozen=True)

    nx: int = Field(..., ge=2)
    ny: int = Field(..., ge=2)
    x0: float = 0.0
    y0: float = 0.0
    h: float = Field(..., gt=0)

    @classmethod
    def checked(cls, **fields: Any) -> "GridSpec":
        """Construct from untrusted input, reporting violations as GridSpecError."""
        try:
            return cls(**fields)
        except ValidationError as e:
            first = e.errors()[0]
            raise GridSpecError(f"invalid grid: {first['loc'][0]} {first['msg']}") from e

    @classmethod
    def square(cls, n: int, half_width: float, center: Tuple[float, float] = (0.0, 0.0)) -> "GridSpec":
        """n x n nodes spanning [c - L, c + L] in both directions."""
        h = 2.0 * half_width / (n - 1)
        return cls(nx=n, ny=n, x0=center[0] - half_width, y0=center[1] - half_width, h=h)

    @property
    def x_max(self) -> float:
        return self.x0 + (self.nx - 1) * self.h

    @property
    def y_max(self) -> float:
        return self.y0 + (self.ny - 1) * self.h

    @property
    def node_count(self) -> int:
        return self.nx * self.ny

    def x_coords(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    def y_coords(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates as (ny, nx) arrays (y outer, x inner)."""
        return np.meshgrid(self.x_coords(), self.y_coords(), indexing="xy")

    def points(self) -> np.ndarray:
        """Node coordinates stacked as (ny, nx, 2)."""
        x, y = self.mesh()
        return np.stack([x, y], axis=-1)

    def half_shifted(self) -> "GridSpec":
        return self.model_copy(update={"x0": self.x0 + 0.5 * self.h, "y0": self.y0 + 0.5 * self.h})

    def trimmed(self, margin: int) -> "GridSpec":
        """Grid with ``margin`` nodes removed on every side."""
        if self.nx - 2 * margin < 2 or self.ny - 2 * margin < 2:
            raise WindowError(f"cannot trim {margin} nodes from a {self.nx}x{self.ny} grid")
        return GridSpec(
            nx=self.nx - 2 * margin,
            ny=self.ny - 2 * margin,
            x0=self.x0 + margin * self.h,
            y0=self.y0 + margin * self.h,
            h=self.h,
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return (
            (p[..., 0] >= self.x0)
            & (p[..., 0] <= self.x_max)
            & (p[..., 1] >= self.y0)
            & (p[..., 1] <= self.y_max)
        )


class Window(BaseModel):
    """Sub-rectangle of the domain, optionally intersected with an annulus."""

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    center: Optional[Tuple[float, float]] = None
    r_min: float = Field(default=0.0, ge=0)
    r_max: float = Field(default=float("inf"), gt=0)

    @classmethod
    def annulus(cls, center: Tuple[float, float], r_min: float, r_max: float) -> "Window":
        cx, cy = center
        return cls(
            x_min=cx - r_max, x_max=cx + r_max, y_min=cy - r_max, y_max=cy + r_max,
            center=center, r_min=r_min, r_max=r_max,
        )

    def node_mask(self, spec: GridSpec) -> np.ndarray:
        x, y = spec.mesh()
        tol = _SINGULAR_FRACTION * spec.h
        mask = (
            (x >= self.x_min - tol) & (x <= self.x_max + tol)
            & (y >= self.y_min - tol) & (y <= self.y_max + tol)
        )
        if self.center is not None:
            r = np.hypot(x - self.center[0], y - self.center[1])
            mask &= (r >= self.r_min) & (r <= self.r_max)
        return mask

    def distance_to_boundary(self, spec: GridSpec) -> float:
        """Smallest gap between the window rectangle and the domain boundary."""
        return min(
            self.x_min - spec.x0,
            spec.x_max - self.x_max,
            self.y_min - spec.y0,
            spec.y_max - self.y_max,
        )

    def require_inside(self, spec: GridSpec, margin: float = 0.0) -> None:
        gap = self.distance_to_boundary(spec)
        if gap < margin - _SINGULAR_FRACTION * spec.h:
            raise WindowError(f"window lies {gap:.6g} from the domain boundary, {margin:.6g} required")


@dataclass(frozen=True)
class GridField2:
    """R^2-valued field sampled at the nodes of a grid; values have shape (ny, nx, 2)."""

    spec: GridSpec
    values: np.ndarray
    unit: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        expected = (self.spec.ny, self.spec.nx, 2)
        if values.shape != expected:
            raise FieldFormatError(f"field values have shape {values.shape}, expected {expected}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, spec: GridSpec, values: np.ndarray, tol: Optional[float] = None) -> "GridField2":
        """Build a field and flag it unit when every sample is within ``tol`` of length one."""
        tol = settings.unit_tol if tol is None else tol
        field = cls(spec=spec, values=values, unit=False)
        return cls(spec=spec, values=field.values, unit=field.unit_defect() <= tol)

    def norms(self) -> np.ndarray:
        return np.hypot(self.values[..., 0], self.values[..., 1])

    def unit_defect(self) -> float:
        return float(np.max(np.abs(self.norms() - 1.0)))

    def check_unit(self, tol: Optional[float] = None) -> None:
        tol = settings.unit_tol if tol is None else tol
        defect = self.unit_defect()
        if defect > tol:
            get_metrics_collector().increment_error("contract")
            raise NumericalContractError(f"unit-length breach: max ||u|-1| = {defect:.3e} > {tol:.1e}")

    def flat_values(self) -> np.ndarray:
        """Row-major (y outer, x inner) pairs, shape (nx*ny, 2)."""
        return self.values.reshape(-1, 2)

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            (self.spec.y_coords(), self.spec.x_coords()),
            self.values,
            method="linear",
            bounds_error=False,
            fill_value=np.nan,
        )

    def sample(self, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at (..., 2) points given as (x, y); NaN outside the grid."""
        p = np.asarray(points, dtype=float)
        flat = p.reshape(-1, 2)
        out = self._interpolator(flat[:, ::-1])
        return out.reshape(p.shape)


@dataclass(frozen=True)
class GridScalar:
    """Real field sampled at the nodes of a grid; values have shape (ny, nx)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        expected = (self.spec.ny, self.spec.nx)
        if values.shape != expected:
            raise FieldFormatError(f"scalar values have shape {values.shape}, expected {expected}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "GridScalar":
        x, y = spec.mesh()
        return cls(spec=spec, values=np.broadcast_to(fn(x, y), x.shape))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

Point = Tuple[float, float]


class VortexParams(BaseModel):
    center: Point = (0.0, 0.0)
    alpha: int = 1

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        if v not in (1, -1):
            raise ValueError("vortex sign alpha must be +1 or -1")
        return v


class DistanceParams(BaseModel):
    points: List[Point] = Field(default_factory=list, description="Isolated points of K")
    polygons: List[List[Point]] = Field(default_factory=list, description="Closed polygons whose boundary belongs to K")
    sign: int = 1

    @field_validator("polygons")
    @classmethod
    def validate_polygons(cls, v):
        for poly in v:
            if len(poly) < 3:
                raise ValueError("a polygon needs at least three vertices")
        return v

    @field_validator("sign")
    @classmethod
    def validate_sign(cls, v):
        if v not in (1, -1):
            raise ValueError("distance orientation sign must be +1 or -1")
        return v


class JumpParams(BaseModel):
    angle: float = Field(default=0.0, description="Angle of the jump line; u = +tangent on the left side")
    point: Point = (0.0, 0.0)


class ConstantParams(BaseModel):
    vector: Point = (1.0, 0.0)


class LogLogParams(BaseModel):
    pass


def _vortex(p: VortexParams, x: np.ndarray, y: np.ndarray, h: float):
    dx = x - p.center[0]
    dy = y - p.center[1]
    r = np.hypot(dx, dy)
    singular = r <= _SINGULAR_FRACTION * h
    r = np.where(singular, 1.0, r)
    values = p.alpha * np.stack([-dy / r, dx / r], axis=-1)
    return values, singular


def _distance_candidates(p: DistanceParams, x: np.ndarray, y: np.ndarray):
    """Distances and nearest points to every component (points and polygon edges) of K."""
    dists = []
    projs = []
    for px, py in p.points:
        proj = np.stack([np.full_like(x, px), np.full_like(y, py)], axis=-1)
        dists.append(np.hypot(x - px, y - py))
        projs.append(proj)
    for poly in p.polygons:
        vertices = np.asarray(poly, dtype=float)
        for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
            ab = b - a
            t = ((x - a[0]) * ab[0] + (y - a[1]) * ab[1]) / float(ab @ ab)
            t = np.clip(t, 0.0, 1.0)
            qx = a[0] + t * ab[0]
            qy = a[1] + t * ab[1]
            dists.append(np.hypot(x - qx, y - qy))
            projs.append(np.stack([qx, qy], axis=-1))
    return np.stack(dists), np.stack(projs)


def _distance(p: DistanceParams, x: np.ndarray, y: np.ndarray, h: float):
    if not p.points and not p.polygons:
        raise GeneratorError("distance generator needs a nonempty set K")
    dists, projs = _distance_candidates(p, x, y)
    tol = _SINGULAR_FRACTION * h
    best = np.argmin(dists, axis=0)
    d = np.take_along_axis(dists, best[None], axis=0)[0]
    q = np.take_along_axis(projs, best[None, ..., None], axis=0)[0]

    # medial axis: another component reaches the same distance at a different foot point
    near_tie = (dists - d[None]) <= tol
    foot_gap = np.hypot(projs[..., 0] - q[None, ..., 0], projs[..., 1] - q[None, ..., 1])
    medial = np.any(near_tie & (foot_gap > tol), axis=0)
    singular = medial | (d <= tol)

    safe = np.where(singular, 1.0, d)
    gx = (x - q[..., 0]) / safe
    gy = (y - q[..., 1]) / safe
    values = p.sign * np.stack([-gy, gx], axis=-1)
    return values, singular


def _jump(p: JumpParams, x: np.ndarray, y: np.ndarray, h: float):
    tx, ty = np.cos(p.angle), np.sin(p.angle)
    side = -(x - p.point[0]) * ty + (y - p.point[1]) * tx
    singular = np.abs(side) <= _SINGULAR_FRACTION * h
    s = np.where(side > 0, 1.0, -1.0)
    values = np.stack([s * tx, s * ty], axis=-1)
    return values, singular


def _constant(p: ConstantParams, x: np.ndarray, y: np.ndarray, h: float):
    values = np.empty(x.shape + (2,))
    values[..., 0] = p.vector[0]
    values[..., 1] = p.vector[1]
    return values, np.zeros(x.shape, dtype=bool)


def _loglog(p: LogLogParams, x: np.ndarray, y: np.ndarray, h: float):
    ax = np.abs(x)
    tol = _SINGULAR_FRACTION * h
    singular = (ax <= tol) | (np.abs(ax - 1.0) <= tol)
    safe = np.where(singular, 0.5, ax)
    phi = np.log(np.abs(np.log(safe)))
    values = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return values, singular


_GENERATORS: Dict[str, Tuple[type, Callable[..., Any], bool]] = {
    "vortex": (VortexParams, _vortex, True),
    "distance": (DistanceParams, _distance, True),
    "jump": (JumpParams, _jump, True),
    "constant": (ConstantParams, _constant, False),
    "loglog": (LogLogParams, _loglog, True),
}

GENERATOR_KINDS = tuple(_GENERATORS)


def generate(kind: str, params: Optional[Dict[str, Any]], spec: GridSpec) -> GridField2:
    """
    Sample a canonical field on ``spec``.

    When a node hits the singular set (vortex center, jump line, medial axis of K,
    x1 = 0 for loglog) the grid is half-shifted once; if the shifted grid is still
    singular, SingularGridError is raised. The returned field carries the spec
    actually used.
    """
    if kind not in _GENERATORS:
        raise GeneratorError(f"unknown generator '{kind}', expected one of {', '.join(GENERATOR_KINDS)}")
    model, sampler, unit_by_construction = _GENERATORS[kind]
    try:
        p = model(**(params or {}))
    except ValidationError as e:
        raise GeneratorError(f"invalid parameters for '{kind}': {e}") from e

    for attempt, candidate in enumerate((spec, spec.half_shifted())):
        x, y = candidate.mesh()
        values, singular = sampler(p, x, y, candidate.h)
        if not np.any(singular):
            break
        logger.warning(
            "Grid nodes hit the singular set",
            generator=kind, nodes=int(np.count_nonzero(singular)), shifted=bool(attempt),
        )
    else:
        raise SingularGridError(f"generator '{kind}': half-shifted grid still has nodes on the singular set")

    get_metrics_collector().increment_operation("generate")
    if unit_by_construction:
        field = GridField2(spec=candidate, values=values, unit=True)
        field.check_unit()
    else:
        field = GridField2.from_values(candidate, values)
    logger.data("Field generated", generator=kind, nx=candidate.nx, ny=candidate.ny, h=candidate.h, unit=field.unit)
    return field


def negate_half_plane(u: GridField2, normal: Point, offset: float = 0.0) -> GridField2:
    """Flip the field on {x . normal < offset}; a unit field that breaks the ordering principle."""
    x, y = u.spec.mesh()
    flip = (x * normal[0] + y * normal[1]) < offset
    values = np.where(flip[..., None], -u.values, u.values)
    return GridField2(spec=u.spec, values=values, unit=u.unit)


# ---------------------------------------------------------------------------
# Differential operators
# ---------------------------------------------------------------------------


def divergence_weak(u: GridField2, zeta: TestBump) -> float:
    """Weak divergence -∫ u . grad(zeta) by the cell-midpoint rule."""
    get_metrics_collector().increment_operation("divergence_weak")
    return flux_pairing(u.values, u.spec.x_coords(), u.spec.y_coords(), zeta, settings.support_margin_cells)


def gradient_from_stream(psi: GridScalar) -> GridField2:
    """Rotated gradient (-d2 psi, d1 psi); centered inside, one-sided at the boundary."""
    d_y, d_x = np.gradient(psi.values, psi.spec.h, psi.spec.h)
    return GridField2.from_values(psi.spec, np.stack([-d_y, d_x], axis=-1))


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------


def _format_header(tag: str, spec: GridSpec) -> str:
    return f"{tag} {spec.nx} {spec.ny} {spec.x0:.17g} {spec.y0:.17g} {spec.h:.17g}\n"


def _read_body(path: Union[str, Path], tag: str, per_node: int) -> Tuple[GridSpec, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    parts = header.split()
    if len(parts) != 6 or parts[0] != tag:
        raise FieldFormatError(f"malformed header: expected '{tag} <nx> <ny> <x0> <y0> <h>', got '{header.strip()}'")
    try:
        spec = GridSpec(nx=int(parts[1]), ny=int(parts[2]), x0=float(parts[3]), y0=float(parts[4]), h=float(parts[5]))
    except (ValueError, ValidationError) as e:
        raise FieldFormatError(f"malformed header: {e}") from e
    tokens = body.split()
    if len(tokens) != spec.node_count * per_node:
        raise FieldFormatError(
            f"value count mismatch: header announces {spec.node_count * per_node} values, body has {len(tokens)}"
        )
    try:
        values = np.array(tokens, dtype=float)
    except ValueError as e:
        raise FieldFormatError(f"malformed value: {e}") from e
    return spec, values


def write_field(u: GridField2, path: Union[str, Path]) -> None:
    """Write ``EIKO1 nx ny x0 y0 h`` then one ``u1 u2`` line per node, row-major."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(_format_header(FIELD_TAG, u.spec))
        np.savetxt(f, u.flat_values(), fmt="%.17g")


def read_field(path: Union[str, Path]) -> GridField2:
    spec, values = _read_body(path, FIELD_TAG, 2)
    return GridField2.from_values(spec, values.reshape(spec.ny, spec.nx, 2))


def write_scalar(psi: GridScalar, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(_format_header(SCALAR_TAG, psi.spec))
        np.savetxt(f, psi.values.reshape(-1), fmt="%.17g")


def read_scalar(path: Union[str, Path]) -> GridScalar:
    spec, values = _read_body(path, SCALAR_TAG, 1)
    return GridScalar(spec=spec, values=values.reshape(spec.ny, spec.nx))


def circle_loop(center: Point, radius: float, samples: int) -> np.ndarray:
    """Counter-clockwise closed loop (last point not repeated), shape (samples, 2)."""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return np.stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)], axis=-1)


def rectangle_loop(spec: GridSpec, i0: int, i1: int, j0: int, j1: int) -> np.ndarray:
    """Counter-clockwise grid-aligned loop through the nodes of [i0, i1] x [j0, j1]."""
    if not (0 <= i0 < i1 < spec.nx and 0 <= j0 < j1 < spec.ny):
        raise WindowError("rectangle loop indices outside the grid")
    xs = spec.x_coords()
    ys = spec.y_coords()
    path: List[Tuple[float, float]] = []
    path += [(xs[i], ys[j0]) for i in range(i0, i1)]
    path += [(xs[i1], ys[j]) for j in range(j0, j1)]
    path += [(xs[i], ys[j1]) for i in range(i1, i0, -1)]
    path += [(xs[i0], ys[j]) for j in range(j1, j0, -1)]
    return np.asarray(path, dtype=float)


def as_points(points: Sequence[Point]) -> np.ndarray:
    return np.asarray(points, dtype=float).reshape(-1, 2)
