"""
Compactly supported test functions and the cell-midpoint weak pairings.

Every weak pairing in the laboratory composes nodewise first, averages the four
corners of each cell (bilinear interpolation at the cell center) and multiplies by
the analytic test function or its gradient evaluated at that center.
"""

from typing import ClassVar, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate

from eikolab.core.errors import SupportError


def bump_profile(q: np.ndarray) -> np.ndarray:
    """exp(-1/(1-q)) for q < 1, zero otherwise."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    inside = q < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
    return out


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic smoothstep clamped to [0, 1]."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def smoothstep_derivative(t: np.ndarray) -> np.ndarray:
    """Derivative of the quintic smoothstep, zero outside [0, 1]."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    out = np.zeros_like(t)
    ti = t[inside]
    out[inside] = 30.0 * ti * ti * (ti - 1.0) ** 2
    return out


class SupportedFunction(Protocol):
    """Anything exposing the bounding box of its support."""

    def bounding_box(self) -> Tuple[float, float, float, float]:
        ...


class TestBump(BaseModel):
    """Smooth bump amplitude * exp(-1/(1 - |x-c|^2/R^2)) supported in the open disc B_R(c)."""

    __test__: ClassVar[bool] = False
    model_config = ConfigDict(frozen=True)

    center: Tuple[float, float] = Field(..., description="Center of the support disc")
    radius: float = Field(..., gt=0, description="Support radius")
    amplitude: float = Field(default=1.0, description="Peak value times e")

    def _q(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        return (dx * dx + dy * dy) / (self.radius * self.radius)

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.amplitude * bump_profile(self._q(x, y))

    def gradient(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Analytic gradient: -zeta * 2 (x - c) / (R^2 (1 - q)^2) inside the disc."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = self._q(x, y)
        inside = q < 1.0
        factor = np.zeros_like(q)
        qi = q[inside]
        factor[inside] = (
            -self.amplitude
            * np.exp(-1.0 / (1.0 - qi))
            * 2.0
            / (self.radius * self.radius * (1.0 - qi) ** 2)
        )
        return factor * (x - self.center[0]), factor * (y - self.center[1])

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) * float(np.exp(-1.0))

    def bounding_box(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def line_integral(self, point: Tuple[float, float], direction: Tuple[float, float]) -> float:
        """Integral of zeta along the full line through ``point`` with unit ``direction``."""
        px, py = point
        dx, dy = direction
        norm = float(np.hypot(dx, dy))
        dx, dy = dx / norm, dy / norm
        # parameter of the point closest to the center
        t0 = (self.center[0] - px) * dx + (self.center[1] - py) * dy
        value, _ = integrate.quad(
            lambda t: float(self.value(px + t * dx, py + t * dy)),
            t0 - self.radius,
            t0 + self.radius,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=200,
        )
        return float(value)


def ensure_support(
    x_min: float,
    x_max: float,
    y_min: float,
    y_max: float,
    margin: float,
    bump: SupportedFunction,
) -> None:
    """Raise SupportError unless supp(bump) keeps ``margin`` from the rectangle boundary."""
    bx0, bx1, by0, by1 = bump.bounding_box()
    if bx0 < x_min + margin or bx1 > x_max - margin or by0 < y_min + margin or by1 > y_max - margin:
        raise SupportError(
            f"test-function support [{bx0:.6g}, {bx1:.6g}] x [{by0:.6g}, {by1:.6g}] "
            f"overflows the admissible interior of [{x_min:.6g}, {x_max:.6g}] x "
            f"[{y_min:.6g}, {y_max:.6g}] (margin {margin:.6g})"
        )


def cell_average(values: np.ndarray) -> np.ndarray:
    """Bilinear value at cell centers: mean of the four cell corners (first two axes)."""
    v = np.asarray(values, dtype=float)
    return 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])


def cell_centers(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Meshgrid of cell centers for node coordinate vectors ``x`` (inner) and ``y`` (outer)."""
    xc = 0.5 * (x[:-1] + x[1:])
    yc = 0.5 * (y[:-1] + y[1:])
    return np.meshgrid(xc, yc, indexing="xy")


def flux_pairing(
    values: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    bump: TestBump,
    margin_cells: int,
) -> float:
    """Weak divergence pairing -∫ F . grad(zeta) for nodal vectors F of shape (ny, nx, 2)."""
    h = float(x[1] - x[0])
    ensure_support(float(x[0]), float(x[-1]), float(y[0]), float(y[-1]), margin_cells * h, bump)
    xc, yc = cell_centers(x, y)
    gx, gy = bump.gradient(xc, yc)
    f = cell_average(values)
    return float(-np.sum(f[..., 0] * gx + f[..., 1] * gy) * h * h)


def scalar_pairing(
    values: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    bump: TestBump,
    margin_cells: int,
) -> float:
    """∫ g zeta for nodal scalars g of shape (ny, nx)."""
    h = float(x[1] - x[0])
    ensure_support(float(x[0]), float(x[-1]), float(y[0]), float(y[-1]), margin_cells * h, bump)
    xc, yc = cell_centers(x, y)
    return float(np.sum(cell_average(values) * bump.value(xc, yc)) * h * h)
