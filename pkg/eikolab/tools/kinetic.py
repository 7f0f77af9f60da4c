"""Kinetic indicators chi(x, ξ) = 1_{u(x).ξ > 0}, the averaging formula and kinetic residuals."""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from eikolab.core.config import get_settings
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.core.parallel import parallel_map
from eikolab.tools.fields import GridField2
from eikolab.tools.quadrature import TestBump, flux_pairing

settings = get_settings()
logger = get_logger()


def direction(angle: float) -> np.ndarray:
    return np.array([np.cos(angle), np.sin(angle)])


@dataclass(frozen=True)
class KineticSlice:
    """chi(., ξ) on the grid of the field it was built from."""

    xi: np.ndarray
    indicator: np.ndarray


class DirectionFan(BaseModel):
    """N equispaced directions ξ_j = e^{i(2πj/N + offset)}."""

    size: int = Field(..., ge=1)
    offset: Optional[float] = Field(default=None, description="Defaults to π/N")

    @property
    def angles(self) -> np.ndarray:
        offset = np.pi / self.size if self.offset is None else self.offset
        return 2.0 * np.pi * np.arange(self.size) / self.size + offset

    def directions(self) -> np.ndarray:
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.size


def chi(u: GridField2, xi: np.ndarray) -> KineticSlice:
    """Strict indicator: ties u.ξ = 0 give 0."""
    xi = np.asarray(xi, dtype=float)
    indicator = (u.values @ xi > 0.0).astype(np.int8)
    return KineticSlice(xi=xi, indicator=indicator)


def average_reconstruct(u: GridField2, fan: DirectionFan) -> GridField2:
    """u~(x) = ½ Σ_j ξ_j chi(x, ξ_j) 2π/N."""
    out = np.zeros_like(u.values)
    for xi in fan.directions():
        out += chi(u, xi).indicator[..., None] * xi
    get_metrics_collector().increment_operation("average_reconstruct")
    return GridField2(spec=u.spec, values=0.5 * fan.weight * out, unit=False)


class ReconstructionReport(BaseModel):
    N: int
    max_error: float
    l2_error: float


def reconstruction_error(u: GridField2, fan: DirectionFan) -> ReconstructionReport:
    diff = average_reconstruct(u, fan).values - u.values
    err = np.hypot(diff[..., 0], diff[..., 1])
    return ReconstructionReport(
        N=fan.size,
        max_error=float(np.max(err)),
        l2_error=float(np.sqrt(np.sum(err * err)) * u.spec.h),
    )


def kinetic_residual(u: GridField2, xi: np.ndarray, zeta: TestBump) -> float:
    """-∫ chi(x, ξ) ξ . grad(zeta), the weak form of ξ . grad chi."""
    xi = np.asarray(xi, dtype=float)
    flux = chi(u, xi).indicator[..., None] * xi
    get_metrics_collector().increment_operation("kinetic_residual")
    return flux_pairing(flux, u.spec.x_coords(), u.spec.y_coords(), zeta, settings.support_margin_cells)


class KineticReport(BaseModel):
    xi: Tuple[float, float]
    zeta: TestBump
    h: float
    residual: float


def residual_fan(u: GridField2, fan: DirectionFan, zeta: TestBump) -> List[KineticReport]:
    """Kinetic residual for every direction of the fan, in fan order."""
    dirs = fan.directions()
    values = parallel_map(lambda xi: kinetic_residual(u, xi, zeta), list(dirs))
    reports = [
        KineticReport(xi=(float(xi[0]), float(xi[1])), zeta=zeta, h=u.spec.h, residual=r)
        for xi, r in zip(dirs, values)
    ]
    logger.data("Kinetic fan residuals", N=fan.size, max_abs=max(abs(r) for r in values))
    return reports
