"""
Entropies of the eikonal equation and their weak productions.

An entropy is represented by its 2π-periodic generator phi:
    Phi(e^{iθ}) = phi(θ) e^{iθ} + phi'(θ) (e^{iθ})^⊥,   dPhi/dθ = (phi + phi'') (e^{iθ})^⊥.
Off the circle it is extended by a radial cutoff eta, Phi~(z) = eta(|z|) Phi(z/|z|).
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

from eikolab.core.config import get_settings
from eikolab.core.errors import ValidationFailure
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.tools.fields import GridField2, perp
from eikolab.tools.quadrature import TestBump, flux_pairing, scalar_pairing, smoothstep, smoothstep_derivative
from eikolab.tools.regularity import defect, mollify, mollify_gradient

settings = get_settings()
logger = get_logger()


def _frame(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Polar frame of (..., 2) vectors: r, θ, e = z/r, e^⊥."""
    z = np.asarray(z, dtype=float)
    r = np.hypot(z[..., 0], z[..., 1])
    theta = np.arctan2(z[..., 1], z[..., 0])
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return r, theta, e, perp(e)


class Entropy(BaseModel, ABC):
    """Smooth entropy given by a generator with analytic phi, phi', phi''."""

    model_config = ConfigDict(frozen=True)

    @abstractmethod
    def phi(self, theta: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def dphi(self, theta: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d2phi(self, theta: np.ndarray) -> np.ndarray:
        ...

    def gamma(self, theta: np.ndarray) -> np.ndarray:
        return self.phi(theta) + self.d2phi(theta)

    def on_circle(self, theta: np.ndarray) -> np.ndarray:
        """Phi(e^{iθ}) as (..., 2)."""
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return self.phi(theta)[..., None] * e + self.dphi(theta)[..., None] * perp(e)

    def angular_derivative(self, theta: np.ndarray) -> np.ndarray:
        """d/dθ Phi(e^{iθ}) by the product rule, before any cancellation."""
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ep = perp(e)
        phi = self.phi(theta)[..., None]
        d1 = self.dphi(theta)[..., None]
        d2 = self.d2phi(theta)[..., None]
        return d1 * e + phi * ep + d2 * ep - d1 * e

    def orthogonality_defect(self, samples: int = 1000) -> float:
        """max_θ |dPhi/dθ . e^{iθ}| over equispaced angles."""
        theta = 2.0 * np.pi * np.arange(samples) / samples
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return float(np.max(np.abs(np.sum(self.angular_derivative(theta) * e, axis=-1))))

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Phi(z/|z|) for nonzero vectors (unit samples in practice)."""
        _, theta, _, _ = _frame(z)
        return self.on_circle(theta)

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        ...


class FourierEntropy(Entropy):
    """phi(θ) = Σ_k a_k cos kθ + b_k sin kθ, k = 0..M."""

    type: Literal["fourier"] = "fourier"
    cos: List[float] = Field(default_factory=lambda: [1.0])
    sin: List[float] = Field(default_factory=list)

    @field_validator("cos", "sin")
    @classmethod
    def validate_degree(cls, v):
        if len(v) > settings.fourier_degree + 1:
            raise ValueError(f"Fourier degree exceeds the configured maximum {settings.fourier_degree}")
        return v

    def _coeffs(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = max(len(self.cos), len(self.sin), 1)
        a = np.zeros(m)
        b = np.zeros(m)
        a[:len(self.cos)] = self.cos
        b[:len(self.sin)] = self.sin
        b[0] = 0.0
        return np.arange(m, dtype=float), a, b

    def _series(self, theta: np.ndarray, order: int) -> np.ndarray:
        k, a, b = self._coeffs()
        theta = np.asarray(theta, dtype=float)
        kt = theta[..., None] * k
        c, s = np.cos(kt), np.sin(kt)
        if order == 0:
            terms = a * c + b * s
        elif order == 1:
            terms = k * (-a * s + b * c)
        else:
            terms = -(k * k) * (a * c + b * s)
        return np.sum(terms, axis=-1)

    def phi(self, theta):
        return self._series(theta, 0)

    def dphi(self, theta):
        return self._series(theta, 1)

    def d2phi(self, theta):
        return self._series(theta, 2)

    def combine(self, other: "FourierEntropy", a: float, b: float) -> "FourierEntropy":
        """Generator of a*Phi + b*other."""
        m = max(len(self.cos), len(other.cos), len(self.sin), len(other.sin))
        pad = lambda v: np.pad(np.asarray(v, dtype=float), (0, m - len(v)))  # noqa: E731
        return FourierEntropy(
            cos=list(a * pad(self.cos) + b * pad(other.cos)),
            sin=list(a * pad(self.sin) + b * pad(other.sin)),
        )

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int) -> "FourierEntropy":
        return cls(
            cos=list(rng.uniform(-1.0, 1.0, degree + 1)),
            sin=[0.0] + list(rng.uniform(-1.0, 1.0, degree)),
        )

    def describe(self) -> Dict[str, Any]:
        return {"type": self.type, "coeffs": {"cos": list(self.cos), "sin": list(self.sin)}}


def _wrap(angle: np.ndarray) -> np.ndarray:
    """Map angles to [-π, π)."""
    return np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


class SmoothedElementaryEntropy(Entropy):
    """
    Elementary generator cos(θ-θ0) 1_{|θ-θ0|<π/2} smoothed by the raised-cosine
    kernel K(τ) = (1 + cos(cτ)) / (2w) on |τ| <= w, with w = π/(4k), c = π/w.
    """

    type: Literal["smoothed-elementary"] = "smoothed-elementary"
    theta0: float = 0.0
    k: int = Field(default=1, ge=1)

    @property
    def half_width(self) -> float:
        return np.pi / (4.0 * self.k)

    def _kernel(self, tau: np.ndarray) -> np.ndarray:
        w = self.half_width
        c = np.pi / w
        tau = np.asarray(tau, dtype=float)
        return np.where(np.abs(tau) <= w, (1.0 + np.cos(c * tau)) / (2.0 * w), 0.0)

    def _limits(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        psi = _wrap(np.asarray(theta, dtype=float) - self.theta0)
        w = self.half_width
        lo = np.maximum(-w, psi - np.pi / 2.0)
        hi = np.minimum(w, psi + np.pi / 2.0)
        return psi, lo, hi

    def _antiderivative_cos(self, psi, tau):
        w = self.half_width
        c = np.pi / w
        return (
            -np.sin(psi - tau)
            + 0.5 * (np.sin(psi + (c - 1.0) * tau) / (c - 1.0) - np.sin(psi - (c + 1.0) * tau) / (c + 1.0))
        ) / (2.0 * w)

    def _antiderivative_sin(self, psi, tau):
        # primitive of -K(τ) sin(ψ-τ)
        w = self.half_width
        c = np.pi / w
        return (
            -np.cos(psi - tau)
            - 0.5 * (-np.cos(psi + (c - 1.0) * tau) / (c - 1.0) + np.cos(psi - (c + 1.0) * tau) / (c + 1.0))
        ) / (2.0 * w)

    def phi(self, theta):
        psi, lo, hi = self._limits(theta)
        val = self._antiderivative_cos(psi, hi) - self._antiderivative_cos(psi, lo)
        return np.where(lo < hi, val, 0.0)

    def dphi(self, theta):
        psi, lo, hi = self._limits(theta)
        val = self._antiderivative_sin(psi, hi) - self._antiderivative_sin(psi, lo)
        return np.where(lo < hi, val, 0.0)

    def d2phi(self, theta):
        psi = _wrap(np.asarray(theta, dtype=float) - self.theta0)
        return (
            -self.phi(theta)
            + self._kernel(_wrap(psi - np.pi / 2.0))
            + self._kernel(_wrap(psi + np.pi / 2.0))
        )

    def describe(self) -> Dict[str, Any]:
        return {"type": self.type, "theta0": self.theta0, "k": self.k}


class ElementaryEntropy(BaseModel):
    """Phi^ξ(z) = ξ for z.ξ > 0, 0 otherwise."""

    model_config = ConfigDict(frozen=True)

    type: Literal["elementary"] = "elementary"
    theta0: float = 0.0

    @property
    def xi(self) -> np.ndarray:
        return np.array([np.cos(self.theta0), np.sin(self.theta0)])

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        active = (z @ self.xi) > 0.0
        return active[..., None] * self.xi

    def phi(self, theta: np.ndarray) -> np.ndarray:
        psi = _wrap(np.asarray(theta, dtype=float) - self.theta0)
        return np.where(np.abs(psi) < np.pi / 2.0, np.cos(psi), 0.0)

    def dphi(self, theta: np.ndarray) -> np.ndarray:
        psi = _wrap(np.asarray(theta, dtype=float) - self.theta0)
        return np.where(np.abs(psi) < np.pi / 2.0, -np.sin(psi), 0.0)

    def smoothed(self, k: int) -> SmoothedElementaryEntropy:
        return SmoothedElementaryEntropy(theta0=self.theta0, k=k)

    def describe(self) -> Dict[str, Any]:
        return {"type": self.type, "theta0": self.theta0}


def from_fourier(cos: List[float], sin: Optional[List[float]] = None) -> FourierEntropy:
    return FourierEntropy(cos=list(cos), sin=list(sin or []))


def approximate_elementary(theta0: float, k: int) -> SmoothedElementaryEntropy:
    return SmoothedElementaryEntropy(theta0=theta0, k=k)


AnyEntropy = Union[FourierEntropy, SmoothedElementaryEntropy, ElementaryEntropy]


class EntropyDescription(BaseModel):
    """JSON entropy description {type, coeffs?|theta0?, k?}."""

    type: Literal["fourier", "elementary", "smoothed-elementary"]
    coeffs: Optional[Dict[str, List[float]]] = None
    theta0: float = 0.0
    k: Optional[int] = None

    def build(self) -> AnyEntropy:
        if self.type == "fourier":
            coeffs = self.coeffs or {"cos": [1.0]}
            return FourierEntropy(cos=coeffs.get("cos", []), sin=coeffs.get("sin", []))
        if self.type == "elementary":
            return ElementaryEntropy(theta0=self.theta0)
        if self.k is None:
            raise ValidationFailure("smoothed-elementary entropy needs a smoothing level k")
        return SmoothedElementaryEntropy(theta0=self.theta0, k=self.k)


_description_adapter = TypeAdapter(EntropyDescription)


def load_entropy(path: Union[str, Path]) -> AnyEntropy:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return _description_adapter.validate_python(data).build()


def save_entropy(entropy: AnyEntropy, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(entropy.describe(), sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Extension off the circle
# ---------------------------------------------------------------------------


def eta(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: smoothstep up on [1/2, 3/4], 1 on [3/4, 3/2], down on [3/2, 2]."""
    r = np.asarray(r, dtype=float)
    up = smoothstep((r - 0.5) / 0.25)
    down = smoothstep((2.0 - r) / 0.5)
    return np.where(r <= 1.0, up, down)


def eta_derivative(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    up = smoothstep_derivative((r - 0.5) / 0.25) / 0.25
    down = -smoothstep_derivative((2.0 - r) / 0.5) / 0.5
    return np.where(r <= 1.0, up, down)


class ExtendedEntropy(BaseModel):
    """Phi~(z) = eta(|z|) Phi(z/|z|) with its Jacobian, gamma~ and Psi."""

    model_config = ConfigDict(frozen=True)

    base: Union[FourierEntropy, SmoothedElementaryEntropy]

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        r, theta, _, _ = _frame(z)
        return eta(r)[..., None] * self.base.on_circle(theta)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """D Phi~(z) as (..., 2, 2): radial part ⊗ e plus (1/r) angular part ⊗ e^⊥."""
        r, theta, e, ep = _frame(z)
        phi = self.base.phi(theta)[..., None]
        d1 = self.base.dphi(theta)[..., None]
        d2 = self.base.d2phi(theta)[..., None]
        radial = eta_derivative(r)[..., None] * (phi * e + d1 * ep)
        safe_r = np.where(r > 0.0, r, 1.0)
        angular = (eta(r) / safe_r)[..., None] * (d1 * e + phi * ep + d2 * ep - d1 * e)
        return radial[..., :, None] * e[..., None, :] + angular[..., :, None] * ep[..., None, :]

    def gamma_tilde(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)
        zp = perp(z)
        d = self.jacobian(z)
        val = np.einsum("...i,...ij,...j->...", zp, d, zp) / np.where(r2 > 0.0, r2, 1.0)
        return np.where(r2 < 0.25, 0.0, val)

    def psi(self, z: np.ndarray) -> np.ndarray:
        """Psi(z) = (-D Phi~(z) z + gamma~(z) z) / (2|z|^2), zero for |z| < 1/2."""
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)
        d = self.jacobian(z)
        g = self.gamma_tilde(z)
        val = (-np.einsum("...ij,...j->...i", d, z) + g[..., None] * z) / (2.0 * np.where(r2 > 0.0, r2, 1.0))[..., None]
        return np.where((r2 < 0.25)[..., None], 0.0, val)

    def psi_jacobian(self, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
        """D Psi(z) by central differences, (..., 2, 2) with [i, j] = d Psi_i / d z_j."""
        z = np.asarray(z, dtype=float)
        cols = []
        for j in range(2):
            dz = np.zeros(2)
            dz[j] = step
            cols.append((self.psi(z + dz) - self.psi(z - dz)) / (2.0 * step))
        return np.stack(cols, axis=-1)

    def decomposition_residual(self, z: np.ndarray) -> float:
        """max ||D Phi~ + 2 Psi ⊗ z - gamma~ Id|| over the sampled z."""
        z = np.asarray(z, dtype=float)
        d = self.jacobian(z)
        rebuilt = -2.0 * self.psi(z)[..., :, None] * z[..., None, :] + self.gamma_tilde(z)[..., None, None] * np.eye(2)
        return float(np.max(np.linalg.norm(d - rebuilt, axis=(-2, -1))))

    def tangency_defect(self, z: np.ndarray) -> float:
        """max |z . D Phi~(z) z^⊥|."""
        z = np.asarray(z, dtype=float)
        return float(np.max(np.abs(np.einsum("...i,...ij,...j->...", z, self.jacobian(z), perp(z)))))


def annulus_samples(rng: np.random.Generator, count: int, r_min: float = 0.6, r_max: float = 1.4) -> np.ndarray:
    r = rng.uniform(r_min, r_max, count)
    t = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)


# ---------------------------------------------------------------------------
# Productions
# ---------------------------------------------------------------------------


def entropy_production(entropy: Union[AnyEntropy, ExtendedEntropy], u: GridField2, zeta: TestBump) -> float:
    """Weak entropy production -∫ Phi(u) . grad(zeta), composed at nodes."""
    flux = entropy.evaluate(u.values)
    get_metrics_collector().increment_operation("entropy_production")
    return flux_pairing(flux, u.spec.x_coords(), u.spec.y_coords(), zeta, settings.support_margin_cells)


class ProductionReport(BaseModel):
    entropy: Dict[str, Any]
    zeta: TestBump
    h: float
    eps: Optional[float] = None
    I: float
    II: float
    total: float
    residual: float = Field(..., description="total - (I - II)")


def production_decomposition(
    extended: ExtendedEntropy,
    u: GridField2,
    eps: float,
    zeta: TestBump,
) -> ProductionReport:
    """
    Split ∫ zeta div[Phi~(u_eps)] into
        I  = ∫ zeta div[Psi(u_eps) (1 - |u_eps|^2)]  (paired against grad zeta),
        II = ∫ zeta (1 - |u_eps|^2) div[Psi(u_eps)],
    with the defect taken in commutator form.
    """
    ue = mollify(u, eps)
    d = defect(u, eps)
    _, grad_ue = mollify_gradient(u, eps)
    x = ue.spec.x_coords()
    y = ue.spec.y_coords()
    margin = settings.support_margin_cells

    total = flux_pairing(extended.evaluate(ue.values), x, y, zeta, margin)
    psi = extended.psi(ue.values)
    term_i = flux_pairing(psi * d.values[..., None], x, y, zeta, margin)
    # div Psi(u_eps) = Σ_ij dPsi_i/dz_j (u_eps) d_i (u_eps)_j
    div_psi = np.einsum("...ij,...ji->...", extended.psi_jacobian(ue.values), grad_ue)
    term_ii = scalar_pairing(d.values * div_psi, x, y, zeta, margin)

    get_metrics_collector().increment_operation("production_decomposition")
    logger.data("Production decomposition", eps=eps, I=term_i, II=term_ii, total=total)
    return ProductionReport(
        entropy=extended.base.describe(), zeta=zeta, h=u.spec.h, eps=eps,
        I=term_i, II=term_ii, total=total, residual=total - (term_i - term_ii),
    )
