import json

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate

from eikolab.core.errors import ValidationFailure
from eikolab.tools.entropy import (
    ElementaryEntropy,
    Entropy,
    EntropyDescription,
    ExtendedEntropy,
    FourierEntropy,
    SmoothedElementaryEntropy,
    annulus_samples,
    approximate_elementary,
    entropy_production,
    eta,
    from_fourier,
    load_entropy,
    production_decomposition,
    save_entropy,
)
from eikolab.tools.fields import GridSpec, generate
from eikolab.tools.quadrature import TestBump
from eikolab.tools.regularity import observed_order

SIN2 = from_fourier([0.0], [0.0, 0.0, 1.0])


@pytest.fixture
def line_bump():
    return TestBump(center=(0.3, 0.0), radius=0.25)


@pytest.fixture(scope="module")
def vortex_ladder():
    """Vortex on h = 1/32, 1/64, 1/128."""
    return [generate("vortex", None, GridSpec.square(n, 1.0)) for n in (65, 129, 257)]


def test_fourier_series_derivatives():
    entropy = from_fourier([0.5, 0.0, 0.2], [0.0, 1.0])
    theta = np.linspace(-np.pi, np.pi, 17)
    np.testing.assert_allclose(entropy.phi(theta), 0.5 + 0.2 * np.cos(2 * theta) + np.sin(theta))
    np.testing.assert_allclose(entropy.dphi(theta), -0.4 * np.sin(2 * theta) + np.cos(theta), atol=1e-14)
    np.testing.assert_allclose(entropy.d2phi(theta), -0.8 * np.cos(2 * theta) - np.sin(theta), atol=1e-14)


def test_fourier_degree_is_capped():
    with pytest.raises(ValidationError):
        FourierEntropy(cos=[1.0] * 40)


@pytest.mark.parametrize("entropy", [SIN2, from_fourier([1.0, 0.3, -0.2], [0.0, 0.4]), approximate_elementary(0.7, 2)])
def test_orthogonality_defect_vanishes(entropy):
    assert entropy.orthogonality_defect() < 1e-12


def test_smoothed_elementary_matches_convolution():
    entropy = SmoothedElementaryEntropy(theta0=0.4, k=2)
    w = entropy.half_width

    def elementary(psi):
        psi = (psi + np.pi) % (2 * np.pi) - np.pi
        return np.cos(psi) if abs(psi) < np.pi / 2 else 0.0

    for theta in [0.4, 1.2, 0.4 + np.pi / 2, 2.1, -1.0, 3.0]:
        expected, _ = integrate.quad(
            lambda tau: float(entropy._kernel(tau)) * elementary(theta - 0.4 - tau), -w, w, limit=200, epsabs=1e-12
        )
        assert float(entropy.phi(theta)) == pytest.approx(expected, abs=1e-9)


def test_smoothed_elementary_derivatives():
    entropy = SmoothedElementaryEntropy(theta0=-0.3, k=3)
    theta = np.linspace(-3.0, 3.0, 41)
    step = 1e-5
    fd1 = (entropy.phi(theta + step) - entropy.phi(theta - step)) / (2 * step)
    fd2 = (entropy.dphi(theta + step) - entropy.dphi(theta - step)) / (2 * step)
    np.testing.assert_allclose(entropy.dphi(theta), fd1, atol=1e-6)
    np.testing.assert_allclose(entropy.d2phi(theta), fd2, atol=1e-5)
    # gamma is the nonnegative smoothing kernel at ±π/2
    assert float(np.min(entropy.gamma(theta))) >= -1e-12


def test_smoothing_approaches_elementary():
    theta = np.array([0.0, 0.5, 1.0, 2.5])
    exact = ElementaryEntropy(theta0=0.0).phi(theta)
    coarse = np.max(np.abs(approximate_elementary(0.0, 1).phi(theta) - exact))
    fine = np.max(np.abs(approximate_elementary(0.0, 8).phi(theta) - exact))
    assert fine < coarse


def test_elementary_evaluate():
    entropy = ElementaryEntropy(theta0=np.pi / 4)
    z = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]])
    out = entropy.evaluate(z)
    np.testing.assert_allclose(out[0], [np.sqrt(0.5), np.sqrt(0.5)])
    np.testing.assert_allclose(out[1:], 0.0)


class TestExtension:
    def test_cutoff(self):
        np.testing.assert_allclose(eta(np.array([0.2, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0])), [0, 0, 1, 1, 1, 0, 0])

    def test_gamma_tilde_on_circle(self):
        extended = ExtendedEntropy(base=SIN2)
        theta = np.linspace(0.0, 2 * np.pi, 25)
        z = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        np.testing.assert_allclose(extended.gamma_tilde(z), SIN2.gamma(theta), atol=1e-12)
        np.testing.assert_allclose(extended.evaluate(z), SIN2.on_circle(theta), atol=1e-13)

    @pytest.mark.parametrize("base", [SIN2, approximate_elementary(1.1, 2)])
    def test_decomposition_identity(self, base):
        extended = ExtendedEntropy(base=base)
        z = annulus_samples(np.random.default_rng(7), 500)
        assert extended.decomposition_residual(z) < 1e-8
        assert extended.tangency_defect(z) < 1e-10

    @pytest.mark.parametrize("seed", range(10))
    def test_decomposition_identity_for_random_entropies(self, seed):
        rng = np.random.default_rng(seed)
        extended = ExtendedEntropy(base=FourierEntropy.random(rng, int(rng.integers(1, 9))))
        z = annulus_samples(rng, 1000)
        assert extended.decomposition_residual(z) <= 1e-8

    def test_psi_vanishes_inside(self):
        extended = ExtendedEntropy(base=SIN2)
        np.testing.assert_array_equal(extended.psi(np.array([[0.3, 0.1], [0.0, 0.0]])), 0.0)


class TestProduction:
    def test_jump_production(self, jump, line_bump):
        length = line_bump.line_integral((0.0, 0.0), (1.0, 0.0))
        # [Phi(e1) - Phi(-e1)] . e2 = phi'(0) + phi'(π) = 4
        assert entropy_production(SIN2, jump, line_bump) == pytest.approx(4.0 * length, rel=0.03)

    def test_elementary_production_on_jump(self, jump, line_bump):
        length = line_bump.line_integral((0.0, 0.0), (1.0, 0.0))
        value = entropy_production(ElementaryEntropy(theta0=np.pi / 4), jump, line_bump)
        assert value == pytest.approx(length / np.sqrt(2.0), rel=0.03)

    def test_smooth_vortex_produces_nothing(self, vortex):
        zeta = TestBump(center=(0.5, 0.3), radius=0.25)
        assert abs(entropy_production(SIN2, vortex, zeta)) < 2e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("family", ["fourier", "elementary"])
    def test_vortex_production_vanishes_under_refinement(self, vortex_ladder, family):
        rng = np.random.default_rng(2024)
        if family == "fourier":
            entropies = [FourierEntropy.random(rng, int(rng.integers(1, 9))) for _ in range(10)]
        else:
            entropies = [approximate_elementary(2 * np.pi * j / 16, 2) for j in range(16)]
        zeta = TestBump(center=(0.5, 0.3), radius=0.25)
        hs = [u.spec.h for u in vortex_ladder]
        worst = [max(abs(entropy_production(e, u, zeta)) for e in entropies) for u in vortex_ladder]
        assert worst[-1] <= 0.02
        # both families sit near roundoff on the finest grid
        if worst[-1] > 1e-12:
            assert observed_order([hs[0], hs[-1]], [worst[0], worst[-1]]) >= 1.0

    def test_smoothing_gap_closes_on_jump(self, jump, line_bump):
        exact = entropy_production(ElementaryEntropy(theta0=np.pi / 4), jump, line_bump)
        gaps = [
            abs(entropy_production(approximate_elementary(np.pi / 4, k), jump, line_bump) - exact)
            for k in (1, 2, 4, 8)
        ]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 0.01 * abs(exact)

    def test_bilinear_in_the_entropy(self, jump, line_bump):
        a = from_fourier([0.2, 0.1], [0.0, 0.0, 1.0])
        b = from_fourier([0.0, 0.5, 0.3], [0.0, -0.2])
        combined = a.combine(b, 2.0, -0.5)
        expected = 2.0 * entropy_production(a, jump, line_bump) - 0.5 * entropy_production(b, jump, line_bump)
        assert entropy_production(combined, jump, line_bump) == pytest.approx(expected, abs=1e-12)


class TestDecomposition:
    def test_jump_total_is_eps_independent(self, jump, line_bump):
        length = line_bump.line_integral((0.0, 0.0), (1.0, 0.0))
        extended = ExtendedEntropy(base=SIN2)
        reports = {}
        for factor in (8.0, 4.0):
            report = production_decomposition(extended, jump, factor * jump.spec.h, line_bump)
            assert report.total == pytest.approx(4.0 * length, rel=0.05)
            assert report.residual == report.total - (report.I - report.II)
            reports[factor] = report
        assert abs(reports[8.0].residual) <= 0.1 * abs(reports[8.0].total)

    def test_vortex_terms_are_small(self, vortex):
        zeta = TestBump(center=(0.5, 0.3), radius=0.25)
        report = production_decomposition(ExtendedEntropy(base=SIN2), vortex, 4 * vortex.spec.h, zeta)
        assert abs(report.total) < 1e-2
        assert report.entropy["type"] == "fourier"
        assert report.eps == pytest.approx(4 * vortex.spec.h)

    def test_vortex_second_term_vanishes_along_eps_ladder(self, vortex):
        zeta = TestBump(center=(0.5, 0.3), radius=0.25)
        extended = ExtendedEntropy(base=SIN2)
        eps = [factor * vortex.spec.h for factor in (8.0, 4.0, 2.0)]
        second = [abs(production_decomposition(extended, vortex, e, zeta).II) for e in eps]
        assert second[0] > second[1] > second[2]
        # the defect is O(eps^2) on a smooth unit field
        assert observed_order(eps, second) >= 1.5

    def test_jump_second_term_stays_away_from_zero(self, jump, line_bump):
        extended = ExtendedEntropy(base=SIN2)
        reports = [
            production_decomposition(extended, jump, f * jump.spec.h, line_bump) for f in (8.0, 4.0)
        ]
        for report in reports:
            assert abs(report.II) >= 0.5 * abs(report.total)
        assert abs(reports[1].II) >= 0.5 * abs(reports[0].II)


class TestDescriptions:
    @pytest.mark.parametrize(
        "entropy",
        [from_fourier([1.0, 0.25], [0.0, -0.5]), ElementaryEntropy(theta0=0.3), SmoothedElementaryEntropy(theta0=1.0, k=4)],
    )
    def test_save_and_load(self, tmp_path, entropy):
        path = tmp_path / "entropy.json"
        save_entropy(entropy, path)
        assert load_entropy(path) == entropy

    def test_smoothed_needs_k(self):
        with pytest.raises(ValidationFailure):
            EntropyDescription(type="smoothed-elementary", theta0=0.1).build()

    def test_unknown_type(self, tmp_path):
        path = tmp_path / "entropy.json"
        path.write_text(json.dumps({"type": "quartic"}))
        with pytest.raises(ValidationError):
            load_entropy(path)


def test_entropy_generator_must_be_complete():
    class Truncated(Entropy):
        def phi(self, theta):
            return np.cos(theta)

        def dphi(self, theta):
            return -np.sin(theta)

        def describe(self):
            return {"type": "truncated"}

    with pytest.raises(TypeError, match="d2phi"):
        Truncated()
