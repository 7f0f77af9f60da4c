import numpy as np
import pytest
from pydantic import ValidationError

from eikolab.core.config import get_settings
from eikolab.core.errors import FieldFormatError, GeneratorError
from eikolab.tools.burgers import (
    BURGERS_KINDS,
    EntropyPair,
    SpaceTimeBump,
    SpaceTimeGrid,
    SpaceTimeWindow,
    balance_residual,
    cet_spacetime,
    classify_burgers,
    generate_burgers,
    kruzkov_family,
    oleinik_check,
    read_spacetime,
    regularized_energy,
    shock_dissipation_oracle,
    shock_speed,
    weak_residual,
    weighted_shock_length,
    write_spacetime,
)


def spacetime_grid(n=256):
    return SpaceTimeGrid.spanning((0.5, 1.5), (-1.0, 1.0), n, n)


@pytest.fixture(scope="module")
def grid():
    return spacetime_grid()


@pytest.fixture(scope="module")
def shock(grid):
    return generate_burgers("shock", {"vl": 1.0, "vr": 0.0}, grid)


@pytest.fixture(scope="module")
def rarefaction(grid):
    return generate_burgers("rarefaction", {"vl": -1.0, "vr": 1.0}, grid)


@pytest.fixture(scope="module")
def nonentropic(grid):
    return generate_burgers("nonentropic-shock", {"vl": 0.0, "vr": 1.0}, grid)


# centered on the shock path s = t / 2 at t = 1
ON_SHOCK = SpaceTimeBump(t_center=1.0, s_center=0.5, radius=0.4)


def test_grid_spanning():
    g = SpaceTimeGrid.spanning((0.0, 1.0), (-1.0, 1.0), 5, 9)
    assert g.dt == pytest.approx(0.25)
    assert g.ds == pytest.approx(0.25)
    assert g.s_max == pytest.approx(1.0)
    t, s = g.mesh()
    assert t.shape == (5, 9)
    assert t[1, 0] == pytest.approx(0.25)
    assert s[0, 1] == pytest.approx(-0.75)


class TestEntropyPairs:
    @pytest.mark.parametrize(
        "pair",
        [
            EntropyPair.energy(),
            EntropyPair.kruzkov(0.3),
            EntropyPair.polynomial([0.0, 0.1, 1.0, 0.0, 0.5]),
            EntropyPair.energy(flux="eikonal_plus"),
            EntropyPair.kruzkov(-0.2, flux="eikonal_minus"),
        ],
    )
    def test_flux_consistency(self, pair):
        assert pair.consistency_defect() < 1e-6

    def test_energy_flux(self):
        w = np.array([-0.5, 0.0, 0.7])
        np.testing.assert_allclose(EntropyPair.energy().q(w), w ** 3 / 3.0)

    def test_invalid_pairs(self):
        with pytest.raises(ValidationError):
            EntropyPair(kind="kruzkov")
        with pytest.raises(ValidationError, match="convex"):
            EntropyPair.polynomial([0.0, 0.0, -1.0])

    def test_kruzkov_family_levels(self, shock):
        family = kruzkov_family(shock, count=5)
        assert [p.k for p in family] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


class TestOracles:
    def test_energy_dissipation_of_unit_shock(self):
        assert shock_speed(1.0, 0.0) == pytest.approx(0.5)
        assert shock_dissipation_oracle(1.0, 0.0, EntropyPair.energy()) == pytest.approx(-1.0 / 12.0)

    @pytest.mark.parametrize("k", [0.2, 0.5, 0.9])
    def test_kruzkov_production_of_nonentropic_shock(self, k):
        assert shock_dissipation_oracle(0.0, 1.0, EntropyPair.kruzkov(k)) == pytest.approx(k * (1.0 - k))

    def test_energy_balance_matches_oracle(self, shock):
        length = weighted_shock_length(ON_SHOCK, 0.0, 0.5)
        expected = -length / 12.0
        assert balance_residual(shock, EntropyPair.energy(), ON_SHOCK) == pytest.approx(expected, rel=0.1)
        assert abs(weak_residual(shock, ON_SHOCK)) < 1e-2

    def test_nonentropic_shock_produces_entropy(self, nonentropic):
        length = weighted_shock_length(ON_SHOCK, 0.0, 0.5)
        residual = balance_residual(nonentropic, EntropyPair.kruzkov(0.5), ON_SHOCK)
        assert residual == pytest.approx(0.25 * length, rel=0.1)

    def test_rarefaction_balances_vanish(self, rarefaction):
        in_fan = SpaceTimeBump(t_center=1.0, s_center=0.0, radius=0.4)
        assert abs(weak_residual(rarefaction, in_fan)) <= 0.01
        assert abs(balance_residual(rarefaction, EntropyPair.energy(), in_fan)) <= 0.01

    def test_shock_dissipates_every_convex_entropy(self, shock):
        pairs = [
            EntropyPair.energy(),
            EntropyPair.polynomial([0.0, 0.0, 1.0, 0.0, 0.5]),
            EntropyPair.polynomial([0.2, -0.5, 0.7, 0.1]),
            *kruzkov_family(shock, count=9),
        ]
        tol = get_settings().balance_tol
        for pair in pairs:
            assert balance_residual(shock, pair, ON_SHOCK) <= tol, pair.describe()

    @pytest.mark.slow
    def test_energy_balance_on_a_fine_grid(self):
        v = generate_burgers("shock", {"vl": 1.0, "vr": 0.0}, spacetime_grid(512))
        expected = -weighted_shock_length(ON_SHOCK, 0.0, 0.5) / 12.0
        assert balance_residual(v, EntropyPair.energy(), ON_SHOCK) == pytest.approx(expected, rel=0.05)


class TestGenerators:
    def test_kinds(self):
        assert set(BURGERS_KINDS) == {"constant", "shock", "nonentropic-shock", "rarefaction", "smooth"}

    def test_rarefaction_fan(self, rarefaction):
        t, s = rarefaction.grid.mesh()
        np.testing.assert_allclose(rarefaction.values, np.clip(s / t, -1.0, 1.0))
        assert oleinik_check(rarefaction, 1.0, (-0.5, 0.5)) == pytest.approx(1.0, rel=1e-2)

    def test_oleinik_separates_shocks(self, shock, nonentropic):
        assert oleinik_check(shock, 1.0) == pytest.approx(0.0)
        assert oleinik_check(nonentropic, 1.0) > 50.0

    def test_nonentropic_oleinik_grows_under_refinement(self, nonentropic):
        coarse = generate_burgers("nonentropic-shock", {"vl": 0.0, "vr": 1.0}, spacetime_grid(128))
        # the front never lands on a node of either grid, so the quotient is 1 / ds
        assert oleinik_check(nonentropic, 1.0) >= 2.0 * oleinik_check(coarse, 1.0)

    def test_smooth_solves_the_implicit_equation(self):
        grid = SpaceTimeGrid.spanning((0.0, 0.5), (-1.0, 1.0), 32, 64)
        v = generate_burgers("smooth", {"amplitude": 0.5, "wavenumber": np.pi}, grid)
        t, s = grid.mesh()
        np.testing.assert_allclose(v.values, 0.5 * np.sin(np.pi * (s - t * v.values)), atol=1e-12)

    @pytest.mark.parametrize(
        "kind, params",
        [
            ("smooth", {"amplitude": 0.5, "wavenumber": np.pi}),
            ("shock", {"vl": 0.0, "vr": 1.0}),
            ("nonentropic-shock", {"vl": 1.0, "vr": 0.0}),
            ("rarefaction", {"vl": 1.0, "vr": -1.0}),
            ("wave", None),
        ],
    )
    def test_generator_errors(self, grid, kind, params):
        with pytest.raises(GeneratorError):
            generate_burgers(kind, params, grid)

    def test_rarefaction_needs_positive_times(self):
        grid = SpaceTimeGrid.spanning((0.0, 1.0), (-1.0, 1.0), 8, 8)
        with pytest.raises(GeneratorError, match="t > 0"):
            generate_burgers("rarefaction", None, grid)


class TestFiles:
    def test_bitwise(self, tmp_path, shock):
        path = tmp_path / "shock.burg"
        write_spacetime(shock, path)
        back = read_spacetime(path)
        assert back.grid == shock.grid
        np.testing.assert_array_equal(back.values, shock.values)
        assert back.provenance == "file"
        assert path.read_text().startswith("BURG1 256 256 ")

    @pytest.mark.parametrize(
        "text, message",
        [
            ("BURG2 2 2 0 0 1 1\n1\n2\n3\n4\n", "malformed header"),
            ("BURG1 2 2 0 0 1 1\n1\n2\n3\n", "value count mismatch"),
            ("BURG1 2 2 0 0 1 1\n1\n2\n3\nfour\n", "malformed value"),
        ],
    )
    def test_format_errors(self, tmp_path, text, message):
        path = tmp_path / "bad.burg"
        path.write_text(text)
        with pytest.raises(FieldFormatError, match=message):
            read_spacetime(path)


class TestCommutator:
    def test_smooth_field_decays(self, rarefaction, shock):
        window = SpaceTimeWindow(t_min=0.6, t_max=1.4, s_min=-0.4, s_max=0.4)
        ds = rarefaction.grid.ds
        smooth = [cet_spacetime(rarefaction, f * ds, window).value for f in (8.0, 2.0)]
        assert smooth[1] < 0.5 * smooth[0]
        shock_window = SpaceTimeWindow(t_min=0.6, t_max=1.4, s_min=0.1, s_max=0.9)
        jumpy = [cet_spacetime(shock, f * ds, shock_window) for f in (8.0, 2.0)]
        assert jumpy[1].value > 0.5 * jumpy[0].value
        assert all(r.bound_holds for r in jumpy)

    def test_regularized_energy_identity(self, shock):
        report = regularized_energy(shock, 8 * shock.grid.ds, ON_SHOCK)
        scale = max(abs(report.J_eps), abs(report.remainder), abs(report.half_I_eps))
        assert abs(report.identity_residual) <= 0.1 * scale
        assert report.J_eps < 0.0


class TestClassifyBurgers:
    def test_shock_is_entropic_but_not_shock_free(self, shock):
        window = SpaceTimeWindow(t_min=0.6, t_max=1.4, s_min=0.1, s_max=0.9)
        report = classify_burgers(shock, [window])
        assert report.entropy_solution
        assert not report.shock_free
        assert not report.cet_decays
        assert report.diagnostics_agree
        assert report.windows[0].energy < 0.0
        assert 0.0 < report.l4_norm <= 2.0 ** 0.25

    def test_rarefaction_is_shock_free(self, rarefaction):
        window = SpaceTimeWindow(t_min=0.6, t_max=1.4, s_min=-0.4, s_max=0.4)
        report = classify_burgers(rarefaction, [window])
        assert report.entropy_solution
        assert report.shock_free
        assert report.cet_decays
        assert report.diagnostics_agree
        assert report.oleinik == pytest.approx(1.0, rel=1e-2)

    def test_smooth_before_breaking_is_shock_free(self):
        grid = SpaceTimeGrid.spanning((0.0, 0.5), (-1.0, 1.0), 128, 256)
        v = generate_burgers("smooth", {"amplitude": 0.5, "wavenumber": np.pi}, grid)
        window = SpaceTimeWindow(t_min=0.1, t_max=0.4, s_min=-0.6, s_max=0.6)
        report = classify_burgers(v, [window])
        assert report.shock_free
        assert report.entropy_solution
        assert report.cet_decays
        assert report.diagnostics_agree

    def test_nonentropic_shock_is_flagged(self, nonentropic):
        window = SpaceTimeWindow(t_min=0.6, t_max=1.4, s_min=0.1, s_max=0.9)
        report = classify_burgers(nonentropic, [window])
        assert not report.entropy_solution
        assert report.kruzkov_violations > 0
