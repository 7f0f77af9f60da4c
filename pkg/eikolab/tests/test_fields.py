import numpy as np
import pytest

from eikolab.core.errors import FieldFormatError, GeneratorError, GridSpecError, NumericalContractError, SingularGridError
from eikolab.tools.fields import (
    GENERATOR_KINDS,
    GridField2,
    GridScalar,
    GridSpec,
    Window,
    circle_loop,
    divergence_weak,
    generate,
    gradient_from_stream,
    negate_half_plane,
    perp,
    read_field,
    read_scalar,
    rectangle_loop,
    write_field,
    write_scalar,
)
from eikolab.tools.quadrature import TestBump


def test_grid_spec_coordinates():
    spec = GridSpec(nx=3, ny=2, x0=1.0, y0=-1.0, h=0.5)
    np.testing.assert_allclose(spec.x_coords(), [1.0, 1.5, 2.0])
    np.testing.assert_allclose(spec.y_coords(), [-1.0, -0.5])
    assert spec.x_max == pytest.approx(2.0)
    assert spec.node_count == 6
    x, y = spec.mesh()
    assert x.shape == (2, 3)
    assert spec.points()[1, 2].tolist() == [2.0, -0.5]


def test_grid_spec_square_and_trim():
    spec = GridSpec.square(5, 1.0)
    assert spec.h == pytest.approx(0.5)
    assert spec.x0 == pytest.approx(-1.0)
    inner = spec.trimmed(1)
    assert (inner.nx, inner.ny) == (3, 3)
    assert inner.x0 == pytest.approx(-0.5)


def test_perp_convention():
    np.testing.assert_allclose(perp(np.array([1.0, 0.0])), [0.0, 1.0])
    np.testing.assert_allclose(perp(np.array([[0.0, 1.0]])), [[-1.0, 0.0]])


def test_field_shape_is_validated():
    spec = GridSpec(nx=2, ny=2, h=1.0)
    with pytest.raises(FieldFormatError):
        GridField2(spec=spec, values=np.zeros((2, 3, 2)))


def test_field_values_are_read_only(constant):
    with pytest.raises(ValueError):
        constant.values[0, 0, 0] = 2.0


def test_vortex_values():
    spec = GridSpec(nx=2, ny=2, x0=1.0, y0=0.0, h=1.0)
    u = generate("vortex", {"center": (0.0, 0.0)}, spec)
    assert u.unit
    np.testing.assert_allclose(u.values[0, 0], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(u.values[1, 0], [-1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)])
    reverse = generate("vortex", {"alpha": -1}, spec)
    np.testing.assert_allclose(reverse.values, -u.values)


def test_singular_node_half_shift():
    spec = GridSpec.square(5, 1.0)
    u = generate("vortex", None, spec)
    assert u.spec.x0 == pytest.approx(spec.x0 + 0.25)
    assert u.spec.y0 == pytest.approx(spec.y0 + 0.25)
    assert u.unit_defect() < 1e-14


def test_singular_after_shift_raises():
    spec = GridSpec(nx=4, ny=4, x0=0.0, y0=0.0, h=1.0)
    with pytest.raises(SingularGridError):
        generate("jump", {"angle": np.pi / 4}, spec)


def test_generator_errors():
    spec = GridSpec(nx=4, ny=4, x0=0.3, y0=0.3, h=1.0)
    with pytest.raises(GeneratorError):
        generate("spiral", None, spec)
    with pytest.raises(GeneratorError):
        generate("vortex", {"alpha": 2}, spec)
    with pytest.raises(GeneratorError):
        generate("distance", None, spec)
    assert set(GENERATOR_KINDS) == {"vortex", "distance", "jump", "constant", "loglog"}


def test_jump_sides(jump):
    x, y = jump.spec.mesh()
    upper = jump.values[y > 0]
    lower = jump.values[y < 0]
    np.testing.assert_allclose(upper, np.broadcast_to([1.0, 0.0], upper.shape))
    np.testing.assert_allclose(lower, np.broadcast_to([-1.0, 0.0], lower.shape))


def test_distance_to_point_is_vortex():
    spec = GridSpec.square(33, 1.0)
    d = generate("distance", {"points": [(0.0, 0.0)]}, spec)
    v = generate("vortex", None, spec)
    np.testing.assert_allclose(d.values, v.values, atol=1e-14)


def test_distance_polygon_is_unit():
    spec = GridSpec(nx=41, ny=21, x0=-1.0, y0=-0.5, h=0.05)
    # edges chosen so no node or half-shifted node sits on the medial axis
    square = [(-1.13, -0.57), (1.163, -0.57), (1.163, 0.61), (-1.13, 0.61)]
    u = generate("distance", {"polygons": [square]}, spec)
    assert u.unit
    # near the bottom edge the field runs along the edge
    np.testing.assert_allclose(np.abs(u.values[0, 20]), [1.0, 0.0], atol=1e-12)


def test_unit_contract(unit_square_spec):
    values = np.ones((unit_square_spec.ny, unit_square_spec.nx, 2))
    u = GridField2.from_values(unit_square_spec, values)
    assert not u.unit
    with pytest.raises(NumericalContractError):
        u.check_unit()


def test_divergence_weak_vortex_and_loglog(vortex, unit_square_spec):
    zeta = TestBump(center=(0.5, 0.3), radius=0.25)
    assert abs(divergence_weak(vortex, zeta)) < 1e-3
    loglog = generate("loglog", None, unit_square_spec)
    off_axis = TestBump(center=(0.15, 0.0), radius=0.1)
    assert abs(divergence_weak(loglog, off_axis)) > 3e-3


def test_gradient_from_stream_of_distance():
    spec = GridSpec(nx=41, ny=41, x0=0.5, y0=0.5, h=0.025)
    psi = GridScalar.from_function(spec, lambda x, y: np.hypot(x, y))
    u = gradient_from_stream(psi)
    x, y = spec.mesh()
    r = np.hypot(x, y)
    exact = np.stack([-y / r, x / r], axis=-1)
    np.testing.assert_allclose(u.values[1:-1, 1:-1], exact[1:-1, 1:-1], atol=1e-3)


def test_negate_half_plane(constant):
    flipped = negate_half_plane(constant, (-1.0, 0.0))
    x, _ = flipped.spec.mesh()
    np.testing.assert_allclose(flipped.values[x > 0][:, 0], -1.0)
    np.testing.assert_allclose(flipped.values[x < 0][:, 0], 1.0)
    assert flipped.unit


def test_sample_bilinear(vortex):
    pts = np.array([[0.5, 0.5], [5.0, 0.0]])
    out = vortex.sample(pts)
    np.testing.assert_allclose(out[0], [-1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)], atol=1e-3)
    assert np.all(np.isnan(out[1]))


def test_field_file_layout(tmp_path):
    path = tmp_path / "tiny.fld"
    path.write_text("EIKO1 2 2 0 0 0.5\n1 0\n0 1\n-1 0\n0 -1\n")
    u = read_field(path)
    assert (u.spec.nx, u.spec.ny, u.spec.h) == (2, 2, 0.5)
    np.testing.assert_array_equal(u.values[0, 1], [0.0, 1.0])
    np.testing.assert_array_equal(u.values[1, 0], [-1.0, 0.0])
    assert u.unit


def test_field_file_bitwise(tmp_path, vortex):
    path = tmp_path / "vortex.fld"
    write_field(vortex, path)
    back = read_field(path)
    assert back.spec == vortex.spec
    np.testing.assert_array_equal(back.values, vortex.values)
    assert path.read_text().startswith("EIKO1 129 129 ")


def test_scalar_file(tmp_path):
    spec = GridSpec(nx=3, ny=2, h=0.1)
    psi = GridScalar.from_function(spec, lambda x, y: x + 10 * y)
    path = tmp_path / "psi.sca"
    write_scalar(psi, path)
    np.testing.assert_array_equal(read_scalar(path).values, psi.values)


@pytest.mark.parametrize(
    "text, message",
    [
        ("EIKO2 2 2 0 0 0.5\n1 0\n0 1\n-1 0\n0 -1\n", "malformed header"),
        ("EIKO1 2 2 0 0\n1 0\n0 1\n-1 0\n0 -1\n", "malformed header"),
        ("EIKO1 2 2 0 0 0.5\n1 0\n0 1\n-1 0\n", "value count mismatch"),
        ("EIKO1 2 2 0 0 0.5\n1 0\n0 x\n-1 0\n0 -1\n", "malformed value"),
    ],
)
def test_field_file_errors(tmp_path, text, message):
    path = tmp_path / "bad.fld"
    path.write_text(text)
    with pytest.raises(FieldFormatError, match=message):
        read_field(path)


def test_grid_spec_checked_rejects_bad_spacing():
    with pytest.raises(GridSpecError, match="h"):
        GridSpec.checked(nx=2, ny=2, h=0.0)
    assert GridSpec.checked(nx=2, ny=2, h=0.5).h == 0.5


def test_window_mask_and_annulus(unit_square_spec):
    window = Window.annulus((0.0, 0.0), 0.25, 0.5)
    mask = window.node_mask(unit_square_spec)
    x, y = unit_square_spec.mesh()
    r = np.hypot(x, y)
    assert np.all((r[mask] >= 0.25) & (r[mask] <= 0.5))
    assert window.distance_to_boundary(unit_square_spec) == pytest.approx(0.5)


def test_loops():
    loop = circle_loop((0.0, 0.0), 1.0, 8)
    assert loop.shape == (8, 2)
    np.testing.assert_allclose(np.hypot(*loop.T), 1.0)
    spec = GridSpec(nx=4, ny=4, h=1.0)
    rect = rectangle_loop(spec, 0, 2, 0, 2)
    assert len(rect) == 8
    np.testing.assert_allclose(rect[0], [0.0, 0.0])


def test_gradient_from_stream_of_linear_stream():
    spec = GridSpec(nx=21, ny=17, x0=-0.5, y0=-0.4, h=0.05)
    u = gradient_from_stream(GridScalar.from_function(spec, lambda x, y: x))
    np.testing.assert_allclose(u.values[..., 0], 0.0, atol=1e-12)
    np.testing.assert_allclose(u.values[..., 1], 1.0, atol=1e-12)
    assert u.unit
    u.check_unit()


def test_gradient_from_stream_of_constant_stream():
    spec = GridSpec(nx=11, ny=11, h=0.1)
    u = gradient_from_stream(GridScalar.from_function(spec, lambda x, y: np.full_like(x, 2.5)))
    np.testing.assert_allclose(u.values, 0.0, atol=1e-14)
    assert not u.unit
    with pytest.raises(NumericalContractError, match="unit-length breach"):
        u.check_unit()


# medial axis (corner diagonals and a segment on y = 0) avoids the nodes of the
# centered and half-shifted grids used below
_RECTANGLE = [(-0.6, -0.4), (0.6, -0.4), (0.6, 0.4), (-0.6, 0.4)]


@pytest.mark.parametrize(
    "kind, params",
    [("vortex", None), ("jump", None), ("distance", {"polygons": [_RECTANGLE]})],
)
def test_divergence_weak_first_order_under_refinement(kind, params):
    # the bump straddles the creases of the distance field and misses the vortex core
    zeta = TestBump(center=(0.3, 0.15), radius=0.25)
    hs, values = [], []
    for n in (65, 129, 257):
        u = generate(kind, params, GridSpec.square(n, 1.0))
        hs.append(u.spec.h)
        values.append(abs(divergence_weak(u, zeta)))
    for h, value in zip(hs, values):
        assert value <= 8.0 * h
    assert values[-1] <= 0.02
