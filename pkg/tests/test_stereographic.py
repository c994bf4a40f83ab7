import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfelab import stereographic as sg
from mfelab.sphere_grid import SphereField, default_grid, evaluate

from conftest import cached_solution, random_field

GRID = default_grid()
ZERO = SphereField.zeros(GRID)
unit3 = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: 1e-3 < np.linalg.norm(v))


def test_project_examples():
    assert np.allclose(sg.project([0, 0, -1.0]), [0, 0])
    assert np.allclose(sg.project([1.0, 0, 0]), [1, 0])
    assert np.allclose(sg.inverse_project([0.0, 0.0]), [0, 0, -1])
    with pytest.raises(sg.PoleError):
        sg.project([0, 0, 1.0])


@given(unit3)
def test_roundtrip(v):
    x = np.asarray(v) / np.linalg.norm(v)
    if x[2] == 1.0:
        return
    assert np.max(np.abs(sg.inverse_project(sg.project(x)) - x)) < 1e-14


@given(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)))
def test_inverse_is_on_sphere_and_jacobian(y):
    x = sg.inverse_project(np.asarray(y))
    assert abs(np.linalg.norm(x) - 1) < 1e-14
    r2 = y[0] ** 2 + y[1] ** 2
    assert sg.pullback_jacobian(x) == pytest.approx((1 + r2) ** 2 / 4, rel=1e-9)


# -- the chain ----------------------------------------------------------------------

PTS = sg.planar_samples(1e3, 30, 16)


@pytest.mark.parametrize("alpha", [1 / 6, 1 / 3, 0.5, 1.0])
def test_zero_field_chain(alpha):
    w = sg.chain_to_w(ZERO, alpha)
    r2 = np.sum(PTS ** 2, axis=1)
    expect = (8 / alpha) / (1 + r2) ** 2
    assert np.max(np.abs(w.exp(PTS) - expect) / expect) < 1e-12
    if alpha == 1.0:
        assert np.allclose(w(PTS), np.log(8) - 2 * np.log1p(r2), atol=1e-12)


def test_w_at_origin():
    u = random_field(GRID, 2, degree=8)
    w = sg.chain_to_w(u, 0.4)
    assert w(np.zeros(2)) == pytest.approx(evaluate(u, [[0, 0, -1.0]])[0] + np.log(8 / 0.4),
                                           abs=1e-13)


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_literal_chain_matches(seed, alpha):
    u = random_field(GRID, seed, degree=6)
    y = sg.planar_samples(1e6, 30, 12)
    steps = sg.chain_steps(u, alpha, y)
    assert np.max(np.abs(steps["w"] - sg.chain_to_w(u, alpha)(y))) < 1e-9


def test_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        sg.chain_to_w(ZERO, 0.0)


# -- planar residual --------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0])
def test_planar_residual_zero(alpha):
    w = sg.chain_to_w(ZERO, alpha)
    assert sg.planar_residual_check(w) < 1e-9
    if alpha == 1.0:
        assert np.all(w.rhs(PTS) == 0)


def test_planar_residual_at_032_solution():
    _, out = cached_solution(0.32)
    w = sg.chain_to_w(out.solution, 0.32)
    assert sg.planar_residual_check(w) < 1e-6


def test_conformal_laplacian_matches_finite_differences():
    u = random_field(GRID, 9, degree=6)
    w = sg.chain_to_w(u, 0.5)
    y = sg.planar_samples(3.0, 8, 12)
    a = sg.planar_residual(w, y)
    b = sg.planar_residual(w, y, method="fd", h=1e-3)
    assert np.max(np.abs(a - b)) < 1e-6
    # a non-solution leaves a visible defect
    assert np.max(np.abs(a)) > 1e-3


# -- total mass -----------------------------------------------------------------------

@pytest.mark.parametrize("alpha,target", [(1 / 3, 24 * np.pi), (1.0, 8 * np.pi)])
def test_total_mass_zero(alpha, target):
    assert abs(sg.total_mass(sg.chain_to_w(ZERO, alpha)) - target) < 1e-8


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0))
def test_total_mass_of_normalized_fields(seed, alpha):
    from mfelab.mfe_core import normalize
    u = normalize(random_field(GRID, seed, degree=6))
    assert abs(sg.total_mass(sg.chain_to_w(u, alpha)) - 8 * np.pi / alpha) < 1e-6


def test_total_mass_planar_route():
    # independent route: polar quadrature on a large disk plus the analytic tail
    w = sg.chain_to_w(ZERO, 0.5)
    R = 50.0
    inner = sg.Disk(radius=R).integrate_planar(w.exp, n_r=400, n_t=8)
    tail = 16 * np.pi / (1 + R * R)          # int_{|y|>R} 16/(1+r^2)^2 dy
    assert inner + tail == pytest.approx(sg.total_mass(w), rel=1e-10)


# -- domains ------------------------------------------------------------------------

@pytest.mark.parametrize("c,r", [((0.0, 0.0), 1.0), ((0.7, -0.4), 0.5), ((2.0, 1.0), 3.0)])
def test_disk_area_two_ways(c, r):
    d = sg.Disk(c, r)
    one = lambda y: np.ones(len(y))
    assert d.integrate(one) == pytest.approx(d.area(), rel=1e-6)
    assert d.integrate_planar(one) == pytest.approx(d.area(), rel=1e-12)
    f = lambda y: np.exp(-np.sum(y ** 2, axis=1)) * (1 + y[:, 0])
    assert d.integrate(f) == pytest.approx(d.integrate_planar(f), rel=1e-6)


def test_polygon_quadrature():
    sq = sg.Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    assert sq.area() == 1.0
    assert sq.integrate(lambda y: np.ones(len(y))) == pytest.approx(1.0, rel=1e-12)
    assert sq.integrate(lambda y: y[:, 0] ** 2 * y[:, 1]) == pytest.approx(1 / 6, rel=1e-12)
    pts = sq.interior_points(200, np.random.default_rng(0))
    assert np.all((pts >= 0) & (pts <= 1))


def test_disk_rejects_bad_radius():
    with pytest.raises(ValueError):
        sg.Disk(radius=0.0)


# -- covering inequality -------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.5, 2.0, 5.0])
def test_complementary_caps_equality(lam):
    v1, v2 = sg.complementary_caps(lam)
    r = sg.sci_check(v1, v2, sg.Disk(), n_spot=2000)
    assert r.verdict == "holds"
    assert abs(r.mass - 4 * np.pi) < 1e-6
    assert abs(r.mass_planar - 4 * np.pi) < 1e-6


def test_equal_caps_are_not_a_pair():
    v1, v2 = sg.complementary_caps(1.0)
    r = sg.sci_check(v1, v2, sg.Disk(), n_spot=500)
    assert abs(r.mass - 4 * np.pi) < 1e-6
    assert r.verdict == "inapplicable" and "v2 coincides with v1" in r.reasons


@settings(max_examples=15)
@given(st.sampled_from([0.5, 2.0, 5.0, 0.3]), st.floats(0.01, 0.5))
def test_perturbed_pairs_exceed_4pi(lam, delta):
    v1, v2 = sg.perturbed_caps(lam, delta)
    r = sg.sci_check(v1, v2, sg.Disk(), n_spot=1000)
    assert r.verdict == "holds", r.reasons
    assert r.mass > 4 * np.pi
    assert r.mass == pytest.approx(sg.perturbed_caps_mass(lam, delta), rel=1e-8)


def test_small_disk_gate():
    v1, v2 = sg.complementary_caps(2.0)
    r = sg.sci_check(v1, v2, sg.Disk(radius=0.1), n_spot=500)
    assert r.verdict == "inapplicable" and "boundary values differ" in r.reasons


def test_ordering_gate():
    v1, v2 = sg.complementary_caps(2.0)
    r = sg.sci_check(v2, v1, sg.Disk(), n_spot=500)
    assert "ordering v2 >= v1 fails" in r.reasons


# -- reflected pairs ----------------------------------------------------------------------

def test_reflected_pairs_zero_field():
    r = sg.reflected_pair_mass(ZERO, 0.5, [1.0, 0, 0])
    assert r.count == 0 and r.total == 0


def test_reflected_pairs_on_solution():
    from mfelab.symmetry import detect_axis
    _, out = cached_solution(0.32)
    u = out.solution
    axis = detect_axis(u).axis
    # u is even about its axis, so only oblique planes break the symmetry
    perp = np.cross(axis, [1.0, 0, 0] if abs(axis[0]) < 0.9 else [0, 1.0, 0])
    y = axis + perp / np.linalg.norm(perp)
    r = sg.reflected_pair_mass(u, 0.32, y)
    assert r.count >= 1 and not r.inconclusive
    assert np.all(r.masses >= 8 * np.pi - 1e-4)
    assert np.allclose(r.masses, r.masses_sphere, rtol=1e-6)
    assert r.total <= 8 * np.pi / 0.32 + 1e-6
