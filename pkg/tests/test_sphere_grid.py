import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.spatial.transform import Rotation

from mfelab.sphere_grid import (FOUR_PI, HarmonicCoeffs, ResolutionError, SphereField,
                                SphereGrid, analyze, check_rotation, coeff_index,
                                conormal_flux, default_grid, evaluate, frame, great_circle,
                                hemisphere_integral, laplace_beltrami, quadrature, rotate_field,
                                surface_gradient, synthesize)

from conftest import random_field

GRID = default_grid()
SQ3 = np.sqrt(3.0)

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.asarray(v) / np.linalg.norm(v))
rotations = st.integers(0, 2 ** 31 - 1).map(
    lambda s: Rotation.random(random_state=s).as_matrix())


def test_grid_invariants(grid):
    assert abs(grid.weights.sum() - FOUR_PI) < 1e-12
    assert np.max(np.abs(np.linalg.norm(grid.nodes, axis=-1) - 1)) < 1e-14
    assert grid.n_phi >= 2 * grid.L + 1
    assert (grid.L, grid.n_theta, grid.n_phi) == (48, 64, 128)


def test_resolution_error():
    with pytest.raises(ResolutionError):
        SphereGrid(48, 40, 128)
    small = SphereGrid(8, 16, 32)
    with pytest.raises(ResolutionError):
        synthesize(HarmonicCoeffs(12, np.zeros(169)), small)


def test_quadrature_examples(grid):
    assert quadrature(SphereField.constant(grid, 1.0)) == pytest.approx(1.0, abs=1e-14)
    assert abs(quadrature(SphereField.from_function(grid, lambda x: x[..., 2]))) < 1e-14
    # independent oracle: adaptive 2-D quadrature in (theta, phi)
    ref, _ = integrate.dblquad(lambda th, ph: np.cos(th) ** 2 * np.sin(th), 0, 2 * np.pi, 0, np.pi)
    q = quadrature(SphereField.from_function(grid, lambda x: x[..., 2] ** 2))
    assert q == pytest.approx(ref / FOUR_PI, abs=1e-12)
    assert q == pytest.approx(1 / 3, abs=1e-14)


@given(st.integers(0, 2 * 64 - 1))
def test_gauss_exactness_in_x3(n):
    t = GRID.t
    vals = np.repeat((t ** n)[:, None], GRID.n_phi, axis=1)
    exact = (1.0 / (n + 1)) if n % 2 == 0 else 0.0
    assert GRID.integrate_array(vals) == pytest.approx(exact, abs=1e-12)


def test_basis_convention(grid):
    pts = grid.points
    x1, x2, x3 = pts.T
    for (k, m), ref in {(1, 0): SQ3 * x3, (1, 1): SQ3 * x1, (1, -1): SQ3 * x2,
                        (0, 0): np.ones_like(x1)}.items():
        f = SphereField.harmonic(grid, k, m)
        assert np.max(np.abs(evaluate(f, pts) - ref)) < 1e-13
    assert coeff_index(2, -1) == 5


def test_single_coefficient(grid):
    y20 = SphereField.harmonic(grid, 2, 0)
    f = SphereField.from_values(grid, y20.values)
    c = analyze(f)
    assert abs(c[2, 0] - 1) < 1e-13
    assert np.max(np.abs(np.delete(c.data, coeff_index(2, 0)))) < 1e-13
    one = analyze(SphereField.from_values(grid, np.ones(grid.shape)))
    assert abs(one[0, 0] - 1) < 1e-14 and np.max(np.abs(one.data[1:])) < 1e-13


@given(st.integers(0, 10_000))
def test_roundtrip(seed):
    f = random_field(GRID, seed, degree=GRID.L)
    g = SphereField.from_values(GRID, f.values)
    assert np.max(np.abs(g.c - f.c)) < 1e-12
    assert np.max(np.abs(synthesize(analyze(g), GRID).values - f.values)) < 1e-12


def test_orthonormality(grid):
    B = np.array([SphereField.harmonic(grid, k, m).values.ravel()
                  for k in range(6) for m in range(-k, k + 1)])
    G = (B * grid.weights.ravel()) @ B.T / FOUR_PI
    assert np.max(np.abs(G - np.eye(len(B)))) < 1e-13


def test_laplacian_eigen(grid):
    assert np.max(np.abs(laplace_beltrami(SphereField.constant(grid, 2.0)).values)) == 0
    for k, m in [(1, 0), (2, 1)]:
        f = SphereField.harmonic(grid, k, m)
        assert np.max(np.abs(laplace_beltrami(f).values + k * (k + 1) * f.values)) < 1e-10


def test_laplacian_against_finite_differences(grid):
    # independent route: spherical-coordinate Laplacian by central differences
    f = random_field(grid, 3, degree=6, scale=0.3)
    th0, ph0, h = 1.1, 0.7, 1e-4

    def F(th, ph):
        return evaluate(f, np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))

    d_th = (F(th0 + h, ph0) - F(th0 - h, ph0)) / (2 * h)
    d_thth = (F(th0 + h, ph0) - 2 * F(th0, ph0) + F(th0 - h, ph0)) / h ** 2
    d_phph = (F(th0, ph0 + h) - 2 * F(th0, ph0) + F(th0, ph0 - h)) / h ** 2
    fd = d_thth + np.cos(th0) / np.sin(th0) * d_th + d_phph / np.sin(th0) ** 2
    x = np.array([np.sin(th0) * np.cos(ph0), np.sin(th0) * np.sin(ph0), np.cos(th0)])
    assert evaluate(laplace_beltrami(f), x) == pytest.approx(fd, abs=1e-6)


def test_surface_gradient_examples(grid):
    assert np.max(np.abs(surface_gradient(SphereField.constant(grid, 3.0), [0.6, 0, 0.8]))) < 1e-14
    x3 = SphereField.from_function(grid, lambda x: x[..., 2])
    assert np.allclose(surface_gradient(x3, [1.0, 0, 0]), [0, 0, 1], atol=1e-12)
    assert np.max(np.abs(surface_gradient(SphereField.harmonic(grid, 1, 0), [0, 0, 1.0]))) < 1e-12


@given(unit_vectors, st.integers(0, 1000))
def test_gradient_tangent_and_fd(p, seed):
    f = random_field(GRID, seed, degree=8, scale=0.5)
    g = surface_gradient(f, p)
    assert abs(g @ p) < 1e-10
    F = frame(p)
    h = 1e-5
    for e in (F[:, 0], F[:, 1]):
        plus = np.cos(h) * p + np.sin(h) * e
        minus = np.cos(h) * p - np.sin(h) * e
        fd = (evaluate(f, plus) - evaluate(f, minus)) / (2 * h)
        assert g @ e == pytest.approx(fd, abs=1e-6)


def test_gradient_at_poles(grid):
    f = random_field(grid, 11, degree=10)
    for pole in ([0, 0, 1.0], [0, 0, -1.0]):
        g = surface_gradient(f, pole)
        assert np.all(np.isfinite(g)) and abs(g[2]) < 1e-12
        near = np.array([1e-7, 2e-7, pole[2]])
        assert np.allclose(surface_gradient(f, near / np.linalg.norm(near)), g, atol=1e-5)


def test_rotate_examples(grid):
    f = SphereField.harmonic(grid, 1, 0)
    assert np.max(np.abs(rotate_field(f, np.eye(3)).c - f.c)) < 1e-13
    R = Rotation.from_euler("x", 90, degrees=True).as_matrix()
    g = rotate_field(f, R)
    ref = SphereField.from_function(grid, lambda x: SQ3 * (x @ R)[..., 2])
    assert np.max(np.abs(g.values - ref.values)) < 1e-9
    assert np.max(np.abs(g.values + SQ3 * grid.nodes[..., 1])) < 1e-9
    with pytest.raises(ValueError):
        rotate_field(f, 2 * np.eye(3))
    with pytest.raises(ValueError):
        check_rotation(np.diag([1.0, 1.0, -1.0]))


@given(rotations, st.integers(0, 1000))
def test_rotation_inverse_and_equivariance(R, seed):
    f = random_field(GRID, seed, degree=16, scale=0.5)
    back = rotate_field(rotate_field(f, R), R.T)
    assert np.max(np.abs(back.values - f.values)) < 1e-9
    a = laplace_beltrami(rotate_field(f, R))
    b = rotate_field(laplace_beltrami(f), R)
    assert np.max(np.abs(a.values - b.values)) < 1e-9


@given(unit_vectors, st.integers(0, 1000))
def test_divergence_theorem_on_hemispheres(y, seed):
    # outward conormal of H_y along C_y is -y
    f = random_field(GRID, seed, degree=14, scale=0.5)
    lhs = hemisphere_integral(laplace_beltrami(f), y)
    assert lhs == pytest.approx(-conormal_flux(f, y), abs=1e-6)


def test_great_circle_orientation():
    y = np.array([0.2, -0.5, 0.8])
    y /= np.linalg.norm(y)
    s, pts, tan = great_circle(y, 16)
    assert np.max(np.abs(pts @ y)) < 1e-14
    assert np.allclose(np.cross(pts, tan), y, atol=1e-14)
