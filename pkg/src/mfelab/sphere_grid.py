"""Discretization of the unit sphere.

Gauss-Legendre nodes in colatitude times equispaced longitudes, a real
spherical-harmonic transform on that grid, and the differential/geometric
operations built on it.

Harmonic convention
-------------------
Real harmonics, orthonormal under the *normalized* measure
``d(omega) = dS / (4 pi)``, no Condon-Shortley phase::

    Y_k^0  = Pbar_k0(cos th)
    Y_k^m  = Pbar_km(cos th) cos(m ph)     (m > 0)
    Y_k^-m = Pbar_km(cos th) sin(m ph)     (m > 0)

with ``Pbar_km`` the fully normalized ("geodesy") associated Legendre
functions, so ``Y_1^0 = sqrt(3) x3``, ``Y_1^1 = sqrt(3) x1`` and
``Y_1^-1 = sqrt(3) x2``.  Coefficients are stored as a flat vector of length
``(L+1)**2`` with ``(k, m)`` at index ``k*k + k + m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache

import numpy as np

from . import kernels

FOUR_PI = 4.0 * np.pi


class ResolutionError(ValueError):
    """Bandlimit not representable on the requested grid."""


def coeff_index(k: int, m: int) -> int:
    return k * k + k + m


@lru_cache(maxsize=None)
def degree_order(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays aligned with the flat coefficient layout."""
    k = np.concatenate([np.full(2 * n + 1, n) for n in range(L + 1)])
    m = np.concatenate([np.arange(-n, n + 1) for n in range(L + 1)])
    k.setflags(write=False)
    m.setflags(write=False)
    return k, m


@lru_cache(maxsize=None)
def recurrence_tables(L: int):
    """Coefficients of the three-term recurrences for ``Pbar_km``.

    Returns ``(a, b, diag, dcoef, m0coef)``:
    ``Pbar_km = a[k,m] t Pbar_{k-1,m} - b[k,m] Pbar_{k-2,m}``,
    ``Pbar_mm = diag[m] sin^m``,
    ``dPbar_km/dth = (k t Pbar_km - dcoef[k,m] Pbar_{k-1,m}) / sin`` and
    ``dPbar_k0/dth = -m0coef[k] Pbar_k1``.
    """
    a = np.zeros((L + 1, L + 1))
    b = np.zeros((L + 1, L + 1))
    dcoef = np.zeros((L + 1, L + 1))
    for m in range(L + 1):
        for k in range(m + 2, L + 1):
            a[k, m] = np.sqrt((2 * k - 1) * (2 * k + 1) / ((k - m) * (k + m)))
            b[k, m] = np.sqrt((2 * k + 1) * (k + m - 1) * (k - m - 1)
                              / ((k - m) * (k + m) * (2 * k - 3)))
        for k in range(m + 1, L + 1):
            dcoef[k, m] = np.sqrt((2 * k + 1) * (k * k - m * m) / (2 * k - 1))
    diag = np.zeros(L + 1)
    diag[0] = 1.0
    if L >= 1:
        diag[1] = np.sqrt(3.0)
    for m in range(2, L + 1):
        diag[m] = diag[m - 1] * np.sqrt((2 * m + 1) / (2 * m))
    m0coef = np.sqrt(np.arange(L + 1) * (np.arange(L + 1) + 1) / 2.0)
    return a, b, diag, dcoef, m0coef


def legendre_table(t: np.ndarray, L: int) -> np.ndarray:
    """``P[j, k, m] = Pbar_km(t_j)`` for ``0 <= m <= k <= L`` (zero elsewhere)."""
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    a, b, diag, _, _ = recurrence_tables(L)
    P = np.zeros((t.size, L + 1, L + 1))
    smm = np.ones_like(t)
    for m in range(L + 1):
        if m > 0:
            smm = smm * s
        P[:, m, m] = diag[m] * smm
        if m + 1 <= L:
            P[:, m + 1, m] = np.sqrt(2.0 * m + 3.0) * t * P[:, m, m]
        for k in range(m + 2, L + 1):
            P[:, k, m] = a[k, m] * t * P[:, k - 1, m] - b[k, m] * P[:, k - 2, m]
    return P


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Real spherical-harmonic coefficients up to degree ``L`` (flat layout)."""

    L: int
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.shape != ((self.L + 1) ** 2,):
            raise ValueError(f"expected {(self.L + 1) ** 2} coefficients, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __getitem__(self, km):
        k, m = km
        if not (0 <= k <= self.L and abs(m) <= k):
            raise IndexError(f"(k, m) = {km} outside bandlimit {self.L}")
        return self.data[coeff_index(k, m)]

    def to_AB(self) -> tuple[np.ndarray, np.ndarray]:
        """Cosine and sine coefficient arrays indexed ``[k, m]``, ``m >= 0``."""
        return _flat_to_AB(self.data, self.L)

    @classmethod
    def from_AB(cls, A, B) -> "HarmonicCoeffs":
        L = A.shape[0] - 1
        return cls(L, _AB_to_flat(A, B))


@lru_cache(maxsize=None)
def _ab_index(L: int):
    k, m = degree_order(L)
    cos_sel = m >= 0
    sin_sel = m < 0
    return (k[cos_sel], m[cos_sel], np.flatnonzero(cos_sel),
            k[sin_sel], -m[sin_sel], np.flatnonzero(sin_sel))


def _flat_to_AB(c, L):
    kc, mc, ic, ks, ms, is_ = _ab_index(L)
    A = np.zeros((L + 1, L + 1))
    B = np.zeros((L + 1, L + 1))
    A[kc, mc] = c[ic]
    B[ks, ms] = c[is_]
    return A, B


def _AB_to_flat(A, B):
    L = A.shape[0] - 1
    kc, mc, ic, ks, ms, is_ = _ab_index(L)
    c = np.empty((L + 1) ** 2)
    c[ic] = A[kc, mc]
    c[is_] = B[ks, ms]
    return c


class SphereGrid:
    """Gauss-Legendre (colatitude) x equispaced (longitude) grid.

    ``weights`` are area weights summing to ``4 pi``; normalized integrals
    divide by ``4 pi``.
    """

    def __init__(self, L: int = 48, n_theta: int = 64, n_phi: int = 128):
        if n_theta < L + 1 or n_phi < 2 * L + 1:
            raise ResolutionError(
                f"bandlimit {L} needs n_theta >= {L + 1} and n_phi >= {2 * L + 1}"
                f" (got {n_theta}, {n_phi})")
        self.L = int(L)
        self.n_theta = int(n_theta)
        self.n_phi = int(n_phi)
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        self.t = x[::-1].copy()          # cos(theta), north to south
        self.theta = np.arccos(self.t)
        self.phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.gl_weights = w[::-1].copy()
        self.weights = np.outer(self.gl_weights, np.full(self.n_phi, 2.0 * np.pi / self.n_phi))
        st = np.sqrt(1.0 - self.t ** 2)
        self.nodes = np.stack([
            np.outer(st, np.cos(self.phi)),
            np.outer(st, np.sin(self.phi)),
            np.outer(self.t, np.ones(self.n_phi)),
        ], axis=-1)
        nrm = np.linalg.norm(self.nodes, axis=-1, keepdims=True)
        self.nodes /= nrm
        self.shape = (self.n_theta, self.n_phi)

    def __repr__(self):
        return f"SphereGrid(L={self.L}, n_theta={self.n_theta}, n_phi={self.n_phi})"

    def __eq__(self, other):
        return (isinstance(other, SphereGrid)
                and (self.L, self.n_theta, self.n_phi) == (other.L, other.n_theta, other.n_phi))

    def __hash__(self):
        return hash((self.L, self.n_theta, self.n_phi))

    @property
    def n_coeffs(self) -> int:
        return (self.L + 1) ** 2

    @cached_property
    def points(self) -> np.ndarray:
        """Nodes as an ``(N, 3)`` array in row-major (theta, phi) order."""
        return self.nodes.reshape(-1, 3)

    @cached_property
    def _ptab(self) -> np.ndarray:
        return legendre_table(self.t, self.L)

    @cached_property
    def _ptab_w(self) -> np.ndarray:
        # analysis weights: 1/4 (m > 0) and 1/2 (m = 0) per ring, times GL weights
        fac = np.full(self.L + 1, 0.25)
        fac[0] = 0.5
        return self._ptab * self.gl_weights[:, None, None] * fac[None, None, :]

    def oversampled(self, factor: float = 1.5) -> "SphereGrid":
        """Same bandlimit on a grid refined by ``factor`` in both directions."""
        return _oversampled(self, factor)

    # -- transforms on raw arrays -------------------------------------------
    def synthesize_array(self, c: np.ndarray) -> np.ndarray:
        """Grid values from flat coefficients (bandlimit ``self.L``); batch dims lead."""
        c = np.asarray(c, dtype=float)
        L = self.L
        kc, mc, ic, ks, ms, is_ = _ab_index(L)
        batch = c.shape[:-1]
        C = np.zeros(batch + (L + 1, L + 1), dtype=complex)
        C[..., kc, mc] = c[..., ic]
        C[..., ks, ms] -= 1j * c[..., is_]
        ring = np.einsum("jkm,...km->...jm", self._ptab, C, optimize=True)
        X = np.zeros(batch + (self.n_theta, self.n_phi // 2 + 1), dtype=complex)
        X[..., : L + 1] = ring * (self.n_phi / 2.0)
        X[..., 0] = ring[..., 0] * self.n_phi
        return np.fft.irfft(X, n=self.n_phi, axis=-1)

    def analyze_array(self, values: np.ndarray) -> np.ndarray:
        """Flat coefficients (bandlimit ``self.L``) from grid values; batch dims lead."""
        v = np.asarray(values, dtype=float)
        L = self.L
        X = np.fft.rfft(v, axis=-1)[..., : L + 1] * (2.0 / self.n_phi)
        X[..., 0] *= 0.5
        proj = np.einsum("jkm,...jm->...km", self._ptab_w, X, optimize=True)
        kc, mc, ic, ks, ms, is_ = _ab_index(L)
        out = np.empty(v.shape[:-2] + ((L + 1) ** 2,))
        out[..., ic] = proj.real[..., kc, mc]
        out[..., is_] = -proj.imag[..., ks, ms]
        return out

    def integrate_array(self, values: np.ndarray) -> float:
        """Normalized integral of grid values."""
        return float(np.sum(self.weights * values) / FOUR_PI)


@lru_cache(maxsize=32)
def _oversampled(grid: SphereGrid, factor: float) -> SphereGrid:
    n_theta = int(np.ceil(factor * grid.n_theta))
    n_phi = int(np.ceil(factor * grid.n_phi))
    n_phi += n_phi % 2
    return SphereGrid(grid.L, n_theta, n_phi)


@lru_cache(maxsize=8)
def default_grid() -> SphereGrid:
    return SphereGrid(48, 64, 128)


class SphereField:
    """Scalar field on the sphere: grid values plus harmonic coefficients.

    Instances are immutable.  ``values`` are always the synthesis of
    ``coeffs`` on ``grid``, so the two views agree to rounding.
    """

    def __init__(self, grid: SphereGrid, coeffs, values=None):
        if not isinstance(coeffs, HarmonicCoeffs):
            coeffs = HarmonicCoeffs(grid.L, coeffs)
        if coeffs.L != grid.L:
            raise ResolutionError(f"coefficients at L={coeffs.L} on grid with L={grid.L}")
        self.grid = grid
        self.coeffs = coeffs
        if values is None:
            values = grid.synthesize_array(coeffs.data)
        values = np.array(values, dtype=float)
        values.setflags(write=False)
        self.values = values
        self.sup_norm = float(np.max(np.abs(values)))

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_coeffs(cls, grid: SphereGrid, c) -> "SphereField":
        return cls(grid, c)

    @classmethod
    def from_values(cls, grid: SphereGrid, values) -> "SphereField":
        """Project grid values onto the bandlimit (exact for band-limited data)."""
        return cls(grid, grid.analyze_array(values))

    @classmethod
    def from_function(cls, grid: SphereGrid, func) -> "SphereField":
        """``func`` maps an ``(..., 3)`` array of unit vectors to values."""
        return cls.from_values(grid, func(grid.nodes))

    @classmethod
    def zeros(cls, grid: SphereGrid) -> "SphereField":
        return cls(grid, np.zeros(grid.n_coeffs))

    @classmethod
    def constant(cls, grid: SphereGrid, value: float) -> "SphereField":
        c = np.zeros(grid.n_coeffs)
        c[0] = value
        return cls(grid, c)

    @classmethod
    def harmonic(cls, grid: SphereGrid, k: int, m: int, scale: float = 1.0) -> "SphereField":
        c = np.zeros(grid.n_coeffs)
        c[coeff_index(k, m)] = scale
        return cls(grid, c)

    # -- views ---------------------------------------------------------------
    @property
    def c(self) -> np.ndarray:
        return self.coeffs.data

    @cached_property
    def _AB(self):
        A, B = self.coeffs.to_AB()
        return np.ascontiguousarray(A), np.ascontiguousarray(B)

    def __call__(self, pts) -> np.ndarray:
        return evaluate(self, pts)

    def __add__(self, other):
        if isinstance(other, SphereField):
            _check_same_grid(self, other)
            return SphereField(self.grid, self.c + other.c)
        c = self.c.copy()
        c[0] += other
        return SphereField(self.grid, c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SphereField):
            _check_same_grid(self, other)
            return SphereField(self.grid, self.c - other.c)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return SphereField(self.grid, -self.c)

    def __mul__(self, scalar):
        if isinstance(scalar, SphereField):
            return NotImplemented
        return SphereField(self.grid, float(scalar) * self.c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SphereField(L={self.grid.L}, sup_norm={self.sup_norm:.3g})"


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"fields live on different grids: {a.grid} vs {b.grid}")


# -- operations ---------------------------------------------------------------

def quadrature(field: SphereField) -> float:
    """Normalized integral ``int f d(omega)`` (total measure 1)."""
    return field.grid.integrate_array(field.values)


def analyze(field: SphereField) -> HarmonicCoeffs:
    return field.coeffs


def synthesize(coeffs: HarmonicCoeffs, grid: SphereGrid | None = None) -> SphereField:
    grid = grid or default_grid()
    if coeffs.L > grid.L:
        raise ResolutionError(f"bandlimit {coeffs.L} exceeds grid bandlimit {grid.L}")
    if coeffs.L < grid.L:
        A, B = coeffs.to_AB()
        Ap = np.zeros((grid.L + 1, grid.L + 1))
        Bp = np.zeros_like(Ap)
        Ap[: coeffs.L + 1, : coeffs.L + 1] = A
        Bp[: coeffs.L + 1, : coeffs.L + 1] = B
        coeffs = HarmonicCoeffs.from_AB(Ap, Bp)
    return SphereField(grid, coeffs)


def laplacian_eigenvalues(L: int) -> np.ndarray:
    k, _ = degree_order(L)
    return -(k * (k + 1.0))


def laplace_beltrami(field: SphereField) -> SphereField:
    return SphereField(field.grid, laplacian_eigenvalues(field.grid.L) * field.c)


def evaluate(field: SphereField, pts, with_gradient: bool = False):
    """Point values (and optionally surface gradients) of a band-limited field."""
    pts = np.asarray(pts, dtype=float)
    flat = pts.reshape(-1, 3)
    A, B = field._AB
    a, b, diag, dcoef, m0 = recurrence_tables(field.grid.L)
    vals, grads = kernels.eval_sh(A, B, flat, a, b, diag, dcoef, m0, with_gradient)
    vals = vals.reshape(pts.shape[:-1])
    if not with_gradient:
        return vals
    return vals, grads.reshape(pts.shape)


def surface_gradient(field: SphereField, point) -> np.ndarray:
    """Tangential gradient at unit vector(s) ``point`` (shape ``(3,)`` or ``(N, 3)``).

    Pole limits of the harmonic basis are built into the recurrence, so no
    division by ``sin(theta)`` ever occurs.
    """
    _, g = evaluate(field, point, with_gradient=True)
    return g


def check_rotation(R, tol: float = 1e-12) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation (orthogonal, det +1)")
    return R


def rotate_field(field: SphereField, rotation) -> SphereField:
    """Return ``g`` with ``g(x) = f(R^T x)``.

    Evaluated at the rotated nodes and re-analyzed; exact for band-limited
    fields because rotations preserve degree.
    """
    R = check_rotation(rotation)
    grid = field.grid
    vals = evaluate(field, grid.points @ R)    # rows: (R^T x)^T = x^T R
    return SphereField.from_values(grid, vals.reshape(grid.shape))


def frame(y) -> np.ndarray:
    """Right-handed orthonormal frame ``[e1, e2, y]`` (columns) with ``e1 x e2 = y``.

    The matrix maps the north pole to ``y``; the great circle ``C_y`` is
    traversed counterclockwise, seen from ``y``, by ``cos(s) e1 + sin(s) e2``.
    """
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    helper = np.array([1.0, 0.0, 0.0]) if abs(y[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ y) * y
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(y, e1)
    return np.column_stack([e1, e2, y])


def rotation_to_pole(y) -> np.ndarray:
    """Rotation taking ``y`` to the north pole."""
    return frame(y).T


def great_circle(y, n: int):
    """``n`` equispaced points on ``C_y`` (counterclockwise seen from ``y``).

    Returns ``(angles, points, tangents)``; tangents are unit and point in
    the direction of travel.
    """
    F = frame(y)
    s = 2.0 * np.pi * np.arange(n) / n
    pts = np.outer(np.cos(s), F[:, 0]) + np.outer(np.sin(s), F[:, 1])
    tan = -np.outer(np.sin(s), F[:, 0]) + np.outer(np.cos(s), F[:, 1])
    return s, pts, tan


@lru_cache(maxsize=16)
def _cap_rule(n_t: int, n_phi: int, t_lo: float):
    x, w = np.polynomial.legendre.leggauss(n_t)
    t = t_lo + (1.0 - t_lo) * (x + 1.0) / 2.0
    wt = w * (1.0 - t_lo) / 2.0
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - t * t)
    pts = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)),
                    np.outer(t, np.ones(n_phi))], axis=-1).reshape(-1, 3)
    wts = np.outer(wt, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return pts, wts


def cap_nodes(axis, t_lo: float, n_t: int = 64, n_phi: int = 128):
    """Quadrature nodes and area weights for the cap ``{x : x . axis >= t_lo}``."""
    pts, wts = _cap_rule(int(n_t), int(n_phi), float(t_lo))
    return pts @ frame(axis).T, wts


def hemisphere_nodes(y, n_t: int = 64, n_phi: int = 128):
    """Area quadrature on the closed hemisphere ``H_y = {x . y >= 0}``."""
    return cap_nodes(y, 0.0, n_t, n_phi)


def hemisphere_integral(field: SphereField, y, transform=None, n_t: int = 64,
                        n_phi: int = 128) -> float:
    """``int_{H_y} transform(f) dS`` (unnormalized area measure)."""
    pts, wts = hemisphere_nodes(y, n_t, n_phi)
    vals = evaluate(field, pts)
    if transform is not None:
        vals = transform(vals)
    return float(wts @ vals)


def conormal_flux(field: SphereField, y, n: int | None = None) -> float:
    """``oint_{C_y} grad f . y ds``: flux of ``f`` across ``C_y`` in direction ``y``.

    Trapezoidal rule, exact for band-limited ``f`` once ``n > L``.
    """
    n = n or max(2 * field.grid.L + 2, 128)
    _, pts, _ = great_circle(y, n)
    g = surface_gradient(field, pts) @ (np.asarray(y, float) / np.linalg.norm(y))
    return float(np.sum(g) * 2.0 * np.pi / n)
