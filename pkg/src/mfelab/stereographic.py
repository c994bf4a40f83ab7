"""Stereographic transfer of the equation to the plane, and a numerical
checker for the covering inequality of conformal disks.

``Pi(x) = (x1, x2) / (1 - x3)`` sends the north pole to infinity and the
south pole to the origin.  For a field ``u`` on the sphere the planar
function is

    w(y) = u(Pi^{-1} y) - 2 log(1 + |y|^2) + log(8 / alpha),

so ``e^w = (8/alpha) e^u / (1 + |y|^2)^2``.  When ``u`` solves
``(alpha/2) Lap u + e^u - 1 = 0`` on the sphere, ``w`` solves
``Lap w + e^w = 8 (1/alpha - 1) / (1 + |y|^2)^2`` in the plane and
``int e^w dy = 8 pi / alpha``.

Planar integrals are pulled back to the sphere with
``dy = (1 + |y|^2)^2 / 4 dS = dS / (1 - x3)^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mfe_core import fine_grid
from .sphere_grid import (SphereField, cap_nodes, evaluate, frame, laplace_beltrami,
                          rotate_field)
from .symmetry import nodal_regions, reflect_points, reflection_defect

SPOT_SAMPLES = 10_000
BOUNDARY_TOL = 1e-8
SUPERSOLUTION_TOL = 1e-6


class PoleError(ValueError):
    """Projection of the north pole."""


def project(x) -> np.ndarray:
    """``Pi(x) = (x1, x2) / (1 - x3)`` for unit vectors ``x`` (shape ``(..., 3)``)."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    rho2 = x1 * x1 + x2 * x2
    if np.any((rho2 == 0.0) & (x3 > 0)):
        raise PoleError("the north pole has no stereographic image")
    # 1 - x3 = rho^2 / (1 + x3) avoids cancellation near the north pole
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(x3 > 0, rho2 / (1.0 + x3), 1.0 - x3)
    return np.stack([x1 / d, x2 / d], axis=-1)


def inverse_project(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    s = 1.0 + r2
    x3 = np.where(r2 > 1.0, 1.0 - 2.0 / s, (r2 - 1.0) / s)
    return np.stack([2.0 * y[..., 0] / s, 2.0 * y[..., 1] / s, x3], axis=-1)


def pullback_jacobian(x) -> np.ndarray:
    """``dy / dS`` at sphere points: ``(1 + |Pi x|^2)^2 / 4 = 1 / (1 - x3)^2``."""
    x = np.asarray(x, dtype=float)
    x3 = x[..., 2]
    rho2 = x[..., 0] ** 2 + x[..., 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(x3 > 0, rho2 / (1.0 + x3), 1.0 - x3)
        return 1.0 / (d * d)


# -- planar fields -------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarField:
    """``w`` in the plane, evaluated by pulling ``u`` back through ``Pi^{-1}``."""

    u: SphereField
    alpha: float

    def u_bar(self, y) -> np.ndarray:
        return evaluate(self.u, inverse_project(y))

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        return self.u_bar(y) - 2.0 * np.log1p(r2) + np.log(8.0 / self.alpha)

    def exp(self, y) -> np.ndarray:
        return np.exp(self(y))

    def rhs(self, y) -> np.ndarray:
        """``8 (1/alpha - 1) / (1 + |y|^2)^2``."""
        r2 = np.sum(np.asarray(y, dtype=float) ** 2, axis=-1)
        return 8.0 * (1.0 / self.alpha - 1.0) / (1.0 + r2) ** 2

    def laplacian(self, y) -> np.ndarray:
        """Planar Laplacian via the conformal factor: ``Lap_y = 4/(1+|y|^2)^2 Lap_S``."""
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        lam = 4.0 / (1.0 + r2) ** 2
        lap_u = evaluate(laplace_beltrami(self.u), inverse_project(y))
        return lam * lap_u - 8.0 / (1.0 + r2) ** 2


def chain_to_w(u: SphereField, alpha: float) -> PlanarField:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return PlanarField(u, float(alpha))


def chain_steps(u: SphereField, alpha: float, y) -> dict:
    """The unsimplified chain ``u_bar -> v -> w`` evaluated literally.

    ``v = u_bar - (2/alpha) log(1+|y|^2) + log(8/alpha)`` and
    ``w = log((1+|y|^2)^{2(1/alpha - 1)} e^v)``.
    """
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    ubar = evaluate(u, inverse_project(y))
    v = ubar - (2.0 / alpha) * np.log(1.0 + r2) + np.log(8.0 / alpha)
    w = 2.0 * (1.0 / alpha - 1.0) * np.log(1.0 + r2) + v
    return {"u_bar": ubar, "v": v, "w": w}


def _fd_laplacian(f, y, h: float) -> np.ndarray:
    """Fourth-order five-point-per-axis finite-difference Laplacian."""
    y = np.asarray(y, dtype=float)
    out = -5.0 * f(y)
    for ax in range(2):
        e = np.zeros(2)
        e[ax] = 1.0
        out = out + (-(f(y + 2 * h * e) + f(y - 2 * h * e)) / 12.0
                     + 4.0 * (f(y + h * e) + f(y - h * e)) / 3.0)
    return out / (h * h)


def planar_residual(w: PlanarField, y, method: str = "conformal", h: float = 1e-3
                    ) -> np.ndarray:
    """``Lap w + e^w - 8 (1/alpha - 1)/(1+|y|^2)^2`` at planar points."""
    y = np.asarray(y, dtype=float)
    if method == "conformal":
        lap = w.laplacian(y)
    elif method == "fd":
        lap = _fd_laplacian(w, y, h)
    else:
        raise ValueError(f"unknown method {method!r}")
    return lap + w.exp(y) - w.rhs(y)


def planar_samples(radius: float = 10.0, n_r: int = 40, n_t: int = 48) -> np.ndarray:
    """Polar lattice on the closed disk of the given radius (origin included)."""
    r = radius * np.linspace(0.0, 1.0, n_r) ** 1.5
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    pts = np.stack([np.outer(r, np.cos(t)), np.outer(r, np.sin(t))], axis=-1).reshape(-1, 2)
    return pts[n_t - 1:]          # one copy of the origin


def planar_residual_check(w: PlanarField, alpha: float | None = None, sample_set=None,
                          method: str = "conformal") -> float:
    """Max ``|Lap w + e^w - RHS|`` over ``sample_set`` (default: polar lattice, ``|y| <= 10``)."""
    if alpha is not None and abs(alpha - w.alpha) > 0:
        w = PlanarField(w.u, alpha)
    pts = planar_samples() if sample_set is None else np.asarray(sample_set, dtype=float)
    return float(np.max(np.abs(planar_residual(w, pts, method))))


def total_mass(w: PlanarField) -> float:
    """``int_{R^2} e^w dy`` by pullback to the 3/2-oversampled sphere grid."""
    fg = fine_grid(w.u.grid)
    x = fg.points
    integrand = np.exp(w(project(x))) * pullback_jacobian(x)
    return float(fg.weights.ravel() @ integrand)


# -- planar domains --------------------------------------------------------------------

class PlanarDomain:
    def integrate(self, f) -> float:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def boundary_points(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def interior_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(PlanarDomain):
    """Closed disk; its preimage under ``Pi`` is a spherical cap."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    n_t: int = 64
    n_phi: int = 128

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def _cap(self):
        c = np.asarray(self.center, dtype=float)
        ang = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
        P = inverse_project(c + self.radius * np.column_stack([np.cos(ang), np.sin(ang)]))
        n = np.cross(P[1] - P[0], P[2] - P[0])
        n /= np.linalg.norm(n)
        d = float(n @ P[0])
        inside = inverse_project(c)
        if n @ inside < d:
            n, d = -n, -d
        return n, d

    def nodes(self):
        """Sphere quadrature of the preimage cap: ``(points, area weights)``."""
        n, d = self._cap()
        return cap_nodes(n, d, self.n_t, self.n_phi)

    def integrate(self, f) -> float:
        """``int_disk f(y) dy`` by pullback to the cap."""
        x, wts = self.nodes()
        return float(wts @ (f(project(x)) * pullback_jacobian(x)))

    def integrate_planar(self, f, n_r: int = 64, n_t: int = 128) -> float:
        """The same integral by planar polar Gauss quadrature (independent route)."""
        xg, wg = np.polynomial.legendre.leggauss(n_r)
        r = 0.5 * self.radius * (xg + 1.0)
        wr = 0.5 * self.radius * wg * r
        t = 2.0 * np.pi * np.arange(n_t) / n_t
        c = np.asarray(self.center, dtype=float)
        pts = c + np.stack([np.outer(r, np.cos(t)), np.outer(r, np.sin(t))], axis=-1)
        vals = f(pts.reshape(-1, 2)).reshape(n_r, n_t)
        return float(wr @ vals.sum(axis=1) * 2.0 * np.pi / n_t)

    def area(self) -> float:
        return float(np.pi * self.radius ** 2)

    def boundary_points(self, n: int) -> np.ndarray:
        t = 2.0 * np.pi * np.arange(n) / n
        return np.asarray(self.center) + self.radius * np.column_stack([np.cos(t), np.sin(t)])

    def interior_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(n))
        t = 2.0 * np.pi * rng.random(n)
        return np.asarray(self.center) + np.column_stack([r * np.cos(t), r * np.sin(t)])


@dataclass(frozen=True)
class Polygon(PlanarDomain):
    """Star-shaped polygon (with respect to its vertex centroid), counterclockwise."""

    vertices: tuple
    order: int = 12

    def _triangles(self):
        V = np.asarray(self.vertices, dtype=float)
        c = V.mean(axis=0)
        return [(c, V[i], V[(i + 1) % len(V)]) for i in range(len(V))]

    def integrate(self, f) -> float:
        """Collapsed-square Gauss rule on a fan triangulation."""
        x, w = np.polynomial.legendre.leggauss(self.order)
        a = 0.5 * (x + 1.0)
        wa = 0.5 * w
        total = 0.0
        for p0, p1, p2 in self._triangles():
            J = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
            s = np.outer(a, np.ones_like(a))
            t = np.outer(1.0 - a, a)
            wts = np.outer(wa, wa) * (1.0 - np.outer(a, np.ones_like(a)))
            pts = p0 + s[..., None] * (p1 - p0) + t[..., None] * (p2 - p0)
            total += J * float(np.sum(wts * f(pts.reshape(-1, 2)).reshape(s.shape)))
        return total

    def area(self) -> float:
        V = np.asarray(self.vertices, dtype=float)
        x, y = V[:, 0], V[:, 1]
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def boundary_points(self, n: int) -> np.ndarray:
        V = np.asarray(self.vertices, dtype=float)
        k = max(1, n // len(V))
        s = np.arange(k) / k
        return np.concatenate([V[i] + np.outer(s, V[(i + 1) % len(V)] - V[i])
                               for i in range(len(V))])

    def interior_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        tris = self._triangles()
        areas = np.array([0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
                          for a, b, c in tris])
        pick = rng.choice(len(tris), size=n, p=areas / areas.sum())
        u, v = rng.random(n), rng.random(n)
        flip = u + v > 1
        u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
        A = np.array([t[0] for t in tris])[pick]
        B = np.array([t[1] for t in tris])[pick]
        C = np.array([t[2] for t in tris])[pick]
        return A + u[:, None] * (B - A) + v[:, None] * (C - A)


# -- covering inequality ------------------------------------------------------------------

def cap_factor(lam: float, shift: float = 0.0):
    """``v`` with ``e^{2v} = e^{2 shift} 4 lam^2 / (1 + lam^2 |y|^2)^2``."""
    def v(y):
        r2 = np.sum(np.asarray(y, dtype=float) ** 2, axis=-1)
        return np.log(2.0 * lam) - np.log1p(lam * lam * r2) + shift

    def lap(y):
        r2 = np.sum(np.asarray(y, dtype=float) ** 2, axis=-1)
        return -4.0 * lam * lam / (1.0 + lam * lam * r2) ** 2
    v.laplacian = lap
    return v


def complementary_caps(lam: float):
    """Cap factors for ``lam`` and ``1/lam``, ordered so ``v2 >= v1`` on the unit disk."""
    lo, hi = sorted([lam, 1.0 / lam])
    return cap_factor(lo), cap_factor(hi)


def perturbed_caps(lam: float, delta: float):
    """An admissible non-extremal pair on the unit disk.

    ``v1`` is the cap factor with ``lam_a = min(lam, 1/lam)``; ``v2`` is the
    cap factor with ``mu = (1 + delta)/lam_a`` shifted by the constant that
    restores ``v1 = v2`` on the unit circle.  The shift is nonnegative, so
    ``Lap v2 + e^{2 v2} >= 0``, and ``v2 > v1`` inside.
    """
    la = min(lam, 1.0 / lam)
    mu = (1.0 + delta) / la
    c = np.log(la * (1.0 + mu * mu) / ((1.0 + la * la) * mu))
    return cap_factor(la), cap_factor(mu, c)


def perturbed_caps_mass(lam: float, delta: float) -> float:
    la = min(lam, 1.0 / lam)
    mu = (1.0 + delta) / la
    return 4.0 * np.pi * la * la / (1.0 + la * la) * (1.0 + (1.0 + mu * mu) / (1.0 + la * la))


@dataclass
class SciResult:
    mass: float
    mass_planar: float
    verdict: str              # "holds", "violated" or "inapplicable"
    reasons: list
    checks: dict
    note: str = "preconditions spot-checked on samples, not proven"

    def as_dict(self) -> dict:
        return {"mass": self.mass, "mass_planar": self.mass_planar, "verdict": self.verdict,
                "reasons": self.reasons, "checks": self.checks, "note": self.note}


def _laplacian_of(v, y, h: float = 1e-3):
    lap = getattr(v, "laplacian", None)
    return lap(y) if lap is not None else _fd_laplacian(v, y, h)


def sci_check(v1, v2, omega: PlanarDomain, n_spot: int = SPOT_SAMPLES, seed: int = 0,
              tol: float = 1e-6) -> SciResult:
    """``int_omega (e^{2 v1} + e^{2 v2}) dy`` and the covering-inequality verdict.

    Hypotheses are spot-checked on ``n_spot`` seeded interior samples and on
    the boundary: ``v2 >= v1``, ``v2`` not identical to ``v1``, ``v1 = v2`` on
    the boundary, and ``f_i = Lap v_i + e^{2 v_i}`` with ``f2 >= f1 >= 0``.
    """
    rng = np.random.default_rng(seed)
    inner = omega.interior_points(n_spot, rng)
    bnd = omega.boundary_points(max(256, n_spot // 20))
    d_in = v2(inner) - v1(inner)
    d_bd = np.abs(v2(bnd) - v1(bnd))
    f1 = _laplacian_of(v1, inner) + np.exp(2 * v1(inner))
    f2 = _laplacian_of(v2, inner) + np.exp(2 * v2(inner))
    checks = {
        "min_v2_minus_v1": float(np.min(d_in)),
        "max_v2_minus_v1": float(np.max(d_in)),
        "max_boundary_gap": float(np.max(d_bd)),
        "min_f1": float(np.min(f1)),
        "min_f2_minus_f1": float(np.min(f2 - f1)),
        "samples": int(n_spot),
    }
    reasons = []
    if checks["min_v2_minus_v1"] < -BOUNDARY_TOL:
        reasons.append("ordering v2 >= v1 fails")
    if checks["max_v2_minus_v1"] <= BOUNDARY_TOL:
        reasons.append("v2 coincides with v1")
    if checks["max_boundary_gap"] > BOUNDARY_TOL:
        reasons.append("boundary values differ")
    if checks["min_f1"] < -SUPERSOLUTION_TOL or checks["min_f2_minus_f1"] < -SUPERSOLUTION_TOL:
        reasons.append("curvature condition f2 >= f1 >= 0 fails")

    def dens(y):
        return np.exp(2 * v1(y)) + np.exp(2 * v2(y))

    mass = omega.integrate(dens)
    planar = omega.integrate_planar(dens) if hasattr(omega, "integrate_planar") else mass
    if reasons:
        verdict = "inapplicable"
    else:
        verdict = "holds" if mass >= 4.0 * np.pi - tol else "violated"
    return SciResult(float(mass), float(planar), verdict, reasons, checks)


# -- reflected nodal pairs -----------------------------------------------------------------

@dataclass
class ReflectedPairMasses:
    masses: np.ndarray            # int_{omega_i} (e^{w(y)} + e^{w(y~)}) dy for each pair
    masses_sphere: np.ndarray     # the same via (2/alpha) int_{Omega_i u Omega_i~} e^u dS
    total: float
    count: int
    inconclusive: bool
    reflection_defect: float


def reflected_pair_mass(u: SphereField, alpha: float, y_axis, refine: int = 4,
                        tau: float = 1e-9) -> ReflectedPairMasses:
    """Masses of the reflected nodal pairs of ``u`` across the plane ``P_y``.

    The sphere is rotated so that ``y`` becomes ``e1``; ``P_y`` then passes
    through the north pole and projects to the line ``y1 = 0``, across which
    the sphere reflection is ``(y1, y2) -> (-y1, y2)``.  Each region with
    ``Phi > 0`` is paired with its mirror image.
    """
    y = np.asarray(y_axis, dtype=float)
    y = y / np.linalg.norm(y)
    d = reflection_defect(u, y)
    if d <= 1e-8:
        return ReflectedPairMasses(np.empty(0), np.empty(0), 0.0, 0, False, d)
    F = frame(y)
    # R maps y to e1 (R = rows e1 <- y, e2 <- F[:,1], e3 <- F[:,0]), a proper rotation
    R = np.array([y, F[:, 0], F[:, 1]])
    if np.linalg.det(R) < 0:
        R[2] = -R[2]
    ur = rotate_field(u, R)
    e1 = np.array([1.0, 0.0, 0.0])
    nr = nodal_regions(ur, e1, tau=tau, refine=refine, alpha=alpha)
    fg = nr.grid
    x = fg.points
    w = chain_to_w(ur, alpha)
    yy = project(x)
    yt = yy * np.array([-1.0, 1.0])
    dens = (w.exp(yy) + w.exp(yt)) * pullback_jacobian(x)
    labels = nr.labels.ravel()
    wts = fg.weights.ravel()
    masses, masses_s = [], []
    for lab in range(1, nr.count + 1):
        if nr.signs[lab - 1] < 0:
            continue
        sel = labels == lab
        masses.append(float(wts[sel] @ dens[sel]))
        mirror = labels[_mirror_index(fg, sel)]
        mirror_lab = np.bincount(mirror[mirror > 0]).argmax() if np.any(mirror > 0) else 0
        m_s = nr.exp_masses[lab - 1] + (nr.exp_masses[mirror_lab - 1] if mirror_lab else 0.0)
        masses_s.append(2.0 / alpha * m_s)
    return ReflectedPairMasses(np.array(masses), np.array(masses_s), float(np.sum(masses)),
                               len(masses), nr.inconclusive, d)


def _mirror_index(grid, sel: np.ndarray) -> np.ndarray:
    """Flat indices of the mirror images (x1 -> -x1) of the selected nodes."""
    nt, nph = grid.shape
    j, i = np.divmod(np.flatnonzero(sel), nph)
    # x1 -> -x1 is phi -> pi - phi, which maps node i to (nph/2 - i) mod nph
    return j * nph + (nph // 2 - i) % nph
