"""Geometric diagnostics of solutions: great-circle gradient profiles, the
existence-of-orthogonal-gradient hypothesis (H), the axis classes S1/S2,
the tangent field F built from the zero pattern, reflection defects, nodal
decompositions of ``u - u o reflection`` and axial-symmetry detection.

Conventions
-----------
``C_y`` is the great circle ``{x . y = 0}``, parameterized as
``c(s) = cos(s) e1 + sin(s) e2`` with ``e1 x e2 = y`` (counterclockwise seen
from ``y``).  The profile is ``g(s) = grad u(c(s)) . y``.  For a field of
bandlimit ``L``, ``g`` is a trigonometric polynomial of degree ``<= L - 1``,
so ``2L`` samples determine it exactly and zeros are refined on the exact
interpolant.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq, root
from scipy.spatial import ConvexHull

from . import kernels
from .mfe_core import residual
from .sphere_grid import (SphereField, SphereGrid, evaluate, frame, great_circle,
                          rotate_field, rotation_to_pole, surface_gradient)

log = logging.getLogger(__name__)

EPS_ZERO = 1e-9
TRANSVERSAL_TOL = 1e-7
DEFECT_TOL = 1e-5
NODAL_TAU = 1e-9
MIN_REGION_NODES = 8
NOT_AXISYMMETRIC = 0.1

S2, S1, H_VIOLATION, DEGENERATE, MULTIPLE = "S2", "S1", "H_violation", "degenerate", "multiple"


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` quasi-uniform unit vectors (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    ph = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(ph), r * np.sin(ph), z])


def fibonacci_axes(n: int = 1000) -> np.ndarray:
    """``n`` axes, one per antipodal pair: the upper half of a ``2n``-point spiral."""
    pts = fibonacci_sphere(2 * n)
    return pts[pts[:, 2] > 0][:n]


# -- trigonometric interpolation ----------------------------------------------

class TrigInterpolant:
    """Exact interpolant of equispaced samples of a trigonometric polynomial."""

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        self.n = samples.size
        F = np.fft.rfft(samples) / self.n
        if self.n % 2 == 0:
            F[-1] *= 0.5     # split the Nyquist term symmetrically
        self.F = F
        self.k = np.arange(F.size)

    def __call__(self, s, deriv: int = 0):
        s = np.asarray(s, dtype=float)
        ph = np.exp(1j * np.multiply.outer(s, self.k))
        c = self.F * (1j * self.k) ** deriv
        w = np.where(self.k == 0, 1.0, 2.0)
        return np.real(ph @ (w * c))

    def upsample(self, m: int) -> np.ndarray:
        """Values on ``m >= n`` equispaced points (zero-padded inverse FFT)."""
        G = np.zeros(m // 2 + 1, dtype=complex)
        G[: self.F.size] = self.F * m
        return np.fft.irfft(G, m)


# -- profiles ------------------------------------------------------------------

@dataclass
class GreatCircleProfile:
    axis: np.ndarray
    angles: np.ndarray
    samples: np.ndarray
    zeros: np.ndarray                   # angles of all zeros (transversal and tangential)
    sign_changes: list                  # [(angle, "+-" | "-+")]
    tangential: np.ndarray              # angles of zeros without a sign change
    cls: str
    interp: TrigInterpolant = dc_field(repr=False)

    def point(self, s) -> np.ndarray:
        F = frame(self.axis)
        s = np.asarray(s, dtype=float)
        return np.multiply.outer(np.cos(s), F[:, 0]) + np.multiply.outer(np.sin(s), F[:, 1])

    def tangent(self, s) -> np.ndarray:
        F = frame(self.axis)
        s = np.asarray(s, dtype=float)
        return -np.multiply.outer(np.sin(s), F[:, 0]) + np.multiply.outer(np.cos(s), F[:, 1])

    def __call__(self, s):
        return self.interp(s)

    @property
    def n_transversal(self) -> int:
        return len(self.sign_changes)

    def as_dict(self) -> dict:
        return {
            "axis": [float(v) for v in self.axis],
            "class": self.cls,
            "zeros": [float(z) for z in self.zeros],
            "sign_changes": [[float(a), d] for a, d in self.sign_changes],
        }


def _refine_zero(f: TrigInterpolant, a: float, b: float) -> float:
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0 or fb == 0.0:
        return a if fa == 0.0 else b
    if fa * fb > 0:
        # the upsampled values and the direct evaluation disagree at roundoff level
        s = a - fa * (b - a) / (fb - fa)
        return s
    s = brentq(lambda x: float(f(x)), a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    for _ in range(2):
        d = float(f(s, 1))
        if d == 0.0:
            break
        s_new = s - float(f(s)) / d
        if a <= s_new <= b and abs(f(s_new)) <= abs(f(s)):
            s = s_new
    return s


def _refine_extremum(f: TrigInterpolant, s: float, h: float) -> float:
    a, b = s - h, s + h
    da, db = float(f(a, 1)), float(f(b, 1))
    if da * db < 0:
        return brentq(lambda x: float(f(x, 1)), a, b, xtol=1e-15, maxiter=200)
    return s


def profile_from_samples(axis, samples, n_out: int | None = None, eps_zero: float = EPS_ZERO,
                         transversal_tol: float = TRANSVERSAL_TOL) -> GreatCircleProfile:
    """Build and classify a profile from equispaced samples of a trigonometric polynomial.

    The samples must resolve the polynomial (more than twice its degree).
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    samples = np.asarray(samples, dtype=float)
    f = TrigInterpolant(samples)
    n = samples.size
    n_out = n_out or n
    angles = 2.0 * np.pi * np.arange(n_out) / n_out
    out_samples = samples if n_out == n else f(angles)
    if np.max(np.abs(samples)) < eps_zero and np.max(np.abs(f.F)) * 2 * f.F.size < eps_zero * 10:
        return GreatCircleProfile(axis, angles, out_samples, np.empty(0), [], np.empty(0),
                                  DEGENERATE, f)
    m = 16 * n
    ss = 2.0 * np.pi * np.arange(m) / m
    dense = f.upsample(m)
    h = 2.0 * np.pi / m
    nxt = np.roll(dense, -1)
    prv = np.roll(dense, 1)
    sign_changes = []
    for i in np.flatnonzero(dense * nxt < 0):
        z = _refine_zero(f, ss[i], ss[i] + h)
        sign_changes.append((z % (2 * np.pi), "+-" if dense[i] > 0 else "-+"))
    # samples that hit zero exactly: a sign change iff the neighbours differ in sign
    for i in np.flatnonzero((dense == 0.0) & (prv * nxt < 0)):
        sign_changes.append((ss[i], "+-" if prv[i] > 0 else "-+"))
    # tangential zeros: local minima of |g| that touch zero without a sign change
    absd = np.abs(dense)
    cand = (absd <= np.abs(prv)) & (absd <= np.abs(nxt)) & (prv * nxt >= 0)
    cand &= absd < max(1e3 * eps_zero, 1e-6 * np.max(absd))
    tang = []
    for i in np.flatnonzero(cand):
        s = _refine_extremum(f, ss[i], h)
        if abs(float(f(s))) < eps_zero:
            if not any(abs(np.angle(np.exp(1j * (s - t)))) < 2 * h for t in tang):
                tang.append(s % (2 * np.pi))
    # sign changes with vanishing slope are not transversal
    transversal = []
    for s, d in sign_changes:
        if abs(float(f(s, 1))) > transversal_tol:
            transversal.append((s, d))
        else:
            tang.append(s)
    transversal.sort()
    zeros = np.array(sorted([s for s, _ in transversal] + tang))
    nt, ntan = len(transversal), len(tang)
    if nt == 0 and ntan == 0:
        cls = H_VIOLATION
    elif nt == 2 and ntan == 0:
        cls = S2
    elif nt == 0 and ntan == 1:
        cls = S1
    else:
        cls = MULTIPLE
    return GreatCircleProfile(axis, angles, out_samples, zeros, transversal,
                              np.array(sorted(tang)), cls, f)


def _profile_samples(u: SphereField, axes: np.ndarray, n_fft: int) -> np.ndarray:
    pts, ys = [], []
    for y in axes:
        _, p, _ = great_circle(y, n_fft)
        pts.append(p)
    pts = np.concatenate(pts)
    g = surface_gradient(u, pts).reshape(len(axes), n_fft, 3)
    return np.einsum("anj,aj->an", g, axes)


def circle_profile(u: SphereField, y, n: int = 128, eps_zero: float = EPS_ZERO
                   ) -> GreatCircleProfile:
    """Profile of ``grad u . y`` along ``C_y`` with refined zeros and class.

    ``n`` (at least 128) output samples are reported; the interpolant is
    built from ``max(n, 2L)`` samples so it is exact for the bandlimit.
    """
    if n < 128:
        raise ValueError("profile needs at least 128 samples")
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    n_fft = max(n, 2 * u.grid.L)
    g = _profile_samples(u, y[None], n_fft)[0]
    return profile_from_samples(y, g, n_out=n, eps_zero=eps_zero)


def circle_profiles(u: SphereField, axes, n: int = 128, eps_zero: float = EPS_ZERO) -> list:
    axes = np.asarray(axes, dtype=float)
    axes = axes / np.linalg.norm(axes, axis=1)[:, None]
    n_fft = max(n, 2 * u.grid.L)
    out = []
    chunk = 256
    for i in range(0, len(axes), chunk):
        block = axes[i:i + chunk]
        g = _profile_samples(u, block, n_fft)
        out.extend(profile_from_samples(y, gi, n_out=n, eps_zero=eps_zero)
                   for y, gi in zip(block, g))
    return out


# -- hypothesis (H) --------------------------------------------------------------

@dataclass
class HVerdict:
    holds: bool
    n_axes: int
    violating_axes: np.ndarray
    class_counts: dict
    profiles: list = dc_field(repr=False, default_factory=list)

    def as_dict(self) -> dict:
        return {"holds": self.holds, "n_axes": self.n_axes,
                "violating_axes": self.violating_axes.tolist(), "class_counts": self.class_counts}


def _profiles_task(args):
    grid_shape, c, axes, n = args
    u = SphereField(SphereGrid(*grid_shape), c)
    return circle_profiles(u, axes, n)


def check_hypothesis_H(u: SphereField, axis_set=None, n: int = 128, workers: int = 1) -> HVerdict:
    """(H) holds on the sample iff no axis has a zero-free gradient profile.

    Degenerate axes (``g == 0`` on the whole circle) count as satisfying
    (H).  The default axis set is 1000 Fibonacci axes.
    """
    axes = fibonacci_axes(1000) if axis_set is None else np.asarray(axis_set, dtype=float)
    if axes.shape[0] < 500 and axis_set is None:
        raise ValueError("need at least 500 axes")
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        parts = np.array_split(axes, workers)
        shape = (u.grid.L, u.grid.n_theta, u.grid.n_phi)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            profs = [p for chunk in pool.map(_profiles_task, [(shape, u.c, a, n) for a in parts])
                     for p in chunk]
    else:
        profs = circle_profiles(u, axes, n)
    counts = {c: 0 for c in (S2, S1, H_VIOLATION, DEGENERATE, MULTIPLE)}
    bad = []
    for p in profs:
        counts[p.cls] += 1
        if p.cls == H_VIOLATION:
            bad.append(p.axis)
    bad = np.array(bad).reshape(-1, 3)
    return HVerdict(len(bad) == 0, len(profs), bad, counts, profs)


# -- reflections -----------------------------------------------------------------

def reflect_points(pts, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    pts = np.asarray(pts, dtype=float)
    return pts - 2.0 * np.multiply.outer(pts @ y, y)


def _sup_points(grid: SphereGrid) -> np.ndarray:
    """Grid nodes plus an equiangular lattice that includes both poles."""
    nt = grid.n_theta + 1
    th = np.linspace(0.0, np.pi, nt)
    ph = 2.0 * np.pi * np.arange(grid.n_phi) / grid.n_phi
    eq = np.stack([np.outer(np.sin(th), np.cos(ph)), np.outer(np.sin(th), np.sin(ph)),
                   np.outer(np.cos(th), np.ones_like(ph))], axis=-1).reshape(-1, 3)
    return np.concatenate([grid.points, eq])


def reflection_field(u: SphereField, y) -> SphereField:
    """``Phi_y = u - u o reflect_{P_y}``, band-limited like ``u``."""
    g = u.grid
    vals = u.values - evaluate(u, reflect_points(g.points, y)).reshape(g.shape)
    return SphereField.from_values(g, vals)


def reflection_defect(u: SphereField, y, pts=None) -> float:
    """``sup |u(x) - u(x_hat)|`` over the grid nodes and an equiangular lattice with poles."""
    pts = _sup_points(u.grid) if pts is None else pts
    a = evaluate(u, pts)
    b = evaluate(u, reflect_points(pts, y))
    return float(np.max(np.abs(a - b)))


def three_zero_test(u: SphereField, y, alpha: float | None = None,
                    profile: GreatCircleProfile | None = None, solution_tol: float = 1e-8) -> dict:
    """Consistency of a solution with the three-zeros-imply-reflection-symmetry lemma.

    Applies only to solutions: ``alpha`` must be given and the residual
    below ``solution_tol``.  Axes with at least three zeros (or a degenerate
    profile) must have reflection defect below ``1e-5``.
    """
    if alpha is None:
        return {"status": "not-applicable", "reason": "no alpha: not a solution"}
    if residual(u, alpha).sup_norm > solution_tol:
        return {"status": "not-applicable", "reason": "field is not a solution"}
    profile = profile or circle_profile(u, y)
    nz = len(profile.zeros)
    if profile.cls != DEGENERATE and nz < 3:
        return {"status": "not-applicable", "reason": f"{nz} zeros", "zeros": nz}
    d = reflection_defect(u, y)
    status = "consistent" if d < DEFECT_TOL else "alarm"
    return {"status": status, "defect": d, "zeros": nz, "class": profile.cls}


# -- the field F -------------------------------------------------------------------

@dataclass
class FValue:
    vector: np.ndarray | None
    case: str | None          # "I", "II" or None when absent
    status: str               # "ok" or the reason F is absent

    @property
    def defined(self) -> bool:
        return self.vector is not None


def vector_field_F(u: SphereField | None, y, profile: GreatCircleProfile | None = None,
                   eps_zero: float = EPS_ZERO) -> FValue:
    """The tangent vector ``F(y)`` from the zero pattern of the profile on ``C_y``.

    Case I (class S2): ``p1`` is the ``+ -> -`` crossing, ``p2`` the
    ``- -> +`` crossing, and ``F`` is ``p2 - p1`` projected to the tangent
    plane at ``y`` and normalized.  Since both points lie on ``C_y`` the
    chord is already orthogonal to ``y``; the projection only removes
    roundoff.  Case II (class S1): the unit circle tangent at the zero,
    counterclockwise when ``g >= 0`` on the circle and clockwise otherwise.
    """
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    if profile is None:
        profile = circle_profile(u, y)
    if profile.cls == S2:
        p1 = next(profile.point(s) for s, d in profile.sign_changes if d == "+-")
        p2 = next(profile.point(s) for s, d in profile.sign_changes if d == "-+")
        v = p2 - p1
        v = v - (v @ y) * y
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            return FValue(None, "I", "antipodal-degenerate")
        v = v / nv
        v = v - (v @ y) * y
        return FValue(v / np.linalg.norm(v), "I", "ok")
    if profile.cls == S1:
        s0 = profile.tangential[0]
        t = profile.tangent(s0)
        nonneg = np.min(profile.interp.upsample(16 * profile.interp.n)) > -eps_zero
        v = t if nonneg else -t
        v = v - (v @ y) * y
        return FValue(v / np.linalg.norm(v), "II", "ok")
    return FValue(None, None, f"absent: {profile.cls}")


@dataclass
class FieldDegree:
    degree: int | None
    sites: list                  # [(centroid, winding)] for triangles with nonzero winding
    absent: np.ndarray           # axes where F is undefined
    verdict: str


def _winding(vecs, centre) -> int:
    e = frame(centre)
    a = vecs @ e[:, 0]
    b = vecs @ e[:, 1]
    ang = np.arctan2(b, a)
    d = np.diff(np.append(ang, ang[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(np.rint(d.sum() / (2 * np.pi)))


def field_degree(source, axis_sample=None) -> FieldDegree:
    """Index sum of a tangent field over a triangulated sphere of axes.

    ``source`` is a ``SphereField`` (then ``F`` is built from its profiles)
    or a callable ``y -> vector or None``.  Each hull triangle contributes
    the winding of the field around it, measured in the tangent plane at
    the triangle's centroid.  The sum equals the Euler characteristic 2 for
    any continuous field with isolated zeros; a nonzero-winding triangle
    marks a zero or a discontinuity.
    """
    pts = fibonacci_sphere(2000) if axis_sample is None else np.asarray(axis_sample, float)
    pts = pts / np.linalg.norm(pts, axis=1)[:, None]
    if isinstance(source, SphereField):
        profs = circle_profiles(source, pts)
        vals = [vector_field_F(None, y, p) for y, p in zip(pts, profs)]
        vecs = [v.vector for v in vals]
    else:
        vecs = [source(y) for y in pts]
    absent = np.array([y for y, v in zip(pts, vecs) if v is None]).reshape(-1, 3)
    if len(absent):
        return FieldDegree(None, [], absent, "F absent on part of the sample")
    V = np.array(vecs, dtype=float)
    hull = ConvexHull(pts)
    total, sites = 0, []
    for tri in hull.simplices:
        P = pts[tri]
        if np.dot(np.cross(P[1] - P[0], P[2] - P[0]), P.sum(0)) < 0:
            tri = tri[::-1]
            P = pts[tri]
        c = P.sum(0)
        c /= np.linalg.norm(c)
        w = _winding(V[tri], c)
        if w:
            sites.append((c, w))
            total += w
    verdict = ("index sum equals the Euler characteristic" if total == 2
               else f"index sum {total} differs from the Euler characteristic 2")
    return FieldDegree(total, sites, absent, verdict)


# -- nodal decomposition -----------------------------------------------------------

@dataclass
class NodalRegions:
    count: int
    areas: np.ndarray            # unnormalized spherical areas
    signs: np.ndarray            # +1 where Phi > tau, -1 where Phi < -tau
    node_counts: np.ndarray
    exp_masses: np.ndarray       # int_region e^u dS
    inconclusive: bool
    area_bound: float            # 8 pi / (2 e^{|u|_inf})
    area_bound_alpha: float      # 2 pi alpha e^{-|u|_inf}, nan without alpha
    labels: np.ndarray = dc_field(repr=False)
    grid: SphereGrid = dc_field(repr=False)

    def bound_holds(self, slack: float = 1e-3) -> bool:
        return bool(np.all(self.areas >= self.area_bound - slack))

    def as_dict(self) -> dict:
        return {"count": self.count, "areas": self.areas.tolist(), "signs": self.signs.tolist(),
                "node_counts": self.node_counts.tolist(), "inconclusive": self.inconclusive,
                "area_bound": self.area_bound, "area_bound_alpha": self.area_bound_alpha}


def nodal_regions(u: SphereField, y, tau: float = NODAL_TAU, refine: int = 4,
                  alpha: float | None = None) -> NodalRegions:
    """Connected components of ``{Phi_y > tau}`` and ``{Phi_y < -tau}``.

    ``Phi_y`` is synthesized on a grid ``refine`` times finer than ``u``'s
    and labelled by flood fill (longitude wraps, rings adjacent to a pole
    connect across it).  Areas and ``e^u`` masses use that grid's weights.
    """
    if reflection_defect(u, y) <= 1e-8:
        raise ValueError("reflection defect vanishes: the nodal set is everything")
    phi = reflection_field(u, y)
    g = u.grid
    fg = SphereGrid(g.L, g.n_theta * refine, g.n_phi * refine)
    pv = fg.synthesize_array(phi.c)
    sign = np.where(pv > tau, 1, np.where(pv < -tau, -1, 0)).astype(np.int8)
    labels, count = kernels.label_sphere_grid(sign)
    idx = labels.ravel()
    w = fg.weights.ravel()
    ev = np.exp(fg.synthesize_array(u.c)).ravel()
    areas = np.bincount(idx, weights=w, minlength=count + 1)[1:]
    masses = np.bincount(idx, weights=w * ev, minlength=count + 1)[1:]
    nodes = np.bincount(idx, minlength=count + 1)[1:]
    signs = np.zeros(count, dtype=int)
    flat_sign = sign.ravel()
    for lab in range(1, count + 1):
        signs[lab - 1] = flat_sign[np.argmax(idx == lab)]
    sup = u.sup_norm
    bound = 8.0 * np.pi / (2.0 * np.exp(sup))
    bound_a = 2.0 * np.pi * alpha * np.exp(-sup) if alpha is not None else float("nan")
    return NodalRegions(int(count), areas, signs, nodes, masses,
                        bool(np.any(nodes < MIN_REGION_NODES)), float(bound), float(bound_a),
                        labels, fg)


# -- axial symmetry ------------------------------------------------------------------

@dataclass
class AxisResult:
    axis: np.ndarray
    deviation: float
    axisymmetric: bool
    candidates: list            # [(axis, deviation)]


def axisymmetric_part_deviation(u: SphereField, axis) -> float:
    """``sup |u - (average of u over rotations about axis)|`` on the grid nodes."""
    v = rotate_field(u, rotation_to_pole(axis))
    from .sphere_grid import degree_order
    _, m = degree_order(u.grid.L)
    c = np.where(m == 0, 0.0, v.c)
    return float(np.max(np.abs(u.grid.synthesize_array(c))))


def _generator_matrix(u: SphereField) -> np.ndarray:
    """``G_ij = int (x x grad u)_i (x x grad u)_j d omega``; ``a^T G a`` vanishes iff u is
    invariant under rotations about ``a``."""
    g = u.grid
    _, grad = evaluate(u, g.points, with_gradient=True)
    Lu = np.cross(g.points, grad)
    w = g.weights.ravel() / (4.0 * np.pi)
    return (Lu * w[:, None]).T @ Lu


def _multipole_candidates(u: SphereField) -> list:
    c = u.c
    out = []
    if u.grid.L >= 1:
        d = np.array([c[3], c[1], c[2]])        # Y_1^1 ~ x1, Y_1^-1 ~ x2, Y_1^0 ~ x3
        if np.linalg.norm(d) > 1e-14:
            out.append(d / np.linalg.norm(d))
    if u.grid.L >= 2:
        # degree-2 part as the traceless quadratic form x^T Q x, recovered by sampling
        from .sphere_grid import degree_order
        k, _ = degree_order(u.grid.L)
        c2 = np.where(k == 2, c, 0.0)
        f2 = SphereField(u.grid, c2)
        E = np.eye(3)
        P = [E[0], E[1], E[2], (E[0] + E[1]) / np.sqrt(2), (E[0] + E[2]) / np.sqrt(2),
             (E[1] + E[2]) / np.sqrt(2)]
        v = evaluate(f2, np.array(P))
        Q = np.diag(v[:3])
        Q[0, 1] = Q[1, 0] = v[3] - 0.5 * (v[0] + v[1])
        Q[0, 2] = Q[2, 0] = v[4] - 0.5 * (v[0] + v[2])
        Q[1, 2] = Q[2, 1] = v[5] - 0.5 * (v[1] + v[2])
        if np.max(np.abs(Q)) > 1e-14:
            out.extend(np.linalg.eigh(Q)[1].T)
    return out


def detect_axis(u: SphereField) -> AxisResult:
    """Axis of (approximate) rotational symmetry.

    Candidates are the dipole direction, the principal directions of the
    quadrupole and the least-variance direction of the rotation generators;
    the one whose axisymmetric projection deviates least from ``u`` wins.
    """
    if np.max(np.abs(u.c[1:])) < 1e-14:
        raise ValueError("constant field: every axis is a symmetry axis")
    G = _generator_matrix(u)
    cands = _multipole_candidates(u)
    cands.append(np.linalg.eigh(G)[1][:, 0])
    scored = [(a, axisymmetric_part_deviation(u, a)) for a in cands]
    best = min(scored, key=lambda t: t[1])
    return AxisResult(best[0], best[1], best[1] <= NOT_AXISYMMETRIC, scored)


# -- critical points ---------------------------------------------------------------------

@dataclass
class CriticalPairs:
    pairs: list                  # [(x, -x, |grad u(x)|, |grad u(-x)|)]
    degenerate: bool


def _refine_critical(u: SphereField, x0: np.ndarray):
    F = frame(x0)
    e1, e2 = F[:, 0], F[:, 1]

    def pt(p):
        x = x0 + p[0] * e1 + p[1] * e2
        return x / np.linalg.norm(x)

    def fun(p):
        g = surface_gradient(u, pt(p)[None])[0]
        return [g @ e1, g @ e2]

    sol = root(fun, np.zeros(2), method="hybr", options={"xtol": 1e-15})
    x = pt(sol.x)
    return x, float(np.linalg.norm(surface_gradient(u, x[None])[0]))


def antipodal_critical_pair(u: SphereField, tol: float = 1e-8, max_candidates: int = 40
                            ) -> CriticalPairs:
    """Pairs ``(x, -x)`` of critical points, located on the grid and refined by Newton."""
    g = u.grid
    _, grad = evaluate(u, g.points, with_gradient=True)
    gn = np.linalg.norm(grad, axis=1).reshape(g.shape)
    if np.max(gn) < 1e-12:
        return CriticalPairs([], True)
    nb = [np.roll(gn, 1, 1), np.roll(gn, -1, 1),
          np.vstack([gn[:1], gn[:-1]]), np.vstack([gn[1:], gn[-1:]])]
    is_min = np.all([gn <= b for b in nb], axis=0)
    # rings next to a pole: compare with the ring's own minimum across the pole
    idx = np.flatnonzero(is_min.ravel())
    idx = idx[np.argsort(gn.ravel()[idx])][:max_candidates]
    crit = []
    for i in idx:
        x, r = _refine_critical(u, g.points[i])
        if r < tol and not any(np.linalg.norm(x - c) < 1e-6 for c in crit):
            crit.append(x)
    pairs, used = [], set()
    for i, x in enumerate(crit):
        if i in used:
            continue
        xm, rm = _refine_critical(u, -x)
        if rm < tol and np.linalg.norm(xm + x) < 1e-6:
            r = float(np.linalg.norm(surface_gradient(u, x[None])[0]))
            pairs.append((x, xm, r, rm))
            used.add(i)
            for j, c in enumerate(crit):
                if np.linalg.norm(c - xm) < 1e-6:
                    used.add(j)
    return CriticalPairs(pairs, False)


# -- hemisphere identity -------------------------------------------------------------------

def hemisphere_identity_defect(u: SphereField, alpha: float, y) -> float:
    """``(int_{H_y} - int_{H_-y}) e^u dS - alpha oint_{C_y} grad u . y ds`` (zero on solutions)."""
    from .sphere_grid import conormal_flux, hemisphere_integral
    y = np.asarray(y, dtype=float)
    lhs = hemisphere_integral(u, y, np.exp) - hemisphere_integral(u, -y, np.exp)
    return float(lhs - alpha * conormal_flux(u, y))


def hemisphere_mass_gap(u: SphereField, y) -> float:
    from .sphere_grid import hemisphere_integral
    y = np.asarray(y, dtype=float)
    return float(hemisphere_integral(u, y, np.exp) - hemisphere_integral(u, -y, np.exp))


# -- report ----------------------------------------------------------------------------------

@dataclass
class AxisRecord:
    direction: np.ndarray
    cls: str
    zeros: list
    F: np.ndarray | None
    defect: float | None

    def as_dict(self) -> dict:
        return {"direction": [float(v) for v in self.direction], "class": self.cls,
                "zeros": [float(z) for z in self.zeros],
                "F": None if self.F is None else [float(v) for v in self.F],
                "defect": self.defect}


@dataclass
class SymmetryReport:
    axes: list
    h_holds: bool
    violating_axes: np.ndarray
    class_counts: dict
    reflection_normal: np.ndarray
    reflection_defect: float
    rotation_axis: np.ndarray | None
    rotation_deviation: float
    nodal_counts: list              # [(axis, count or None)]
    alpha: float | None = None

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "h_holds": self.h_holds,
            "n_axes": len(self.axes),
            "n_violating": int(len(self.violating_axes)),
            "class_counts": self.class_counts,
            "reflection_normal": [float(v) for v in self.reflection_normal],
            "reflection_defect": self.reflection_defect,
            "rotation_axis": None if self.rotation_axis is None
            else [float(v) for v in self.rotation_axis],
            "rotation_deviation": self.rotation_deviation,
            "nodal_counts": [[[float(v) for v in a], c] for a, c in self.nodal_counts],
        }

    def records(self):
        for i, a in enumerate(self.axes):
            d = a.as_dict()
            d["index"] = i
            yield d


def symmetry_report(u: SphereField, alpha: float | None = None, n_axes: int = 1000,
                    n_nodal: int = 4, coarse_points: int = 1024, workers: int = 1
                    ) -> SymmetryReport:
    """Per-axis classes, F, (H) verdict, best reflection plane, axis, nodal counts.

    Per-axis defects are evaluated on a ``coarse_points`` Fibonacci set to
    rank axes; the best few are recomputed on the full sup set.
    """
    axes = fibonacci_axes(n_axes)
    verdict = check_hypothesis_H(u, axes, workers=workers)
    pts = fibonacci_sphere(coarse_points)
    base = evaluate(u, pts)
    coarse = np.array([np.max(np.abs(base - evaluate(u, reflect_points(pts, y)))) for y in axes])
    order = np.argsort(coarse)[:5]
    fine = {int(i): reflection_defect(u, axes[i]) for i in order}
    best = min(fine, key=fine.get)
    records = []
    for i, (y, p) in enumerate(zip(axes, verdict.profiles)):
        F = vector_field_F(None, y, p)
        records.append(AxisRecord(y, p.cls, list(p.zeros), F.vector,
                                  fine.get(i, float(coarse[i]))))
    if np.max(np.abs(u.c[1:])) < 1e-14:
        rot_axis, rot_dev = None, 0.0
    else:
        ar = detect_axis(u)
        rot_axis, rot_dev = ar.axis, ar.deviation
    nodal = []
    for y in axes[np.argsort(-coarse)[:n_nodal]]:
        try:
            nodal.append((y, nodal_regions(u, y, alpha=alpha).count))
        except ValueError:
            nodal.append((y, None))
    return SymmetryReport(records, verdict.holds, verdict.violating_axes, verdict.class_counts,
                          axes[best], fine[best], rot_axis, rot_dev, nodal, alpha)
