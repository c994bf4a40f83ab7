"""Solvers for ``(alpha/2) Lap u + e^u - 1 = 0``.

* :func:`solve_newton` - damped Newton with a GMRES inner solve,
  preconditioned by the trivial-branch symbol ``(1 - alpha k(k+1)/2)^-1``.
* :func:`deflated_solve` - the same iteration on the deflated residual
  ``M(u) F(u)``, ``M(u) = prod_i (||u - r_i||^-2 + 1)``.
* :func:`continue_branch` - pseudo-arclength continuation in ``alpha``.
* :func:`axisymmetric_solve` - an independent 1-D Legendre-Galerkin solver
  for axially symmetric solutions, used as a cross-check.
* :func:`bifurcation_scan` - smallest singular value of the trivial-branch
  linearization as a function of ``alpha``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, gmres

from . import mfe_core as core
from .mfe_core import Linearization, MagnitudeError, MfeParameters
from .sphere_grid import SphereField, SphereGrid, degree_order, default_grid, frame

log = logging.getLogger(__name__)

MIN_DAMPING = 2.0 ** -12
KERNEL_TOL = 1e-8
MONITOR_L = 8
PRECOND_FLOOR = 0.05
GMRES_ATOL = 1e-22
# eigenvalues above -INERTIA_TOL count as non-negative (roundoff at exact degeneracies)
INERTIA_TOL = 1e-10
# eigenvalues below this are roundoff; steps along them are dropped entirely
EIG_FLOOR = 1e-13


def bifurcation_alphas(alpha_lo: float, alpha_hi: float, k_max: int = 200) -> list[float]:
    """``2/(k(k+1))`` values inside ``[alpha_lo, alpha_hi]``, descending."""
    out = []
    for k in range(1, k_max + 1):
        a = 2.0 / (k * (k + 1))
        if alpha_lo <= a <= alpha_hi:
            out.append(a)
    return out


@dataclass
class SolveOutcome:
    solution: SphereField
    residual_norm: float
    iterations: int
    converged: bool
    alpha: float
    kernel_dim: int = 0
    smallest_singular_value: float = float("nan")
    center_of_mass: np.ndarray = dc_field(default_factory=lambda: np.full(3, np.nan))
    message: str = ""

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "sup_norm": self.solution.sup_norm,
            "kernel_dim": self.kernel_dim,
            "smallest_singular_value": self.smallest_singular_value,
            "center_of_mass": [float(x) for x in self.center_of_mass],
            "message": self.message,
        }


def preconditioner_symbol(L: int, alpha: float, floor: float = PRECOND_FLOOR) -> np.ndarray:
    """``(1 - alpha k(k+1)/2)`` per coefficient, magnitude clamped below by ``floor``."""
    k, _ = degree_order(L)
    d = 1.0 - 0.5 * alpha * k * (k + 1.0)
    return np.where(np.abs(d) < floor, np.where(d < 0, -floor, floor), d)


def near_kernel(lin: Linearization, L_mon: int = MONITOR_L, tol: float = KERNEL_TOL):
    """Eigen-analysis of the low-degree Galerkin block of the linearization.

    Returns ``(basis, smallest |eigenvalue|, eigenvalues, eigenvectors)``;
    ``basis`` holds (as columns, padded to the full coefficient length) the
    eigenvectors whose eigenvalues are below ``tol`` in magnitude.
    """
    M = lin.dense(L_mon)
    w, V = np.linalg.eigh(M)
    small = np.abs(w) < tol
    basis = np.zeros((lin.n, int(small.sum())))
    basis[: M.shape[0]] = V[:, small]
    return basis, float(np.min(np.abs(w))), w, V


def _gmres_solve(lin: Linearization, rhs: np.ndarray, alpha: float, K: np.ndarray, rtol: float,
                 eig=None):
    """Krylov solve of ``lin x = rhs`` in the complement of ``K``.

    Above the monitored block the preconditioner is the trivial-branch
    symbol; when ``eig = (w, V)`` of the low-degree Galerkin block is given,
    that block is inverted exactly (kernel directions dropped).
    """
    n = lin.n
    d = preconditioner_symbol(lin.grid.L, alpha)

    if K.shape[1]:
        def proj(v):
            return v - K @ (K.T @ v)
    else:
        def proj(v):
            return v

    if eig is not None:
        w, V = eig
        nb = V.shape[0]
        keep = np.abs(w) >= KERNEL_TOL
        Vk, wk = V[:, keep], w[keep]

        def prec(v):
            out = v / d
            out[:nb] = Vk @ ((Vk.T @ v[:nb]) / wk)
            return proj(out)
    else:
        def prec(v):
            return proj(v / d)

    A = LinearOperator((n, n), matvec=lambda v: proj(lin.matvec(proj(v))), dtype=float)
    M = LinearOperator((n, n), matvec=prec, dtype=float)
    b = proj(rhs)
    # absolute floor: below it the residual is at roundoff level
    x, info = gmres(A, b, rtol=rtol, atol=GMRES_ATOL, restart=60, maxiter=10, M=M)
    return proj(x), info


def _near_kernel_step(rhs: np.ndarray, K: np.ndarray, eig) -> np.ndarray | None:
    """Newton increment along the projected-out near-kernel directions.

    At a singular root the remaining error lives in these directions; along
    a symmetry kernel the increment is noise.  The caller keeps it only if
    it lowers the residual.
    """
    if eig is None or not K.shape[1]:
        return None
    w, V = eig
    sel = (np.abs(w) < KERNEL_TOL) & (np.abs(w) >= EIG_FLOOR)
    if not np.any(sel):
        return None
    nb = V.shape[0]
    Vs = V[:, sel]
    out = np.zeros_like(rhs)
    out[:nb] = Vs @ ((Vs.T @ rhs[:nb]) / w[sel])
    return out


class _Deflation:
    """Shifted-norm deflation operator with power 2 and shift 1."""

    def __init__(self, known, power: float = 2.0, shift: float = 1.0):
        self.known = [r.c for r in known]
        self.power = power
        self.shift = shift

    def factor(self, c: np.ndarray) -> float:
        m = 1.0
        for r in self.known:
            m *= np.linalg.norm(c - r) ** -self.power + self.shift
        return m

    def step_scale(self, c: np.ndarray, delta: np.ndarray) -> float:
        """Scale turning a Newton step for F into one for M F."""
        g = 0.0
        for r in self.known:
            e = c - r
            nrm = np.linalg.norm(e)
            mi = nrm ** -self.power + self.shift
            g += -self.power * nrm ** (-self.power - 2) * float(e @ delta) / mi
        denom = 1.0 - g
        return 1.0 / denom if abs(denom) > 1e-14 else 1.0


def _solve(u0: SphereField, params: MfeParameters, deflation: _Deflation | None = None,
           kernel_tol: float = KERNEL_TOL, monitor_L: int = MONITOR_L) -> SolveOutcome:
    alpha = params.alpha
    if u0.sup_norm > 50.0:
        raise ValueError(f"initial guess too large: |u0|_inf = {u0.sup_norm:.3g} > 50")
    u = core.normalize(u0)
    last_step = np.inf
    kernel_dim, smin = 0, float("nan")
    message = "max_iter reached"
    converged = False
    it = 0
    try:
        F = core.residual(u, alpha)
    except MagnitudeError as exc:
        return SolveOutcome(u, float("inf"), 0, False, alpha, message=str(exc))
    for it in range(params.max_iter + 1):
        rnorm = F.sup_norm
        if not np.isfinite(rnorm):
            message = "non-finite residual"
            break
        if rnorm < params.newton_tol and last_step < params.step_tol:
            converged = True
            message = "converged"
            break
        if it == params.max_iter:
            break
        lin = Linearization(u, alpha)
        K, smin, w, V = near_kernel(lin, monitor_L, kernel_tol)
        kernel_dim = K.shape[1]
        rtol = float(np.clip(np.linalg.norm(F.c), 1e-10, 1e-4))
        delta, info = _gmres_solve(lin, -F.c, alpha, K, rtol, (w, V))
        extra = _near_kernel_step(-F.c, K, (w, V))
        if extra is not None:
            try:
                r_with = np.linalg.norm(core.residual(
                    core.normalize(SphereField(u.grid, u.c + delta + extra)), alpha).c)
                r_without = np.linalg.norm(core.residual(
                    core.normalize(SphereField(u.grid, u.c + delta)), alpha).c)
                if r_with < r_without:
                    delta = delta + extra
            except MagnitudeError:
                pass
        if deflation is not None:
            delta = delta * deflation.step_scale(u.c, delta)
        merit0 = np.linalg.norm(F.c) * (deflation.factor(u.c) if deflation else 1.0)
        lam = 1.0
        accepted = False
        while lam >= MIN_DAMPING:
            trial = SphereField(u.grid, u.c + lam * delta)
            try:
                trial = core.normalize(trial)
                Ft = core.residual(trial, alpha)
            except (MagnitudeError, FloatingPointError):
                lam *= 0.5
                continue
            merit = np.linalg.norm(Ft.c) * (deflation.factor(trial.c) if deflation else 1.0)
            if np.isfinite(merit) and merit <= (1.0 - 1e-4 * lam) * merit0:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # no damped step lowers a residual already below tolerance: roundoff floor
            if rnorm < params.newton_tol:
                converged = True
                message = "converged (residual at roundoff floor)"
            else:
                message = "line search failed"
            break
        step = SphereField(u.grid, lam * delta)
        last_step = step.sup_norm
        u, F = trial, Ft
        log.debug("newton it=%d res=%.3e step=%.3e lam=%.3g kdim=%d", it, rnorm, last_step,
                  lam, kernel_dim)
    rnorm = F.sup_norm
    out = SolveOutcome(u, float(rnorm), it, converged, alpha, kernel_dim, smin,
                       message=message)
    if converged:
        out.center_of_mass = core.center_of_mass(u)
    return out


def solve_newton(u0: SphereField, alpha: float, params: MfeParameters | None = None,
                 **kw) -> SolveOutcome:
    """Damped Newton-Krylov solve from ``u0``.

    Non-convergence is reported through ``converged=False`` rather than an
    exception.  Near-singular directions (Galerkin eigenvalues of the
    degree-``<= monitor_L`` block below ``kernel_tol``) are projected out of
    the linear solves and their count is reported as ``kernel_dim``.
    """
    params = params or MfeParameters(alpha)
    if params.alpha != alpha:
        params = replace(params, alpha=alpha)
    return _solve(u0, params, None, **kw)


def deflated_solve(u0: SphereField, alpha: float, known, params: MfeParameters | None = None,
                   min_distance: float = 1e-3, **kw) -> SolveOutcome:
    """Newton on the deflated residual; never returns one of ``known``.

    A run that diverges or lands within ``min_distance`` (sup norm) of a known
    solution is reported as ``converged=False`` with message ``"exhausted"``.
    """
    known = list(known)
    params = params or MfeParameters(alpha)
    if params.alpha != alpha:
        params = replace(params, alpha=alpha)
    if not known:
        return _solve(u0, params, None, **kw)
    out = _solve(u0, params, _Deflation(known), **kw)
    if out.converged:
        dist = min((out.solution - r).sup_norm for r in known)
        if dist < min_distance:
            out.converged = False
            out.message = "exhausted"
    else:
        out.message = "exhausted: " + out.message
    return out


def random_initial_guess(grid: SphereGrid, seed: int, degree: int = 8, scale: float = 0.3):
    """Seeded random band-limited field.

    Coefficients of degrees ``1..degree`` are i.i.d. ``N(0, (scale/(2k+1))^2)``
    (degree-0 is irrelevant after normalization); higher degrees vanish.
    """
    rng = np.random.default_rng(seed)
    k, _ = degree_order(grid.L)
    c = np.zeros(grid.n_coeffs)
    sel = (k >= 1) & (k <= degree)
    c[sel] = rng.normal(size=int(sel.sum())) * scale / (2 * k[sel] + 1)
    return SphereField(grid, c)


def orthogonal_start(grid: SphereGrid, seed: int, size: float = 0.1, exclude_degree: int = 2,
                     degree: int = 8) -> SphereField:
    """Random start with no degree-``exclude_degree`` content, rescaled to sup norm ``size``."""
    u = random_initial_guess(grid, seed, degree=degree)
    k, _ = degree_order(grid.L)
    c = u.c.copy()
    c[k == exclude_degree] = 0.0
    c[0] = 0.0
    v = SphereField(grid, c)
    return v * (size / v.sup_norm)


def _multi_start_task(args):
    alpha, seed, grid_shape, params, known, kernel_tol = args
    grid = SphereGrid(*grid_shape)
    u0 = random_initial_guess(grid, seed)
    if known:
        known_f = [SphereField(grid, c) for c in known]
        return deflated_solve(u0, alpha, known_f, params, kernel_tol=kernel_tol)
    return solve_newton(u0, alpha, params, kernel_tol=kernel_tol)


def multi_start(alpha: float, seeds, grid: SphereGrid | None = None,
                params: MfeParameters | None = None, known=(), workers: int = 1,
                kernel_tol: float = KERNEL_TOL):
    """Newton (or deflated Newton, if ``known`` is non-empty) from seeded random starts.

    Runs in a process pool when ``workers > 1``; results are returned in the
    order of ``seeds`` regardless of completion order.
    """
    grid = grid or default_grid()
    params = params or MfeParameters(alpha)
    shape = (grid.L, grid.n_theta, grid.n_phi)
    known_c = [k.c for k in known]
    tasks = [(alpha, int(s), shape, params, known_c, kernel_tol) for s in seeds]
    if workers <= 1 or len(tasks) <= 1:
        return [_multi_start_task(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_multi_start_task, tasks))


# -- continuation ------------------------------------------------------------

@dataclass(frozen=True)
class StepControl:
    initial: float = 0.01
    max_step: float = 0.05
    min_step: float = 1e-5
    max_points: int = 400
    corrector_iter: int = 12
    blowup: float = 50.0

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial <= self.max_step:
            raise ValueError("need 0 < min_step <= initial <= max_step")


@dataclass
class BranchEvent:
    """An inertia change of the monitored block between two accepted points,
    or a fold (the arclength tangent reverses its ``alpha`` direction)."""
    alpha: float
    negative_before: int
    negative_after: int
    kernel_dim: int
    smallest_singular_value: float
    kind: str = "inertia"

    def as_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "negative_before": self.negative_before,
                "negative_after": self.negative_after, "kernel_dim": self.kernel_dim,
                "smallest_singular_value": self.smallest_singular_value}


@dataclass
class SolutionBranch:
    points: list
    branch_id: str = "branch-0"
    events: list = dc_field(default_factory=list)
    stop_reason: str = ""

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.points])

    def __len__(self):
        return len(self.points)


def _inertia(u: SphereField, alpha: float, L_mon: int = MONITOR_L, tol: float = INERTIA_TOL):
    """``(number of eigenvalues < -tol, eigenvalues)`` of the monitored Galerkin block."""
    w = np.linalg.eigvalsh(Linearization(u, alpha).dense(L_mon))
    return int(np.sum(w < -tol)), w


def _locate_event(u_a, alpha_a, u_b, alpha_b, n_a, tol=1e-12, max_bisect=60):
    """Bisect on the inertia count along the chord between two branch points."""
    lo, hi = 0.0, 1.0

    def at(s):
        return SphereField(u_a.grid, (1 - s) * u_a.c + s * u_b.c), (1 - s) * alpha_a + s * alpha_b

    for _ in range(max_bisect):
        if abs(hi - lo) * abs(alpha_b - alpha_a) < tol:
            break
        mid = 0.5 * (lo + hi)
        u, a = at(mid)
        if _inertia(u, a)[0] == n_a:
            lo = mid
        else:
            hi = mid
    u, a = at(0.5 * (lo + hi))
    w = np.linalg.eigvalsh(Linearization(u, a).dense(MONITOR_L))
    kdim = int(np.sum(np.abs(w) < KERNEL_TOL))
    return a, kdim, float(np.min(np.abs(w)))


def _bordered_solve(lin, Fa, t_u, t_a, rhs_u, rhs_a, alpha, K, eig, rtol):
    """Solve ``[[J, Fa], [t_u^T, t_a]] [x; y] = [rhs_u; rhs_a]`` by block elimination."""
    x1, _ = _gmres_solve(lin, rhs_u, alpha, K, rtol, eig)
    x2, _ = _gmres_solve(lin, Fa, alpha, K, rtol, eig)
    denom = t_a - t_u @ x2
    if abs(denom) < 1e-14:
        raise np.linalg.LinAlgError("bordered system singular")
    y = (rhs_a - t_u @ x1) / denom
    return x1 - y * x2, y


def _tangent(u, alpha, t_prev_u, t_prev_a):
    lin = Linearization(u, alpha)
    K, _, w, V = near_kernel(lin)
    Fa = 0.5 * core.laplacian_eigenvalues(u.grid.L) * u.c
    x, y = _bordered_solve(lin, Fa, t_prev_u, t_prev_a, np.zeros(lin.n), 1.0, alpha, K, (w, V),
                           1e-12)
    nrm = np.sqrt(x @ x + y * y)
    return x / nrm, y / nrm


def continue_branch(seed: SolveOutcome, alpha_target: float, step: StepControl | None = None,
                    params: MfeParameters | None = None, branch_id: str = "branch-0"
                    ) -> SolutionBranch:
    """Pseudo-arclength continuation from ``seed`` towards ``alpha_target``.

    Arclength is measured in ``(coefficients, alpha)`` with the Euclidean
    norm.  A failed corrector halves the step; the run stops below
    ``step.min_step``.  Changes of the monitored inertia (negative
    eigenvalues of the low-degree Galerkin block) between accepted points
    are bisected and recorded as events, not failures.
    """
    if not seed.converged:
        raise ValueError("continuation needs a converged seed")
    step = step or StepControl()
    params = params or MfeParameters(seed.alpha)
    direction = 1.0 if alpha_target >= seed.alpha else -1.0
    u, alpha = seed.solution, seed.alpha
    branch = SolutionBranch([seed], branch_id)
    n_neg, _ = _inertia(u, alpha)
    lin = Linearization(u, alpha)
    K, _, w, V = near_kernel(lin)
    Fa = 0.5 * core.laplacian_eigenvalues(u.grid.L) * u.c
    x2, _ = _gmres_solve(lin, -Fa, alpha, K, 1e-12, (w, V))
    nrm = np.sqrt(x2 @ x2 + 1.0)
    t_u, t_a = direction * x2 / nrm, direction / nrm
    ds = step.initial
    lap = 0.5 * core.laplacian_eigenvalues(u.grid.L)
    while True:
        if len(branch.points) >= step.max_points:
            branch.stop_reason = "max_points"
            break
        if (alpha - alpha_target) * direction >= -1e-8:
            branch.stop_reason = "target reached"
            break
        ds_eff = ds
        remaining = (alpha_target - alpha) / t_a if t_a != 0 else np.inf
        if 0 < remaining < ds_eff:
            ds_eff = remaining
        pred_u = u.c + ds_eff * t_u
        pred_a = alpha + ds_eff * t_a
        cu, ca = pred_u.copy(), pred_a
        ok = False
        res = np.inf
        it = 0
        for it in range(1, step.corrector_iter + 1):
            if not ca > 0:
                break
            uf = SphereField(u.grid, cu)
            try:
                Fc = core.residual(uf, ca)
            except MagnitudeError:
                break
            lin = Linearization(uf, ca)
            K, smin, w, V = near_kernel(lin)
            g = t_u @ (cu - pred_u) + t_a * (ca - pred_a)
            try:
                du, da = _bordered_solve(lin, lap * cu, t_u, t_a, -Fc.c, -g, ca, K, (w, V),
                                         float(np.clip(np.linalg.norm(Fc.c), 1e-12, 1e-4)))
            except np.linalg.LinAlgError:
                break
            cu = cu + du
            ca = ca + da
            stepn = max(np.max(np.abs(du)), abs(da))
            uf = SphereField(u.grid, cu)
            if uf.sup_norm > step.blowup:
                break
            res = core.residual(uf, ca).sup_norm
            if res < params.newton_tol and stepn < 1e-8:
                ok = True
                break
        if not ok:
            ds *= 0.5
            log.debug("corrector failed at alpha=%.6g; ds -> %.3g", pred_a, ds)
            if ds < step.min_step:
                branch.stop_reason = "step below minimum"
                break
            continue
        new_u = core.normalize(SphereField(u.grid, cu))
        lin = Linearization(new_u, ca)
        K, smin, w, _ = near_kernel(lin)
        pt = SolveOutcome(new_u, core.residual(new_u, ca).sup_norm, it, True, ca, K.shape[1],
                          smin, core.center_of_mass(new_u), "converged")
        n_new = int(np.sum(w < -INERTIA_TOL))
        if n_new != n_neg:
            a_ev, kdim, sv = _locate_event(u, alpha, new_u, ca, n_neg)
            branch.events.append(BranchEvent(a_ev, n_neg, n_new, kdim, sv))
        t_u, t_a = _tangent(new_u, ca, t_u, t_a)
        branch.points.append(pt)
        u, alpha, n_neg = new_u, ca, n_new
        if t_a * direction < 0:
            branch.events.append(BranchEvent(ca, n_neg, n_neg, pt.kernel_dim,
                                             pt.smallest_singular_value, kind="fold"))
            branch.stop_reason = "fold"
            break
        if u.sup_norm > step.blowup:
            branch.stop_reason = "blow-up"
            break
        ds = min(step.max_step, ds * (1.5 if it <= 4 else 1.0))
    return branch


# -- bifurcation scan -----------------------------------------------------------

@dataclass
class BifurcationScan:
    alphas: np.ndarray
    smallest_singular_values: np.ndarray
    zeros: list            # [(alpha, kernel_dim, smallest singular value)]

    def samples(self):
        return list(zip(self.alphas.tolist(), self.smallest_singular_values.tolist()))


def _scan_block(grid: SphereGrid, u: SphereField | None, L_mon: int):
    u = u if u is not None else SphereField.zeros(grid)
    E = Linearization(u, 1.0).dense(L_mon)
    k, _ = degree_order(L_mon)
    lapd = 0.5 * k * (k + 1.0)
    # dense() added (1/2) Lap with alpha = 1; strip it so alpha can vary
    E[np.diag_indices(lapd.size)] += lapd
    return E, lapd


def linearization_spectrum(alpha: float, u: SphereField | None = None,
                           grid: SphereGrid | None = None, L_mon: int | None = None):
    """Eigenvalues of the Galerkin linearization (symmetric, so |eig| = singular values)."""
    grid = grid or (u.grid if u is not None else default_grid())
    L_mon = L_mon if L_mon is not None else grid.L
    E, lapd = _scan_block(grid, u, L_mon)
    return np.linalg.eigvalsh(E - alpha * np.diag(lapd))


def kernel_dimension(alpha: float, u: SphereField | None = None, grid: SphereGrid | None = None,
                     tol: float = KERNEL_TOL, L_mon: int = MONITOR_L) -> int:
    return int(np.sum(np.abs(linearization_spectrum(alpha, u, grid, L_mon)) < tol))


def bifurcation_scan(alpha_lo: float, alpha_hi: float, n: int, u: SphereField | None = None,
                     grid: SphereGrid | None = None, tol: float = 1e-12) -> BifurcationScan:
    """Smallest singular value of the linearization at ``u`` (default 0) on ``n`` samples.

    Zeros are bracketed by changes in the number of negative eigenvalues
    between samples (or a sample with a vanishing singular value) and
    refined by bisection to ``tol``.  The monitored degree block is chosen
    large enough that every degree whose trivial-branch critical value
    ``2/(k(k+1))`` is at least ``alpha_lo`` is included.
    """
    if not 0 < alpha_lo < alpha_hi:
        raise ValueError("need 0 < alpha_lo < alpha_hi")
    if n < 2:
        raise ValueError("need at least two samples")
    grid = grid or (u.grid if u is not None else default_grid())
    kneed = int(np.ceil(0.5 * (-1 + np.sqrt(1 + 8.0 / alpha_lo)))) + 2
    L_mon = min(grid.L, max(MONITOR_L, kneed))
    E, lapd = _scan_block(grid, u, L_mon)
    D = np.diag(lapd)

    def spectrum(a):
        return np.linalg.eigvalsh(E - a * D)

    alphas = np.linspace(alpha_lo, alpha_hi, n)
    sv = np.empty(n)
    neg = np.empty(n, dtype=int)
    for i, a in enumerate(alphas):
        w = spectrum(a)
        sv[i] = np.min(np.abs(w))
        neg[i] = int(np.sum(w < -INERTIA_TOL))
    zeros = []
    for i in range(n - 1):
        if neg[i] == neg[i + 1]:
            continue
        lo, hi = alphas[i], alphas[i + 1]
        n_lo = neg[i]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if int(np.sum(spectrum(mid) < -INERTIA_TOL)) == n_lo:
                lo = mid
            else:
                hi = mid
        a0 = 0.5 * (lo + hi)
        if zeros and abs(zeros[-1][0] - a0) < 1e-9:
            continue
        w = spectrum(a0)
        zeros.append((float(a0), int(np.sum(np.abs(w) < KERNEL_TOL)), float(np.min(np.abs(w)))))
    return BifurcationScan(alphas, sv, zeros)


# -- axisymmetric 1-D oracle --------------------------------------------------

@dataclass
class AxisymmetricProfile:
    """``u(theta) = sum_k c_k P_k(cos theta)`` (standard Legendre polynomials)."""

    coeffs: np.ndarray
    alpha: float
    residual_norm: float = float("nan")
    iterations: int = 0
    converged: bool = False

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def __call__(self, t) -> np.ndarray:
        return npleg.legval(t, self.coeffs)

    def pole_slopes(self, h: float = 1e-6) -> tuple[float, float]:
        """One-sided difference quotients of ``u(theta)`` at ``theta = 0`` and ``pi``."""
        n = (self(np.cos(h)) - self(1.0)) / h
        s = (self(-1.0) - self(np.cos(np.pi - h))) / h
        return float(n), float(s)

    def residual(self, t) -> np.ndarray:
        """Pointwise 1-D residual at ``t = cos(theta)``."""
        k = np.arange(self.n_modes)
        lap = npleg.legval(t, -0.5 * self.alpha * k * (k + 1.0) * self.coeffs)
        return lap + np.exp(self(t)) - 1.0

    def lift(self, grid: SphereGrid | None = None, axis=(0.0, 0.0, 1.0)) -> SphereField:
        """Field on the sphere, symmetric about ``axis``."""
        grid = grid or default_grid()
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return SphereField.from_values(grid, self(grid.nodes @ axis))


def _axi_system(n_modes: int):
    nq = 2 * n_modes + 16
    t, w = npleg.leggauss(nq)
    V = npleg.legvander(t, n_modes - 1)         # (nq, n)
    k = np.arange(n_modes)
    proj = ((2 * k + 1) / 2.0)[:, None] * (V * w[:, None]).T   # (n, nq)
    return t, w, V, proj, k


def axisymmetric_solve(alpha: float, u0_profile=None, n_modes: int = 64, tol: float = 1e-12,
                       max_iter: int = 100) -> AxisymmetricProfile:
    """Solve ``(alpha/2)(sin th)^-1 (sin th u')' + e^u - 1 = 0`` in Legendre coefficients.

    ``u0_profile`` is a callable of ``t = cos(theta)`` or an array of Legendre
    coefficients.  Dense Newton with backtracking, normalization after every
    update.
    """
    if n_modes < 64:
        raise ValueError("axisymmetric_solve needs at least 64 Legendre modes")
    t, w, V, proj, k = _axi_system(n_modes)
    lap = -0.5 * alpha * k * (k + 1.0)
    if u0_profile is None:
        c = np.zeros(n_modes)
    elif callable(u0_profile):
        c = proj @ u0_profile(t)
    else:
        c = np.zeros(n_modes)
        c0 = np.asarray(u0_profile, dtype=float)[:n_modes]
        c[: c0.size] = c0

    def normalize(c):
        c = c.copy()
        uq = V @ c
        top = uq.max()
        c[0] -= top + np.log(0.5 * w @ np.exp(uq - top))
        return c

    def resid(c):
        return lap * c + proj @ np.exp(V @ c) - np.eye(n_modes)[0]

    c = normalize(c)
    r = resid(c)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        J = np.diag(lap) + proj @ (np.exp(V @ c)[:, None] * V)
        delta = np.linalg.lstsq(J, -r, rcond=1e-14)[0]
        lam = 1.0
        n0 = np.linalg.norm(r)
        while lam >= MIN_DAMPING:
            ct = normalize(c + lam * delta)
            rt = resid(ct)
            if np.all(np.isfinite(rt)) and np.linalg.norm(rt) <= (1 - 1e-4 * lam) * n0:
                break
            lam *= 0.5
        else:
            break
        c, r = ct, rt
        if np.max(np.abs(r)) < tol and lam * np.max(np.abs(delta)) < 1e-12:
            converged = True
            break
    prof = AxisymmetricProfile(c, alpha, iterations=it, converged=converged)
    check = np.concatenate([t, np.linspace(-1.0, 1.0, 257)])
    prof.residual_norm = float(np.max(np.abs(prof.residual(check))))
    return prof
