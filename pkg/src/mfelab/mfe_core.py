"""The mean field equation ``(alpha/2) Lap u + e^u - 1 = 0`` on the unit sphere.

Nonlinear terms are evaluated pointwise on a 3/2-oversampled grid and
projected back to the bandlimit.  Integrals use the normalized measure
``d(omega)`` (total mass 1) unless stated otherwise.

Gradient convention: ``j_alpha_gradient`` is the L2(d omega) Riesz
representative of the first variation,
``grad J(u) = -(alpha/2) Lap u + 1 - e^u / int e^u``,
so ``dJ(u)[v] = <grad J(u), v>`` with ``<f, g> = int f g d(omega)``.
For normalized ``u`` it equals ``-residual(u, alpha)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .sphere_grid import (FOUR_PI, SphereField, SphereGrid, laplacian_eigenvalues)

OVERFLOW_LIMIT = 700.0
OVERSAMPLE = 1.5


class MagnitudeError(OverflowError):
    """Field too large for a safe ``exp``."""


@dataclass(frozen=True)
class MfeParameters:
    alpha: float
    newton_tol: float = 1e-10
    max_iter: int = 60
    step_tol: float = 1e-9

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.newton_tol > 0 or not self.step_tol > 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def _guard(u: SphereField):
    if u.sup_norm > OVERFLOW_LIMIT:
        raise MagnitudeError(f"|u|_inf = {u.sup_norm:.3g} exceeds {OVERFLOW_LIMIT}")


def fine_grid(grid: SphereGrid) -> SphereGrid:
    return grid.oversampled(OVERSAMPLE)


def _fine_values(u: SphereField) -> np.ndarray:
    return fine_grid(u.grid).synthesize_array(u.c)


def exp_moments(u: SphereField):
    """``(e^u on the fine grid, int e^u d omega)``."""
    _guard(u)
    fg = fine_grid(u.grid)
    ev = np.exp(_fine_values(u))
    return ev, fg.integrate_array(ev)


def project_fine(grid: SphereGrid, fine_values: np.ndarray) -> np.ndarray:
    return fine_grid(grid).analyze_array(fine_values)


def exp_field(u: SphereField) -> SphereField:
    """Band-limited projection of ``e^u``."""
    ev, _ = exp_moments(u)
    return SphereField(u.grid, project_fine(u.grid, ev))


def residual(u: SphereField, alpha: float) -> SphereField:
    """``(alpha/2) Lap u + e^u - 1`` projected to the bandlimit.

    ``e^u - 1`` is formed with ``expm1`` so ``u = 0`` gives an exact zero.
    """
    _guard(u)
    em1 = np.expm1(_fine_values(u))
    c = 0.5 * alpha * laplacian_eigenvalues(u.grid.L) * u.c + project_fine(u.grid, em1)
    return SphereField(u.grid, c)


def residual_at(u: SphereField, alpha: float, pts) -> np.ndarray:
    """Pointwise residual at arbitrary unit vectors (no projection of ``e^u``)."""
    from .sphere_grid import evaluate, laplace_beltrami
    vals = evaluate(u, pts)
    if np.max(np.abs(vals)) > OVERFLOW_LIMIT:
        raise MagnitudeError("field too large at evaluation points")
    lap = evaluate(laplace_beltrami(u), pts)
    return 0.5 * alpha * lap + np.exp(vals) - 1.0


def log_mass(u: SphereField) -> float:
    """``log int e^u d omega``, computed with a max shift for stability."""
    fv = _fine_values(u)
    top = float(np.max(fv))
    fg = fine_grid(u.grid)
    if top < 1.0:
        # expm1/log1p keep full relative accuracy for small fields
        return float(np.log1p(fg.integrate_array(np.expm1(fv))))
    return top + np.log(fg.integrate_array(np.exp(fv - top)))


def normalize(u: SphereField) -> SphereField:
    """Shift ``u`` so that ``int e^u d omega = 1``."""
    return u - log_mass(u)


def dirichlet_energy(u: SphereField) -> float:
    """``int |grad u|^2 d omega``, spectrally."""
    return float(np.sum(-laplacian_eigenvalues(u.grid.L) * u.c ** 2))


def j_alpha(u: SphereField, alpha: float) -> float:
    _guard(u)
    return 0.25 * alpha * dirichlet_energy(u) + float(u.c[0]) - log_mass(u)


def j_alpha_gradient(u: SphereField, alpha: float) -> SphereField:
    """``-(alpha/2) Lap u + 1 - e^u / int e^u``, the L2(d omega) gradient of ``j_alpha``."""
    _guard(u)
    em1 = np.expm1(_fine_values(u))
    excess = fine_grid(u.grid).integrate_array(em1)       # int e^u - 1
    # 1 - e^u/m = (excess - (e^u - 1)) / m
    c = (-0.5 * alpha * laplacian_eigenvalues(u.grid.L) * u.c
         - project_fine(u.grid, em1) / (1.0 + excess))
    c[0] += excess / (1.0 + excess)
    return SphereField(u.grid, c)


def inner(f: SphereField, g: SphereField) -> float:
    """``int f g d omega`` for band-limited fields."""
    return float(f.c @ g.c)


def center_of_mass(u: SphereField) -> np.ndarray:
    """``(int e^u x_i d omega)_{i=1,2,3}``."""
    ev, _ = exp_moments(u)
    fg = fine_grid(u.grid)
    w = fg.weights * ev / FOUR_PI
    return np.einsum("ij,ijk->k", w, fg.nodes)


class Linearization:
    """Frozen linearization ``phi -> (alpha/2) Lap phi + e^u phi`` at ``u``.

    Works on flat coefficient vectors so it can back Krylov solvers.
    """

    def __init__(self, u: SphereField, alpha: float):
        self.u = u
        self.alpha = float(alpha)
        self.grid = u.grid
        self._fine = fine_grid(u.grid)
        self._eu, self.mass = exp_moments(u)
        self._lap = 0.5 * self.alpha * laplacian_eigenvalues(u.grid.L)

    @property
    def n(self) -> int:
        return self.grid.n_coeffs

    def matvec(self, c: np.ndarray) -> np.ndarray:
        phi = self._fine.synthesize_array(c)
        return self._lap * c + self._fine.analyze_array(self._eu * phi)

    def apply(self, phi: SphereField) -> SphereField:
        return SphereField(self.grid, self.matvec(phi.c))

    def dense(self, L_sub: int | None = None) -> np.ndarray:
        """Galerkin matrix on harmonics of degree ``<= L_sub`` (symmetric)."""
        L_sub = self.grid.L if L_sub is None else min(L_sub, self.grid.L)
        S = _synthesis_basis(L_sub, self._fine.n_theta, self._fine.n_phi)
        w = (self._fine.weights * self._eu / FOUR_PI).ravel()
        Sf = S.reshape(S.shape[0], -1)
        M = (Sf * w) @ Sf.T
        M = 0.5 * (M + M.T)
        n_sub = (L_sub + 1) ** 2
        M[np.diag_indices(n_sub)] += self._lap[:n_sub]
        return M


@lru_cache(maxsize=8)
def _synthesis_basis(L_sub: int, n_theta: int, n_phi: int) -> np.ndarray:
    g = SphereGrid(L_sub, n_theta, n_phi)
    S = g.synthesize_array(np.eye(g.n_coeffs))
    S.setflags(write=False)
    return S


def linearized_apply(u: SphereField, alpha: float, phi: SphereField) -> SphereField:
    """``(alpha/2) Lap phi + e^u phi``."""
    return Linearization(u, alpha).apply(phi)
