"""Trajectories under the exact map, the TCL generator and the NZ memory kernel.

Everything is integrated on real coherence vectors, so hermiticity holds by
construction and trace preservation shows up as a frozen first component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra import BASIS, density_to_vector, trace_distance, vector_to_density
from .damped_model import AmplitudeTrajectory
from .errors import ConvergenceError, GridMismatch, SingularityApproach, ValidationError
from .generators import NZKernel, TCLGenerator
from .jc_exact import EnvState, MapCoefficients, ModelParams, evolve_exact, map_coefficients
from .volterra import richardson_vide

METHODS = ("exact", "tcl", "nz")


@dataclass(frozen=True)
class Trajectory:
    grid: np.ndarray
    states: np.ndarray
    method: str
    certified_error: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.states.shape != self.grid.shape + (2, 2):
            raise ValidationError("need one 2x2 state per grid point")

    @property
    def populations(self) -> np.ndarray:
        """Excited-state population ``rho_11`` along the grid."""
        return self.states[:, 0, 0].real

    @property
    def coherences(self) -> np.ndarray:
        return self.states[:, 0, 1]

    def trace_error(self) -> float:
        return float(np.max(np.abs(np.trace(self.states, axis1=1, axis2=2) - 1)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.states)))


def exact_trajectory(env: EnvState, p: ModelParams, rho0, grid) -> Trajectory:
    grid = np.asarray(grid, dtype=float)
    return Trajectory(grid, evolve_exact(rho0, map_coefficients(env, grid, p)), "exact")


def damped_exact_trajectory(traj: AmplitudeTrajectory, rho0) -> Trajectory:
    """Exact vacuum dynamics of the multimode model: ``alpha = 1``, ``beta = |G|^2``, ``gamma = G``."""
    coeffs = MapCoefficients(traj.grid, np.ones_like(traj.z), traj.z, traj.G)
    return Trajectory(traj.grid, evolve_exact(rho0, coeffs), "exact")


# -- TCL ----------------------------------------------------------------------


def _rk4(mats_at, y0, grid, substeps: int):
    """Classic RK4 with ``substeps`` equal steps per grid interval.

    ``mats_at(t)`` returns the generator matrices for an array of times.
    """
    h_grid = np.diff(grid)
    ts = [grid[0]]
    for a, h in zip(grid[:-1], h_grid):
        ts.extend(a + h * np.arange(1, 2 * substeps + 1) / (2 * substeps))
    mats = mats_at(np.array(ts))
    y = np.asarray(y0, dtype=float)
    out = [y]
    idx = 0
    for h in h_grid:
        dt = h / substeps
        for _ in range(substeps):
            k0, kh, k1 = mats[idx], mats[idx + 1], mats[idx + 2]
            a = k0 @ y
            b = kh @ (y + 0.5 * dt * a)
            c = kh @ (y + 0.5 * dt * b)
            d = k1 @ (y + dt * c)
            y = y + dt * (a + 2 * b + 2 * c + d) / 6
            idx += 2
        out.append(y)
    return np.array(out)


def integrate_tcl(
    gen: TCLGenerator,
    rho0,
    grid,
    margin: float = 1e-2,
    tol: float = 1e-8,
    max_substeps: int = 1024,
) -> Trajectory:
    """Solve ``r' = K(t) r`` along ``grid`` with RK4 and cubic-spline generator values.

    The substep count is doubled until two successive runs agree to ``tol``.
    Raises :class:`SingularityApproach` if the integration range comes within
    ``margin`` of a flagged singular time or covers undefined generator values.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    if grid[0] < gen.grid[0] or grid[-1] > gen.grid[-1]:
        raise ValidationError("grid extends beyond the tabulated generator")
    for ts in gen.singular_times:
        if ts <= grid[-1] + margin:
            raise SingularityApproach(f"integration over [{grid[0]:g}, {grid[-1]:g}] reaches singular time {ts:g}")
    rates = gen.coeffs.as_array()
    used = gen.grid <= grid[-1] + 3 * (gen.grid[1] - gen.grid[0])
    if np.any(~np.isfinite(rates[used])):
        raise SingularityApproach("generator undefined inside the integration range")
    spline = CubicSpline(gen.grid[used], gen.matrices[used], axis=0)
    y0 = density_to_vector(rho0)
    prev = _rk4(spline, y0, grid, 1)
    substeps = 2
    while True:
        cur = _rk4(spline, y0, grid, substeps)
        err = float(np.max(np.abs(cur - prev)))
        if err < tol:
            break
        if substeps >= max_substeps:
            raise ConvergenceError(f"TCL integration not converged ({err:.2e} at {substeps} substeps)")
        prev, substeps = cur, 2 * substeps
    return Trajectory(grid, vector_to_density(cur), "tcl", err)


# -- NZ -----------------------------------------------------------------------


def integrate_nz(kernel: NZKernel, rho0, t_max: float | None = None, tol: float = 1e-7) -> Trajectory:
    """Solve ``r'(t) = int_0^t K(t - s) r(s) ds`` with the kernel's own lag grid.

    The trapezoidal scheme runs at the kernel spacing and at two and four
    times that spacing; the Richardson-extrapolated solution is returned on
    the grid of spacing ``4 * kernel_spacing``.  :class:`ConvergenceError` is
    raised if the last extrapolation correction exceeds ``tol``.
    """
    lags = kernel.grid
    h = lags[1] - lags[0]
    if np.max(np.abs(np.diff(lags) - h)) > 1e-9 * max(1.0, lags[-1]) or abs(lags[0]) > 1e-15:
        raise ValidationError("kernel must be tabulated on a uniform lag grid starting at 0")
    n_fine = len(lags) - 1 if t_max is None else int(round(t_max / h))
    n_fine -= n_fine % 4
    if n_fine < 4 or n_fine > len(lags) - 1:
        raise ValidationError("kernel does not cover the requested time range")
    mats = kernel.matrices[: n_fine + 1]
    if not np.all(np.isfinite(mats)):
        raise ValidationError("kernel has non-finite entries")
    y, _, err = richardson_vide(mats, density_to_vector(rho0).astype(float), h, tol=tol)
    grid = lags[: n_fine + 1 : 4]
    return Trajectory(grid, vector_to_density(np.real(y)), "nz", err)


# -- comparison and complete positivity --------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    grid: np.ndarray
    distances: np.ndarray
    methods: tuple

    @property
    def sup(self) -> float:
        return float(np.max(self.distances))

    def as_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "sup_trace_distance": self.sup,
            "t": self.grid.tolist(),
            "trace_distance": self.distances.tolist(),
        }


def compare(a: Trajectory, b: Trajectory) -> ComparisonReport:
    """Per-time trace distance between two trajectories on the same grid."""
    if a.grid.shape != b.grid.shape or np.max(np.abs(a.grid - b.grid), initial=0.0) > 1e-12:
        raise GridMismatch("trajectories live on different grids")
    return ComparisonReport(a.grid, trace_distance(a.states, b.states), (a.method, b.method))


def _apply_linear(m, op):
    """Act with a superoperator matrix on an arbitrary (non-hermitian) 2x2 operator."""
    r = np.einsum("kij,ij->k", BASIS.conj(), op)
    return np.einsum("k,kij->ij", m @ r, BASIS)


def choi_matrix(m) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|)`` of a map given by its 4x4 matrix."""
    m = np.asarray(m)
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1.0
            choi[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = _apply_linear(m, e)
    return choi


def is_completely_positive(m, tol: float = 1e-10) -> bool:
    choi = choi_matrix(m)
    return bool(np.min(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))) >= -tol)
