"""Multimode (damped) model: bath correlation functions and the amplitude G(t).

Correlation functions carry the ``e^{i omega_0 tau}`` factor, so only the
mode detunings ``delta_k = omega_0 - omega_k`` appear.  For the vacuum the
exact map is fixed by ``G(t)``, solution of ``G' = -(f * G)``, ``G(0) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IllConditioned, UnsupportedEnv, ValidationError
from .jc_exact import EnvState, Fock, ModelParams, Thermal, Vacuum, env_moment
from .volterra import convolve, cumulative_integral, gregory_weights, richardson_vide


@dataclass(frozen=True)
class SingleMode:
    params: ModelParams

    def modes(self):
        return np.array([self.params.g], dtype=complex), np.array([self.params.delta])


@dataclass(frozen=True)
class DiscreteModes:
    couplings: tuple
    detunings: tuple

    def __post_init__(self):
        if len(self.couplings) != len(self.detunings) or not self.couplings:
            raise ValidationError("need equally many couplings and detunings (at least one)")
        if not (np.all(np.isfinite(self.couplings)) and np.all(np.isfinite(self.detunings))):
            raise ValidationError("mode parameters must be finite")

    def modes(self):
        return np.asarray(self.couplings, dtype=complex), np.asarray(self.detunings, dtype=float)


@dataclass(frozen=True)
class Lorentzian:
    """Damped JC bath with ``f(tau) = (coupling_rate*width/2) e^{i c tau - width |tau|}``."""

    coupling_rate: float
    width: float
    center_detuning: float = 0.0

    def __post_init__(self):
        if not (self.coupling_rate > 0 and self.width > 0 and np.isfinite(self.center_detuning)):
            raise ValidationError("Lorentzian rates must be positive and finite")


SpectralModel = SingleMode | DiscreteModes | Lorentzian


def _occupations(model, env: EnvState) -> tuple[float, float]:
    """``(<n_k>, <n_k + 1>)`` assumed identical for every mode."""
    if isinstance(model, Lorentzian) and not isinstance(env, Vacuum):
        raise UnsupportedEnv("the Lorentzian model is only defined for the vacuum")
    nbar = env.mean_occupation()
    return nbar, nbar + 1.0


def correlation_f(model: SpectralModel, env: EnvState, tau) -> np.ndarray:
    """``f(tau) = sum_k |g_k|^2 e^{i delta_k tau} <n_k + 1>``."""
    tau = np.asarray(tau, dtype=float)
    _, occ = _occupations(model, env)
    if isinstance(model, Lorentzian):
        amp = 0.5 * model.coupling_rate * model.width
        return amp * np.exp(1j * model.center_detuning * tau - model.width * np.abs(tau))
    g, dk = model.modes()
    phases = np.exp(1j * np.multiply.outer(tau, dk))
    return occ * (phases @ (np.abs(g) ** 2))


def correlation_g(model: SpectralModel, env: EnvState, tau) -> np.ndarray:
    """``g(tau) = sum_k |g_k|^2 e^{-i delta_k tau} <n_k>`` (zero in the vacuum)."""
    tau = np.asarray(tau, dtype=float)
    nbar, _ = _occupations(model, env)
    if isinstance(model, Lorentzian) or nbar == 0:
        return np.zeros(np.shape(tau), dtype=complex)
    g, dk = model.modes()
    phases = np.exp(-1j * np.multiply.outer(tau, dk))
    return nbar * (phases @ (np.abs(g) ** 2))


def correlation_h(model: SpectralModel, env: EnvState, ta, tb, tc, td) -> np.ndarray:
    """Four-point function ``e^{i w0 (ta-tb+tc-td)} <B(ta) B^dag(tb) B(tc) B^dag(td)>``.

    Supported families: any model in the vacuum, a single mode in any
    number-diagonal state, and several modes in a thermal state (evaluated by
    Gaussian pairing).
    """
    ta, tb, tc, td = (np.asarray(x, dtype=float) for x in (ta, tb, tc, td))

    def f(x):
        return correlation_f(model, env, x)

    if isinstance(env, Vacuum):
        return f(ta - tb) * f(tc - td)
    if isinstance(model, SingleMode):
        p = model.params
        if isinstance(env, Thermal):
            # closed form, consistent with the untruncated nbar used by f and g
            moment = 2 * env.nbar**2 + 3 * env.nbar + 1
        else:
            moment = env_moment(env, lambda n: (n + 1) ** 2)
        return p.g**4 * moment * np.exp(1j * p.delta * (ta - tb + tc - td))
    if isinstance(env, Thermal) and isinstance(model, DiscreteModes):
        return f(ta - tb) * f(tc - td) + f(ta - td) * correlation_g(model, env, tb - tc)
    raise UnsupportedEnv(f"four-point function not available for {type(model).__name__} in {env}")


@dataclass(frozen=True)
class CorrelationData:
    """Two-point functions ``f``, ``g`` and four-point ``h`` bound to a model and state."""

    f: Callable
    g: Callable
    h: Callable


def correlations(model: SpectralModel, env: EnvState = Vacuum()) -> CorrelationData:
    return CorrelationData(
        f=lambda tau: correlation_f(model, env, tau),
        g=lambda tau: correlation_g(model, env, tau),
        h=lambda a, b, c, d: correlation_h(model, env, a, b, c, d),
    )


def laplace_f(model: SpectralModel, u) -> np.ndarray:
    """Laplace transform of the vacuum correlation function (``Re u > 0``)."""
    u = np.asarray(u, dtype=complex)
    if isinstance(model, Lorentzian):
        amp = 0.5 * model.coupling_rate * model.width
        return amp / (u + model.width - 1j * model.center_detuning)
    g, dk = model.modes()
    return np.sum(np.abs(g) ** 2 / (u[..., None] - 1j * dk), axis=-1)


# -- amplitude G(t) -------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """``G`` and its first two derivatives on a uniform grid, plus the kernel ``f``."""

    grid: np.ndarray
    G: np.ndarray
    G_dot: np.ndarray
    G_ddot: np.ndarray
    f: np.ndarray
    certified_error: float = 0.0

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def z(self) -> np.ndarray:
        return np.abs(self.G) ** 2

    @property
    def z_dot(self) -> np.ndarray:
        return 2 * np.real(np.conj(self.G) * self.G_dot)

    @property
    def z_ddot(self) -> np.ndarray:
        return 2 * np.abs(self.G_dot) ** 2 + 2 * np.real(np.conj(self.G) * self.G_ddot)


def solve_G(model: SpectralModel, t_max: float, M: int, tol: float = 1e-8) -> AmplitudeTrajectory:
    """Solve ``G'(t) = -int_0^t f(t - t1) G(t1) dt1`` (vacuum bath) on ``M + 1`` points.

    Uses the trapezoidal scheme at steps ``h, h/2, h/4`` with Richardson
    extrapolation; raises :class:`ConvergenceError` if the last extrapolation
    correction exceeds ``tol``.
    """
    if M < 16:
        raise ValidationError("need at least 16 steps")
    if not t_max > 0:
        raise ValidationError("t_max must be positive")
    h = t_max / M
    fine_lags = np.linspace(0.0, t_max, 4 * M + 1)
    kernel = -correlation_f(model, Vacuum(), fine_lags)[:, None, None]
    y, dy, err = richardson_vide(kernel, np.array([1.0 + 0j]), h / 4, tol=tol)
    grid = np.linspace(0.0, t_max, M + 1)
    G, G_dot = y[:, 0], dy[:, 0]
    f_grid = correlation_f(model, Vacuum(), grid)
    # G'' = -f(t) G(0) - int_0^t f(s) G'(t - s) ds
    G_ddot = -f_grid * G[0] - convolve(f_grid, G_dot, h)
    return AmplitudeTrajectory(grid, G, G_dot, G_ddot, f_grid, err)


def kernel_k1(traj: AmplitudeTrajectory) -> np.ndarray:
    """Kernel ``k1`` with ``z' = -(k1 * z)``, ``z = |G|^2``, sampled on the trajectory grid.

    Differentiating once (``z(0) = 1``, ``z'(0) = 0``) turns the relation into
    the second-kind equation ``k1(t) = -z''(t) - int_0^t z'(t - s) k1(s) ds``,
    solved with 4th-order Gregory weights.
    """
    z, zd, zdd = traj.z, traj.z_dot, traj.z_ddot
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(zdd))):
        raise IllConditioned("trajectory contains non-finite values")
    if abs(z[0] - 1.0) > 1e-12:
        raise IllConditioned(f"z(0) = {z[0]!r}, expected 1")
    h = traj.step
    k1 = np.zeros_like(z)
    k1[0] = -zdd[0]
    for n in range(1, len(z)):
        w = gregory_weights(n)
        hist = np.dot(w[:n] * k1[:n], zd[n:0:-1])
        k1[n] = (-zdd[n] - h * hist) / (1.0 + h * w[n] * zd[0])
    return k1


def k1_residual(traj: AmplitudeTrajectory, k1) -> float:
    """Sup norm of ``z' + k1 * z`` on the grid (round-trip check)."""
    return float(np.max(np.abs(traj.z_dot + convolve(np.asarray(k1), traj.z, traj.step))))


def laplace_on_grid(samples, grid, u) -> np.ndarray:
    """Truncated Laplace transform ``int_0^T e^{-u t} y(t) dt`` by Gregory quadrature."""
    grid = np.asarray(grid)
    h = grid[1] - grid[0]
    w = gregory_weights(len(grid) - 1) * h
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    samples = np.asarray(samples)
    w = w.reshape((-1,) + (1,) * (samples.ndim - 1))
    return np.tensordot(np.exp(-np.multiply.outer(u, grid)), w * samples, axes=(1, 0))


def laplace_transform(fn: Callable, u, t_max: float, points: int = 20001) -> np.ndarray:
    """Laplace transform of a callable by quadrature on ``[0, t_max]``."""
    grid = np.linspace(0.0, t_max, points)
    return laplace_on_grid(fn(grid), grid, u)


def laplace_identity_check(model: SpectralModel, u_grid, t_max: float | None = None, M: int | None = None):
    """Residuals of ``f^(u) = conj(G^(u)) / |G^(u)|^2 - u`` on real ``u > 0``.

    ``G^`` is the quadrature Laplace transform of the Volterra-solved ``G``;
    ``f^`` is analytic.  Returns ``(residuals, sup_residual)``.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    if np.any(u_grid <= 0):
        raise ValidationError("identity is checked on real u > 0 only")
    if t_max is None:
        t_max = 36.0 / u_grid.min()
    if M is None:
        M = int(2 ** np.ceil(np.log2(t_max / 0.01)))
    traj = solve_G(model, t_max, M)
    G_hat = laplace_on_grid(traj.G, traj.grid, u_grid)
    rhs = np.conj(G_hat) / np.abs(G_hat) ** 2 - u_grid
    residuals = np.abs(laplace_f(model, u_grid) - rhs)
    return residuals, float(residuals.max())


__all__ = [
    "AmplitudeTrajectory",
    "CorrelationData",
    "DiscreteModes",
    "Fock",
    "Lorentzian",
    "SingleMode",
    "SpectralModel",
    "correlation_f",
    "correlation_g",
    "correlation_h",
    "correlations",
    "cumulative_integral",
    "k1_residual",
    "kernel_k1",
    "laplace_f",
    "laplace_identity_check",
    "laplace_on_grid",
    "laplace_transform",
    "solve_G",
]
