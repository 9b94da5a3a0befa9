"""Exact reduced dynamics of the single-mode Jaynes-Cummings model.

Everything is in the interaction picture with respect to ``H_S + H_E`` so
only the coupling ``g`` and the detuning ``delta = omega_0 - omega`` enter.
Bath states must commute with the number operator; they are represented by
their Fock-level weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import check_density
from .errors import ConvergenceError, TruncationError, ValidationError

TAIL_TOL = 1e-10
MAX_TRUNCATION = 200
_SERIES_WINDOW = 1e-4


@dataclass(frozen=True)
class ModelParams:
    g: float
    delta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.g) and np.isfinite(self.delta)):
            raise ValidationError("model parameters must be finite")
        if self.g <= 0:
            raise ValidationError(f"coupling g must be positive, got {self.g}")

    def omega(self, n) -> np.ndarray:
        """Rabi frequency ``sqrt(delta^2 + 4 g^2 n)`` of the n-excitation sector."""
        return np.sqrt(self.delta**2 + 4 * self.g**2 * np.asarray(n, dtype=float))


# -- bath states ------------------------------------------------------------


@dataclass(frozen=True)
class Vacuum:
    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([0]), np.array([1.0])

    def mean_occupation(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValidationError(f"Fock level must be a nonnegative integer, got {self.n}")

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([int(self.n)]), np.array([1.0])

    def mean_occupation(self) -> float:
        return float(self.n)


@dataclass(frozen=True)
class Thermal:
    """Geometric (thermal) weights ``nbar^n / (nbar + 1)^(n + 1)``.

    With ``truncation=None`` the smallest cutoff whose discarded tail mass is
    below ``1e-10`` is used (at most 200 levels).
    """

    nbar: float
    truncation: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.nbar) or self.nbar < 0:
            raise ValidationError(f"mean occupation must be finite and >= 0, got {self.nbar}")
        self.cutoff  # validates the truncation eagerly

    @cached_property
    def cutoff(self) -> int:
        if self.nbar == 0:
            return 0
        ratio = self.nbar / (self.nbar + 1)
        needed = int(np.ceil(np.log(TAIL_TOL) / np.log(ratio))) - 1
        needed = max(needed, 0)
        while ratio ** (needed + 1) >= TAIL_TOL:
            needed += 1
        if self.truncation is None:
            if needed > MAX_TRUNCATION:
                raise TruncationError(
                    f"thermal state with nbar={self.nbar} needs {needed} levels (cap {MAX_TRUNCATION})"
                )
            return needed
        if ratio ** (self.truncation + 1) >= TAIL_TOL:
            raise TruncationError(
                f"truncation {self.truncation} discards tail mass {ratio ** (self.truncation + 1):.2e}"
            )
        return int(self.truncation)

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        n = np.arange(self.cutoff + 1)
        p = self.nbar**n / (self.nbar + 1.0) ** (n + 1)
        return n, p / p.sum()

    def mean_occupation(self) -> float:
        return float(self.nbar)


EnvState = Vacuum | Fock | Thermal


def env_moment(env: EnvState, fn) -> float:
    """Expectation ``<fn(n)>`` over the bath's Fock-level weights."""
    n, w = env.weights()
    return float(np.sum(w * fn(n.astype(float))))


# -- single-sector amplitudes -------------------------------------------------


def _half_sinc(omega, t):
    """``sin(omega t / 2) / omega``, continuous through ``omega -> 0``."""
    omega, t = np.broadcast_arrays(np.asarray(omega, float), np.asarray(t, float))
    x = 0.5 * omega * t
    small = np.abs(omega * t) < _SERIES_WINDOW
    safe = np.where(small, 1.0, omega)
    series = 0.5 * t * (1 - x**2 / 6 + x**4 / 120)
    return np.where(small, series, np.sin(x) / safe)


def c_coeff(n, t, p: ModelParams) -> np.ndarray:
    """``c(n, t) = e^{i delta t/2} [cos(W t/2) - i delta sin(W t/2)/W]``, ``W = omega(n)``."""
    t = np.asarray(t, dtype=float)
    om = p.omega(n)
    return np.exp(0.5j * p.delta * t) * (np.cos(0.5 * om * t) - 1j * p.delta * _half_sinc(om, t))


def d_coeff(n, t, p: ModelParams) -> np.ndarray:
    """``d(n, t) = -i e^{i delta t/2} 2 g sin(W t/2)/W``."""
    t = np.asarray(t, dtype=float)
    om = p.omega(n)
    return -1j * np.exp(0.5j * p.delta * t) * 2 * p.g * _half_sinc(om, t)


def c_dot(n, t, p: ModelParams) -> np.ndarray:
    """Analytic time derivative of :func:`c_coeff`."""
    t = np.asarray(t, dtype=float)
    om = p.omega(n)
    s = _half_sinc(om, t)
    phase = np.exp(0.5j * p.delta * t)
    bracket = np.cos(0.5 * om * t) - 1j * p.delta * s
    dbracket = -0.5 * om**2 * s - 0.5j * p.delta * np.cos(0.5 * om * t)
    return phase * (0.5j * p.delta * bracket + dbracket)


# -- map coefficients -----------------------------------------------------------


@dataclass(frozen=True)
class MapCoefficients:
    """``alpha(t)``, ``beta(t)``, ``gamma(t)`` of the exact map (arrays over ``t``)."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    @classmethod
    def identity(cls) -> "MapCoefficients":
        return cls(np.float64(0.0), np.float64(1.0), np.float64(1.0), np.complex128(1.0))


def _level_grid(env: EnvState, t):
    n, w = env.weights()
    t = np.asarray(t, dtype=float)
    nn = n.reshape((-1,) + (1,) * t.ndim).astype(float)
    ww = w.reshape((-1,) + (1,) * t.ndim)
    return nn, ww, t


def map_coefficients(env: EnvState, t, p: ModelParams) -> MapCoefficients:
    """Weighted Fock-level averages defining the exact reduced map at ``t``."""
    nn, ww, t = _level_grid(env, t)
    if np.any(t < 0):
        raise ValidationError("times must be nonnegative")
    c_n = c_coeff(nn, t, p)
    c_n1 = c_coeff(nn + 1, t, p)
    # |c(0)| = 1 identically; pinning it keeps alpha - 1 free of rounding in the vacuum
    alpha = np.sum(ww * np.where(nn == 0, 1.0, np.abs(c_n) ** 2), axis=0)
    beta = np.sum(ww * np.abs(c_n1) ** 2, axis=0)
    gamma = np.sum(ww * c_n * c_n1, axis=0)
    return MapCoefficients(t, alpha, beta, gamma)


def map_coefficient_derivatives(env: EnvState, t, p: ModelParams) -> MapCoefficients:
    """Analytic ``(d alpha/dt, d beta/dt, d gamma/dt)`` packed as :class:`MapCoefficients`."""
    nn, ww, t = _level_grid(env, t)
    c_n, c_n1 = c_coeff(nn, t, p), c_coeff(nn + 1, t, p)
    dc_n, dc_n1 = c_dot(nn, t, p), c_dot(nn + 1, t, p)
    alpha_dot = np.sum(ww * np.where(nn == 0, 0.0, 2 * np.real(np.conj(c_n) * dc_n)), axis=0)
    beta_dot = np.sum(ww * 2 * np.real(np.conj(c_n1) * dc_n1), axis=0)
    gamma_dot = np.sum(ww * (dc_n * c_n1 + c_n * dc_n1), axis=0)
    return MapCoefficients(t, alpha_dot, beta_dot, gamma_dot)


def evolve_exact(rho0, coeffs: MapCoefficients) -> np.ndarray:
    """Apply the exact map; broadcasts over the time axis of ``coeffs``."""
    rho0 = check_density(rho0)
    a, b, gm = (np.asarray(x)[..., None, None] for x in (coeffs.alpha, coeffs.beta, coeffs.gamma))
    p11, p00, c10 = rho0[0, 0].real, rho0[1, 1].real, rho0[0, 1]
    out = np.empty(np.broadcast(a, b, gm).shape[:-2] + (2, 2), dtype=complex)
    out[..., 0, 0] = (p00 * (1 - a) + p11 * b)[..., 0, 0]
    out[..., 1, 1] = (p00 * a + p11 * (1 - b))[..., 0, 0]
    out[..., 0, 1] = (c10 * gm)[..., 0, 0]
    out[..., 1, 0] = np.conj(out[..., 0, 1])
    return out


def matrix_from_coefficients(coeffs: MapCoefficients) -> np.ndarray:
    """The 4x4 matrix of the exact map in the Pauli basis (stacked over time)."""
    a, b, gm = (np.asarray(x) for x in (coeffs.alpha, coeffs.beta, coeffs.gamma))
    m = np.zeros(np.broadcast(a, b, gm).shape + (4, 4))
    m[..., 0, 0] = 1.0
    m[..., 1, 1] = m[..., 2, 2] = gm.real
    m[..., 1, 2] = gm.imag
    m[..., 2, 1] = -gm.imag
    m[..., 3, 0] = b - a
    m[..., 3, 3] = b + a - 1
    return m


def evolution_matrix(env: EnvState, t, p: ModelParams) -> np.ndarray:
    return matrix_from_coefficients(map_coefficients(env, t, p))


def det_F(coeffs: MapCoefficients) -> np.ndarray:
    return np.abs(coeffs.gamma) ** 2 * ((coeffs.alpha - 1) + coeffs.beta)


# -- brute-force oracle -----------------------------------------------------------


def _apply_h(psi, t, p: ModelParams, sqrt_n):
    """``H_I(t) psi`` for psi of shape (2, fock_dim, K); index 0 is the excited level."""
    out = np.empty_like(psi)
    # sigma_+ (x) b e^{i delta t}
    b_psi = np.zeros_like(psi[1])
    b_psi[:-1] = sqrt_n[1:, None] * psi[1, 1:]
    out[0] = p.g * np.exp(1j * p.delta * t) * b_psi
    # sigma_- (x) b^dag e^{-i delta t}
    bd_psi = np.zeros_like(psi[0])
    bd_psi[1:] = sqrt_n[1:, None] * psi[0, :-1]
    out[1] = p.g * np.exp(-1j * p.delta * t) * bd_psi
    return out


def _rk4_run(psi0, weights, times, h_target, p, sqrt_n):
    psi = psi0.copy()
    rho_out = np.empty((len(times), 2, 2), dtype=complex)
    top = 0.0
    t_now = 0.0

    def rhs(tt, y):
        return -1j * _apply_h(y, tt, p, sqrt_n)

    for i, t_next in enumerate(times):
        span = t_next - t_now
        n_sub = int(np.ceil(span / h_target - 1e-9)) if span > 0 else 0
        if n_sub:
            h = span / n_sub
            for _ in range(n_sub):
                k1 = rhs(t_now, psi)
                k2 = rhs(t_now + h / 2, psi + h / 2 * k1)
                k3 = rhs(t_now + h / 2, psi + h / 2 * k2)
                k4 = rhs(t_now + h, psi + h * k3)
                psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t_now += h
            t_now = t_next
        rho_out[i] = np.einsum("k,amk,bmk->ab", weights, psi, psi.conj())
        top = max(top, float(np.sum(weights * np.sum(np.abs(psi[:, -1, :]) ** 2, axis=0))))
    return rho_out, top


def joint_oracle(
    rho0,
    env: EnvState,
    t,
    p: ModelParams,
    fock_dim: int | None = None,
    steps: int | None = None,
    tol: float = 1e-8,
) -> np.ndarray:
    """Reduced state from direct RK4 propagation of the joint qubit-field state.

    The mixed initial state ``rho0 (x) rho_E`` is unravelled into weighted pure
    product states ``|phi_j>|n>`` (eigenvectors of ``rho0`` times Fock levels),
    each propagated under ``H_I(t)`` on the truncated space.  The answer is
    certified by step halving; with ``steps=None`` the step count is doubled
    until two successive runs agree within ``tol``.
    """
    rho0 = check_density(rho0)
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValidationError("oracle times must be nonnegative and nondecreasing")
    levels, w = env.weights()
    if fock_dim is None:
        fock_dim = int(levels.max()) + 3
    if fock_dim <= levels.max():
        raise TruncationError(f"fock_dim={fock_dim} cannot hold bath level {levels.max()}")

    lam, vecs = np.linalg.eigh(rho0)
    keep = lam > 1e-15
    lam, vecs = lam[keep], vecs[:, keep]
    n_states = len(lam) * len(levels)
    psi0 = np.zeros((2, fock_dim, n_states), dtype=complex)
    weights = np.empty(n_states)
    k = 0
    for j in range(len(lam)):
        for n, wn in zip(levels, w):
            psi0[:, n, k] = vecs[:, j]
            weights[k] = lam[j] * wn
            k += 1
    sqrt_n = np.sqrt(np.arange(fock_dim, dtype=float))

    t_max = float(times[-1]) if times[-1] > 0 else 1.0
    omega_max = float(p.omega(fock_dim)) + abs(p.delta)
    auto = steps is None
    steps = steps or max(64, int(np.ceil(8 * omega_max * t_max)))
    for _ in range(12 if auto else 1):
        coarse, top_c = _rk4_run(psi0, weights, times, t_max / steps, p, sqrt_n)
        fine, top_f = _rk4_run(psi0, weights, times, t_max / (2 * steps), p, sqrt_n)
        if max(top_c, top_f) > 1e-12:
            raise TruncationError(f"top Fock level population {max(top_c, top_f):.2e} exceeds 1e-12")
        diff = float(np.max(np.abs(fine - coarse)))
        if diff <= tol:
            break
        steps *= 2
    else:
        raise ConvergenceError(f"step halving changed the state by {diff:.2e} (> {tol:.1e})")
    return fine[0] if scalar else fine
