"""Fast deterministic invariant suite behind the ``verify`` task."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import EXCITED_PROJECTOR, random_density, trace_distance
from .damped_model import Lorentzian, SingleMode, correlations, k1_residual, kernel_k1, laplace_identity_check, solve_G
from .dynamics import compare, exact_trajectory, integrate_nz, integrate_tcl
from .generators import NZKernel, nz_kernel_from_laplace, nz_vacuum_kernel, tcl_generator
from .jc_exact import ModelParams, Vacuum, c_coeff, d_coeff, map_coefficients
from .perturbation import fourth_order


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    upper: bool = True  # pass iff value < tolerance (else value > tolerance)

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value < self.tolerance if self.upper else self.value > self.tolerance


def _unitarity() -> float:
    rng = np.random.default_rng(7)
    t = rng.uniform(0, 20, 50)
    p = ModelParams(1.0, 0.5)
    n = np.arange(1, 51)[:, None]
    c, d = c_coeff(n, t[None, :], p), d_coeff(n, t[None, :], p)
    return float(np.max(np.abs(np.abs(c) ** 2 + n * np.abs(d) ** 2 - 1)))


def _vacuum_reduction() -> float:
    p = ModelParams(1.0, 0.5)
    t = np.linspace(0, 6, 601)
    mc = map_coefficients(Vacuum(), t, p)
    w = np.sqrt(p.delta**2 + 4 * p.g**2) / 2
    G = np.exp(1j * p.delta * t / 2) * (np.cos(w * t) - 1j * p.delta / (2 * w) * np.sin(w * t))
    return float(max(np.max(np.abs(mc.alpha - 1)), np.max(np.abs(mc.beta - np.abs(mc.gamma) ** 2)),
                     np.max(np.abs(mc.gamma - G))))


def _tcl_vacuum() -> tuple[float, float]:
    p = ModelParams(1.0, 2.0)
    grid = np.linspace(0, 6, 1201)
    gen = tcl_generator(Vacuum(), p, grid)
    zero = float(max(np.max(np.abs(gen.coeffs.gain)), np.max(np.abs(gen.coeffs.dephasing))))
    out = grid[::20]
    rho0 = random_density(np.random.default_rng(3))
    dist = compare(integrate_tcl(gen, rho0, out), exact_trajectory(Vacuum(), p, rho0, out)).sup
    return zero, dist


def _singularity() -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gen = tcl_generator(Vacuum(), ModelParams(1.0, 0.0), np.linspace(0, 3, 301))
    return abs(gen.singular_times[0] - np.pi / 2) if gen.singular_times else np.inf


def _nz_talbot() -> float:
    p = ModelParams(1.0, 1.0)
    tau = np.array([0.0, 0.5, 2.0, 5.0])
    num = nz_kernel_from_laplace(Vacuum(), p, tau).coeffs.as_array()
    return float(np.max(np.abs(num - nz_vacuum_kernel(p, tau).as_array())))


def _nz_cos2() -> float:
    p = ModelParams(1.0, 0.0)
    lags = np.linspace(0, 2 * np.pi, 2049)
    traj = integrate_nz(NZKernel.from_coeffs(lags, nz_vacuum_kernel(p, lags)), EXCITED_PROJECTOR)
    return float(np.max(np.abs(traj.populations - np.cos(traj.grid) ** 2)))


def _nz_dephasing() -> float:
    tau = np.linspace(0, 5, 501)[1:]
    return float(np.max(np.abs(nz_vacuum_kernel(ModelParams(1.0, 1.0), tau).dephasing)))


def _k1() -> tuple[float, float]:
    p = ModelParams(1.0, 0.5)
    traj = solve_G(SingleMode(p), 5.0, 1024)
    err = np.max(np.abs(kernel_k1(traj) - 2 * np.cos(np.sqrt(p.delta**2 + 2) * traj.grid)))
    lor = solve_G(Lorentzian(1.0, 0.5), 5.0, 1024)
    return float(err), k1_residual(lor, kernel_k1(lor))


def _laplace() -> float:
    _, sup = laplace_identity_check(Lorentzian(1.0, 0.5), np.linspace(2.0, 6.0, 9))
    return sup


def _fourth_order_vacuum() -> float:
    rates = fourth_order(correlations(SingleMode(ModelParams(1.0, 1.0))), 1.0)
    return float(abs(rates.dephasing))


def _configured(cfg) -> float:
    """Exact map of the configured single-mode run: worst deviation from a density matrix."""
    if cfg is None or cfg.model != "single":
        return 0.0
    p = cfg.normalized_model().params
    traj = exact_trajectory(cfg.environment(), p, cfg.initial_state(), cfg.grid())
    return max(traj.trace_error(), max(0.0, -traj.min_eigenvalue()))


def run_checks(cfg=None) -> list[Check]:
    zero, tcl_dist = _tcl_vacuum()
    k1_err, k1_round = _k1()
    return [
        Check("unitarity_identity", _unitarity(), 1e-12),
        Check("vacuum_reduction", _vacuum_reduction(), 1e-14),
        Check("tcl_vacuum_gain_dephasing_zero", zero, 1e-10),
        Check("tcl_vacuum_trajectory", tcl_dist, 1e-6),
        Check("tcl_singularity_location", _singularity(), 1e-2),
        Check("nz_talbot_vacuum", _nz_talbot(), 1e-6),
        Check("nz_trajectory_through_singularity", _nz_cos2(), 1e-5),
        Check("nz_vacuum_dephasing_magnitude", _nz_dephasing(), 0.1, upper=False),
        Check("k1_single_mode", k1_err, 1e-6),
        Check("k1_round_trip_lorentzian", k1_round, 1e-6),
        Check("laplace_identity_lorentzian", _laplace(), 1e-5),
        Check("fourth_order_vacuum_dephasing", _fourth_order_vacuum(), 1e-8),
        Check("configured_exact_map_valid", _configured(cfg), 1e-9),
    ]
