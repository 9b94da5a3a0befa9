"""Perturbative TCL generator through fourth order in the coupling.

Second-order rates come from single integrals of the two-point functions
``f`` and ``g``; fourth-order rates from triple time-ordered integrals of
seven integrand combinations ``p, q, r, s, t, u, v`` built from ``f``, ``g``
and the four-point function ``h``.

Summation convention used below: ``S[psi](t1, t2, t3) = psi(t1, t2, t3) +
psi(t2, t1, t3) + psi(t3, t1, t2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .algebra import LindbladCoefficients
from .damped_model import CorrelationData, SingleMode, correlations
from .errors import ConvergenceError, QuadratureError, ValidationError
from .generators import tcl_closed_form
from .jc_exact import EnvState, ModelParams, map_coefficient_derivatives, map_coefficients

INTEGRAND_NAMES = ("p", "q", "r", "s", "t", "u", "v")


def _sym(psi, t1, t2, t3):
    return psi(t1, t2, t3) + psi(t2, t1, t3) + psi(t3, t1, t2)


# -- second order ---------------------------------------------------------------


def _complex_quad(fn, t: float, tol: float) -> complex:
    if t == 0:
        return 0j
    out = []
    for part in (np.real, np.imag):
        val, err = integrate.quad(lambda s: float(part(fn(s))), 0.0, t, epsabs=tol, epsrel=tol, limit=200)
        if not np.isfinite(val) or err > 10 * tol * max(1.0, abs(val)):
            raise QuadratureError(f"adaptive quadrature missed tolerance at t={t:g} (error {err:.1e})")
        out.append(val)
    return complex(out[0], out[1])


def frak_fg(corr: CorrelationData, t, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """``(int_0^t f(s) ds, int_0^t g(s) ds)`` for every requested time."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    ff = np.array([_complex_quad(corr.f, x, tol) for x in ts])
    gg = np.array([_complex_quad(corr.g, x, tol) for x in ts])
    if np.ndim(t) == 0:
        return ff[0], gg[0]
    return ff, gg


def second_order(corr: CorrelationData, t, tol: float = 1e-10) -> LindbladCoefficients:
    """Second-order TCL rates: Lamb shift ``-(Im F - Im G)``, gain ``2 Re G``, loss ``2 Re F``.

    ``F`` and ``G`` are the running integrals of ``f`` and ``g``.
    """
    ff, gg = frak_fg(corr, t, tol)
    return LindbladCoefficients(
        lamb_shift=-(np.imag(ff) - np.imag(gg)),
        gain=2 * np.real(gg),
        loss=2 * np.real(ff),
        dephasing=np.zeros_like(np.real(ff)),
    )


# -- fourth order ---------------------------------------------------------------


def fourth_order_integrands(corr: CorrelationData, t, t1, t2, t3) -> dict:
    """The seven fourth-order integrands at ordered times ``t >= t1 >= t2 >= t3``.

    ``p``, ``r`` and ``v`` are complex; the others are real.  Arguments
    broadcast.
    """
    f, g, h = corr.f, corr.g, corr.h
    re = np.real

    p = -_sym(lambda a, b, c: f(t - a) * f(b - c), t1, t2, t3) + h(t, t1, t2, t3)
    q = -2 * _sym(
        lambda a, b, c: re(f(t - a) * np.conj(f(b - c))) + 2 * re(g(t - a)) * re(f(b - c)) - re(h(a, t, b, c)),
        t1, t2, t3,
    )
    r = g(t - t2) * g(t1 - t3) + g(t - t3) * g(t1 - t2) + f(t1 - t) * f(t3 - t2) - h(t1, t, t3, t2)
    s = -2 * _sym(
        lambda a, b, c: re(f(t - a) * f(c - b)) + 2 * re(f(t - a)) * re(g(b - c)) - re(h(t, a, c, b)),
        t1, t2, t3,
    )
    tt = 2 * _sym(
        lambda a, b, c: re(f(t - a) * f(c - b))
        + re(g(t - a) * g(b - c))
        + 2 * re(f(t - a)) * re(g(b - c))
        - re(h(t, a, c, b)),
        t1, t2, t3,
    ) + 2 * (re(f(t1 - t) * f(t3 - t2)) - re(g(t - t1) * g(t2 - t3)) - re(h(t1, t, t3, t2)))
    u = 2 * _sym(
        lambda a, b, c: 2 * re(f(t - a)) * re(f(b - c)) + 2 * re(g(t - a)) * re(f(b - c)) - re(h(a, t, b, c)),
        t1, t2, t3,
    ) - 2 * re(h(t, t1, t2, t3))
    v = 2 * _sym(lambda a, b, c: f(a - t) * f(c - b) - h(a, t, c, b), t1, t2, t3)
    return {"p": p, "q": q, "r": r, "s": s, "t": tt, "u": u, "v": v}


def integrands_to_rates(vals: dict) -> np.ndarray:
    """Stack ``(lamb_shift, gain, loss, dephasing)`` from integrand (or integral) values."""
    return np.stack(
        np.broadcast_arrays(
            np.imag(vals["p"] + vals["r"] + vals["v"]),
            np.real(vals["t"]),
            np.real(vals["u"]),
            np.real(vals["q"] + vals["s"] + 2 * np.real(vals["v"])),
        ),
        axis=-1,
    )


def simplex_rule(t: float, n: int):
    """Nodes and weights for ``int_0^t dt1 int_0^t1 dt2 int_0^t2 dt3`` (iterated Gauss-Legendre)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    t1 = t * x
    w1 = t * w
    t2 = t1[:, None] * x[None, :]
    w2 = w1[:, None] * t1[:, None] * w[None, :]
    t3 = t2[:, :, None] * x[None, None, :]
    w3 = w2[:, :, None] * t2[:, :, None] * w[None, None, :]
    t1b = np.broadcast_to(t1[:, None, None], t3.shape)
    t2b = np.broadcast_to(t2[:, :, None], t3.shape)
    return t1b.ravel(), t2b.ravel(), t3.ravel(), w3.ravel()


def frak_integrals(corr: CorrelationData, t: float, n_quad: int = 16) -> dict:
    """Triple integrals of the seven integrands over the ordered simplex."""
    if n_quad < 8:
        raise ValidationError("need at least 8 nodes per dimension")
    if t == 0:
        return {k: 0.0 for k in INTEGRAND_NAMES}
    t1, t2, t3, w = simplex_rule(t, n_quad)
    vals = fourth_order_integrands(corr, t, t1, t2, t3)
    return {k: np.dot(w, v) for k, v in vals.items()}


@dataclass(frozen=True)
class FrakIntegrals:
    """Single integrals of ``f``, ``g`` and triple integrals of ``p .. v`` at time ``t``."""

    t: float
    frak_f: complex
    frak_g: complex
    triple: dict


def fourth_order(
    corr: CorrelationData, t, n_quad: int = 16, tol: float = 1e-6, return_integrals: bool = False
):
    """Fourth-order TCL rates by nested quadrature on the simplex.

    Lamb shift ``Im(P + R + V)``, gain ``T``, loss ``U`` and dephasing
    ``Q + S + 2 Re V`` (capitals are the triple integrals).  The result is
    computed at ``n_quad`` and ``2 n_quad`` nodes per dimension; the finer
    value is returned and :class:`ConvergenceError` is raised if they differ
    by more than ``tol``.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    rates, integrals = [], []
    for x in ts:
        coarse = integrands_to_rates(frak_integrals(corr, x, n_quad))
        fine_vals = frak_integrals(corr, x, 2 * n_quad)
        fine = integrands_to_rates(fine_vals)
        diff = float(np.max(np.abs(fine - coarse)))
        if diff > tol:
            raise ConvergenceError(f"nested quadrature changed by {diff:.2e} under node doubling at t={x:g}")
        rates.append(fine)
        integrals.append(fine_vals)
    rates = np.array(rates)
    out = LindbladCoefficients.from_array(rates[0] if np.ndim(t) == 0 else rates)
    if return_integrals:
        return out, integrals[0] if np.ndim(t) == 0 else integrals
    return out


@dataclass(frozen=True)
class PerturbativeCoefficients:
    """Second-order, fourth-order and combined TCL rates at the requested times."""

    t: np.ndarray
    order2: LindbladCoefficients
    order4: LindbladCoefficients

    @property
    def combined(self) -> LindbladCoefficients:
        return self.order2 + self.order4


def perturbative_coefficients(corr: CorrelationData, t, n_quad: int = 16) -> PerturbativeCoefficients:
    return PerturbativeCoefficients(np.asarray(t, dtype=float), second_order(corr, t), fourth_order(corr, t, n_quad))


# -- consistency with the exact generator ------------------------------------------


@dataclass(frozen=True)
class SeriesReport:
    """Comparison of exact TCL rates with their perturbative truncation.

    Rates are ordered ``(lamb_shift, gain, loss, dephasing)``.  ``fitted``
    rows hold the ``g^2`` and ``g^4`` Taylor coefficients extracted from
    exact data, ``perturbative`` the same from the expansion.  ``residuals``
    are ``exact - (order2 + order4)`` at each coupling scale and ``ratios``
    the successive residual ratios under halving (about 64 for an ``O(g^6)``
    remainder).
    """

    scales: np.ndarray
    exact: np.ndarray
    fitted: np.ndarray
    perturbative: np.ndarray
    residuals: np.ndarray
    ratios: np.ndarray

    @property
    def relative_mismatch(self) -> np.ndarray:
        """``|fitted - perturbative| / max|perturbative|`` per order."""
        scale = np.max(np.abs(self.perturbative), axis=1, keepdims=True)
        return np.abs(self.fitted - self.perturbative) / np.where(scale > 0, scale, 1.0)


def exact_tcl_rates(env: EnvState, p: ModelParams, t) -> np.ndarray:
    return tcl_closed_form(map_coefficients(env, t, p), map_coefficient_derivatives(env, t, p)).as_array()


def series_consistency(
    env: EnvState, p: ModelParams, t: float, scales=(1.0, 0.5, 0.25, 0.125), n_quad: int = 16
) -> SeriesReport:
    """Check that the exact TCL rates agree with the expansion through ``g^4``.

    The exact single-mode generator is sampled at couplings ``g s``.  Since
    the rates are even in ``g``, ``rate / (g s)^2`` is fitted by a cubic in
    ``(g s)^2`` whose first two coefficients are compared with the
    perturbative ones.
    """
    scales = np.asarray(scales, dtype=float)
    exact = np.array([exact_tcl_rates(env, ModelParams(p.g * s, p.delta), t) for s in scales])
    corr = correlations(SingleMode(p), env)
    o2 = second_order(corr, t).as_array() / p.g**2
    o4 = fourth_order(corr, t, n_quad).as_array() / p.g**4
    x = (p.g * scales) ** 2
    design = np.vander(x, N=min(len(scales), 4), increasing=True)
    coef, *_ = np.linalg.lstsq(design, exact / x[:, None], rcond=None)
    fitted = coef[:2]
    approx = x[:, None] * o2 + x[:, None] ** 2 * o4
    residuals = exact - approx
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.abs(residuals[:-1]) / np.abs(residuals[1:])
    return SeriesReport(scales, exact, fitted, np.array([o2, o4]), residuals, ratios)
