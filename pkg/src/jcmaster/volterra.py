"""Uniform-grid machinery for convolution Volterra equations.

Solves ``y'(t) = int_0^t K(t - s) y(s) ds`` with the implicit product
trapezoidal rule.  Its global error has an expansion in even powers of the
step, so three step-halved runs are combined by Richardson extrapolation
and the last correction doubles as the certification estimate.
"""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceError


def gregory_weights(n: int) -> np.ndarray:
    """Unit-step weights for ``int_0^{n}`` from samples at ``0..n`` (4th order for n >= 2)."""
    if n == 0:
        return np.zeros(1)
    if n == 1:
        return np.array([0.5, 0.5])
    if n == 2:
        return np.array([1.0, 4.0, 1.0]) / 3
    if n == 3:
        return np.array([3.0, 9.0, 9.0, 3.0]) / 8
    if n == 4:
        return np.array([1.0, 4.0, 2.0, 4.0, 1.0]) / 3
    w = np.ones(n + 1)
    ends = np.array([3 / 8, 7 / 6, 23 / 24])
    w[:3] = ends
    w[-3:] = ends[::-1]
    return w


def cumulative_integral(y, h: float) -> np.ndarray:
    """``int_0^{t_n} y`` for every grid point, with :func:`gregory_weights`."""
    y = np.asarray(y)
    out = np.zeros_like(y, dtype=np.result_type(y, float))
    for n in range(1, len(y)):
        out[n] = h * np.tensordot(gregory_weights(n), y[: n + 1], axes=(0, 0))
    return out


def convolve(kernel, y, h: float) -> np.ndarray:
    """``(kernel * y)(t_n) = int_0^{t_n} kernel(t_n - s) y(s) ds`` on the grid.

    ``kernel`` has shape ``(M+1,)`` or ``(M+1, d, d)`` and ``y`` shape
    ``(M+1,)`` or ``(M+1, d)``.
    """
    kernel, y = np.asarray(kernel), np.asarray(y)
    matrix = kernel.ndim == 3
    out = np.zeros(y.shape, dtype=np.result_type(kernel, y))
    for n in range(1, len(y)):
        w = gregory_weights(n)[:, None] if matrix else gregory_weights(n)
        k_rev = kernel[n::-1]
        if matrix:
            out[n] = h * np.einsum("jab,jb->a", k_rev, w * y[: n + 1])
        else:
            out[n] = h * np.dot(k_rev, w * y[: n + 1])
    return out


def trapezoid_vide(kernel, y0, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Implicit product-trapezoidal solution of ``y' = K * y``.

    ``kernel`` holds ``K`` at lags ``0, h, ..., M h`` with shape ``(M+1, d, d)``.
    Returns ``(y, dy)`` with shapes ``(M+1, d)``; ``dy`` is the memory integral,
    i.e. the derivative.
    """
    kernel = np.asarray(kernel)
    m_steps = kernel.shape[0] - 1
    d = kernel.shape[1]
    dtype = np.result_type(kernel, np.asarray(y0), float)
    y = np.zeros((m_steps + 1, d), dtype=dtype)
    dy = np.zeros_like(y)
    y[0] = y0
    lhs_inv = np.linalg.inv(np.eye(d) - 0.25 * h * h * kernel[0])
    for n in range(m_steps):
        # history part of the memory integral at t_{n+1}, excluding the j = n+1 node
        hist = 0.5 * kernel[n + 1] @ y[0]
        if n:
            hist = hist + np.einsum("jab,jb->a", kernel[n:0:-1], y[1 : n + 1])
        hist = h * hist
        y[n + 1] = lhs_inv @ (y[n] + 0.5 * h * (dy[n] + hist))
        dy[n + 1] = hist + 0.5 * h * kernel[0] @ y[n + 1]
    return y, dy


def richardson_vide(kernel_fine, y0, h_fine: float, tol: float | None = None):
    """Romberg-extrapolated solution on the grid of spacing ``4 * h_fine``.

    ``kernel_fine`` samples ``K`` at lags ``k * h_fine`` for ``k = 0..4M``.
    Runs the trapezoidal scheme at spacings ``4h, 2h, h``, eliminates the
    ``h^2`` and ``h^4`` error terms, and returns ``(y, dy, err)`` on the
    coarse grid, where ``err`` is the size of the last correction.  If
    ``tol`` is given and ``err > tol`` a :class:`ConvergenceError` is raised.
    """
    kernel_fine = np.asarray(kernel_fine)
    if (kernel_fine.shape[0] - 1) % 4:
        raise ValueError("fine kernel must have 4*M + 1 samples")
    runs = []
    for stride in (4, 2, 1):
        y, dy = trapezoid_vide(kernel_fine[::stride], y0, stride * h_fine)
        runs.append((y[:: 4 // stride], dy[:: 4 // stride]))
    (y1, d1), (y2, d2), (y3, d3) = runs
    r_a, r_b = (4 * y2 - y1) / 3, (4 * y3 - y2) / 3
    dr_a, dr_b = (4 * d2 - d1) / 3, (4 * d3 - d2) / 3
    y = (16 * r_b - r_a) / 15
    dy = (16 * dr_b - dr_a) / 15
    err = float(np.max(np.abs(y - r_b)))
    if tol is not None and err > tol:
        raise ConvergenceError(f"step halving changed the solution by {err:.2e} (> {tol:.1e})")
    return y, dy, err
