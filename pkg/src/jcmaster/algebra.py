"""Operator-basis bookkeeping for a single two-level system.

Conventions (used by every other module):

* States are written in the ordered basis ``{|1>, |0>}``; index 0 is the
  excited level, so ``rho[0, 1]`` is the coherence ``rho_10``.
* ``sigma_+ = |1><0|``, ``sigma_- = |0><1|``, ``sigma_z = diag(1, -1)``,
  ``sigma_y = -i sigma_+ + i sigma_-``.  With this orientation
  ``Tr[sigma_y rho] = -2 Im rho_10``.
* The orthonormal operator basis is ``X = (1, sigma_x, sigma_y, sigma_z) / sqrt(2)``;
  a density matrix is encoded by its coherence vector ``r_k = Tr[X_k^dag rho]``
  and a linear map by the real 4x4 matrix ``L_kl = Tr[X_k^dag Lambda(X_l)]``.

Density matrices, coherence vectors and superoperator matrices are plain
numpy arrays of shape ``(..., 2, 2)``, ``(..., 4)`` and ``(..., 4, 4)``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .errors import PatternViolation, ValidationError

SQRT2 = np.sqrt(2.0)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS
SIGMA_Y = -1j * SIGMA_PLUS + 1j * SIGMA_MINUS
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
EXCITED_PROJECTOR = SIGMA_PLUS @ SIGMA_MINUS  # |1><1|
GROUND_PROJECTOR = SIGMA_MINUS @ SIGMA_PLUS  # |0><0|

BASIS = np.array([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z]) / SQRT2

# Positions allowed to be nonzero in a phase-covariant generator matrix.
_PATTERN = np.zeros((4, 4), dtype=bool)
_PATTERN[1:3, 1:3] = True
_PATTERN[3, 0] = _PATTERN[3, 3] = True

KINDS = ("map", "generator", "kernel")


def check_density(rho, tol: float = 1e-12) -> np.ndarray:
    """Validate a (stack of) density matrices and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (..., 2, 2) array, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValidationError("density matrix has non-finite entries")
    if np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0) > tol:
        raise ValidationError("density matrix is not hermitian")
    trace = np.real(rho[..., 0, 0] + rho[..., 1, 1])
    if np.max(np.abs(trace - 1.0), initial=0.0) > tol:
        raise ValidationError("density matrix does not have unit trace")
    det = np.real(rho[..., 0, 0] * rho[..., 1, 1]) - np.abs(rho[..., 0, 1]) ** 2
    if np.min(det, initial=0.0) < -tol or np.min(np.real(rho[..., 0, 0]), initial=0.0) < -tol:
        raise ValidationError("density matrix is not positive semidefinite")
    return rho


def _check_hermitian(rho, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (..., 2, 2) array, got shape {rho.shape}")
    if np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0) > tol:
        raise ValidationError("operator is not hermitian")
    return rho


def density_to_vector(rho) -> np.ndarray:
    """Coherence vector ``r_k = Tr[X_k^dag rho]`` of a hermitian 2x2 operator."""
    rho = _check_hermitian(rho)
    r = np.einsum("kij,...ij->...k", BASIS.conj(), rho)
    return np.real(r)


def vector_to_density(r) -> np.ndarray:
    """Inverse of :func:`density_to_vector`: ``rho = sum_k r_k X_k``."""
    r = np.asarray(r, dtype=float)
    return np.einsum("...k,kij->...ij", r, BASIS)


def map_to_matrix(apply: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Matrix ``L_kl = Tr[X_k^dag apply(X_l)]`` of a linear map on 2x2 matrices.

    The result is real whenever ``apply`` preserves hermiticity; otherwise the
    complex matrix is returned.
    """
    images = np.array([apply(x) for x in BASIS])
    m = np.einsum("kij,lij->kl", BASIS.conj(), images)
    if np.max(np.abs(m.imag)) < 1e-14 * max(1.0, np.max(np.abs(m.real))):
        return m.real.copy()
    return m


def apply_matrix(m, rho) -> np.ndarray:
    """Act with a superoperator matrix on a density matrix."""
    return vector_to_density(np.einsum("...kl,...l->...k", m, density_to_vector(rho)))


def check_superop(m, kind: str, tol: float = 1e-12) -> np.ndarray:
    """Validate trace structure of a superoperator matrix of the given kind."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (4, 4):
        raise ValidationError(f"expected (..., 4, 4) array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("superoperator matrix has non-finite entries")
    first_row = np.array([1.0, 0, 0, 0]) if kind == "map" else np.zeros(4)
    if np.max(np.abs(m[..., 0, :] - first_row)) > tol:
        raise ValidationError(f"first row of a {kind} matrix must be {first_row.tolist()}")
    return m


@dataclass(frozen=True)
class LindbladCoefficients:
    """Rates of the four phase-covariant Lindblad terms.

    The generator acts as::

        i*lamb_shift*[s+s-, rho] + gain*D[s+]rho + loss*D[s-]rho
            + dephasing * (sz rho sz - rho) / 4

    Fields may be floats or equally shaped arrays (e.g. one value per time).
    """

    lamb_shift: float | np.ndarray = 0.0
    gain: float | np.ndarray = 0.0
    loss: float | np.ndarray = 0.0
    dephasing: float | np.ndarray = 0.0

    def as_array(self) -> np.ndarray:
        """Stack as ``(..., 4)`` in the order lamb_shift, gain, loss, dephasing."""
        return np.stack(np.broadcast_arrays(*(getattr(self, f.name) for f in fields(self))), axis=-1)

    @classmethod
    def from_array(cls, a) -> "LindbladCoefficients":
        a = np.asarray(a, dtype=float)
        return cls(*(a[..., i] for i in range(4)))

    def __add__(self, other: "LindbladCoefficients") -> "LindbladCoefficients":
        return LindbladCoefficients.from_array(self.as_array() + other.as_array())

    def __getitem__(self, idx) -> "LindbladCoefficients":
        return LindbladCoefficients.from_array(self.as_array()[idx])

    def scaled(self, factor: float) -> "LindbladCoefficients":
        return LindbladCoefficients.from_array(factor * self.as_array())


def lindblad_to_matrix(c: LindbladCoefficients) -> np.ndarray:
    """Generator matrix (phase-covariant pattern) for a set of Lindblad rates."""
    lamb, gain, loss, deph = np.moveaxis(c.as_array(), -1, 0)
    x = gain - loss
    y = -gain - loss
    e_r = (y - deph) / 2
    m = np.zeros(np.shape(lamb) + (4, 4))
    m[..., 1, 1] = m[..., 2, 2] = e_r
    m[..., 1, 2] = lamb
    m[..., 2, 1] = -lamb
    m[..., 3, 0] = x
    m[..., 3, 3] = y
    return m


def generator_matrix_to_lindblad(m, tol: float = 1e-10) -> LindbladCoefficients:
    """Read the four Lindblad rates off a phase-covariant generator matrix.

    ``m`` must have the pattern ``[[0,0,0,0],[0,Er,Ei,0],[0,-Ei,Er,0],[X,0,0,Y]]``
    (stacks allowed).  Entries that break the pattern by more than ``tol``
    raise :class:`PatternViolation`.
    """
    m = np.asarray(m, dtype=float)
    off = np.where(_PATTERN, 0.0, np.abs(m))
    asym = np.maximum(np.abs(m[..., 1, 1] - m[..., 2, 2]), np.abs(m[..., 1, 2] + m[..., 2, 1]))
    worst = max(np.nanmax(off, initial=0.0), np.nanmax(asym, initial=0.0))
    if worst > tol:
        raise PatternViolation(f"off-pattern magnitude {worst:.3e} exceeds tolerance {tol:.1e}")
    e_r = (m[..., 1, 1] + m[..., 2, 2]) / 2
    e_i = (m[..., 1, 2] - m[..., 2, 1]) / 2
    x, y = m[..., 3, 0], m[..., 3, 3]
    return LindbladCoefficients(lamb_shift=e_i, gain=(x - y) / 2, loss=-(x + y) / 2, dephasing=y - 2 * e_r)


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``D[L]rho = L rho L^dag - {L^dag L, rho}/2``."""
    op_dag = op.conj().T
    return op @ rho @ op_dag - 0.5 * (op_dag @ op @ rho + rho @ op_dag @ op)


def lindblad_apply(c: LindbladCoefficients, rho) -> np.ndarray:
    """Action of the phase-covariant Lindblad generator ``c`` on ``rho``."""
    rho = _check_hermitian(rho)
    n_op = EXCITED_PROJECTOR
    out = 1j * c.lamb_shift * (n_op @ rho - rho @ n_op)
    out = out + c.gain * dissipator(SIGMA_PLUS, rho) + c.loss * dissipator(SIGMA_MINUS, rho)
    out = out + c.dephasing * 0.25 * (SIGMA_Z @ rho @ SIGMA_Z - rho)
    return out


def trace_distance(a, b) -> np.ndarray:
    """``||a - b||_1 / 2`` for (stacks of) hermitian 2x2 matrices."""
    diff = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    return 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)), axis=-1)


def random_density(rng: np.random.Generator, purity_max: float = 1.0) -> np.ndarray:
    """Random qubit state with Bloch radius uniform in ``[0, purity_max]``."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    bloch = purity_max * rng.uniform() * direction
    return 0.5 * (IDENTITY + bloch[0] * SIGMA_X + bloch[1] * SIGMA_Y + bloch[2] * SIGMA_Z)
