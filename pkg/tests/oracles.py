"""Independent reference implementations used by the tests.

Nothing here imports from ``jcmaster``: the brute-force routines build the
joint qubit-field operators explicitly, and the closed forms are typed in
from first principles.
"""
import numpy as np
from scipy.linalg import expm

SP = np.array([[0, 1], [0, 0]], dtype=complex)
SM = SP.T.copy()
SZ = np.diag([1.0, -1.0]).astype(complex)
PAULI_BASIS = np.array([np.eye(2), SP + SM, -1j * SP + 1j * SM, SZ]) / np.sqrt(2)


# -- closed forms -------------------------------------------------------------------


def vacuum_amplitude(t, g, delta):
    """Excited-state amplitude of the single-mode model with an empty field."""
    t = np.asarray(t, dtype=float)
    w = 0.5 * np.sqrt(delta**2 + 4 * g**2)
    return np.exp(0.5j * delta * t) * (np.cos(w * t) - 0.5j * delta / w * np.sin(w * t))


def lorentzian_amplitude(t, coupling_rate, width):
    """Resonant damped amplitude for ``f(tau) = (coupling_rate*width/2) e^{-width |tau|}``."""
    t = np.asarray(t, dtype=complex)
    d = np.sqrt(complex(width**2 - 2 * coupling_rate * width))
    return np.exp(-width * t / 2) * (np.cosh(d * t / 2) + width / d * np.sinh(d * t / 2))


def vacuum_k1(tau, g, delta):
    return 2 * g**2 * np.cos(np.sqrt(delta**2 + 2 * g**2) * np.asarray(tau))


# -- excitation-sector propagation --------------------------------------------------


def sector_amplitudes(n, t, g, delta):
    """``(c, |d|)`` from exponentiating the Hamiltonian on ``{|1, n-1>, |0, n>}``.

    In a frame rotating with the detuning the sector Hamiltonian is time
    independent, so ``expm`` gives exact amplitudes.  ``c`` is the survival
    amplitude of ``|1, n-1>`` and ``|d|`` the transfer amplitude over ``sqrt(n)``.
    """
    if n == 0:
        return np.exp(0j), 0.0
    s = np.sqrt(n)
    h = np.array([[delta / 2, g * s], [g * s, -delta / 2]], dtype=complex)
    u = expm(-1j * h * t)
    return np.exp(0.5j * delta * t) * u[0, 0], abs(u[1, 0]) / s


# -- brute-force bath superoperators ------------------------------------------------


def build_bath(dims, nbars):
    """Annihilation operators of independent modes and their product thermal state."""
    ops, rho = [], None
    for k, d in enumerate(dims):
        mats = [np.eye(dd) for dd in dims]
        mats[k] = np.diag(np.sqrt(np.arange(1, d)), 1)
        a = mats[0]
        for m in mats[1:]:
            a = np.kron(a, m)
        ops.append(a)
        p = nbars[k] ** np.arange(d) / (nbars[k] + 1) ** (np.arange(d) + 1)
        r = np.diag(p / p.sum())
        rho = r if rho is None else np.kron(rho, r)
    return ops, rho


class BruteBath:
    """Joint operators for ``H_I(t) = s+ sum_k g_k a_k e^{i delta_k t} + h.c.``."""

    def __init__(self, couplings, detunings, dims, nbars):
        self.g = list(couplings)
        self.delta = list(detunings)
        self.ops, self.rho_env = build_bath(dims, nbars)
        self.dim = self.rho_env.shape[0]

    def hamiltonian(self, t):
        b = sum(g * a * np.exp(1j * d * t) for g, d, a in zip(self.g, self.delta, self.ops))
        h = np.kron(SP, b)
        return h + h.conj().T

    def liouville(self, t, w):
        h = self.hamiltonian(t)
        return -1j * (h @ w - w @ h)

    def partial_trace(self, w):
        d = self.dim
        return np.einsum("iaja->ij", w.reshape(2, d, 2, d))

    def project(self, w):
        return np.kron(self.partial_trace(w), self.rho_env)


def superop_matrix(fn):
    return np.array([[np.trace(x.conj().T @ fn(y)).real for y in PAULI_BASIS] for x in PAULI_BASIS])


def second_order_integrand(bath, t, t1):
    def fn(x):
        w = np.kron(x, bath.rho_env)
        return bath.partial_trace(bath.liouville(t, bath.liouville(t1, w)))

    return superop_matrix(fn)


def fourth_order_integrand(bath, t, t1, t2, t3):
    """Cumulant ``<L L L L> - sum of pairings`` for ordered ``t >= t1 >= t2 >= t3``."""

    def chain(times, split):
        def fn(x):
            w = np.kron(x, bath.rho_env)
            for i, s in enumerate(reversed(times)):
                w = bath.liouville(s, w)
                if split and i == 1:
                    w = bath.project(w)
            return bath.partial_trace(w)

        return fn

    out = superop_matrix(chain([t, t1, t2, t3], False))
    for a, b, c in ((t1, t2, t3), (t2, t1, t3), (t3, t1, t2)):
        out -= superop_matrix(chain([t, a, b, c], True))
    return out


def rates_from_matrix(m):
    """``(lamb_shift, gain, loss, dephasing)`` from a phase-covariant generator matrix."""
    e_r, e_i, x, y = m[1, 1], m[1, 2], m[3, 0], m[3, 3]
    return np.array([e_i, (x - y) / 2, -(x + y) / 2, y - 2 * e_r])


# -- shadow transcription of the tabulated fourth-order integrands -------------------


def tabulated_integrands(f, g, h, t, t1, t2, t3):
    """Integrands exactly as commonly tabulated, including the ``u`` entry whose
    ``Re f Re f`` coefficient is 1 rather than 2."""
    re = np.real

    def sym(psi):
        return psi(t1, t2, t3) + psi(t2, t1, t3) + psi(t3, t1, t2)

    p = -sym(lambda a, b, c: f(t - a) * f(b - c)) + h(t, t1, t2, t3)
    q = -2 * sym(lambda a, b, c: re(f(t - a) * np.conj(f(b - c))) + 2 * re(g(t - a)) * re(f(b - c)) - re(h(a, t, b, c)))
    r = g(t - t2) * g(t1 - t3) + g(t - t3) * g(t1 - t2) + f(t1 - t) * f(t3 - t2) - h(t1, t, t3, t2)
    s = -2 * sym(lambda a, b, c: re(f(t - a) * f(c - b)) + 2 * re(f(t - a)) * re(g(b - c)) - re(h(t, a, c, b)))
    tt = 2 * sym(
        lambda a, b, c: re(f(t - a) * f(c - b)) + re(g(t - a) * g(b - c)) + 2 * re(f(t - a)) * re(g(b - c)) - re(h(t, a, c, b))
    ) + 2 * (re(f(t1 - t) * f(t3 - t2)) - re(g(t - t1) * g(t2 - t3)) - re(h(t1, t, t3, t2)))
    u = 2 * sym(lambda a, b, c: re(f(t - a)) * re(f(b - c)) + 2 * re(g(t - a)) * re(f(b - c)) - re(h(a, t, b, c))) - 2 * re(
        h(t, t1, t2, t3)
    )
    v = 2 * sym(lambda a, b, c: f(a - t) * f(c - b) - h(a, t, c, b))
    return {"p": p, "q": q, "r": r, "s": s, "t": tt, "u": u, "v": v}


# -- frozen reference values (30-digit arithmetic, single mode, g = 1) ----------------

FROZEN = {
    # vacuum, delta = 0.5: gamma(1.3)
    "vacuum_gamma_1.3": 0.292159623409360095 - 0.150705381958736543j,
    # thermal nbar = 1, delta = 0.5, t = 1: alpha, beta, gamma
    "thermal1_t1": (0.610043577880647140, 0.220087155761294280, 0.312715868862598395 - 0.035382301146735551j),
    # Fock(3), delta = 2, t = 2
    "fock3_t2": (0.570437487321769928, 0.245295549796919223, -0.277242467415011351 + 0.251122263726263551j),
    # vacuum, delta = 1, t = 1: Taylor coefficients of (lamb_shift, loss) at g^2 and g^4
    "vacuum_series_g2": (-0.4596976941318603, 1.682941969615793),
    "vacuum_series_g4": (-0.2667951330686506, 0.3426143698211955),
}
