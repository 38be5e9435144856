"""Independent reference computations used only by the tests."""

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln, i0e

FOCK_CUTOFF = 25


def fock_coherent(beta, cutoff=FOCK_CUTOFF):
    """Coherent state |beta> truncated to photon numbers 0..cutoff."""
    n = np.arange(cutoff + 1)
    beta = complex(beta)
    if beta == 0:
        v = np.zeros(cutoff + 1, dtype=complex)
        v[0] = 1.0
        return v
    logmag = n * math.log(abs(beta)) - 0.5 * gammaln(n + 1) - abs(beta) ** 2 / 2
    return np.exp(logmag) * np.exp(1j * n * np.angle(beta))


def fock_mixture_factor(amplitudes, weights, cutoff=FOCK_CUTOFF):
    """Matrix A with rho = A A^dagger, columns sqrt(w_k)|beta_k> in the Fock basis."""
    cols = [math.sqrt(w) * fock_coherent(b, cutoff) for b, w in zip(amplitudes, weights)]
    return np.stack(cols, axis=1)


def fock_fidelity(amps1, w1, amps2, w2, cutoff=FOCK_CUTOFF):
    """Root fidelity as the trace norm of A1^dagger A2 with Fock-basis vectors."""
    a1 = fock_mixture_factor(amps1, w1, cutoff)
    a2 = fock_mixture_factor(amps2, w2, cutoff)
    return float(np.sum(np.linalg.svd(a1.conj().T @ a2, compute_uv=False)))


def two_mode_annihilators(cutoff):
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
    eye = np.eye(cutoff + 1)
    return np.kron(a, eye), np.kron(eye, a)


def beam_splitter(cutoff):
    """50:50 beam splitter on two truncated modes, exp(pi/4 (a^dag b - a b^dag))."""
    a, b = two_mode_annihilators(cutoff)
    gen = a.conj().T @ b - a @ b.conj().T
    return expm(np.pi / 4 * gen)


def bisect_phase_error(delta_cap, delta_y, tol=1e-15):
    """Largest dy' with sqrt(dy dy') + sqrt((1-dy)(1-dy')) >= 1 - 2 Delta, by bisection.

    The right side decreases in dy' on [dy, 1], so the feasible set is an
    interval starting at dy.
    """
    c = 1 - 2 * delta_cap

    def g(x):
        return math.sqrt(delta_y * x) + math.sqrt((1 - delta_y) * (1 - x)) - c

    if g(1.0) >= 0:
        return 1.0
    lo, hi = delta_y, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def v_closed_form(alpha_in, p):
    """Dark-count gain V from the Bessel-function evaluation of the theta integral.

    Averaging e^{2 alpha cos theta} over theta gives I0(2 alpha); the product
    term has no theta dependence.
    """
    return 2 * p * (1 - p) * ((1 - p) * i0e(2 * alpha_in) - (1 - p) ** 2 * math.exp(-4 * alpha_in))


def scheme1_reference(alpha_in, p, e):
    """Straight transcription of the scheme-I observables."""
    gx = (p + (1 - p) * (1 - math.exp(-2 * alpha_in))) * (1 - p) + (1 - p) * math.exp(
        -2 * alpha_in
    ) * p
    dx = (e * (1 - p) ** 2 * (1 - math.exp(-2 * alpha_in)) + (1 - p) * math.exp(-2 * alpha_in) * p) / gx
    return gx, dx


def scheme2_reference(alpha_a, alpha_b, eta_a, eta_b, p, e):
    """Straight transcription of the scheme-II observables (V via the closed form)."""
    pref = 4 * alpha_a * alpha_b * math.exp(-2 * (alpha_a + alpha_b))
    w21 = 2 * pref * (eta_a * (1 - eta_b) + (1 - eta_a) * eta_b) * p * (1 - p) ** 2
    w20 = 4 * pref * (1 - eta_a) * (1 - eta_b) * p**2 * (1 - p) ** 2
    q11 = pref * eta_a * eta_b * ((1 - p) ** 2 / 2 + p * (1 - p) ** 2 / 2) + w21 + w20
    err11 = pref * eta_a * eta_b * (p * (1 - p) ** 2 / 2 + e * (1 - p) ** 2 / 2) + (w21 + w20) / 2
    a = alpha_a * eta_a
    v = v_closed_form(a, p)
    qx = 2 * (1 - (1 - p) * math.exp(-a)) ** 2 * (1 - p) ** 2 * math.exp(-2 * a) + v
    ex = v + e * 2 * (1 - math.exp(-a)) ** 2 * (1 - p) ** 2 * math.exp(-2 * a)
    return {"q11": q11, "delta11": err11 / q11, "w21": w21, "w20": w20, "v": v, "q_x": qx,
            "delta_x": ex / qx}
