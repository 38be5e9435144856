"""Flaw measures, the phase-error bound and the asymptotic key-rate formulas."""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from .quantum_states import PreparedStates

#: Default error-correction inefficiency f(delta_x).
DEFAULT_F_EC = 1.22


class FlawVariant(str, enum.Enum):
    """Which definition of the initial basis-dependent flaw to use.

    ``ORIGINAL`` takes half of one minus the product of the two parties'
    basis fidelities.  ``ERRATUM`` keeps one party's virtual qubit explicit
    and only optimizes the phases that preserve the conjugate-basis
    structure, then takes the smaller of the two choices of party.
    """

    ORIGINAL = "original"
    ERRATUM = "erratum"


def _check_probability(name: str, x: float) -> float:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return float(x)


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with h(0) = h(1) = 0.

    >>> binary_entropy(0.5)
    1.0
    """
    x = _check_probability("x", x)
    return float(-(xlogy(x, x) + xlogy(1 - x, 1 - x)) / math.log(2))


def delta_ini_scheme1_original(alpha_a: float, alpha_b: float) -> float:
    """Initial flaw of scheme I with ideal modulators (closed form).

    Equals half of one minus the product over parties of
    e^{-alpha} (cos alpha + sin alpha).
    """
    if alpha_a < 0 or alpha_b < 0:
        raise ValueError("intensities must be non-negative")
    # 1 - (1 - u)(1 - v) = u + v - uv keeps the digits that a direct
    # subtraction would lose at small intensity
    u, v = _one_minus_overlap(alpha_a), _one_minus_overlap(alpha_b)
    return min(max(0.5 * (u + v - u * v), 0.0), 0.5)


def _one_minus_overlap(a: float) -> float:
    """1 - e^{-a}(cos a + sin a), accurate for small a.

    Uses e^{-a}(cos a + sin a) = Re((1 - i) e^{(i - 1) a}) and sums the
    exponential series without its leading 1.
    """
    if a > 0.5:
        return 1 - math.exp(-a) * (math.cos(a) + math.sin(a))
    z = complex(-1, 1) * a
    term, total = 1 + 0j, 0j
    for n in range(1, 40):
        term *= z / n
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return -((1 - 1j) * total).real


def delta_ini_actual_states(fa: float, fb: float) -> float:
    """Initial flaw from the two parties' basis fidelities, (1 - fa fb) / 2."""
    _check_probability("fa", fa)
    _check_probability("fb", fb)
    return min(max(0.5 * (1 - fa * fb), 0.0), 0.5)


# Virtual-qubit bases: |0y> = (i|0x> + |1x>)/sqrt2, |1y> = (|0x> + i|1x>)/sqrt2.
_QUBIT_X = (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex))
_QUBIT_Y = (
    np.array([1j, 1], dtype=complex) / math.sqrt(2),
    np.array([1, 1j], dtype=complex) / math.sqrt(2),
)


def coin_overlap_terms(states: PreparedStates) -> np.ndarray:
    """Coefficients c[i, j] = <i_Y|j_X>_qubit <chi_iY|chi_jX>.

    With purified states |Psi_W> = (|0_W>|chi_0W> + e^{i xi_W}|1_W>|chi_1W>)/sqrt2,
    2 <Psi_Y|Psi_X> = sum_ij c[i, j] e^{i (j xi_X - i xi_Y)}.
    """
    c = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            q = np.vdot(_QUBIT_Y[i], _QUBIT_X[j])
            c[i, j] = q * states.overlap(states.state("Y", i), states.state("X", j))
    return c


def coin_overlap_value(c: np.ndarray, theta: float, xi_x: float, xi_y: float) -> float:
    """Re(e^{i theta} <Psi_Y|Psi_X>) for given phases."""
    phases = np.array(
        [[1.0, np.exp(1j * xi_x)], [np.exp(-1j * xi_y), np.exp(1j * (xi_x - xi_y))]]
    )
    return float((np.exp(1j * theta) * np.sum(c * phases)).real / 2)


def max_coin_overlap(states: PreparedStates) -> float:
    """Maximum of Re(e^{i theta} <Psi_Y|Psi_X>) over theta, xi_X and xi_Y.

    The theta maximum is the modulus.  For fixed xi_Y the xi_X maximum is
    |A + C e^{-i xi_Y}| + |B + D e^{-i xi_Y}|, leaving one smooth periodic
    function of xi_Y that is scanned on a grid and polished with Brent's
    method.
    """
    c = coin_overlap_terms(states)
    a, b, cc, d = c[0, 0], c[0, 1], c[1, 0], c[1, 1]

    def f(phi):
        e = np.exp(1j * phi)
        return np.abs(a + cc * e) + np.abs(b + d * e)

    grid = np.linspace(0.0, 2 * np.pi, 257)[:-1]
    vals = f(grid)
    k = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(
        lambda p: -f(p),
        bounds=(grid[k] - step, grid[k] + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    best = max(float(vals[k]), float(-res.fun))
    return min(best / 2, 1.0)


def delta_ini_erratum(party_a: PreparedStates, party_b: PreparedStates) -> float:
    """Corrected initial flaw: the smaller of the two one-sided bounds.

    The side that keeps its virtual qubit contributes ``max_coin_overlap``;
    the other side contributes its plain basis fidelity.
    """
    fa, fb = party_a.basis_fidelity(), party_b.basis_fidelity()
    d_a = 0.5 * (1 - max_coin_overlap(party_a) * fb)
    d_b = 0.5 * (1 - max_coin_overlap(party_b) * fa)
    return min(max(min(d_a, d_b), 0.0), 0.5)


def worst_case_delta(delta_ini: float, success_fraction: float) -> float:
    """Upper bound on the coin imbalance after Eve's post-selection.

    Eve can attribute every lost event to the favourable coin outcome, so the
    imbalance grows to ``delta_ini / success_fraction``; anything at or above
    1/2 carries no constraint and is capped there.
    """
    if delta_ini < 0:
        raise ValueError("delta_ini must be non-negative")
    if not success_fraction > 0:
        raise ZeroDivisionError("success fraction is zero; the flaw bound is undefined")
    return min(delta_ini / success_fraction, 0.5)


def invert_phase_error_bound(delta_cap: float, delta_y: float) -> float:
    """Largest phase error rate compatible with the coin-imbalance bound.

    Solves 1 - 2 Delta <= sqrt(dy dy') + sqrt((1 - dy)(1 - dy')) for the
    largest dy'.  Writing dy = sin^2 a and dy' = sin^2 b turns the right side
    into cos(b - a), so b = a + arccos(1 - 2 Delta) until b reaches pi/2.
    """
    _check_probability("delta_cap", delta_cap)
    _check_probability("delta_y", delta_y)
    c = 1 - 2 * delta_cap
    if c <= math.sqrt(delta_y):
        return 1.0
    s = 2 * math.sqrt(delta_cap * (1 - delta_cap))  # sin(arccos c)
    root = math.sqrt(delta_y) * c + math.sqrt(1 - delta_y) * s
    return min(max(root * root, delta_y), 1.0)


def key_rate_scheme1(
    gamma_suc_x: float,
    delta_x: float,
    delta_y_prime: float,
    f_ec: float = DEFAULT_F_EC,
    clamp: bool = True,
) -> float:
    """Scheme-I key rate per X-basis pulse pair.

    Negative values mean no key; they are clamped to zero unless ``clamp`` is
    false.
    """
    if f_ec < 1:
        raise ValueError("f_ec must be at least 1")
    g = gamma_suc_x * (
        1 - f_ec * binary_entropy(delta_x) - binary_entropy(min(delta_y_prime, 0.5))
    )
    return max(g, 0.0) if clamp else g


def key_rate_scheme2(
    q11_x: float,
    delta_y11_prime: float,
    q_x: float,
    delta_x: float,
    f_ec: float = DEFAULT_F_EC,
    clamp: bool = True,
) -> float:
    """Scheme-II key rate from single-photon pairs (clamped like scheme I)."""
    if q11_x > q_x:
        raise ValueError(f"single-photon gain {q11_x!r} exceeds overall gain {q_x!r}")
    if f_ec < 1:
        raise ValueError("f_ec must be at least 1")
    g = q11_x * (1 - binary_entropy(min(delta_y11_prime, 0.5))) - f_ec * q_x * binary_entropy(
        delta_x
    )
    return max(g, 0.0) if clamp else g
