"""Coherent-state and qubit numerics.

Everything here works in the span of a handful of coherent states or in a
two-dimensional single-photon space, so no Fock truncation is involved.
Coherent amplitudes are plain Python ``complex`` values; ``abs(beta)**2`` is
the mean photon number.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

CoherentAmplitude = complex

#: Gram eigenvalues below this fraction of the largest one are dropped.
RANK_TOL = 1e-12

#: Extinction ratio that defines the reference phase error delta_0.
REFERENCE_EXTINCTION_RATIO = 1e-3


def coherent_overlap(b1: complex, b2: complex) -> complex:
    """Inner product <b1|b2> of two coherent states.

    >>> coherent_overlap(0, 0)
    (1+0j)
    """
    b1, b2 = complex(b1), complex(b2)
    if not (cmath.isfinite(b1) and cmath.isfinite(b2)):
        raise ValueError("coherent amplitudes must be finite")
    # -(|b1|^2 + |b2|^2)/2 + b1* b2 = -|b1 - b2|^2/2 + i Im(b1* b2), so the
    # modulus never exceeds one through rounding
    return cmath.exp(complex(-abs(b1 - b2) ** 2 / 2, (b1.conjugate() * b2).imag))


def gram_matrix(amplitudes: Sequence[complex]) -> np.ndarray:
    """Matrix of pairwise overlaps G[i, j] = <b_i|b_j>."""
    b = np.asarray(amplitudes, dtype=complex)
    diff = np.abs(b[:, None] - b[None, :]) ** 2
    return np.exp(-diff / 2 + 1j * (np.conj(b)[:, None] * b[None, :]).imag)


@dataclass(frozen=True)
class GramMixture:
    """Finite mixture of coherent states, sum_k w_k |b_k><b_k|."""

    amplitudes: tuple[complex, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        amps = tuple(complex(a) for a in self.amplitudes)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "weights", weights)
        if not amps:
            raise ValueError("a mixture needs at least one amplitude")
        if len(amps) != len(weights):
            raise ValueError("amplitudes and weights differ in length")
        if not all(cmath.isfinite(a) for a in amps):
            raise ValueError("amplitudes must be finite")
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ValueError("weights must be finite and non-negative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(weights)!r}, not 1")

    @classmethod
    def uniform(cls, amplitudes: Sequence[complex]) -> "GramMixture":
        n = len(amplitudes)
        return cls(tuple(amplitudes), (1.0 / n,) * n)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def density_fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)) of two density matrices.

    This is the square-root convention: identical states give 1 and the
    value is *not* squared.  It is evaluated as the trace norm of
    sqrt(rho1) sqrt(rho2), whose singular values carry absolute rather than
    square-root-amplified rounding errors.
    """
    s1 = _psd_sqrt(np.asarray(rho1, dtype=complex))
    s2 = _psd_sqrt(np.asarray(rho2, dtype=complex))
    return _trace_norm(s1 @ s2)


def _trace_norm(m: np.ndarray) -> float:
    return float(min(np.sum(np.linalg.svd(m, compute_uv=False)), 1.0))


def orthonormal_coordinates(amplitudes: Sequence[complex]) -> np.ndarray:
    """Coordinates of coherent states in an orthonormal basis of their span.

    Column ``j`` of the result holds |b_j> expanded in a basis built from the
    eigenvectors of the Gram matrix.  Directions whose Gram eigenvalue falls
    below ``RANK_TOL`` times the largest are discarded.
    """
    g = gram_matrix(amplitudes)
    lam, u = np.linalg.eigh((g + g.conj().T) / 2)
    keep = lam > RANK_TOL * lam[-1]
    return np.sqrt(lam[keep])[:, None] * u[:, keep].conj().T


def fidelity_gram(r1: GramMixture, r2: GramMixture) -> float:
    """Fidelity between two coherent-state mixtures.

    In an orthonormal basis of the joint amplitude span each operator factors
    as rho = B B^dagger with columns sqrt(w_k)|b_k>, and the fidelity is the
    trace norm of B1^dagger B2.  This is exact up to the rank truncation.
    """
    coords = orthonormal_coordinates(r1.amplitudes + r2.amplitudes)
    n1 = len(r1.amplitudes)
    b1 = coords[:, :n1] * np.sqrt(r1.weights)
    b2 = coords[:, n1:] * np.sqrt(r2.weights)
    return _trace_norm(b1.conj().T @ b2)


@dataclass(frozen=True)
class ModulatorModel:
    """Phase modulator whose error grows in proportion to the target phase.

    ``delta`` is the error on a pi shift and ``eta_ex`` the extinction ratio
    it produces, tied together by tan(delta/2)**2 = eta_ex.
    """

    eta_ex: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.delta >= 0 and self.eta_ex >= 0):
            raise ValueError("delta and eta_ex must be non-negative")

    @classmethod
    def from_extinction_ratio(cls, eta_ex: float) -> "ModulatorModel":
        # principal branch, delta in [0, pi)
        return cls(eta_ex=eta_ex, delta=2.0 * math.atan(math.sqrt(eta_ex)))

    @classmethod
    def from_phase_error(cls, delta: float) -> "ModulatorModel":
        delta = abs(delta)
        return cls(eta_ex=math.tan(delta / 2.0) ** 2, delta=delta)

    @classmethod
    def ideal(cls) -> "ModulatorModel":
        return cls(eta_ex=0.0, delta=0.0)


def phase_error_from_extinction(eta_ex: float) -> float:
    """Principal solution of tan(delta/2)**2 = eta_ex."""
    if eta_ex < 0:
        raise ValueError("extinction ratio must be non-negative")
    return 2.0 * math.atan(math.sqrt(eta_ex))


#: Phase error for the typical extinction ratio of 1e-3 (about 0.0632 rad).
DELTA0 = phase_error_from_extinction(REFERENCE_EXTINCTION_RATIO)


def _check_basis(basis: str) -> str:
    b = basis.upper()
    if b not in ("X", "Y"):
        raise ValueError(f"basis must be 'X' or 'Y', got {basis!r}")
    return b


def coherent_amplitudes(alpha: float, m: ModulatorModel) -> dict[tuple[str, int], complex]:
    """Amplitudes emitted for each (basis, bit) by an imperfect scheme-I source.

    The bit-0 Y state sits at phase -pi/2, matching the convention in which
    the ideal Y states are obtained from the X states by a conjugate-basis
    rotation of the sender's virtual qubit.
    """
    if not math.isfinite(alpha) or alpha < 0:
        raise ValueError("alpha must be finite and non-negative")
    r, d = math.sqrt(alpha), m.delta
    return {
        ("X", 0): complex(r),
        ("X", 1): -cmath.exp(1j * d) * r,
        ("Y", 0): -1j * cmath.exp(-1j * d / 2) * r,
        ("Y", 1): 1j * cmath.exp(1j * d / 2) * r,
    }


def actual_state_family(alpha: float, m: ModulatorModel, basis: str) -> GramMixture:
    """Basis density operator of a scheme-I source with an imperfect modulator.

    X is the equal mixture of sqrt(alpha) and -e^{i delta} sqrt(alpha); Y of
    i e^{i delta/2} sqrt(alpha) and -i e^{-i delta/2} sqrt(alpha).
    """
    b = _check_basis(basis)
    amps = coherent_amplitudes(alpha, m)
    return GramMixture.uniform([amps[(b, 0)], amps[(b, 1)]])


def single_photon_states(m: ModulatorModel) -> dict[tuple[str, int], np.ndarray]:
    """Single-photon polarization states of a scheme-II source, in the Z basis."""
    d = m.delta
    s = 1 / math.sqrt(2)
    return {
        ("X", 0): s * np.array([1, 1], dtype=complex),
        ("X", 1): s * np.array([1, -cmath.exp(1j * d)], dtype=complex),
        ("Y", 0): s * np.array([1, -1j * cmath.exp(-1j * d / 2)], dtype=complex),
        ("Y", 1): s * np.array([1, 1j * cmath.exp(1j * d / 2)], dtype=complex),
    }


def validate_qubit_density(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def single_photon_density(m: ModulatorModel, basis: str) -> np.ndarray:
    b = _check_basis(basis)
    states = single_photon_states(m)
    rho = sum(np.outer(states[(b, k)], states[(b, k)].conj()) for k in (0, 1)) / 2
    return validate_qubit_density(rho)


def qubit_fidelity_scheme2(m: ModulatorModel) -> float:
    """Fidelity of the X- and Y-basis single-photon density matrices."""
    return density_fidelity(single_photon_density(m, "X"), single_photon_density(m, "Y"))


State = Union[complex, np.ndarray]


@dataclass(frozen=True)
class PreparedStates:
    """The four pure states one party emits, keyed by basis and bit value.

    States are either coherent amplitudes (``complex``) or normalized vectors
    in a common finite-dimensional space.
    """

    x0: State
    x1: State
    y0: State
    y1: State

    @classmethod
    def coherent(cls, alpha: float, m: ModulatorModel) -> "PreparedStates":
        a = coherent_amplitudes(alpha, m)
        return cls(a[("X", 0)], a[("X", 1)], a[("Y", 0)], a[("Y", 1)])

    @classmethod
    def single_photon(cls, m: ModulatorModel) -> "PreparedStates":
        s = single_photon_states(m)
        return cls(s[("X", 0)], s[("X", 1)], s[("Y", 0)], s[("Y", 1)])

    @property
    def is_coherent(self) -> bool:
        return not isinstance(self.x0, np.ndarray)

    def state(self, basis: str, bit: int) -> State:
        return getattr(self, f"{_check_basis(basis).lower()}{bit}")

    def overlap(self, a: State, b: State) -> complex:
        if self.is_coherent:
            return coherent_overlap(a, b)
        return complex(np.vdot(a, b))

    def basis_fidelity(self) -> float:
        """Fidelity between the party's X and Y density matrices."""
        if self.is_coherent:
            return fidelity_gram(
                GramMixture.uniform([self.x0, self.x1]), GramMixture.uniform([self.y0, self.y1])
            )
        # rho_W = B_W B_W^dagger with B_W = [w0 w1] / sqrt2
        bx = np.column_stack([self.x0, self.x1])
        by = np.column_stack([self.y0, self.y1])
        return _trace_norm(bx.conj().T @ by / 2)


def lossless_joint_probs(alpha_prime: float) -> tuple[float, float]:
    """Type-0 success probabilities for scheme I without loss or noise.

    Returns ``(p_psi, p_phi)``: the joint probability of a type-0 success with
    the pair left in Psi+ (no phase error), and with the pair left in Phi+
    (phase error).  Both parties use intensity ``alpha_prime``.
    """
    if not math.isfinite(alpha_prime) or alpha_prime < 0:
        raise ValueError("alpha_prime must be finite and non-negative")
    p_psi = -math.expm1(-4 * alpha_prime) / 4
    p_phi = math.expm1(-2 * alpha_prime) ** 2 / 4
    return p_psi, p_phi
