"""Detection statistics under normal operation (no eavesdropper).

Both schemes assume identical threshold detectors, detector inefficiency
folded into the channel loss, and intensities matched so that the two pulses
reach the measurement unit with the same mean photon number.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .quantum_states import ModulatorModel
from .security_bounds import DEFAULT_F_EC, FlawVariant


class Scheme(enum.IntEnum):
    I = 1  # noqa: E741
    II = 2


class Placement(str, enum.Enum):
    """Where the measurement unit sits on the Alice-Bob line."""

    AT_BOB = "at-bob"
    MIDPOINT = "midpoint"


#: Alignment-error inflation per unit extinction ratio.
MISALIGNMENT_FACTOR = {Scheme.I: 16.0, Scheme.II: 4.0}

#: Phase-to-polarization converter success probability (scheme II).
CONVERTER_EFFICIENCY = 0.5


def _check_unit(name: str, x: float) -> None:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")


@dataclass(frozen=True)
class DetectorModel:
    p_dark: float
    eta_det: float

    def __post_init__(self) -> None:
        _check_unit("p_dark", self.p_dark)
        _check_unit("eta_det", self.eta_det)


@dataclass(frozen=True)
class LinkModel:
    """Fiber from each party to the measurement unit.

    ``xi`` is the loss coefficient in dB/km; ``l_a`` and ``l_b`` are in km.
    """

    xi: float
    l_a: float
    l_b: float
    placement: Placement | None = None

    def __post_init__(self) -> None:
        problems = []
        if self.xi < 0:
            problems.append("xi must be non-negative")
        if self.l_a < 0 or self.l_b < 0:
            problems.append("distances must be non-negative")
        if self.placement is Placement.AT_BOB and self.l_b != 0:
            problems.append("at-bob placement requires l_b = 0")
        if self.placement is Placement.MIDPOINT and not math.isclose(
            self.l_a, self.l_b, rel_tol=1e-12, abs_tol=1e-12
        ):
            problems.append("midpoint placement requires l_a = l_b")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def from_total(cls, distance: float, placement: Placement, xi: float) -> "LinkModel":
        placement = Placement(placement)
        if placement is Placement.AT_BOB:
            return cls(xi, distance, 0.0, placement)
        return cls(xi, distance / 2, distance / 2, placement)

    @property
    def total_distance(self) -> float:
        return self.l_a + self.l_b


def transmittance(eta_det: float, xi: float, length: float, converter: float = 1.0) -> float:
    """Overall transmission eta_det 10^(-xi l / 10), times any converter factor."""
    return eta_det * 10.0 ** (-xi * length / 10.0) * converter


def intensity_matching(alpha_a: float, eta_a: float, eta_b: float) -> tuple[float, float]:
    """Bob's intensity and the common arriving intensity.

    Returns ``(alpha_b, alpha_in)`` with alpha_in = alpha_a eta_a = alpha_b eta_b.
    """
    if eta_b == 0:
        raise ZeroDivisionError("Bob's transmittance is zero; intensities cannot be matched")
    alpha_in = alpha_a * eta_a
    return alpha_in / eta_b, alpha_in


@dataclass(frozen=True)
class ScenarioParams:
    """Everything needed to evaluate one (scheme, distance, intensity) point."""

    scheme: Scheme
    detector: DetectorModel
    link: LinkModel
    modulator: ModulatorModel = field(default_factory=ModulatorModel.ideal)
    e_ali: float = 0.033
    f_ec: float = DEFAULT_F_EC
    alpha_a: float = 0.0
    flaw_variant: FlawVariant = FlawVariant.ORIGINAL
    converter: float = CONVERTER_EFFICIENCY
    misalignment_factor: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "flaw_variant", FlawVariant(self.flaw_variant))
        _check_unit("e_ali", self.e_ali)
        _check_unit("converter", self.converter)
        if not (math.isfinite(self.alpha_a) and self.alpha_a >= 0):
            raise ValueError("alpha_a must be finite and non-negative")
        if self.f_ec < 1:
            raise ValueError("f_ec must be at least 1")

    def with_alpha(self, alpha_a: float) -> "ScenarioParams":
        return dataclasses.replace(self, alpha_a=alpha_a)

    @property
    def effective_alignment_error(self) -> float:
        factor = self.misalignment_factor
        if factor is None:
            factor = MISALIGNMENT_FACTOR[self.scheme]
        return min(self.e_ali + factor * self.modulator.eta_ex, 1.0)

    def transmittances(self) -> tuple[float, float]:
        conv = self.converter if self.scheme is Scheme.II else 1.0
        d, link = self.detector, self.link
        return (
            transmittance(d.eta_det, link.xi, link.l_a, conv),
            transmittance(d.eta_det, link.xi, link.l_b, conv),
        )


@dataclass(frozen=True)
class Observables1:
    gamma_suc_x: float
    gamma_suc: float
    delta_x: float
    delta_y: float
    alpha_in: float
    alpha_b: float


@dataclass(frozen=True)
class Observables2:
    q11_x: float
    delta11_x: float
    q11_y: float
    delta11_y: float
    q_x: float
    delta_x: float
    w21: float
    w20: float
    v: float
    conditional_arrival: float
    alpha_in: float
    alpha_b: float


def scheme1_rates(alpha_in: float, p_dark: float, e_ali: float) -> tuple[float, float]:
    """Success probability and bit error rate per X-basis pulse pair.

    Returns ``(gamma_suc_x, delta_x)``.  With no clicks at all the error rate
    is reported as 1/2.
    """
    p = p_dark
    e2 = math.exp(-2 * alpha_in)
    clicked = -math.expm1(-2 * alpha_in)  # 1 - e^{-2 alpha_in}
    gamma = (p + (1 - p) * clicked) * (1 - p) + (1 - p) * e2 * p
    errors = e_ali * (1 - p) ** 2 * clicked + (1 - p) * e2 * p
    delta = errors / gamma if gamma > 0 else 0.5
    return gamma, delta


def scheme1_observables(p: ScenarioParams) -> Observables1:
    if p.scheme is not Scheme.I:
        raise ValueError("scheme1_observables needs a scheme I scenario")
    eta_a, eta_b = p.transmittances()
    alpha_b, alpha_in = intensity_matching(p.alpha_a, eta_a, eta_b)
    gamma, delta = scheme1_rates(alpha_in, p.detector.p_dark, p.effective_alignment_error)
    # X and Y enter the model symmetrically
    return Observables1(gamma, 2 * gamma, delta, delta, alpha_in, alpha_b)


def _v_integrand(theta: np.ndarray, alpha_in: float, p: float, sign: int) -> np.ndarray:
    c = np.cos(theta)
    bright = 2 + 2 * sign * c  # |1 +/- e^{i theta}|^2
    dark = 2 - 2 * sign * c
    # 1 - (1 - p) e^{-x} written without cancellation for small x and p
    click = -np.expm1(-alpha_in * bright) + p * np.exp(-alpha_in * bright)
    return click * ((1 - p) * np.exp(-alpha_in * dark))


def v_integral_terms(alpha_in: float, p_dark: float, n: int) -> tuple[float, float]:
    """Both theta integrals of V on an ``n``-point periodic trapezoid grid."""
    theta = 2 * np.pi * np.arange(n) / n
    pre = p_dark * (1 - p_dark)
    return (
        float(pre * np.mean(_v_integrand(theta, alpha_in, p_dark, +1))),
        float(pre * np.mean(_v_integrand(theta, alpha_in, p_dark, -1))),
    )


def v_integral(
    alpha_in: float, p_dark: float, rtol: float = 1e-14, atol: float = 0.0, max_points: int = 1 << 16
) -> float:
    """Dark-count-assisted error gain V for scheme II.

    The integrand is smooth and 2 pi periodic, so the equally spaced
    trapezoid rule converges geometrically; the point count doubles until two
    successive estimates agree.  The two integrals coincide under
    theta -> theta + pi, so one is computed and doubled.
    """
    if alpha_in < 0:
        raise ValueError("alpha_in must be non-negative")
    if p_dark == 0:
        return 0.0
    n = 8
    prev = 2 * v_integral_terms(alpha_in, p_dark, n)[0]
    while n < max_points:
        n *= 2
        cur = 2 * v_integral_terms(alpha_in, p_dark, n)[0]
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return max(cur, 0.0)
        prev = cur
    raise RuntimeError(f"V quadrature did not converge with {max_points} points")


def scheme2_rates(
    alpha_a: float,
    alpha_b: float,
    eta_a: float,
    eta_b: float,
    p_dark: float,
    e_ali: float,
) -> Observables2:
    """Gains and error rates of scheme II for matched intensities.

    ``eta_a`` and ``eta_b`` already include the converter factor.  The
    overall X error rate is returned as a ratio (error gain over Q_x).
    """
    p = p_dark
    alpha_in = alpha_a * eta_a
    pref = 4 * alpha_a * alpha_b * math.exp(-2 * (alpha_a + alpha_b))
    q = (1 - p) ** 2
    # single-photon-pair terms, per unit of pref
    w21n = 2 * (eta_a * (1 - eta_b) + (1 - eta_a) * eta_b) * p * q
    w20n = 4 * (1 - eta_a) * (1 - eta_b) * p * p * q
    both = eta_a * eta_b
    cond = both * (q / 2 + p * q / 2) + w21n + w20n
    err11 = both * p * q / 2 + e_ali * both * q / 2 + (w21n + w20n) / 2
    delta11 = err11 / cond if cond > 0 else 0.5
    q11 = pref * cond

    v = v_integral(alpha_in, p)
    e2 = math.exp(-2 * alpha_in)
    miss = -math.expm1(-alpha_in)  # 1 - e^{-alpha_in}
    q_x = 2 * (miss + p * math.exp(-alpha_in)) ** 2 * q * e2 + v
    err_x = v + e_ali * 2 * miss**2 * q * e2
    delta_x = err_x / q_x if q_x > 0 else 0.5
    return Observables2(
        q11_x=q11,
        delta11_x=delta11,
        q11_y=q11,
        delta11_y=delta11,
        q_x=q_x,
        delta_x=delta_x,
        w21=pref * w21n,
        w20=pref * w20n,
        v=v,
        conditional_arrival=cond,
        alpha_in=alpha_in,
        alpha_b=alpha_b,
    )


def scheme2_observables(p: ScenarioParams) -> Observables2:
    if p.scheme is not Scheme.II:
        raise ValueError("scheme2_observables needs a scheme II scenario")
    eta_a, eta_b = p.transmittances()
    alpha_b, _ = intensity_matching(p.alpha_a, eta_a, eta_b)
    return scheme2_rates(
        p.alpha_a, alpha_b, eta_a, eta_b, p.detector.p_dark, p.effective_alignment_error
    )
