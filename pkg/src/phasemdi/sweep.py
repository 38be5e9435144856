"""End-to-end key-rate evaluation, intensity optimization and distance sweeps."""

from __future__ import annotations

import dataclasses
import functools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel_models import (
    CONVERTER_EFFICIENCY,
    DetectorModel,
    LinkModel,
    Placement,
    ScenarioParams,
    Scheme,
    scheme1_observables,
    scheme2_observables,
)
from .presets import Preset, get_preset
from .quantum_states import (
    ModulatorModel,
    PreparedStates,
    actual_state_family,
    fidelity_gram,
    qubit_fidelity_scheme2,
)
from .security_bounds import (
    FlawVariant,
    delta_ini_actual_states,
    delta_ini_erratum,
    delta_ini_scheme1_original,
    invert_phase_error_bound,
    key_rate_scheme1,
    key_rate_scheme2,
    worst_case_delta,
)

INV_PHI = (math.sqrt(5) - 1) / 2


class NoPositiveRateError(ValueError):
    """Raised when a sweep never produces a positive key rate."""


@dataclass(frozen=True)
class KeyRatePoint:
    """One point of a key-rate curve plus the bounds that produced it.

    ``gain`` and ``qber`` are the X-basis success probability and bit error
    rate (gamma_suc_x and delta_x for scheme I, Q_x and delta_x for II).
    """

    total_distance_km: float
    alpha_star: float
    key_rate: float
    delta_y_prime_bound: float
    delta_cap: float
    gain: float
    qber: float


def scheme1_delta_ini(p: ScenarioParams, alpha_b: float) -> float:
    m = p.modulator
    if p.flaw_variant is FlawVariant.ERRATUM:
        return delta_ini_erratum(
            PreparedStates.coherent(p.alpha_a, m), PreparedStates.coherent(alpha_b, m)
        )
    if m.delta == 0:
        return delta_ini_scheme1_original(p.alpha_a, alpha_b)
    fa = fidelity_gram(actual_state_family(p.alpha_a, m, "X"), actual_state_family(p.alpha_a, m, "Y"))
    fb = fidelity_gram(actual_state_family(alpha_b, m, "X"), actual_state_family(alpha_b, m, "Y"))
    return delta_ini_actual_states(fa, fb)


@functools.lru_cache(maxsize=256)
def scheme2_delta_ini(m: ModulatorModel, variant: FlawVariant) -> float:
    """Single-photon initial flaw; both parties share the same modulator model."""
    if variant is FlawVariant.ERRATUM:
        s = PreparedStates.single_photon(m)
        return delta_ini_erratum(s, s)
    f = qubit_fidelity_scheme2(m)
    return delta_ini_actual_states(f, f)


def _evaluate(p: ScenarioParams) -> tuple[KeyRatePoint, float]:
    """Return the clamped point and the unclamped rate."""
    distance = p.link.total_distance
    if p.scheme is Scheme.I:
        obs = scheme1_observables(p)
        gain, qber = obs.gamma_suc_x, obs.delta_x
        if p.alpha_a == 0 or obs.gamma_suc == 0:
            return KeyRatePoint(distance, p.alpha_a, 0.0, 1.0, 0.5, gain, qber), -1.0
        d_ini = scheme1_delta_ini(p, obs.alpha_b)
        cap = worst_case_delta(d_ini, obs.gamma_suc)
        dyp = invert_phase_error_bound(cap, obs.delta_y)
        raw = key_rate_scheme1(gain, qber, dyp, p.f_ec, clamp=False)
    else:
        obs = scheme2_observables(p)
        gain, qber = obs.q_x, obs.delta_x
        if p.alpha_a == 0 or obs.conditional_arrival == 0:
            return KeyRatePoint(distance, p.alpha_a, 0.0, 1.0, 0.5, gain, qber), -1.0
        d_ini = scheme2_delta_ini(p.modulator, p.flaw_variant)
        cap = worst_case_delta(d_ini, obs.conditional_arrival)
        dyp = invert_phase_error_bound(cap, obs.delta11_y)
        raw = key_rate_scheme2(obs.q11_x, dyp, gain, qber, p.f_ec, clamp=False)
    rate = raw if raw > 0 and dyp < 0.5 else 0.0
    return KeyRatePoint(distance, p.alpha_a, rate, dyp, cap, gain, qber), raw


def evaluate_point(p: ScenarioParams) -> KeyRatePoint:
    """Key rate and diagnostic bounds for one fully specified scenario."""
    return _evaluate(p)[0]


def golden_section_max(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [a, b] until the bracket is narrower than ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_alpha(
    p: ScenarioParams,
    bounds: tuple[float, float] = (1e-7, 1.0),
    n_grid: int = 241,
    rel_width: float = 1e-4,
) -> tuple[float, KeyRatePoint]:
    """Best Alice intensity for the scenario ``p`` (its ``alpha_a`` is ignored).

    A log-spaced scan locates the best grid intensity; golden-section search
    in log(alpha) between its neighbours then narrows the bracket to a
    relative width of ``rel_width``.  If no grid point has a positive rate the
    returned point has ``alpha_star = 0`` and zero rate, with the diagnostics
    of the least-negative grid point.

    Returns:
        ``(alpha_star, point)`` with ``point.alpha_star == alpha_star``.
    """
    lo, hi = bounds
    if not (0 < lo < hi):
        raise ValueError(f"invalid alpha search interval {bounds!r}")
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    grid = np.logspace(math.log10(lo), math.log10(hi), n_grid)
    results = [_evaluate(p.with_alpha(float(a))) for a in grid]
    raws = np.array([r[1] for r in results])
    k = int(np.argmax(raws))
    best_point, best_raw = results[k]
    if best_point.key_rate <= 0:
        return 0.0, dataclasses.replace(best_point, alpha_star=0.0, key_rate=0.0)
    if k == n_grid - 1:
        warnings.warn(
            f"optimal intensity sits at the upper search bound {hi:g}; widen the interval",
            RuntimeWarning,
            stacklevel=2,
        )

    def objective(log_a: float) -> float:
        return _evaluate(p.with_alpha(math.exp(log_a)))[1]

    left = math.log(grid[max(k - 1, 0)])
    right = math.log(grid[min(k + 1, n_grid - 1)])
    log_a, raw = golden_section_max(objective, left, right, math.log1p(rel_width))
    if raw > best_raw:
        best_point = _evaluate(p.with_alpha(math.exp(log_a)))[0]
    return best_point.alpha_star, best_point


@dataclass(frozen=True)
class SweepSpec:
    """A key-rate-versus-distance curve to compute."""

    scheme: Scheme
    placement: Placement
    distances: tuple[float, ...]
    device: Preset
    modulator: ModulatorModel = dataclasses.field(default_factory=ModulatorModel.ideal)
    flaw_variant: FlawVariant = FlawVariant.ORIGINAL
    alpha_bounds: tuple[float, float] = (1e-7, 1.0)
    n_grid: int = 241
    converter: float = CONVERTER_EFFICIENCY
    fixed_alpha: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "flaw_variant", FlawVariant(self.flaw_variant))
        if isinstance(self.device, str):
            object.__setattr__(self, "device", get_preset(self.device))
        d = tuple(float(x) for x in self.distances)
        object.__setattr__(self, "distances", d)
        if not d:
            raise ValueError("distance grid is empty")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("distance grid must be strictly increasing")
        if d[0] < 0:
            raise ValueError("distances must be non-negative")
        lo, hi = self.alpha_bounds
        if not (0 < lo < hi):
            raise ValueError(f"invalid alpha search interval {self.alpha_bounds!r}")

    def params_at(self, distance: float, alpha_a: float = 0.0) -> ScenarioParams:
        dev = self.device
        return ScenarioParams(
            scheme=self.scheme,
            detector=DetectorModel(dev.p_dark, dev.eta_det),
            link=LinkModel.from_total(distance, self.placement, dev.xi),
            modulator=self.modulator,
            e_ali=dev.e_ali,
            f_ec=dev.f_ec,
            alpha_a=alpha_a,
            flaw_variant=self.flaw_variant,
            converter=self.converter,
        )


def point_at(spec: SweepSpec, distance: float) -> KeyRatePoint:
    """Optimized (or fixed-intensity) point of ``spec`` at one distance."""
    if spec.fixed_alpha is not None:
        return evaluate_point(spec.params_at(distance, spec.fixed_alpha))
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return optimize_alpha(spec.params_at(distance), spec.alpha_bounds, spec.n_grid)[1]


def sweep(spec: SweepSpec, workers: int | None = None) -> list[KeyRatePoint]:
    """One point per grid distance, in grid order.

    Points are independent, so ``workers > 1`` evaluates them in a process
    pool; the output is identical either way.
    """
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point_at, [spec] * len(spec.distances), spec.distances))
    return [point_at(spec, d) for d in spec.distances]


def cutoff_distance(
    spec: SweepSpec,
    points: Sequence[KeyRatePoint] | None = None,
    resolution: float = 0.1,
    max_distance: float = 2000.0,
) -> float:
    """Largest distance with a positive key rate, to within ``resolution`` km.

    Starts from the last positive grid point and bisects towards the next
    grid distance (or, past the end of the grid, a bracket found by doubling
    the step).  The returned distance always has a positive rate.
    """
    if points is None:
        points = sweep(spec)
    positive = [i for i, pt in enumerate(points) if pt.key_rate > 0]
    if not positive:
        raise NoPositiveRateError("no distance in the sweep has a positive key rate")
    i = positive[-1]
    grid = spec.distances
    lo = grid[i]

    def alive(d: float) -> bool:
        return point_at(spec, d).key_rate > 0

    if i + 1 < len(grid):
        hi = grid[i + 1]
    else:
        step = grid[-1] - grid[-2] if len(grid) > 1 else 1.0
        hi = lo + step
        while alive(hi):
            if hi >= max_distance:
                warnings.warn(f"key rate still positive at {hi:g} km", RuntimeWarning, stacklevel=2)
                return hi
            lo, step = hi, 2 * step
            hi = min(lo + step, max_distance)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if alive(mid):
            lo = mid
        else:
            hi = mid
    return lo
