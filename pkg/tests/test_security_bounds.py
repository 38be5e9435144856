import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import bisect_phase_error
from phasemdi.quantum_states import (
    DELTA0,
    GramMixture,
    ModulatorModel,
    PreparedStates,
    fidelity_gram,
    qubit_fidelity_scheme2,
)
from phasemdi.security_bounds import (
    FlawVariant,
    binary_entropy,
    coin_overlap_terms,
    coin_overlap_value,
    delta_ini_actual_states,
    delta_ini_erratum,
    delta_ini_scheme1_original,
    invert_phase_error_bound,
    key_rate_scheme1,
    key_rate_scheme2,
    max_coin_overlap,
    worst_case_delta,
)

unit = st.floats(0.0, 1.0)


class TestBinaryEntropy:
    def test_endpoints_and_midpoint(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_against_mpmath(self):
        for x in (0.11, 1e-9, 0.033, 0.49):
            ref = -(x * mpmath.log(x, 2) + (1 - x) * mpmath.log(1 - x, 2))
            assert binary_entropy(x) == pytest.approx(float(ref), rel=1e-13)

    @given(unit)
    def test_symmetry(self, x):
        assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-14)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.5)


class TestDeltaIniOriginal:
    @pytest.mark.parametrize("a, b", [(1e-8, 1e-8), (1e-4, 3e-4), (0.01, 0.02), (0.3, 0.1), (1.2, 0.7)])
    def test_against_mpmath(self, a, b):
        with mpmath.workdps(40):
            def f(x):
                x = mpmath.mpf(x)
                return mpmath.exp(-x) * (mpmath.cos(x) + mpmath.sin(x))

            ref = (1 - f(a) * f(b)) / 2
        assert delta_ini_scheme1_original(a, b) == pytest.approx(float(ref), rel=1e-12)

    def test_equals_fidelity_form(self):
        from phasemdi.quantum_states import actual_state_family

        m = ModulatorModel.ideal()
        for a, b in [(0.05, 0.2), (0.4, 0.4)]:
            fa = fidelity_gram(actual_state_family(a, m, "X"), actual_state_family(a, m, "Y"))
            fb = fidelity_gram(actual_state_family(b, m, "X"), actual_state_family(b, m, "Y"))
            assert delta_ini_scheme1_original(a, b) == pytest.approx(
                delta_ini_actual_states(fa, fb), abs=1e-12
            )

    def test_monotone_on_half_unit_interval(self):
        xs = np.linspace(0, 0.5, 501)
        vals = [delta_ini_scheme1_original(x, x) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_zero_intensity(self):
        assert delta_ini_scheme1_original(0.0, 0.0) == 0.0

    def test_negative(self):
        with pytest.raises(ValueError):
            delta_ini_scheme1_original(-1e-3, 0.1)


class TestDeltaIniActualStates:
    def test_formula(self):
        assert delta_ini_actual_states(0.9, 0.8) == pytest.approx(0.5 * (1 - 0.72))

    def test_bounds(self):
        assert delta_ini_actual_states(1.0, 1.0) == 0.0
        assert delta_ini_actual_states(0.0, 0.3) == 0.5

    def test_rejects_bad_fidelity(self):
        with pytest.raises(ValueError):
            delta_ini_actual_states(1.1, 0.5)


def _grid_max(c, h=0.01):
    """Brute-force maximum of Re(e^{i theta} <Psi_Y|Psi_X>) on an h-spaced lattice."""
    grid = np.arange(0.0, 2 * np.pi, h)
    e_theta = np.exp(1j * grid)
    best = -np.inf
    for xi_y in grid:
        ey = np.exp(-1j * xi_y)
        ex = np.exp(1j * grid)
        z = (c[0, 0] + c[0, 1] * ex + c[1, 0] * ey + c[1, 1] * ex * ey) / 2
        vals = np.real(np.outer(e_theta, z))
        best = max(best, float(vals.max()))
    return best


def _grid_error_bound(c, h=0.01):
    # smooth function of three phases, each within h/2 of a lattice point;
    # second derivatives are bounded by sum|c| times 3^2 / 2
    return 0.5 * (np.abs(c).sum() / 2) * 9 * 3 * (h / 2) ** 2


class TestErratum:
    @pytest.mark.parametrize(
        "states",
        [
            PreparedStates.single_photon(ModulatorModel.from_phase_error(DELTA0)),
            PreparedStates.single_photon(ModulatorModel.from_phase_error(0.4)),
            PreparedStates.coherent(0.05, ModulatorModel.from_phase_error(DELTA0)),
            PreparedStates.coherent(0.3, ModulatorModel.ideal()),
        ],
    )
    def test_matches_grid_search(self, states):
        c = coin_overlap_terms(states)
        exact = max_coin_overlap(states)
        grid = _grid_max(c)
        assert grid <= exact + 1e-12
        assert exact - grid <= _grid_error_bound(c)

    def test_coin_overlap_value_consistent(self):
        states = PreparedStates.single_photon(ModulatorModel.from_phase_error(0.3))
        c = coin_overlap_terms(states)
        rng = np.random.default_rng(5)
        for theta, xx, xy in rng.uniform(0, 2 * np.pi, size=(20, 3)):
            assert coin_overlap_value(c, theta, xx, xy) <= max_coin_overlap(states) + 1e-12

    def test_ideal_conjugate_states_give_zero(self):
        s = PreparedStates.single_photon(ModulatorModel.ideal())
        assert delta_ini_erratum(s, s) == pytest.approx(0.0, abs=1e-12)

    def test_identical_states_give_zero(self):
        # every emitted state the same (vacuum): nothing to distinguish
        s = PreparedStates.coherent(0.0, ModulatorModel.from_phase_error(0.2))
        assert delta_ini_erratum(s, s) == pytest.approx(0.0, abs=1e-12)

    def test_equal_bit_families_are_not_free(self):
        # X and Y coinciding bit by bit is not a conjugate-basis structure,
        # so the virtual-qubit overlap stays below one
        v0 = np.array([1, 0], dtype=complex)
        v1 = np.array([0, 1], dtype=complex)
        s = PreparedStates(v0, v1, v0, v1)
        assert max_coin_overlap(s) < 1 - 1e-3
        assert 0 < delta_ini_erratum(s, s) <= 0.5

    def test_scheme1_ideal_reduces_to_original(self):
        for a, b in [(1e-3, 2e-3), (0.05, 0.01), (0.2, 0.2)]:
            got = delta_ini_erratum(
                PreparedStates.coherent(a, ModulatorModel.ideal()),
                PreparedStates.coherent(b, ModulatorModel.ideal()),
            )
            assert got == pytest.approx(delta_ini_scheme1_original(a, b), rel=1e-8, abs=1e-14)

    @given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.3))
    def test_bounded_and_symmetric(self, a, b, d):
        m = ModulatorModel.from_phase_error(d)
        sa, sb = PreparedStates.coherent(a, m), PreparedStates.coherent(b, m)
        v = delta_ini_erratum(sa, sb)
        assert 0 <= v <= 0.5
        assert v == pytest.approx(delta_ini_erratum(sb, sa), abs=1e-13)

    def test_scheme2_grows_with_delta(self):
        vals = [
            delta_ini_erratum(*(PreparedStates.single_photon(ModulatorModel.from_phase_error(DELTA0 / k)),) * 2)
            for k in (50, 20, 10, 7)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_flaw_variant_values(self):
        assert FlawVariant("erratum") is FlawVariant.ERRATUM
        assert FlawVariant("original") is FlawVariant.ORIGINAL


class TestWorstCase:
    def test_scaling_and_cap(self):
        assert worst_case_delta(1e-3, 0.1) == pytest.approx(1e-2)
        assert worst_case_delta(0.2, 0.1) == 0.5

    def test_zero_fraction(self):
        with pytest.raises(ZeroDivisionError):
            worst_case_delta(1e-3, 0.0)

    def test_negative(self):
        with pytest.raises(ValueError):
            worst_case_delta(-1e-3, 0.5)


class TestInvertPhaseErrorBound:
    # the bisection oracle loses accuracy where the constraint is tangent
    # (cap -> 0), so its comparison starts at 1e-6
    @given(st.floats(1e-6, 0.5), st.floats(0, 0.5))
    def test_matches_bisection(self, cap, dy):
        assert invert_phase_error_bound(cap, dy) == pytest.approx(bisect_phase_error(cap, dy), abs=1e-10)

    @given(st.floats(0, 0.5), st.floats(0, 0.5))
    def test_equality_residual(self, cap, dy):
        dyp = invert_phase_error_bound(cap, dy)
        assume(dyp < 1.0)
        lhs = math.sqrt(dy * dyp) + math.sqrt((1 - dy) * (1 - dyp))
        assert abs(lhs - (1 - 2 * cap)) < 1e-10

    @given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5))
    def test_monotone(self, c1, c2, dy):
        lo, hi = sorted((c1, c2))
        assert invert_phase_error_bound(lo, dy) <= invert_phase_error_bound(hi, dy) + 1e-15
        assert invert_phase_error_bound(dy, lo) <= invert_phase_error_bound(dy, hi) + 1e-15

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_at_least_delta_y(self, cap, dy):
        assert invert_phase_error_bound(cap, dy) >= dy

    def test_no_flaw(self):
        assert invert_phase_error_bound(0.0, 0.03) == pytest.approx(0.03, abs=1e-15)

    def test_saturated(self):
        assert invert_phase_error_bound(0.5, 0.01) == 1.0
        assert invert_phase_error_bound(0.45, 0.02) == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            invert_phase_error_bound(-0.1, 0.1)
        with pytest.raises(ValueError):
            invert_phase_error_bound(0.1, 1.1)


class TestKeyRates:
    def test_scheme1_formula(self):
        g = key_rate_scheme1(0.01, 0.02, 0.05, 1.22)
        ref = 0.01 * (1 - 1.22 * binary_entropy(0.02) - binary_entropy(0.05))
        assert g == pytest.approx(ref)

    def test_scheme1_clamp(self):
        assert key_rate_scheme1(0.01, 0.2, 0.3) == 0.0
        assert key_rate_scheme1(0.01, 0.2, 0.3, clamp=False) < 0

    def test_scheme1_phase_error_above_half(self):
        # h is evaluated at min(dy', 1/2)
        assert key_rate_scheme1(0.01, 0.0, 0.9, clamp=False) == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(0, 0.11), st.floats(0, 0.11), st.floats(0, 0.3))
    def test_scheme1_monotone(self, a, b, dyp):
        lo, hi = sorted((a, b))
        g_lo = key_rate_scheme1(0.01, lo, dyp, clamp=False)
        g_hi = key_rate_scheme1(0.01, hi, dyp, clamp=False)
        assert g_hi <= g_lo + 1e-18
        g_lo = key_rate_scheme1(0.01, dyp / 3, lo, clamp=False)
        g_hi = key_rate_scheme1(0.01, dyp / 3, hi, clamp=False)
        assert g_hi <= g_lo + 1e-18

    def test_scheme2_formula(self):
        g = key_rate_scheme2(1e-4, 0.05, 1e-3, 0.01, clamp=False)
        ref = 1e-4 * (1 - binary_entropy(0.05)) - 1.22 * 1e-3 * binary_entropy(0.01)
        assert g == pytest.approx(ref)

    def test_scheme2_gain_ordering(self):
        with pytest.raises(ValueError):
            key_rate_scheme2(1e-3, 0.05, 1e-4, 0.01)

    def test_f_ec_below_one(self):
        with pytest.raises(ValueError):
            key_rate_scheme1(0.01, 0.02, 0.05, f_ec=0.9)
        with pytest.raises(ValueError):
            key_rate_scheme2(1e-4, 0.05, 1e-3, 0.01, f_ec=0.5)


def test_delta0_for_reference_extinction():
    m = ModulatorModel.from_extinction_ratio(1e-3)
    assert m.delta == pytest.approx(0.06321, abs=1e-4)
    assert m.delta == pytest.approx(2 * math.atan(math.sqrt(1e-3)), abs=1e-5)


def test_scheme2_original_uses_qubit_fidelity():
    m = ModulatorModel.from_phase_error(DELTA0 / 10)
    f = qubit_fidelity_scheme2(m)
    s = PreparedStates.single_photon(m)
    assert s.basis_fidelity() == pytest.approx(f, abs=1e-14)
    assert delta_ini_actual_states(f, f) == pytest.approx(0.5 * (1 - f * f))


def test_gram_fidelity_pure_limit():
    g = GramMixture((0.1,), (1.0,))
    assert fidelity_gram(g, g) == pytest.approx(1.0)
