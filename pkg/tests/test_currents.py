"""Closed-form currents against independent quadrature oracles."""

import numpy as np
import pytest
from scipy.integrate import quad, simpson

from backflow.currents import (
    bessel_t0_integrals,
    current_gaussian,
    current_guess1,
    current_guess2,
    current_plane_waves,
    current_t0_check,
    make_trace,
    u_factor_guess1,
    u_factor_guess2,
    v_factor_guess1,
    v_factor_guess2,
)
from backflow.errors import SingularTimeError
from backflow.states import (
    GaussianSuperposition,
    Guess1State,
    Guess2State,
    PlaneWavePair,
    eval_phi,
    state_from_config,
)

G1 = Guess1State(a=0.4)
G2 = Guess2State(a=0.6, b=2.8)


def uv_oracle(state, t, eps, v_hi=220.0, dv=5e-5):
    """Direct damped quadrature of the U and V integrals (heavy regulator).

    At eps = 1e-3 the integrand decays inside v ~ 200, so plain Simpson
    resolves it; the closed forms take the same eps, making the comparison
    sharp (the oracle shares no code with the factor formulas).
    """
    v = np.arange(0.0, v_hi, dv)
    phi = eval_phi(state, v) * np.exp(-eps * v * v)
    e = np.exp(1j * t * v * v)
    return simpson(phi * e, x=v), simpson(v * phi * np.conj(e), x=v)


# -- plane waves ----------------------------------------------------------------

def test_plane_wave_constant_and_extremes():
    s = PlaneWavePair(p1=0.5, p2=2.0, A1=1.3, A2=0.0)
    t = np.linspace(-5, 5, 11)
    assert np.allclose(current_plane_waves(t, s), 1.3**2 * 0.5)

    s = PlaneWavePair(p1=0.1, p2=1.0, A1=2.0, A2=1.0)
    t = np.linspace(0.0, 2 * np.pi / abs(0.005 - 0.5), 4001)
    j = current_plane_waves(t, s)
    jmax = (s.A1 * s.p1 + s.A2 * s.p2) * (s.A1 + s.A2)
    jmin = (s.A1 * s.p1 - s.A2 * s.p2) * (s.A1 - s.A2)
    assert abs(j.max() - jmax) < 1e-6
    assert abs(j.min() - jmin) < 1e-6
    assert abs(jmin - (-0.8)) < 1e-12  # A1 > A2 with A1 p1 < A2 p2: backflow


# -- gaussian superpositions ------------------------------------------------------

def test_single_packet_current_positive():
    s = GaussianSuperposition(p1=1.0, p2=2.0, sigma=5.0, A1=1.0, A2=0.0)
    assert current_gaussian(0.0, s) > 0.0


def test_preset_b_goes_negative_in_window():
    s = state_from_config({"preset": "paper-gauss-B"})
    t = np.linspace(2.0, 4.0, 201)
    assert current_gaussian(t, s).min() < 0.0


def test_gaussian_time_symmetry():
    s = state_from_config({"preset": "paper-gauss-A"})
    for t in (0.3, 1.7, 3.1):
        assert abs(current_gaussian(t, s) - current_gaussian(-t, s)) < 1e-14


def test_gaussian_current_matches_left_probability_derivative():
    from backflow.measurement import probability_left

    s = state_from_config({"preset": "paper-gauss-B"})
    h = 1e-3
    for t in (1.0, 3.0):
        dp = (probability_left(s, t + h) - probability_left(s, t - h)) / (2 * h)
        assert abs(dp + current_gaussian(t, s)) < 1e-6


# -- guess states ------------------------------------------------------------------

@pytest.mark.parametrize("t", [-0.8, -0.35, 0.2, 0.55, 0.9, 1.6, -2.1])
def test_guess1_factors_against_quadrature(t):
    state = Guess1State(a=0.4, epsilon=1e-3)
    u_ref, v_ref = uv_oracle(state, t, state.epsilon)
    assert abs(u_factor_guess1(t, state) - u_ref) < 1e-7
    assert abs(v_factor_guess1(t, state) - v_ref) < 1e-7


@pytest.mark.parametrize("t", [-0.8, 0.2, 0.55, 1.6])
def test_guess2_factors_against_quadrature(t):
    state = Guess2State(a=0.6, b=2.8, epsilon=1e-3)
    u_ref, v_ref = uv_oracle(state, t, state.epsilon)
    assert abs(u_factor_guess2(t, state) - u_ref) < 1e-7
    assert abs(v_factor_guess2(t, state) - v_ref) < 1e-7


def test_v_factor_z_integral_oracle():
    """The V factor also equals its intermediate single-integral form.

    V = N/(4 sqrt2) [(1 - i a) I- + (1 + i a) I+] with
    I-+ = int_1^inf (eps + i(t -+ z^2))^(-3/2) dz; valid as written for
    |t| < 1 where the integrand stays away from its near-singularity.
    """
    state = G1
    eps, a, n = state.epsilon, state.a, state.norm
    for t in (-0.7, 0.2, 0.5):
        beta = eps + 1j * t

        def part(sgn, kind):
            f = lambda z: getattr((beta - sgn * 1j * z * z) ** -1.5, kind)
            return quad(f, 1.0, np.inf, limit=400)[0]

        i_minus = part(+1, "real") + 1j * part(+1, "imag")
        i_plus = part(-1, "real") + 1j * part(-1, "imag")
        ref = n / (4 * np.sqrt(2)) * ((1 - 1j * a) * i_minus + (1 + 1j * a) * i_plus)
        assert abs(v_factor_guess1(t, state) - ref) < 1e-9


def test_guess1_t0_analytic_value():
    # U(0) = N a / sqrt(2 pi), V(0) = -N (1 - a)/8 in the eps -> 0 limit,
    # so J(0) = -N^2 a (1 - a) / (8 pi sqrt(2 pi))
    n, a = G1.norm, G1.a
    ref = -n * n * a * (1 - a) / (8 * np.pi * np.sqrt(2 * np.pi))
    assert abs(current_guess1(0.0, G1) - ref) < 1e-7


def test_guess_time_symmetry_exact():
    for t in (0.15, 0.6, 0.93, 1.4):
        assert abs(current_guess1(t, G1) - current_guess1(-t, G1)) < 1e-14
        assert abs(current_guess2(t, G2) - current_guess2(-t, G2)) < 1e-14


def test_factor_conjugation():
    for t in (0.25, 0.8):
        assert abs(u_factor_guess1(-t, G1) - np.conj(u_factor_guess1(t, G1))) < 1e-14
        assert abs(v_factor_guess2(-t, G2) - np.conj(v_factor_guess2(t, G2))) < 1e-14


def test_guess2_reduces_to_guess1_at_a_zero():
    g2 = Guess2State(a=0.0, b=2.8)
    g1 = Guess1State(a=0.0)
    for t in (-1.3, -0.4, 0.7):
        assert abs(current_guess2(t, g2) - current_guess1(t, g1)) < 1e-14


def test_guess_currents_negative_inside_window():
    assert current_guess1(0.0, G1) < 0.0
    assert current_guess2(0.0, G2) < 0.0
    assert current_guess1(0.7, G1) < 0.0 < current_guess1(0.8, G1)


def test_epsilon_stability():
    for t in (0.3, 0.82, 1.5):
        lo = current_guess1(t, Guess1State(a=0.4, epsilon=1e-8))
        hi = current_guess1(t, Guess1State(a=0.4, epsilon=1e-6))
        assert abs(lo - hi) < 1e-5
        lo2 = current_guess2(t, Guess2State(a=0.6, b=2.8, epsilon=1e-8))
        hi2 = current_guess2(t, Guess2State(a=0.6, b=2.8, epsilon=1e-6))
        assert abs(lo2 - hi2) < 1e-5


def test_singular_time_raises():
    with pytest.raises(SingularTimeError):
        current_guess1(1.0, G1)
    with pytest.raises(SingularTimeError):
        v_factor_guess2(-1.0, G2)


def test_trace_flags_singular_nodes():
    times = np.linspace(-2.0, 2.0, 5)  # hits -1 and 1 exactly
    trace = make_trace(G2, times)
    assert list(trace.excluded) == [False, True, False, True, False]
    assert np.isnan(trace.values[1]) and np.isfinite(trace.values[0])
    assert trace.state["family"] == "guess2"


# -- analytic t = 0 values ---------------------------------------------------------

def test_t0_tail_value():
    assert abs(current_t0_check() - np.sqrt(np.pi / 2.0) / 8.0) < 1e-6


def test_bessel_moments():
    m0, m1 = bessel_t0_integrals()
    assert abs(m0 - 0.5) < 1e-4
    assert abs(m1 - 1.04605) < 1e-4
    # positive current for that tail shape too: (1/pi) * m0 * m1 > 0
    assert m0 * m1 / np.pi > 0.0
