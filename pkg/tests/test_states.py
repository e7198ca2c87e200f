"""State normalizations against quadrature oracles, evaluation, serialization."""

import numpy as np
import pytest
from scipy.integrate import quad, simpson

from backflow.states import (
    PRESETS,
    GaussianSuperposition,
    GridMomentumState,
    Guess1State,
    Guess2State,
    PlaneWavePair,
    eval_phi,
    negative_momentum_probability,
    norm_gaussian,
    norm_guess1,
    norm_guess2,
    position_wavefunction,
    state_from_config,
    state_to_config,
)


def norm2_oracle(phi, tail_mean, u_hi=240.0, n=1_200_001):
    """Simpson integral of phi(u)^2 plus the mean of the oscillatory tail.

    The amplitudes fall off like trig(u^2)/(sqrt(2 pi) u); averaging the
    trig^2 factor gives the tail integral tail_mean/(2 pi u_hi) + O(u_hi^-3).
    """
    u = np.linspace(0.0, u_hi, n)
    return float(simpson(phi(u) ** 2, x=u)) + tail_mean / (2.0 * np.pi * u_hi)


def test_norm_guess1_special_value():
    assert abs(norm_guess1(0.0) - 2.0 * np.pi**0.25) < 1e-14


def test_norm_guess1_closed_form_arithmetic():
    a = 0.4
    n2inv = (1 + a**2 + 2 * a * (1 + a) * (np.sqrt(2) - 1)) / (4 * np.sqrt(np.pi))
    assert abs(norm_guess1(a) - n2inv**-0.5) < 1e-14


@pytest.mark.parametrize("a", [0.0, 0.4, -0.3])
def test_norm_guess1_against_quadrature(a):
    state = Guess1State(a=a)
    phi = lambda u: eval_phi(state, u)
    # unit norm: integral of the normalized amplitude squared
    total = norm2_oracle(phi, (1 + a * a) / 2 * state.norm**2)
    assert abs(total - 1.0) < 1e-6


def test_norm_guess2_special_value():
    # a = 0 leaves only the Fresnel term, same normalization as guess 1 at a = 0
    assert abs(norm_guess2(0.0, 2.8) - 2.0 * np.pi**0.25) < 1e-14


@pytest.mark.parametrize("a,b", [(0.6, 2.8), (0.2, 1.5), (-0.3, 4.0)])
def test_norm_guess2_against_quadrature(a, b):
    state = Guess2State(a=a, b=b)
    phi = lambda u: eval_phi(state, u)
    total = norm2_oracle(phi, 0.5 * state.norm**2)
    assert abs(total - 1.0) < 1e-6


def test_guess2_requires_positive_decay():
    with pytest.raises(ValueError):
        Guess2State(a=0.5, b=-1.0)
    with pytest.raises(ValueError):
        Guess2State(a=0.5, b=2.0, epsilon=0.0)


def test_eval_phi_values_at_origin():
    g2 = Guess2State(a=0.6, b=2.8)
    assert abs(eval_phi(g2, 0.0) - g2.norm * 1.1) < 1e-14
    g1 = Guess1State(a=0.0)
    assert abs(eval_phi(g1, 0.0) - g1.norm / 2.0) < 1e-14


@pytest.mark.parametrize("u", [20.0, 30.0])
def test_eval_phi_asymptotic_form(u):
    # phi_1 ~ N [-sin(u^2) + a cos(u^2)] / (sqrt(2 pi) u) + O(1/u^3)
    g1 = Guess1State(a=0.4)
    tail = g1.norm * (-np.sin(u * u) + 0.4 * np.cos(u * u)) / np.sqrt(2 * np.pi)
    assert abs(eval_phi(g1, u) * u - tail) < 5e-3
    g2 = Guess2State(a=0.6, b=2.8)
    tail2 = -g2.norm * np.sin(u * u) / np.sqrt(2 * np.pi)
    assert abs(eval_phi(g2, u) * u - tail2) < 5e-3


def test_eval_phi_rejects_negative_momenta():
    with pytest.raises(ValueError):
        eval_phi(Guess1State(a=0.4), -1.0)


def test_negative_momentum_probability():
    state = state_from_config({"preset": "paper-gauss-B"})
    p = negative_momentum_probability(state, 1)
    assert 1e-11 < p < 1e-8  # ~1e-10 contamination, far below the backflow
    # quadrature oracle on the normalized momentum density of packet 1
    dens = lambda q: np.exp(-2 * state.sigma**2 * (q - state.p1) ** 2)
    num = quad(dens, -np.inf, 0.0)[0]
    den = quad(dens, -np.inf, np.inf)[0]
    assert abs(p - num / den) < 1e-12
    with pytest.raises(ValueError):
        negative_momentum_probability(state, 3)


def test_single_packet_density_shape():
    s = GaussianSuperposition(p1=1.0, p2=2.0, sigma=1.5, A1=1.0, A2=0.0)
    x = np.linspace(-3.0, 3.0, 7)
    dens = np.abs(position_wavefunction(s, x, 0.0)) ** 2
    ref = np.exp(-(x**2) / (2.0 * s.sigma**2))
    ratio = dens / ref
    assert np.max(np.abs(ratio / ratio[0] - 1.0)) < 1e-12


@pytest.mark.parametrize("t", [0.0, 5.0])
def test_gaussian_norm_preserved(t):
    state = state_from_config({"preset": "paper-gauss-A"})
    sig_t = np.sqrt(state.sigma**2 + t * t / (4 * state.sigma**2))
    lo = min(0.0, state.p1 * t, state.p2 * t) - 14 * sig_t
    hi = max(0.0, state.p1 * t, state.p2 * t) + 14 * sig_t
    total = quad(
        lambda x: abs(position_wavefunction(state, x, t)) ** 2, lo, hi, limit=400
    )[0]
    assert abs(total - 1.0) < 1e-8


def test_gaussian_norm_closed_form():
    state = GaussianSuperposition(p1=0.4, p2=1.1, sigma=3.0, A1=1.3, A2=0.8)
    pref = (4.0 * state.sigma**2) ** -0.5  # packet prefactor at t = 0
    num = quad(
        lambda x: abs(
            pref * state.A1 * np.exp(1j * state.p1 * x - x * x / (4 * state.sigma**2))
            + pref * state.A2 * np.exp(1j * state.p2 * x - x * x / (4 * state.sigma**2))
        ) ** 2,
        -60.0,
        60.0,
        limit=400,
    )[0]
    assert abs(norm_gaussian(state) - np.sqrt(num)) < 1e-10


def test_invalid_parameters():
    with pytest.raises(ValueError):
        GaussianSuperposition(p1=0.3, p2=1.4, sigma=-1.0, A1=1.0, A2=1.0)
    with pytest.raises(ValueError):
        PlaneWavePair(p1=-0.1, p2=1.0, A1=1.0, A2=1.0)


def test_config_roundtrip():
    states = [
        PlaneWavePair(p1=0.1, p2=1.0, A1=2.0, A2=1.0),
        GaussianSuperposition(p1=0.3, p2=1.4, sigma=10.0, A1=1.8, A2=1.0),
        Guess1State(a=0.4),
        Guess2State(a=0.6, b=2.8),
    ]
    for s in states:
        assert state_from_config(state_to_config(s)) == s


def test_grid_state_roundtrip():
    from backflow.kernel import build_grid

    grid = build_grid(32, 5.0)
    vals = np.exp(-((grid.nodes - 2.0) ** 2))
    vals /= np.sqrt(np.sum(grid.weights * vals**2))
    state = GridMomentumState(grid, vals)
    back = state_from_config(state_to_config(state))
    assert np.allclose(back.values, state.values)
    assert np.allclose(back.grid.nodes, state.grid.nodes)


def test_grid_state_norm_enforced():
    from backflow.kernel import build_grid

    grid = build_grid(32, 5.0)
    with pytest.raises(ValueError):
        GridMomentumState(grid, np.ones_like(grid.nodes))


def test_presets_and_unknown_keys():
    b = state_from_config({"preset": "paper-gauss-B"})
    assert (b.p1, b.p2, b.sigma, b.A1, b.A2) == (0.3, 1.4, 10.0, 1.8, 1.0)
    assert set(PRESETS) == {"paper-gauss-A", "paper-gauss-B"}
    with pytest.raises(ValueError):
        state_from_config({"family": "gauss2", "p1": 1, "p2": 2, "sigma": 1,
                           "A1": 1, "A2": 1, "bogus": 3})
    with pytest.raises(ValueError):
        state_from_config({"preset": "paper-gauss-C"})
    with pytest.raises(ValueError):
        state_from_config({"family": "nope"})
