"""State families and their normalizations.

Two unit systems coexist, matching how the problem is usually set up:

* Gaussian superpositions and plane-wave pairs live in ordinary units with
  hbar = m = 1 (free evolution phase exp(-i p^2 t / 2)).  Packets start
  centered at the origin; position offsets are absorbed into the momentum
  boost convention.
* The Fresnel-based "guess" states and grid eigenstates live in the
  rescaled momentum variable u of the dimensionless flux problem, where
  the evolution phase is exp(-i u^2 t) and the flux window is t in [-1, 1].

All momentum amplitudes vanish for u < 0 by construction (positive-momentum
sector); evaluation at u < 0 raises ValueError.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .specfun import fresnel_c, fresnel_s

if TYPE_CHECKING:  # pragma: no cover
    from .kernel import QuadratureGrid

SQRT_PI = np.sqrt(np.pi)

#: Regulator used in the published current plots.
DEFAULT_EPSILON = 1e-7


@dataclass(frozen=True)
class PlaneWavePair:
    """Superposition of two plane waves A1 e^{i p1 x} + A2 e^{i p2 x}."""

    p1: float
    p2: float
    A1: float
    A2: float

    def __post_init__(self):
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError("plane-wave momenta must be positive")


@dataclass(frozen=True)
class GaussianSuperposition:
    """Two gaussian packets of equal spatial width sigma, centered at x = 0."""

    p1: float
    p2: float
    sigma: float
    A1: float
    A2: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("gaussian width sigma must be positive")
        if norm_gaussian(self) <= 0:
            raise ValueError("state has vanishing norm")


@dataclass(frozen=True)
class Guess1State:
    """phi_1(u) = N [ (1/2 - C(u)) + a (1/2 - S(u)) ].

    Asymptotically N/sqrt(2 pi) * [-sin(u^2) + a cos(u^2)]/u, the tail shape
    of the numerically computed maximal-backflow state.
    """

    a: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1e-3:
            raise ValueError("regulator epsilon must lie in (0, 1e-3]")
        norm_guess1(self.a)  # raises if the printed norm is not positive

    @property
    def norm(self) -> float:
        return norm_guess1(self.a)


@dataclass(frozen=True)
class Guess2State:
    """phi_2(u) = N [ a e^{-b u} + (1/2 - C(u)) ]."""

    a: float
    b: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("decay rate b must be positive")
        if not 0.0 < self.epsilon <= 1e-3:
            raise ValueError("regulator epsilon must lie in (0, 1e-3]")
        norm_guess2(self.a, self.b)

    @property
    def norm(self) -> float:
        return norm_guess2(self.a, self.b)


@dataclass(frozen=True)
class GridMomentumState:
    """Real amplitude samples phi(u_i) on a quadrature grid, unit norm."""

    grid: "QuadratureGrid"
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid nodes")
        nrm = float(np.sum(self.grid.weights * vals**2))
        if abs(nrm - 1.0) > 1e-8:
            raise ValueError(f"grid state norm^2 = {nrm!r}, expected 1 within 1e-8")


def norm_guess1(a: float) -> float:
    """Normalization N for the first guess state.

    N^-2 = (1/(4 sqrt(pi))) (1 + a^2 + 2 a (1+a) (sqrt(2)-1)).
    """
    n2inv = (1.0 + a * a + 2.0 * a * (1.0 + a) * (np.sqrt(2.0) - 1.0)) / (4.0 * SQRT_PI)
    if n2inv <= 0.0:
        raise ValueError(f"norm^-2 = {n2inv} is not positive for a = {a}")
    return 1.0 / np.sqrt(n2inv)


def norm_guess2(a: float, b: float) -> float:
    """Normalization N for the second guess state.

    Uses the Laplace transform of the Fresnel cosine integral,

        int_0^inf e^{-b u} C(u) du
            = (1/b) [ (1/2 - S(b/2)) cos(b^2/4) - (1/2 - C(b/2)) sin(b^2/4) ],

    so N^-2 = a^2/(2b) + 1/(4 sqrt(pi)) + a/b
              - (2a/b) [ (1/2 - S(b/2)) cos(b^2/4) - (1/2 - C(b/2)) sin(b^2/4) ].
    """
    if b <= 0.0:
        raise ValueError("decay rate b must be positive")
    half = b / 2.0
    lap = (0.5 - fresnel_s(half)) * np.cos(b * b / 4.0) - (
        0.5 - fresnel_c(half)
    ) * np.sin(b * b / 4.0)
    n2inv = a * a / (2.0 * b) + 1.0 / (4.0 * SQRT_PI) + a / b - (2.0 * a / b) * lap
    if n2inv <= 0.0:
        raise ValueError(f"norm^-2 = {n2inv} is not positive for a = {a}, b = {b}")
    return 1.0 / np.sqrt(n2inv)


def eval_phi(state, u):
    """Normalized momentum amplitude phi(u) for u >= 0.

    Guess states evaluate their closed forms; grid states interpolate
    linearly between nodes (zero outside the grid support).
    """
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("eval_phi requires finite u")
    if np.any(arr < 0.0):
        raise ValueError("amplitudes are supported on u >= 0")
    if isinstance(state, Guess1State):
        n = state.norm
        out = n * ((0.5 - fresnel_c(arr)) + state.a * (0.5 - fresnel_s(arr)))
    elif isinstance(state, Guess2State):
        n = state.norm
        out = n * (state.a * np.exp(-state.b * arr) + (0.5 - fresnel_c(arr)))
    elif isinstance(state, GridMomentumState):
        out = np.interp(arr, state.grid.nodes, state.values, left=0.0, right=0.0)
    else:
        raise TypeError(f"no momentum amplitude for {type(state).__name__}")
    return out if np.ndim(u) else float(out)


def negative_momentum_probability(state: GaussianSuperposition, component: int) -> float:
    """Probability mass of one momentum-space gaussian on p < 0.

    The momentum density of packet k is proportional to
    exp(-2 sigma^2 (p - p_k)^2), so the mass below zero is
    erfc(sqrt(2) sigma p_k) / 2.  Order-of-magnitude estimator used to rule
    out negative-momentum contamination as the source of backflow.
    """
    from scipy.special import erfc

    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    p = state.p1 if component == 1 else state.p2
    return 0.5 * float(erfc(np.sqrt(2.0) * state.sigma * p))


def norm_gaussian(state: GaussianSuperposition) -> float:
    """Global norm of the two-packet state at t = 0 (cross term included)."""
    s, a1, a2 = state.sigma, state.A1, state.A2
    cross = 2.0 * a1 * a2 * np.exp(-s * s * (state.p1 - state.p2) ** 2 / 2.0)
    n2 = np.sqrt(2.0 * np.pi) / (4.0 * s) * (a1 * a1 + a2 * a2 + cross)
    return float(np.sqrt(n2)) if n2 > 0 else 0.0


def _gaussian_parts(state: GaussianSuperposition, x, t):
    """Per-packet values and x-derivatives of the freely evolved packets.

    Broadcasts over x and t.
    """
    d = 4.0 * state.sigma**2 + 2.0j * np.asarray(t)
    vals = []
    grads = []
    for amp, p in ((state.A1, state.p1), (state.A2, state.p2)):
        w = amp * d**-0.5 * np.exp(1j * p * x - 0.5j * p * p * t - (x - p * t) ** 2 / d)
        vals.append(w)
        grads.append((1j * p - 2.0 * (x - p * t) / d) * w)
    return vals, grads


def position_wavefunction(state: GaussianSuperposition, x, t):
    """Normalized psi(x, t) of the gaussian superposition (hbar = m = 1).

    Each packet carries the spreading prefactor (4 sigma^2 + 2 i t)^{-1/2}
    and the free phase exp(i p_k x - i p_k^2 t / 2); the sum is divided by
    the global t = 0 norm so that int |psi|^2 dx = 1 for all t.
    """
    vals, _ = _gaussian_parts(state, np.asarray(x, dtype=float), t)
    out = (vals[0] + vals[1]) / norm_gaussian(state)
    return out if (np.ndim(x) or np.ndim(t)) else complex(out)


def gaussian_derivative(state: GaussianSuperposition, x, t):
    """d psi / dx of the normalized superposition (hand-assembled, no FD)."""
    _, grads = _gaussian_parts(state, np.asarray(x, dtype=float), t)
    out = (grads[0] + grads[1]) / norm_gaussian(state)
    return out if (np.ndim(x) or np.ndim(t)) else complex(out)


# -- JSON configuration ------------------------------------------------------

#: Parameter sets of the two published gaussian-superposition examples.
PRESETS = {
    "paper-gauss-A": dict(family="gauss2", p1=0.5, p2=2.0, sigma=10.0, A1=1.7, A2=1.0),
    "paper-gauss-B": dict(family="gauss2", p1=0.3, p2=1.4, sigma=10.0, A1=1.8, A2=1.0),
}

_FAMILY_FIELDS = {
    "planewaves": ("p1", "p2", "A1", "A2"),
    "gauss2": ("p1", "p2", "sigma", "A1", "A2"),
    "guess1": ("a", "epsilon"),
    "guess2": ("a", "b", "epsilon"),
    "grid": ("n", "u_max", "scheme", "values"),
}


def state_to_config(state) -> dict:
    """Serialize a state to a plain JSON-compatible dict."""
    if isinstance(state, PlaneWavePair):
        return dict(family="planewaves", p1=state.p1, p2=state.p2, A1=state.A1, A2=state.A2)
    if isinstance(state, GaussianSuperposition):
        return dict(
            family="gauss2", p1=state.p1, p2=state.p2, sigma=state.sigma,
            A1=state.A1, A2=state.A2,
        )
    if isinstance(state, Guess1State):
        return dict(family="guess1", a=state.a, epsilon=state.epsilon)
    if isinstance(state, Guess2State):
        return dict(family="guess2", a=state.a, b=state.b, epsilon=state.epsilon)
    if isinstance(state, GridMomentumState):
        g = state.grid
        return dict(
            family="grid", n=len(g.nodes), u_max=g.u_max, scheme=g.scheme,
            values=[float(v) for v in state.values],
        )
    raise TypeError(f"cannot serialize {type(state).__name__}")


def state_from_config(config: dict):
    """Build a state from a config dict (inverse of state_to_config).

    A config of the form {"preset": "paper-gauss-B"} resolves to one of the
    bundled parameter sets in PRESETS.
    """
    cfg = dict(config)
    preset = cfg.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        merged = dict(PRESETS[preset])
        merged.update(cfg)
        cfg = merged
    family = cfg.pop("family", None)
    if family not in _FAMILY_FIELDS:
        raise ValueError(f"unknown state family {family!r}")
    allowed = set(_FAMILY_FIELDS[family])
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown keys for family {family!r}: {sorted(unknown)}")
    if family == "planewaves":
        return PlaneWavePair(**cfg)
    if family == "gauss2":
        return GaussianSuperposition(**cfg)
    if family == "guess1":
        return Guess1State(**cfg)
    if family == "guess2":
        return Guess2State(**cfg)
    # grid family
    from .kernel import build_grid

    grid = build_grid(int(cfg["n"]), float(cfg["u_max"]), cfg.get("scheme", "gauss-legendre"))
    return GridMomentumState(grid, np.asarray(cfg["values"], dtype=float))
