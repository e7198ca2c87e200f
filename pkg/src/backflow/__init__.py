"""Numerical laboratory for the quantum backflow effect.

A free particle prepared with purely positive momenta can nevertheless have
negative probability current at the origin, so that the probability of
remaining in x < 0 temporarily *increases*.  This package computes

* the spectrum of the discretized flux operator on the positive-momentum
  sector (sharp and measurement-smeared), including the dimensionless
  bound on total backflow (most negative eigenvalue, about -0.0385),
* closed-form currents J(t) and fluxes for gaussian superpositions and for
  two analytic momentum-space states built from Fresnel integrals and an
  exponential term,
* measurement models: exponential time-smearing of the current and its
  deconvolution, wavepacket propagation under a complex absorbing
  potential -i*V0*theta(x), sequential projective measurements, and
  left-probability curves P(t).

Submodules are imported lazily so that the command line front end can cap
BLAS threading before numpy is first loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "specfun",
    "states",
    "kernel",
    "currents",
    "fluxes",
    "measurement",
    "acceptance",
    "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
