"""Real and complex special functions used by the closed-form currents.

Conventions
-----------
Fresnel integrals are normalized so that

    C(u) = sqrt(2/pi) * int_0^u cos(x^2) dx,
    S(u) = sqrt(2/pi) * int_0^u sin(x^2) dx,

both tending to 1/2 as u -> inf.  This differs from the textbook
convention C~(z) = int_0^z cos(pi s^2/2) ds by the rescaling
C(u) = C~(sqrt(2/pi) u).

All multivalued functions (sqrt, arctan, arctanh) are principal-branch:
sqrt has nonnegative real part with a cut on (-inf, 0); arctan has cuts on
the imaginary axis outside (-i, i); arctanh has cuts on the real axis
outside (-1, 1).  Callers evaluating near a cut must supply arguments
displaced off it (the closed-form currents do this through their
regulator epsilon); an argument exactly on a cut raises ValueError.

Complex values are represented by the builtin ``complex`` type (numpy
complex128 for arrays).
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def _check_nonneg(u, name):
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} requires finite input")
    if np.any(arr < 0.0):
        raise ValueError(f"{name} requires u >= 0 (amplitudes live on positive momenta)")
    return arr


def fresnel_c(u):
    """Fresnel cosine integral C(u) = sqrt(2/pi) int_0^u cos(x^2) dx.

    Accepts scalars or arrays, u >= 0.  C(0) = 0 and C(u) -> 1/2.
    """
    arr = _check_nonneg(u, "fresnel_c")
    _, c = _sp.fresnel(_SQRT_2_OVER_PI * arr)
    return c if isinstance(c, np.ndarray) and np.ndim(u) else float(c)


def fresnel_s(u):
    """Fresnel sine integral S(u) = sqrt(2/pi) int_0^u sin(x^2) dx."""
    arr = _check_nonneg(u, "fresnel_s")
    s, _ = _sp.fresnel(_SQRT_2_OVER_PI * arr)
    return s if isinstance(s, np.ndarray) and np.ndim(u) else float(s)


def _check_finite_complex(z, name):
    zc = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(zc)):
        raise ValueError(f"{name} requires finite input")
    return zc


def erfc_complex(z):
    """Complementary error function on the complex plane.

    Entire function; backed by the Faddeeva-function implementation in
    scipy.special, accurate to well over 10 significant digits for
    |z| <= 30 wherever the value is representable in double precision
    (|erfc| grows like exp(Im(z)^2), so deep in the upper/lower disc the
    scaled variant erfcx_complex must be used instead).  Validated against
    an independent arbitrary-precision oracle in the test suite.
    """
    zc = _check_finite_complex(z, "erfc_complex")
    out = _sp.erfc(zc)
    return out if np.ndim(z) else complex(out)


def erfcx_complex(z):
    """Scaled complementary error function exp(z^2) erfc(z).

    The closed-form currents contain products exp(b^2/(4 alpha))
    erfc(b/(2 sqrt(alpha))) whose factors overflow/underflow separately as
    alpha -> 0; since z^2 = b^2/(4 alpha) exactly, the product is erfcx(z)
    and stays finite whenever Re z >= 0.
    """
    zc = _check_finite_complex(z, "erfcx_complex")
    out = _sp.erfcx(zc)
    return out if np.ndim(z) else complex(out)


def sqrt_principal(z):
    """Principal square root, Re sqrt(z) >= 0, cut on the negative real axis.

    Raises ValueError for arguments exactly on the cut (negative real z);
    displace by +-i*epsilon to select a side.  Accepts arrays.
    """
    zc = _check_finite_complex(z, "sqrt_principal")
    if np.any((zc.imag == 0.0) & (zc.real < 0.0)):
        raise ValueError("sqrt_principal: argument on the branch cut (-inf, 0)")
    out = np.sqrt(zc)
    return out if np.ndim(z) else complex(out)


def arctan_complex(z):
    """Principal arctan, cuts on the imaginary axis for |Im z| >= 1."""
    zc = _check_finite_complex(z, "arctan_complex")
    if np.any((zc.real == 0.0) & (np.abs(zc.imag) >= 1.0)):
        raise ValueError("arctan_complex: argument on the branch cut |Im z| >= 1")
    out = np.arctan(zc)
    return out if np.ndim(z) else complex(out)


def arctanh_complex(z):
    """Principal arctanh, cuts on the real axis for |Re z| >= 1."""
    zc = _check_finite_complex(z, "arctanh_complex")
    if np.any((zc.imag == 0.0) & (np.abs(zc.real) >= 1.0)):
        raise ValueError("arctanh_complex: argument on the branch cut |Re z| >= 1")
    out = np.arctanh(zc)
    return out if np.ndim(z) else complex(out)
